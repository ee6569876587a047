use serde::{Deserialize, Serialize};

use super::fourier::fourier_l1;
use super::quadrature::integrate_piecewise;
use super::{ClassTag, Envelope, ScalarFunction};
use crate::error::{Error, Result};

/// One membership condition and its numerical verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub description: String,
    /// Integral, bound or jump size backing the verdict (`inf` when divergent).
    pub value: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub function: String,
    pub tag: ClassTag,
    pub conditions: Vec<ConditionReport>,
    pub holds: bool,
}

/// Far-field radius used for functions with power-law decay.
const FAR: f64 = 1e3;

fn cond(description: String, value: f64, holds: bool) -> ConditionReport {
    ConditionReport {
        description,
        value,
        holds,
    }
}

/// `∫ |h|^q (1+|x|)^m dx` with a finiteness verdict from the support or the
/// decay envelope.
fn weighted_integral(h: &ScalarFunction, q: f64, m: f64) -> Result<(f64, bool)> {
    let integrand =
        |x: f64| h.value(x).map(|v| v.norm().powf(q)).unwrap_or(f64::NAN) * (1.0 + x.abs()).powf(m);
    let breaks = h.breakpoints();
    if let Some((lo, hi)) = h.effective_window() {
        if hi <= lo {
            return Ok((0.0, true));
        }
        let v = integrate_piecewise(integrand, lo, hi, &breaks, 1e-14, 1e-10).value;
        return Ok((v, v.is_finite()));
    }
    match h.envelope() {
        Some(Envelope::Power { power }) => {
            let decay = q * power - m;
            if decay <= 1.0 {
                return Ok((f64::INFINITY, false));
            }
            let mut pts: Vec<f64> =
                [-FAR, -100.0, -10.0, -1.0, 0.0, 1.0, 10.0, 100.0, FAR].to_vec();
            pts.extend(breaks.iter().filter(|b| b.abs() < FAR));
            let core = integrate_piecewise(integrand, -FAR, FAR, &pts, 1e-14, 1e-10).value;
            // tails ≈ |h(±R)|^q R^m · R/(decay − 1)
            let tail = (integrand(FAR) + integrand(-FAR)) * FAR / (decay - 1.0);
            Ok((core + tail, true))
        }
        _ => Err(Error::capability(format!(
            "{} has noncompact support and no decay envelope",
            h.name()
        ))),
    }
}

/// Largest one-sided jump of `f^{(k)}` across the declared breakpoints,
/// relative to `1 + ‖f^{(k)}‖_∞`.
fn jump(f: &ScalarFunction, k: usize) -> Result<f64> {
    let breaks = f.breakpoints();
    if breaks.is_empty() {
        return Ok(0.0);
    }
    let scale = 1.0 + f.sup_norm(k).unwrap_or(0.0);
    let mut worst = 0.0f64;
    for b in breaks {
        let d = 1e-9 * (1.0 + b.abs());
        let gap = (f.derivative(k, b + d)? - f.derivative(k, b - d)?).norm();
        worst = worst.max(gap / scale);
    }
    Ok(worst)
}

const JUMP_TOL: f64 = 1e-6;

fn continuity(f: &ScalarFunction, m: usize, out: &mut Vec<ConditionReport>) -> Result<()> {
    for k in 0..=m {
        let j = jump(f, k)?;
        out.push(cond(format!("f^({k}) continuous"), j, j <= JUMP_TOL));
    }
    Ok(())
}

/// `(f^{(k)} u^l)^ ∈ L¹`, certified through `‖ĥ‖₁ ≤ π√2 (‖h‖₂² + ‖h'‖₂²)^{1/2}`
/// when `h` is continuous with square-integrable derivative, otherwise by
/// FFT self-convergence on a compact window.
fn fourier_condition(f: &ScalarFunction, k: usize, l: usize) -> Result<ConditionReport> {
    let desc = format!("FT(f^({k}) u^{l}) in L1");
    let h = f.derived(k)?.times_u_power(l as i32);
    if f.depth() > k {
        let continuous = jump(f, k)? <= JUMP_TOL;
        let (h2, h_fin) = weighted_integral(&h, 2.0, 0.0)?;
        let dh = f.derived(k + 1)?.times_u_power(l as i32);
        let (dh2, dh_fin) = weighted_integral(&dh, 2.0, 0.0)?;
        // derivative of the u^l factor
        let (lower, lower_fin) = if l > 0 {
            weighted_integral(&f.derived(k)?.times_u_power(l as i32 - 1), 2.0, 0.0)?
        } else {
            (0.0, true)
        };
        let dnorm = dh2.sqrt() + l as f64 * lower.sqrt();
        let holds = continuous && h_fin && dh_fin && lower_fin;
        let bound = if holds {
            std::f64::consts::PI * 2f64.sqrt() * (h2 + dnorm * dnorm).sqrt()
        } else {
            f64::INFINITY
        };
        return Ok(cond(desc, bound, holds));
    }
    match fourier_l1(&h) {
        Ok(r) => Ok(cond(
            desc,
            if r.converged { r.value } else { f64::INFINITY },
            r.converged,
        )),
        Err(Error::Domain(_)) => Ok(cond(desc, f64::INFINITY, false)),
        Err(e) => Err(e),
    }
}

fn depth_condition(f: &ScalarFunction, n: usize) -> ConditionReport {
    let ok = f.depth() >= n;
    cond(format!("f^({n}) available"), if ok { 1.0 } else { 0.0 }, ok)
}

fn compact_condition(f: &ScalarFunction) -> ConditionReport {
    match f.support() {
        Some((lo, hi)) => cond("compact support".into(), hi - lo, true),
        None => cond("compact support".into(), f64::INFINITY, false),
    }
}

/// Numerical membership verdicts for one function class.
pub fn class_witness(f: &ScalarFunction, tag: ClassTag) -> Result<WitnessReport> {
    let mut c = Vec::new();
    match tag {
        ClassTag::Dc(n) | ClassTag::Cc(n) => {
            c.push(compact_condition(f));
            c.push(depth_condition(f, n));
            if f.depth() >= n {
                continuity(f, n, &mut c)?;
            }
        }
        ClassTag::Fc(n) => {
            c.push(compact_condition(f));
            c.push(depth_condition(f, n));
            if f.depth() >= n {
                if n > 0 {
                    continuity(f, n - 1, &mut c)?;
                }
                let (v, fin) = weighted_integral(&f.derived(n)?, 2.0, 0.0)?;
                c.push(cond(format!("f^({n}) in L2"), v, fin));
            }
        }
        ClassTag::W(n) => {
            c.push(depth_condition(f, n));
            if f.depth() >= n {
                continuity(f, n, &mut c)?;
                for k in 0..=n {
                    c.push(fourier_condition(f, k, k)?);
                }
                for k in 1..=n {
                    let (v, fin) = weighted_integral(&f.derived(k)?, 1.0, k as f64 - 1.0)?;
                    c.push(cond(format!("f^({k}) in L1((1+|x|)^{})", k - 1), v, fin));
                }
            }
        }
        ClassTag::H(n) => {
            c.push(depth_condition(f, n));
            if f.depth() >= n {
                if n > 0 {
                    continuity(f, n - 1, &mut c)?;
                }
                for k in 0..n {
                    c.push(fourier_condition(f, k, k)?);
                    c.push(fourier_condition(f, k, k + 1)?);
                }
                for k in 0..=n {
                    let (v, fin) = weighted_integral(&f.derived(k)?, 1.0, k as f64)?;
                    c.push(cond(format!("f^({k}) in L1((1+|x|)^{k})"), v, fin));
                }
            }
        }
    }
    let holds = c.iter().all(|x| x.holds);
    Ok(WitnessReport {
        function: f.name(),
        tag,
        conditions: c,
        holds,
    })
}

/// Ratios `‖f^{(j)}‖_∞ / ((b−a)^{k−j} ‖f^{(k)}‖_∞)` for `j = 0..=k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeInterpolationReport {
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub holds: bool,
}

/// Derivative interpolation bound for functions of class `D_c^k` supported in
/// `[a, b]`; the class must be declared and numerically witnessed.
pub fn check_derivative_interpolation(
    f: &ScalarFunction,
    a: f64,
    b: f64,
    k: usize,
) -> Result<DerivativeInterpolationReport> {
    if !(a < b) {
        return Err(Error::domain(format!("need a < b, got [{a}, {b}]")));
    }
    if !f.declares(ClassTag::Dc(k)) {
        return Err(Error::capability(format!(
            "{} is not declared D_c^{k}",
            f.name()
        )));
    }
    match f.support() {
        Some((lo, hi)) if hi <= lo || (lo >= a && hi <= b) => {}
        _ => {
            return Err(Error::capability(format!(
                "{} is not supported in [{a}, {b}]",
                f.name()
            )))
        }
    }
    if !class_witness(f, ClassTag::Dc(k))?.holds {
        return Err(Error::capability(format!(
            "{}: D_c^{k} witness failed",
            f.name()
        )));
    }
    let top = f.sup_norm(k)?;
    let ratios: Vec<f64> = if top == 0.0 {
        vec![0.0; k + 1]
    } else {
        (0..=k)
            .map(|j| Ok(f.sup_norm(j)? / ((b - a).powi((k - j) as i32) * top)))
            .collect::<Result<_>>()?
    };
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    Ok(DerivativeInterpolationReport {
        holds: max_ratio <= 1.0 + 1e-9,
        max_ratio,
        ratios,
    })
}
