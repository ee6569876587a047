use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::store::{ConstantKey, ConstantStore};
use super::{moi_eval, moi_trace, MoiRequest};
use crate::error::{Error, Result};
use crate::fixtures as opfix;
use crate::scalar_functions::{class_witness, fixtures, fourier_l1, ClassTag, ScalarFunction};
use crate::trace_algebra::{AlgebraElement, Interval, SelfAdjointOperator};

/// `‖T‖_α / (‖f^{(k)}‖_∞ ∏ ‖V_ℓ‖_{α_ℓ})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormRatioReport {
    pub k: usize,
    pub alpha: f64,
    pub alphas: Vec<f64>,
    pub moi_norm: f64,
    pub sup_derivative: f64,
    pub perturbation_norms: Vec<f64>,
    pub ratio: f64,
}

fn check_exponents(k: usize, alpha: f64, alphas: &[f64]) -> Result<()> {
    if alphas.len() != k {
        return Err(Error::domain(format!(
            "{} exponents given for order {k}",
            alphas.len()
        )));
    }
    if alphas.iter().chain([&alpha]).any(|&p| !(p >= 1.0)) {
        return Err(Error::domain("Hölder exponents must lie in [1, ∞]"));
    }
    let lhs = 1.0 / alpha;
    let rhs: f64 = alphas.iter().map(|p| 1.0 / p).sum();
    if (lhs - rhs).abs() > 1e-12 {
        return Err(Error::domain(format!("1/α = {lhs} but Σ 1/α_ℓ = {rhs}")));
    }
    Ok(())
}

/// Normalized Schatten-norm ratio of a multiple operator integral.
///
/// `‖f^{(k)}‖_∞` is taken over ℝ when `f` has a support or decay window and
/// over the joint spectral hull otherwise.
pub fn bound_ratio_norm(req: &MoiRequest, alpha: f64, alphas: &[f64]) -> Result<NormRatioReport> {
    let k = req.order();
    check_exponents(k, alpha, alphas)?;
    let (lo0, hi0) = req.first.spectrum_bounds();
    let (lo1, hi1) = req.rest.spectrum_bounds();
    let sup = req.symbol.sup_norm_or_on(k, lo0.min(lo1), hi0.max(hi1))?;
    let perturbation_norms = req
        .perturbations
        .iter()
        .zip(alphas)
        .map(|(v, &p)| v.schatten_norm(p))
        .collect::<Result<Vec<_>>>()?;
    let moi_norm = moi_eval(req)?.element.schatten_norm(alpha)?;
    let denom = sup * perturbation_norms.iter().product::<f64>();
    let ratio = if denom == 0.0 { 0.0 } else { moi_norm / denom };
    Ok(NormRatioReport {
        k,
        alpha,
        alphas: alphas.to_vec(),
        moi_norm,
        sup_derivative: sup,
        perturbation_norms,
        ratio,
    })
}

/// One draw from the randomized family used to estimate `c_{α,k}`:
/// a weighted algebra of dimension 3 to 6, a Hermitian `H`, general `V_ℓ`
/// and a symbol cycling through Gaussians, plateau bumps and B-splines.
fn norm_instance(k: usize, alpha: f64, alphas: &[f64], seed: u64) -> Result<f64> {
    let mut rng = opfix::rng(seed);
    let dim = rng.random_range(3..=6);
    let alg = opfix::random_algebra(&mut rng, dim);
    let h = SelfAdjointOperator::new(opfix::random_hermitian(&alg, &mut rng, 3.0))?;
    let vs: Vec<AlgebraElement> = (0..k)
        .map(|_| opfix::random_element(&alg, &mut rng))
        .collect();
    let f = match seed % 3 {
        0 => fixtures::gaussian(rng.random_range(-1.0..1.0), rng.random_range(0.3..1.5)),
        1 => {
            let a = rng.random_range(-1.5..0.0);
            fixtures::bump(
                a,
                a + rng.random_range(0.2..1.5),
                rng.random_range(0.2..1.0),
            )?
        }
        _ => {
            let deg = k + 2;
            let mut t = rng.random_range(-2.0..-1.0);
            let knots: Vec<f64> = (0..deg + 2)
                .map(|_| {
                    t += rng.random_range(0.2..1.0);
                    t
                })
                .collect();
            fixtures::bspline(&knots, deg)?
        }
    };
    let req = MoiRequest::new(&h, vs.iter().collect(), &f);
    Ok(bound_ratio_norm(&req, alpha, alphas)?.ratio)
}

/// Draws `instances` seeded instances (seeds `seed..seed+instances`),
/// records every ratio in the store and returns the updated supremum.
pub fn estimate_norm_constant(
    store: &mut ConstantStore,
    k: usize,
    alpha: f64,
    alphas: &[f64],
    instances: usize,
    seed: u64,
) -> Result<f64> {
    check_exponents(k, alpha, alphas)?;
    let ratios: Vec<f64> = (0..instances as u64)
        .into_par_iter()
        .map(|i| norm_instance(k, alpha, alphas, seed + i))
        .collect::<Result<_>>()?;
    let key = ConstantKey::norm(k, alpha, alphas);
    for (i, r) in ratios.into_iter().enumerate() {
        store.record(&key, seed + i as u64, r)?;
    }
    Ok(store.sup(&key).unwrap_or(0.0))
}

/// Instances drawn when `c_{2,k}` is requested before any estimate exists.
pub const DEFAULT_INSTANCES: usize = 40;

/// `c_{2,k}` from the store, estimated on the spot if absent.
pub fn c2k(store: &mut ConstantStore, k: usize) -> Result<f64> {
    match store.sup(&ConstantKey::c2(k)) {
        Some(v) => Ok(v),
        None => estimate_norm_constant(
            store,
            k,
            2.0,
            &vec![2.0 * k as f64; k],
            DEFAULT_INSTANCES,
            0,
        ),
    }
}

/// Pieces of `C_{a,b,k,ε,H₀} = ((k+1)2^k + c_{2,k})(b−a+1)^k d_k (1 + τ(E_{H₀}(a,b)))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowConstants {
    pub a: f64,
    pub b: f64,
    pub eps: f64,
    pub k: usize,
    /// `‖Φ_ε(H₀)‖₁`.
    pub bump_trace_norm: f64,
    /// `(1/ℓ!) ‖FT(Φ_ε^{(ℓ)})‖₁` for `ℓ = 1..=k`.
    pub fourier_terms: Vec<f64>,
    pub d: f64,
    pub c2k: f64,
    /// `τ(E_{H₀}((a, b)))`.
    pub projection_trace: f64,
    pub value: f64,
}

/// `C_{a,b,k,ε,H₀}` for `k = 1..=max_k`, sharing the bump transforms.
pub fn window_constants(
    h0: &SelfAdjointOperator,
    a: f64,
    b: f64,
    eps: f64,
    max_k: usize,
    store: &mut ConstantStore,
) -> Result<Vec<WindowConstants>> {
    let phi = fixtures::bump(a, b, eps)?;
    phi.require_depth(max_k)?;
    let bump_trace_norm = h0.apply(&phi)?.schatten_norm(1.0)?;
    let projection_trace = h0.counting(Interval::open(a, b));
    let mut fourier_terms = Vec::with_capacity(max_k);
    let mut fact = 1.0;
    for l in 1..=max_k {
        fact *= l as f64;
        fourier_terms.push(fourier_l1(&phi.derived(l)?)?.value / fact);
    }
    let mut out = Vec::with_capacity(max_k);
    for k in 1..=max_k {
        let d = fourier_terms[..k]
            .iter()
            .copied()
            .fold(bump_trace_norm, f64::max);
        let c = c2k(store, k)?;
        let value = ((k + 1) as f64 * 2f64.powi(k as i32) + c)
            * (b - a + 1.0).powi(k as i32)
            * d
            * (1.0 + projection_trace);
        out.push(WindowConstants {
            a,
            b,
            eps,
            k,
            bump_trace_norm,
            fourier_terms: fourier_terms[..k].to_vec(),
            d,
            c2k: c,
            projection_trace,
            value,
        });
    }
    Ok(out)
}

/// `|τ(T_{f^{[k]}}(V₁, …, V_k))|` against `C ‖f^{(k)}‖_∞ ∏ ‖V_ℓ‖`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceBoundReport {
    pub constants: WindowConstants,
    pub abs_trace: f64,
    pub sup_derivative: f64,
    pub perturbation_norms: Vec<f64>,
    pub bound: f64,
    pub ratio: f64,
}

/// Trace bound for `f ∈ F_c^{k+1}((a, b))` with the explicit constant.
pub fn trace_bound_ratio(
    f: &ScalarFunction,
    h0: &SelfAdjointOperator,
    vs: &[&AlgebraElement],
    a: f64,
    b: f64,
    eps: f64,
    store: &mut ConstantStore,
) -> Result<TraceBoundReport> {
    let k = vs.len();
    match f.support() {
        Some((lo, hi)) if hi <= lo || (lo >= a && hi <= b) => {}
        _ => {
            return Err(Error::capability(format!(
                "{} is not supported in [{a}, {b}]",
                f.name()
            )))
        }
    }
    let witness = class_witness(f, ClassTag::Fc(k + 1))?;
    if !witness.holds {
        return Err(Error::capability(format!(
            "{}: F_c^{} witness failed",
            f.name(),
            k + 1
        )));
    }
    let constants = window_constants(h0, a, b, eps, k, store)?
        .pop()
        .expect("k ≥ 1 constants");
    let abs_trace = moi_trace(&MoiRequest::new(h0, vs.to_vec(), f))?.norm();
    let sup_derivative = f.sup_norm(k)?;
    let perturbation_norms: Vec<f64> = vs.iter().map(|v| v.operator_norm()).collect();
    let bound = constants.value * sup_derivative * perturbation_norms.iter().product::<f64>();
    let ratio = if bound == 0.0 { 0.0 } else { abs_trace / bound };
    Ok(TraceBoundReport {
        constants,
        abs_trace,
        sup_derivative,
        perturbation_norms,
        bound,
        ratio,
    })
}
