//! Gâteaux derivatives of `V ↦ f(H₀+V)`, Taylor remainders and the explicit
//! remainder bound.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moi::{
    moi_eval, moi_trace, window_constants, ConstantStore, MoiRequest, WindowConstants,
};
use crate::scalar_functions::{class_witness, ClassTag, ScalarFunction};
use crate::trace_algebra::{AlgebraElement, Interval, SelfAdjointOperator};
use crate::C64;

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// `d^k/ds^k f(H₀+sV)|₀ = k! T_{f^{[k]}}(V, …, V)`.
pub fn gateaux_derivative(
    f: &ScalarFunction,
    h0: &SelfAdjointOperator,
    v: &AlgebraElement,
    k: usize,
) -> Result<AlgebraElement> {
    if k == 0 {
        return h0.apply(f);
    }
    let t = moi_eval(&MoiRequest::new(h0, vec![v; k], f))?;
    Ok(t.element.scale_real(factorial(k)))
}

/// Central finite-difference derivative with a first-order error estimate.
#[derive(Debug, Clone)]
pub struct FdDerivative {
    pub element: AlgebraElement,
    pub step: f64,
    /// Max-entry change against the stencil at twice the step, divided by
    /// the error reduction factor of the stencil.
    pub error_estimate: f64,
}

/// Largest derivative order with a stencil.
pub const MAX_FD_ORDER: usize = 4;

/// Default step for each derivative order, balancing truncation against
/// cancellation for unit-scale `H₀` and `V`.
pub fn default_fd_step(k: usize) -> f64 {
    match k {
        1 => 2e-3,
        2 => 5e-3,
        3 => 2e-2,
        _ => 3e-2,
    }
}

/// Weights of the sixth-order central stencil for the `k`-th derivative on
/// the points `−m..=m`.
fn stencil(k: usize) -> Vec<f64> {
    let m = (k + 1) / 2 + 2;
    let p = 2 * m + 1;
    let a = DMatrix::from_fn(p, p, |q, j| (j as f64 - m as f64).powi(q as i32));
    let mut rhs = DVector::zeros(p);
    rhs[k] = factorial(k);
    a.lu()
        .solve(&rhs)
        .expect("Vandermonde system on distinct points is invertible")
        .iter()
        .copied()
        .collect()
}

/// `d^k/ds^k f(H₀+sV)|₀` by a central stencil of step `h`, for `1 ≤ k ≤ 4`.
pub fn fd_derivative_oracle(
    f: &ScalarFunction,
    h0: &SelfAdjointOperator,
    v: &AlgebraElement,
    k: usize,
    h: f64,
) -> Result<FdDerivative> {
    if k == 0 || k > MAX_FD_ORDER {
        return Err(Error::capability(format!(
            "no stencil for derivative order {k}"
        )));
    }
    if !(h > 0.0) {
        return Err(Error::domain(format!("step must be positive, got {h}")));
    }
    let w = stencil(k);
    let m = (w.len() / 2) as i64;
    let at = |s: i64| -> Result<AlgebraElement> {
        let shifted = h0.element() + &v.scale_real(s as f64 * h);
        SelfAdjointOperator::new(shifted)?.apply(f)
    };
    let samples: Vec<AlgebraElement> = (-2 * m..=2 * m).map(at).collect::<Result<_>>()?;
    let combine = |stride: i64, step: f64| {
        let mut acc = AlgebraElement::zeros(h0.algebra());
        for (i, wi) in w.iter().enumerate() {
            if *wi != 0.0 {
                let idx = (2 * m + (i as i64 - m) * stride) as usize;
                acc = &acc + &samples[idx].scale_real(*wi);
            }
        }
        acc.scale_real(step.powi(-(k as i32)))
    };
    let fine = combine(1, h);
    let coarse = combine(2, 2.0 * h);
    let error_estimate = (&fine - &coarse).max_entry() / 63.0;
    Ok(FdDerivative {
        element: fine,
        step: h,
        error_estimate,
    })
}

/// [`fd_derivative_oracle`] from [`default_fd_step`], halving the step until
/// the error estimate drops below `tol·(1 + ‖·‖)` or stops improving.
/// Returns the stencil with the smallest estimate.
pub fn fd_derivative_refined(
    f: &ScalarFunction,
    h0: &SelfAdjointOperator,
    v: &AlgebraElement,
    k: usize,
    tol: f64,
) -> Result<FdDerivative> {
    let mut best = fd_derivative_oracle(f, h0, v, k, default_fd_step(k))?;
    for _ in 0..8 {
        if best.error_estimate <= tol * (1.0 + best.element.operator_norm()) {
            break;
        }
        let next = fd_derivative_oracle(f, h0, v, k, best.step / 2.0)?;
        if next.error_estimate >= best.error_estimate {
            break;
        }
        best = next;
    }
    Ok(best)
}

/// `𝓡_{H₀,f,n}(V)` with its trace and the normalized derivative traces.
#[derive(Debug, Clone)]
pub struct RemainderRecord {
    pub n: usize,
    pub function: String,
    pub element: AlgebraElement,
    pub trace: f64,
    pub trace_imag: f64,
    /// `τ((1/k!) d^k/ds^k f(H₀+sV)|₀)` for `k = 1..n`.
    pub derivative_traces: Vec<f64>,
    /// `τ(f(H₀+V))` and `τ(f(H₀))`.
    pub endpoint_traces: (f64, f64),
}

/// `f(H₀+V) − f(H₀) − Σ_{k=1}^{n−1} (1/k!) d^k/ds^k f(H₀+sV)|₀`.
pub fn taylor_remainder(
    f: &ScalarFunction,
    h0: &SelfAdjointOperator,
    v: &AlgebraElement,
    n: usize,
) -> Result<RemainderRecord> {
    if n == 0 {
        return Err(Error::domain("remainder order must be at least 1"));
    }
    f.require_depth(n - 1)?;
    let h = SelfAdjointOperator::new(h0.element() + v)?;
    let fh = h.apply(f)?;
    let f0 = h0.apply(f)?;
    let mut element = &fh - &f0;
    let mut derivative_traces = Vec::with_capacity(n - 1);
    for k in 1..n {
        let t = moi_eval(&MoiRequest::new(h0, vec![v; k], f))?;
        derivative_traces.push(t.trace.re);
        element = &element - &t.element;
    }
    let tr = element.trace();
    Ok(RemainderRecord {
        n,
        function: f.name(),
        trace: tr.re,
        trace_imag: tr.im,
        derivative_traces,
        endpoint_traces: (fh.trace().re, f0.trace().re),
        element,
    })
}

/// `τ(𝓡_{H₀,f,n}(V))` with `H = H₀+V` already decomposed, using reduced
/// trace contractions.
pub fn remainder_trace_with(
    f: &ScalarFunction,
    h0: &SelfAdjointOperator,
    h: &SelfAdjointOperator,
    v: &AlgebraElement,
    n: usize,
) -> Result<C64> {
    if n == 0 {
        return Err(Error::domain("remainder order must be at least 1"));
    }
    let spectral_trace = |op: &SelfAdjointOperator| -> Result<C64> {
        op.weighted_spectrum()
            .iter()
            .try_fold(C64::new(0.0, 0.0), |acc, &(l, w)| Ok(acc + f.value(l)? * w))
    };
    let mut t = spectral_trace(h)? - spectral_trace(h0)?;
    for k in 1..n {
        t -= moi_trace(&MoiRequest::new(h0, vec![v; k], f))?;
    }
    Ok(t)
}

/// `τ(𝓡_{H₀,f,n}(V))`.
pub fn remainder_trace(
    f: &ScalarFunction,
    h0: &SelfAdjointOperator,
    v: &AlgebraElement,
    n: usize,
) -> Result<C64> {
    let h = SelfAdjointOperator::new(h0.element() + v)?;
    remainder_trace_with(f, h0, &h, v, n)
}

/// Terms of
/// `D = (b−a)^n max{τE_{H₀}([a,b]), τE_{H₀+V}([a,b])} + Σ_{k<n} (b−a)^{n−k} C_k ‖V‖^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub a: f64,
    pub b: f64,
    pub n: usize,
    pub eps: f64,
    pub projection_trace_h0: f64,
    pub projection_trace_h: f64,
    pub v_norm: f64,
    pub constants: Vec<WindowConstants>,
    /// `(b−a)^n max{…}` followed by the summands for `k = 1..n`.
    pub summands: Vec<f64>,
    pub d: f64,
}

#[allow(non_snake_case)]
pub fn constant_D(
    a: f64,
    b: f64,
    n: usize,
    eps: f64,
    h0: &SelfAdjointOperator,
    v: &AlgebraElement,
    store: &mut ConstantStore,
) -> Result<BoundConstants> {
    if !(a < b) {
        return Err(Error::domain(format!("need a < b, got [{a}, {b}]")));
    }
    if !(eps > 0.0) {
        return Err(Error::domain(format!(
            "bump width must be positive, got {eps}"
        )));
    }
    if n == 0 {
        return Err(Error::domain("remainder order must be at least 1"));
    }
    let h = SelfAdjointOperator::new(h0.element() + v)?;
    let projection_trace_h0 = h0.counting(Interval::closed(a, b));
    let projection_trace_h = h.counting(Interval::closed(a, b));
    let v_norm = v.operator_norm();
    let constants = if n > 1 {
        window_constants(h0, a, b, eps, n - 1, store)?
    } else {
        Vec::new()
    };
    let mut summands = vec![(b - a).powi(n as i32) * projection_trace_h0.max(projection_trace_h)];
    for c in &constants {
        summands.push((b - a).powi((n - c.k) as i32) * c.value * v_norm.powi(c.k as i32));
    }
    let d = summands.iter().sum();
    Ok(BoundConstants {
        a,
        b,
        n,
        eps,
        projection_trace_h0,
        projection_trace_h,
        v_norm,
        constants,
        summands,
        d,
    })
}

/// `|τ(𝓡_{H₀,f,n}(V))|` against `D ‖f^{(n)}‖_∞`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemainderBoundReport {
    pub n: usize,
    pub abs_trace: f64,
    pub sup_derivative: f64,
    pub bound: BoundConstants,
    pub ratio: f64,
    /// True when `D` involves no empirical constant (`n = 1`).
    pub explicit: bool,
    pub holds: bool,
}

#[allow(clippy::too_many_arguments)]
pub fn check_remainder_bound(
    f: &ScalarFunction,
    h0: &SelfAdjointOperator,
    v: &AlgebraElement,
    n: usize,
    a: f64,
    b: f64,
    eps: f64,
    store: &mut ConstantStore,
) -> Result<RemainderBoundReport> {
    match f.support() {
        Some((lo, hi)) if hi <= lo || (lo >= a && hi <= b) => {}
        _ => {
            return Err(Error::capability(format!(
                "{} is not supported in [{a}, {b}]",
                f.name()
            )))
        }
    }
    if !class_witness(f, ClassTag::Dc(n))?.holds {
        return Err(Error::capability(format!(
            "{}: D_c^{n} witness failed",
            f.name()
        )));
    }
    let bound = constant_D(a, b, n, eps, h0, v, store)?;
    let abs_trace = remainder_trace(f, h0, v, n)?.norm();
    let sup_derivative = f.sup_norm(n)?;
    let denom = bound.d * sup_derivative;
    let ratio = if abs_trace == 0.0 {
        0.0
    } else {
        abs_trace / denom
    };
    Ok(RemainderBoundReport {
        n,
        abs_trace,
        sup_derivative,
        bound,
        ratio,
        explicit: n == 1,
        holds: ratio <= 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{
        hermitian_with_spectrum_in, random_algebra, random_hermitian, random_unitary, rng,
    };
    use crate::scalar_functions::fixtures;
    use crate::trace_algebra::TraceAlgebra;

    fn dist(a: &AlgebraElement, b: &AlgebraElement) -> f64 {
        (a - b).max_entry()
    }

    fn pair(seed: u64, dim: usize) -> (SelfAdjointOperator, AlgebraElement) {
        let mut r = rng(seed);
        let alg = random_algebra(&mut r, dim);
        let h0 = SelfAdjointOperator::new(random_hermitian(&alg, &mut r, 2.0)).unwrap();
        let v = random_hermitian(&alg, &mut r, 0.8);
        (h0, v)
    }

    #[test]
    fn stencils_are_exact_on_polynomials() {
        for k in 1..=4 {
            let w = stencil(k);
            let m = (w.len() / 2) as i32;
            for q in 0..w.len() {
                let s: f64 = w
                    .iter()
                    .enumerate()
                    .map(|(i, wi)| wi * ((i as i32 - m) as f64).powi(q as i32))
                    .sum();
                let expect = if q == k { factorial(k) } else { 0.0 };
                assert!((s - expect).abs() < 1e-9, "k={k} q={q}: {s}");
            }
        }
    }

    #[test]
    fn refined_step_resolves_steep_bumps() {
        let mut r = rng(1007);
        let alg = random_algebra(&mut r, 4);
        let h0 =
            SelfAdjointOperator::new(hermitian_with_spectrum_in(&alg, &mut r, -1.0, 1.0)).unwrap();
        let v = random_hermitian(&alg, &mut r, 0.5);
        let f = fixtures::bump(-0.4, 0.4, 0.6).unwrap();
        let exact = gateaux_derivative(&f, &h0, &v, 3).unwrap();
        let fd = fd_derivative_refined(&f, &h0, &v, 3, 1e-7).unwrap();
        assert!(fd.step < default_fd_step(3));
        assert!((&exact - &fd.element).operator_norm() <= 1e-6 * (1.0 + exact.operator_norm()));
    }

    #[test]
    fn derivative_examples() {
        let (h0, v) = pair(1, 4);
        let x = fixtures::polynomial(&[0.0, 1.0]);
        assert!(dist(&gateaux_derivative(&x, &h0, &v, 1).unwrap(), &v) < 1e-12);
        let sq = fixtures::polynomial(&[0.0, 0.0, 1.0]);
        assert!(
            dist(
                &gateaux_derivative(&sq, &h0, &v, 2).unwrap(),
                &(&v * &v).scale_real(2.0)
            ) < 1e-11
        );
        let fd = fd_derivative_oracle(&sq, &h0, &v, 1, 1e-3).unwrap();
        let anti = &(h0.element() * &v) + &(&v * h0.element());
        assert!(dist(&fd.element, &anti) < 1e-8);
        let lin = fixtures::polynomial(&[0.3, -2.0]);
        for k in 2..=4 {
            let fd = fd_derivative_oracle(&lin, &h0, &v, k, default_fd_step(k)).unwrap();
            assert!(fd.element.max_entry() < 1e-7, "k={k}");
        }
        assert!(matches!(
            fd_derivative_oracle(&sq, &h0, &v, 5, 0.1),
            Err(Error::Capability(_))
        ));
    }

    #[test]
    fn exp_derivatives_match_stencils() {
        let mut r = rng(2);
        let alg = TraceAlgebra::matrix(4);
        let h0 = SelfAdjointOperator::new(random_hermitian(&alg, &mut r, 1.0)).unwrap();
        let v = random_hermitian(&alg, &mut r, 1.0);
        let f = fixtures::exp();
        for k in 1..=2 {
            let exact = gateaux_derivative(&f, &h0, &v, k).unwrap();
            let fd = fd_derivative_oracle(&f, &h0, &v, k, 1e-4 * 10f64.powi(k as i32 - 1)).unwrap();
            assert!(
                dist(&exact, &fd.element) <= 1e-6 * (1.0 + exact.max_entry()),
                "k={k}"
            );
        }
    }

    #[test]
    fn cross_validation_on_random_instances() {
        for seed in 0..20 {
            let (h0, v) = pair(100 + seed, 3 + (seed as usize % 4));
            let f = fixtures::gaussian(0.2, 1.3);
            for k in 1..=3 {
                let exact = gateaux_derivative(&f, &h0, &v, k).unwrap();
                let fd = fd_derivative_oracle(&f, &h0, &v, k, default_fd_step(k)).unwrap();
                let gap = dist(&exact, &fd.element);
                assert!(
                    gap <= 1e-6 * (1.0 + exact.max_entry()),
                    "seed {seed} k={k}: {gap}"
                );
            }
        }
    }

    #[test]
    fn remainder_examples() {
        let (h0, v) = pair(3, 5);
        let f = fixtures::gaussian(0.0, 1.0);
        let r1 = taylor_remainder(&f, &h0, &v, 1).unwrap();
        let h = SelfAdjointOperator::new(h0.element() + &v).unwrap();
        let direct = &h.apply(&f).unwrap() - &h0.apply(&f).unwrap();
        assert!(dist(&r1.element, &direct) < 1e-13);
        let cubic = fixtures::polynomial(&[0.5, -1.0, 2.0, 0.7]);
        let r4 = taylor_remainder(&cubic, &h0, &v, 4).unwrap();
        assert!(r4.element.max_entry() <= 1e-9);
        assert!(r4.trace.abs() <= 1e-9);
    }

    #[test]
    fn remainder_bookkeeping() {
        let (h0, v) = pair(4, 6);
        let f = fixtures::bump(-0.5, 0.5, 0.6).unwrap();
        let mut prev = taylor_remainder(&f, &h0, &v, 1).unwrap();
        for n in 2..=4 {
            let r = taylor_remainder(&f, &h0, &v, n).unwrap();
            let consistency =
                r.endpoint_traces.0 - r.endpoint_traces.1 - r.derivative_traces.iter().sum::<f64>();
            assert!((r.trace - consistency).abs() < 1e-12);
            assert!(r.trace_imag.abs() <= 1e-10);
            // 𝓡_n = 𝓡_{n−1} − (1/(n−1)!) d^{n−1}
            let d = gateaux_derivative(&f, &h0, &v, n - 1)
                .unwrap()
                .scale_real(1.0 / factorial(n - 1));
            assert!(dist(&r.element, &(&prev.element - &d)) <= 1e-9);
            let fast = remainder_trace(&f, &h0, &v, n).unwrap();
            assert!((fast.re - r.trace).abs() <= 1e-10 * (1.0 + r.trace.abs()));
            prev = r;
        }
    }

    #[test]
    fn remainder_is_unitarily_invariant() {
        let (h0, v) = pair(5, 5);
        let mut r = rng(6);
        let u = AlgebraElement::from_blocks(
            h0.algebra(),
            h0.algebra()
                .blocks()
                .iter()
                .map(|b| random_unitary(b.dim, &mut r))
                .collect(),
        )
        .unwrap();
        let conj = |a: &AlgebraElement| (&(&u * a) * &u.adjoint()).hermitian_part();
        let h0u = SelfAdjointOperator::new(conj(h0.element())).unwrap();
        let vu = conj(&v);
        let f = fixtures::gaussian(0.4, 0.9);
        for n in 1..=3 {
            let a = taylor_remainder(&f, &h0, &v, n).unwrap().trace;
            let b = taylor_remainder(&f, &h0u, &vu, n).unwrap().trace;
            assert!((a - b).abs() <= 1e-9, "n={n}");
        }
    }

    #[test]
    fn bound_constant_examples() {
        let alg = TraceAlgebra::matrix(4);
        let h0 = SelfAdjointOperator::diagonal(&alg, &[-3.0, -0.5, 0.5, 3.0]).unwrap();
        let zero = AlgebraElement::zeros(&alg);
        let mut store = ConstantStore::in_memory();
        let d1 = constant_D(-1.0, 1.0, 1, 0.5, &h0, &zero, &mut store).unwrap();
        assert_eq!(d1.projection_trace_h0, 2.0);
        assert_eq!(d1.d, 2.0 * 2.0);
        let d2 = constant_D(-1.0, 1.0, 2, 0.5, &h0, &zero, &mut store).unwrap();
        assert_eq!(d2.projection_trace_h0, d2.projection_trace_h);
        assert_eq!(d2.summands[1], 0.0);
        assert_eq!(d2.d, 4.0 * 2.0);
        assert!(matches!(
            constant_D(1.0, 1.0, 1, 0.5, &h0, &zero, &mut store),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn first_order_bound_is_strict() {
        let mut store = ConstantStore::in_memory();
        for seed in 0..10 {
            let mut r = rng(200 + seed);
            let alg = random_algebra(&mut r, 6);
            let h0 = SelfAdjointOperator::new(hermitian_with_spectrum_in(&alg, &mut r, -2.0, 2.0))
                .unwrap();
            let v = random_hermitian(&alg, &mut r, 1.0);
            let f = fixtures::bump(-0.6, 0.6, 0.3).unwrap();
            let rep = check_remainder_bound(&f, &h0, &v, 1, -1.0, 1.0, 0.5, &mut store).unwrap();
            assert!(rep.explicit && rep.holds && rep.ratio < 1.0, "{rep:?}");
            let scaled =
                check_remainder_bound(&f.scaled(-3.5), &h0, &v, 1, -1.0, 1.0, 0.5, &mut store)
                    .unwrap();
            assert!((scaled.ratio - rep.ratio).abs() <= 1e-9 * rep.ratio);
        }
        let (h0, v) = pair(7, 4);
        let z = check_remainder_bound(&fixtures::zero(), &h0, &v, 2, -1.0, 1.0, 0.5, &mut store)
            .unwrap();
        assert_eq!(z.ratio, 0.0);
        let wide = fixtures::bump(-1.0, 1.0, 0.5).unwrap();
        assert!(matches!(
            check_remainder_bound(&wide, &h0, &v, 1, -1.0, 1.0, 0.5, &mut store),
            Err(Error::Capability(_))
        ));
    }
}
