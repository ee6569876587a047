use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::piecewise::{legendre_all, PiecewisePolynomial};
use super::{all_eigenvalues, product_rule, Gauge, Provenance, SpectralShiftFunction};
use crate::error::{Error, Result};
use crate::scalar_functions::{fixtures, ScalarFunction};
use crate::spectral_action::remainder_trace_with;
use crate::trace_algebra::{AlgebraElement, SelfAdjointOperator};

/// B-spline test functions `f_j ∈ F_c^n` spanning the trace-formula
/// functional on a window, plus held-out members from shifted knots.
#[derive(Debug, Clone)]
pub struct TestFunctionFamily {
    pub order: usize,
    pub degree: usize,
    pub window: (f64, f64),
    pub members: Vec<ScalarFunction>,
    pub held_out: Vec<ScalarFunction>,
    knots: Vec<Vec<f64>>,
}

/// Held-out members drawn from the shifted family.
const HELD_OUT: usize = 8;

fn spline_row(a: f64, h: f64, start: f64, degree: usize) -> Vec<f64> {
    (0..degree + 2)
        .map(|i| a + (start + i as f64) * h)
        .collect()
}

impl TestFunctionFamily {
    /// `count` B-splines of degree `n+1` on uniform knots of `[a, b]`,
    /// shifted by `offset ∈ [0, 1)` knot spacings.
    pub fn bsplines(n: usize, a: f64, b: f64, count: usize, offset: f64) -> Result<Self> {
        if !(a < b) {
            return Err(Error::domain(format!("need a < b, got [{a}, {b}]")));
        }
        if !(0.0..1.0).contains(&offset) {
            return Err(Error::domain(format!(
                "offset must lie in [0, 1), got {offset}"
            )));
        }
        if count == 0 || n == 0 {
            return Err(Error::domain(
                "family needs at least one member and order ≥ 1",
            ));
        }
        let degree = n + 1;
        let h = (b - a) / (count + degree + 1) as f64;
        let knots: Vec<Vec<f64>> = (0..count)
            .map(|j| spline_row(a, h, offset + j as f64, degree))
            .collect();
        let members = knots
            .iter()
            .map(|k| fixtures::bspline(k, degree))
            .collect::<Result<_>>()?;
        let shift = (offset + 0.37).fract();
        let stride = (count / HELD_OUT).max(1);
        let held_out = (0..count)
            .step_by(stride)
            .take(HELD_OUT)
            .map(|j| fixtures::bspline(&spline_row(a, h, shift + j as f64, degree), degree))
            .collect::<Result<_>>()?;
        Ok(TestFunctionFamily {
            order: n,
            degree,
            window: (a, b),
            members,
            held_out,
            knots,
        })
    }

    /// B-splines of degree `n+1` on knots that subdivide every piece of
    /// `breaks` into `2n+1` parts shifted by `offset` parts, so that clusters
    /// of breaks get matching clusters of test functions, plus a uniform layer
    /// with about two knots per piece.
    pub fn adapted(n: usize, breaks: &[f64], offset: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("order must be at least 1"));
        }
        if breaks.len() < 2 || breaks.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::domain("breaks must increase"));
        }
        if !(0.0..1.0).contains(&offset) {
            return Err(Error::domain(format!(
                "offset must lie in [0, 1), got {offset}"
            )));
        }
        let degree = n + 1;
        let knots = adapted_knots(breaks, 2 * n + 1, offset);
        let shifted = adapted_knots(breaks, 2 * n + 1, (offset + 0.37).fract());
        let rows =
            |k: &[f64]| -> Vec<Vec<f64>> { k.windows(degree + 2).map(|w| w.to_vec()).collect() };
        let window = (breaks[0], *breaks.last().expect("breaks"));
        // a uniform layer sees clusters of breaks at the scale of their neighbours
        let uniform = adapted_knots(&[window.0, window.1], 2 * (breaks.len() - 1), offset);
        let mut knots = rows(&knots);
        knots.extend(rows(&uniform));
        let shifted = rows(&shifted);
        if knots.is_empty() {
            return Err(Error::domain("too few breaks for a test family"));
        }
        let members = knots
            .iter()
            .map(|k| fixtures::bspline(k, degree))
            .collect::<Result<_>>()?;
        let stride = (shifted.len() / HELD_OUT).max(1);
        let held_out = shifted
            .iter()
            .step_by(stride)
            .take(HELD_OUT)
            .map(|k| fixtures::bspline(k, degree))
            .collect::<Result<_>>()?;
        Ok(TestFunctionFamily {
            order: n,
            degree,
            window,
            members,
            held_out,
            knots,
        })
    }

    /// Family adapted to the pieces on which `η_n` for `H₀` and `H₀+V` is
    /// polynomial.
    pub fn for_operators(
        h0: &SelfAdjointOperator,
        v: &AlgebraElement,
        n: usize,
        a: f64,
        b: f64,
        offset: f64,
    ) -> Result<Self> {
        if !(a < b) {
            return Err(Error::domain(format!("need a < b, got [{a}, {b}]")));
        }
        let h = SelfAdjointOperator::new(h0.element() + v)?;
        Self::adapted(
            n,
            &density_breaks(&all_eigenvalues(&[h0, &h]), a, b),
            offset,
        )
    }
}

/// Window ends plus `parts` points per piece at fractions `(i + offset)/parts`.
fn adapted_knots(breaks: &[f64], parts: usize, offset: f64) -> Vec<f64> {
    let (a, b) = (breaks[0], *breaks.last().expect("breaks"));
    let mut out = vec![a];
    for w in breaks.windows(2) {
        for i in 0..parts {
            let x = w[0] + (w[1] - w[0]) * (i as f64 + offset) / parts as f64;
            if x > *out.last().expect("nonempty") && x < b {
                out.push(x);
            }
        }
    }
    out.push(b);
    out
}

/// Every piece of the density is at most this fraction of the window.
const MAX_PIECE: f64 = 1.0 / 16.0;

/// Breaks of the piecewise basis: the window ends, the eigenvalues inside
/// and a uniform refinement; breaks closer than `1e-7` of the window merge.
fn density_breaks(eigenvalues: &[f64], a: f64, b: f64) -> Vec<f64> {
    let mut pts: Vec<f64> = eigenvalues
        .iter()
        .copied()
        .filter(|&e| e > a && e < b)
        .collect();
    pts.extend([a, b]);
    pts.sort_by(f64::total_cmp);
    let merge = 1e-7 * (b - a);
    let mut breaks: Vec<f64> = Vec::with_capacity(pts.len());
    for p in pts {
        match breaks.last() {
            Some(&last) if p - last <= merge => {
                if p == b {
                    *breaks.last_mut().expect("nonempty") = b;
                }
            }
            _ => breaks.push(p),
        }
    }
    let mut refined = vec![breaks[0]];
    for w in breaks.windows(2) {
        let parts = ((w[1] - w[0]) / (MAX_PIECE * (b - a))).ceil().max(1.0) as usize;
        for i in 1..=parts {
            refined.push(if i == parts {
                w[1]
            } else {
                w[0] + (w[1] - w[0]) * i as f64 / parts as f64
            });
        }
    }
    refined
}

/// Numerical quality of a reconstruction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionDiagnostics {
    pub unknowns: usize,
    pub members: usize,
    pub rank: usize,
    /// `σ_max / σ_min` of the system restricted to the complement of
    /// polynomials of degree `< n`.
    pub condition: f64,
    pub tikhonov: f64,
    /// Largest `|∫ f_j^{(n)} η − τ(𝓡)|` over the (row-normalized) family.
    pub fit_residual: f64,
    /// Largest `|∫ f^{(n)} η − τ(𝓡)| / ‖f^{(n)}‖_∞` over held-out members.
    pub held_out_residual: f64,
    /// Largest imaginary part among the remainder traces.
    pub max_imaginary: f64,
    pub gauge_residuals: Vec<f64>,
}

/// Relative Tikhonov parameter.
const TIKHONOV: f64 = 1e-10;
/// Singular values below this fraction of the largest count as kernel.
const RANK_TOL: f64 = 1e-11;

/// Global Legendre polynomials of degree `< n` on the window in the local
/// coefficients of every piece, with rows multiplied by `scale`.
fn polynomial_columns(breaks: &[f64], n: usize, scale: &[f64]) -> DMatrix<f64> {
    let (a, b) = (breaks[0], *breaks.last().expect("breaks"));
    let pieces = breaks.len() - 1;
    let mut out = DMatrix::<f64>::zeros(pieces * n, n);
    for q in 0..n {
        let mut p = PiecewisePolynomial::new(breaks.to_vec(), vec![vec![0.0; n]; pieces]);
        p.add_polynomial(
            |x| legendre_all(n - 1, (2.0 * x - a - b) / (b - a))[q],
            n - 1,
        );
        for (s, c) in p.coeffs().iter().enumerate() {
            for (i, v) in c.iter().enumerate() {
                out[(s * n + i, q)] = v * scale[s * n + i];
            }
        }
    }
    out
}

/// Rows `∫ f_j^{(n)} L_{s,q}` for the member with the given knots, exact by
/// Gauss–Legendre on the pieces between spline knots and density breaks.
fn design_row(
    f: &ScalarFunction,
    knots: &[f64],
    n: usize,
    breaks: &[f64],
    degree: usize,
) -> Result<Vec<f64>> {
    let pieces = breaks.len() - 1;
    let mut row = vec![0.0; pieces * n];
    let (lo, hi) = (knots[0], *knots.last().expect("knots"));
    let mut cuts: Vec<f64> = knots.to_vec();
    cuts.extend(breaks.iter().copied().filter(|&x| x > lo && x < hi));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let (t, w) = product_rule(degree - n, n - 1);
    for c in cuts.windows(2) {
        let (l, r) = (c[0], c[1]);
        if r <= l {
            continue;
        }
        let mid = 0.5 * (l + r);
        let s = breaks
            .partition_point(|&x| x < mid)
            .saturating_sub(1)
            .min(pieces - 1);
        let (bl, br) = (breaks[s], breaks[s + 1]);
        for (ti, wi) in t.iter().zip(&w) {
            let x = mid + 0.5 * (r - l) * ti;
            let fx = f.derivative(n, x)?.re * wi * 0.5 * (r - l);
            let local = (2.0 * x - bl - br) / (br - bl);
            for (q, p) in legendre_all(n - 1, local).iter().enumerate() {
                row[s * n + q] += fx * p;
            }
        }
    }
    Ok(row)
}

/// Reconstructs `η_n` on `window` from `∫ f_j^{(n)} η = τ(𝓡_{H₀,f_j,n}(V))`
/// over the family.
///
/// The unknown is a piecewise polynomial of degree `n−1` with breaks at the
/// eigenvalues of `H₀` and `H₀+V` (where `η_n` may jump) and a uniform
/// refinement. The polynomials of degree `< n`, which every test function
/// annihilates, are split off exactly; the Tikhonov-regularized least-squares
/// solution on the complement is then projected `L²`-orthogonally to them.
pub fn ssf_reconstruct(
    h0: &SelfAdjointOperator,
    v: &AlgebraElement,
    n: usize,
    window: (f64, f64),
    grid_size: usize,
    family: &TestFunctionFamily,
) -> Result<SpectralShiftFunction> {
    let (a, b) = window;
    if n == 0 {
        return Err(Error::domain("order must be at least 1"));
    }
    if !(a < b) {
        return Err(Error::domain(format!("need a < b, got [{a}, {b}]")));
    }
    if family.order != n {
        return Err(Error::domain(format!(
            "family built for order {}, not {n}",
            family.order
        )));
    }
    if family.window.0 < a || family.window.1 > b {
        return Err(Error::domain("family extends beyond the window"));
    }
    let h = SelfAdjointOperator::new(h0.element() + v)?;
    let eig = all_eigenvalues(&[h0, &h]);
    let breaks = density_breaks(&eig, a, b);
    let unknowns = (breaks.len() - 1) * n;
    // a member supported inside one piece pairs to zero with every unknown
    let informative = |k: &[f64]| {
        let (lo, hi) = (k[0], *k.last().expect("knots"));
        breaks.iter().any(|&x| x > lo && x < hi)
    };
    let rows: Vec<(Vec<f64>, f64, f64)> = family
        .members
        .par_iter()
        .zip(&family.knots)
        .filter(|(_, k)| informative(k))
        .map(|(f, k)| {
            let row = design_row(f, k, n, &breaks, family.degree)?;
            let t = remainder_trace_with(f, h0, &h, v, n)?;
            Ok((row, t.re, t.im))
        })
        .collect::<Result<_>>()?;
    let m = rows.len();
    let scale = rows.iter().map(|r| r.1.abs()).fold(0.0, f64::max).max(1.0);
    let max_imaginary = rows.iter().map(|r| r.2.abs()).fold(0.0, f64::max);
    if max_imaginary > 1e-9 * scale {
        return Err(Error::Reconstruction {
            message: format!("remainder traces have imaginary part {max_imaginary:e}"),
            condition: f64::NAN,
        });
    }
    let mut mat = DMatrix::<f64>::zeros(m, unknowns);
    let mut rhs = DVector::<f64>::zeros(m);
    for (j, (row, t, _)) in rows.iter().enumerate() {
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        for (i, x) in row.iter().enumerate() {
            mat[(j, i)] = x / norm;
        }
        rhs[j] = t / norm;
    }
    // column equilibration keeps short pieces visible to the rank test
    let col_scale: Vec<f64> = (0..unknowns)
        .map(|i| {
            let c = mat.column(i).norm();
            if c > 0.0 {
                c
            } else {
                1.0
            }
        })
        .collect();
    let mut scaled = mat.clone();
    for (i, c) in col_scale.iter().enumerate() {
        scaled.column_mut(i).scale_mut(1.0 / c);
    }
    // the polynomial kernel is removed exactly rather than left to the rank test
    let poly = polynomial_columns(&breaks, n, &col_scale);
    let mut aug = DMatrix::<f64>::zeros(unknowns, n + unknowns);
    aug.columns_mut(0, n).copy_from(&poly);
    aug.columns_mut(n, unknowns).fill_with_identity();
    let q = aug.qr().q();
    let needed = unknowns - n;
    let complement = q.columns(n, needed).into_owned();
    let reduced = &scaled * &complement;
    let sv = reduced.clone().singular_values();
    let smax = sv.max();
    let rank = sv.iter().filter(|&&s| s > RANK_TOL * smax).count();
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let condition = if needed == 0 { 1.0 } else { smax / smin };
    if rank < needed {
        return Err(Error::Reconstruction {
            message: format!(
                "rank {rank} of {needed} non-polynomial unknowns with {m} test functions"
            ),
            condition,
        });
    }
    // Tikhonov least squares as the QR solve of [A; λI] y = [b; 0]
    let lam = TIKHONOV * smax;
    let mut stacked = DMatrix::<f64>::zeros(m + needed, needed);
    stacked.rows_mut(0, m).copy_from(&reduced);
    for i in 0..needed {
        stacked[(m + i, i)] = lam;
    }
    let mut target = DVector::<f64>::zeros(m + needed);
    target.rows_mut(0, m).copy_from(&rhs);
    let qr = stacked.qr();
    let y = qr
        .r()
        .solve_upper_triangular(&(qr.q().transpose() * target))
        .ok_or_else(|| Error::Reconstruction {
            message: "singular triangular factor".into(),
            condition,
        })?;
    let mut coef = &complement * y;
    for (x, c) in coef.iter_mut().zip(&col_scale) {
        *x /= c;
    }
    let fit_residual = (&mat * &coef - &rhs).amax();
    let coeffs: Vec<Vec<f64>> = coef.as_slice().chunks(n).map(|c| c.to_vec()).collect();
    let raw = SpectralShiftFunction::assemble(
        n,
        PiecewisePolynomial::new(breaks, coeffs),
        grid_size,
        Gauge::None,
        Provenance::Reconstructed,
        eig,
    );
    let mut eta = raw.gauge_projected();
    let held_out_residual = family
        .held_out
        .par_iter()
        .map(|f| {
            let integral = eta.pair(f, n)?.re;
            let t = remainder_trace_with(f, h0, &h, v, n)?.re;
            let sup = f.sup_norm(n)?;
            Ok(if sup > 0.0 {
                (integral - t).abs() / sup
            } else {
                (integral - t).abs()
            })
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let gauge_residuals = eta.gauge_residuals();
    eta.diagnostics = Some(ReconstructionDiagnostics {
        unknowns,
        members: m,
        rank,
        condition,
        tikhonov: lam,
        fit_residual,
        held_out_residual,
        max_imaginary,
        gauge_residuals,
    });
    Ok(eta)
}
