//! Spectral shift functions: the exact first-order density from counting
//! functions, reconstruction of higher orders from the trace formula, bound
//! and growth checks, and the resolvent-expansion identities.

mod identities;
mod piecewise;
mod reconstruct;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar_functions::fixtures::binomial;
use crate::scalar_functions::quadrature::gauss_legendre;
use crate::scalar_functions::ScalarFunction;
use crate::spectral_action::remainder_trace;
use crate::trace_algebra::{AlgebraElement, Interval, SelfAdjointOperator};
use crate::C64;

pub use identities::{
    divided_difference_expansion_defect, first_order_resolvent_bound, first_order_resolvent_defect,
    resolvent_expansion_defect, IdentityDefect, ResolventBoundReport, MAX_EXPANSION_ORDER,
};
pub use piecewise::PiecewisePolynomial;
pub use reconstruct::{ssf_reconstruct, ReconstructionDiagnostics, TestFunctionFamily};

use piecewise::{horner, integrate_on_union, legendre_all, legendre_monomials};

pub const DEFAULT_GRID: usize = 512;

/// Offset applied to grid points that land on an eigenvalue.
const GRID_JITTER: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    CountingExact,
    Reconstructed,
}

/// How the polynomial ambiguity of `η_n` was resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Gauge {
    /// No ambiguity (first order) or no projection applied.
    None,
    /// `L²`-orthogonal to polynomials of degree `< n` on the window.
    OrthogonalPolynomials,
    /// The representative vanishing left of the spectrum.
    Compact,
}

/// Density `η_n` on a window, stored exactly as a piecewise polynomial and
/// sampled on a grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralShiftFunction {
    pub order: usize,
    pub window: (f64, f64),
    pub density: PiecewisePolynomial,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub gauge: Gauge,
    /// `∫ |η|` over the window.
    pub certified_l1: f64,
    pub provenance: Provenance,
    pub diagnostics: Option<ReconstructionDiagnostics>,
    #[serde(skip)]
    eigenvalues: Vec<f64>,
}

/// Uniform grid on `[lo, hi]` nudged off the listed eigenvalues.
fn jittered_grid(lo: f64, hi: f64, size: usize, eigenvalues: &[f64]) -> Vec<f64> {
    let size = size.max(2);
    let h = (hi - lo) / (size - 1) as f64;
    (0..size)
        .map(|i| {
            let x = lo + i as f64 * h;
            match eigenvalues.iter().find(|&&e| (x - e).abs() < GRID_JITTER) {
                Some(&e) if e + GRID_JITTER <= hi => e + GRID_JITTER,
                Some(&e) => e - GRID_JITTER,
                None => x,
            }
        })
        .collect()
}

fn all_eigenvalues(ops: &[&SelfAdjointOperator]) -> Vec<f64> {
    let mut e: Vec<f64> = ops
        .iter()
        .flat_map(|o| o.eigenvalues().iter().flatten().copied())
        .collect();
    e.sort_by(f64::total_cmp);
    e
}

impl SpectralShiftFunction {
    fn assemble(
        order: usize,
        density: PiecewisePolynomial,
        grid_size: usize,
        gauge: Gauge,
        provenance: Provenance,
        eigenvalues: Vec<f64>,
    ) -> Self {
        let window = density.window();
        let grid = jittered_grid(window.0, window.1, grid_size, &eigenvalues);
        let values = grid.iter().map(|&x| density.eval(x)).collect();
        let certified_l1 = density.l1_norm();
        SpectralShiftFunction {
            order,
            window,
            density,
            grid,
            values,
            gauge,
            certified_l1,
            provenance,
            diagnostics: None,
            eigenvalues,
        }
    }

    /// Density given directly, e.g. an analytic kernel to compare against.
    pub fn from_density(order: usize, density: PiecewisePolynomial, grid_size: usize) -> Self {
        Self::assemble(
            order,
            density,
            grid_size,
            Gauge::None,
            Provenance::Reconstructed,
            Vec::new(),
        )
    }

    fn with_density(&self, density: PiecewisePolynomial, gauge: Gauge) -> Self {
        let mut out = Self::assemble(
            self.order,
            density,
            self.grid.len(),
            gauge,
            self.provenance,
            self.eigenvalues.clone(),
        );
        out.diagnostics = self.diagnostics.clone();
        out
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.density.eval(x)
    }

    /// `∫ f^{(k)} η` over the window.
    pub fn pair(&self, f: &ScalarFunction, k: usize) -> Result<C64> {
        f.require_depth(k)?;
        let (lo, hi) = self.window;
        let mut extra = f.breakpoints();
        if let Some((a, b)) = f.support() {
            extra.extend([a, b]);
        }
        extra.retain(|&x| x > lo && x < hi);
        let part = |pick: fn(C64) -> f64| {
            self.density
                .integrate_against(|x| f.derivative(k, x).map_or(f64::NAN, pick), &extra)
        };
        let re = part(|z| z.re);
        let im = if f.is_real() { 0.0 } else { part(|z| z.im) };
        if re.is_nan() || im.is_nan() {
            return Err(Error::domain(format!(
                "{}^({k}) undefined on the window",
                f.name()
            )));
        }
        Ok(C64::new(re, im))
    }

    /// `η + p` with `p` given by ascending monomial coefficients.
    pub fn plus_polynomial(&self, coeffs: &[f64]) -> Self {
        let mut d = self.density.clone();
        d.add_polynomial(|x| horner(coeffs, x), coeffs.len().saturating_sub(1));
        self.with_density(d, Gauge::None)
    }

    /// Removes the `L²(window)` projection onto polynomials of degree `< n`.
    pub fn gauge_projected(&self) -> Self {
        let n = self.order;
        let (a, b) = self.window;
        let to_t = |x: f64| (2.0 * x - a - b) / (b - a);
        let g: Vec<f64> = (0..n)
            .map(|q| {
                (2 * q + 1) as f64 / (b - a)
                    * self
                        .density
                        .integrate_against(|x| legendre_all(n - 1, to_t(x))[q], &[])
            })
            .collect();
        let mut d = self.density.clone();
        d.add_polynomial(
            |x| {
                -legendre_all(n.saturating_sub(1), to_t(x))
                    .iter()
                    .zip(&g)
                    .map(|(p, c)| p * c)
                    .sum::<f64>()
            },
            n.saturating_sub(1),
        );
        self.with_density(d, Gauge::OrthogonalPolynomials)
    }

    /// Subtracts the polynomial carried by the leftmost piece, giving the
    /// representative that vanishes outside the spectral hull when the
    /// window contains it.
    pub fn compact_representative(&self) -> Self {
        let left = self.density.clone();
        let mut d = self.density.clone();
        d.add_polynomial(|x| -left.eval_piece(0, x), self.density.degree());
        self.with_density(d, Gauge::Compact)
    }

    /// `∫ η λ^j` for `j < n`.
    pub fn gauge_residuals(&self) -> Vec<f64> {
        (0..self.order)
            .map(|j| self.density.integrate_against(|x| x.powi(j as i32), &[]))
            .collect()
    }

    /// `sup |η|` on the rightmost piece; zero for a compact representative
    /// whose window contains the spectra.
    pub fn tail_defect(&self) -> f64 {
        let s = self.density.pieces() - 1;
        let (lo, hi) = (self.density.breaks()[s], self.density.breaks()[s + 1]);
        (0..=16)
            .map(|i| {
                self.density
                    .eval_piece(s, lo + (hi - lo) * i as f64 / 16.0)
                    .abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn l2_norm(&self) -> f64 {
        integrate_on_union(&[self.density.breaks()], 8, |x| self.eval(x).powi(2)).sqrt()
    }
}

/// `η₁(λ) = τ(E_{H₀}([a,λ))) − τ(E_{H₀+V}([a,λ)))` as an exact step
/// function on `[a, b]`.
pub fn ssf_first_order(
    h0: &SelfAdjointOperator,
    v: &AlgebraElement,
    a: f64,
    b: f64,
) -> Result<SpectralShiftFunction> {
    ssf_first_order_on_grid(h0, v, a, b, DEFAULT_GRID)
}

pub fn ssf_first_order_on_grid(
    h0: &SelfAdjointOperator,
    v: &AlgebraElement,
    a: f64,
    b: f64,
    grid_size: usize,
) -> Result<SpectralShiftFunction> {
    if !(a < b) {
        return Err(Error::domain(format!("need a < b, got [{a}, {b}]")));
    }
    let h = SelfAdjointOperator::new(h0.element() + v)?;
    let eig = all_eigenvalues(&[h0, &h]);
    let mut breaks = vec![a];
    breaks.extend(eig.iter().copied().filter(|&e| e > a && e < b));
    breaks.push(b);
    breaks.dedup();
    let coeffs = breaks
        .windows(2)
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            vec![h0.counting(Interval::half_open(a, mid)) - h.counting(Interval::half_open(a, mid))]
        })
        .collect();
    Ok(SpectralShiftFunction::assemble(
        1,
        PiecewisePolynomial::new(breaks, coeffs),
        grid_size,
        Gauge::None,
        Provenance::CountingExact,
        eig,
    ))
}

/// `∫ f^{(n)} η` against `τ(𝓡_{H₀,f,n}(V))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceFormulaCheck {
    pub integral: f64,
    pub remainder_trace: f64,
    pub residual: f64,
    /// `residual / ‖f^{(n)}‖_∞`.
    pub normalized: f64,
}

pub fn trace_formula_residual(
    eta: &SpectralShiftFunction,
    f: &ScalarFunction,
    h0: &SelfAdjointOperator,
    v: &AlgebraElement,
) -> Result<TraceFormulaCheck> {
    let n = eta.order;
    let integral = eta.pair(f, n)?.re;
    let remainder_trace = remainder_trace(f, h0, v, n)?.re;
    let residual = (integral - remainder_trace).abs();
    let sup = f.sup_norm(n)?;
    let normalized = if sup == 0.0 { residual } else { residual / sup };
    Ok(TraceFormulaCheck {
        integral,
        remainder_trace,
        residual,
        normalized,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaBoundReport {
    pub order: usize,
    pub l1: f64,
    pub d: f64,
    /// True for `n = 1`, where `D` holds no empirical constant.
    pub explicit: bool,
    pub holds: bool,
}

/// `∫_a^b |η| ≤ D`.
pub fn check_eta_l1_bound(eta: &SpectralShiftFunction, d: f64) -> EtaBoundReport {
    let l1 = eta.certified_l1;
    EtaBoundReport {
        order: eta.order,
        l1,
        d,
        explicit: eta.order == 1,
        holds: l1 <= d,
    }
}

/// Window `[−R, R]` with both spectra inside `[−R/2, R/2]`.
pub fn real_line_window(h0: &SelfAdjointOperator, v: &AlgebraElement) -> Result<(f64, f64)> {
    let h = SelfAdjointOperator::new(h0.element() + v)?;
    let m = all_eigenvalues(&[h0, &h])
        .iter()
        .fold(0.0f64, |m, e| m.max(e.abs()));
    let r = (2.0 * m).max(1.0);
    Ok((-r, r))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub order: usize,
    /// `sup_x |η(x)| / ((2+‖V‖)‖V‖^{n−1}‖(H₀−iI)^{−1}‖ₙⁿ(1+|x|)ⁿ)`.
    pub k_empirical: f64,
    pub argmax: f64,
    pub v_norm: f64,
    /// `‖(H₀−iI)^{−1}‖ₙⁿ`.
    pub resolvent_power_norm: f64,
    /// `(x, |η(x)|, K (2+‖V‖)‖V‖^{n−1}‖(H₀−iI)^{−1}‖ₙⁿ (1+|x|)ⁿ)` on the grid.
    pub samples: Vec<(f64, f64, f64)>,
}

/// Empirical constant of the polynomial growth envelope of `η_n`.
pub fn growth_envelope_constant(
    eta: &SpectralShiftFunction,
    h0: &SelfAdjointOperator,
    v: &AlgebraElement,
    n: usize,
) -> Result<GrowthReport> {
    if n == 0 {
        return Err(Error::domain("order must be at least 1"));
    }
    let v_norm = v.operator_norm();
    let resolvent_power_norm: f64 = h0
        .weighted_spectrum()
        .iter()
        .map(|&(l, w)| w * (1.0 + l * l).powf(-(n as f64) / 2.0))
        .sum();
    let scale = (2.0 + v_norm) * v_norm.powi(n as i32 - 1) * resolvent_power_norm;
    let envelope = |x: f64| scale * (1.0 + x.abs()).powi(n as i32);
    let d = &eta.density;
    let mut best = (0.0f64, eta.window.0);
    for s in 0..d.pieces() {
        let (lo, hi) = (d.breaks()[s], d.breaks()[s + 1]);
        for i in 0..=32 {
            let t = (i as f64 / 32.0).clamp(1e-12, 1.0 - 1e-12);
            let x = lo + (hi - lo) * t;
            let r = d.eval_piece(s, x).abs() / envelope(x);
            if r.is_finite() && r > best.0 {
                best = (r, x);
            }
        }
    }
    let k_empirical = best.0;
    let samples = eta
        .grid
        .iter()
        .map(|&x| (x, eta.eval(x).abs(), k_empirical * envelope(x)))
        .collect();
    Ok(GrowthReport {
        order: n,
        k_empirical,
        argmax: best.1,
        v_norm,
        resolvent_power_norm,
        samples,
    })
}

/// Degree `< n` polynomial fitted to `η_A − η_B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    /// Ascending monomial coefficients in `λ`.
    pub polynomial: Vec<f64>,
    /// `L²` norm of the fit residual.
    pub residual: f64,
    /// `residual / (‖η_A‖₂ + ‖η_B‖₂)`.
    pub relative: f64,
    pub holds: bool,
}

pub const UNIQUENESS_TOL: f64 = 1e-6;

/// Least-squares fit of `η_A − η_B` by a polynomial of degree at most `n−1`.
pub fn uniqueness_gauge_check(
    eta_a: &SpectralShiftFunction,
    eta_b: &SpectralShiftFunction,
    n: usize,
) -> Result<UniquenessReport> {
    if eta_a.window != eta_b.window {
        return Err(Error::domain("densities live on different windows"));
    }
    if n == 0 {
        return Err(Error::domain("order must be at least 1"));
    }
    let (a, b) = eta_a.window;
    let to_t = |x: f64| (2.0 * x - a - b) / (b - a);
    let diff = |x: f64| eta_a.eval(x) - eta_b.eval(x);
    let breaks = [eta_a.density.breaks(), eta_b.density.breaks()];
    let pts = eta_a.density.degree().max(eta_b.density.degree()) + n + 2;
    // Legendre coefficients on the window
    let g: Vec<f64> = (0..n)
        .map(|q| {
            (2 * q + 1) as f64 / (b - a)
                * integrate_on_union(&breaks, pts, |x| diff(x) * legendre_all(n - 1, to_t(x))[q])
        })
        .collect();
    let fit = |x: f64| {
        legendre_all(n - 1, to_t(x))
            .iter()
            .zip(&g)
            .map(|(p, c)| p * c)
            .sum::<f64>()
    };
    let residual = integrate_on_union(&breaks, pts, |x| (diff(x) - fit(x)).powi(2)).sqrt();
    // monomials in t, then t = αx + β
    let mono_t: Vec<f64> = {
        let m = legendre_monomials(n - 1);
        (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&q| i < m[q].len())
                    .map(|q| g[q] * m[q][i])
                    .sum()
            })
            .collect()
    };
    let (alpha, beta) = (2.0 / (b - a), -(a + b) / (b - a));
    let mut polynomial = vec![0.0; n];
    for (i, c) in mono_t.iter().enumerate() {
        // c (αx + β)^i
        for j in 0..=i {
            polynomial[j] += c * binomial(i, j) * alpha.powi(j as i32) * beta.powi((i - j) as i32);
        }
    }
    let denom = eta_a.l2_norm() + eta_b.l2_norm();
    let relative = if denom == 0.0 {
        residual
    } else {
        residual / denom
    };
    Ok(UniquenessReport {
        polynomial,
        residual,
        relative,
        holds: relative <= UNIQUENESS_TOL,
    })
}

/// Gauss–Legendre rule with enough nodes to integrate the product of a
/// degree-`a` and a degree-`b` polynomial exactly.
pub(crate) fn product_rule(a: usize, b: usize) -> (Vec<f64>, Vec<f64>) {
    gauss_legendre((a + b) / 2 + 1)
}
