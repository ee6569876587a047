//! Named function fixtures and combinators.

use std::fmt;
use std::sync::Arc;

use super::{BumpFunction, ClassTag, Envelope, ScalarFn, ScalarFunction};
use crate::error::{Error, Result};
use crate::C64;

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `j!/(j−k)!`.
pub(crate) fn falling(j: usize, k: usize) -> f64 {
    if k > j {
        0.0
    } else {
        (j - k + 1..=j).fold(1.0, |acc, m| acc * m as f64)
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub(crate) struct Closure {
    name: String,
    depth: Option<usize>,
    f: Box<dyn Fn(usize, f64) -> C64 + Send + Sync>,
}

impl Closure {
    pub(crate) fn new(
        name: String,
        depth: Option<usize>,
        f: impl Fn(usize, f64) -> C64 + Send + Sync + 'static,
    ) -> Self {
        Closure {
            name,
            depth,
            f: Box::new(f),
        }
    }
}

impl fmt::Debug for Closure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Closure({})", self.name)
    }
}

impl ScalarFn for Closure {
    fn name(&self) -> String {
        self.name.clone()
    }
    fn depth(&self) -> Option<usize> {
        self.depth
    }
    fn eval(&self, k: usize, x: f64) -> C64 {
        (self.f)(k, x)
    }
    fn is_real(&self) -> bool {
        false
    }
}

/// `x ↦ f(x)·(x − i)^p`, differentiated by Leibniz.
#[derive(Debug)]
pub(crate) struct MulU {
    pub(crate) inner: Arc<dyn ScalarFn>,
    pub(crate) power: i32,
}

impl ScalarFn for MulU {
    fn name(&self) -> String {
        format!("{}·u^{}", self.inner.name(), self.power)
    }
    fn depth(&self) -> Option<usize> {
        self.inner.depth()
    }
    fn eval(&self, k: usize, x: f64) -> C64 {
        let u = C64::new(x, -1.0);
        let mut acc = C64::new(0.0, 0.0);
        let mut coef = 1.0; // p(p−1)…(p−j+1)
        for j in 0..=k {
            if coef == 0.0 {
                break;
            }
            acc +=
                self.inner.eval(k - j, x) * u.powi(self.power - j as i32) * (binomial(k, j) * coef);
            coef *= (self.power - j as i32) as f64;
        }
        acc
    }
    fn support(&self) -> Option<(f64, f64)> {
        self.inner.support()
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.inner.breakpoints()
    }
    fn envelope(&self) -> Option<Envelope> {
        match self.inner.envelope() {
            Some(Envelope::Power { power }) => Some(Envelope::Power {
                power: power - self.power as f64,
            }),
            e => e,
        }
    }
    fn is_real(&self) -> bool {
        self.power == 0 && self.inner.is_real()
    }
}

#[derive(Debug)]
pub(crate) struct Scaled {
    pub(crate) inner: Arc<dyn ScalarFn>,
    pub(crate) factor: f64,
}

impl ScalarFn for Scaled {
    fn name(&self) -> String {
        format!("{}·{}", self.factor, self.inner.name())
    }
    fn depth(&self) -> Option<usize> {
        self.inner.depth()
    }
    fn eval(&self, k: usize, x: f64) -> C64 {
        self.inner.eval(k, x) * self.factor
    }
    fn support(&self) -> Option<(f64, f64)> {
        self.inner.support()
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.inner.breakpoints()
    }
    fn envelope(&self) -> Option<Envelope> {
        self.inner.envelope()
    }
    fn is_real(&self) -> bool {
        self.inner.is_real()
    }
}

#[derive(Debug)]
pub(crate) struct Derived {
    pub(crate) inner: Arc<dyn ScalarFn>,
    pub(crate) order: usize,
}

impl ScalarFn for Derived {
    fn name(&self) -> String {
        format!("{}^({})", self.inner.name(), self.order)
    }
    fn depth(&self) -> Option<usize> {
        self.inner.depth().map(|d| d - self.order)
    }
    fn eval(&self, k: usize, x: f64) -> C64 {
        self.inner.eval(k + self.order, x)
    }
    fn support(&self) -> Option<(f64, f64)> {
        self.inner.support()
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.inner.breakpoints()
    }
    fn envelope(&self) -> Option<Envelope> {
        match self.inner.envelope() {
            Some(Envelope::Power { power }) => Some(Envelope::Power {
                power: power + self.order as f64,
            }),
            e => e,
        }
    }
    fn is_real(&self) -> bool {
        self.inner.is_real()
    }
}

/// `Σ c_j (x − center)^j`.
#[derive(Debug, Clone)]
pub struct Polynomial {
    pub coeffs: Vec<f64>,
    pub center: f64,
}

impl Polynomial {
    fn eval_real(&self, k: usize, x: f64) -> f64 {
        let t = x - self.center;
        self.coeffs
            .iter()
            .enumerate()
            .skip(k)
            .rev()
            .fold(0.0, |acc, (j, &c)| acc * t + c * falling(j, k))
    }
}

impl ScalarFn for Polynomial {
    fn name(&self) -> String {
        if self.center == 0.0 {
            format!("poly{:?}", self.coeffs)
        } else {
            format!("poly{:?}@{}", self.coeffs, self.center)
        }
    }
    fn depth(&self) -> Option<usize> {
        None
    }
    fn eval(&self, k: usize, x: f64) -> C64 {
        re(self.eval_real(k, x))
    }
}

#[derive(Debug)]
struct Exp;

impl ScalarFn for Exp {
    fn name(&self) -> String {
        "exp".into()
    }
    fn depth(&self) -> Option<usize> {
        None
    }
    fn eval(&self, _k: usize, x: f64) -> C64 {
        re(x.exp())
    }
}

#[derive(Debug)]
struct Sin;

impl ScalarFn for Sin {
    fn name(&self) -> String {
        "sin".into()
    }
    fn depth(&self) -> Option<usize> {
        None
    }
    fn eval(&self, k: usize, x: f64) -> C64 {
        re(match k % 4 {
            0 => x.sin(),
            1 => x.cos(),
            2 => -x.sin(),
            _ => -x.cos(),
        })
    }
}

/// `exp(−(x−μ)²/(2σ²))`.
#[derive(Debug)]
struct Gaussian {
    mu: f64,
    sigma: f64,
}

impl ScalarFn for Gaussian {
    fn name(&self) -> String {
        format!("gaussian({},{})", self.mu, self.sigma)
    }
    fn depth(&self) -> Option<usize> {
        None
    }
    fn eval(&self, k: usize, x: f64) -> C64 {
        // d^k/dx^k e^{-z²/2} = (−1/σ)^k He_k(z) e^{-z²/2}
        let z = (x - self.mu) / self.sigma;
        let (mut h0, mut h1) = (1.0, z);
        let he = if k == 0 {
            1.0
        } else {
            for m in 1..k {
                let h2 = z * h1 - m as f64 * h0;
                h0 = h1;
                h1 = h2;
            }
            h1
        };
        re((-1.0 / self.sigma).powi(k as i32) * he * (-0.5 * z * z).exp())
    }
    fn envelope(&self) -> Option<Envelope> {
        Some(Envelope::Rapid {
            center: self.mu,
            radius: 12.0 * self.sigma,
        })
    }
}

/// `(x − i)^{-1}`.
#[derive(Debug)]
struct InvU;

impl ScalarFn for InvU {
    fn name(&self) -> String {
        "inv_u".into()
    }
    fn depth(&self) -> Option<usize> {
        None
    }
    fn eval(&self, k: usize, x: f64) -> C64 {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        C64::new(x, -1.0).powi(-(k as i32) - 1) * (sign * falling(k, k))
    }
    fn envelope(&self) -> Option<Envelope> {
        Some(Envelope::Power { power: 1.0 })
    }
    fn is_real(&self) -> bool {
        false
    }
}

/// `s^n (s−1)^n` with `s = (x−lo)/(hi−lo)` on `[lo, hi]`, zero outside.
#[derive(Debug)]
struct TruncatedPower {
    n: usize,
    lo: f64,
    hi: f64,
    poly: Polynomial,
}

impl ScalarFn for TruncatedPower {
    fn name(&self) -> String {
        format!("xn_xm1n({},[{},{}])", self.n, self.lo, self.hi)
    }
    fn depth(&self) -> Option<usize> {
        None
    }
    fn eval(&self, k: usize, x: f64) -> C64 {
        if x < self.lo || x >= self.hi {
            return re(0.0);
        }
        let l = self.hi - self.lo;
        re(self.poly.eval_real(k, (x - self.lo) / l) / l.powi(k as i32))
    }
    fn support(&self) -> Option<(f64, f64)> {
        Some((self.lo, self.hi))
    }
    fn breakpoints(&self) -> Vec<f64> {
        vec![self.lo, self.hi]
    }
}

/// Single B-spline basis function of degree `degree` over `degree + 2` knots.
#[derive(Debug, Clone)]
pub struct BSpline {
    knots: Vec<f64>,
    degree: usize,
}

fn cox_de_boor(t: &[f64], p: usize, x: f64) -> f64 {
    if p == 0 {
        return if t[0] <= x && x < t[1] { 1.0 } else { 0.0 };
    }
    let mut v = 0.0;
    if t[p] > t[0] {
        v += (x - t[0]) / (t[p] - t[0]) * cox_de_boor(&t[..p + 1], p - 1, x);
    }
    if t[p + 1] > t[1] {
        v += (t[p + 1] - x) / (t[p + 1] - t[1]) * cox_de_boor(&t[1..], p - 1, x);
    }
    v
}

fn bspline_derivative(t: &[f64], p: usize, k: usize, x: f64) -> f64 {
    if k == 0 {
        return cox_de_boor(t, p, x);
    }
    if p == 0 || k > p {
        return 0.0;
    }
    let mut v = 0.0;
    if t[p] > t[0] {
        v += bspline_derivative(&t[..p + 1], p - 1, k - 1, x) / (t[p] - t[0]);
    }
    if t[p + 1] > t[1] {
        v -= bspline_derivative(&t[1..], p - 1, k - 1, x) / (t[p + 1] - t[1]);
    }
    p as f64 * v
}

impl BSpline {
    pub fn new(knots: &[f64], degree: usize) -> Result<Self> {
        if knots.len() != degree + 2 {
            return Err(Error::domain(format!(
                "degree {degree} B-spline needs {} knots",
                degree + 2
            )));
        }
        if knots.windows(2).any(|w| !(w[1] >= w[0])) || !(knots[degree + 1] > knots[0]) {
            return Err(Error::domain(
                "B-spline knots must be nondecreasing with positive span",
            ));
        }
        Ok(BSpline {
            knots: knots.to_vec(),
            degree,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Largest knot multiplicity.
    pub fn max_multiplicity(&self) -> usize {
        let mut best = 1;
        let mut run = 1;
        for w in self.knots.windows(2) {
            run = if w[1] == w[0] { run + 1 } else { 1 };
            best = best.max(run);
        }
        best
    }

    pub fn eval_real(&self, k: usize, x: f64) -> f64 {
        bspline_derivative(&self.knots, self.degree, k, x)
    }
}

impl ScalarFn for BSpline {
    fn name(&self) -> String {
        format!("bspline{}{:?}", self.degree, self.knots)
    }
    fn depth(&self) -> Option<usize> {
        None
    }
    fn eval(&self, k: usize, x: f64) -> C64 {
        re(self.eval_real(k, x))
    }
    fn support(&self) -> Option<(f64, f64)> {
        Some((self.knots[0], self.knots[self.degree + 1]))
    }
    fn breakpoints(&self) -> Vec<f64> {
        let mut b = self.knots.clone();
        b.dedup();
        b
    }
}

pub fn polynomial(coeffs: &[f64]) -> ScalarFunction {
    ScalarFunction::new(Polynomial {
        coeffs: coeffs.to_vec(),
        center: 0.0,
    })
}

/// `(x − center)^m`.
pub fn shifted_monomial(center: f64, m: usize) -> ScalarFunction {
    let mut coeffs = vec![0.0; m + 1];
    coeffs[m] = 1.0;
    ScalarFunction::new(Polynomial { coeffs, center })
}

#[derive(Debug)]
struct Zero;

impl ScalarFn for Zero {
    fn name(&self) -> String {
        "zero".into()
    }
    fn depth(&self) -> Option<usize> {
        None
    }
    fn eval(&self, _k: usize, _x: f64) -> C64 {
        re(0.0)
    }
    fn support(&self) -> Option<(f64, f64)> {
        Some((0.0, 0.0))
    }
}

/// The zero function, supported at a point and tagged with every class.
pub fn zero() -> ScalarFunction {
    ScalarFunction::new(Zero).with_tags([
        ClassTag::Dc(usize::MAX),
        ClassTag::Cc(usize::MAX),
        ClassTag::Fc(usize::MAX),
        ClassTag::W(usize::MAX),
        ClassTag::H(usize::MAX),
    ])
}

pub fn exp() -> ScalarFunction {
    ScalarFunction::new(Exp)
}

pub fn sin() -> ScalarFunction {
    ScalarFunction::new(Sin)
}

pub fn gaussian(mu: f64, sigma: f64) -> ScalarFunction {
    ScalarFunction::new(Gaussian { mu, sigma }).with_tags([ClassTag::W(8), ClassTag::H(8)])
}

/// `g(x) = (x − i)^{-1}`.
pub fn inv_u() -> ScalarFunction {
    ScalarFunction::new(InvU).with_tags([ClassTag::W(8)])
}

/// `x^n (x−1)^n` on `[0, 1]`, zero elsewhere.
pub fn xn_xm1n(n: usize) -> ScalarFunction {
    xn_xm1n_on(n, 0.0, 1.0)
}

/// `x^n (x−1)^n` affinely moved onto `[lo, hi]`.
pub fn xn_xm1n_on(n: usize, lo: f64, hi: f64) -> ScalarFunction {
    let mut coeffs = vec![0.0; 2 * n + 1];
    for j in 0..=n {
        let sign = if (n - j) % 2 == 0 { 1.0 } else { -1.0 };
        coeffs[n + j] = sign * binomial(n, j);
    }
    let mut f = ScalarFunction::new(TruncatedPower {
        n,
        lo,
        hi,
        poly: Polynomial {
            coeffs,
            center: 0.0,
        },
    })
    .with_tags([ClassTag::Fc(n)]);
    if n >= 1 {
        f = f.with_tags([ClassTag::Cc(n - 1), ClassTag::Dc(n - 1)]);
    }
    f
}

/// B-spline basis function; tags reflect the continuity allowed by the
/// largest knot multiplicity.
pub fn bspline(knots: &[f64], degree: usize) -> Result<ScalarFunction> {
    let b = BSpline::new(knots, degree)?;
    let smooth = (degree + 1).saturating_sub(b.max_multiplicity());
    let mut f = ScalarFunction::new(b).with_tags([ClassTag::Fc(smooth)]);
    if smooth >= 1 {
        f = f.with_tags([ClassTag::Cc(smooth - 1), ClassTag::Dc(smooth - 1)]);
    }
    Ok(f)
}

/// Smooth plateau bump equal to one on `[a, b]` and supported in
/// `(a−ε, b+ε)`, with derivatives to order 8.
pub fn bump(a: f64, b: f64, eps: f64) -> Result<ScalarFunction> {
    bump_with_depth(a, b, eps, BumpFunction::DEFAULT_DEPTH)
}

pub fn bump_with_depth(a: f64, b: f64, eps: f64, depth: usize) -> Result<ScalarFunction> {
    Ok(
        ScalarFunction::new(BumpFunction::new(a, b, eps, depth)?).with_tags([
            ClassTag::Cc(depth),
            ClassTag::Dc(depth),
            ClassTag::Fc(depth),
        ]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combinatorics() {
        assert_eq!(falling(5, 2), 20.0);
        assert_eq!(falling(3, 4), 0.0);
        assert_eq!(falling(4, 0), 1.0);
        assert_eq!(binomial(6, 3), 20.0);
    }

    #[test]
    fn xn_xm1n_matches_direct_formula() {
        let f = xn_xm1n(3);
        for &x in &[0.1f64, 0.5, 0.77] {
            let direct = x.powi(3) * (x - 1.0f64).powi(3);
            assert!((f.value(x).unwrap().re - direct).abs() < 1e-15);
        }
        assert_eq!(f.value(-0.1).unwrap().re, 0.0);
        assert_eq!(f.value(1.5).unwrap().re, 0.0);
        // third derivative at 0+ is 3!·(−1)^3
        assert!((f.derivative(3, 0.0).unwrap().re + 6.0).abs() < 1e-12);
    }

    #[test]
    fn cardinal_bsplines_sum_to_one() {
        let b = bspline(&[0.0, 1.0, 2.0, 3.0, 4.0], 3).unwrap();
        assert!((b.value(2.0).unwrap().re - 2.0 / 3.0).abs() < 1e-15);
        for &x in &[0.1, 0.5, 0.93] {
            let total: f64 = (0..4).map(|s| b.value(x + s as f64).unwrap().re).sum();
            assert!((total - 1.0).abs() < 1e-14);
        }
        assert!(b.tags().contains(&ClassTag::Cc(2)));
    }

    #[test]
    fn inv_u_derivatives() {
        let g = inv_u();
        let x = 0.7;
        let u = C64::new(x, -1.0);
        assert!((g.derivative(2, x).unwrap() - 2.0 / (u * u * u)).norm() < 1e-14);
        let gu = g.times_u_power(1);
        assert!((gu.value(x).unwrap() - 1.0).norm() < 1e-14);
        assert!(gu.derivative(1, x).unwrap().norm() < 1e-14);
    }
}
