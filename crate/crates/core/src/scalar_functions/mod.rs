//! Scalar calculus: functions carrying a derivative stack, divided
//! differences with confluent nodes, the smooth plateau bump, Fourier `L¹`
//! functionals and function-class witnesses.

mod bump;
mod classes;
mod divided;
pub mod fixtures;
mod fourier;
pub mod quadrature;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

pub use bump::BumpFunction;
pub use classes::{
    check_derivative_interpolation, class_witness, ConditionReport, DerivativeInterpolationReport,
    WitnessReport,
};
pub use divided::{
    divided_difference, divided_difference_table, hermite_divided_difference, max_multiplicity,
    DividedDifferenceTable, CONFLUENCE_TOL, NEAR_TOL,
};
pub use fourier::{fourier_l1, FourierL1};

/// Decay of a function with noncompact support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Envelope {
    /// `|f^{(k)}(x)| ≲ (1+|x|)^{-(power+k)}` for large `|x|`.
    Power { power: f64 },
    /// Negligible (below `1e-16` relative) outside `center ± radius`.
    Rapid { center: f64, radius: f64 },
}

/// Function classes used in the trace formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ClassTag {
    /// `n`-times differentiable, compactly supported.
    Dc(usize),
    /// `C^{n-1}` compactly supported with `f^{(n)} ∈ L²`.
    Fc(usize),
    /// `C^n` compactly supported.
    Cc(usize),
    /// Weighted `L¹` class with Fourier conditions on `f^{(k)} u^k`, `k ≤ n`.
    W(usize),
    /// Relaxed class with `f^{(k)} u^k, f^{(k)} u^{k+1}` conditions, `k < n`.
    H(usize),
}

impl ClassTag {
    /// Inclusions between the classes.
    pub fn implies(self, other: ClassTag) -> bool {
        use ClassTag::*;
        match (self, other) {
            (Dc(m), Dc(k)) | (Cc(m), Dc(k)) | (Cc(m), Cc(k)) | (Cc(m), Fc(k)) | (Fc(m), Fc(k)) => {
                m >= k
            }
            (Fc(m), Dc(k)) | (Fc(m), Cc(k)) => m > k,
            (Fc(m), H(k)) | (Cc(m), H(k)) | (H(m), H(k)) | (W(m), W(k)) => m >= k,
            (H(m), W(k)) | (Fc(m), W(k)) | (Cc(m), W(k)) => m > k,
            _ => false,
        }
    }
}

impl fmt::Display for ClassTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassTag::Dc(n) => write!(f, "D_c^{n}"),
            ClassTag::Fc(n) => write!(f, "F_c^{n}"),
            ClassTag::Cc(n) => write!(f, "C_c^{n}"),
            ClassTag::W(n) => write!(f, "W_{n}"),
            ClassTag::H(n) => write!(f, "H_{n}"),
        }
    }
}

/// A real-variable function with a stack of derivatives.
///
/// `eval(k, x)` is only called with `k` within [`ScalarFn::depth`]. Piecewise
/// definitions are right-continuous at their breakpoints.
pub trait ScalarFn: Send + Sync + fmt::Debug {
    fn name(&self) -> String;

    /// Highest available derivative order; `None` when unlimited.
    fn depth(&self) -> Option<usize>;

    fn eval(&self, k: usize, x: f64) -> C64;

    /// Closed interval outside which every derivative vanishes.
    fn support(&self) -> Option<(f64, f64)> {
        None
    }

    /// Points where some derivative may jump.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    fn envelope(&self) -> Option<Envelope> {
        None
    }

    fn is_real(&self) -> bool {
        true
    }
}

/// Shared handle to a [`ScalarFn`] with declared class tags and cached
/// sup-norms of its derivatives.
#[derive(Clone)]
pub struct ScalarFunction {
    inner: Arc<dyn ScalarFn>,
    tags: BTreeSet<ClassTag>,
    sup_cache: Arc<Mutex<BTreeMap<usize, f64>>>,
}

impl fmt::Debug for ScalarFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarFunction")
            .field("name", &self.inner.name())
            .field("tags", &self.tags)
            .finish()
    }
}

impl ScalarFunction {
    pub fn new(inner: impl ScalarFn + 'static) -> Self {
        ScalarFunction {
            inner: Arc::new(inner),
            tags: BTreeSet::new(),
            sup_cache: Arc::new(Mutex::new(BTreeMap::new())),
        }
    }

    /// Ad-hoc function from a closure `(k, x) ↦ f^{(k)}(x)`.
    pub fn from_fn(
        name: impl Into<String>,
        depth: Option<usize>,
        f: impl Fn(usize, f64) -> C64 + Send + Sync + 'static,
    ) -> Self {
        Self::new(fixtures::Closure::new(name.into(), depth, f))
    }

    pub fn with_tags(mut self, tags: impl IntoIterator<Item = ClassTag>) -> Self {
        self.tags.extend(tags);
        self
    }

    pub fn tags(&self) -> &BTreeSet<ClassTag> {
        &self.tags
    }

    /// Whether a declared tag implies membership in `tag`.
    pub fn declares(&self, tag: ClassTag) -> bool {
        self.tags.iter().any(|&t| t.implies(tag))
    }

    pub fn name(&self) -> String {
        self.inner.name()
    }

    /// Highest derivative order available (`usize::MAX` when unlimited).
    pub fn depth(&self) -> usize {
        self.inner.depth().unwrap_or(usize::MAX)
    }

    pub fn support(&self) -> Option<(f64, f64)> {
        self.inner.support()
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        self.inner.breakpoints()
    }

    pub fn envelope(&self) -> Option<Envelope> {
        self.inner.envelope()
    }

    pub fn is_real(&self) -> bool {
        self.inner.is_real()
    }

    pub fn inner(&self) -> &Arc<dyn ScalarFn> {
        &self.inner
    }

    pub fn require_depth(&self, k: usize) -> Result<()> {
        if k > self.depth() {
            Err(Error::capability(format!(
                "{} has derivative depth {}, order {k} requested",
                self.name(),
                self.depth()
            )))
        } else {
            Ok(())
        }
    }

    pub fn value(&self, x: f64) -> Result<C64> {
        self.derivative(0, x)
    }

    /// `f^{(k)}(x)`.
    pub fn derivative(&self, k: usize, x: f64) -> Result<C64> {
        self.require_depth(k)?;
        let v = self.inner.eval(k, x);
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(Error::domain(format!(
                "{}^({k}) undefined at {x}",
                self.name()
            )))
        }
    }

    /// Interval carrying the mass of `f` and all derivatives: the support,
    /// or the window of a rapid-decay envelope.
    pub fn effective_window(&self) -> Option<(f64, f64)> {
        if let Some(s) = self.support() {
            return Some(s);
        }
        match self.envelope() {
            Some(Envelope::Rapid { center, radius }) => Some((center - radius, center + radius)),
            _ => None,
        }
    }

    /// `‖f^{(k)}‖_∞`, from a dense grid refined around the maximum.
    pub fn sup_norm(&self, k: usize) -> Result<f64> {
        self.require_depth(k)?;
        if let Some(v) = self.sup_cache.lock().expect("sup cache poisoned").get(&k) {
            return Ok(*v);
        }
        let (lo, hi) = match (self.effective_window(), self.envelope()) {
            (Some(w), _) => w,
            (None, Some(Envelope::Power { .. })) => (-200.0, 200.0),
            _ => {
                return Err(Error::capability(format!(
                    "{}: sup-norm needs a support or decay envelope",
                    self.name()
                )))
            }
        };
        let v = dense_sup(
            |x| self.inner.eval(k, x).norm(),
            lo,
            hi,
            &self.breakpoints(),
        );
        self.sup_cache
            .lock()
            .expect("sup cache poisoned")
            .insert(k, v);
        Ok(v)
    }

    /// `sup_{[lo, hi]} |f^{(k)}|`, uncached.
    pub fn sup_norm_on(&self, k: usize, lo: f64, hi: f64) -> Result<f64> {
        self.require_depth(k)?;
        Ok(dense_sup(
            |x| self.inner.eval(k, x).norm(),
            lo,
            hi,
            &self.breakpoints(),
        ))
    }

    /// `‖f^{(k)}‖_∞` over ℝ when `f` has a window or envelope, otherwise
    /// over `[lo, hi]`.
    pub fn sup_norm_or_on(&self, k: usize, lo: f64, hi: f64) -> Result<f64> {
        match self.sup_norm(k) {
            Err(Error::Capability(_)) => self.sup_norm_on(k, lo, hi),
            r => r,
        }
    }

    /// `f · u^p` with `u(x) = x − i`.
    pub fn times_u_power(&self, p: i32) -> ScalarFunction {
        ScalarFunction::new(fixtures::MulU {
            inner: self.inner.clone(),
            power: p,
        })
    }

    /// `c · f`; declared tags carry over.
    pub fn scaled(&self, c: f64) -> ScalarFunction {
        ScalarFunction::new(fixtures::Scaled {
            inner: self.inner.clone(),
            factor: c,
        })
        .with_tags(self.tags.iter().copied())
    }

    /// `f^{(order)}` as a function in its own right.
    pub fn derived(&self, order: usize) -> Result<ScalarFunction> {
        self.require_depth(order)?;
        Ok(ScalarFunction::new(fixtures::Derived {
            inner: self.inner.clone(),
            order,
        }))
    }
}

/// Grid sup of `g` on `[lo, hi]` with golden-section refinement near the best
/// sample and one-sided probes at breakpoints.
pub(crate) fn dense_sup(g: impl Fn(f64) -> f64, lo: f64, hi: f64, breaks: &[f64]) -> f64 {
    const SAMPLES: usize = 10_000;
    let h = (hi - lo) / SAMPLES as f64;
    let mut best = 0.0f64;
    let mut best_x = lo;
    for i in 0..=SAMPLES {
        let x = lo + i as f64 * h;
        let v = g(x);
        if v > best {
            best = v;
            best_x = x;
        }
    }
    for &b in breaks {
        if b < lo || b > hi {
            continue;
        }
        let d = 1e-12 * (1.0 + b.abs());
        for x in [b - d, b, b + d] {
            let v = g(x);
            if v > best {
                best = v;
                best_x = x;
            }
        }
    }
    // refine on the bracketing cells
    let (mut a, mut b) = ((best_x - h).max(lo), (best_x + h).min(hi));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let x1 = b - phi * (b - a);
        let x2 = a + phi * (b - a);
        let (v1, v2) = (g(x1), g(x2));
        best = best.max(v1).max(v2);
        if v1 >= v2 {
            b = x2;
        } else {
            a = x1;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_shortfall_is_capability_error() {
        let f = fixtures::bspline(&[0.0, 1.0, 2.0, 3.0], 2).unwrap();
        assert!(f.derivative(2, 1.5).is_ok());
        let g = ScalarFunction::from_fn("g", Some(1), |_, _| C64::new(1.0, 0.0));
        assert!(matches!(g.derivative(2, 0.0), Err(Error::Capability(_))));
    }

    #[test]
    fn sup_norm_of_gaussian_derivative() {
        let g = fixtures::gaussian(0.0, 1.0);
        assert!((g.sup_norm(0).unwrap() - 1.0).abs() < 1e-12);
        // max of |x e^{-x²/2}| is e^{-1/2}
        assert!((g.sup_norm(1).unwrap() - (-0.5f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn sup_norm_without_window_fails() {
        assert!(matches!(
            fixtures::exp().sup_norm(0),
            Err(Error::Capability(_))
        ));
    }

    #[test]
    fn derivative_stacks_match_central_differences() {
        let funcs = vec![
            fixtures::gaussian(0.3, 0.8),
            fixtures::sin(),
            fixtures::exp(),
            fixtures::polynomial(&[1.0, -2.0, 0.5, 3.0]),
            fixtures::inv_u(),
            fixtures::bspline(&[-2.0, -1.0, 0.0, 1.0, 2.0, 3.0, 4.0], 5).unwrap(),
            fixtures::bump(-0.5, 0.5, 0.7).unwrap(),
            fixtures::gaussian(0.0, 1.0).times_u_power(2),
        ];
        for f in funcs {
            let (lo, hi) = f.effective_window().unwrap_or((-2.0, 2.0));
            let depth = f.depth().min(4);
            for k in 0..depth {
                for i in 0..64 {
                    let x = lo + (hi - lo) * (i as f64 + 0.37) / 64.0;
                    let h = 1e-5 * (1.0 + x.abs());
                    let fd = (f.derivative(k, x + h).unwrap() - f.derivative(k, x - h).unwrap())
                        / (2.0 * h);
                    let exact = f.derivative(k + 1, x).unwrap();
                    let scale = f.sup_norm(k + 1).unwrap_or(1.0).max(exact.norm()).max(1e-3);
                    assert!(
                        (fd - exact).norm() <= 1e-5 * scale,
                        "{} k={k} x={x}: fd {fd} exact {exact}",
                        f.name()
                    );
                }
            }
        }
    }
}
