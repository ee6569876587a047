use super::fixtures::binomial;
use super::quadrature::integrate;
use super::ScalarFn;
use crate::error::{Error, Result};
use crate::C64;

/// Smooth step rising from 0 at `lo` to 1 at `hi`: the normalized primitive
/// of `g(t) = exp(−1/(t−lo) − 1/(hi−t))`.
///
/// `g` is stored with its maximum shifted to 1 so the primitive keeps full
/// relative precision on short transitions.
#[derive(Debug, Clone)]
struct Transition {
    lo: f64,
    hi: f64,
    shift: f64,
    norm: f64,
}

impl Transition {
    fn new(lo: f64, hi: f64) -> Self {
        let mut t = Transition {
            lo,
            hi,
            shift: 4.0 / (hi - lo),
            norm: 1.0,
        };
        t.norm = integrate(|x| t.g(x), lo, hi, 0.0, 1e-15).value;
        t
    }

    fn psi(&self, t: f64) -> f64 {
        -1.0 / (t - self.lo) - 1.0 / (self.hi - t) + self.shift
    }

    fn g(&self, t: f64) -> f64 {
        if t <= self.lo || t >= self.hi {
            return 0.0;
        }
        let p = self.psi(t);
        if p < -700.0 {
            0.0
        } else {
            p.exp()
        }
    }

    /// `g, g', …, g^{(m)}` at `t` via `G^{(m+1)} = Σ C(m,j) ψ^{(j+1)} G^{(m−j)}`.
    fn g_derivatives(&self, t: f64, m: usize) -> Vec<f64> {
        let mut out = vec![0.0; m + 1];
        if t <= self.lo || t >= self.hi {
            return out;
        }
        let p = self.psi(t);
        if p < -700.0 {
            return out;
        }
        // ψ^{(j)}, j = 1..=m
        let (l, r) = (t - self.lo, self.hi - t);
        let mut dpsi = vec![0.0; m + 1];
        let mut fact = 1.0;
        for (j, d) in dpsi.iter_mut().enumerate().skip(1) {
            fact *= j as f64;
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            *d = -sign * fact * l.powi(-(j as i32) - 1) - fact * r.powi(-(j as i32) - 1);
        }
        out[0] = p.exp();
        for k in 0..m {
            out[k + 1] = (0..=k)
                .map(|j| binomial(k, j) * dpsi[j + 1] * out[k - j])
                .sum();
        }
        out
    }

    /// `h, h', …, h^{(m)}` at `x`.
    fn derivatives(&self, x: f64, m: usize) -> Vec<f64> {
        let mut out = vec![0.0; m + 1];
        if x <= self.lo {
            return out;
        }
        if x >= self.hi {
            out[0] = 1.0;
            return out;
        }
        let mid = 0.5 * (self.lo + self.hi);
        out[0] = if x <= mid {
            integrate(|t| self.g(t), self.lo, x, 0.0, 1e-14).value / self.norm
        } else {
            1.0 - integrate(|t| self.g(t), x, self.hi, 0.0, 1e-14).value / self.norm
        }
        .clamp(0.0, 1.0);
        if m > 0 {
            for (k, gk) in self.g_derivatives(x, m - 1).into_iter().enumerate() {
                out[k + 1] = gk / self.norm;
            }
        }
        out
    }
}

/// `(h₁ − h₂)⁴`, identically one on `[a, b]` and supported in
/// `[a−ε, b+ε]`; `h₁` rises on `[a−ε, a]` and `h₂` on `[b, b+ε]`.
#[derive(Debug, Clone)]
pub struct BumpFunction {
    a: f64,
    b: f64,
    eps: f64,
    depth: usize,
    left: Transition,
    right: Transition,
}

fn leibniz_square(f: &[f64]) -> Vec<f64> {
    (0..f.len())
        .map(|k| (0..=k).map(|j| binomial(k, j) * f[j] * f[k - j]).sum())
        .collect()
}

impl BumpFunction {
    pub const DEFAULT_DEPTH: usize = 8;

    pub fn new(a: f64, b: f64, eps: f64, depth: usize) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::domain(format!(
                "bump width must be positive, got {eps}"
            )));
        }
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::domain(format!(
                "bump plateau needs a < b, got [{a}, {b}]"
            )));
        }
        Ok(BumpFunction {
            a,
            b,
            eps,
            depth,
            left: Transition::new(a - eps, a),
            right: Transition::new(b, b + eps),
        })
    }

    pub fn plateau(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Normalization integrals of the two transition densities (in units of
    /// their peak value).
    pub fn normalizations(&self) -> (f64, f64) {
        (self.left.norm, self.right.norm)
    }

    /// `Φ, Φ', …, Φ^{(m)}` at `x`.
    pub fn derivatives(&self, x: f64, m: usize) -> Vec<f64> {
        let mut out = vec![0.0; m + 1];
        if x <= self.a - self.eps || x >= self.b + self.eps {
            return out;
        }
        if x >= self.a && x <= self.b {
            out[0] = 1.0;
            return out;
        }
        let h1 = self.left.derivatives(x, m);
        let h2 = self.right.derivatives(x, m);
        let f: Vec<f64> = h1.iter().zip(&h2).map(|(p, q)| p - q).collect();
        let mut phi = leibniz_square(&leibniz_square(&f));
        phi[0] = phi[0].clamp(0.0, 1.0);
        phi
    }
}

impl ScalarFn for BumpFunction {
    fn name(&self) -> String {
        format!("bump({},{},{})", self.a, self.b, self.eps)
    }
    fn depth(&self) -> Option<usize> {
        Some(self.depth)
    }
    fn eval(&self, k: usize, x: f64) -> C64 {
        C64::new(self.derivatives(x, k)[k], 0.0)
    }
    fn support(&self) -> Option<(f64, f64)> {
        Some((self.a - self.eps, self.b + self.eps))
    }
    fn breakpoints(&self) -> Vec<f64> {
        vec![self.a - self.eps, self.a, self.b, self.b + self.eps]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar_functions::fixtures;

    #[test]
    fn plateau_support_and_range() {
        let f = fixtures::bump(0.0, 1.0, 0.25).unwrap();
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            assert!((f.value(x).unwrap().re - 1.0).abs() <= 1e-12);
        }
        assert_eq!(f.value(-0.25).unwrap().re, 0.0);
        assert_eq!(f.value(1.25).unwrap().re, 0.0);
        assert_eq!(f.value(-3.0).unwrap().re, 0.0);
        for i in 0..=10_000 {
            let x = -0.3 + 1.6 * i as f64 / 10_000.0;
            let v = f.value(x).unwrap().re;
            assert!((0.0..=1.0).contains(&v));
        }
        assert!((f.sup_norm(0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_parameters() {
        assert!(matches!(
            BumpFunction::new(0.0, 1.0, 0.0, 4),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            BumpFunction::new(0.0, 1.0, -1.0, 4),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            BumpFunction::new(1.0, 1.0, 0.5, 4),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn transition_is_antisymmetric() {
        // h(mid + s) + h(mid − s) = 1 by symmetry of g
        let t = Transition::new(0.0, 0.3);
        for &s in &[0.01, 0.07, 0.12, 0.149] {
            let a = t.derivatives(0.15 + s, 0)[0];
            let b = t.derivatives(0.15 - s, 0)[0];
            assert!((a + b - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn high_derivatives_match_differences() {
        let b = BumpFunction::new(-0.2, 0.4, 0.5, 8).unwrap();
        for &x in &[-0.6, -0.45, -0.3, 0.55, 0.7, 0.85] {
            let d = b.derivatives(x, 8);
            let h = 1e-5;
            for k in 0..8 {
                let fd = (b.derivatives(x + h, k)[k] - b.derivatives(x - h, k)[k]) / (2.0 * h);
                let scale = d[k + 1].abs().max(1.0) * 10f64.powi(k as i32);
                assert!(
                    (fd - d[k + 1]).abs() <= 1e-4 * scale,
                    "x={x} k={k}: {fd} vs {}",
                    d[k + 1]
                );
            }
        }
    }
}
