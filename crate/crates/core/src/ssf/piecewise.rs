use serde::{Deserialize, Serialize};

use crate::scalar_functions::quadrature::{gauss_legendre, integrate, integrate_piecewise};

/// `P₀(t), …, P_deg(t)`.
pub(crate) fn legendre_all(deg: usize, t: f64) -> Vec<f64> {
    let mut p = vec![0.0; deg + 1];
    p[0] = 1.0;
    if deg >= 1 {
        p[1] = t;
    }
    for q in 1..deg {
        p[q + 1] = ((2 * q + 1) as f64 * t * p[q] - q as f64 * p[q - 1]) / (q + 1) as f64;
    }
    p
}

/// Monomial coefficients (ascending) of `P₀, …, P_deg`.
pub(crate) fn legendre_monomials(deg: usize) -> Vec<Vec<f64>> {
    let mut out = vec![vec![1.0]];
    if deg >= 1 {
        out.push(vec![0.0, 1.0]);
    }
    for q in 1..deg {
        let mut next = vec![0.0; q + 2];
        for (i, c) in out[q].iter().enumerate() {
            next[i + 1] += (2 * q + 1) as f64 * c / (q + 1) as f64;
        }
        for (i, c) in out[q - 1].iter().enumerate() {
            next[i] -= q as f64 * c / (q + 1) as f64;
        }
        out.push(next);
    }
    out
}

/// Piecewise polynomial on `breaks[0] ≤ … ≤ breaks[S]`, each piece stored in
/// Legendre coefficients of the local coordinate `t ∈ [−1, 1]`. Pieces are
/// closed on the right; the function is zero outside the window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewisePolynomial {
    breaks: Vec<f64>,
    coeffs: Vec<Vec<f64>>,
}

impl PiecewisePolynomial {
    pub fn new(breaks: Vec<f64>, coeffs: Vec<Vec<f64>>) -> Self {
        assert_eq!(
            breaks.len(),
            coeffs.len() + 1,
            "one coefficient row per piece"
        );
        assert!(
            breaks.windows(2).all(|w| w[0] < w[1]),
            "breaks must increase"
        );
        PiecewisePolynomial { breaks, coeffs }
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn coeffs(&self) -> &[Vec<f64>] {
        &self.coeffs
    }

    pub fn pieces(&self) -> usize {
        self.coeffs.len()
    }

    pub fn degree(&self) -> usize {
        self.coeffs
            .iter()
            .map(|c| c.len().saturating_sub(1))
            .max()
            .unwrap_or(0)
    }

    pub fn window(&self) -> (f64, f64) {
        (
            self.breaks[0],
            *self.breaks.last().expect("nonempty breaks"),
        )
    }

    fn locate(&self, x: f64) -> Option<usize> {
        let (lo, hi) = self.window();
        if !(x >= lo && x <= hi) {
            return None;
        }
        let s = self.breaks.partition_point(|&b| b < x);
        Some(s.saturating_sub(1).min(self.pieces() - 1))
    }

    /// Polynomial of piece `s`, evaluated anywhere.
    pub fn eval_piece(&self, s: usize, x: f64) -> f64 {
        let (lo, hi) = (self.breaks[s], self.breaks[s + 1]);
        let t = (2.0 * x - lo - hi) / (hi - lo);
        let c = &self.coeffs[s];
        legendre_all(c.len().saturating_sub(1), t)
            .iter()
            .zip(c)
            .map(|(p, c)| p * c)
            .sum()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.locate(x).map_or(0.0, |s| self.eval_piece(s, x))
    }

    /// `∫ g · p` over the window, splitting every piece at `extra` breaks.
    pub fn integrate_against(&self, g: impl Fn(f64) -> f64, extra: &[f64]) -> f64 {
        (0..self.pieces())
            .map(|s| {
                let (lo, hi) = (self.breaks[s], self.breaks[s + 1]);
                let inner: Vec<f64> = extra
                    .iter()
                    .copied()
                    .filter(|&e| e > lo && e < hi)
                    .collect();
                integrate_piecewise(
                    |x| g(x) * self.eval_piece(s, x),
                    lo,
                    hi,
                    &inner,
                    1e-16,
                    1e-13,
                )
                .value
            })
            .sum()
    }

    pub fn l1_norm(&self) -> f64 {
        (0..self.pieces())
            .map(|s| {
                let (lo, hi) = (self.breaks[s], self.breaks[s + 1]);
                if self.coeffs[s].len() <= 1 {
                    self.coeffs[s].first().map_or(0.0, |c| c.abs()) * (hi - lo)
                } else {
                    integrate(|x| self.eval_piece(s, x).abs(), lo, hi, 1e-16, 1e-12).value
                }
            })
            .sum()
    }

    /// Adds a polynomial of degree at most the piece degree, given as a
    /// function, by exact projection onto every piece.
    pub fn add_polynomial(&mut self, g: impl Fn(f64) -> f64, degree: usize) {
        let deg = degree.max(self.degree());
        let (t, w) = gauss_legendre(deg + 1);
        for s in 0..self.pieces() {
            let (lo, hi) = (self.breaks[s], self.breaks[s + 1]);
            let c = &mut self.coeffs[s];
            c.resize(deg + 1, 0.0);
            for (ti, wi) in t.iter().zip(&w) {
                let x = 0.5 * (lo + hi) + 0.5 * (hi - lo) * ti;
                let gx = g(x);
                for (q, p) in legendre_all(deg, *ti).iter().enumerate() {
                    c[q] += (2 * q + 1) as f64 / 2.0 * wi * gx * p;
                }
            }
        }
    }
}

/// `∫ g` over the window of the pieces formed by the union of `breaks`, with
/// `points`-node Gauss–Legendre on each.
pub(crate) fn integrate_on_union(breaks: &[&[f64]], points: usize, g: impl Fn(f64) -> f64) -> f64 {
    let mut all: Vec<f64> = breaks.iter().flat_map(|b| b.iter().copied()).collect();
    all.sort_by(f64::total_cmp);
    all.dedup();
    let (t, w) = gauss_legendre(points);
    all.windows(2)
        .map(|p| {
            let (lo, hi) = (p[0], p[1]);
            let mid = 0.5 * (lo + hi);
            let half = 0.5 * (hi - lo);
            t.iter()
                .zip(&w)
                .map(|(ti, wi)| wi * g(mid + half * ti))
                .sum::<f64>()
                * half
        })
        .sum()
}

/// Evaluates a polynomial with ascending monomial coefficients.
pub(crate) fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
}
