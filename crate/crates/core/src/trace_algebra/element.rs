use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use nalgebra::DMatrix;

use super::{same_algebra, StepFunction, TraceAlgebra, STRUCTURE_TOL};
use crate::error::{Error, Result};
use crate::C64;

/// An element of a [`TraceAlgebra`]: one complex matrix per block.
#[derive(Clone)]
pub struct AlgebraElement {
    algebra: Arc<TraceAlgebra>,
    blocks: Vec<DMatrix<C64>>,
    hermitian: bool,
}

impl fmt::Debug for AlgebraElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AlgebraElement")
            .field("blocks", &self.algebra.blocks())
            .field("hermitian", &self.hermitian)
            .finish()
    }
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

fn hermitian_defect(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

impl AlgebraElement {
    /// Wraps per-block matrices, checking that they conform to `algebra`.
    pub fn from_blocks(algebra: &Arc<TraceAlgebra>, blocks: Vec<DMatrix<C64>>) -> Result<Self> {
        if blocks.len() != algebra.blocks().len() {
            return Err(Error::structural(format!(
                "expected {} blocks, got {}",
                algebra.blocks().len(),
                blocks.len()
            )));
        }
        for (i, (m, b)) in blocks.iter().zip(algebra.blocks()).enumerate() {
            if m.nrows() != b.dim || m.ncols() != b.dim {
                return Err(Error::structural(format!(
                    "block {i}: expected {d}x{d}, got {}x{}",
                    m.nrows(),
                    m.ncols(),
                    d = b.dim
                )));
            }
        }
        Ok(Self::from_blocks_unchecked(algebra.clone(), blocks))
    }

    pub(crate) fn from_blocks_unchecked(
        algebra: Arc<TraceAlgebra>,
        blocks: Vec<DMatrix<C64>>,
    ) -> Self {
        let hermitian = blocks
            .iter()
            .all(|m| hermitian_defect(m) <= STRUCTURE_TOL * (1.0 + max_abs(m)));
        AlgebraElement {
            algebra,
            blocks,
            hermitian,
        }
    }

    /// Real diagonal element; `diag` lists the entries block after block.
    pub fn diagonal(algebra: &Arc<TraceAlgebra>, diag: &[f64]) -> Result<Self> {
        if diag.len() != algebra.total_dimension() {
            return Err(Error::structural(format!(
                "diagonal has {} entries, algebra dimension is {}",
                diag.len(),
                algebra.total_dimension()
            )));
        }
        let mut offset = 0;
        let blocks = algebra
            .blocks()
            .iter()
            .map(|b| {
                let m = DMatrix::from_fn(b.dim, b.dim, |i, j| {
                    if i == j {
                        C64::new(diag[offset + i], 0.0)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                });
                offset += b.dim;
                m
            })
            .collect();
        Ok(Self::from_blocks_unchecked(algebra.clone(), blocks))
    }

    pub fn zeros(algebra: &Arc<TraceAlgebra>) -> Self {
        let blocks = algebra
            .blocks()
            .iter()
            .map(|b| DMatrix::zeros(b.dim, b.dim))
            .collect();
        Self::from_blocks_unchecked(algebra.clone(), blocks)
    }

    pub fn identity(algebra: &Arc<TraceAlgebra>) -> Self {
        let blocks = algebra
            .blocks()
            .iter()
            .map(|b| DMatrix::identity(b.dim, b.dim))
            .collect();
        Self::from_blocks_unchecked(algebra.clone(), blocks)
    }

    pub fn algebra(&self) -> &Arc<TraceAlgebra> {
        &self.algebra
    }

    pub fn blocks(&self) -> &[DMatrix<C64>] {
        &self.blocks
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// Fails unless `other` lives in the same algebra.
    pub fn ensure_conforms(&self, other: &AlgebraElement) -> Result<()> {
        if same_algebra(&self.algebra, &other.algebra) {
            Ok(())
        } else {
            Err(Error::structural("operands belong to different algebras"))
        }
    }

    /// `τ(A) = Σ_b w_b Tr(A_b)`.
    pub fn trace(&self) -> C64 {
        self.blocks
            .iter()
            .zip(self.algebra.blocks())
            .map(|(m, b)| m.trace() * b.weight)
            .sum()
    }

    pub fn adjoint(&self) -> Self {
        let blocks = self.blocks.iter().map(|m| m.adjoint()).collect();
        AlgebraElement {
            algebra: self.algebra.clone(),
            blocks,
            hermitian: self.hermitian,
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        let blocks = self.blocks.iter().map(|m| m * s).collect();
        Self::from_blocks_unchecked(self.algebra.clone(), blocks)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    /// `A^p` for `p ≥ 0` (`A^0 = I`).
    pub fn pow(&self, p: usize) -> Self {
        let mut out = Self::identity(&self.algebra);
        for _ in 0..p {
            out = &out * self;
        }
        out
    }

    pub fn map_blocks(&self, f: impl Fn(&DMatrix<C64>) -> DMatrix<C64>) -> Self {
        let blocks = self.blocks.iter().map(f).collect();
        Self::from_blocks_unchecked(self.algebra.clone(), blocks)
    }

    /// Singular values of every block, paired with the block weight.
    pub fn weighted_singular_values(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.algebra.total_dimension());
        for (m, b) in self.blocks.iter().zip(self.algebra.blocks()) {
            let sv = m.clone().singular_values();
            out.extend(sv.iter().map(|&s| (s, b.weight)));
        }
        out
    }

    /// Noncommutative `L^p` norm `(τ|A|^p)^{1/p}`; `p = ∞` is the operator norm.
    pub fn schatten_norm(&self, p: f64) -> Result<f64> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::domain(format!(
                "Schatten exponent must be ≥ 1, got {p}"
            )));
        }
        let sv = self.weighted_singular_values();
        if p.is_infinite() {
            return Ok(sv.iter().fold(0.0, |acc, &(s, _)| acc.max(s)));
        }
        let smax = sv.iter().fold(0.0f64, |acc, &(s, _)| acc.max(s));
        if smax == 0.0 {
            return Ok(0.0);
        }
        // scale by the largest singular value before raising to p
        let sum: f64 = sv.iter().map(|&(s, w)| w * (s / smax).powf(p)).sum();
        Ok(smax * sum.powf(1.0 / p))
    }

    pub fn operator_norm(&self) -> f64 {
        self.schatten_norm(f64::INFINITY).expect("p = ∞ is valid")
    }

    /// Largest entry modulus over all blocks.
    pub fn max_entry(&self) -> f64 {
        self.blocks.iter().fold(0.0, |acc, m| acc.max(max_abs(m)))
    }

    /// Generalized s-numbers `t ↦ μ_t(A)`.
    pub fn s_numbers(&self) -> StepFunction {
        StepFunction::decreasing_rearrangement(self.weighted_singular_values())
    }

    /// Hermitian part `(A + A*)/2`.
    pub fn hermitian_part(&self) -> Self {
        let blocks = self
            .blocks
            .iter()
            .map(|m| (m + m.adjoint()) * C64::new(0.5, 0.0))
            .collect();
        Self::from_blocks_unchecked(self.algebra.clone(), blocks)
    }

    /// `‖AB − BA‖_∞`.
    pub fn commutator_norm(&self, other: &AlgebraElement) -> f64 {
        (&(self * other) - &(other * self)).operator_norm()
    }
}

fn zip_blocks(
    a: &AlgebraElement,
    b: &AlgebraElement,
    op: impl Fn(&DMatrix<C64>, &DMatrix<C64>) -> DMatrix<C64>,
) -> AlgebraElement {
    assert!(
        same_algebra(&a.algebra, &b.algebra),
        "algebra mismatch in element arithmetic"
    );
    let blocks = a
        .blocks
        .iter()
        .zip(&b.blocks)
        .map(|(x, y)| op(x, y))
        .collect();
    AlgebraElement::from_blocks_unchecked(a.algebra.clone(), blocks)
}

impl Add for &AlgebraElement {
    type Output = AlgebraElement;
    fn add(self, rhs: &AlgebraElement) -> AlgebraElement {
        zip_blocks(self, rhs, |x, y| x + y)
    }
}

impl Sub for &AlgebraElement {
    type Output = AlgebraElement;
    fn sub(self, rhs: &AlgebraElement) -> AlgebraElement {
        zip_blocks(self, rhs, |x, y| x - y)
    }
}

impl Mul for &AlgebraElement {
    type Output = AlgebraElement;
    fn mul(self, rhs: &AlgebraElement) -> AlgebraElement {
        zip_blocks(self, rhs, |x, y| x * y)
    }
}

impl Neg for &AlgebraElement {
    type Output = AlgebraElement;
    fn neg(self) -> AlgebraElement {
        self.map_blocks(|m| -m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{random_element, random_hermitian, rng};

    #[test]
    fn trace_of_identity_weights_dimensions() {
        let alg = TraceAlgebra::new(&[(2, 3.0)]).unwrap();
        assert_eq!(AlgebraElement::identity(&alg).trace(), C64::new(6.0, 0.0));
        assert_eq!(AlgebraElement::zeros(&alg).trace(), C64::new(0.0, 0.0));
    }

    #[test]
    fn trace_weighted_sum_over_blocks() {
        let alg = TraceAlgebra::new(&[(1, 1.0), (2, 0.5)]).unwrap();
        let a = AlgebraElement::diagonal(&alg, &[2.0, 1.0, 1.0]).unwrap();
        assert!((a.trace() - C64::new(3.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn shape_mismatch_is_structural() {
        let alg = TraceAlgebra::new(&[(2, 1.0)]).unwrap();
        let err = AlgebraElement::from_blocks(&alg, vec![DMatrix::zeros(3, 3)]).unwrap_err();
        assert!(matches!(err, Error::Structural(_)));
        assert!(TraceAlgebra::new(&[(2, 0.0)]).is_err());
        assert!(TraceAlgebra::new(&[(0, 1.0)]).is_err());
    }

    #[test]
    fn schatten_examples() {
        let alg = TraceAlgebra::new(&[(2, 1.0)]).unwrap();
        let i = AlgebraElement::identity(&alg);
        assert!((i.schatten_norm(2.0).unwrap() - 2f64.sqrt()).abs() < 1e-14);
        let alg4 = TraceAlgebra::new(&[(2, 4.0)]).unwrap();
        let i4 = AlgebraElement::identity(&alg4);
        assert!((i4.schatten_norm(1.0).unwrap() - 8.0).abs() < 1e-14);
        assert!(matches!(i.schatten_norm(0.5), Err(Error::Domain(_))));
        assert_eq!(i4.schatten_norm(f64::INFINITY).unwrap(), 1.0);
    }

    #[test]
    fn schatten_one_matches_eigenvalue_oracle() {
        let mut r = rng(11);
        let alg = TraceAlgebra::new(&[(3, 0.7), (4, 2.0)]).unwrap();
        for _ in 0..10 {
            let h = random_hermitian(&alg, &mut r, 1.5);
            let mut oracle = 0.0;
            for (m, b) in h.blocks().iter().zip(alg.blocks()) {
                let eig = m.clone().symmetric_eigenvalues();
                oracle += b.weight * eig.iter().map(|l| l.abs()).sum::<f64>();
            }
            let got = h.schatten_norm(1.0).unwrap();
            assert!(
                (got - oracle).abs() <= 1e-10 * oracle.max(1.0),
                "{got} vs {oracle}"
            );
        }
    }

    #[test]
    fn trace_is_cyclic() {
        let mut r = rng(3);
        let alg = TraceAlgebra::new(&[(3, 0.25), (2, 1.5)]).unwrap();
        for _ in 0..20 {
            let a = random_element(&alg, &mut r);
            let b = random_element(&alg, &mut r);
            let d = ((&a * &b).trace() - (&b * &a).trace()).norm();
            assert!(d <= 1e-12 * (1.0 + a.operator_norm() * b.operator_norm()));
        }
    }

    #[test]
    fn holder_inequality_on_random_pairs() {
        let mut r = rng(5);
        let alg = TraceAlgebra::new(&[(4, 0.5), (3, 2.0)]).unwrap();
        let triples = [(2.0, 2.0), (3.0, 1.5), (4.0, 4.0), (1.0, f64::INFINITY)];
        for _ in 0..20 {
            let a = random_element(&alg, &mut r);
            let b = random_element(&alg, &mut r);
            for &(p, q) in &triples {
                let rr = 1.0 / (1.0 / p + 1.0 / q);
                let lhs = (&a * &b).schatten_norm(rr).unwrap();
                let rhs = a.schatten_norm(p).unwrap() * b.schatten_norm(q).unwrap();
                assert!(lhs <= rhs * (1.0 + 1e-12), "p={p} q={q}: {lhs} > {rhs}");
            }
        }
    }
}
