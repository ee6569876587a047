use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};

use super::{AlgebraElement, TraceAlgebra, STRUCTURE_TOL};
use crate::error::{Error, Result};
use crate::scalar_functions::ScalarFunction;
use crate::C64;

/// Hermitian algebra element together with its spectral decomposition.
///
/// Degenerate eigenvalues are kept as separate indexed eigenpairs.
#[derive(Debug, Clone)]
pub struct SelfAdjointOperator {
    element: AlgebraElement,
    eigenvalues: Vec<Vec<f64>>,
    eigenvectors: Vec<DMatrix<C64>>,
    residual: f64,
}

impl SelfAdjointOperator {
    pub fn new(element: AlgebraElement) -> Result<Self> {
        if !element.is_hermitian() {
            return Err(Error::domain(
                "self-adjoint operator requires a Hermitian element",
            ));
        }
        let mut eigenvalues = Vec::with_capacity(element.blocks().len());
        let mut eigenvectors = Vec::with_capacity(element.blocks().len());
        let mut residual = 0.0f64;
        for m in element.blocks() {
            // symmetrize so the solver sees an exactly Hermitian input
            let herm = (m + m.adjoint()) * C64::new(0.5, 0.0);
            let eig = SymmetricEigen::new(herm.clone());
            let mut order: Vec<usize> = (0..m.nrows()).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
            let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
            let vecs =
                DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
            let recon = reconstruct(&vecs, vals.iter().map(|&l| C64::new(l, 0.0)));
            let res = (&recon - m).iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
            residual = residual.max(res);
            eigenvalues.push(vals);
            eigenvectors.push(vecs);
        }
        let scale = element.max_entry().max(f64::MIN_POSITIVE);
        if residual > 1e-10 * scale.max(1.0) * element.algebra().total_dimension() as f64 {
            return Err(Error::domain(format!(
                "eigendecomposition residual {residual:.3e} exceeds tolerance"
            )));
        }
        Ok(SelfAdjointOperator {
            element,
            eigenvalues,
            eigenvectors,
            residual,
        })
    }

    /// Real diagonal operator with entries listed block after block.
    pub fn diagonal(algebra: &Arc<TraceAlgebra>, diag: &[f64]) -> Result<Self> {
        Self::new(AlgebraElement::diagonal(algebra, diag)?)
    }

    pub fn element(&self) -> &AlgebraElement {
        &self.element
    }

    pub fn algebra(&self) -> &Arc<TraceAlgebra> {
        self.element.algebra()
    }

    /// Ascending eigenvalues per block.
    pub fn eigenvalues(&self) -> &[Vec<f64>] {
        &self.eigenvalues
    }

    /// Unitary eigenvector matrices per block; column `i` pairs with eigenvalue `i`.
    pub fn eigenvectors(&self) -> &[DMatrix<C64>] {
        &self.eigenvectors
    }

    /// Max-entry reconstruction error of `U diag(λ) U*`.
    pub fn decomposition_residual(&self) -> f64 {
        self.residual
    }

    /// All eigenvalues with their block weights, sorted by value.
    pub fn weighted_spectrum(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = self
            .eigenvalues
            .iter()
            .zip(self.algebra().blocks())
            .flat_map(|(vals, b)| vals.iter().map(move |&l| (l, b.weight)))
            .collect();
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        out
    }

    pub fn spectrum_bounds(&self) -> (f64, f64) {
        let lo = self
            .eigenvalues
            .iter()
            .flatten()
            .fold(f64::INFINITY, |a, &b| a.min(b));
        let hi = self
            .eigenvalues
            .iter()
            .flatten()
            .fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        (lo, hi)
    }

    /// `U diag(g(λ)) U*` for an arbitrary scalar map.
    pub fn apply_with(&self, g: impl Fn(f64) -> Result<C64>) -> Result<AlgebraElement> {
        let mut blocks = Vec::with_capacity(self.eigenvalues.len());
        for (vals, vecs) in self.eigenvalues.iter().zip(&self.eigenvectors) {
            let fv = vals.iter().map(|&l| g(l)).collect::<Result<Vec<_>>>()?;
            blocks.push(reconstruct(vecs, fv.into_iter()));
        }
        Ok(AlgebraElement::from_blocks_unchecked(
            self.algebra().clone(),
            blocks,
        ))
    }

    /// `f(H)` by the spectral theorem.
    pub fn apply(&self, f: &ScalarFunction) -> Result<AlgebraElement> {
        self.apply_with(|x| f.value(x))
    }

    /// `(H − zI)^{-1}`.
    pub fn resolvent(&self, z: C64) -> Result<AlgebraElement> {
        let scale = 1.0 + self.element.operator_norm();
        if z.im.abs() <= STRUCTURE_TOL * scale {
            let near = self
                .eigenvalues
                .iter()
                .flatten()
                .any(|&l| (l - z.re).abs() <= STRUCTURE_TOL * scale);
            if near {
                return Err(Error::Singular(format!("z = {z} lies on the spectrum")));
            }
        }
        self.apply_with(|l| Ok(C64::new(1.0, 0.0) / (C64::new(l, 0.0) - z)))
    }

    /// Spectral projection onto the eigenvalues lying in `interval`.
    pub fn spectral_projection(&self, interval: Interval) -> SpectralProjection {
        let element = self
            .apply_with(|l| Ok(C64::new(if interval.contains(l) { 1.0 } else { 0.0 }, 0.0)))
            .expect("indicator is defined everywhere");
        SpectralProjection { element, interval }
    }

    /// `τ(E_H(Δ))` as the weighted eigenvalue count.
    pub fn counting(&self, interval: Interval) -> f64 {
        self.weighted_spectrum()
            .iter()
            .filter(|(l, _)| interval.contains(*l))
            .map(|(_, w)| w)
            .sum()
    }
}

fn reconstruct(vecs: &DMatrix<C64>, diag: impl Iterator<Item = C64>) -> DMatrix<C64> {
    let mut scaled = vecs.clone();
    for (j, d) in diag.enumerate() {
        scaled.column_mut(j).iter_mut().for_each(|z| *z *= d);
    }
    scaled * vecs.adjoint()
}

/// Real interval with independently open or closed endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn closed(lo: f64, hi: f64) -> Self {
        Interval {
            lo,
            hi,
            lo_closed: true,
            hi_closed: true,
        }
    }

    pub fn open(lo: f64, hi: f64) -> Self {
        Interval {
            lo,
            hi,
            lo_closed: false,
            hi_closed: false,
        }
    }

    /// `[lo, hi)`.
    pub fn half_open(lo: f64, hi: f64) -> Self {
        Interval {
            lo,
            hi,
            lo_closed: true,
            hi_closed: false,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed {
            x >= self.lo
        } else {
            x > self.lo
        };
        let below = if self.hi_closed {
            x <= self.hi
        } else {
            x < self.hi
        };
        above && below
    }
}

/// `E_H(Δ)` together with the interval it was cut from.
#[derive(Debug, Clone)]
pub struct SpectralProjection {
    element: AlgebraElement,
    interval: Interval,
}

impl SpectralProjection {
    pub fn element(&self) -> &AlgebraElement {
        &self.element
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn trace(&self) -> f64 {
        self.element.trace().re
    }
}
