//! Finite-dimensional model of a semifinite von Neumann algebra.
//!
//! The algebra is a direct sum of full matrix blocks `M_{d_1} ⊕ … ⊕ M_{d_m}`
//! and the trace weighs each block by a positive number,
//! `τ(A) = Σ_b w_b Tr(A_b)`. With a single block of weight one this is the
//! ordinary matrix trace.

mod element;
pub mod io;
mod operator;
mod snumbers;

use std::sync::Arc;

use crate::error::{Error, Result};

pub use element::AlgebraElement;
pub use operator::{Interval, SelfAdjointOperator, SpectralProjection};
pub use snumbers::StepFunction;

/// Relative tolerance for Hermiticity, idempotency and commutation checks.
pub const STRUCTURE_TOL: f64 = 1e-10;

/// One direct summand: a `dim × dim` matrix block with trace weight `weight`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Block {
    pub dim: usize,
    pub weight: f64,
}

/// Block-diagonal matrix algebra with a weighted trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceAlgebra {
    blocks: Vec<Block>,
}

impl TraceAlgebra {
    /// Builds an algebra from `(dimension, weight)` pairs.
    pub fn new(blocks: &[(usize, f64)]) -> Result<Arc<Self>> {
        if blocks.is_empty() {
            return Err(Error::structural("an algebra needs at least one block"));
        }
        let mut out = Vec::with_capacity(blocks.len());
        for (i, &(dim, weight)) in blocks.iter().enumerate() {
            if dim == 0 {
                return Err(Error::structural(format!("block {i} has dimension 0")));
            }
            if !(weight.is_finite() && weight > 0.0) {
                return Err(Error::structural(format!(
                    "block {i} has weight {weight}; weights must be finite and positive"
                )));
            }
            out.push(Block { dim, weight });
        }
        Ok(Arc::new(TraceAlgebra { blocks: out }))
    }

    /// `M_n` with the canonical trace.
    pub fn matrix(n: usize) -> Arc<Self> {
        Self::new(&[(n, 1.0)]).expect("n must be positive")
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn total_dimension(&self) -> usize {
        self.blocks.iter().map(|b| b.dim).sum()
    }

    /// `τ(I) = Σ_b w_b d_b`.
    pub fn trace_of_identity(&self) -> f64 {
        self.blocks.iter().map(|b| b.weight * b.dim as f64).sum()
    }
}

pub(crate) fn same_algebra(a: &Arc<TraceAlgebra>, b: &Arc<TraceAlgebra>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}
