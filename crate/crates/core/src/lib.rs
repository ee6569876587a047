//! Numerical spectral perturbation theory in finite trace algebras.
//!
//! The crate models a semifinite algebra with trace as block-diagonal complex
//! matrices with weighted traces, evaluates multiple operator integrals in the
//! eigenbasis, assembles Taylor remainders of `V ↦ τ(f(H₀+V))`, reconstructs
//! spectral shift functions of every order and checks the associated bounds
//! and identities.

pub mod error;
pub mod fixtures;
pub mod moi;
pub mod scalar_functions;
pub mod spectral_action;
pub mod ssf;
pub mod trace_algebra;

pub use error::{Error, Result};
pub use moi::{moi_eval, moi_trace, MoiRequest, MoiResult};
pub use scalar_functions::{ClassTag, ScalarFunction};
pub use trace_algebra::{AlgebraElement, Interval, SelfAdjointOperator, TraceAlgebra};

pub type C64 = num_complex::Complex64;
