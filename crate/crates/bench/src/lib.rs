//! Inputs shared by the benchmarks.

use specact::fixtures;
use specact::{AlgebraElement, SelfAdjointOperator, TraceAlgebra};

/// `H₀` with spectrum in `[−1, 1]` and a Hermitian perturbation of norm about
/// `scale`, on the full `dim × dim` matrix algebra.
pub fn operator_pair(seed: u64, dim: usize, scale: f64) -> (SelfAdjointOperator, AlgebraElement) {
    let alg = TraceAlgebra::matrix(dim);
    let mut rng = fixtures::rng(seed);
    let h0 = fixtures::hermitian_with_spectrum_in(&alg, &mut rng, -1.0, 1.0);
    let v = fixtures::random_hermitian(&alg, &mut rng, scale);
    (SelfAdjointOperator::new(h0).expect("Hermitian fixture"), v)
}
