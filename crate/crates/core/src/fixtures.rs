//! Seeded random operators for tests, experiments and benchmarks.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::trace_algebra::{AlgebraElement, TraceAlgebra};
use crate::C64;

pub type FixtureRng = ChaCha8Rng;

pub fn rng(seed: u64) -> FixtureRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_matrix(n: usize, rng: &mut impl Rng) -> DMatrix<C64> {
    DMatrix::from_fn(n, n, |_, _| {
        C64::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        )
    })
}

/// Element with i.i.d. standard complex Gaussian entries.
pub fn random_element(algebra: &Arc<TraceAlgebra>, rng: &mut impl Rng) -> AlgebraElement {
    let blocks = algebra
        .blocks()
        .iter()
        .map(|b| gaussian_matrix(b.dim, rng))
        .collect();
    AlgebraElement::from_blocks_unchecked(algebra.clone(), blocks)
}

/// GUE-type Hermitian element, normalized so its spectrum is of order `scale`.
pub fn random_hermitian(
    algebra: &Arc<TraceAlgebra>,
    rng: &mut impl Rng,
    scale: f64,
) -> AlgebraElement {
    let blocks = algebra
        .blocks()
        .iter()
        .map(|b| {
            let g = gaussian_matrix(b.dim, rng);
            let h = (&g + g.adjoint()) * C64::new(0.5 * scale / (2.0 * b.dim as f64).sqrt(), 0.0);
            symmetrize(h)
        })
        .collect();
    AlgebraElement::from_blocks_unchecked(algebra.clone(), blocks)
}

/// Haar-distributed unitary from the QR factorization of a Gaussian matrix.
pub fn random_unitary(n: usize, rng: &mut impl Rng) -> DMatrix<C64> {
    let qr = gaussian_matrix(n, rng).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        q.column_mut(j).iter_mut().for_each(|z| *z *= phase);
    }
    q
}

/// Hermitian element with eigenvalues drawn uniformly from `[lo, hi]` in
/// Haar-random eigenbases.
pub fn hermitian_with_spectrum_in(
    algebra: &Arc<TraceAlgebra>,
    rng: &mut impl Rng,
    lo: f64,
    hi: f64,
) -> AlgebraElement {
    let spectra: Vec<Vec<f64>> = algebra
        .blocks()
        .iter()
        .map(|b| (0..b.dim).map(|_| rng.random_range(lo..hi)).collect())
        .collect();
    hermitian_with_spectrum(algebra, rng, &spectra)
}

/// Hermitian element with the given per-block eigenvalues in Haar-random
/// eigenbases.
pub fn hermitian_with_spectrum(
    algebra: &Arc<TraceAlgebra>,
    rng: &mut impl Rng,
    spectra: &[Vec<f64>],
) -> AlgebraElement {
    let blocks = algebra
        .blocks()
        .iter()
        .zip(spectra)
        .map(|(b, eig)| {
            assert_eq!(
                eig.len(),
                b.dim,
                "spectrum length must match block dimension"
            );
            let u = random_unitary(b.dim, rng);
            let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                b.dim,
                eig.iter().map(|&x| C64::new(x, 0.0)),
            ));
            symmetrize(&u * d * u.adjoint())
        })
        .collect();
    AlgebraElement::from_blocks_unchecked(algebra.clone(), blocks)
}

/// Random algebra with `total` dimensions split over up to three blocks with
/// weights in `[0.25, 2]`.
pub fn random_algebra(rng: &mut impl Rng, total: usize) -> Arc<TraceAlgebra> {
    let nblocks = rng.random_range(1..=3usize.min(total));
    let mut dims = vec![1usize; nblocks];
    for _ in nblocks..total {
        let i = rng.random_range(0..nblocks);
        dims[i] += 1;
    }
    let spec: Vec<(usize, f64)> = dims
        .into_iter()
        .map(|d| (d, rng.random_range(0.25..2.0)))
        .collect();
    TraceAlgebra::new(&spec).expect("valid random algebra")
}

fn symmetrize(m: DMatrix<C64>) -> DMatrix<C64> {
    (&m + m.adjoint()) * C64::new(0.5, 0.0)
}
