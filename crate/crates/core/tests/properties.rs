//! Randomized invariants across the public API.

use std::sync::Arc;

use proptest::prelude::*;
use specact::fixtures::{
    hermitian_with_spectrum, hermitian_with_spectrum_in, random_algebra, random_element,
    random_hermitian, random_unitary, rng, FixtureRng,
};
use specact::moi::ConstantStore;
use specact::scalar_functions::divided_difference;
use specact::scalar_functions::fixtures as sf;
use specact::spectral_action::{
    check_remainder_bound, constant_D, gateaux_derivative, remainder_trace, taylor_remainder,
};
use specact::ssf::{
    check_eta_l1_bound, first_order_resolvent_bound, ssf_first_order, trace_formula_residual,
};
use specact::{
    moi_eval, AlgebraElement, Interval, MoiRequest, SelfAdjointOperator, TraceAlgebra, C64,
};

fn op(e: AlgebraElement) -> SelfAdjointOperator {
    SelfAdjointOperator::new(e).unwrap()
}

fn weighted(seed: u64, dim: usize) -> (FixtureRng, Arc<TraceAlgebra>) {
    let mut r = rng(seed);
    let alg = random_algebra(&mut r, dim);
    (r, alg)
}

/// `H₀` with spectrum in `[−1, 1]` and a Hermitian `V` of size `scale`.
fn pair(seed: u64, dim: usize, scale: f64) -> (SelfAdjointOperator, AlgebraElement) {
    let (mut r, alg) = weighted(seed, dim);
    let h0 = op(hermitian_with_spectrum_in(&alg, &mut r, -1.0, 1.0));
    (h0, random_hermitian(&alg, &mut r, scale))
}

fn rel(a: &AlgebraElement, b: &AlgebraElement) -> f64 {
    (a - b).max_entry() / (1.0 + b.max_entry())
}

fn conjugate(u: &AlgebraElement, a: &AlgebraElement) -> AlgebraElement {
    &(u * a) * &u.adjoint()
}

fn block_unitary(alg: &Arc<TraceAlgebra>, r: &mut FixtureRng) -> AlgebraElement {
    let blocks = alg
        .blocks()
        .iter()
        .map(|b| random_unitary(b.dim, r))
        .collect();
    AlgebraElement::from_blocks(alg, blocks).unwrap()
}

/// Complete homogeneous symmetric polynomial of degree `d` in `xs`.
fn complete_homogeneous(xs: &[f64], d: usize) -> f64 {
    match xs.split_first() {
        None => (d == 0) as u8 as f64,
        Some((x, rest)) => (0..=d)
            .map(|j| x.powi(j as i32) * complete_homogeneous(rest, d - j))
            .sum(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]

    #[test]
    fn trace_is_cyclic(seed in any::<u64>(), dim in 1usize..7) {
        let (mut r, alg) = weighted(seed, dim);
        let a = random_element(&alg, &mut r);
        let b = random_element(&alg, &mut r);
        let ab = (&a * &b).trace();
        let ba = (&b * &a).trace();
        prop_assert!((ab - ba).norm() <= 1e-12 * (1.0 + ab.norm()));
    }

    #[test]
    fn holder_inequality(seed in any::<u64>(), dim in 1usize..7, p in 2.0f64..6.0, q in 2.0f64..6.0) {
        let (mut r, alg) = weighted(seed, dim);
        let a = random_element(&alg, &mut r);
        let b = random_element(&alg, &mut r);
        let rr = 1.0 / (1.0 / p + 1.0 / q);
        let lhs = (&a * &b).schatten_norm(rr).unwrap();
        let rhs = a.schatten_norm(p).unwrap() * b.schatten_norm(q).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-12), "{lhs} > {rhs}");
    }

    #[test]
    fn projection_trace_counts_weighted_eigenvalues(seed in any::<u64>(), dim in 1usize..8, lo in -2.0f64..1.0, w in 0.0f64..2.0) {
        let (mut r, alg) = weighted(seed, dim);
        let h = op(random_hermitian(&alg, &mut r, 2.0));
        for iv in [Interval::closed(lo, lo + w), Interval::open(lo, lo + w), Interval::half_open(lo, lo + w)] {
            let count: f64 = h.weighted_spectrum().iter().filter(|(l, _)| iv.contains(*l)).map(|(_, w)| w).sum();
            prop_assert!((h.spectral_projection(iv).trace() - count).abs() <= 1e-10 * (1.0 + count));
            prop_assert!((h.counting(iv) - count).abs() <= 1e-12 * (1.0 + count));
        }
    }

    #[test]
    fn functional_calculus_is_multiplicative(seed in any::<u64>(), dim in 1usize..7) {
        let (mut r, alg) = weighted(seed, dim);
        let h = op(random_hermitian(&alg, &mut r, 1.5));
        let fg = h.apply_with(|x| Ok(C64::new(x.exp() * x.sin(), 0.0))).unwrap();
        let prod = &h.apply(&sf::exp()).unwrap() * &h.apply(&sf::sin()).unwrap();
        prop_assert!(rel(&fg, &prod) <= 1e-12);
    }

    #[test]
    fn s_numbers_decrease_and_integrate_to_trace_norm(seed in any::<u64>(), dim in 1usize..7) {
        let (mut r, alg) = weighted(seed, dim);
        let a = random_element(&alg, &mut r);
        let mu = a.s_numbers();
        prop_assert!(mu.values().windows(2).all(|w| w[0] >= w[1]));
        let norm = a.schatten_norm(1.0).unwrap();
        prop_assert!((mu.integral() - norm).abs() <= 1e-12 * norm);
    }

    #[test]
    fn divided_differences_are_symmetric(mut nodes in prop::collection::vec(-2.0f64..2.0, 2..6), rot in 0usize..6) {
        let f = sf::gaussian(0.2, 0.8);
        let a = divided_difference(&f, &nodes).unwrap();
        let k = rot % nodes.len();
        nodes.rotate_left(k);
        let last = nodes.len() - 1;
        nodes.swap(0, last);
        let b = divided_difference(&f, &nodes).unwrap();
        prop_assert!((a - b).norm() <= 1e-9 * (1.0 + a.norm()));
    }

    #[test]
    fn mean_value_bound(nodes in prop::collection::vec(-2.0f64..2.0, 2..6)) {
        let f = sf::sin();
        let n = nodes.len() - 1;
        let lo = nodes.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = nodes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sup = f.sup_norm_on(n, lo, hi).unwrap();
        let fact: f64 = (1..=n).map(|i| i as f64).product();
        prop_assert!(divided_difference(&f, &nodes).unwrap().norm() <= sup / fact + 1e-9);
    }

    #[test]
    fn monomials_give_complete_homogeneous_polynomials(nodes in prop::collection::vec(-1.5f64..1.5, 1..6), m in 0usize..8) {
        let mut coeffs = vec![0.0; m + 1];
        coeffs[m] = 1.0;
        let f = sf::polynomial(&coeffs);
        let n = nodes.len() - 1;
        let expect = if m >= n { complete_homogeneous(&nodes, m - n) } else { 0.0 };
        let got = divided_difference(&f, &nodes).unwrap();
        prop_assert!((got.re - expect).abs() <= 1e-8 * (1.0 + expect.abs()), "{} vs {expect}", got.re);
    }

    #[test]
    fn confluence_is_continuous(base in prop::collection::vec(-1.5f64..1.5, 1..4), lam in -1.5f64..1.5) {
        let f = sf::exp();
        let n = base.len() + 1;
        let mut confluent = base.clone();
        confluent.extend([lam, lam]);
        let at = divided_difference(&f, &confluent).unwrap();
        let fact: f64 = (1..=n + 1).map(|i| i as f64).product();
        let slope = f.sup_norm_on(n + 1, -1.5, 1.5 + 1e-3).unwrap() / fact;
        for delta in [1e-3, 1e-5] {
            let mut split = base.clone();
            split.extend([lam, lam + delta]);
            let near = divided_difference(&f, &split).unwrap();
            prop_assert!((near - at).norm() <= delta * slope + 1e-9, "delta {delta}");
        }
    }

    #[test]
    fn leibniz_rule_with_u(x in -3.0f64..3.0, y in -3.0f64..3.0) {
        let f = sf::gaussian(0.0, 1.1);
        let fu = f.times_u_power(1);
        let lhs = divided_difference(&fu, &[x, y]).unwrap();
        let rhs = divided_difference(&f, &[x, y]).unwrap() * C64::new(y, -1.0) + f.value(x).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    #[test]
    fn moi_is_multilinear(seed in any::<u64>(), dim in 2usize..6, k in 1usize..4, slot in 0usize..3, s in -2.0f64..2.0) {
        let (mut r, alg) = weighted(seed, dim);
        let h = op(random_hermitian(&alg, &mut r, 1.5));
        let f = sf::gaussian(0.1, 0.9);
        let vs: Vec<AlgebraElement> = (0..k).map(|_| random_element(&alg, &mut r)).collect();
        let w = random_element(&alg, &mut r);
        let slot = slot % k;
        let eval = |args: Vec<&AlgebraElement>| moi_eval(&MoiRequest::new(&h, args, &f)).unwrap().element;
        let mut mixed_v = vs.clone();
        mixed_v[slot] = &vs[slot] + &w.scale_real(s);
        let mut with_w: Vec<&AlgebraElement> = vs.iter().collect();
        with_w[slot] = &w;
        let lhs = eval(mixed_v.iter().collect());
        let rhs = &eval(vs.iter().collect()) + &eval(with_w).scale_real(s);
        prop_assert!(rel(&lhs, &rhs) <= 1e-10);
    }

    #[test]
    fn moi_adjoint_reverses_arguments(seed in any::<u64>(), dim in 2usize..6, k in 1usize..4) {
        let (mut r, alg) = weighted(seed, dim);
        let h = op(random_hermitian(&alg, &mut r, 1.5));
        let f = sf::bump(-0.5, 0.5, 0.6).unwrap();
        let vs: Vec<AlgebraElement> = (0..k).map(|_| random_element(&alg, &mut r)).collect();
        let adj: Vec<AlgebraElement> = vs.iter().rev().map(|v| v.adjoint()).collect();
        let t = moi_eval(&MoiRequest::new(&h, vs.iter().collect(), &f)).unwrap().element;
        let s = moi_eval(&MoiRequest::new(&h, adj.iter().collect(), &f)).unwrap().element;
        prop_assert!(rel(&t.adjoint(), &s) <= 1e-10);
    }

    #[test]
    fn repeated_eigenvalues_are_the_split_limit(seed in any::<u64>(), k in 1usize..4) {
        let mut r = rng(seed);
        let alg = TraceAlgebra::matrix(4);
        let f = sf::gaussian(0.0, 0.7);
        let v = random_element(&alg, &mut r);
        let mut basis = rng(seed ^ 0x5eed);
        let eval = |d: f64, basis: &mut FixtureRng| {
            let h = op(hermitian_with_spectrum(&alg, basis, &[vec![-0.6, 0.2, 0.2 + d, 0.9]]));
            moi_eval(&MoiRequest::new(&h, vec![&v; k], &f)).unwrap().element
        };
        let degenerate = eval(0.0, &mut basis.clone());
        let coarse = eval(1e-3, &mut basis.clone());
        let fine = eval(1e-5, &mut basis);
        // first-order extrapolation to δ = 0
        let extrapolated = &fine.scale_real(100.0 / 99.0) - &coarse.scale_real(1.0 / 99.0);
        prop_assert!(rel(&fine, &degenerate) <= 0.02 * rel(&coarse, &degenerate) + 1e-10, "fine {:e} coarse {:e}", rel(&fine, &degenerate), rel(&coarse, &degenerate));
        // what remains after removing the O(δ) term is O(δ²)
        let (e_fine, e_ext) = (rel(&fine, &degenerate), rel(&extrapolated, &degenerate));
        prop_assert!(e_ext <= 0.05 * e_fine + 1e-10, "fine {e_fine:e}, extrapolated {e_ext:e}");
    }

    #[test]
    fn first_order_moi_is_the_difference(seed in any::<u64>(), dim in 1usize..7) {
        let (h, v) = pair(seed, dim, 0.8);
        let hv = op(h.element() + &v);
        let f = sf::gaussian(0.3, 0.6);
        let t = moi_eval(&MoiRequest::new(&h, vec![&v], &f).with_first(&hv)).unwrap().element;
        let diff = &hv.apply(&f).unwrap() - &h.apply(&f).unwrap();
        prop_assert!((&t - &diff).max_entry() <= 1e-9 * (1.0 + diff.max_entry()));
    }

    #[test]
    fn remainders_telescope(seed in any::<u64>(), dim in 1usize..6, n in 2usize..5) {
        let (h, v) = pair(seed, dim, 0.6);
        let f = sf::bump(-0.5, 0.6, 0.5).unwrap();
        let hi = taylor_remainder(&f, &h, &v, n).unwrap().element;
        let lo = taylor_remainder(&f, &h, &v, n - 1).unwrap().element;
        let fact: f64 = (1..n).map(|i| i as f64).product();
        let term = gateaux_derivative(&f, &h, &v, n - 1).unwrap().scale_real(1.0 / fact);
        prop_assert!(rel(&hi, &(&lo - &term)) <= 1e-9);
    }

    #[test]
    fn remainder_traces_are_unitarily_invariant(seed in any::<u64>(), dim in 1usize..6, n in 1usize..4) {
        let (mut r, alg) = weighted(seed, dim);
        let h = op(hermitian_with_spectrum_in(&alg, &mut r, -1.0, 1.0));
        let v = random_hermitian(&alg, &mut r, 0.6);
        let u = block_unitary(&alg, &mut r);
        let hu = op(conjugate(&u, h.element()).hermitian_part());
        let vu = conjugate(&u, &v).hermitian_part();
        let f = sf::gaussian(0.0, 0.8);
        let a = remainder_trace(&f, &h, &v, n).unwrap();
        let b = remainder_trace(&f, &hu, &vu, n).unwrap();
        prop_assert!((a - b).norm() <= 1e-9 * (1.0 + a.norm()));
    }

    #[test]
    fn first_order_trace_formula(seed in any::<u64>(), dim in 1usize..7) {
        let (h, v) = pair(seed, dim, 0.8);
        let f = sf::bump(-0.7, 0.5, 0.6).unwrap();
        let eta = ssf_first_order(&h, &v, -2.5, 2.5).unwrap();
        let c = trace_formula_residual(&eta, &f, &h, &v).unwrap();
        let scale = c.remainder_trace.abs().max(1e-3 * f.sup_norm(1).unwrap() * eta.certified_l1);
        prop_assert!(c.residual <= 1e-7 * scale, "{c:?}");
    }

    #[test]
    fn first_order_bounds_hold_strictly(seed in any::<u64>(), dim in 1usize..7) {
        let (h, v) = pair(seed, dim, 0.8);
        let (a, b, eps) = (-2.5, 2.5, 0.5);
        let mut store = ConstantStore::in_memory();
        let f = sf::bump(-1.0, 0.8, 0.6).unwrap();
        let rep = check_remainder_bound(&f, &h, &v, 1, a, b, eps, &mut store).unwrap();
        prop_assert!(rep.explicit && rep.holds, "{rep:?}");
        let d = constant_D(a, b, 1, eps, &h, &v, &mut store).unwrap().d;
        let eta = ssf_first_order(&h, &v, a, b).unwrap();
        prop_assert!(check_eta_l1_bound(&eta, d).holds);
        let g = sf::gaussian(0.1, 0.9);
        let res = first_order_resolvent_bound(&g, &h, &v).unwrap();
        prop_assert!(res.holds, "{res:?}");
    }

    #[test]
    fn first_order_density_is_an_integer_step_function(seed in any::<u64>(), dim in 1usize..8) {
        let mut r = rng(seed);
        let alg = TraceAlgebra::matrix(dim);
        let h = op(hermitian_with_spectrum_in(&alg, &mut r, -1.0, 1.0));
        let v = random_hermitian(&alg, &mut r, 0.8);
        let hv = op(h.element() + &v);
        let eta = ssf_first_order(&h, &v, -3.0, 3.0).unwrap();
        let d = &eta.density;
        let mid = |s: usize| d.eval_piece(s, 0.5 * (d.breaks()[s] + d.breaks()[s + 1]));
        let eigs: Vec<f64> = h.weighted_spectrum().iter().chain(hv.weighted_spectrum().iter()).map(|p| p.0).collect();
        for s in 0..d.pieces() {
            prop_assert!((mid(s) - mid(s).round()).abs() <= 1e-12);
            if s > 0 && mid(s) != mid(s - 1) {
                let x = d.breaks()[s];
                prop_assert!(eigs.iter().any(|e| (e - x).abs() <= 1e-12), "jump at {x} off the spectra");
            }
        }
    }
}
