use super::ScalarFunction;
use crate::error::Result;
use crate::C64;

/// Relative distance below which nodes are treated as coincident.
pub const CONFLUENCE_TOL: f64 = 1e-7;

/// Divided difference with its confluence structure.
#[derive(Debug, Clone, PartialEq)]
pub struct DividedDifferenceTable {
    pub nodes: Vec<f64>,
    pub value: C64,
    /// Representative node and multiplicity of each confluent cluster, in
    /// ascending order.
    pub multiplicities: Vec<(f64, usize)>,
}

/// Sorted order of `nodes` and, for each sorted position, the sorted position
/// of the first member of its cluster.
fn clusters(nodes: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.sort_by(|&a, &b| nodes[a].total_cmp(&nodes[b]));
    let mut rep = vec![0; nodes.len()];
    let mut start = 0;
    for s in 1..nodes.len() {
        let z0 = nodes[order[start]];
        if nodes[order[s]] - z0 > CONFLUENCE_TOL * (1.0 + z0.abs()) {
            start = s;
        }
        rep[s] = start;
    }
    (order, rep)
}

/// Largest cluster size among `nodes`.
pub fn max_multiplicity(nodes: &[f64]) -> usize {
    let (_, rep) = clusters(nodes);
    let mut best = 0;
    let mut run = 0;
    for (s, &r) in rep.iter().enumerate() {
        run = if s > 0 && r == rep[s - 1] { run + 1 } else { 1 };
        best = best.max(run);
    }
    best
}

/// Relative gap below which distinct nodes are grouped for Taylor evaluation.
pub const NEAR_TOL: f64 = 1e-3;
/// Widest near cluster, relative to `1 + |z|`.
const NEAR_WIDTH: f64 = 1e-2;
/// Most Taylor terms summed per table entry.
const MAX_TAYLOR_TERMS: usize = 16;

/// Near-cluster id of each sorted position.
fn near_clusters(z: &[f64]) -> Vec<usize> {
    let mut id = vec![0; z.len()];
    let mut start = 0;
    for s in 1..z.len() {
        let scale = 1.0 + z[s].abs();
        if z[s] - z[s - 1] > NEAR_TOL * scale || z[s] - z[start] > NEAR_WIDTH * scale {
            start = s;
        }
        id[s] = start;
    }
    id
}

/// `Σ_q g^{(j+q)}(c)/(j+q)! · h_q(w)` with `w` the offsets from `c`; `None`
/// when fewer than three terms are available and the offsets are not all zero.
fn taylor_entry(w: &[f64], j: usize, mut deriv: impl FnMut(usize) -> Option<C64>) -> Option<C64> {
    let confluent = w.iter().all(|&x| x == 0.0);
    let mut fact: f64 = (1..=j).map(|i| i as f64).product();
    let mut acc = deriv(j)? / fact;
    if confluent {
        return Some(acc);
    }
    // h[m] = h_q(w[..=m]) for the current q
    let mut h = vec![1.0; w.len()];
    let mut small = 0;
    for q in 1..MAX_TAYLOR_TERMS {
        let mut prev = 0.0;
        for (m, &x) in w.iter().enumerate() {
            h[m] = prev + x * h[m];
            prev = h[m];
        }
        let Some(g) = deriv(j + q) else {
            return if q >= 3 { Some(acc) } else { None };
        };
        fact *= (j + q) as f64;
        let term = g / fact * h[w.len() - 1];
        acc += term;
        small = if term.norm() <= f64::EPSILON * acc.norm() {
            small + 1
        } else {
            0
        };
        if small >= 2 {
            break;
        }
    }
    Some(acc)
}

/// Hermite divided difference of the nodes, with `deriv(i, j)` returning
/// `g^{(j)}(nodes[i])` or `None` past the available depth.
///
/// Nodes within [`CONFLUENCE_TOL`] of a cluster's smallest member are
/// evaluated at that member. Entries whose nodes sit in one near cluster are
/// summed as Taylor series about their first node, which keeps the table
/// accurate as nodes approach each other; other entries use difference
/// quotients.
pub fn hermite_divided_difference(
    nodes: &[f64],
    mut deriv: impl FnMut(usize, usize) -> Option<C64>,
) -> C64 {
    let n = nodes.len();
    assert!(n >= 1, "divided difference needs at least one node");
    let nan = C64::new(f64::NAN, f64::NAN);
    if n == 1 {
        return deriv(0, 0).unwrap_or(nan);
    }
    let (order, rep) = clusters(nodes);
    let z: Vec<f64> = (0..n).map(|s| nodes[order[rep[s]]]).collect();
    let near = near_clusters(&z);
    let mut d: Vec<C64> = (0..n)
        .map(|s| deriv(order[rep[s]], 0).unwrap_or(nan))
        .collect();
    for j in 1..n {
        for s in 0..n - j {
            let quotient = (d[s + 1] - d[s]) / (z[s + j] - z[s]);
            d[s] = if near[s] == near[s + j] {
                let w: Vec<f64> = z[s..=s + j].iter().map(|x| x - z[s]).collect();
                let node = order[rep[s]];
                match taylor_entry(&w, j, |m| deriv(node, m)) {
                    Some(v) => v,
                    None if rep[s] == rep[s + j] => nan,
                    None => quotient,
                }
            } else {
                quotient
            };
        }
    }
    d[0]
}

/// `f^{[n]}(λ₀, …, λₙ)` for `n + 1` nodes.
pub fn divided_difference(f: &ScalarFunction, nodes: &[f64]) -> Result<C64> {
    Ok(divided_difference_table(f, nodes)?.value)
}

pub fn divided_difference_table(
    f: &ScalarFunction,
    nodes: &[f64],
) -> Result<DividedDifferenceTable> {
    if nodes.is_empty() {
        return Err(crate::Error::domain(
            "divided difference needs at least one node",
        ));
    }
    if let Some(x) = nodes.iter().find(|x| !x.is_finite()) {
        return Err(crate::Error::domain(format!("non-finite node {x}")));
    }
    f.require_depth(max_multiplicity(nodes) - 1)?;
    let mut failure = None;
    let value = hermite_divided_difference(nodes, |i, j| match f.derivative(j, nodes[i]) {
        Ok(v) => Some(v),
        Err(crate::Error::Capability(_)) => None,
        Err(e) => {
            failure.get_or_insert(e);
            None
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let (order, rep) = clusters(nodes);
    let mut multiplicities: Vec<(f64, usize)> = Vec::new();
    for s in 0..nodes.len() {
        if s > 0 && rep[s] == rep[s - 1] {
            multiplicities.last_mut().expect("cluster started").1 += 1;
        } else {
            multiplicities.push((nodes[order[s]], 1));
        }
    }
    Ok(DividedDifferenceTable {
        nodes: nodes.to_vec(),
        value,
        multiplicities,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::scalar_functions::fixtures;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    /// Top-right entry of `f` applied to the upper-bidiagonal node matrix,
    /// summed as a Taylor series about the node mean.
    fn opitz(f: &ScalarFunction, nodes: &[f64]) -> C64 {
        let n = nodes.len();
        let c = nodes.iter().sum::<f64>() / n as f64;
        let mut m = DMatrix::<C64>::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(nodes[i] - c, 0.0);
            if i + 1 < n {
                m[(i, i + 1)] = C64::new(1.0, 0.0);
            }
        }
        let mut power = DMatrix::<C64>::identity(n, n);
        let mut acc = C64::new(0.0, 0.0);
        let mut fact = 1.0;
        for k in 0..80 {
            if k > 0 {
                fact *= k as f64;
                power = &power * &m;
            }
            acc += f.derivative(k, c).unwrap() / fact * power[(0, n - 1)];
        }
        acc
    }

    #[test]
    fn known_values() {
        let sq = fixtures::polynomial(&[0.0, 0.0, 1.0]);
        assert!((divided_difference(&sq, &[1.0, 3.0]).unwrap().re - 4.0).abs() < 1e-15);
        let cube = fixtures::polynomial(&[0.0, 0.0, 0.0, 1.0]);
        assert!((divided_difference(&cube, &[2.0, 2.0, 2.0]).unwrap().re - 6.0).abs() < 1e-14);
        let nodes = [0.3, 1.1, 1.1, 2.0];
        let dd = divided_difference(&fixtures::sin(), &nodes).unwrap();
        assert!((dd - opitz(&fixtures::sin(), &nodes)).norm() < 1e-13);
    }

    #[test]
    fn multiplicity_report() {
        let t = divided_difference_table(&fixtures::sin(), &[1.0, 0.0, 1.0 + 1e-9, 1.0]).unwrap();
        assert_eq!(t.multiplicities, vec![(0.0, 1), (1.0, 3)]);
    }

    #[test]
    fn depth_shortfall() {
        let f = ScalarFunction::from_fn("lin", Some(1), |k, x| {
            C64::new(if k == 0 { x } else { 1.0 }, 0.0)
        });
        assert!(divided_difference(&f, &[0.0, 0.0]).is_ok());
        assert!(matches!(
            divided_difference(&f, &[0.0, 0.0, 0.0]),
            Err(Error::Capability(_))
        ));
    }

    #[test]
    fn confluence_limit_is_continuous() {
        let f = fixtures::exp();
        let base = divided_difference(&f, &[0.2, 0.7, 0.7]).unwrap();
        for &d in &[1e-3, 1e-4, 1e-5] {
            let v = divided_difference(&f, &[0.2, 0.7, 0.7 + d]).unwrap();
            assert!((v - base).norm() <= 2.0 * d);
        }
    }

    #[test]
    fn near_coincident_nodes_stay_accurate() {
        let f = fixtures::gaussian(0.0, 0.7);
        for &d in &[1e-3, 1e-5, 1e-6] {
            let nodes = [-0.6, 0.2, 0.2 + d, 0.2 + 2.0 * d, 0.9];
            let v = divided_difference(&f, &nodes).unwrap();
            let exact = opitz(&f, &nodes);
            assert!(
                (v - exact).norm() <= 1e-10 * (1.0 + exact.norm()),
                "d={d}: {v} vs {exact}"
            );
        }
    }

    fn h_complete(nodes: &[f64], deg: usize) -> f64 {
        // complete homogeneous symmetric polynomial by recursion on the node count
        if deg == 0 {
            return 1.0;
        }
        if nodes.is_empty() {
            return 0.0;
        }
        let (first, rest) = nodes.split_first().unwrap();
        (0..=deg)
            .map(|j| first.powi(j as i32) * h_complete(rest, deg - j))
            .sum()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn permutation_invariance(mut nodes in prop::collection::vec(-2.0f64..2.0, 2..6), rot in 0usize..6) {
            let f = fixtures::gaussian(0.1, 0.9);
            let a = divided_difference(&f, &nodes).unwrap();
            let r = rot % nodes.len();
            nodes.rotate_left(r);
            nodes.reverse();
            let b = divided_difference(&f, &nodes).unwrap();
            prop_assert!((a - b).norm() <= 1e-9 * (1.0 + a.norm()));
        }

        #[test]
        fn agrees_with_opitz(nodes in prop::collection::vec(-1.5f64..1.5, 1..6), dup in 0usize..6) {
            let mut nodes = nodes;
            let d = dup % nodes.len();
            // near-coincident but distinct nodes are ill-conditioned for any quotient table
            let mut sorted = nodes.clone();
            sorted.sort_by(f64::total_cmp);
            prop_assume!(sorted.windows(2).all(|w| w[1] - w[0] > 1e-2));
            nodes.push(nodes[d]);
            let f = fixtures::sin();
            let a = divided_difference(&f, &nodes).unwrap();
            prop_assert!((a - opitz(&f, &nodes)).norm() <= 1e-9);
        }

        #[test]
        fn mean_value_bound(nodes in prop::collection::vec(-2.0f64..2.0, 2..6)) {
            let f = fixtures::gaussian(0.0, 1.0);
            let n = nodes.len() - 1;
            let v = divided_difference(&f, &nodes).unwrap().norm();
            let fact: f64 = (1..=n).map(|k| k as f64).product();
            prop_assert!(v <= f.sup_norm(n).unwrap() / fact * (1.0 + 1e-9));
        }

        #[test]
        fn monomial_exactness(nodes in prop::collection::vec(-2.0f64..2.0, 1..6), m in 0usize..8) {
            let mut coeffs = vec![0.0; m + 1];
            coeffs[m] = 1.0;
            let f = fixtures::polynomial(&coeffs);
            let n = nodes.len() - 1;
            let v = divided_difference(&f, &nodes).unwrap().re;
            let expected = if m < n { 0.0 } else { h_complete(&nodes, m - n) };
            prop_assert!((v - expected).abs() <= 1e-8 * (1.0 + expected.abs()), "{v} vs {expected}");
        }

        #[test]
        fn leibniz_with_u(x in -3.0f64..3.0, y in -3.0f64..3.0) {
            let f = fixtures::gaussian(0.3, 1.2);
            let fu = f.times_u_power(1);
            let lhs = divided_difference(&fu, &[x, y]).unwrap();
            let rhs = divided_difference(&f, &[x, y]).unwrap() * C64::new(y, -1.0) + f.value(x).unwrap();
            prop_assert!((lhs - rhs).norm() <= 1e-9 * (1.0 + lhs.norm()));
        }
    }
}
