//! Multiple operator integrals in the eigenbasis.
//!
//! For `H̃ = Σ λ̃_i P̃_i` and `H = Σ λ_j P_j` the integral with symbol
//! `f^{[k]}` is the finite sum
//!
//! ```text
//! T(V₁, …, V_k) = Σ f^{[k]}(λ̃_{i₀}, λ_{i₁}, …, λ_{i_k}) P̃_{i₀} V₁ P_{i₁} V₂ ⋯ V_k P_{i_k}
//! ```
//!
//! evaluated block by block after rotating every `V_ℓ` into the eigenbases.

mod bounds;
mod store;

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar_functions::{hermite_divided_difference, ScalarFunction, NEAR_TOL};

use crate::trace_algebra::{AlgebraElement, SelfAdjointOperator};
use crate::C64;

pub use bounds::{
    bound_ratio_norm, c2k, estimate_norm_constant, trace_bound_ratio, window_constants,
    NormRatioReport, TraceBoundReport, WindowConstants, DEFAULT_INSTANCES,
};
pub use store::{ConstantKey, ConstantRecord, ConstantStore};

/// Derivative orders beyond the symbol's own kept at crowded eigenvalues.
const TAYLOR_ORDERS: usize = 12;

/// Operands of `T^{H̃,H,…,H}_{f^{[k]}}(V₁, …, V_k)`.
#[derive(Debug, Clone)]
pub struct MoiRequest<'a> {
    /// `H̃`, paired with the first spectral index.
    pub first: &'a SelfAdjointOperator,
    /// `H`, paired with the remaining indices.
    pub rest: &'a SelfAdjointOperator,
    pub perturbations: Vec<&'a AlgebraElement>,
    pub symbol: &'a ScalarFunction,
}

impl<'a> MoiRequest<'a> {
    /// `T^{H,…,H}_{f^{[k]}}(V₁, …, V_k)` with `k = perturbations.len()`.
    pub fn new(
        h: &'a SelfAdjointOperator,
        perturbations: Vec<&'a AlgebraElement>,
        symbol: &'a ScalarFunction,
    ) -> Self {
        MoiRequest {
            first: h,
            rest: h,
            perturbations,
            symbol,
        }
    }

    /// Replaces the operator paired with the first index.
    pub fn with_first(mut self, first: &'a SelfAdjointOperator) -> Self {
        self.first = first;
        self
    }

    pub fn order(&self) -> usize {
        self.perturbations.len()
    }

    fn validate(&self) -> Result<()> {
        if self.perturbations.is_empty() {
            return Err(Error::structural(
                "a multiple operator integral needs at least one perturbation",
            ));
        }
        let alg = self.rest.element();
        alg.ensure_conforms(self.first.element())?;
        for v in &self.perturbations {
            alg.ensure_conforms(v)?;
        }
        self.symbol.require_depth(self.order())
    }

    fn single_operator(&self) -> bool {
        std::ptr::eq(self.first, self.rest)
            || (self.first.eigenvalues() == self.rest.eigenvalues()
                && self.first.eigenvectors() == self.rest.eigenvectors())
    }
}

#[derive(Debug, Clone)]
pub struct MoiResult {
    pub element: AlgebraElement,
    pub trace: C64,
    /// Complex multiply-adds spent in rotations and contraction.
    pub contraction_cost: u64,
    /// Divided-difference symbol values computed.
    pub symbol_evaluations: u64,
}

/// `f^{(j)}` at every eigenvalue of `H̃` (indices `0..n`) and `H`
/// (indices `n..2n`) of one block. Nodes with a near neighbour carry extra
/// orders for the Taylor entries of the divided-difference table.
struct SymbolTable {
    nodes: Vec<f64>,
    derivs: Vec<Vec<C64>>,
}

impl SymbolTable {
    fn new(f: &ScalarFunction, first: &[f64], rest: &[f64], k: usize) -> Result<Self> {
        let nodes: Vec<f64> = first.iter().chain(rest).copied().collect();
        let mut sorted = nodes.clone();
        sorted.sort_by(f64::total_cmp);
        let crowded = |x: f64| {
            let reach = NEAR_TOL * (1.0 + x.abs());
            let lo = sorted.partition_point(|&y| y < x - reach);
            let hi = sorted.partition_point(|&y| y <= x + reach);
            hi - lo > 1
        };
        let derivs = nodes
            .iter()
            .map(|&x| {
                let top = if crowded(x) {
                    f.depth().min(k + 1 + TAYLOR_ORDERS)
                } else {
                    k
                };
                (0..=top)
                    .map(|j| f.derivative(j, x))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SymbolTable { nodes, derivs })
    }

    /// Divided difference over the listed node indices.
    fn dd(&self, idx: &[usize]) -> C64 {
        let vals: Vec<f64> = idx.iter().map(|&i| self.nodes[i]).collect();
        hermite_divided_difference(&vals, |p, j| self.derivs[idx[p]].get(j).copied())
    }
}

struct Row {
    values: Vec<C64>,
    cost: u64,
    evals: u64,
}

/// Contracts one block: `R[i₀, i_k] = Σ sym(i₀, i₁, …, i_k) W₁[i₀,i₁] ⋯ W_k[i_{k−1},i_k]`
/// with `nodes(i₀, rest, buf)` listing the symbol's node indices. With no
/// factors the result is diagonal, `R[i,i] = sym(i)`.
fn contract(
    n: usize,
    ws: &[DMatrix<C64>],
    table: &SymbolTable,
    nodes: &(dyn Fn(usize, &[usize], &mut Vec<usize>) + Sync),
) -> (DMatrix<C64>, u64, u64) {
    let k = ws.len();
    let memoize = k >= 3;
    let rows: Vec<Row> = (0..n)
        .into_par_iter()
        .map(|i0| {
            let mut row = Row {
                values: vec![C64::new(0.0, 0.0); n],
                cost: 0,
                evals: 0,
            };
            let mut memo: HashMap<Vec<usize>, C64> = HashMap::new();
            let mut idx = vec![0usize; k];
            let mut buf = Vec::with_capacity(k + 2);
            let mut eval = |idx: &[usize], row: &mut Row| -> C64 {
                buf.clear();
                nodes(i0, idx, &mut buf);
                if memoize {
                    buf.sort_unstable();
                    if let Some(v) = memo.get(&buf) {
                        return *v;
                    }
                }
                row.evals += 1;
                let v = table.dd(&buf);
                if memoize {
                    memo.insert(buf.clone(), v);
                }
                v
            };
            if k == 0 {
                row.values[i0] = eval(&[], &mut row);
                return row;
            }
            // depth-first over (i₁, …, i_k) carrying the running product
            fn walk(
                level: usize,
                prev: usize,
                prefix: C64,
                ws: &[DMatrix<C64>],
                idx: &mut [usize],
                row: &mut Row,
                eval: &mut dyn FnMut(&[usize], &mut Row) -> C64,
            ) {
                let n = ws[level].ncols();
                for i in 0..n {
                    let w = ws[level][(prev, i)];
                    if w == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let p = prefix * w;
                    idx[level] = i;
                    row.cost += 1;
                    if level + 1 == ws.len() {
                        let s = eval(idx, row);
                        row.values[i] += s * p;
                        row.cost += 1;
                    } else {
                        walk(level + 1, i, p, ws, idx, row, eval);
                    }
                }
            }
            walk(0, i0, C64::new(1.0, 0.0), ws, &mut idx, &mut row, &mut eval);
            row
        })
        .collect();
    let mut r = DMatrix::<C64>::zeros(n, n);
    let (mut cost, mut evals) = (0, 0);
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row.values.into_iter().enumerate() {
            r[(i, j)] = v;
        }
        cost += row.cost;
        evals += row.evals;
    }
    (r, cost, evals)
}

fn rotation_cost(n: usize, count: usize) -> u64 {
    2 * count as u64 * (n as u64).pow(3)
}

/// Exact finite-dimensional multiple operator integral.
pub fn moi_eval(req: &MoiRequest) -> Result<MoiResult> {
    req.validate()?;
    let k = req.order();
    let algebra = req.rest.algebra().clone();
    let mut blocks = Vec::with_capacity(algebra.blocks().len());
    let (mut cost, mut evals) = (0u64, 0u64);
    for b in 0..algebra.blocks().len() {
        let ut = &req.first.eigenvectors()[b];
        let u = &req.rest.eigenvectors()[b];
        let n = u.nrows();
        let ws: Vec<DMatrix<C64>> = req
            .perturbations
            .iter()
            .enumerate()
            .map(|(l, v)| {
                if l == 0 {
                    ut.adjoint() * &v.blocks()[b] * u
                } else {
                    u.adjoint() * &v.blocks()[b] * u
                }
            })
            .collect();
        let table = SymbolTable::new(
            req.symbol,
            &req.first.eigenvalues()[b],
            &req.rest.eigenvalues()[b],
            k,
        )?;
        let nodes = |i0: usize, rest: &[usize], buf: &mut Vec<usize>| {
            buf.push(i0);
            buf.extend(rest.iter().map(|&i| n + i));
        };
        let (r, c, e) = contract(n, &ws, &table, &nodes);
        blocks.push(ut * r * u.adjoint());
        cost += c + rotation_cost(n, k + 2);
        evals += e;
    }
    let element = AlgebraElement::from_blocks_unchecked(algebra, blocks);
    let trace = element.trace();
    Ok(MoiResult {
        element,
        trace,
        contraction_cost: cost,
        symbol_evaluations: evals,
    })
}

/// `τ(T_{f^{[k]}}(V₁, …, V_k))`.
///
/// For `H̃ = H`, cyclicity of the trace gives
/// `τ(T_{f^{[k]}}(V₁, …, V_k)) = τ(T_{f̃}(V₂, …, V_k) V₁)` with
/// `f̃(x₀, …, x_{k−1}) = f^{[k]}(x₀, …, x_{k−1}, x_{k−1})`, a contraction of
/// one order less. Otherwise the full element is traced.
pub fn moi_trace(req: &MoiRequest) -> Result<C64> {
    Ok(moi_trace_detailed(req)?.0)
}

/// [`moi_trace`] together with contraction cost and symbol evaluations.
pub fn moi_trace_detailed(req: &MoiRequest) -> Result<(C64, u64, u64)> {
    req.validate()?;
    if !req.single_operator() {
        let r = moi_eval(req)?;
        return Ok((r.trace, r.contraction_cost, r.symbol_evaluations));
    }
    let k = req.order();
    let algebra: Arc<_> = req.rest.algebra().clone();
    let mut trace = C64::new(0.0, 0.0);
    let (mut cost, mut evals) = (0u64, 0u64);
    for (b, block) in algebra.blocks().iter().enumerate() {
        let u = &req.rest.eigenvectors()[b];
        let n = u.nrows();
        let rotated: Vec<DMatrix<C64>> = req
            .perturbations
            .iter()
            .map(|v| u.adjoint() * &v.blocks()[b] * u)
            .collect();
        let table = SymbolTable::new(
            req.symbol,
            &req.rest.eigenvalues()[b],
            &req.rest.eigenvalues()[b],
            k,
        )?;
        let nodes = |i0: usize, rest: &[usize], buf: &mut Vec<usize>| {
            buf.push(i0);
            buf.extend(rest.iter().map(|&i| n + i));
            let last = rest.last().map_or(i0, |&i| n + i);
            buf.push(last);
        };
        let (r, c, e) = contract(n, &rotated[1..], &table, &nodes);
        // Tr(R W₁)
        let w1 = &rotated[0];
        let mut t = C64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                t += r[(i, j)] * w1[(j, i)];
            }
        }
        trace += t * block.weight;
        cost += c + rotation_cost(n, k) + (n * n) as u64;
        evals += e;
    }
    Ok((trace, cost, evals))
}
