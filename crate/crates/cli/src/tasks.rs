use rand::Rng;
use rayon::prelude::*;
use specact::moi::{
    bound_ratio_norm, c2k, estimate_norm_constant, window_constants, ConstantKey, ConstantStore,
};
use specact::scalar_functions::{class_witness, fixtures as sf};
use specact::spectral_action::{
    check_remainder_bound, constant_D, fd_derivative_refined, gateaux_derivative, remainder_trace,
    taylor_remainder,
};
use specact::ssf::{
    check_eta_l1_bound, divided_difference_expansion_defect, first_order_resolvent_bound,
    first_order_resolvent_defect, growth_envelope_constant, resolvent_expansion_defect,
    ssf_first_order_on_grid, ssf_reconstruct, trace_formula_residual, uniqueness_gauge_check,
    SpectralShiftFunction, TestFunctionFamily, MAX_EXPANSION_ORDER,
};
use specact::{
    moi_eval, moi_trace, ClassTag, Error, Interval, MoiRequest, ScalarFunction, TraceAlgebra,
};

use crate::config::{ExperimentConfig, Fixture, FunctionSpec, Task};
use crate::error::HarnessError;
use crate::registry::CheckTag;
use crate::report::{CheckRecord, Series, SeriesKind, Verdict, VerificationReport};

type Out<T> = Result<T, HarnessError>;

/// Records and plot rows produced by one fixture.
#[derive(Default)]
struct Partial {
    records: Vec<CheckRecord>,
    margin: Vec<(String, f64, f64)>,
}

impl Partial {
    fn push(&mut self, r: CheckRecord) {
        self.records.push(r);
    }
}

/// `value` against `oracle`, passing when `|value − oracle| ≤ tol (1 + |oracle|)`.
fn matches(tag: CheckTag, id: &str, value: f64, oracle: f64, tol: f64) -> CheckRecord {
    let ok = (value - oracle).abs() <= tol * (1.0 + oracle.abs());
    CheckRecord {
        tag,
        fixture: id.to_string(),
        value,
        bound: oracle,
        verdict: Verdict::check(ok),
    }
}

/// Skips checks whose preconditions the function does not meet.
fn applicable<T>(r: specact::Result<T>) -> Out<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::Capability(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn build(specs: &[FunctionSpec]) -> Out<Vec<ScalarFunction>> {
    specs
        .iter()
        .enumerate()
        .map(|(i, s)| {
            s.build().map_err(|e| HarnessError::Config {
                path: format!("functions[{i}]"),
                message: e.to_string(),
            })
        })
        .collect()
}

/// Bump sitting in the middle half of `[a, b]`.
fn inner_bump(a: f64, b: f64) -> FunctionSpec {
    let w = b - a;
    FunctionSpec::Bump {
        a: a + 0.3 * w,
        b: b - 0.3 * w,
        eps: 0.15 * w,
    }
}

fn supported_in(f: &ScalarFunction, a: f64, b: f64) -> bool {
    matches!(f.support(), Some((lo, hi)) if lo >= a && hi <= b)
}

/// Dispatches the configured task and collects every record in fixture order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Out<VerificationReport> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(HarnessError::io)?;
    pool.install(|| match cfg.task {
        Task::Remainder => remainder(cfg),
        Task::Ssf => ssf(cfg),
        Task::VerifyIdentities => identities(cfg),
        Task::VerifyBounds => bounds(cfg),
        Task::Bump => bump(cfg),
        Task::Constants => constants(cfg),
    })
}

fn per_fixture(
    cfg: &ExperimentConfig,
    f: impl Fn(usize, &Fixture) -> Out<Partial> + Sync,
) -> Out<Vec<Partial>> {
    (0..cfg.fixtures)
        .into_par_iter()
        .map(|i| f(i, &cfg.fixture(i)?))
        .collect()
}

fn assemble(
    cfg: &ExperimentConfig,
    parts: Vec<Partial>,
    store: Option<&ConstantStore>,
) -> VerificationReport {
    let mut report = VerificationReport::new(cfg.task.as_str(), cfg.seed);
    let mut margin = Series::default();
    for p in parts {
        report.records.extend(p.records);
        for (id, t, b) in p.margin {
            margin.labels.push(id);
            margin.rows.push(vec![t, b]);
        }
    }
    if !margin.rows.is_empty() {
        report.series.insert(SeriesKind::BoundMargin, margin);
    }
    if let Some(store) = store {
        report.constants = snapshot(store);
    }
    report
}

fn snapshot(store: &ConstantStore) -> Vec<(String, f64)> {
    let mut keys: Vec<ConstantKey> = store.records().into_iter().map(|r| r.key).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .map(|k| (k.to_string(), store.sup(&k).unwrap_or(f64::NAN)))
        .collect()
}

fn open_store(cfg: &ExperimentConfig) -> Out<ConstantStore> {
    Ok(match &cfg.params.store {
        Some(p) => ConstantStore::open(p)?,
        None => ConstantStore::in_memory(),
    })
}

/// Fills in `c_{2,k}` for `k < n` so fixtures can share read-only clones.
fn prepared_store(cfg: &ExperimentConfig, n: usize) -> Out<ConstantStore> {
    let mut store = open_store(cfg)?;
    for k in 1..n {
        c2k(&mut store, k)?;
    }
    Ok(store)
}

fn remainder_bound(
    p: &mut Partial,
    id: &str,
    f: &ScalarFunction,
    fx: &Fixture,
    n: usize,
    cfg: &ExperimentConfig,
    store: &ConstantStore,
) -> Out<()> {
    let (a, b, eps) = (cfg.params.a, cfg.params.b, cfg.params.eps);
    if !supported_in(f, a, b) {
        return Ok(());
    }
    let mut store = store.clone();
    if let Some(r) = applicable(check_remainder_bound(
        f, &fx.h0, &fx.v, n, a, b, eps, &mut store,
    ))? {
        let bound = r.bound.d * r.sup_derivative;
        let verdict = if r.explicit {
            Verdict::check(r.holds)
        } else {
            Verdict::Info
        };
        p.push(CheckRecord {
            tag: CheckTag::RemainderBound,
            fixture: id.to_string(),
            value: r.abs_trace,
            bound,
            verdict,
        });
        p.margin.push((id.to_string(), r.abs_trace, bound));
    }
    Ok(())
}

fn remainder(cfg: &ExperimentConfig) -> Out<VerificationReport> {
    let (a, b) = (cfg.params.a, cfg.params.b);
    let fns = build(&cfg.functions_or(vec![
        inner_bump(a, b),
        FunctionSpec::Gaussian {
            mu: 0.0,
            sigma: 1.0,
        },
    ]))?;
    let n = cfg.params.n;
    let store = prepared_store(cfg, n)?;
    let tol = &cfg.params.tolerances;
    let parts = per_fixture(cfg, |_, fx| {
        let mut p = Partial::default();
        for f in &fns {
            let id = format!("{}:{}", fx.id, f.name());
            let rec = taylor_remainder(f, &fx.h0, &fx.v, n)?;
            let reduced = remainder_trace(f, &fx.h0, &fx.v, n)?.re;
            p.push(matches(
                CheckTag::RemainderTrace,
                &id,
                rec.trace,
                reduced,
                tol.cyclicity,
            ));
            remainder_bound(&mut p, &id, f, fx, n, cfg, &store)?;
        }
        Ok(p)
    })?;
    Ok(assemble(cfg, parts, Some(&store)))
}

/// Largest distance of a first-order density value from the sums
/// `Σ k_b w_b` with `|k_b| ≤ dim_b`.
fn lattice_distance(eta: &SpectralShiftFunction, alg: &TraceAlgebra) -> f64 {
    let mut levels = vec![0.0f64];
    for blk in alg.blocks() {
        let d = blk.dim as i64;
        levels = levels
            .iter()
            .flat_map(|&l| (-d..=d).map(move |k| l + k as f64 * blk.weight))
            .collect();
        levels.sort_by(f64::total_cmp);
        levels.dedup_by(|x, y| (*x - *y).abs() < 1e-14);
    }
    let dist = |x: f64| {
        let i = levels.partition_point(|&l| l < x);
        let lo = if i > 0 {
            (x - levels[i - 1]).abs()
        } else {
            f64::INFINITY
        };
        let hi = levels.get(i).map_or(f64::INFINITY, |l| (l - x).abs());
        lo.min(hi)
    };
    let d = &eta.density;
    (0..d.pieces())
        .map(|s| dist(d.eval_piece(s, 0.5 * (d.breaks()[s] + d.breaks()[s + 1]))))
        .chain(eta.values.iter().map(|&x| dist(x)))
        .fold(0.0, f64::max)
}

fn ssf(cfg: &ExperimentConfig) -> Out<VerificationReport> {
    let n = cfg.params.n;
    let (a, b) = cfg.window();
    let fns = build(&cfg.functions_or(vec![inner_bump(a, b)]))?;
    let store = prepared_store(cfg, n)?;
    let tol = &cfg.params.tolerances;
    let grid = cfg.params.grid_size;
    let eps = cfg.params.eps;
    let results: Vec<(Partial, SpectralShiftFunction, Vec<(f64, f64, f64)>)> = (0..cfg.fixtures)
        .into_par_iter()
        .map(|i| {
            let fx = cfg.fixture(i)?;
            let mut p = Partial::default();
            let id = fx.id.as_str();
            let mut store = store.clone();
            let d = constant_D(a, b, n, eps, &fx.h0, &fx.v, &mut store)?.d;
            let eta = if n == 1 {
                let eta = ssf_first_order_on_grid(&fx.h0, &fx.v, a, b, grid)?;
                p.push(CheckRecord::at_most(
                    CheckTag::FirstOrderIntegrality,
                    id,
                    lattice_distance(&eta, fx.h0.algebra()),
                    1e-9,
                ));
                for f in fns.iter().filter(|f| supported_in(f, a, b)) {
                    let c = trace_formula_residual(&eta, f, &fx.h0, &fx.v)?;
                    let scale = c
                        .remainder_trace
                        .abs()
                        .max(1e-3 * f.sup_norm(1)? * eta.certified_l1);
                    p.push(CheckRecord::at_most(
                        CheckTag::FirstOrderTraceFormula,
                        format!("{id}:{}", f.name()),
                        c.residual,
                        tol.trace_formula * scale,
                    ));
                }
                eta
            } else {
                let fam = TestFunctionFamily::for_operators(&fx.h0, &fx.v, n, a, b, 0.0)?;
                let eta = ssf_reconstruct(&fx.h0, &fx.v, n, (a, b), grid, &fam)?;
                let diag = eta
                    .diagnostics
                    .clone()
                    .expect("reconstructions carry diagnostics");
                let l1 = eta.certified_l1;
                p.push(CheckRecord::at_most(
                    CheckTag::SsfHeldOut,
                    id,
                    diag.held_out_residual,
                    tol.held_out * l1,
                ));
                let gauge = diag
                    .gauge_residuals
                    .iter()
                    .fold(0.0f64, |m, r| m.max(r.abs()));
                p.push(CheckRecord::at_most(
                    CheckTag::SsfGauge,
                    id,
                    gauge,
                    tol.gauge,
                ));
                for f in fns.iter().filter(|f| supported_in(f, a, b)) {
                    if let Some(c) = applicable(trace_formula_residual(&eta, f, &fx.h0, &fx.v))? {
                        p.push(CheckRecord::at_most(
                            CheckTag::SsfTraceFormula,
                            format!("{id}:{}", f.name()),
                            c.normalized,
                            tol.held_out * l1,
                        ));
                    }
                }
                let other = TestFunctionFamily::for_operators(&fx.h0, &fx.v, n, a, b, 0.5)?;
                let eta_b = ssf_reconstruct(&fx.h0, &fx.v, n, (a, b), grid, &other)?;
                let u = uniqueness_gauge_check(&eta, &eta_b, n)?;
                p.push(CheckRecord::at_most(
                    CheckTag::SsfUniqueness,
                    id,
                    u.relative,
                    tol.uniqueness,
                ));
                eta
            };
            let e = check_eta_l1_bound(&eta, d);
            p.push(if e.explicit {
                CheckRecord::at_most(CheckTag::SsfL1Bound, id, e.l1, e.d)
            } else {
                CheckRecord::info(CheckTag::SsfL1Bound, id, e.l1, e.d)
            });
            let rep = if n == 1 {
                eta.clone()
            } else {
                eta.compact_representative()
            };
            let g = growth_envelope_constant(&rep, &fx.h0, &fx.v, n)?;
            p.push(CheckRecord::info(
                CheckTag::GrowthEnvelope,
                id,
                g.k_empirical,
                f64::INFINITY,
            ));
            Ok((p, eta, g.samples))
        })
        .collect::<Out<_>>()?;
    let mut first = None;
    let mut parts = Vec::with_capacity(results.len());
    for (p, eta, samples) in results {
        if first.is_none() {
            first = Some((eta, samples));
        }
        parts.push(p);
    }
    let mut report = assemble(cfg, parts, Some(&store));
    if let Some((eta, samples)) = first {
        let rows = eta
            .grid
            .iter()
            .zip(&eta.values)
            .map(|(x, y)| vec![*x, *y])
            .collect();
        report.series.insert(
            SeriesKind::Ssf,
            Series {
                labels: vec![],
                rows,
            },
        );
        let rows = samples.into_iter().map(|(x, y, e)| vec![x, y, e]).collect();
        report.series.insert(
            SeriesKind::Growth,
            Series {
                labels: vec![],
                rows,
            },
        );
    }
    Ok(report)
}

/// Node sets per fixture for the scalar expansion.
const NODE_SETS: usize = 10;

fn identities(cfg: &ExperimentConfig) -> Out<VerificationReport> {
    let n = cfg.params.n;
    let tol = &cfg.params.tolerances;
    let scalar = build(&cfg.functions_or(vec![
        FunctionSpec::Exp,
        FunctionSpec::Gaussian {
            mu: 0.1,
            sigma: 0.9,
        },
    ]))?;
    let operator = build(&cfg.functions_or(vec![
        FunctionSpec::Gaussian {
            mu: 0.0,
            sigma: 0.9,
        },
        FunctionSpec::Bump {
            a: -0.5,
            b: 0.5,
            eps: 0.4,
        },
    ]))?;
    let first = build(&cfg.functions_or(vec![
        FunctionSpec::Gaussian {
            mu: 0.0,
            sigma: 0.9,
        },
        FunctionSpec::Bump {
            a: -0.5,
            b: 0.5,
            eps: 0.4,
        },
        FunctionSpec::InvU,
    ]))?;
    let parts = per_fixture(cfg, |i, fx| {
        let mut p = Partial::default();
        let mut r = cfg.fixture_rng(cfg.fixtures + i);
        for s in 0..NODE_SETS {
            let mut nodes: Vec<f64> = (0..=n).map(|_| r.random_range(-2.0..2.0)).collect();
            // every other set is confluent
            if s % 2 == 1 {
                let m = (s / 2) % n + 1;
                for j in 1..=m {
                    nodes[j] = nodes[0];
                }
            }
            for f in &scalar {
                let d = divided_difference_expansion_defect(f, &nodes)?;
                p.push(CheckRecord::at_most(
                    CheckTag::DividedDifferenceExpansion,
                    format!("{}:{}:nodes{s}", fx.id, f.name()),
                    d,
                    tol.scalar_identity,
                ));
            }
        }
        for f in &operator {
            for order in 2..=n.min(MAX_EXPANSION_ORDER) {
                if let Some(d) =
                    applicable(resolvent_expansion_defect(f, &fx.h0, &fx.v, 1.0, order))?
                {
                    p.push(CheckRecord::at_most(
                        CheckTag::ResolventExpansion,
                        format!("{}:{}:n{order}", fx.id, f.name()),
                        d.defect,
                        tol.operator_identity,
                    ));
                }
            }
        }
        for f in &first {
            if let Some(d) = applicable(first_order_resolvent_defect(f, &fx.h0, &fx.v))? {
                p.push(CheckRecord::at_most(
                    CheckTag::FirstOrderResolventIdentity,
                    format!("{}:{}", fx.id, f.name()),
                    d.defect,
                    tol.first_order_identity,
                ));
            }
        }
        Ok(p)
    })?;
    Ok(assemble(cfg, parts, None))
}

fn bounds(cfg: &ExperimentConfig) -> Out<VerificationReport> {
    let n = cfg.params.n;
    let (a, b, eps) = (cfg.params.a, cfg.params.b, cfg.params.eps);
    let tol = &cfg.params.tolerances;
    let fns = build(&cfg.functions_or(vec![
        inner_bump(a, b),
        FunctionSpec::Gaussian {
            mu: 0.2,
            sigma: 0.7,
        },
    ]))?;
    let kmax = n.min(3);
    let store = prepared_store(cfg, n.max(kmax + 1))?;
    let parts = per_fixture(cfg, |_, fx| {
        let mut p = Partial::default();
        for f in &fns {
            let id = format!("{}:{}", fx.id, f.name());
            for k in 1..=kmax {
                let kid = format!("{id}:k{k}");
                let full = moi_eval(&MoiRequest::new(&fx.h0, vec![&fx.v; k], f))?
                    .element
                    .trace()
                    .re;
                let reduced = moi_trace(&MoiRequest::new(&fx.h0, vec![&fx.v; k], f))?.re;
                p.push(matches(
                    CheckTag::Cyclicity,
                    &kid,
                    reduced,
                    full,
                    tol.cyclicity,
                ));
                let exact = gateaux_derivative(f, &fx.h0, &fx.v, k)?;
                let fd = fd_derivative_refined(f, &fx.h0, &fx.v, k, 0.01 * tol.derivative)?;
                let gap = (&exact - &fd.element).operator_norm();
                let scale = 1.0 + fd.element.operator_norm();
                p.push(CheckRecord::at_most(
                    CheckTag::MoiDerivative,
                    &kid,
                    gap,
                    tol.derivative * scale,
                ));
                let alphas = vec![2.0 * k as f64; k];
                let r =
                    bound_ratio_norm(&MoiRequest::new(&fx.h0, vec![&fx.v; k], f), 2.0, &alphas)?;
                let c = store.sup(&ConstantKey::c2(k)).unwrap_or(f64::INFINITY);
                p.push(CheckRecord::info(CheckTag::MoiNormBound, &kid, r.ratio, c));
            }
            for order in 1..=n {
                remainder_bound(&mut p, &format!("{id}:n{order}"), f, fx, order, cfg, &store)?;
            }
            if let Some(r) = applicable(first_order_resolvent_bound(f, &fx.h0, &fx.v))? {
                p.push(CheckRecord::at_most(
                    CheckTag::FirstOrderResolventBound,
                    &id,
                    r.abs_trace,
                    r.bound,
                ));
            }
        }
        let eta = ssf_first_order_on_grid(&fx.h0, &fx.v, a, b, cfg.params.grid_size)?;
        let d = constant_D(a, b, 1, eps, &fx.h0, &fx.v, &mut store.clone())?.d;
        let e = check_eta_l1_bound(&eta, d);
        p.push(CheckRecord::at_most(
            CheckTag::SsfL1Bound,
            &fx.id,
            e.l1,
            e.d,
        ));
        Ok(p)
    })?;
    Ok(assemble(cfg, parts, Some(&store)))
}

fn bump(cfg: &ExperimentConfig) -> Out<VerificationReport> {
    let (a, b, eps) = (cfg.params.a, cfg.params.b, cfg.params.eps);
    let tol = &cfg.params.tolerances;
    let phi = sf::bump(a, b, eps)?;
    let m = cfg.params.samples;
    let id = phi.name();
    let lin = |lo: f64, hi: f64| (0..m).map(move |i| lo + (hi - lo) * i as f64 / (m - 1) as f64);
    let val = |x: f64| phi.value(x).map(|v| v.re);

    let plateau = lin(a, b)
        .map(|x| Ok((val(x)? - 1.0).abs()))
        .collect::<specact::Result<Vec<f64>>>()?;
    let xs: Vec<f64> = lin(a - 2.0 * eps, b + 2.0 * eps).collect();
    let ys = xs
        .iter()
        .map(|&x| val(x))
        .collect::<specact::Result<Vec<f64>>>()?;
    let range = ys
        .iter()
        .map(|&y| (-y).max(y - 1.0).max(0.0))
        .fold(0.0, f64::max);
    let outside = xs
        .iter()
        .zip(&ys)
        .filter(|(&x, _)| x <= a - eps || x >= b + eps)
        .map(|(_, y)| y.abs())
        .fold(0.0, f64::max);
    let sup = phi.sup_norm(0)?;
    let mut report = VerificationReport::new(cfg.task.as_str(), cfg.seed);
    let plateau = plateau.into_iter().fold(0.0, f64::max);
    report.records.push(CheckRecord::at_most(
        CheckTag::BumpPlateau,
        &id,
        plateau,
        tol.bump_plateau,
    ));
    report
        .records
        .push(CheckRecord::at_most(CheckTag::BumpRange, &id, range, 0.0));
    report.records.push(CheckRecord::at_most(
        CheckTag::BumpSupport,
        &id,
        outside,
        0.0,
    ));
    report
        .records
        .push(matches(CheckTag::BumpSup, &id, sup, 1.0, 1e-15));
    let parts = per_fixture(cfg, |_, fx| {
        let norm = fx.h0.apply(&phi)?.schatten_norm(1.0)?;
        let proj = fx.h0.counting(Interval::open(a - eps, b + eps));
        Ok(Partial {
            records: vec![CheckRecord::at_most(
                CheckTag::BumpTraceNorm,
                &fx.id,
                norm,
                proj * (1.0 + 1e-12),
            )],
            margin: Vec::new(),
        })
    })?;
    report
        .records
        .extend(parts.into_iter().flat_map(|p| p.records));
    let rows = xs.into_iter().zip(ys).map(|(x, y)| vec![x, y]).collect();
    report.series.insert(
        SeriesKind::Bump,
        Series {
            labels: vec![],
            rows,
        },
    );
    Ok(report)
}

fn constants(cfg: &ExperimentConfig) -> Out<VerificationReport> {
    let n = cfg.params.n;
    let (a, b, eps) = (cfg.params.a, cfg.params.b, cfg.params.eps);
    let mut store = open_store(cfg)?;
    let mut report = VerificationReport::new(cfg.task.as_str(), cfg.seed);
    for k in 1..=n {
        let key = ConstantKey::c2(k);
        let c = match store.sup(&key) {
            Some(c) => c,
            None => estimate_norm_constant(
                &mut store,
                k,
                2.0,
                &vec![2.0 * k as f64; k],
                cfg.params.instances,
                cfg.seed,
            )?,
        };
        report.records.push(CheckRecord::info(
            CheckTag::EmpiricalConstant,
            key.to_string(),
            c,
            f64::INFINITY,
        ));
    }
    let phi = sf::bump(a, b, eps)?;
    if class_witness(&phi, ClassTag::Dc(n))?.holds {
        for i in 0..cfg.fixtures {
            let fx = cfg.fixture(i)?;
            for t in window_constants(&fx.h0, a, b, eps, n, &mut store)? {
                report.records.push(CheckRecord::info(
                    CheckTag::WindowConstant,
                    format!("{}:k{}", fx.id, t.k),
                    t.value,
                    f64::INFINITY,
                ));
            }
        }
    }
    report.constants = snapshot(&store);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Layout, OperatorGenerator};

    fn cfg(task: Task) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(task, 7);
        c.fixtures = 3;
        c
    }

    #[test]
    fn polynomial_remainder_is_zero() {
        let mut c = cfg(Task::Remainder);
        c.functions = vec![FunctionSpec::Polynomial {
            coeffs: vec![1.0, -2.0, 0.5],
        }];
        c.params.n = 3;
        let r = run_experiment(&c).unwrap();
        assert!(r.passed());
        for rec in r.records_with(CheckTag::RemainderTrace) {
            assert!(rec.value.abs() < 1e-10, "{rec:?}");
        }
    }

    #[test]
    fn bump_task() {
        let mut c = cfg(Task::Bump);
        c.params.a = 0.0;
        c.params.b = 1.0;
        c.params.eps = 0.25;
        let r = run_experiment(&c).unwrap();
        assert!(r.passed(), "{:?}", r.records);
        let s = &r.series[&SeriesKind::Bump];
        assert!(s.rows.iter().all(|row| (0.0..=1.0).contains(&row[1])));
        assert!(s
            .rows
            .iter()
            .filter(|row| (0.0..=1.0).contains(&row[0]))
            .all(|row| row[1] == 1.0));
    }

    #[test]
    fn identities_pass() {
        let mut c = cfg(Task::VerifyIdentities);
        c.params.n = 3;
        c.algebra.dim = 5;
        let r = run_experiment(&c).unwrap();
        assert!(
            r.passed(),
            "{:?}",
            r.records
                .iter()
                .filter(|x| x.verdict == Verdict::Fail)
                .collect::<Vec<_>>()
        );
        assert!(r.records_with(CheckTag::ResolventExpansion).count() > 0);
        assert!(r.records_with(CheckTag::DividedDifferenceExpansion).count() >= 3 * NODE_SETS);
    }

    #[test]
    fn first_order_ssf_on_weighted_blocks() {
        let mut c = cfg(Task::Ssf);
        c.params.n = 1;
        c.params.grid_size = 64;
        c.algebra.layout = Layout::Blocks;
        c.algebra.blocks = vec![(2, 0.5), (3, 1.5)];
        let r = run_experiment(&c).unwrap();
        assert!(r.passed(), "{:?}", r.records);
        assert!(
            r.series.contains_key(&SeriesKind::Ssf) && r.series.contains_key(&SeriesKind::Growth)
        );
    }

    #[test]
    fn bounds_first_order() {
        let mut c = cfg(Task::VerifyBounds);
        c.params.n = 1;
        c.operators.h0 = OperatorGenerator::SpectrumIn { lo: -1.5, hi: 1.5 };
        let r = run_experiment(&c).unwrap();
        assert!(
            r.passed(),
            "{:?}",
            r.records
                .iter()
                .filter(|x| x.verdict == Verdict::Fail)
                .collect::<Vec<_>>()
        );
        assert!(r
            .records_with(CheckTag::RemainderBound)
            .all(|x| x.verdict == Verdict::Pass));
        assert!(r.series.contains_key(&SeriesKind::BoundMargin));
    }

    #[test]
    fn lattice_of_weights() {
        let alg = TraceAlgebra::new(&[(1, 0.5)]).unwrap();
        let h0 = specact::SelfAdjointOperator::diagonal(&alg, &[0.0]).unwrap();
        let v = specact::AlgebraElement::diagonal(&alg, &[1.0]).unwrap();
        let eta = ssf_first_order_on_grid(&h0, &v, -1.0, 2.0, 16).unwrap();
        assert_eq!(lattice_distance(&eta, &alg), 0.0);
        let shifted = eta.plus_polynomial(&[0.1]);
        assert!((lattice_distance(&shifted, &alg) - 0.1).abs() < 1e-12);
    }
}
