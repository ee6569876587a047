use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use specact::fixtures::{
    hermitian_with_spectrum_in, random_algebra, random_hermitian, rng, FixtureRng,
};
use specact::scalar_functions::fixtures as sf;
use specact::{AlgebraElement, ScalarFunction, SelfAdjointOperator, TraceAlgebra};

use crate::error::HarnessError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Remainder,
    Ssf,
    VerifyIdentities,
    VerifyBounds,
    Bump,
    Constants,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Remainder => "remainder",
            Task::Ssf => "ssf",
            Task::VerifyIdentities => "verify-identities",
            Task::VerifyBounds => "verify-bounds",
            Task::Bump => "bump",
            Task::Constants => "constants",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub task: Task,
    pub seed: u64,
    #[serde(default = "default_fixtures")]
    pub fixtures: usize,
    /// Worker threads; `0` uses every core.
    #[serde(default)]
    pub workers: usize,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub algebra: AlgebraSpec,
    #[serde(default)]
    pub operators: OperatorSpec,
    #[serde(default)]
    pub functions: Vec<FunctionSpec>,
    #[serde(default)]
    pub params: Params,
}

fn default_fixtures() -> usize {
    10
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Layout {
    /// One block with the plain matrix trace.
    Matrix,
    /// Random block sizes and weights, redrawn for every fixture.
    Random,
    /// The blocks listed in `blocks`.
    Blocks,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraSpec {
    pub layout: Layout,
    #[serde(default = "default_dim")]
    pub dim: usize,
    /// `(dimension, weight)` per block.
    #[serde(default)]
    pub blocks: Vec<(usize, f64)>,
}

fn default_dim() -> usize {
    5
}

impl Default for AlgebraSpec {
    fn default() -> Self {
        AlgebraSpec {
            layout: Layout::Random,
            dim: default_dim(),
            blocks: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OperatorGenerator {
    /// `scale·(X + X*)/2` with standard complex Gaussian entries.
    Hermitian { scale: f64 },
    /// Eigenvalues uniform in `[lo, hi]`, Haar-random eigenbasis.
    SpectrumIn { lo: f64, hi: f64 },
    /// Fixed diagonal, repeated cyclically to the algebra dimension.
    Diagonal { values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    pub h0: OperatorGenerator,
    pub v: OperatorGenerator,
}

impl Default for OperatorSpec {
    fn default() -> Self {
        OperatorSpec {
            h0: OperatorGenerator::SpectrumIn { lo: -1.0, hi: 1.0 },
            v: OperatorGenerator::Hermitian { scale: 0.5 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FunctionSpec {
    Bump {
        a: f64,
        b: f64,
        eps: f64,
    },
    Gaussian {
        mu: f64,
        sigma: f64,
    },
    Bspline {
        knots: Vec<f64>,
        degree: usize,
    },
    Polynomial {
        coeffs: Vec<f64>,
    },
    /// `x^n (x−1)^n` on `[0, 1]`, zero elsewhere.
    TruncatedPower {
        n: usize,
    },
    Exp,
    Sin,
    InvU,
}

impl FunctionSpec {
    pub fn build(&self) -> specact::Result<ScalarFunction> {
        Ok(match self {
            FunctionSpec::Bump { a, b, eps } => sf::bump(*a, *b, *eps)?,
            FunctionSpec::Gaussian { mu, sigma } => sf::gaussian(*mu, *sigma),
            FunctionSpec::Bspline { knots, degree } => sf::bspline(knots, *degree)?,
            FunctionSpec::Polynomial { coeffs } => sf::polynomial(coeffs),
            FunctionSpec::TruncatedPower { n } => sf::xn_xm1n(*n),
            FunctionSpec::Exp => sf::exp(),
            FunctionSpec::Sin => sf::sin(),
            FunctionSpec::InvU => sf::inv_u(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub eps: f64,
    pub grid_size: usize,
    /// Half-width `R` of a symmetric window `[−R, R]`; replaces `[a, b]`
    /// for spectral shift tasks when set.
    pub window: Option<f64>,
    pub samples: usize,
    /// Instances per empirical constant estimate.
    pub instances: usize,
    /// Append-only log of empirical constants.
    pub store: Option<PathBuf>,
    pub tolerances: Tolerances,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            n: 2,
            a: -2.0,
            b: 2.0,
            eps: 0.5,
            grid_size: specact::ssf::DEFAULT_GRID,
            window: None,
            samples: 201,
            instances: specact::moi::DEFAULT_INSTANCES,
            store: None,
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Scalar divided-difference expansion.
    pub scalar_identity: f64,
    /// Resolvent expansion of the operator difference.
    pub operator_identity: f64,
    /// First-order resolvent identity.
    pub first_order_identity: f64,
    /// Finite-difference oracle, relative to `1 + ‖·‖`.
    pub derivative: f64,
    /// Reduced against full contraction, relative.
    pub cyclicity: f64,
    /// First-order trace formula, relative.
    pub trace_formula: f64,
    /// Held-out residual relative to `∫|η|`.
    pub held_out: f64,
    pub gauge: f64,
    pub uniqueness: f64,
    pub bump_plateau: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            scalar_identity: 1e-9,
            operator_identity: 1e-8,
            first_order_identity: 1e-9,
            derivative: 1e-5,
            cyclicity: 1e-9,
            trace_formula: 1e-7,
            held_out: 1e-5,
            gauge: 1e-8,
            uniqueness: specact::ssf::UNIQUENESS_TOL,
            bump_plateau: 1e-12,
        }
    }
}

fn invalid(path: &str, message: impl Into<String>) -> HarnessError {
    HarnessError::Config {
        path: path.to_string(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    pub fn new(task: Task, seed: u64) -> Self {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            task,
            seed,
            fixtures: default_fixtures(),
            workers: 0,
            output: None,
            algebra: AlgebraSpec::default(),
            operators: OperatorSpec::default(),
            functions: Vec::new(),
            params: Params::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let de =
            toml::Deserializer::parse(text).map_err(|e| invalid("", e.to_string().trim_end()))?;
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            invalid(
                if path == "." { "" } else { &path },
                e.into_inner().to_string().trim_end(),
            )
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs serialize")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid(
                "schema_version",
                format!(
                    "unsupported schema version {}, expected {SCHEMA_VERSION}",
                    self.schema_version
                ),
            ));
        }
        if self.fixtures == 0 {
            return Err(invalid("fixtures", "need at least one fixture"));
        }
        match self.algebra.layout {
            Layout::Blocks => {
                if self.algebra.blocks.is_empty() {
                    return Err(invalid(
                        "algebra.blocks",
                        "layout `blocks` needs at least one block",
                    ));
                }
                for (i, &(d, w)) in self.algebra.blocks.iter().enumerate() {
                    if d == 0 || !(w > 0.0) || !w.is_finite() {
                        return Err(invalid(
                            &format!("algebra.blocks[{i}]"),
                            "blocks need a positive dimension and weight",
                        ));
                    }
                }
            }
            _ => {
                if !(1..=64).contains(&self.algebra.dim) {
                    return Err(invalid("algebra.dim", "dimension must lie in 1..=64"));
                }
            }
        }
        for (name, g) in [
            ("operators.h0", &self.operators.h0),
            ("operators.v", &self.operators.v),
        ] {
            match g {
                OperatorGenerator::Hermitian { scale } if !scale.is_finite() || *scale < 0.0 => {
                    return Err(invalid(
                        &format!("{name}.scale"),
                        "scale must be finite and nonnegative",
                    ))
                }
                OperatorGenerator::SpectrumIn { lo, hi } if !(lo < hi) => {
                    return Err(invalid(&format!("{name}.hi"), "need lo < hi"))
                }
                OperatorGenerator::Diagonal { values } if values.is_empty() => {
                    return Err(invalid(
                        &format!("{name}.values"),
                        "need at least one value",
                    ))
                }
                _ => {}
            }
        }
        for (i, f) in self.functions.iter().enumerate() {
            f.build()
                .map_err(|e| invalid(&format!("functions[{i}]"), e.to_string()))?;
        }
        let p = &self.params;
        if p.n == 0 || p.n > 6 {
            return Err(invalid("params.n", "order must lie in 1..=6"));
        }
        if !(p.a < p.b) {
            return Err(invalid(
                "params.b",
                format!("need a < b, got [{}, {}]", p.a, p.b),
            ));
        }
        if !(p.eps > 0.0) {
            return Err(invalid("params.eps", "bump width must be positive"));
        }
        if p.grid_size < 2 {
            return Err(invalid(
                "params.grid_size",
                "grid needs at least two points",
            ));
        }
        if let Some(r) = p.window {
            if !(r > 0.0) {
                return Err(invalid(
                    "params.window",
                    "window half-width must be positive",
                ));
            }
        }
        if p.samples < 2 {
            return Err(invalid("params.samples", "need at least two samples"));
        }
        if p.instances == 0 {
            return Err(invalid("params.instances", "need at least one instance"));
        }
        Ok(())
    }

    /// The spectral shift window.
    pub fn window(&self) -> (f64, f64) {
        match self.params.window {
            Some(r) => (-r, r),
            None => (self.params.a, self.params.b),
        }
    }

    /// Configured functions, or `defaults` when none are listed.
    pub fn functions_or(&self, defaults: Vec<FunctionSpec>) -> Vec<FunctionSpec> {
        if self.functions.is_empty() {
            defaults
        } else {
            self.functions.clone()
        }
    }

    /// Generator state of fixture `index`.
    pub fn fixture_rng(&self, index: usize) -> FixtureRng {
        rng(self
            .seed
            .wrapping_mul(0x9e37_79b9_7f4a_7c15)
            .wrapping_add(index as u64))
    }

    pub fn fixture(&self, index: usize) -> Result<Fixture, HarnessError> {
        let mut r = self.fixture_rng(index);
        let alg = match self.algebra.layout {
            Layout::Matrix => TraceAlgebra::matrix(self.algebra.dim),
            Layout::Random => random_algebra(&mut r, self.algebra.dim),
            Layout::Blocks => {
                TraceAlgebra::new(&self.algebra.blocks).map_err(HarnessError::fixture)?
            }
        };
        let h0 = generate(&alg, &mut r, &self.operators.h0)?;
        let h0 = SelfAdjointOperator::new(h0).map_err(HarnessError::fixture)?;
        let v = generate(&alg, &mut r, &self.operators.v)?;
        Ok(Fixture {
            id: format!("s{}-f{index}", self.seed),
            h0,
            v,
        })
    }
}

fn generate(
    alg: &Arc<TraceAlgebra>,
    r: &mut FixtureRng,
    g: &OperatorGenerator,
) -> Result<AlgebraElement, HarnessError> {
    Ok(match g {
        OperatorGenerator::Hermitian { scale } => random_hermitian(alg, r, *scale),
        OperatorGenerator::SpectrumIn { lo, hi } => hermitian_with_spectrum_in(alg, r, *lo, *hi),
        OperatorGenerator::Diagonal { values } => {
            let d: Vec<f64> = (0..alg.total_dimension())
                .map(|i| values[i % values.len()])
                .collect();
            AlgebraElement::diagonal(alg, &d).map_err(HarnessError::fixture)?
        }
    })
}

/// One seeded operator pair.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub id: String,
    pub h0: SelfAdjointOperator,
    pub v: AlgebraElement,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_defaults() {
        let cfg =
            ExperimentConfig::from_toml("schema_version = 1\ntask = \"bump\"\nseed = 3\n").unwrap();
        assert_eq!(cfg.task, Task::Bump);
        assert_eq!(cfg.params, Params::default());
        let again = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn errors_carry_field_paths() {
        let err = |text: &str| match ExperimentConfig::from_toml(text) {
            Err(HarnessError::Config { path, .. }) => path,
            other => panic!("expected config error, got {other:?}"),
        };
        let head = "schema_version = 1\ntask = \"ssf\"\nseed = 1\n";
        assert_eq!(
            err("schema_version = 2\ntask = \"ssf\"\nseed = 1\n"),
            "schema_version"
        );
        assert_eq!(err(&format!("{head}[params]\nn = 0\n")), "params.n");
        assert_eq!(err(&format!("{head}[params]\nbogus = 1\n")), "params.bogus");
        assert_eq!(
            err(&format!("{head}[params.tolerances]\ngauge = \"x\"\n")),
            "params.tolerances.gauge"
        );
        assert_eq!(
            err(&format!(
                "{head}[[functions]]\nkind = \"bump\"\na = 1.0\nb = 0.0\neps = 0.1\n"
            )),
            "functions[0]"
        );
        assert_eq!(
            err("schema_version = 1\ntask = \"nope\"\nseed = 1\n"),
            "task"
        );
    }

    #[test]
    fn fixtures_are_reproducible() {
        let cfg = ExperimentConfig::new(Task::Ssf, 11);
        let a = cfg.fixture(4).unwrap();
        let b = cfg.fixture(4).unwrap();
        assert_eq!(a.v.blocks(), b.v.blocks());
        assert_eq!(a.h0.element().blocks(), b.h0.element().blocks());
        assert_ne!(cfg.fixture(5).unwrap().v.blocks(), a.v.blocks());
    }
}
