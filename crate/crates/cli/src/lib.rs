//! Batch front end for `specact`: declarative experiment configs, seeded
//! fixtures, verification suites and CSV reports.

pub mod config;
pub mod error;
pub mod registry;
pub mod report;
pub mod tasks;

pub use config::{ExperimentConfig, Task};
pub use error::HarnessError;
pub use registry::CheckTag;
pub use report::{
    emit_plotdata, write_report, CheckRecord, SeriesKind, Verdict, VerificationReport,
};
pub use tasks::run_experiment;

/// Environment variable naming the default output directory.
pub const OUTPUT_ENV: &str = "SPECACT_OUT";

/// Output directory from the command line, the config, the environment or
/// `specact-out`, in that order.
pub fn output_dir(flag: Option<&std::path::Path>, cfg: &ExperimentConfig) -> std::path::PathBuf {
    flag.map(|p| p.to_path_buf())
        .or_else(|| cfg.output.clone())
        .or_else(|| std::env::var_os(OUTPUT_ENV).map(Into::into))
        .unwrap_or_else(|| "specact-out".into())
}
