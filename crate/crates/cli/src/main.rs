use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use specact_cli::config::{Layout, Task};
use specact_cli::report::unix_now;
use specact_cli::{output_dir, run_experiment, write_report, ExperimentConfig, HarnessError};

#[derive(Parser)]
#[command(
    name = "specact",
    version,
    about = "Spectral action remainders and spectral shift functions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Identities,
    Bounds,
    Ssf,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a verification suite on seeded random fixtures.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Total dimension of each fixture's algebra.
        #[arg(long, default_value_t = 5)]
        dim: usize,
        #[arg(long, default_value_t = 2)]
        order: usize,
        #[arg(long, default_value_t = 10)]
        fixtures: usize,
        /// Use the plain matrix trace instead of random weighted blocks.
        #[arg(long)]
        matrix: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample and certify the plateau bump on [a, b] with width eps.
    Bump {
        #[arg(long, allow_hyphen_values = true)]
        a: f64,
        #[arg(long, allow_hyphen_values = true)]
        b: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 201)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate missing empirical constants into a store and report them.
    Constants {
        #[arg(long)]
        store: PathBuf,
        /// Highest order k of the constants c_{2,k}.
        #[arg(long, default_value_t = 2)]
        order: usize,
        #[arg(long, default_value_t = specact::moi::DEFAULT_INSTANCES)]
        instances: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn config_for(cmd: &Command) -> Result<(ExperimentConfig, Option<&Path>), HarnessError> {
    Ok(match cmd {
        Command::Run { config, out } => (ExperimentConfig::load(config)?, out.as_deref()),
        Command::Verify {
            suite,
            seed,
            dim,
            order,
            fixtures,
            matrix,
            out,
        } => {
            let task = match suite {
                Suite::Identities => Task::VerifyIdentities,
                Suite::Bounds => Task::VerifyBounds,
                Suite::Ssf => Task::Ssf,
            };
            let mut c = ExperimentConfig::new(task, *seed);
            c.algebra.dim = *dim;
            if *matrix {
                c.algebra.layout = Layout::Matrix;
            }
            c.params.n = *order;
            c.fixtures = *fixtures;
            (c, out.as_deref())
        }
        Command::Bump {
            a,
            b,
            eps,
            samples,
            seed,
            out,
        } => {
            let mut c = ExperimentConfig::new(Task::Bump, *seed);
            c.params.a = *a;
            c.params.b = *b;
            c.params.eps = *eps;
            c.params.samples = *samples;
            (c, out.as_deref())
        }
        Command::Constants {
            store,
            order,
            instances,
            seed,
            out,
        } => {
            let mut c = ExperimentConfig::new(Task::Constants, *seed);
            c.params.store = Some(store.clone());
            c.params.n = *order;
            c.params.instances = *instances;
            c.fixtures = 1;
            (c, out.as_deref())
        }
    })
}

fn run(cli: &Cli) -> Result<bool, HarnessError> {
    let (cfg, out) = config_for(&cli.command)?;
    cfg.validate()?;
    let started = unix_now();
    let report = run_experiment(&cfg)?;
    let dir = output_dir(out, &cfg);
    let files = write_report(&report, &dir, cfg.task.as_str(), started)?;
    let s = report.summary();
    println!(
        "{}: {} pass, {} info, {} fail",
        cfg.task.as_str(),
        s.pass,
        s.info,
        s.fail
    );
    for (k, v) in &report.constants {
        println!("  {k} = {v:.6e}");
    }
    println!("records: {}", files.records.display());
    for p in &files.plots {
        println!("plot: {}", p.display());
    }
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("specact: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
