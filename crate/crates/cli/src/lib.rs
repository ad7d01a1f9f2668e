//! Experiment driver for the `kgraph` toolkit.
//!
//! Subcommands read a `key = value` config (see [`config`]), run an
//! experiment and write CSV files whose `#` header block records the
//! config hash, crate versions and the theory values used for comparison.
//!
//! | exit code | meaning |
//! |---|---|
//! | 0 | success |
//! | 2 | config or usage error |
//! | 3 | numerical failure |
//! | 4 | I/O error |

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod compare;
pub mod config;
pub mod error;
pub mod output;
pub mod setup;
pub mod specs;
pub mod sweep;

pub use config::{parse_config, parse_config_with, ConfigError, CouplingMode, ExperimentConfig};
pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "kgraph",
    version,
    about = "Kuramoto oscillators on graph sequences"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Experiment config file (`key = value` lines).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `out` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Base seed; overrides `seed` in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads, 0 for one per core. Affects wall time only.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Extra `key=value` settings applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Kernel eigenvalues per Fourier mode and the transition points.
    Spectra {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        graphon: Option<String>,
        #[arg(long)]
        freq: Option<String>,
        #[arg(long)]
        kmax: Option<usize>,
        /// Nyström matrix size.
        #[arg(long)]
        nystrom: Option<usize>,
    },
    /// Particle simulation at a single K, one run per seed.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// K-sweep with transition detection.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Fourier–Galerkin mean-field run.
    Meanfield {
        #[command(flatten)]
        common: Common,
    },
    /// Particle runs along an n ladder against the mean-field solution.
    Compare {
        #[command(flatten)]
        common: Common,
    },
}

fn load(common: &Common, mut extra: Vec<(&'static str, String)>) -> CliResult<ExperimentConfig> {
    let text = match &common.config {
        Some(path) => {
            std::fs::read_to_string(path).map_err(|e| CliError::from(e).context(path.display()))?
        }
        None => String::new(),
    };
    let mut overrides: Vec<(&str, String)> = Vec::new();
    for item in &common.set {
        let Some((k, v)) = item.split_once('=') else {
            return Err(CliError::Config(format!(
                "--set expects KEY=VALUE, got {item:?}"
            )));
        };
        let key = config::KEYS
            .iter()
            .find(|known| **known == k.trim())
            .ok_or_else(|| {
                CliError::Config(format!(
                    "--set: unknown key {:?}; accepted: {}",
                    k.trim(),
                    config::KEYS.join(", ")
                ))
            })?;
        overrides.push((key, v.trim().to_owned()));
    }
    overrides.append(&mut extra);
    if let Some(out) = &common.out {
        overrides.push(("out", out.display().to_string()));
    }
    if let Some(seed) = common.seed {
        overrides.push(("seed", seed.to_string()));
    }
    Ok(parse_config_with(&text, &overrides)?)
}

fn with_threads<T: Send>(
    threads: usize,
    job: impl FnOnce() -> CliResult<T> + Send,
) -> CliResult<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    pool.install(job)
}

/// Execute a parsed command line, returning a one-line summary.
pub fn run(cli: Cli) -> CliResult<String> {
    match cli.command {
        Command::Spectra {
            common,
            graphon,
            freq,
            kmax,
            nystrom,
        } => {
            let mut extra = Vec::new();
            for (key, value) in [
                ("graphon", graphon),
                ("freq", freq),
                ("kmax", kmax.map(|v| v.to_string())),
                ("nystrom", nystrom.map(|v| v.to_string())),
            ] {
                if let Some(v) = value {
                    extra.push((key, v));
                }
            }
            let config = load(&common, extra)?;
            with_threads(common.threads, || commands::spectra_command(&config))?;
            Ok(format!(
                "wrote {}",
                config.out.join("spectra.csv").display()
            ))
        }
        Command::Simulate { common } => {
            let config = load(&common, Vec::new())?;
            let tables = with_threads(common.threads, || commands::simulate_command(&config))?;
            Ok(format!(
                "wrote {} trajectories to {}",
                tables.len(),
                config.out.display()
            ))
        }
        Command::Sweep { common } => {
            let config = load(&common, Vec::new())?;
            let result = with_threads(common.threads, || sweep::sweep_command(&config))?;
            let kc = match result.kc_hat {
                sweep::KcEstimate::Bracketed(k) => format!("{k:.4}"),
                sweep::KcEstimate::NotBracketed => "not bracketed".into(),
            };
            Ok(format!(
                "estimated K_c = {kc} (theory K_c+ = {:.4}); wrote {}",
                result.kc_plus,
                config.out.display()
            ))
        }
        Command::Meanfield { common } => {
            let config = load(&common, Vec::new())?;
            with_threads(common.threads, || commands::meanfield_command(&config))?;
            Ok(format!(
                "wrote {}",
                config.out.join("meanfield.csv").display()
            ))
        }
        Command::Compare { common } => {
            let config = load(&common, Vec::new())?;
            let report = with_threads(common.threads, || compare::compare_command(&config))?;
            let ladder: Vec<String> = report
                .summary
                .iter()
                .map(|s| format!("n = {}: sup|dr| = {:.3e}", s.n, s.median_sup_dr))
                .collect();
            Ok(ladder.join("; "))
        }
    }
}

/// Parse `args` (including the program name) and run, mapping every
/// outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("kgraph: {e}");
            e.exit_code()
        }
    }
}
