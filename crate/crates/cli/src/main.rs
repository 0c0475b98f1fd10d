//! Command-line driver: runs the checks and experiments described by a
//! TOML config and writes CSV/JSON/SVG artifacts plus a hashed manifest.
//!
//! Exit codes: 0 all configured checks pass, 2 config error,
//! 3 numerical failure (partial artifacts plus a failure record),
//! 4 I/O error.

use clap::{Parser, Subcommand};
use starkshell_core::config::RunConfig;
use std::path::PathBuf;
use std::process::ExitCode;

mod runs;

#[derive(Parser)]
#[command(
    name = "starkshell",
    version,
    about = "Spectral-theory toolkit for the perturbed Stark Hamiltonian"
)]
struct Cli {
    /// TOML run configuration (builtin defaults when omitted).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory root (default: $STARKSHELL_OUT or ./starkshell-out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Verbose logging.
    #[arg(long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Escape-function derivative and cutoff checks.
    GeometryCheck,
    /// Fit and flag the decay/confinement conditions of the potential.
    PotentialValidate,
    /// Weighted commutator identity under h-refinement.
    CommutatorCheck,
    /// Resolvent factorization identity plus the q6 ablation.
    FactorizationCheck,
    /// WKB annihilation identity and the B*-tail diagnostic.
    WkbCheck,
    /// One certified resolvent solve.
    Solve,
    /// LAP quantities along the Gamma ladder.
    LapSweep,
    /// Radiation-condition quantities with the wrong-sign column.
    RadiationSweep,
    /// Empirical Hoelder exponent of the resolvent.
    Hoelder,
    /// Outgoing/incoming discrimination at a real spectral parameter.
    Sommerfeld,
    /// B*0-tail illustration table.
    Rellich,
    /// Shell-norm report of the configured source field.
    BesovNorms,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::GeometryCheck => "geometry-check",
            Command::PotentialValidate => "potential-validate",
            Command::CommutatorCheck => "commutator-check",
            Command::FactorizationCheck => "factorization-check",
            Command::WkbCheck => "wkb-check",
            Command::Solve => "solve",
            Command::LapSweep => "lap-sweep",
            Command::RadiationSweep => "radiation-sweep",
            Command::Hoelder => "hoelder",
            Command::Sommerfeld => "sommerfeld",
            Command::Rellich => "rellich",
            Command::BesovNorms => "besov-norms",
        }
    }
}

const DEFAULT_CONFIG: &str = r#"
[grid]
bounds = [[-20.0, 30.0], [-20.0, 20.0]]
h = 0.5
"#;

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.verbose {
            log::LevelFilter::Debug
        } else {
            log::LevelFilter::Info
        })
        .init();

    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("failed to configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }

    let (mut config, config_text) = match &cli.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(text) => match RunConfig::parse(&text) {
                Ok(cfg) => (cfg, text),
                Err(e) => {
                    eprintln!("config error: {e}");
                    return ExitCode::from(2);
                }
            },
            Err(e) => {
                eprintln!("cannot read config {}: {e}", path.display());
                return ExitCode::from(4);
            }
        },
        None => (
            RunConfig::parse(DEFAULT_CONFIG).expect("builtin default config"),
            DEFAULT_CONFIG.to_string(),
        ),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }

    let out_root = cli
        .out
        .or_else(|| std::env::var_os("STARKSHELL_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("starkshell-out"));
    let out_dir = out_root.join(cli.command.name());

    match runs::dispatch(cli.command.name(), &config, &config_text, &out_dir) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("{}: configured checks FAILED (see artifacts)", cli.command.name());
            ExitCode::from(3)
        }
        Err(runs::RunError::Config(e)) => {
            eprintln!("config error: {e}");
            ExitCode::from(2)
        }
        Err(runs::RunError::Numerical(e)) => {
            eprintln!("numerical failure: {e}");
            ExitCode::from(3)
        }
        Err(runs::RunError::Io(e)) => {
            eprintln!("I/O error: {e}");
            ExitCode::from(4)
        }
    }
}
