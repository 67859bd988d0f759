//! Thin command-line front end over the `reducesim` library.
//!
//! Exit codes: 0 on success, 1 on a validation error (bad file, bad
//! builtin name, unwritable output), 2 on a runtime invariant violation.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use reducesim::harness::{
    emit, run_monte_carlo_with_bins, run_once_strided, Artifact, EmitFormat, RunError,
    DEFAULT_HISTOGRAM_BINS,
};
use reducesim::scenario::{builtin, parse_scenario, ScenarioError, ScenarioSpec};

#[derive(Parser)]
#[command(
    name = "reducesim",
    version,
    about = "Stochastic state-reduction simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single trajectory and emit a CSV artifact.
    Run {
        /// Scenario file path or builtin:NAME (classical, quantum,
        /// quantum_ddd, terminal:w0,w1).
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        seed: u64,
        /// Override the scenario's integration step.
        #[arg(long)]
        dt: Option<f64>,
        /// Sample every k-th step.
        #[arg(long, default_value_t = 1)]
        stride: usize,
        #[arg(long, value_enum)]
        emit: RunArtifact,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a seeded ensemble and emit aggregate statistics.
    Mc {
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        trials: u64,
        /// Base seed; trial i uses seed + i.
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum)]
        emit: McArtifact,
        #[arg(long)]
        out: PathBuf,
        /// Hit-time histogram bin count over [0, t_max].
        #[arg(long, default_value_t = DEFAULT_HISTOGRAM_BINS)]
        bins: usize,
    },
    /// Parse and validate a scenario file; exit 0 if it is well formed.
    Check {
        #[arg(long)]
        scenario: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum RunArtifact {
    Timeseries,
    Events,
}

#[derive(Clone, Copy, ValueEnum)]
enum McArtifact {
    Stats,
    Histogram,
}

const EXIT_VALIDATION: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

fn load_scenario(arg: &str) -> Result<ScenarioSpec, ScenarioError> {
    if let Some(name) = arg.strip_prefix("builtin:") {
        return builtin(name);
    }
    let text = std::fs::read_to_string(arg)
        .map_err(|e| ScenarioError::Validation(format!("cannot read {arg}: {e}")))?;
    parse_scenario(&text)
}

fn runtime_exit(err: &RunError) -> u8 {
    match err {
        RunError::Scenario(_) => EXIT_VALIDATION,
        RunError::Trial { source, .. } => runtime_exit(source),
        _ => EXIT_RUNTIME,
    }
}

fn run(cli: Cli) -> Result<(), (u8, String)> {
    match cli.command {
        Command::Run {
            scenario,
            seed,
            dt,
            stride,
            emit: artifact,
            out,
        } => {
            let mut spec =
                load_scenario(&scenario).map_err(|e| (EXIT_VALIDATION, e.to_string()))?;
            if let Some(dt) = dt {
                spec.schedule.dt = dt;
                spec.validate()
                    .map_err(|e| (EXIT_VALIDATION, e.to_string()))?;
            }
            let trajectory = run_once_strided(&spec, seed, stride)
                .map_err(|e| (runtime_exit(&e), e.to_string()))?;
            let format = match artifact {
                RunArtifact::Timeseries => EmitFormat::Timeseries,
                RunArtifact::Events => EmitFormat::Events,
            };
            emit(&Artifact::Trajectory(&trajectory), format, &out)
                .map_err(|e| (EXIT_VALIDATION, e.to_string()))?;
            Ok(())
        }
        Command::Mc {
            scenario,
            trials,
            seed,
            emit: artifact,
            out,
            bins,
        } => {
            if trials == 0 {
                return Err((EXIT_VALIDATION, "mc requires --trials >= 1".into()));
            }
            if bins == 0 {
                return Err((EXIT_VALIDATION, "mc requires --bins >= 1".into()));
            }
            let spec = load_scenario(&scenario).map_err(|e| (EXIT_VALIDATION, e.to_string()))?;
            let stats = run_monte_carlo_with_bins(&spec, trials, seed, bins)
                .map_err(|e| (runtime_exit(&e), e.to_string()))?;
            let format = match artifact {
                McArtifact::Stats => EmitFormat::Stats,
                McArtifact::Histogram => EmitFormat::Histogram,
            };
            emit(&Artifact::Stats(&stats), format, &out)
                .map_err(|e| (EXIT_VALIDATION, e.to_string()))?;
            Ok(())
        }
        Command::Check { scenario } => {
            let text = std::fs::read_to_string(&scenario).map_err(|e| {
                (
                    EXIT_VALIDATION,
                    format!("cannot read {}: {e}", scenario.display()),
                )
            })?;
            let spec = parse_scenario(&text).map_err(|e| (EXIT_VALIDATION, e.to_string()))?;
            println!(
                "ok: scenario '{}' with {} components, {} edges",
                spec.name,
                spec.components.len(),
                spec.edges.len()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, message)) => {
            eprintln!("reducesim: {message}");
            ExitCode::from(code)
        }
    }
}
