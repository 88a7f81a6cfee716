use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use resist::config::RunConfig;
use resist::pipeline::Solver;
use resist::workflow::{self, Overrides};
use resist::ResistError;

#[derive(Parser)]
#[command(name = "resist", version, about = "Photoresist simulation and calibration")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Dataset manifest (JSON).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Fitted parameter file written by `calibrate`.
    #[arg(long, global = true)]
    params: Option<PathBuf>,
    #[arg(long, global = true, value_parser = parse_solver)]
    solver: Option<Solver>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Fine output pitch in nm.
    #[arg(long, global = true)]
    resolution: Option<f64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Simulate developed depth and resist patterns for every tile.
    Simulate,
    /// Fit the resist parameters on the calibration split.
    Calibrate,
    /// Score the model and threshold baselines on the test split.
    Evaluate,
    /// Time the forward model at the dataset pitch and the fine pitch.
    Bench,
    /// Compare fine-pitch simulation against upsampled coarse simulation.
    Robustness,
    /// Generate a synthetic dataset.
    Synth,
}

fn parse_solver(s: &str) -> Result<Solver, String> {
    s.parse().map_err(|e: ResistError| e.to_string())
}

fn run(cli: Cli) -> resist::Result<String> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    Overrides {
        solver: cli.solver,
        out: cli.out.clone(),
        seed: cli.seed,
        resolution_nm: cli.resolution,
    }
    .apply(&mut cfg)?;
    let manifest = || {
        cli.manifest
            .as_deref()
            .ok_or_else(|| ResistError::InvalidArgument("--manifest is required for this command".into()))
    };
    let params = cli.params.as_deref();
    match cli.command {
        Command::Simulate => workflow::cmd_simulate(&cfg, manifest()?, params),
        Command::Calibrate => workflow::cmd_calibrate(&cfg, manifest()?),
        Command::Evaluate => workflow::cmd_evaluate(&cfg, manifest()?, params),
        Command::Bench => workflow::cmd_bench(&cfg, manifest()?, params),
        Command::Robustness => workflow::cmd_robustness(&cfg, manifest()?, params),
        Command::Synth => workflow::cmd_synth(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
