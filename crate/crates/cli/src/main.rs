mod config;
mod error;
mod manifest;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand};
use rayon::prelude::*;

use config::{default_out_dir, Experiment, ExperimentConfig, FileConfig, Overrides};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "fnls", version, about = "Standing waves, evolution and stability runs for the nonlocal NLS")]
struct Cli {
    /// Run each config file in its own output subdirectory, in parallel.
    #[arg(long, num_args = 1.., value_name = "CONFIG")]
    sweep: Vec<PathBuf>,
    /// Worker threads for --sweep.
    #[arg(long, requires = "sweep")]
    jobs: Option<usize>,
    /// Raise log verbosity (-v info, -vv debug).
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Standing-wave profile by Petviashvili iteration.
    GroundState(Overrides),
    /// Boosted profile, c^2 < 4 lambda omega.
    Boosted(Overrides),
    /// Split-step evolution of r times the profile, or of --input.
    Evolve(Overrides),
    /// Evolve r times the profile and classify the run.
    Perturb(Overrides),
    /// Scan d(omega) and its second differences.
    DScan(Overrides),
    /// Small-dispersion run and first break time.
    Semiclassical(Overrides),
    /// Regime, classification and interpolation-inequality checks.
    Check(Overrides),
    /// Run the experiment named in --config.
    Run(Overrides),
}

fn build(experiment: Option<Experiment>, o: &Overrides) -> Result<ExperimentConfig, CliError> {
    let mut f = match &o.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    o.apply(&mut f);
    let experiment = experiment
        .or(f.experiment)
        .ok_or_else(|| CliError::Config("experiment: not named in the config".into()))?;
    ExperimentConfig::resolve(experiment, f)
}

fn sweep_one(path: &Path) -> Result<(), CliError> {
    let mut f = FileConfig::load(path)?;
    let experiment = f
        .experiment
        .ok_or_else(|| CliError::Config(format!("{}: experiment not named", path.display())))?;
    let stem = path.file_stem().map(PathBuf::from).unwrap_or_else(|| PathBuf::from("run"));
    let base = f.out_dir.take().unwrap_or_else(default_out_dir);
    f.out_dir = Some(base.join(stem));
    run::run(&ExperimentConfig::resolve(experiment, f)?)
}

fn sweep(paths: &[PathBuf], jobs: Option<usize>) -> u8 {
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(jobs.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let results: Vec<Result<(), CliError>> = pool.install(|| paths.par_iter().map(|p| sweep_one(p)).collect());
    let mut code = 0;
    for (path, r) in paths.iter().zip(results) {
        match r {
            Ok(()) => println!("{}: ok", path.display()),
            Err(e) => {
                eprintln!("{}: {e}", path.display());
                code = code.max(e.exit_code());
            }
        }
    }
    code
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    if !cli.sweep.is_empty() {
        if cli.command.is_some() {
            eprintln!("error: --sweep runs config files and takes no subcommand");
            return ExitCode::from(2);
        }
        return ExitCode::from(sweep(&cli.sweep, cli.jobs));
    }
    let Some(command) = cli.command else {
        eprintln!("error: a subcommand or --sweep is required (see --help)");
        return ExitCode::from(2);
    };
    let (experiment, overrides) = match &command {
        Command::GroundState(o) => (Some(Experiment::GroundState), o),
        Command::Boosted(o) => (Some(Experiment::Boosted), o),
        Command::Evolve(o) => (Some(Experiment::Evolve), o),
        Command::Perturb(o) => (Some(Experiment::Perturb), o),
        Command::DScan(o) => (Some(Experiment::DScan), o),
        Command::Semiclassical(o) => (Some(Experiment::Semiclassical), o),
        Command::Check(o) => (Some(Experiment::Check), o),
        Command::Run(o) => (None, o),
    };
    match build(experiment, overrides).and_then(|cfg| run::run(&cfg)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
