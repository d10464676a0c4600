use std::path::PathBuf;
use std::process::ExitCode;

use bec_oct_cli::{load, run, ExperimentKind, Sources};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bec-oct", version, about = "Optimal control of condensate transport")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML configuration, overlaid on the preset if both are given.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Built-in configuration; see `bec-oct presets`.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads for sweeps and Wigner maps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Groundstates at lambda = 0 and lambda = 1.
    Groundstate,
    /// Forward propagation with the initial control and its cost.
    Propagate,
    /// Optimize lambda(t).
    Optimize,
    /// Optimize lambda(x) for a packet crossing a scattering region.
    OptimizeSpatial,
    /// Cost over transfer times and nonlinearities.
    Sweep,
    /// Wigner function of the initial or final state.
    Wigner,
    /// Run the experiment kind named in the configuration.
    Run,
    /// List built-in presets.
    Presets,
}

impl Command {
    fn kind(self) -> Option<ExperimentKind> {
        match self {
            Command::Groundstate => Some(ExperimentKind::Groundstate),
            Command::Propagate => Some(ExperimentKind::Propagate),
            Command::Optimize => Some(ExperimentKind::Optimize),
            Command::OptimizeSpatial => Some(ExperimentKind::OptimizeSpatial),
            Command::Sweep => Some(ExperimentKind::Sweep),
            Command::Wigner => Some(ExperimentKind::Wigner),
            Command::Run | Command::Presets => None,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Command::Presets = cli.command {
        for name in bec_oct_cli::presets::NAMES {
            println!("{name}");
        }
        return ExitCode::SUCCESS;
    }
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let sources = Sources {
        preset: cli.preset.clone(),
        file: cli.config.clone(),
        kind: cli.command.kind(),
        ..Default::default()
    }
    .with_process_env();
    let config = match load(&sources) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(&config, &cli.out) {
        Ok(manifest) => {
            println!("{}", manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
