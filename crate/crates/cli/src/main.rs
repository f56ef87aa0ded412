use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use oamux_cli::{compare_files, load_config, run_scenario, ErrorRecord, Overrides, Pipeline, ScenarioError};

#[derive(Parser)]
#[command(name = "oamux", version, about = "Even/odd OAM multiplexer simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate the sources through the duplexer and write port states.
    Simulate(RunArgs),
    /// Simulate, then run projective tomography on the bright port.
    Tomography(RunArgs),
    /// Write bright and dark port intensity images.
    Render(RunArgs),
    /// Fidelity between two density-matrix JSON files.
    Fidelity { target: PathBuf, measured: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory (overrides the config).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Measurement seed (overrides the config).
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Use exact probabilities instead of sampled counts.
    #[arg(long)]
    exact: bool,
}

fn run(args: RunArgs, pipeline: Pipeline) -> Result<(), ScenarioError> {
    let mut cfg = load_config(&args.config)?;
    Overrides {
        out_dir: args.out,
        seed: args.seed,
        exact: args.exact,
    }
    .apply(&mut cfg);
    let summary = run_scenario(&cfg, pipeline)?;
    for f in &summary.files {
        println!("{}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => run(a, Pipeline::Simulate),
        Command::Tomography(a) => run(a, Pipeline::Tomography),
        Command::Render(a) => run(a, Pipeline::Render),
        Command::Fidelity { target, measured } => compare_files(&target, &measured)
            .map(|r| println!("{}", serde_json::to_string(&r).expect("report serializes"))),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let record = ErrorRecord::from(&e);
            eprintln!("{}", serde_json::to_string(&record).expect("error record serializes"));
            ExitCode::FAILURE
        }
    }
}
