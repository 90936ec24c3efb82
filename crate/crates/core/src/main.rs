use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use etachain::config::{parse_config, CommandKind};
use etachain::output::write_atomic;
use etachain::runner::run;

#[derive(Parser)]
#[command(
    name = "etachain",
    version,
    about = "Shear-flow mode-lattice laboratory"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for the report and CSV artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker count for concurrent sweeps (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Seed override for random initial data.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the lattice ODE and record a trajectory.
    Simulate(CommonArgs),
    /// Monitor the weighted functional's monotonicity along a run.
    Lyapunov(CommonArgs),
    /// Compare a truncated path sum against direct integration.
    Pathsum(CommonArgs),
    /// Run the resonance-cascade instability experiment.
    Cascade(CommonArgs),
    /// Classify the parameter regime.
    Classify(CommonArgs),
    /// Scan a (c, L) grid and summarize per-cell checks.
    Sweep(CommonArgs),
}

impl Command {
    fn split(&self) -> (CommandKind, &CommonArgs) {
        match self {
            Command::Simulate(a) => (CommandKind::Simulate, a),
            Command::Lyapunov(a) => (CommandKind::Lyapunov, a),
            Command::Pathsum(a) => (CommandKind::Pathsum, a),
            Command::Cascade(a) => (CommandKind::Cascade, a),
            Command::Classify(a) => (CommandKind::Classify, a),
            Command::Sweep(a) => (CommandKind::Sweep, a),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = cli.command.split();

    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read config {}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };

    let mut config = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            let _ = write_atomic(&args.out.join("report.txt"), &format!("error: {e}\n"));
            return ExitCode::from(2);
        }
    };
    if args.seed.is_some() {
        config.seed = args.seed;
    }

    match run(&config, kind, &args.out, args.workers.unwrap_or(0)) {
        Ok(outcome) => {
            for check in &outcome.checks {
                let tag = match check.passed {
                    Some(true) => "PASS",
                    Some(false) => "FAIL",
                    None => "INFO",
                };
                println!("{tag} {}: {}", check.name, check.detail);
            }
            println!("report: {}", outcome.report_path.display());
            if outcome.failures() == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            let _ = write_atomic(&args.out.join("report.txt"), &format!("error: {e}\n"));
            ExitCode::from(2)
        }
    }
}
