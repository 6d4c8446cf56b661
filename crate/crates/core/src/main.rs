use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pucci_lab::cli::{replay, run, CliError, ExperimentConfig, Kind};

#[derive(Parser)]
#[command(
    name = "pucci-lab",
    version,
    about = "Experiments with fully nonlinear elliptic operators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads for the parallel parts (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for summary.json and artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    Solve(RunArgs),
    Eigen(RunArgs),
    StripSweep(RunArgs),
    Below(RunArgs),
    Harnack(RunArgs),
    Holder(RunArgs),
    Liouville(RunArgs),
    BarrierCheck(RunArgs),
    HypothesisCheck(RunArgs),
    /// Re-run a recorded summary and compare outputs.
    Replay {
        summary: PathBuf,
        #[arg(long, default_value = "replay")]
        out: PathBuf,
    },
}

fn load(args: &RunArgs, kind: Kind) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &args.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            ExperimentConfig::parse(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    cfg.resolve_kind(kind)?;
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let (kind, args) = match &cli.command {
        Command::Solve(a) => (Kind::Solve, a),
        Command::Eigen(a) => (Kind::Eigen, a),
        Command::StripSweep(a) => (Kind::StripSweep, a),
        Command::Below(a) => (Kind::Below, a),
        Command::Harnack(a) => (Kind::Harnack, a),
        Command::Holder(a) => (Kind::Holder, a),
        Command::Liouville(a) => (Kind::Liouville, a),
        Command::BarrierCheck(a) => (Kind::BarrierCheck, a),
        Command::HypothesisCheck(a) => (Kind::HypothesisCheck, a),
        Command::Replay { summary, out } => {
            return match replay(summary, out) {
                Ok(_) => {
                    let _ = writeln!(std::io::stdout(), "replay matches {}", summary.display());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            };
        }
    };
    let result = load(args, kind).and_then(|cfg| run(&cfg, &args.out));
    match result {
        Ok(s) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&s.results).unwrap_or_default()
            );
            println!("wrote {}", args.out.join("summary.json").display());
            ExitCode::SUCCESS
        }
        Err(e) => fail(e),
    }
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}
