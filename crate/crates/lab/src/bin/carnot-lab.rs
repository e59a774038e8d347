use std::path::PathBuf;
use std::process::ExitCode;

use carnot_lab::config::Config;
use carnot_lab::{pipeline, verify, LabError};
use clap::{Parser, Subcommand};

/// Numerical experiments for obstacle problems on step-two Carnot groups.
#[derive(Parser)]
#[command(name = "carnot-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured instance and write the requested diagnostics.
    Run {
        config: PathBuf,
        /// Output directory; overrides the config and `CARNOT_LAB_OUT`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for the parallel kernels.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run an acceptance battery: algebra, operators, solver or regularity.
    Verify { suite: String },
}

fn run(config: PathBuf, out: Option<PathBuf>, threads: Option<usize>) -> Result<(), LabError> {
    if let Some(k) = threads {
        if k == 0 {
            return Err(LabError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| LabError::Config(format!("thread pool: {e}")))?;
    }
    let cfg = Config::load(&config)?;
    let outcome = pipeline::run(&cfg, out.as_deref())?;
    println!("{}", outcome.solve_summary);
    for s in &outcome.summaries {
        println!("{s}");
    }
    println!("wrote {} files to {}", outcome.files.len(), outcome.out_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out, threads } => match run(config, out, threads) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("{}", e.to_json());
                ExitCode::from(e.exit_code() as u8)
            }
        },
        Command::Verify { suite } => {
            let Some(outcomes) = verify::run_suite(&suite) else {
                let e = LabError::Config(format!("unknown suite `{suite}`; expected one of {}", verify::SUITES.join(", ")));
                eprintln!("{}", e.to_json());
                return ExitCode::from(e.exit_code() as u8);
            };
            let mut all = true;
            for o in &outcomes {
                println!("{o}");
                all &= o.passed();
            }
            if all {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
