use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dpsa_cli::acceptance::{run_all, Scale};
use dpsa_cli::{run, with_threads};

#[derive(Parser)]
#[command(
    name = "dpsa",
    version,
    about = "Density-perturbation sensitivity analysis of failure probabilities"
)]
struct Cli {
    /// Worker threads; 0 picks one per core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build or ingest a sample, sweep the plan and write the result table.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Write the table here instead of the path in the config.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the acceptance suite and report pass/fail per criterion.
    Verify {
        /// Use 10x smaller samples.
        #[arg(long)]
        fast: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, output } => match run(&config, output, cli.threads) {
            Ok(summary) => {
                print!("{summary}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
        Command::Verify { fast } => {
            let outcomes = with_threads(cli.threads, || {
                run_all(Scale { fast }, |o| {
                    println!("{}", o.line());
                    eprintln!("    {}", o.timing());
                })
            });
            match outcomes {
                Ok(o) => {
                    let failed = o.iter().filter(|o| !o.passed).count();
                    println!("{} of {} criteria passed", o.len() - failed, o.len());
                    if failed == 0 {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::FAILURE
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
    }
}
