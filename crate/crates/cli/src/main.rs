use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fluxcouple::selfcheck::selfcheck;
use fluxcouple_cli::run_file;

#[derive(Parser)]
#[command(name = "fluxcouple", version, about = "Run flux-coupler experiments from JSON configs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config document.
    Run {
        config: PathBuf,
        /// Worker threads for sweep points; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Directory the output prefix is resolved against.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the invariant suite and print one line per check.
    Selfcheck {
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { config, jobs, out } => match run_file(&config, jobs, out.as_deref()) {
            Ok((json, csv)) => {
                println!("{}", json.display());
                println!("{}", csv.display());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("{}", e.record());
                ExitCode::from(e.exit_code())
            }
        },
        Command::Selfcheck { json } => {
            let report = selfcheck();
            if json {
                println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            } else {
                println!("{report}");
            }
            if report.all_passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
