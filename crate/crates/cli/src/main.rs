use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lefschetz_cli::{load_config, run, Status};
use lefschetz_core::geometry::Scenario;

#[derive(Parser)]
#[command(name = "lefschetz-lab", version, about = "Equivariant heat-trace and Lefschetz experiments")]
struct Cli {
    /// Print the recognized scenario names and exit.
    #[arg(long)]
    list_scenarios: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the suites selected in a JSON run configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if cli.list_scenarios {
        for sc in Scenario::ALL {
            println!("{}", sc.name());
        }
        return ExitCode::SUCCESS;
    }
    let Some(Command::Run { config }) = cli.command else {
        eprintln!("error: nothing to do; use `run --config <path>` or `--list-scenarios`");
        return ExitCode::from(2);
    };
    let cfg = match load_config(&config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(Status::ConfigError as u8);
        }
    };
    let (status, _) = run(&cfg);
    ExitCode::from(status as u8)
}
