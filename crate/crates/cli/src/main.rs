use std::path::PathBuf;
use std::process::ExitCode;

use c2i_core::scenario::{self, RunError, ScenarioError};
use clap::{Parser, Subcommand};

/// Deterministic vehicle-to-infrastructure message simulator.
#[derive(Debug, Parser)]
#[command(name = "c2i-sim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a built-in scenario (by name) or a scenario file.
    Run {
        scenario: String,
        /// Directory for metrics.csv, summary.json and displays/.
        #[arg(long)]
        out: PathBuf,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Stop at this simulation time (ms) instead of the scenario's t_end.
        #[arg(long)]
        until: Option<u64>,
    },
    /// Check a scenario without running it.
    Validate { scenario: String },
    /// List the built-in scenarios.
    Scenarios,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { scenario, out, seed, until } => run(&scenario, &out, seed, until),
        Command::Validate { scenario } => match scenario::resolve(&scenario) {
            Ok(cfg) => {
                println!("{}: ok", cfg.name);
                0
            }
            Err(e) => report(RunError::Scenario(e)),
        },
        Command::Scenarios => {
            for name in scenario::builtin_names() {
                let note = scenario::builtin(name).map(|c| c.note).unwrap_or_default();
                println!("{name}\t{note}");
            }
            0
        }
    };
    ExitCode::from(code as u8)
}

fn run(name: &str, out: &PathBuf, seed: Option<u64>, until: Option<u64>) -> i32 {
    let mut cfg = match scenario::resolve(name) {
        Ok(c) => c,
        Err(e) => return report(RunError::Scenario(e)),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(t) = until {
        if t == 0 {
            return report(RunError::Scenario(ScenarioError::Validation(vec!["--until must be positive".into()])));
        }
    }
    match scenario::run_until(&cfg, until, out) {
        Ok(m) => {
            let displayed: usize = m.displays.values().map(Vec::len).sum();
            println!(
                "{}: {} display entries, {} reports delivered, {} measurements lost; output in {}",
                m.scenario,
                displayed,
                m.reports_delivered,
                m.measurement_loss,
                out.display()
            );
            0
        }
        Err(e) => report(e),
    }
}

fn report(e: RunError) -> i32 {
    eprintln!("error: {e}");
    e.exit_code()
}
