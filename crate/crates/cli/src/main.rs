use std::io::{ErrorKind, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qmi_cli::{load_scenario, run_demo, run_search, run_verify, write_report, CliError, RunOptions, ENV_TOL};

/// Checks of dual instruments and sub-observables on finite-dimensional systems.
#[derive(Parser)]
#[command(name = "qmi", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario's checks (all suites when it lists none).
    Verify {
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Reproduce one worked example (example1..example8).
    Demo {
        name: String,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Search for Sob-closure witnesses in U_I for a scenario instrument.
    Search {
        scenario: PathBuf,
        #[arg(long)]
        family: String,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn emit(json: &str, report: Option<&PathBuf>) -> Result<(), CliError> {
    match report {
        Some(path) => write_report(path, json),
        None => match writeln!(std::io::stdout(), "{json}") {
            Err(e) if e.kind() != ErrorKind::BrokenPipe => Err(CliError::Report {
                path: "<stdout>".into(),
                message: e.to_string(),
            }),
            _ => Ok(()),
        },
    }
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let env_tol = std::env::var(ENV_TOL).ok();
    match cli.command {
        Command::Verify { scenario, seed, trials, tol, report } => {
            let s = load_scenario(&scenario)?;
            let r = run_verify(&s, &RunOptions { seed, trials, tol }, env_tol.as_deref())?;
            for rep in &r.reports {
                eprintln!(
                    "{} {} cases={} failures={} max_residual={:.3e}",
                    if rep.passed { "PASS" } else { "FAIL" },
                    rep.check,
                    rep.cases,
                    rep.failures.len(),
                    rep.max_residual
                );
            }
            emit(&qmi_cli::to_json(&r), report.as_ref())?;
            Ok(r.passed)
        }
        Command::Demo { name, report } => {
            let r = run_demo(&name)?;
            for line in &r.lines {
                eprintln!("{} {}  [{:.3e}]", if line.passed { "PASS" } else { "FAIL" }, line.citation, line.residual);
            }
            emit(&qmi_cli::to_json(&r), report.as_ref())?;
            Ok(r.passed)
        }
        Command::Search { scenario, family, trials, seed, report } => {
            let s = load_scenario(&scenario)?;
            let r = run_search(&s, &family, &RunOptions { seed, trials, tol: None }, env_tol.as_deref())?;
            eprintln!(
                "{} {}: tested={} witnesses={} unknown={} violated={}",
                r.kind, r.family, r.tested, r.witnesses, r.unknown, r.criterion_violated
            );
            emit(&qmi_cli::to_json(&r), report.as_ref())?;
            Ok(r.passed())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
