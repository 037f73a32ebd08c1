//! Command line front end: scenario runs, curve extraction, and the built-in
//! verification suites.
//!
//! Exit codes: 0 when every asserted analysis passes, 1 when any fails, and
//! 2 for input problems (unreadable files, parse or validation failures,
//! unknown suites, enumeration cap breaches).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use efx_core::error::EfxError;
use efx_core::report::{extract_curves, AnalysisOutcome, Report};
use efx_core::runner::{run_scenario, RunConfig};
use efx_core::suites::run_suite;

#[derive(Parser)]
#[command(
    name = "efx",
    version,
    about = "Exact verification of explanation functions on finite discrete domains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every analysis of a scenario file and write the report.
    Run {
        /// Scenario JSON file.
        scenario: PathBuf,
        /// Report output path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract the modulus curves of a report into CSV files.
    Curves {
        /// Report JSON file produced by `run` or `verify`.
        report: PathBuf,
        /// Directory the CSV files are written into.
        #[arg(long)]
        dir: PathBuf,
    },
    /// Run a built-in verification suite
    /// (lemmas|thm1|thm2|thm3|thm4|thm5|union|uniqueness|all).
    Verify {
        suite: String,
        /// Base seed for the randomized batteries.
        #[arg(long)]
        seed: u64,
        /// Optional report output path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

const EXIT_FAILED_ASSERTION: u8 = 1;
const EXIT_INPUT_ERROR: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(EXIT_INPUT_ERROR)
        }
    }
}

fn enum_cap() -> Result<u64, String> {
    match std::env::var("EFX_ENUM_CAP") {
        Ok(raw) => raw
            .parse::<u64>()
            .map_err(|_| format!("EFX_ENUM_CAP must be an unsigned integer, got `{raw}`")),
        Err(_) => Ok(RunConfig::default().enum_cap),
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Run { scenario, out } => {
            let bytes = std::fs::read(&scenario)
                .map_err(|e| format!("cannot read {}: {e}", scenario.display()))?;
            let config = RunConfig {
                enum_cap: enum_cap()?,
            };
            let report = run_scenario(&bytes, &config).map_err(input_error)?;
            finish(&report, Some(&out))
        }
        Command::Curves { report, dir } => {
            let bytes = std::fs::read(&report)
                .map_err(|e| format!("cannot read {}: {e}", report.display()))?;
            let parsed = Report::from_json(&bytes).map_err(input_error)?;
            let curves = extract_curves(&parsed);
            if curves.is_empty() {
                println!("no curves present in {}", report.display());
                return Ok(ExitCode::SUCCESS);
            }
            std::fs::create_dir_all(&dir)
                .map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
            for (stem, csv) in &curves {
                let path = dir.join(format!("{stem}.csv"));
                std::fs::write(&path, csv)
                    .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
                println!("wrote {}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { suite, seed, out } => {
            let report = run_suite(&suite, seed, enum_cap()?).map_err(input_error)?;
            finish(&report, out.as_deref())
        }
    }
}

fn input_error(e: EfxError) -> String {
    e.to_string()
}

fn finish(report: &Report, out: Option<&Path>) -> Result<ExitCode, String> {
    for result in &report.analyses {
        let verdict = match result.outcome {
            AnalysisOutcome::Pass => "pass",
            AnalysisOutcome::Fail => "FAIL",
            AnalysisOutcome::NotApplicable => "not applicable",
            AnalysisOutcome::Info => "info",
        };
        println!("[{:>3}] {:<40} {verdict}", result.index, result.analysis);
    }
    println!(
        "passed {} / failed {} / not applicable {} / info {}",
        report.summary.passed,
        report.summary.failed,
        report.summary.not_applicable,
        report.summary.info
    );
    if let Some(path) = out {
        std::fs::write(path, report.to_json())
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
        println!("report written to {}", path.display());
    }
    if report.all_assertions_pass() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(EXIT_FAILED_ASSERTION))
    }
}
