//! `stickyflow` command-line driver.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails, 2 on input
//! errors (unreadable or invalid scenarios, bad flags, solver errors).

mod batch;
mod commands;
mod output;
mod run;
mod scenario;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use stickyflow::scalar::parse_rational;
use stickyflow::Rational;

use commands::RandomKind;
use output::{to_json, write_atomic};
use run::{run, RunOptions};
use scenario::{load_scenario, Arithmetic, Scenario};

#[derive(Parser)]
#[command(name = "stickyflow", version, about = "Sticky-particle flows in one dimension")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Arithmetic backend; overrides the scenario's own choice.
    #[arg(long, global = true, value_enum)]
    arithmetic: Option<Arithmetic>,
    /// Stop the simulation at this time (integer, p/q or decimal).
    #[arg(long, global = true, value_parser = rational_arg)]
    horizon: Option<Rational>,
    /// Tolerance used by every check instead of its default.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Seed for randomized scenarios (recorded in the bundle).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory (files are written there instead of stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Source {
    /// Scenario file.
    #[arg(required_unless_present = "random", conflicts_with = "random")]
    scenario: Option<PathBuf>,
    /// Generate a seeded random scenario instead of reading a file.
    #[arg(long, value_enum)]
    random: Option<RandomKind>,
    /// Number of atoms of the random scenario.
    #[arg(long, default_value_t = 8)]
    atoms: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and run its checks; prints or writes the result bundle.
    Simulate(Source),
    /// Quantile at time t from the projection formula.
    Project {
        #[command(flatten)]
        source: Source,
        /// Evaluation time.
        #[arg(long, value_parser = rational_arg)]
        t: Rational,
    },
    /// Limit profile of a scenario, or why it has none.
    Limits(Source),
    /// Energy identities and inequalities of a scenario.
    Identities(Source),
    /// Collision cascade with incoming speeds n^-k.
    Bombard {
        /// Speed base (2 is the reference instance).
        #[arg(long, default_value_t = 2)]
        n: i64,
        /// Last collision index.
        #[arg(long, default_value_t = 60)]
        k: usize,
        /// First collision index of the decay fit.
        #[arg(long, default_value_t = 20)]
        fit_from: usize,
        /// Compare the recursion with the event engine.
        #[arg(long)]
        cross_validate: bool,
    },
    /// Decay exponents for several speed bases, in parallel.
    Sweep {
        #[arg(long, value_delimiter = ',', default_values_t = [2, 3, 4, 6, 8, 16])]
        ns: Vec<i64>,
        #[arg(long, default_value_t = 60)]
        k: usize,
    },
    /// Run every scenario of a directory; bundles are written next to the inputs.
    Batch {
        dir: PathBuf,
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Rebuild the batch summary from the bundles of a directory.
    Summarize { dir: PathBuf },
}

fn rational_arg(s: &str) -> Result<Rational, String> {
    parse_rational(s).ok_or_else(|| format!("not a number: {s}"))
}

enum Outcome {
    Pass,
    Fail,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn options(g: &Global) -> RunOptions {
    RunOptions {
        arithmetic: g.arithmetic,
        horizon: g.horizon.clone(),
        tolerance: g.tolerance,
    }
}

fn source(src: &Source, g: &Global) -> Result<Scenario> {
    match (&src.scenario, src.random) {
        (_, Some(kind)) => commands::random_scenario(kind, src.atoms, g.seed),
        (Some(path), None) => Ok(load_scenario(path)?),
        (None, None) => bail!("give a scenario file or --random"),
    }
}

/// Prints `text`, or writes it to `<out>/<file>`.
fn emit(g: &Global, file: &str, text: &str) -> Result<()> {
    match &g.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            write_atomic(&dir.join(file), text.as_bytes())
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn outcome(passed: bool) -> Outcome {
    if passed {
        Outcome::Pass
    } else {
        Outcome::Fail
    }
}

fn execute(cli: Cli) -> Result<Outcome> {
    let g = &cli.global;
    let opts = options(g);
    match &cli.command {
        Command::Simulate(src) => {
            let s = source(src, g)?;
            let mut bundle = run(&s, &opts)?;
            bundle.source_file = src
                .scenario
                .as_deref()
                .and_then(Path::file_name)
                .map(|n| n.to_string_lossy().into_owned());
            match &g.out {
                Some(dir) => {
                    std::fs::create_dir_all(dir)?;
                    batch::write_bundle(dir, &s.name, &bundle)?;
                }
                None => print!("{}", to_json(&bundle)?),
            }
            Ok(outcome(bundle.passed))
        }
        Command::Project { source: src, t } => {
            let s = source(src, g)?;
            emit(g, &format!("{}.projection.json", s.name), &to_json(&commands::project(&s, &opts, t)?)?)?;
            Ok(Outcome::Pass)
        }
        Command::Limits(src) => {
            let s = source(src, g)?;
            emit(g, &format!("{}.limits.json", s.name), &to_json(&commands::limits(&s, &opts)?)?)?;
            Ok(Outcome::Pass)
        }
        Command::Identities(src) => {
            let mut s = source(src, g)?;
            s.checks = vec![scenario::Check::Identities, scenario::Check::Shapes];
            let bundle = run(&s, &opts)?;
            let report = serde_json::json!({
                "name": bundle.name,
                "checks": bundle.checks,
                "diagnostics": bundle.diagnostics,
            });
            emit(g, &format!("{}.identities.json", s.name), &to_json(&report)?)?;
            Ok(outcome(bundle.passed))
        }
        Command::Bombard {
            n,
            k,
            fit_from,
            cross_validate,
        } => {
            let arithmetic = g.arithmetic.unwrap_or(Arithmetic::Rational);
            let tol = g.tolerance.unwrap_or(1e-10);
            let report = commands::bombard(*n, *k, *fit_from, *cross_validate, arithmetic, tol)?;
            if let Some(dir) = &g.out {
                std::fs::create_dir_all(dir)?;
                write_atomic(&dir.join(format!("bombard_n{n}.csv")), commands::gap_rows_csv(&report.rows)?.as_bytes())?;
            }
            emit(g, &format!("bombard_n{n}.json"), &to_json(&report)?)?;
            Ok(outcome(report.passed()))
        }
        Command::Sweep { ns, k } => {
            let rows = commands::sweep(ns, *k)?;
            if let Some(dir) = &g.out {
                std::fs::create_dir_all(dir)?;
                write_atomic(&dir.join("sweep.csv"), commands::sweep_csv(&rows)?.as_bytes())?;
            }
            emit(g, "sweep.json", &to_json(&rows)?)?;
            Ok(Outcome::Pass)
        }
        Command::Batch { dir, jobs } => {
            let result = batch::batch(dir, g.out.as_deref(), &opts, *jobs)?;
            print!("{}", result.summary);
            for row in result.rows.iter().filter(|r| r.status == "error") {
                eprintln!("error: {}", row.error);
            }
            if result.errors > 0 {
                bail!("{} of {} scenarios could not be run", result.errors, result.rows.len());
            }
            Ok(outcome(result.failed == 0))
        }
        Command::Summarize { dir } => {
            let result = batch::summarize(dir, g.out.as_deref())?;
            print!("{}", result.summary);
            Ok(outcome(result.failed == 0))
        }
    }
}
