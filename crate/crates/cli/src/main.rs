//! `hicomp`: run scheme validation, concentration and PAC experiments, bound
//! tables and sample inspection from config files.
//!
//! Exit codes: 0 when every assertion holds, 1 when one fails, 2 on a
//! config or input error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use hicomp::experiments::{
    resolve_target, run_bound_table, run_concentration_experiment, run_pac_experiment, run_validation, to_csv_bytes,
    write_run, ExperimentConfig, RunOutput,
};
use hicomp::learner::{asymptotic_guarantee_reference, m_pac, GuaranteeInputs};
use hicomp::samples::io::{from_json, SENTINEL_SYMBOL};

#[derive(Parser)]
#[command(name = "hicomp", version, about = "High-arity sample compression experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check that rho(kappa(x, y)) has zero (or bounded) empirical loss on realizable samples.
    ValidateScheme(RunArgs),
    /// Exceedance frequency of a fixed selection against the Azuma bound.
    Concentration(RunArgs),
    /// Failure frequency of the learner at the configured sample sizes.
    Pac(RunArgs),
    /// Smallest sample size meeting the guarantee, with the bound at that size.
    Mpac(RunArgs),
    /// Bound breakdown over the epsilon, delta and m grid.
    BoundTable(RunArgs),
    /// Dimensions and label histogram of a sample file.
    Inspect(InspectArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Directory for trials.jsonl, summary.csv and manifest.json.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    fail_fast: bool,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct InspectArgs {
    #[arg(long)]
    sample: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

enum Failure {
    Config(String),
    Assertion(String),
}

impl From<hicomp::Error> for Failure {
    fn from(e: hicomp::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn load(args: &RunArgs) -> Result<ExperimentConfig, Failure> {
    let mut c = ExperimentConfig::from_path(&args.config)
        .map_err(|e| Failure::Config(format!("{}: {e}", args.config.display())))?;
    if let Some(seed) = args.seed {
        c.seed = seed;
    }
    if let Some(trials) = args.trials {
        c.trials = trials;
    }
    if let Some(out) = &args.out {
        c.output = Some(out.clone());
    }
    c.fail_fast |= args.fail_fast;
    c.validate()?;
    Ok(c)
}

fn print_rows<T: serde::Serialize>(rows: &[T], format: Format) -> Outcome {
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(rows).map_err(hicomp::Error::from)?),
        Format::Csv => print!("{}", String::from_utf8_lossy(&to_csv_bytes(rows)?)),
    }
    Ok(())
}

/// Writes the run directory when one is configured, prints the summary, and
/// turns a failed assertion into exit code 1.
fn finish<T: serde::Serialize>(
    command: &str,
    config: &ExperimentConfig,
    rows: &[T],
    output: RunOutput,
    passed: bool,
    format: Format,
    failure: impl FnOnce() -> String,
) -> Outcome {
    if let Some(dir) = &config.output {
        write_run(dir, command, config, &output, passed)?;
    }
    print_rows(rows, format)?;
    if passed {
        Ok(())
    } else {
        Err(Failure::Assertion(failure()))
    }
}

fn validate_scheme(args: &RunArgs) -> Outcome {
    let c = load(args)?;
    let s = run_validation(&c)?;
    let first = s.report.first_violation().cloned();
    finish("validate-scheme", &c, &s.rows, s.render()?, s.passed(), args.format.unwrap_or(Format::Csv), || {
        let first = first.map_or(Value::Null, |r| serde_json::to_value(r).unwrap_or(Value::Null));
        format!("{} violation(s); first: {first}", s.report.violations)
    })
}

fn concentration(args: &RunArgs) -> Outcome {
    let c = load(args)?;
    let target = resolve_target(&c, &c.resolve()?);
    let s = run_concentration_experiment(&c, &target)?;
    finish("concentration", &c, &s.rows, s.render()?, s.passed(), args.format.unwrap_or(Format::Csv), || {
        let bad: Vec<String> = s
            .rows
            .iter()
            .filter(|r| !r.pass)
            .map(|r| {
                format!("m = {}, epsilon = {}: p_hat {} - ci {} > bound {}", r.m, r.epsilon, r.p_hat, r.ci, r.bound)
            })
            .collect();
        bad.join("\n")
    })
}

fn pac(args: &RunArgs) -> Outcome {
    let c = load(args)?;
    let s = run_pac_experiment(&c)?;
    finish("pac", &c, &s.rows, s.render()?, s.passed(), args.format.unwrap_or(Format::Csv), || {
        let bad: Vec<String> = s
            .rows
            .iter()
            .filter(|r| !r.pass)
            .map(|r| {
                format!("m = {}, epsilon = {}: q_hat {} - ci {} > delta {}", r.m, r.epsilon, r.q_hat, r.ci, r.delta)
            })
            .collect();
        bad.join("\n")
    })
}

fn mpac(args: &RunArgs) -> Outcome {
    let c = load(args)?;
    let resolved = c.resolve()?;
    let mut results = Vec::new();
    let mut missing = Vec::new();
    for &epsilon in &c.epsilon {
        for &delta in &c.delta {
            let inputs =
                GuaranteeInputs::for_scheme(resolved.scheme.clone(), resolved.loss.sup_norm(), epsilon, delta)?;
            let r = m_pac(&inputs, c.scan_limit)?;
            if r.m_pac.is_none() {
                missing.push(format!("epsilon = {epsilon}, delta = {delta}: {}", r.diagnostics));
            }
            results.push(json!({
                "epsilon": epsilon,
                "delta": delta,
                "m_pac": r.m_pac,
                "scan_limit": r.scan_limit,
                "asymptotic": asymptotic_guarantee_reference(&inputs),
                "breakdown": r.breakdown,
            }));
        }
    }
    match args.format.unwrap_or(Format::Json) {
        Format::Json => println!("{}", serde_json::to_string_pretty(&results).map_err(hicomp::Error::from)?),
        Format::Csv => {
            let rows: Vec<(f64, f64, Option<u64>, f64)> = results
                .iter()
                .map(|r| {
                    (
                        r["epsilon"].as_f64().unwrap_or(f64::NAN),
                        r["delta"].as_f64().unwrap_or(f64::NAN),
                        r["m_pac"].as_u64(),
                        r["asymptotic"].as_f64().unwrap_or(f64::NAN),
                    )
                })
                .collect();
            println!("epsilon,delta,m_pac,asymptotic");
            for (e, d, m, a) in rows {
                println!("{e},{d},{},{a}", m.map_or(String::new(), |m| m.to_string()));
            }
        }
    }
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Failure::Assertion(format!("m_pac not found:\n{}", missing.join("\n"))))
    }
}

fn bound_table(args: &RunArgs) -> Outcome {
    let c = load(args)?;
    let rows = run_bound_table(&c)?;
    let format = args.format.unwrap_or(Format::Csv);
    if let Some(dir) = &c.output {
        let output = RunOutput { trials_jsonl: Vec::new(), summary_csv: to_csv_bytes(&rows)? };
        write_run(dir, "bound-table", &c, &output, true)?;
    }
    print_rows(&rows, format)
}

fn inspect(args: &InspectArgs) -> Outcome {
    let text = std::fs::read_to_string(&args.sample)
        .map_err(|e| Failure::Config(format!("{}: {e}", args.sample.display())))?;
    let sample = from_json(&text).map_err(|e| Failure::Config(format!("{}: {e}", args.sample.display())))?;
    let y = sample.tensor()?;
    let histogram = y.histogram();
    let cells = y.cells().len();
    let labelled: u64 = histogram.iter().sum();
    let counts: serde_json::Map<String, Value> =
        y.alphabet().iter().zip(&histogram).map(|(a, &n)| (a.clone(), json!(n))).collect();
    let info = json!({
        "mode": sample.mode(),
        "k": sample.k(),
        "m": sample.m(),
        "shape": vec![sample.m(); sample.k()],
        "cells": cells,
        "labelled": labelled,
        "unlabelled": cells as u64 - labelled,
        "Y": y.alphabet(),
        "histogram": counts,
    });
    match args.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&info).map_err(hicomp::Error::from)?),
        Format::Csv => {
            println!("label,count");
            for (a, n) in y.alphabet().iter().zip(&histogram) {
                println!("{a},{n}");
            }
            println!("{SENTINEL_SYMBOL},{}", cells as u64 - labelled);
        }
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::ValidateScheme(a) => validate_scheme(a),
        Command::Concentration(a) => concentration(a),
        Command::Pac(a) => pac(a),
        Command::Mpac(a) => mpac(a),
        Command::BoundTable(a) => bound_table(a),
        Command::Inspect(a) => inspect(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Assertion(msg)) => {
            eprintln!("assertion failed\n{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
