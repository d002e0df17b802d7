mod runner;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use quadric_cr::io::load_scenarios;
use quadric_cr::suites::{Cell, Cmp, SuiteReport};
use quadric_cr::Error;
use runner::Suite;
use serde_json::json;

const EXIT_PARSE: u8 = 2;
const EXIT_MISSING: u8 = 3;
const EXIT_VIOLATION: u8 = 4;
const EXIT_RUNTIME: u8 = 5;

/// Runs a verification suite over every scenario in a scenario file.
#[derive(Parser, Debug)]
#[command(name = "quadric-cr", version)]
struct Args {
    subcommand: Suite,
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the scenario's `seed` key.
    #[arg(long)]
    seed: Option<u64>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse(_) => EXIT_PARSE,
        Error::MissingReference(_) => EXIT_MISSING,
        _ => EXIT_RUNTIME,
    }
}

fn cell(c: &Cell) -> String {
    match c {
        Cell::Num(x) => format!("{x:.16e}"),
        Cell::Int(i) => i.to_string(),
        Cell::Text(s) => s.clone(),
    }
}

fn write_csv(path: &Path, suite: &str, scenario: &str, seed: u64, reports: &[SuiteReport]) -> std::io::Result<()> {
    let mut buf = format!("# quadric-cr {suite} scenario={scenario} seed={seed}\n");
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
    for r in reports {
        let mut head = vec!["suite".to_string()];
        head.extend(r.table.header.iter().cloned());
        w.write_record(&head)?;
        for row in &r.table.rows {
            let mut rec = vec![r.suite.clone()];
            rec.extend(row.iter().map(cell));
            w.write_record(&rec)?;
        }
    }
    w.write_record(["check", "value", "relation", "tolerance", "pass"])?;
    for r in reports {
        for c in &r.checks {
            let tol = if c.cmp == Cmp::Finite { String::new() } else { format!("{:.16e}", c.tolerance) };
            w.write_record([format!("{}/{}", r.suite, c.name), format!("{:.16e}", c.value), c.relation().into(), tol, c.pass.to_string()])?;
        }
    }
    buf.push_str(&String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv output is utf-8"));
    fs::write(path, buf)
}

fn report_json(scenario: &str, seed: u64, reports: &[SuiteReport]) -> serde_json::Value {
    let checks: Vec<_> = reports
        .iter()
        .flat_map(|r| {
            r.checks.iter().map(move |c| {
                json!({
                    "suite": r.suite,
                    "check": c.name,
                    "value": c.value,
                    "relation": c.relation(),
                    "tolerance": if c.cmp == Cmp::Finite { serde_json::Value::Null } else { json!(c.tolerance) },
                    "pass": c.pass,
                    "witness": c.witness,
                })
            })
        })
        .collect();
    json!({
        "scenario": scenario,
        "seed": seed,
        "pass": reports.iter().all(SuiteReport::passed),
        "seconds": reports.iter().map(|r| r.seconds).sum::<f64>(),
        "warnings": reports.iter().flat_map(|r| r.warnings.clone()).collect::<Vec<_>>(),
        "checks": checks,
    })
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(k) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    }
    let scenarios = match load_scenarios(&args.scenario) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    if let Err(e) = fs::create_dir_all(&args.out) {
        eprintln!("error: cannot create {}: {e}", args.out.display());
        return ExitCode::from(EXIT_RUNTIME);
    }
    let suite = args.subcommand.name();
    let mut summary = Vec::new();
    let mut violations = 0usize;
    for s in &scenarios {
        let seed = match args.seed {
            Some(v) => v,
            None => match s.keys.get("seed").map(str::parse::<u64>) {
                None => 0,
                Some(Ok(v)) => v,
                Some(Err(_)) => {
                    eprintln!("error: [{}] seed must be a nonnegative integer", s.name);
                    return ExitCode::from(EXIT_PARSE);
                }
            },
        };
        let reports = match runner::run(args.subcommand, s, seed) {
            Ok(r) => r,
            Err(e) => {
                eprintln!("error: [{}] {e}", s.name);
                return ExitCode::from(exit_code(&e));
            }
        };
        let stem = format!("{suite}_{}", s.name);
        let csv_path = args.out.join(format!("{stem}.csv"));
        if let Err(e) = write_csv(&csv_path, suite, &s.name, seed, &reports) {
            eprintln!("error: writing {}: {e}", csv_path.display());
            return ExitCode::from(EXIT_RUNTIME);
        }
        for r in &reports {
            for c in r.checks.iter().filter(|c| !c.pass) {
                violations += 1;
                let tol = if c.cmp == Cmp::Finite { String::new() } else { format!(" {:e}", c.tolerance) };
                eprintln!(
                    "violation: [{}] {}/{} = {:e} (required {}{tol}){}",
                    s.name,
                    r.suite,
                    c.name,
                    c.value,
                    c.relation(),
                    c.witness.as_deref().map(|w| format!(" witness: {w}")).unwrap_or_default()
                );
            }
        }
        let pass = reports.iter().all(SuiteReport::passed);
        println!("{} [{}] -> {}", if pass { "PASS" } else { "FAIL" }, s.name, csv_path.display());
        summary.push(report_json(&s.name, seed, &reports));
    }
    let doc = json!({
        "subcommand": suite,
        "scenario_file": args.scenario.display().to_string(),
        "pass": violations == 0,
        "scenarios": summary,
    });
    let json_path = args.out.join(format!("{suite}_summary.json"));
    let text = serde_json::to_string_pretty(&doc).expect("summary serialises");
    if let Err(e) = fs::write(&json_path, text) {
        eprintln!("error: writing {}: {e}", json_path.display());
        return ExitCode::from(EXIT_RUNTIME);
    }
    if violations > 0 {
        ExitCode::from(EXIT_VIOLATION)
    } else {
        ExitCode::SUCCESS
    }
}
