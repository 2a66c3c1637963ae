//! Command-line front end; the binary is a thin wrapper over [`run`].

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::Error;
use crate::scenarios::{
    run_check, run_scenario, scenario_parameters, sweep, verify_scenario, Metric, ScenarioReport, SCENARIOS,
};

pub const SEED_ENV: &str = "BRITTLE_BAYES_SEED";
pub const DEFAULT_BUDGET: usize = 5000;

#[derive(Debug, Parser)]
#[command(name = "brittle-bayes", version, about = "Optimal bounds on prior and posterior values over classes of priors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// Override a scenario parameter (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE", value_parser = parse_override)]
    set: Vec<(String, f64)>,
    /// Seed; falls back to $BRITTLE_BAYES_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Write output to a file instead of stdout.
    #[arg(long)]
    out: Option<std::path::PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List scenarios and their default parameters.
    List {
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Run one scenario.
    Run {
        scenario: String,
        #[command(flatten)]
        common: Common,
    },
    /// Run a scenario once per value of one parameter.
    Sweep {
        scenario: String,
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Run a scenario together with its brute-force cross-checks.
    Verify {
        scenario: String,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Run every scenario at its defaults; exit 0 iff all published values are reproduced.
    Check {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<std::path::PathBuf>,
    },
}

fn parse_override(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected KEY=VALUE, got '{s}'"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("value for '{k}' is not a number: '{v}'"))?;
    Ok((k.trim().to_string(), v))
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::UnknownScenario(_) | Error::InvalidOverride { .. } | Error::InvalidBudget(_) => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn resolve_seed(seed: Option<u64>) -> Result<u64, Failure> {
    if let Some(s) = seed {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| Failure::Usage(format!("{SEED_ENV} is not an unsigned integer: '{v}'"))),
        Err(_) => Ok(0),
    }
}

/// Shortest round-trip representation.
fn num(v: f64) -> String {
    if v.is_finite() {
        serde_json::to_string(&v).expect("finite floats serialize")
    } else {
        format!("{v}")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn enum_name<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v).ok().and_then(|j| j.as_str().map(str::to_string)).unwrap_or_default()
}

fn csv_text(rows: Vec<Vec<String>>) -> Result<String, Failure> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    for r in rows {
        w.write_record(&r).map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Runtime(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

const METRIC_HEADER: [&str; 8] = ["scenario", "metric", "value", "expected", "tolerance", "comparison", "provenance", "pass"];

fn metric_row(scenario: &str, m: &Metric) -> Vec<String> {
    vec![
        scenario.to_string(),
        m.label.clone(),
        num(m.value),
        opt(m.expected),
        opt(m.tolerance),
        enum_name(&m.comparison),
        enum_name(&m.provenance),
        m.pass.to_string(),
    ]
}

fn metrics_csv(scenario: &str, metrics: &[Metric]) -> Result<String, Failure> {
    let mut rows = vec![METRIC_HEADER.iter().map(|s| s.to_string()).collect::<Vec<_>>()];
    rows.extend(metrics.iter().map(|m| metric_row(scenario, m)));
    csv_text(rows)
}

/// Wide CSV: one row per swept value, one column per metric.
fn sweep_csv(param: &str, reports: &[ScenarioReport]) -> Result<String, Failure> {
    let labels: Vec<String> = reports.first().map(|r| r.results.iter().map(|m| m.label.clone()).collect()).unwrap_or_default();
    let mut header = vec!["scenario".to_string(), param.to_string()];
    header.extend(labels.iter().cloned());
    header.push("passed".into());
    let mut rows = vec![header];
    for r in reports {
        let mut row = vec![r.name.clone(), num(r.parameters[param])];
        row.extend(labels.iter().map(|l| r.metric(l).map(|m| num(m.value)).unwrap_or_default()));
        row.push(r.passed.to_string());
        rows.push(row);
    }
    csv_text(rows)
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn overrides(set: &[(String, f64)]) -> BTreeMap<String, f64> {
    set.iter().cloned().collect()
}

struct Output {
    text: String,
    out: Option<std::path::PathBuf>,
    ok: bool,
}

fn execute(cmd: Command) -> Result<Output, Failure> {
    let started = Instant::now();
    let elapsed = |s: &Instant| s.elapsed().as_millis() as u64;
    match cmd {
        Command::List { format } => {
            let mut listing = Vec::new();
            for name in SCENARIOS {
                let params: BTreeMap<&str, f64> = scenario_parameters(name)?.into_iter().collect();
                listing.push((name, params));
            }
            let text = match format {
                Format::Json => json(&listing.iter().map(|(n, p)| serde_json::json!({"name": n, "parameters": p})).collect::<Vec<_>>()),
                Format::Csv => {
                    let mut rows = vec![vec!["scenario".to_string(), "parameter".into(), "default".into()]];
                    for (n, p) in &listing {
                        rows.extend(p.iter().map(|(k, v)| vec![n.to_string(), k.to_string(), num(*v)]));
                    }
                    csv_text(rows)?
                }
            };
            Ok(Output { text, out: None, ok: true })
        }
        Command::Run { scenario, common } => {
            let seed = resolve_seed(common.seed)?;
            let report = run_scenario(&scenario, &overrides(&common.set), seed)?;
            let text = match common.format {
                Format::Json => json(&serde_json::json!({"report": &report, "runtime_ms": report.runtime_ms})),
                Format::Csv => format!("{}# runtime_ms={}\n", metrics_csv(&report.name, &report.results)?, report.runtime_ms),
            };
            Ok(Output { text, out: common.out, ok: true })
        }
        Command::Sweep { scenario, param, values, common } => {
            if !common.set.is_empty() {
                return Err(Failure::Usage("sweep does not accept --set".into()));
            }
            let seed = resolve_seed(common.seed)?;
            let reports = sweep(&scenario, &param, &values, seed)?;
            let text = match common.format {
                Format::Json => json(&serde_json::json!({"reports": &reports, "runtime_ms": elapsed(&started)})),
                Format::Csv => sweep_csv(&param, &reports)?,
            };
            Ok(Output { text, out: common.out, ok: true })
        }
        Command::Verify { scenario, budget, common } => {
            let seed = resolve_seed(common.seed)?;
            let v = verify_scenario(&scenario, &overrides(&common.set), seed, budget)?;
            let text = match common.format {
                Format::Json => json(&serde_json::json!({"verify": &v, "runtime_ms": elapsed(&started)})),
                Format::Csv => {
                    let mut all = v.report.results.clone();
                    all.extend(v.checks.iter().cloned());
                    metrics_csv(&v.report.name, &all)?
                }
            };
            Ok(Output { text, out: common.out, ok: v.passed })
        }
        Command::Check { seed, out } => {
            let seed = resolve_seed(seed)?;
            let report = run_check(seed)?;
            Ok(Output { text: json(&report), out, ok: report.passed })
        }
    }
}

/// Parses `args` (including the program name), executes, and returns the exit code:
/// 0 on success, 1 when a check or verification fails or a computation errors,
/// 2 on usage errors.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    let _ = write!(stdout, "{e}");
                    return 0;
                }
                _ => 2,
            };
            let _ = write!(stderr, "{e}");
            return code;
        }
    };
    match execute(cli.command) {
        Ok(o) => {
            if let Some(path) = o.out {
                if let Err(e) = std::fs::write(&path, &o.text) {
                    let _ = writeln!(stderr, "error: cannot write {}: {e}", path.display());
                    return 1;
                }
            } else {
                let _ = stdout.write_all(o.text.as_bytes());
            }
            if o.ok {
                0
            } else {
                1
            }
        }
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            2
        }
        Err(Failure::Runtime(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let mut full = vec!["brittle-bayes"];
        full.extend_from_slice(args);
        let code = run(full, &mut o, &mut e);
        (code, String::from_utf8(o).unwrap(), String::from_utf8(e).unwrap())
    }

    #[test]
    fn override_parsing() {
        assert_eq!(parse_override("alpha=2.5").unwrap(), ("alpha".into(), 2.5));
        assert!(parse_override("alpha").is_err());
        assert!(parse_override("alpha=x").is_err());
    }

    #[test]
    fn unknown_scenario_is_usage_error() {
        let (code, out, err) = call(&["run", "nonexistent"]);
        assert_eq!(code, 2);
        assert!(out.is_empty());
        assert!(err.contains("nonexistent"));
    }

    #[test]
    fn run_csv_has_trailer() {
        let (code, out, _) = call(&["run", "coin", "--format", "csv"]);
        assert_eq!(code, 0);
        assert!(out.starts_with("scenario,metric,value,expected,tolerance,comparison,provenance,pass\n"));
        assert!(out.lines().last().unwrap().starts_with("# runtime_ms="));
        assert!(!out.contains('\r'));
    }
}
