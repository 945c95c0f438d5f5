mod commands;
mod demos;
mod problem;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use idkit::numerics::Rational;
use serde_json::Value;

use commands::{Check, Demo, DemoParams, Method, Outcome, Report, Settings};
use problem::ProblemFile;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Parse(String),
    Core(idkit::Error),
}

impl From<idkit::Error> for CliError {
    fn from(e: idkit::Error) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Parse(m) => write!(f, "parse error: {m}"),
            CliError::Core(e) => write!(f, "error: {e}"),
        }
    }
}

/// Identifiable sets, critical cones and finite identification for
/// polyhedral problems, in exact rational arithmetic.
///
/// Exit codes: 0 PASS or success, 1 FAIL, 2 INCONCLUSIVE, 3 usage, parse or
/// domain error.
#[derive(Debug, Parser)]
#[command(name = "idkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Problem file (JSON).
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Seed for every sampled check; required by identify, verify and demo.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Total number of samples for sampled checks.
    #[arg(long, global = true)]
    budget: Option<usize>,
    /// Starting radius of the sampling schedule, e.g. 1/8.
    #[arg(long, global = true)]
    radius: Option<String>,
    /// Write the JSON report to this path; `-` prints it instead of the summary.
    #[arg(long, global = true)]
    json: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Active sets, cones and subdifferentials at the query point.
    Analyze,
    /// Multipliers, strict complementarity and the minimal identifiable set.
    Identify,
    /// Run one sampled or exact verifier.
    Verify {
        #[arg(value_enum)]
        check: Check,
    },
    /// Run an algorithm and report when it identifies the active set.
    Run {
        #[arg(value_enum)]
        method: Method,
    },
    /// Built-in examples.
    Demo {
        #[arg(value_enum)]
        name: Demo,
        #[arg(long, default_value = "1/2")]
        eps: String,
        #[arg(long, default_value = "1/4")]
        eps_prime: String,
        #[arg(long, default_value_t = 10)]
        max_n: u32,
    },
}

fn rational(flag: &str, s: &str) -> Result<Rational, CliError> {
    s.parse().map_err(|_| CliError::Usage(format!("{flag}: cannot parse {s:?} as a rational")))
}

fn load(cli: &Cli) -> Result<ProblemFile, CliError> {
    let path = cli.input.as_ref().ok_or_else(|| CliError::Usage("this command needs --input FILE".into()))?;
    ProblemFile::load(path)
}

fn execute(cli: &Cli) -> Result<(&'static str, Report), CliError> {
    let radius = cli.radius.as_deref().map(|r| rational("--radius", r)).transpose()?;
    if radius.as_ref().is_some_and(|r| !r.is_positive()) {
        return Err(CliError::Usage("--radius must be positive".into()));
    }
    let settings = Settings { seed: cli.seed, budget: cli.budget, radius };
    match &cli.command {
        Command::Analyze => Ok(("analyze", commands::analyze(&load(cli)?)?)),
        Command::Identify => {
            settings.seed.ok_or_else(|| CliError::Usage("identify needs --seed".into()))?;
            Ok(("identify", commands::identify(&load(cli)?, &settings)?))
        }
        Command::Verify { check } => {
            settings.seed.ok_or_else(|| CliError::Usage("verify needs --seed".into()))?;
            Ok(("verify", commands::verify(&load(cli)?, *check, &settings)?))
        }
        Command::Run { method } => Ok(("run", commands::run(&load(cli)?, *method)?)),
        Command::Demo { name, eps, eps_prime, max_n } => {
            settings.seed.ok_or_else(|| CliError::Usage("demo needs --seed".into()))?;
            let params =
                DemoParams { eps: rational("--eps", eps)?, eps_prime: rational("--eps-prime", eps_prime)?, max_n: *max_n };
            Ok(("demo", commands::demo(*name, &params, &settings)?))
        }
    }
}

fn summary(command: &str, report: &Report) -> String {
    let mut out = format!("idkit {command}: {}\n", report.outcome.label());
    if let Value::Object(map) = &report.body {
        for (k, v) in map {
            let mut s = v.to_string();
            if s.len() > 160 {
                let cut = (0..=157).rev().find(|&i| s.is_char_boundary(i)).unwrap_or(0);
                s.truncate(cut);
                s.push_str("...");
            }
            out.push_str(&format!("  {k:<26} {s}\n"));
        }
    }
    out
}

fn exit_code(o: Outcome) -> u8 {
    match o {
        Outcome::Success => 0,
        Outcome::Fail => 1,
        Outcome::Inconclusive => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (command, report) = match execute(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(3);
        }
    };
    let mut body = report.body.clone();
    if let Value::Object(map) = &mut body {
        map.insert("command".into(), Value::String(command.into()));
        map.insert("verdict".into(), Value::String(report.outcome.label().into()));
    }
    let text = serde_json::to_string_pretty(&body).expect("JSON values always print") + "\n";
    let stdout = std::io::stdout();
    match cli.json.as_deref() {
        Some(p) if p.as_os_str() == "-" => {
            let _ = stdout.lock().write_all(text.as_bytes());
        }
        Some(p) => {
            if let Err(e) = std::fs::write(p, &text) {
                eprintln!("usage error: {}: {e}", p.display());
                return ExitCode::from(3);
            }
            let _ = stdout.lock().write_all(summary(command, &report).as_bytes());
        }
        None => {
            let _ = stdout.lock().write_all(summary(command, &report).as_bytes());
        }
    }
    ExitCode::from(exit_code(report.outcome))
}
