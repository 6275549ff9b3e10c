//! Command-line front end.
//!
//! Every successful command prints one JSON report line and exits 0, whatever
//! the verdict. Parse and validation failures exit 2, everything else 1.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use crate::commands;
use crate::error::{Error, Result};
use crate::model_file::{load_model, save_model, Model};
use crate::numerics::ToleranceConfig;
use crate::reductions::ActionSequence;
use crate::report::{to_json_string, to_value, Report};
use crate::solvers::{Policy, Witness};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "qomdp", version, about = "POMDP and quantum observable MDP toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load a model file and check every invariant.
    Validate { file: PathBuf },
    /// Monte Carlo estimate of the probability of reaching the goal.
    Simulate {
        file: PathBuf,
        /// Comma-separated 1-based actions ("1,2,1") or a JSON file holding a witness.
        #[arg(long)]
        policy: String,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Optimal finite-horizon value, optionally compared against a threshold.
    Solve {
        file: PathBuf,
        #[arg(long)]
        horizon: usize,
        #[arg(long, allow_hyphen_values = true)]
        threshold: Option<f64>,
    },
    /// Decide goal reachability with probability one.
    DecideReach {
        file: PathBuf,
        /// Search depth; required for goal QOMDPs, ignored for goal POMDPs.
        #[arg(long)]
        depth: Option<usize>,
    },
    /// Encode a QMOP instance as a goal QOMDP.
    ReduceQmop {
        file: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Search for a null outcome sequence up to a length bound.
    QmopSearch {
        file: PathBuf,
        #[arg(long)]
        max_len: usize,
    },
    /// Embed a POMDP as a QOMDP.
    Embed {
        file: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let text = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    let tol = ToleranceConfig::default();
    match execute(cli.command, &tol) {
        Ok(report) => {
            let _ = writeln!(out, "{}", report.to_json());
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::Validation(v) => {
                    let _ = writeln!(out, "{}", to_json_string(&json!({ "violations": to_value(&v) })));
                    EXIT_INVALID
                }
                Error::Parse(_) => EXIT_INVALID,
                _ => EXIT_INTERNAL,
            }
        }
    }
}

fn execute(cmd: Command, tol: &ToleranceConfig) -> Result<Report> {
    match cmd {
        Command::Validate { file } => {
            let m = load_model(&file, tol)?;
            Ok(Report::default().with("kind", m.kind()).with("valid", true))
        }
        Command::Simulate {
            file,
            policy,
            steps,
            trials,
            seed,
        } => {
            let m = load_model(&file, tol)?;
            commands::simulate(&m, &parse_policy(&policy)?, steps, trials, seed, tol)
        }
        Command::Solve {
            file,
            horizon,
            threshold,
        } => commands::solve(&load_model(&file, tol)?, horizon, threshold, tol),
        Command::DecideReach { file, depth } => commands::decide_reach(&load_model(&file, tol)?, depth, tol),
        Command::ReduceQmop { file, out } => write_model(&commands::reduce_qmop(&load_model(&file, tol)?, tol)?, &out),
        Command::QmopSearch { file, max_len } => commands::qmop_search(&load_model(&file, tol)?, max_len, tol),
        Command::Embed { file, out } => write_model(&commands::embed(&load_model(&file, tol)?, tol)?, &out),
    }
}

fn write_model(m: &Model, path: &Path) -> Result<Report> {
    save_model(m, path)?;
    Ok(Report::default()
        .with("kind", m.kind())
        .with("written", path.display().to_string()))
}

/// `"1,2,1"` as a 1-based action sequence, or a path to a JSON witness
/// (either a bare witness or a report carrying one).
fn parse_policy(arg: &str) -> Result<Policy> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = std::fs::read_to_string(path)?;
        let mut v: Value = serde_json::from_str(&text).map_err(|e| Error::Parse(format!("policy file: {e}")))?;
        if let Some(w) = v.get_mut("witness") {
            v = w.take();
        }
        let w: Witness = serde_json::from_value(v).map_err(|e| Error::Parse(format!("policy file: {e}")))?;
        return Ok(match w {
            Witness::ActionSequence(s) => Policy::Sequence(s),
            Witness::SupportPolicy(p) => Policy::Support(p),
        });
    }
    if arg.trim().is_empty() {
        return Ok(Policy::Sequence(ActionSequence(Vec::new())));
    }
    arg.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::Parse(format!("`{arg}` is neither a policy file nor a list of actions")))
        })
        .collect::<Result<Vec<_>>>()
        .map(|a| Policy::Sequence(ActionSequence(a)))
}
