//! Report envelope. Keys are emitted in sorted order and no timing or host data is
//! recorded, so identical inputs give byte-identical output.

use std::path::PathBuf;

use dipole_gs::Error;
use serde::Serialize;
use serde_json::Value;

use crate::commands;
use crate::config::{self, RunConfig, Violation};
use crate::{Args, Command};

#[derive(Clone, Debug, Serialize)]
pub struct ErrorEntry {
    pub kind: String,
    pub message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<Violation>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub status: String,
    pub exit_code: i32,
    pub n: Option<usize>,
    pub result: Value,
    pub error: Option<ErrorEntry>,
}

#[derive(Clone, Debug, Default)]
pub struct Artifacts {
    pub json: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub csv_body: Option<String>,
    pub profile: Option<PathBuf>,
    pub profile_body: Option<String>,
}

pub fn to_json(r: &Report) -> String {
    // through Value so every map is key-sorted
    let v = serde_json::to_value(r).unwrap_or(Value::Null);
    let mut s = serde_json::to_string_pretty(&v).unwrap_or_default();
    s.push('\n');
    s
}

fn error_kind(e: &Error) -> String {
    let dbg = format!("{e:?}");
    dbg.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("Error").to_string()
}

fn failure(cmd: Command, n: Option<usize>, e: &Error, violations: Vec<Violation>) -> Report {
    Report {
        command: cmd.name().into(),
        status: "ERROR".into(),
        exit_code: 1,
        n,
        result: Value::Null,
        error: Some(ErrorEntry { kind: error_kind(e), message: e.to_string(), violations }),
    }
}

/// Loads the configuration named by the arguments, or builds a minimal one from --N.
pub fn load(args: &Args) -> Result<RunConfig, Vec<Violation>> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                vec![Violation { path: String::new(), line: 0, col: 0, message: format!("cannot read {}: {e}", path.display()) }]
            })?;
            let cfg = config::validate(&text)?;
            if let Some(n) = args.n {
                if n != cfg.n {
                    return Err(vec![Violation {
                        path: "n".into(),
                        line: 0,
                        col: 0,
                        message: format!("--N {n} disagrees with n = {} in the config", cfg.n),
                    }]);
                }
            }
            cfg
        }
        None => {
            let n = args.n.ok_or_else(|| {
                vec![Violation { path: "n".into(), line: 0, col: 0, message: "give --config or --N".into() }]
            })?;
            config::validate(&format!("n = {n}\n"))?
        }
    };
    if let Some(cmd) = &cfg.command {
        if cmd != args.command.name() {
            return Err(vec![Violation {
                path: "command".into(),
                line: 0,
                col: 0,
                message: format!("config is for `{cmd}`, not `{}`", args.command.name()),
            }]);
        }
    }
    if let Some(t) = args.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(vec![Violation { path: "--tol".into(), line: 0, col: 0, message: "tolerance must be positive".into() }]);
        }
        match args.command {
            Command::Hardy | Command::Monotonicity => cfg.tolerances.hardy = t,
            Command::TwoPole => cfg.two_pole.tol = t,
            Command::CheckRn | Command::CheckDipoles | Command::CheckBounded => cfg.tolerances.algebraic = t,
            _ => cfg.discretization.tol = t,
        }
    }
    Ok(cfg)
}

pub fn produce(args: &Args) -> (Report, i32, Artifacts) {
    let cmd = args.command;
    let cfg = match load(args) {
        Ok(c) => c,
        Err(vs) => {
            let first = vs[0].clone().into_error();
            let r = failure(cmd, args.n, &first, vs);
            return (r, 1, Artifacts::default());
        }
    };
    let mut art = Artifacts { json: cfg.output.json.clone(), csv: cfg.output.csv.clone(), profile: cfg.output.profile.clone(), ..Default::default() };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(args.threads.max(1)).build() {
        Ok(p) => p,
        Err(e) => {
            let r = failure(cmd, Some(cfg.n), &Error::Precondition(format!("thread pool: {e}")), vec![]);
            return (r, 1, art);
        }
    };
    match pool.install(|| commands::execute(cmd, &cfg)) {
        Ok(out) => {
            let code = out.outcome.exit_code();
            art.csv_body = out.csv;
            art.profile_body = out.profile;
            let r = Report {
                command: cmd.name().into(),
                status: out.outcome.label().into(),
                exit_code: code,
                n: Some(cfg.n),
                result: out.result,
                error: None,
            };
            (r, code, art)
        }
        Err(e) => {
            let vs = match &e {
                Error::SchemaViolation { path, line, col, message } => {
                    vec![Violation { path: path.clone(), line: *line, col: *col, message: message.clone() }]
                }
                _ => vec![],
            };
            (failure(cmd, Some(cfg.n), &e, vs), 1, art)
        }
    }
}
