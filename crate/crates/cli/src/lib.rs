//! Command line surface: config ingestion, dispatch and report emission.

pub mod cache;
pub mod commands;
pub mod config;
pub mod report;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub const COMMANDS: [&str; 13] = [
    "mu1",
    "sigma",
    "hardy",
    "solve-one-pole",
    "sobolev",
    "interaction",
    "upper-bound",
    "two-pole",
    "check-rn",
    "check-dipoles",
    "check-bounded",
    "polarize-test",
    "monotonicity",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// First eigenvalue of -Laplace - h on the sphere.
    Mu1,
    /// Exponent sigma of the ground state at the pole.
    Sigma,
    /// Dipole Hardy constant Lambda_N.
    Hardy,
    /// Single-pole ground state and level S(h).
    SolveOnePole,
    /// Sobolev constant S.
    Sobolev,
    /// Cross integral series and its fit.
    Interaction,
    /// Concentration upper bound for the multi-pole level.
    UpperBound,
    /// Axisymmetric two-pole minimization.
    TwoPole,
    /// Whole-space existence hypotheses.
    CheckRn,
    /// Dipole existence hypotheses.
    CheckDipoles,
    /// Bounded-domain existence hypotheses.
    CheckBounded,
    /// Polarization identities on random fields.
    PolarizeTest,
    /// Monotonicity of the dipole level in the strength.
    Monotonicity,
}

impl Command {
    pub fn name(self) -> &'static str {
        COMMANDS[self as usize]
    }
}

#[derive(Clone, Debug, Parser)]
#[command(name = "dipole-gs", version, about = "Ground states for Hardy-type operators with anisotropic poles")]
pub struct Args {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// JSON report path (stdout when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    /// Overrides the primary tolerance of the command.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Dimension, when no config is given or to confirm it.
    #[arg(long = "N", global = true)]
    pub n: Option<usize>,
}

/// Runs one command and returns the process exit code.
pub fn run(args: &Args) -> i32 {
    let (report, code, artifacts) = report::produce(args);
    let text = report::to_json(&report);
    let out = args.out.clone().or_else(|| artifacts.json.clone());
    match out {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, &text) {
                eprintln!("cannot write {}: {e}", path.display());
                return 1;
            }
            eprintln!("{}: {}", args.command.name(), report.status);
        }
        None => println!("{text}"),
    }
    for (path, body) in [(&artifacts.csv, &artifacts.csv_body), (&artifacts.profile, &artifacts.profile_body)] {
        if let (Some(p), Some(b)) = (path, body) {
            if let Err(e) = std::fs::write(p, b) {
                eprintln!("cannot write {}: {e}", p.display());
                return 1;
            }
        }
    }
    code
}
