mod commands;
mod eval;
mod manifest;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

pub const DEFAULT_SEED: u64 = 20_241_214;

/// Exact checks, bounds, constructions and search for s-almost
/// t-intersecting families.
///
/// Exit codes: 0 success, 1 property failure, 2 input error, 3 resource
/// limit. Flags override `KNS_*` environment variables, which override
/// defaults.
#[derive(Debug, Parser)]
#[command(name = "kns", version)]
pub struct Cli {
    /// Seed for every randomized choice.
    #[arg(long, global = true, env = "KNS_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a family file: predicates, defect degrees, τ_t and bound checks.
    /// Exit 0 iff the family is s-almost t-intersecting.
    Check(CheckArgs),
    /// Build a named construction and verify its claimed properties.
    Construct(ConstructArgs),
    /// Evaluate f, g or h exactly. Any of n, k, t, s, x may be a range
    /// `a:b`, which switches to CSV output with header
    /// `function,n,k,t,s,x,value`, one row per grid point.
    Eval(eval::EvalArgs),
    /// Exact maximum-family search.
    Search(SearchArgs),
    /// Canonical form of a family file.
    Canon(CanonArgs),
    /// Verification suites over parameter grids.
    Verify(verify::VerifyArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct CheckArgs {
    /// Family JSON: `{"n":4,"k":2,"members":[[1,2],[1,3]]}`.
    pub file: PathBuf,
    #[arg(long, env = "KNS_T")]
    pub t: u32,
    #[arg(long, env = "KNS_S")]
    pub s: usize,
    /// Also write the report here.
    #[arg(long)]
    pub json_out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ConstructArgs {
    /// STAR, HM_TYPE, EX51, EX52, EX53 or THM3_I ... THM3_VII.
    pub id: String,
    #[arg(long, env = "KNS_N")]
    pub n: u64,
    /// Uniformity; only STAR and HM_TYPE take it.
    #[arg(long, env = "KNS_K")]
    pub k: Option<u64>,
    #[arg(long, env = "KNS_T")]
    pub t: u64,
    #[arg(long, env = "KNS_S", default_value_t = 1)]
    pub s: u64,
    /// Sample the HM-type blocks from `--seed` instead of taking the first sets.
    #[arg(long)]
    pub seeded: bool,
    #[arg(long)]
    pub json_out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SearchArgs {
    #[arg(long, env = "KNS_N")]
    pub n: u64,
    #[arg(long, env = "KNS_K")]
    pub k: u64,
    #[arg(long, env = "KNS_T")]
    pub t: u64,
    #[arg(long, env = "KNS_S")]
    pub s: u64,
    /// Only count families with a pair meeting in fewer than t elements.
    #[arg(long)]
    pub not_t_intersecting: bool,
    /// Collect every maximum family instead of one.
    #[arg(long)]
    pub all_extremal: bool,
    #[arg(long, env = "KNS_NODE_LIMIT")]
    pub node_limit: Option<u64>,
    /// Seconds.
    #[arg(long, env = "KNS_TIME_LIMIT")]
    pub time_limit: Option<f64>,
    #[arg(long, env = "KNS_VERTEX_CAP", default_value_t = kns_core::search::DEFAULT_VERTEX_CAP)]
    pub vertex_cap: u64,
    #[arg(long)]
    pub sequential: bool,
    #[arg(long)]
    pub json_out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CanonArgs {
    pub file: PathBuf,
    #[arg(long)]
    pub json_out: Option<PathBuf>,
}

/// Why a command did not succeed.
#[derive(Debug)]
pub enum Failure {
    Property(String),
    Input(String),
    Limit(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Property(_) => 1,
            Failure::Input(_) => 2,
            Failure::Limit(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Property(m) | Failure::Input(m) | Failure::Limit(m) => m,
        }
    }
}

impl From<kns_core::Error> for Failure {
    fn from(e: kns_core::Error) -> Self {
        match e {
            kns_core::Error::VertexCap { .. } | kns_core::Error::SupportTooLarge { .. } => {
                Failure::Limit(e.to_string())
            }
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

pub type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Check(a) => commands::check(a),
        Command::Construct(a) => commands::construct(a, cli.seed),
        Command::Eval(a) => eval::run(a),
        Command::Search(a) => commands::search(a),
        Command::Canon(a) => commands::canon(a),
        Command::Verify(a) => verify::run(a, cli.seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("kns: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
