//! `golay-noma` command-line tool.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use golay_noma::sim::StoppingRule;
use golay_noma::Family;
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(
    name = "golay-noma",
    version,
    about = "Golay spreading sequences for grant-free NOMA"
)]
struct Cli {
    /// Worker threads (all cores when unset). Results do not depend on it.
    #[arg(long, global = true, env = "GOLAY_NOMA_WORKERS")]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Export a spreading matrix (binary or CSV).
    Gen(GenArgs),
    /// Coherence and worst-case PAPR of a spreading matrix.
    Coherence(CoherenceArgs),
    /// Worst-case PAPR of a spreading matrix.
    Papr(PaprArgs),
    /// Monte-Carlo symplectic rank distribution of random permutation pairs.
    PrTable(PrTableArgs),
    /// Random search for a low-coherence permutation set.
    Search(SearchArgs),
    /// Recompute the built-in reference tables.
    VerifyTables(VerifyArgs),
    /// Run a NOMA simulation campaign.
    Simulate(SimulateArgs),
}

const MATRIX_FLAGS: [&str; 4] = ["m", "seed", "perms", "roots"];

/// Matrix selection shared by `gen`, `coherence` and `papr`.
#[derive(Args, Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixArgs {
    #[arg(long, default_value = "golay")]
    pub family: Family,
    /// Sequence length exponent: M = 2^m (ZC uses the nearest prime).
    #[arg(long)]
    pub m: Option<u32>,
    /// Overloading factor: N = M·L.
    #[arg(long = "L", default_value_t = 1)]
    #[serde(rename = "L")]
    pub l: usize,
    /// Master seed for random families and ZC roots.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Golay permutation set file (one permutation per line).
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub perms: Option<PathBuf>,
    /// Golay permutations as resolved from `--perms`.
    #[arg(skip)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub permutations: Option<Vec<golay_noma::Permutation>>,
    /// ZC roots, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roots: Option<Vec<usize>>,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenArgs {
    /// Resolved arguments from a sidecar written by an earlier run.
    #[arg(long, value_name = "FILE", conflicts_with_all = MATRIX_FLAGS)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub matrix: MatrixArgs,
    #[arg(long, value_enum, default_value = "bin")]
    #[serde(default)]
    pub format: MatrixFormat,
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixFormat {
    #[default]
    Bin,
    Csv,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoherenceArgs {
    #[arg(long, value_name = "FILE", conflicts_with_all = MATRIX_FLAGS)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub matrix: MatrixArgs,
    /// For Golay sets, also compute the coherence over all column pairs and
    /// check it against the rank formula.
    #[arg(long)]
    #[serde(default)]
    pub exact: bool,
    #[arg(long, default_value_t = golay_noma::analysis::DEFAULT_OVERSAMPLE)]
    pub oversample: usize,
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PaprArgs {
    #[arg(long, value_name = "FILE", conflicts_with_all = MATRIX_FLAGS)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub matrix: MatrixArgs,
    #[arg(long, default_value_t = golay_noma::analysis::DEFAULT_OVERSAMPLE)]
    pub oversample: usize,
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrTableArgs {
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Exponents to tabulate, comma separated.
    #[arg(long, value_delimiter = ',', required_unless_present = "config")]
    #[serde(default)]
    pub m: Vec<usize>,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchArgs {
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    pub m: Option<usize>,
    #[arg(long = "L", required_unless_present = "config")]
    #[serde(rename = "L")]
    pub l: Option<usize>,
    /// Minimum pairwise rank to reach (largest possible when unset).
    #[arg(long = "target-r")]
    pub target_r: Option<usize>,
    /// Trial budget; derived from `--eps` when unset.
    #[arg(long)]
    pub trials: Option<u64>,
    /// Acceptable probability of exhausting the derived budget.
    #[arg(long, default_value_t = 0.01)]
    pub eps: f64,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output permutation file; printed to stdout when unset.
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Clone, Debug)]
pub struct VerifyArgs {
    /// 1: example sequence, 2: rank distribution, 3: permutation sets. All when unset.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub table: Option<u8>,
    /// Pairs per exponent for the rank distribution check.
    #[arg(long, default_value_t = 20_000)]
    pub trials: u64,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Clone, Debug)]
pub struct SimulateArgs {
    /// Campaign JSON (or a sidecar from an earlier run).
    #[arg(long, value_name = "FILE", conflicts_with_all = ["m", "family", "l", "p_a", "snr", "frames", "j", "stopping", "max_iter"])]
    pub config: Option<PathBuf>,
    /// Sequence length exponent: M = 2^m.
    #[arg(long, required_unless_present = "config")]
    pub m: Option<u32>,
    #[arg(long, value_delimiter = ',', default_value = "golay")]
    pub family: Vec<Family>,
    #[arg(long = "L", value_delimiter = ',', default_value = "4")]
    pub l: Vec<usize>,
    #[arg(long = "p-a", value_delimiter = ',', default_value = "0.1")]
    pub p_a: Vec<f64>,
    /// Per-device SNR points in dB.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        default_value = "15"
    )]
    pub snr: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    pub frames: usize,
    #[arg(long = "J", default_value_t = 7)]
    pub j: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value = "row-max")]
    pub stopping: StoppingArg,
    #[arg(long = "max-iter")]
    pub max_iter: Option<usize>,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
pub enum StoppingArg {
    RowMax,
    Frobenius,
}

impl From<StoppingArg> for StoppingRule {
    fn from(s: StoppingArg) -> Self {
        match s {
            StoppingArg::RowMax => StoppingRule::RowMax,
            StoppingArg::Frobenius => StoppingRule::Frobenius,
        }
    }
}

/// How a command failed; selects the exit status.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags or unreadable / malformed inputs.
    Usage(anyhow::Error),
    /// `verify-tables` found rows that do not match.
    Mismatch(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<golay_noma::Error> for Failure {
    fn from(e: golay_noma::Error) -> Self {
        use golay_noma::Error as E;
        match e {
            E::Config(_)
            | E::InvalidPermutation(_)
            | E::NotPrime(_)
            | E::DuplicateRoot(_)
            | E::DuplicatePermutation(..) => Failure::Usage(e.into()),
            other => Failure::Runtime(other.into()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if n == 0 {
            eprintln!("error: --workers must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::Coherence(a) => commands::coherence(a),
        Command::Papr(a) => commands::papr(a),
        Command::PrTable(a) => commands::pr_table(a),
        Command::Search(a) => commands::search(a),
        Command::VerifyTables(a) => commands::verify_tables(a),
        Command::Simulate(a) => commands::simulate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Mismatch(diff)) => {
            eprintln!("{diff}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
