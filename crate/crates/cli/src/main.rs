//! `ehz`: capacities, carriers and inequality checks for convex bodies given
//! as JSON recipes.

// `!(x > 0.0)` style tests reject NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "ehz", version, about = "EHZ capacities of convex bodies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Capacity, minimizer, carrier and certificates of one body.
    Capacity {
        body: PathBuf,
        /// Re-solve at twice the modes and report the drift.
        #[arg(long)]
        stability: bool,
        #[command(flatten)]
        common: Common,
    },
    /// The capacity carrier as a loop CSV (`t,z_i,dz_i`).
    Carrier {
        body: PathBuf,
        /// Rows in the CSV.
        #[arg(long, default_value_t = 256)]
        points: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Brunn-Minkowski check for `K +_p T`; `--p 1` is the Minkowski sum.
    Bm {
        k: PathBuf,
        t: PathBuf,
        /// Also certify homothetic carriers (equality case).
        #[arg(long)]
        homothety: bool,
        #[command(flatten)]
        common: Common,
    },
    /// `4 c(K) c(T) <= length² of the carrier of K in the J T° metric`.
    Isoperimetric {
        k: PathBuf,
        t: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// `c(K) <= π M*(K)²` for a centrally symmetric body.
    Meanwidth {
        body: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Concavity of `x ↦ c(K ∩ (x + T))^{1/2}`.
    Intersect {
        k: PathBuf,
        t: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        x: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        y: Vec<f64>,
        #[arg(long, default_value_t = 0.5)]
        lam: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Difference quotients of `ε ↦ c(K + εT)` and their bounds.
    Derivative {
        k: PathBuf,
        t: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = ehz_core::harness::DEFAULT_EPS_SCHEDULE)]
        eps: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// The acceptance suite, with a summary table on stdout.
    Suite {
        /// Run only these criteria (comma separated ids).
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug, Clone, Serialize)]
struct Common {
    /// Exponent of the dual functional; for `bm`, the sum exponent.
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, default_value_t = 16)]
    modes: usize,
    #[arg(long, default_value_t = 8)]
    starts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Gradient tolerance of the solver.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Monte Carlo samples for the mean width.
    #[arg(long, default_value_t = 200_000)]
    samples: usize,
    /// Artifact path; stdout when absent. A `.meta.json` sidecar holds the
    /// timestamp.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Artifact format; `carrier` defaults to csv, the rest to json.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Directory memoizing capacity results by body and configuration.
    #[arg(long)]
    cache: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

impl Common {
    fn format(&self) -> Format {
        self.format.unwrap_or(Format::Json)
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("EHZ_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn main() -> ExitCode {
    let mut cli = Cli::parse();
    if let Command::Carrier { common, .. } = &mut cli.command {
        common.format.get_or_insert(Format::Csv);
    }
    configure_threads();
    match commands::run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
