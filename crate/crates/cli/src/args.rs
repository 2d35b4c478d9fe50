use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "asep", version, about = "Tagged-particle distributions of the asymmetric simple exclusion process")]
pub struct Cli {
    /// Flat `key = value` file supplying defaults for any option.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Worker threads. Results do not depend on it.
    #[arg(long, global = true, env = "ASEP_THREADS")]
    pub threads: Option<usize>,

    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate P(X_m(t) <= x) from the contour-integral formulas.
    Eval {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Run an oracle on its own.
    Simulate {
        #[arg(value_enum)]
        method: Method,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        sampling: SamplingArgs,
    },
    /// Check an identity or a numerical invariance.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        sampling: SamplingArgs,
    },
    /// Evaluate the formula and an oracle on the same grid.
    Compare {
        #[arg(value_enum)]
        oracle: Oracle,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        sampling: SamplingArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Mc,
    Master,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Lemma31,
    Lemma32,
    Residue,
    Radius,
    Symm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Oracle {
    Mc,
    Skellam,
    Master,
    Current,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    /// alternating, step, onesided[:k0] or finite[:sites].
    #[arg(long)]
    pub ic: Option<String>,
    /// Sites of a finite initial condition, e.g. `-1,1,3`.
    #[arg(long, allow_hyphen_values = true)]
    pub sites: Option<String>,
    /// Offset of the one-sided alternating condition.
    #[arg(long, allow_negative_numbers = true)]
    pub k0: Option<i64>,
    /// Starting site (alternating) or particle index from the left.
    #[arg(long, allow_negative_numbers = true)]
    pub m: Option<i64>,
    #[arg(long)]
    pub t: Option<f64>,
    /// Inclusive range `a..b` or a single site.
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<String>,
    /// Right jump rate; the left rate is 1 - p.
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Series shells for `eval`; largest order for the identity suites.
    #[arg(long)]
    pub kmax: Option<usize>,
    /// Contour safety factor.
    #[arg(long)]
    pub safety: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SamplingArgs {
    /// Monte Carlo trajectories, or random point sets for identity suites.
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}
