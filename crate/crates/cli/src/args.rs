use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(name = "lpball", version, about = "Trimmed L_p moment estimation experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Relative error of psi against the true moment over a direction set.
    Sandwich(Sandwich),
    /// Frequency of samples violating the ratio properties.
    RatioCheck(RatioCheck),
    /// Three-valued validation of the tail-integration lemmas.
    LemmaCheck(LemmaCheck),
    /// psi against the plain empirical p-th moment.
    Compare(Compare),
    /// Direct quadrature queries against a marginal law.
    Oracle(Oracle),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Keys shared by every subcommand's config file.
#[derive(Deserialize, Debug, Default)]
#[serde(default, deny_unknown_fields)]
pub struct CommonFile {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub threads: Option<usize>,
    pub format: Option<Format>,
}

macro_rules! overlay {
    ($name:ident { $($field:ident),* $(,)? }) => {
        impl $name {
            /// Fills every unset field from `file`.
            pub fn overlay(mut self, file: $name) -> Self {
                $( if self.$field.is_none() { self.$field = file.$field; } )*
                self
            }
        }
    };
}

#[derive(Args, Deserialize, Debug, Default, Clone)]
#[serde(default, deny_unknown_fields)]
pub struct Sandwich {
    #[command(flatten)]
    #[serde(skip)]
    pub common: CommonFlags,
    /// gaussian | cube_uniform | product_laplace | product_student_t
    #[arg(long)]
    pub dist: Option<String>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Sample size; default ceil(c1 d log(2/eps) / eps^2).
    #[arg(long)]
    pub n: Option<usize>,
    /// theta = max(c0 eps^2, 1/N).
    #[arg(long)]
    pub c0: Option<f64>,
    #[arg(long)]
    pub c1: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub directions: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub pass_rate: Option<f64>,
    #[arg(long)]
    pub mc_draws: Option<usize>,
}
overlay!(Sandwich { dist, nu, d, p, epsilon, n, c0, c1, theta, directions, trials, pass_rate, mc_draws });

#[derive(Args, Deserialize, Debug, Default, Clone)]
#[serde(default, deny_unknown_fields)]
pub struct RatioCheck {
    #[command(flatten)]
    #[serde(skip)]
    pub common: CommonFlags,
    #[arg(long)]
    pub dist: Option<String>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub big_c: Option<f64>,
    #[arg(long)]
    pub directions: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// c0 in the floor delta >= c0 (d/N) log(eN/d).
    #[arg(long)]
    pub floor_c0: Option<f64>,
    #[arg(long)]
    pub reference_size: Option<usize>,
    #[arg(long)]
    pub max_failure_rate: Option<f64>,
}
overlay!(RatioCheck {
    dist,
    nu,
    d,
    n,
    delta,
    lambda,
    big_c,
    directions,
    trials,
    floor_c0,
    reference_size,
    max_failure_rate
});

#[derive(Args, Deserialize, Debug, Default, Clone)]
#[serde(default, deny_unknown_fields)]
pub struct LemmaCheck {
    #[command(flatten)]
    #[serde(skip)]
    pub common: CommonFlags,
    /// Comma-separated law names.
    #[arg(long)]
    pub laws: Option<String>,
    /// Degrees of freedom for product_student_t.
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub big_c: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    /// Comma-separated exponents.
    #[arg(long)]
    pub ps: Option<String>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// theorem | proof
    #[arg(long)]
    pub gate: Option<String>,
    /// One-dimensional sample, one value per line, validated against the
    /// first law instead of drawing samples.
    #[arg(long)]
    pub sample_file: Option<PathBuf>,
}
overlay!(LemmaCheck { laws, nu, n, delta, lambda, big_c, theta, ps, trials, gate, sample_file });

#[derive(Args, Deserialize, Debug, Default, Clone)]
#[serde(default, deny_unknown_fields)]
pub struct Compare {
    #[command(flatten)]
    #[serde(skip)]
    pub common: CommonFlags,
    #[arg(long)]
    pub dist: Option<String>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub d: Option<usize>,
    /// Default 50 d.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<f64>,
    /// Default 2/N (drop the single largest value).
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub directions: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub mc_draws: Option<usize>,
    /// Fraction of trials psi must win; default 0.9 for product_student_t,
    /// no requirement otherwise. A negative value disables it.
    #[arg(long, allow_negative_numbers = true)]
    pub require_win: Option<f64>,
}
overlay!(Compare { dist, nu, d, n, p, theta, directions, trials, mc_draws, require_win });

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quantity {
    Quantile,
    TailMoment,
    ErrorFunctional,
    UpperMoment,
    Moment,
    TailBounds,
}

#[derive(Args, Deserialize, Debug, Default, Clone)]
#[serde(default, deny_unknown_fields)]
pub struct Oracle {
    #[command(flatten)]
    #[serde(skip)]
    pub common: CommonFlags,
    #[arg(long, value_enum)]
    pub quantity: Option<Quantity>,
    #[arg(long)]
    pub dist: Option<String>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub d: Option<usize>,
    /// Comma-separated direction; default e_1.
    #[arg(long, allow_hyphen_values = true)]
    pub direction: Option<String>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    /// Upper limit T (or threshold u); default +inf.
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub reference_size: Option<usize>,
}
overlay!(Oracle { quantity, dist, nu, d, direction, p, q, eta, t, delta, kappa, reference_size });

#[derive(Args, Debug, Clone, Default)]
pub struct CommonFlags {
    /// JSON file of option values; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; falls back to the config file, then $LPBALL_OUT_DIR, then ./lpball-out.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Worker threads (results do not depend on it).
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Add wall-clock runtime to the JSON summary.
    #[arg(long)]
    pub timing: bool,
}
