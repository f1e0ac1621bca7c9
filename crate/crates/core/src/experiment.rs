//! Repeated-sample experiments: the `(1 +- eps)` sandwich of `psi` over a
//! direction set, and `psi` against the plain empirical p-th moment.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{
    draw_sample, sphere_directions, true_p_moment_with, DistributionSpec, MomentEstimate, MomentOptions,
};
use crate::error::{param_err, Result};
use crate::seed::{derive_seed, purpose};
use crate::trim::{
    empirical_p_mean, nonincreasing_rearrangement, pairwise_sum, project_abs, theta_from_epsilon, TrimSpec,
};

/// Nearest-rank quantile of an unsorted slice: the `ceil(q n)`-th smallest.
pub fn nearest_rank(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[k - 1]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub q50: f64,
    pub q95: f64,
    pub max: f64,
}

impl Quantiles {
    pub fn of(values: &[f64]) -> Self {
        Self { q50: nearest_rank(values, 0.5), q95: nearest_rank(values, 0.95), max: nearest_rank(values, 1.0) }
    }
}

/// `N = ceil(c1 d log(2/eps) / eps^2)`.
pub fn sample_size_for(c1: f64, d: usize, epsilon: f64) -> usize {
    (c1 * d as f64 * (2.0 / epsilon).ln() / (epsilon * epsilon)).ceil() as usize
}

/// `E|<X, v>|^p` for each direction, computed once and shared by all trials.
pub fn direction_truths(
    spec: &DistributionSpec,
    dirs: &[Vec<f64>],
    p: f64,
    mc_draws: usize,
    seed: u64,
) -> Result<Vec<MomentEstimate>> {
    dirs.par_iter()
        .enumerate()
        .map(|(k, v)| {
            let opts = MomentOptions {
                mc_draws,
                seed: derive_seed(seed, &[purpose::MONTE_CARLO, k as u64]),
                force_monte_carlo: false,
            };
            true_p_moment_with(spec, v, p, &opts)
        })
        .collect()
}

/// `(psi, empirical p-mean)` of one projected sample, sharing one sort.
fn both_estimates(values_abs: &[f64], spec: &TrimSpec) -> Result<(f64, f64)> {
    let n = values_abs.len();
    let sorted = nonincreasing_rearrangement(values_abs)?;
    let pow: Vec<f64> = sorted.iter().map(|x| x.powf(spec.p)).collect();
    let psi = pairwise_sum(&pow[spec.dropped(n)..]) / n as f64;
    let mean = pairwise_sum(&pow) / n as f64;
    Ok((psi, mean))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichConfig {
    pub dist: DistributionSpec,
    pub p: f64,
    pub epsilon: f64,
    pub n: usize,
    pub theta: f64,
    pub directions: usize,
    pub trials: usize,
    pub seed: u64,
    /// Required fraction of trials with every direction inside `1 +- eps`.
    pub pass_rate: f64,
    pub mc_draws: usize,
}

impl SandwichConfig {
    /// `N` from `c1` and `theta = max(c0 eps^2, 1/N)`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_constants(
        dist: DistributionSpec,
        p: f64,
        epsilon: f64,
        c0: f64,
        c1: f64,
        directions: usize,
        trials: usize,
        seed: u64,
    ) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return param_err(format!("epsilon must lie in (0, 1), got {epsilon}"));
        }
        let n = sample_size_for(c1, dist.dim, epsilon);
        Ok(Self {
            dist,
            p,
            epsilon,
            n,
            theta: theta_from_epsilon(epsilon, c0, n),
            directions,
            trials,
            seed,
            pass_rate: 0.95,
            mc_draws: MomentOptions::default().mc_draws,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return param_err(format!("epsilon must lie in (0, 1), got {}", self.epsilon));
        }
        if self.directions == 0 || self.trials == 0 {
            return param_err("directions and trials must be >= 1");
        }
        if !(0.0..=1.0).contains(&self.pass_rate) {
            return param_err("pass_rate must lie in [0, 1]");
        }
        TrimSpec::new(self.p, self.theta)?.validate_for(self.n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichRow {
    pub trial: usize,
    pub direction: usize,
    pub psi: f64,
    pub truth: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub rows: Vec<SandwichRow>,
    /// Largest relative error in each trial.
    pub trial_max_error: Vec<f64>,
    pub trials_within: usize,
    pub pass_rate: f64,
    pub errors: Quantiles,
    pub truth_max_std_error: f64,
    pub pass: bool,
}

pub fn run_sandwich(cfg: &SandwichConfig) -> Result<SandwichReport> {
    cfg.validate()?;
    let spec = TrimSpec::new(cfg.p, cfg.theta)?;
    let d = cfg.dist.dim;
    let dirs = sphere_directions(d, cfg.directions, derive_seed(cfg.seed, &[purpose::DIRECTIONS]))?;
    let truths = direction_truths(&cfg.dist, &dirs, cfg.p, cfg.mc_draws, cfg.seed)?;
    let per_trial = (0..cfg.trials)
        .into_par_iter()
        .map(|r| -> Result<Vec<SandwichRow>> {
            let sample = draw_sample(&cfg.dist, cfg.n, derive_seed(cfg.seed, &[purpose::SAMPLE, r as u64]))?;
            dirs.iter()
                .zip(&truths)
                .enumerate()
                .map(|(k, (v, truth))| {
                    let (psi, _) = both_estimates(&project_abs(&sample, v)?, &spec)?;
                    Ok(SandwichRow {
                        trial: r,
                        direction: k,
                        psi,
                        truth: truth.value,
                        rel_error: (psi - truth.value).abs() / truth.value,
                    })
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    let trial_max_error: Vec<f64> =
        per_trial.iter().map(|rows| rows.iter().map(|r| r.rel_error).fold(0.0, f64::max)).collect();
    let trials_within = trial_max_error.iter().filter(|&&e| e <= cfg.epsilon).count();
    let pass_rate = trials_within as f64 / cfg.trials as f64;
    let rows: Vec<SandwichRow> = per_trial.into_iter().flatten().collect();
    let errs: Vec<f64> = rows.iter().map(|r| r.rel_error).collect();
    Ok(SandwichReport {
        errors: Quantiles::of(&errs),
        rows,
        trial_max_error,
        trials_within,
        pass_rate,
        truth_max_std_error: truths.iter().map(|t| t.std_error / t.value).fold(0.0, f64::max),
        pass: pass_rate >= cfg.pass_rate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareConfig {
    pub dist: DistributionSpec,
    pub n: usize,
    pub p: f64,
    pub theta: f64,
    pub directions: usize,
    pub trials: usize,
    pub seed: u64,
    pub mc_draws: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Winner {
    Psi,
    EmpiricalMean,
    Tie,
}

impl Winner {
    pub fn as_str(&self) -> &'static str {
        match self {
            Winner::Psi => "psi",
            Winner::EmpiricalMean => "empirical_mean",
            Winner::Tie => "tie",
        }
    }
}

/// Per-trial relative-error quantiles over the direction set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub trial: usize,
    pub psi: Quantiles,
    pub mean: Quantiles,
    /// Decided on the 95th percentile.
    pub winner: Winner,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
    pub psi_wins: usize,
    pub psi_win_fraction: f64,
    pub psi_overall: Quantiles,
    pub mean_overall: Quantiles,
}

/// Relative errors of `psi` and of the empirical mean against the true
/// moment, over `directions` uniform directions and `trials` samples.
pub fn gr_baseline_compare(cfg: &CompareConfig) -> Result<CompareReport> {
    if cfg.directions == 0 || cfg.trials == 0 {
        return param_err("directions and trials must be >= 1");
    }
    let spec = TrimSpec::new(cfg.p, cfg.theta)?;
    spec.validate_for(cfg.n)?;
    let dirs = sphere_directions(cfg.dist.dim, cfg.directions, derive_seed(cfg.seed, &[purpose::DIRECTIONS]))?;
    let truths = direction_truths(&cfg.dist, &dirs, cfg.p, cfg.mc_draws, cfg.seed)?;
    let per_trial = (0..cfg.trials)
        .into_par_iter()
        .map(|r| -> Result<(CompareRow, Vec<f64>, Vec<f64>)> {
            let sample = draw_sample(&cfg.dist, cfg.n, derive_seed(cfg.seed, &[purpose::SAMPLE, r as u64]))?;
            let mut e_psi = Vec::with_capacity(dirs.len());
            let mut e_mean = Vec::with_capacity(dirs.len());
            for (v, truth) in dirs.iter().zip(&truths) {
                let (psi, mean) = both_estimates(&project_abs(&sample, v)?, &spec)?;
                e_psi.push((psi - truth.value).abs() / truth.value);
                e_mean.push((mean - truth.value).abs() / truth.value);
            }
            let (qp, qm) = (Quantiles::of(&e_psi), Quantiles::of(&e_mean));
            let winner = if qp.q95 < qm.q95 {
                Winner::Psi
            } else if qp.q95 > qm.q95 {
                Winner::EmpiricalMean
            } else {
                Winner::Tie
            };
            Ok((CompareRow { trial: r, psi: qp, mean: qm, winner }, e_psi, e_mean))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(cfg.trials);
    let mut all_psi = Vec::new();
    let mut all_mean = Vec::new();
    for (row, a, b) in per_trial {
        rows.push(row);
        all_psi.extend(a);
        all_mean.extend(b);
    }
    let psi_wins = rows.iter().filter(|r| r.winner == Winner::Psi).count();
    Ok(CompareReport {
        psi_win_fraction: psi_wins as f64 / cfg.trials as f64,
        psi_wins,
        psi_overall: Quantiles::of(&all_psi),
        mean_overall: Quantiles::of(&all_mean),
        rows,
    })
}

/// `psi` and the empirical mean for one projected sample; exposed for
/// checking that an untrimmed `psi` coincides with the mean.
pub fn estimates(values_abs: &[f64], spec: &TrimSpec) -> Result<(f64, f64)> {
    spec.validate_for(values_abs.len())?;
    let (psi, mean) = both_estimates(values_abs, spec)?;
    debug_assert_eq!(mean, empirical_p_mean(values_abs, spec.p)?);
    Ok((psi, mean))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank_examples() {
        let v = [5.0, 1.0, 4.0, 2.0, 3.0];
        assert_eq!(nearest_rank(&v, 0.5), 3.0);
        assert_eq!(nearest_rank(&v, 0.95), 5.0);
        assert_eq!(nearest_rank(&v, 0.2), 1.0);
        assert_eq!(nearest_rank(&v, 1.0), 5.0);
    }

    #[test]
    fn sample_size_formula() {
        assert_eq!(sample_size_for(8.0, 20, 0.25), (8.0 * 20.0 * 8f64.ln() / 0.0625).ceil() as usize);
    }

    #[test]
    fn gaussian_large_n_one_dimension() {
        let dist = DistributionSpec::parse("gaussian", None, 1).unwrap();
        let cfg = SandwichConfig {
            dist,
            p: 2.0,
            epsilon: 0.05,
            n: 1_000_000,
            theta: 1e-4,
            directions: 1,
            trials: 1,
            seed: 3,
            pass_rate: 0.95,
            mc_draws: 1000,
        };
        let rep = run_sandwich(&cfg).unwrap();
        assert!(rep.pass, "{:?}", rep.trial_max_error);
    }

    #[test]
    fn untrimmed_compare_columns_coincide() {
        let dist = DistributionSpec::parse("product_laplace", None, 4).unwrap();
        let cfg = CompareConfig {
            dist,
            n: 400,
            p: 2.0,
            theta: 1.0 / 400.0,
            directions: 7,
            trials: 3,
            seed: 1,
            mc_draws: 100,
        };
        let rep = gr_baseline_compare(&cfg).unwrap();
        for r in &rep.rows {
            assert_eq!(r.psi, r.mean);
            assert_eq!(r.winner, Winner::Tie);
        }
    }

    #[test]
    fn epsilon_domain() {
        let dist = DistributionSpec::parse("gaussian", None, 2).unwrap();
        assert!(SandwichConfig::from_constants(dist, 2.0, 1.5, 0.25, 8.0, 10, 2, 0).is_err());
    }
}
