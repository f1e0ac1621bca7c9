//! Exact per-sample checks of the three ratio properties for one direction:
//!
//! 1. `|P_N(f>t)/P(f>t) - 1| <= lambda` whenever `P(f>t) >= delta`;
//! 2. `|P_N(f>t)/P(f>t) - 1| <= 2^(-j/2)` whenever `2^(-j) P(f>t) >= delta`;
//! 3. `P_N(f in I) <= 3/2 P(f in I) + C delta` for every interval `I`.
//!
//! `P_N` is a step function, so every supremum is attained (or approached)
//! at a sample point, at its left limit, or at an endpoint of the admissible
//! range, and the checks evaluate exactly those points.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{
    draw_sample, signed_coordinate_directions, sphere_directions, DistributionSpec, MarginalCdf,
};
use crate::error::{param_err, Error, Result};
use crate::oracle::quantile;
use crate::params::RatioParams;
use crate::seed::{derive_seed, purpose};
use crate::trim::project_abs;

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta <= 0.5) {
        return param_err(format!("delta must lie in (0, 1/2], got {delta}"));
    }
    Ok(())
}

/// Distinct sample values with their counts and the law evaluated there.
#[derive(Debug, Clone)]
pub struct Breakpoints {
    n: usize,
    xs: Vec<f64>,
    /// `#{i : X_i <= xs[k]}`
    cum: Vec<usize>,
    sf: Vec<f64>,
    sf_left: Vec<f64>,
}

impl Breakpoints {
    pub fn new(values_abs: &[f64], cdf: &MarginalCdf) -> Result<Self> {
        if values_abs.is_empty() {
            return param_err("need at least one sample value");
        }
        if let Some(index) = values_abs.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        if values_abs.iter().any(|&x| x < 0.0) {
            return param_err("values must be nonnegative");
        }
        let mut sorted = values_abs.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut xs = Vec::new();
        let mut cum = Vec::new();
        for (i, &x) in sorted.iter().enumerate() {
            if xs.last() == Some(&x) {
                *cum.last_mut().unwrap() = i + 1;
            } else {
                xs.push(x);
                cum.push(i + 1);
            }
        }
        let sf = xs.iter().map(|&x| cdf.sf(x)).collect();
        let sf_left = xs.iter().map(|&x| cdf.sf_left(x)).collect();
        Ok(Self { n: sorted.len(), xs, cum, sf, sf_left })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn distinct(&self) -> &[f64] {
        &self.xs
    }

    fn below(&self, k: usize) -> usize {
        if k == 0 {
            0
        } else {
            self.cum[k - 1]
        }
    }

    /// `#{i : X_i > t}`.
    pub fn count_greater(&self, t: f64) -> usize {
        let k = self.xs.partition_point(|&x| x <= t);
        self.n - self.below(k)
    }

    /// `#{i : X_i >= t}`.
    pub fn count_at_least(&self, t: f64) -> usize {
        let k = self.xs.partition_point(|&x| x < t);
        self.n - self.below(k)
    }
}

/// One evaluation of the ratio `P_N / P` at `t` (or at `t-` when `left`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioPoint {
    pub t: f64,
    pub left: bool,
    pub empirical: f64,
    pub population: f64,
    pub deviation: f64,
}

impl RatioPoint {
    fn new(t: f64, left: bool, count: usize, n: usize, population: f64) -> Self {
        let empirical = count as f64 / n as f64;
        Self { t, left, empirical, population, deviation: (empirical / population - 1.0).abs() }
    }
}

/// All candidate points at which `P(f>t) >= delta`, paired with the
/// endpoints `Q_{1 - 2^j delta}` of the dyadic levels.
fn candidate_points(bp: &Breakpoints, cdf: &MarginalCdf, delta: f64) -> Result<Vec<RatioPoint>> {
    let n = bp.n;
    let mut out = Vec::with_capacity(2 * bp.xs.len() + 64);
    if bp.xs[0] > 0.0 {
        let s0 = cdf.sf(0.0);
        if s0 >= delta {
            out.push(RatioPoint::new(0.0, false, n, n, s0));
        }
    }
    for k in 0..bp.xs.len() {
        let x = bp.xs[k];
        if bp.sf[k] >= delta {
            out.push(RatioPoint::new(x, false, n - bp.cum[k], n, bp.sf[k]));
        }
        if x > 0.0 && bp.sf_left[k] >= delta {
            out.push(RatioPoint::new(x, true, n - bp.below(k), n, bp.sf_left[k]));
        }
    }
    let mut eta = delta;
    while eta < 1.0 {
        let t = quantile(cdf, eta)?;
        if cdf.is_analytic() {
            if t.is_finite() {
                out.push(RatioPoint::new(t, false, bp.count_greater(t), n, eta));
            }
        } else {
            let s = cdf.sf(t);
            if s >= eta {
                out.push(RatioPoint::new(t, false, bp.count_greater(t), n, s));
            }
            let s = cdf.sf_left(t);
            if t > 0.0 && s >= eta {
                out.push(RatioPoint::new(t, true, bp.count_at_least(t), n, s));
            }
        }
        eta *= 2.0;
    }
    Ok(out)
}

/// Largest `j >= 0` with `2^j delta <= s`, or `None` when `s < delta`.
fn level_of(s: f64, delta: f64) -> Option<usize> {
    if s < delta {
        return None;
    }
    let mut j = 0;
    let mut eta = delta;
    while 2.0 * eta <= s {
        eta *= 2.0;
        j += 1;
    }
    Some(j)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Property1 {
    pub worst_deviation: f64,
    pub witness: Option<RatioPoint>,
    pub lambda: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub j: usize,
    /// `2^j delta`
    pub mass: f64,
    pub worst_deviation: f64,
    /// `2^(-j/2)`
    pub bound: f64,
    pub margin: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Property2 {
    pub levels: Vec<LevelReport>,
    pub pass: bool,
}

impl Property2 {
    /// Smallest `bound - worst` over levels (`+inf` with no levels).
    pub fn worst_margin(&self) -> f64 {
        self.levels.iter().map(|l| l.margin).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Property3 {
    /// `sup_I P_N(I) - 3/2 P(I)`, floored at 0 (the empty interval).
    pub sup: f64,
    /// Closed interval `[lo, hi]` attaining the sup, if it is positive.
    pub interval: Option<(f64, f64)>,
    pub bound: f64,
    pub pass: bool,
}

fn property1_from(points: &[RatioPoint], lambda: f64) -> Property1 {
    let mut worst = 0.0;
    let mut witness = None;
    for pt in points {
        if pt.deviation > worst || witness.is_none() {
            worst = pt.deviation;
            witness = Some(*pt);
        }
    }
    Property1 { worst_deviation: worst, witness, lambda, pass: worst <= lambda }
}

fn property2_from(points: &[RatioPoint], delta: f64) -> Property2 {
    let mut worst: Vec<f64> = Vec::new();
    for pt in points {
        if let Some(j) = level_of(pt.population, delta) {
            if worst.len() <= j {
                worst.resize(j + 1, 0.0);
            }
            worst[j] = worst[j].max(pt.deviation);
        }
    }
    for j in (0..worst.len().saturating_sub(1)).rev() {
        worst[j] = worst[j].max(worst[j + 1]);
    }
    let levels: Vec<LevelReport> = worst
        .iter()
        .enumerate()
        .map(|(j, &w)| {
            let bound = 2f64.powf(-(j as f64) / 2.0);
            LevelReport {
                j,
                mass: delta * 2f64.powi(j as i32),
                worst_deviation: w,
                bound,
                margin: bound - w,
                pass: w <= bound,
            }
        })
        .collect();
    let pass = levels.iter().all(|l| l.pass);
    Property2 { levels, pass }
}

fn property3_from(bp: &Breakpoints, big_c: f64, delta: f64) -> Property3 {
    // value of [x_a, x_b] = (C_b / N + 1.5 S(x_b)) + (-C_{a-1} / N - 1.5 S(x_a-))
    let n = bp.n as f64;
    let mut best = 0.0;
    let mut interval = None;
    let mut best_left = f64::NEG_INFINITY;
    let mut best_left_at = 0;
    for b in 0..bp.xs.len() {
        let left = -(bp.below(b) as f64) / n - 1.5 * bp.sf_left[b];
        if left > best_left {
            best_left = left;
            best_left_at = b;
        }
        let value = (bp.cum[b] as f64 / n + 1.5 * bp.sf[b]) + best_left;
        if value > best {
            best = value;
            interval = Some((bp.xs[best_left_at], bp.xs[b]));
        }
    }
    let bound = big_c * delta;
    Property3 { sup: best, interval, bound, pass: best <= bound }
}

/// Worst `|P_N/P - 1|` over `{t : P(f>t) >= delta}`.
pub fn property1_check(values_abs: &[f64], cdf: &MarginalCdf, delta: f64, lambda: f64) -> Result<Property1> {
    check_delta(delta)?;
    let bp = Breakpoints::new(values_abs, cdf)?;
    Ok(property1_from(&candidate_points(&bp, cdf, delta)?, lambda))
}

/// Worst deviation for every dyadic level `j >= 0`.
pub fn property2_check(values_abs: &[f64], cdf: &MarginalCdf, delta: f64) -> Result<Property2> {
    check_delta(delta)?;
    let bp = Breakpoints::new(values_abs, cdf)?;
    Ok(property2_from(&candidate_points(&bp, cdf, delta)?, delta))
}

/// `sup_I P_N(I) - 3/2 P(I)` by a single prefix scan.
pub fn property3_sup(values_abs: &[f64], cdf: &MarginalCdf, big_c: f64, delta: f64) -> Result<Property3> {
    check_delta(delta)?;
    let bp = Breakpoints::new(values_abs, cdf)?;
    Ok(property3_from(&bp, big_c, delta))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub delta: f64,
    pub prop1: Property1,
    pub prop2: Property2,
    pub prop3: Property3,
}

impl RatioReport {
    pub fn all_pass(&self) -> bool {
        self.prop1.pass && self.prop2.pass && self.prop3.pass
    }
}

/// All three properties from one sort of the sample.
pub fn ratio_report(values_abs: &[f64], cdf: &MarginalCdf, params: &RatioParams) -> Result<RatioReport> {
    check_delta(params.delta)?;
    let bp = Breakpoints::new(values_abs, cdf)?;
    let points = candidate_points(&bp, cdf, params.delta)?;
    Ok(RatioReport {
        delta: params.delta,
        prop1: property1_from(&points, params.lambda),
        prop2: property2_from(&points, params.delta),
        prop3: property3_from(&bp, params.big_c, params.delta),
    })
}

/// `(1/N) max_I |sum_{i : X_i in I} eps_i|` over intervals `I`.
pub fn rademacher_interval_complexity(values_abs: &[f64], signs: &[i8]) -> Result<f64> {
    if values_abs.len() != signs.len() {
        return Err(Error::DimensionMismatch { expected: values_abs.len(), got: signs.len() });
    }
    if values_abs.is_empty() {
        return param_err("need at least one value");
    }
    if let Some(index) = values_abs.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    if signs.iter().any(|&s| s != 1 && s != -1) {
        return param_err("signs must be +1 or -1");
    }
    let mut order: Vec<usize> = (0..values_abs.len()).collect();
    order.sort_by(|&a, &b| values_abs[a].total_cmp(&values_abs[b]));
    // prefix sums at group boundaries: an interval holds all copies of a value
    let (mut hi, mut lo, mut acc) = (0i64, 0i64, 0i64);
    for (k, &i) in order.iter().enumerate() {
        acc += signs[i] as i64;
        let last = k + 1 == order.len() || values_abs[order[k + 1]] != values_abs[i];
        if last {
            hi = hi.max(acc);
            lo = lo.min(acc);
        }
    }
    Ok((hi - lo) as f64 / values_abs.len() as f64)
}

/// Settings for the repeated-sample ratio experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VcConfig {
    pub n: usize,
    pub delta: f64,
    pub lambda: f64,
    pub big_c: f64,
    pub directions: usize,
    pub trials: usize,
    pub seed: u64,
    /// `c0` in the floor `delta >= c0 (d/N) log(eN/d)`.
    pub floor_c0: f64,
    pub reference_size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VcRow {
    pub trial: usize,
    pub direction: usize,
    pub prop1_dev: f64,
    pub prop2_margin: f64,
    pub prop3_sup: f64,
    pub prop1_pass: bool,
    pub prop2_pass: bool,
    pub prop3_pass: bool,
}

impl VcRow {
    pub fn pass(&self) -> bool {
        self.prop1_pass && self.prop2_pass && self.prop3_pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VcSummary {
    pub rows: Vec<VcRow>,
    pub failed_trials: usize,
    pub failure_rate: f64,
    /// Trials in which property 1, 2, 3 failed for some direction.
    pub property_failures: [usize; 3],
    pub delta_floor: f64,
    pub warning: Option<String>,
}

/// `c0 (d/N) log(eN/d)`.
pub fn delta_floor(c0: f64, d: usize, n: usize) -> f64 {
    let (d, n) = (d as f64, n as f64);
    c0 * (d / n) * (std::f64::consts::E * n / d).ln()
}

/// Fraction of `trials` independent samples in which the three properties
/// fail for at least one probe direction. Probes are `directions` uniform
/// directions (shared by all trials) and the `2d` signed coordinate vectors.
pub fn vc_event_frequency(spec: &DistributionSpec, cfg: &VcConfig) -> Result<VcSummary> {
    let params = RatioParams::new(cfg.delta, cfg.lambda, cfg.big_c)?;
    if cfg.trials == 0 || cfg.n == 0 {
        return param_err("trials and n must be >= 1");
    }
    let d = spec.dim;
    let floor = delta_floor(cfg.floor_c0, d, cfg.n);
    let warning = (cfg.delta < floor)
        .then(|| format!("delta = {} is below the floor {floor:.6} = c0 (d/N) log(eN/d)", cfg.delta));
    let mut dirs = if cfg.directions > 0 {
        sphere_directions(d, cfg.directions, derive_seed(cfg.seed, &[purpose::DIRECTIONS]))?
    } else {
        Vec::new()
    };
    dirs.extend(signed_coordinate_directions(d));
    let samples = (0..cfg.trials)
        .into_par_iter()
        .map(|r| draw_sample(spec, cfg.n, derive_seed(cfg.seed, &[purpose::SAMPLE, r as u64])))
        .collect::<Result<Vec<_>>>()?;
    let per_dir = dirs
        .par_iter()
        .enumerate()
        .map(|(k, v)| -> Result<Vec<VcRow>> {
            let cdf = MarginalCdf::for_direction(
                spec,
                v,
                cfg.reference_size,
                derive_seed(cfg.seed, &[purpose::REFERENCE, k as u64]),
            )?;
            samples
                .iter()
                .enumerate()
                .map(|(r, s)| {
                    let f = project_abs(s, v)?;
                    let rep = ratio_report(&f, &cdf, &params)?;
                    Ok(VcRow {
                        trial: r,
                        direction: k,
                        prop1_dev: rep.prop1.worst_deviation,
                        prop2_margin: rep.prop2.worst_margin(),
                        prop3_sup: rep.prop3.sup,
                        prop1_pass: rep.prop1.pass,
                        prop2_pass: rep.prop2.pass,
                        prop3_pass: rep.prop3.pass,
                    })
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(cfg.trials * dirs.len());
    for r in 0..cfg.trials {
        for col in &per_dir {
            rows.push(col[r]);
        }
    }
    let mut failed = vec![false; cfg.trials];
    let mut by_prop = vec![[false; 3]; cfg.trials];
    for row in &rows {
        failed[row.trial] |= !row.pass();
        by_prop[row.trial][0] |= !row.prop1_pass;
        by_prop[row.trial][1] |= !row.prop2_pass;
        by_prop[row.trial][2] |= !row.prop3_pass;
    }
    let failed_trials = failed.iter().filter(|&&f| f).count();
    let mut property_failures = [0; 3];
    for flags in &by_prop {
        for (c, &f) in property_failures.iter_mut().zip(flags) {
            *c += f as usize;
        }
    }
    Ok(VcSummary {
        rows,
        failed_trials,
        failure_rate: failed_trials as f64 / cfg.trials as f64,
        property_failures,
        delta_floor: floor,
        warning,
    })
}
