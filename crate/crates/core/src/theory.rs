//! Validators that instantiate the tail-integration lemmas on a concrete
//! sample and law. Each validator re-checks its preconditions and returns a
//! three-valued [`Verdict`]; a sample that misses a precondition is
//! [`Verdict::NotApplicable`], never a failure.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{draw_sample, DistributionSpec, Law, MarginalCdf};
use crate::error::{param_err, Error, Result};
use crate::oracle;
use crate::params::{DerivedThetas, GateRule, RatioParams};
use crate::ratio::{ratio_report, RatioReport};
use crate::seed::{derive_seed, purpose};
use crate::trim::{first_kept_rank, nonincreasing_rearrangement, pairwise_sum, project_abs, TrimSpec};

/// Relative slack granted to inequalities that can hold with equality.
const ROUNDING: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::NotApplicable => "not_applicable",
        }
    }
}

/// `lower <= value <= upper`, with the values kept for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sandwich {
    pub lower: f64,
    pub value: f64,
    pub upper: f64,
}

impl Sandwich {
    pub fn holds(&self) -> bool {
        let tol = ROUNDING * self.lower.abs().max(self.value.abs()).max(self.upper.abs());
        self.lower <= self.value + tol && self.value <= self.upper + tol
    }

    /// `Q_{1-theta1} < hat Q < Q_{1-theta2}`: no rounding slack.
    pub fn holds_strictly(&self) -> bool {
        self.lower < self.value && self.value < self.upper
    }

    pub fn lower_slack(&self) -> f64 {
        self.value - self.lower
    }

    pub fn upper_slack(&self) -> f64 {
        self.upper - self.value
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checked {
    pub verdict: Verdict,
    /// Why the check was skipped.
    pub reason: Option<String>,
    pub values: Option<Sandwich>,
}

impl Checked {
    fn skipped(reason: impl Into<String>) -> Self {
        Self { verdict: Verdict::NotApplicable, reason: Some(reason.into()), values: None }
    }

    fn judged(values: Sandwich, ok: bool) -> Self {
        Self { verdict: if ok { Verdict::Pass } else { Verdict::Fail }, reason: None, values: Some(values) }
    }
}

/// `Q_{1-eta}`, extended by `0` for `eta >= 1` (every `t >= 0` then has
/// `P(f > t) < eta`).
pub fn quantile_or_zero(cdf: &MarginalCdf, eta: f64) -> Result<f64> {
    if eta >= 1.0 {
        Ok(0.0)
    } else {
        oracle::quantile(cdf, eta)
    }
}

/// `int_0^T p t^(p-1) P_N(f > t) dt = (1/N) sum min(f_i, T)^p`, from values
/// sorted non-increasingly.
fn step_integral(sorted_desc: &[f64], p: f64, t_upper: f64) -> f64 {
    let parts: Vec<f64> = sorted_desc.iter().map(|&x| x.min(t_upper).powf(p)).collect();
    pairwise_sum(&parts) / sorted_desc.len() as f64
}

/// Exact empirical tail integral `int_0^T p t^(p-1) P_N(f > t) dt`.
pub fn empirical_tail_integral(values_abs: &[f64], p: f64, t_upper: f64) -> Result<f64> {
    let sorted = nonincreasing_rearrangement(values_abs)?;
    if sorted.is_empty() {
        return param_err("empty sample");
    }
    Ok(step_integral(&sorted, p, t_upper))
}

fn psi_sorted(sorted_desc: &[f64], spec: &TrimSpec) -> f64 {
    let dropped = spec.dropped(sorted_desc.len());
    let parts: Vec<f64> = sorted_desc[dropped..].iter().map(|x| x.powf(spec.p)).collect();
    pairwise_sum(&parts) / sorted_desc.len() as f64
}

/// Preconditions shared by the validators for one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateStatus {
    pub ratio: RatioReport,
    pub thetas: DerivedThetas,
    pub rule: GateRule,
}

impl GateStatus {
    pub fn evaluate(
        values_abs: &[f64],
        cdf: &MarginalCdf,
        theta: f64,
        params: &RatioParams,
        rule: GateRule,
    ) -> Result<Self> {
        Ok(Self { ratio: ratio_report(values_abs, cdf, params)?, thetas: params.derive(theta)?, rule })
    }

    pub fn theta_ok(&self) -> bool {
        self.thetas.gate(self.rule)
    }

    /// `None` when every precondition holds, else the first violated one.
    pub fn blocker(&self) -> Option<String> {
        if !self.ratio.prop1.pass {
            return Some("property 1 fails on this sample".into());
        }
        if !self.ratio.prop2.pass {
            return Some("property 2 fails on this sample".into());
        }
        if !self.ratio.prop3.pass {
            return Some("property 3 fails on this sample".into());
        }
        if !self.theta_ok() {
            return Some(format!("theta = {} misses the {:?} gate", self.thetas.theta, self.rule));
        }
        None
    }
}

/// Population quantities the validators need for one `(law, p, thetas)`;
/// they do not depend on the sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleTerms {
    pub p: f64,
    pub q_theta1: f64,
    pub q_theta2: f64,
    pub moment: f64,
    /// `E f^p 1{f >= Q_{1-theta1}}`
    pub tail_at_q1: f64,
    /// `E f^p 1{f > Q_{1-theta1}}`
    pub strict_tail_at_q1: f64,
    pub tail_at_q2: f64,
    pub err_q1: f64,
    pub err_q2: f64,
    pub sf_q1: f64,
    pub sf_q2: f64,
}

impl OracleTerms {
    pub fn compute(cdf: &MarginalCdf, p: f64, thetas: &DerivedThetas, delta: f64) -> Result<Self> {
        let q1 = quantile_or_zero(cdf, thetas.theta1)?;
        let q2 = quantile_or_zero(cdf, thetas.theta2)?;
        Ok(Self {
            p,
            q_theta1: q1,
            q_theta2: q2,
            moment: oracle::moment(cdf, p)?,
            tail_at_q1: oracle::upper_moment(cdf, p, q1, true)?,
            strict_tail_at_q1: oracle::upper_moment(cdf, p, q1, false)?,
            tail_at_q2: oracle::upper_moment(cdf, p, q2, false)?,
            err_q1: oracle::error_functional(cdf, p, q1, delta)?,
            err_q2: oracle::error_functional(cdf, p, q2, delta)?,
            sf_q1: cdf.sf(q1),
            sf_q2: cdf.sf(q2),
        })
    }
}

/// `Q_{1-theta1} < hat Q < Q_{1-theta2}` without any precondition.
pub fn evaluate_hatq_sandwich(sorted_desc: &[f64], terms: &OracleTerms, theta: f64) -> Sandwich {
    let k0 = first_kept_rank(theta, sorted_desc.len());
    Sandwich { lower: terms.q_theta1, value: sorted_desc[k0 - 1], upper: terms.q_theta2 }
}

/// Both sides of the preliminary bound
/// `int_0^{Q_{1-theta1}} - theta hat Q^p <= psi <= int_0^{Q_{1-theta2}}`.
pub fn evaluate_int_preliminary(sorted_desc: &[f64], spec: &TrimSpec, q_theta1: f64, q_theta2: f64) -> Sandwich {
    let k0 = first_kept_rank(spec.theta, sorted_desc.len());
    let hat_q = sorted_desc[k0 - 1];
    Sandwich {
        lower: step_integral(sorted_desc, spec.p, q_theta1) - spec.theta * hat_q.powf(spec.p),
        value: psi_sorted(sorted_desc, spec),
        upper: step_integral(sorted_desc, spec.p, q_theta2),
    }
}

/// `E f^p 1{f <= T} - E_{T,p} <= int_0^T p t^(p-1) P_N(f>t) dt <= E f^p + E_{T,p}`.
pub fn evaluate_integral_sandwich(
    sorted_desc: &[f64],
    p: f64,
    t_upper: f64,
    moment: f64,
    tail_above: f64,
    err: f64,
) -> Sandwich {
    Sandwich { lower: (moment - tail_above) - err, value: step_integral(sorted_desc, p, t_upper), upper: moment + err }
}

/// `E f^p - (1 + 1/(1-lambda)) E f^p 1{f >= Q_{1-theta1}} - E_{Q_{1-theta1},p}
///  <= psi <= E f^p + E_{Q_{1-theta2},p}`.
pub fn evaluate_main_theorem(sorted_desc: &[f64], spec: &TrimSpec, terms: &OracleTerms, lambda: f64) -> Sandwich {
    Sandwich {
        lower: terms.moment - (1.0 + 1.0 / (1.0 - lambda)) * terms.tail_at_q1 - terms.err_q1,
        value: psi_sorted(sorted_desc, spec),
        upper: terms.moment + terms.err_q2,
    }
}

fn sorted_input(values_abs: &[f64]) -> Result<Vec<f64>> {
    if values_abs.is_empty() {
        return param_err("empty sample");
    }
    if values_abs.iter().any(|&x| x < 0.0) {
        return param_err("values must be nonnegative");
    }
    nonincreasing_rearrangement(values_abs)
}

/// Lemma on `hat Q`: the empirical threshold sits strictly between the
/// population quantiles at `theta1` and `theta2`.
pub fn check_hatq_sandwich(
    values_abs: &[f64],
    cdf: &MarginalCdf,
    theta: f64,
    params: &RatioParams,
    rule: GateRule,
) -> Result<Checked> {
    let gate = GateStatus::evaluate(values_abs, cdf, theta, params, rule)?;
    if let Some(r) = gate.blocker() {
        return Ok(Checked::skipped(r));
    }
    let sorted = sorted_input(values_abs)?;
    let q1 = quantile_or_zero(cdf, gate.thetas.theta1)?;
    let q2 = quantile_or_zero(cdf, gate.thetas.theta2)?;
    let k0 = first_kept_rank(theta, sorted.len());
    let s = Sandwich { lower: q1, value: sorted[k0 - 1], upper: q2 };
    Ok(Checked::judged(s, s.holds_strictly()))
}

pub fn check_int_preliminary(
    values_abs: &[f64],
    cdf: &MarginalCdf,
    spec: &TrimSpec,
    params: &RatioParams,
    rule: GateRule,
) -> Result<Checked> {
    spec.validate_for(values_abs.len())?;
    let gate = GateStatus::evaluate(values_abs, cdf, spec.theta, params, rule)?;
    if let Some(r) = gate.blocker() {
        return Ok(Checked::skipped(r));
    }
    let sorted = sorted_input(values_abs)?;
    let q1 = quantile_or_zero(cdf, gate.thetas.theta1)?;
    let q2 = quantile_or_zero(cdf, gate.thetas.theta2)?;
    let s = evaluate_int_preliminary(&sorted, spec, q1, q2);
    Ok(Checked::judged(s, s.holds()))
}

/// Needs `P(f > T) >= delta` and property 2 on the sample.
pub fn check_integral_sandwich(
    values_abs: &[f64],
    cdf: &MarginalCdf,
    p: f64,
    t_upper: f64,
    delta: f64,
) -> Result<Checked> {
    let tail = cdf.sf(t_upper);
    if tail < delta {
        return Ok(Checked::skipped(format!("P(f > T) = {tail} < delta")));
    }
    let prop2 = crate::ratio::property2_check(values_abs, cdf, delta)?;
    if !prop2.pass {
        return Ok(Checked::skipped("property 2 fails on this sample"));
    }
    let sorted = sorted_input(values_abs)?;
    let moment = oracle::moment(cdf, p)?;
    let above = oracle::upper_moment(cdf, p, t_upper, false)?;
    let err = oracle::error_functional(cdf, p, t_upper, delta)?;
    let s = evaluate_integral_sandwich(&sorted, p, t_upper, moment, above, err);
    Ok(Checked::judged(s, s.holds()))
}

/// Constant-free two-sided bound on `psi` under properties (1)-(3).
pub fn check_main_theorem(
    values_abs: &[f64],
    cdf: &MarginalCdf,
    spec: &TrimSpec,
    params: &RatioParams,
    rule: GateRule,
) -> Result<Checked> {
    spec.validate_for(values_abs.len())?;
    let gate = GateStatus::evaluate(values_abs, cdf, spec.theta, params, rule)?;
    if let Some(r) = gate.blocker() {
        return Ok(Checked::skipped(r));
    }
    let sorted = sorted_input(values_abs)?;
    let terms = OracleTerms::compute(cdf, spec.p, &gate.thetas, params.delta)?;
    let s = evaluate_main_theorem(&sorted, spec, &terms, params.lambda);
    Ok(Checked::judged(s, s.holds()))
}

/// Names of the validators, in report order.
pub const CHECK_NAMES: [&str; 5] =
    ["hatq_sandwich", "int_preliminary", "integral_sandwich_q1", "integral_sandwich_q2", "main_theorem"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaRow {
    pub law: String,
    pub trial: usize,
    pub p: f64,
    pub check: String,
    pub verdict: Verdict,
    pub lower: f64,
    pub value: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaSuiteConfig {
    pub laws: Vec<Law>,
    pub n: usize,
    pub delta: f64,
    pub lambda: f64,
    pub big_c: f64,
    pub theta: f64,
    pub ps: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub gate: GateRule,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub pass: usize,
    pub fail: usize,
    pub not_applicable: usize,
}

impl Tally {
    fn add(&mut self, v: Verdict) {
        match v {
            Verdict::Pass => self.pass += 1,
            Verdict::Fail => self.fail += 1,
            Verdict::NotApplicable => self.not_applicable += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaSuiteReport {
    pub rows: Vec<LemmaRow>,
    /// Per check name, over all laws, trials and exponents.
    pub tallies: Vec<(String, Tally)>,
    pub hard_failures: usize,
}

fn row(law: &str, trial: usize, p: f64, check: &str, c: Checked) -> LemmaRow {
    let s = c.values.unwrap_or(Sandwich { lower: f64::NAN, value: f64::NAN, upper: f64::NAN });
    LemmaRow {
        law: law.to_string(),
        trial,
        p,
        check: check.to_string(),
        verdict: c.verdict,
        lower: s.lower,
        value: s.value,
        upper: s.upper,
    }
}

/// Runs every validator on one-dimensional samples of `values_abs` for all
/// exponents, reusing the population terms.
pub fn validate_sample(
    values_abs: &[f64],
    cdf: &MarginalCdf,
    terms: &[OracleTerms],
    theta: f64,
    params: &RatioParams,
    rule: GateRule,
) -> Result<Vec<(f64, &'static str, Checked)>> {
    let n = values_abs.len();
    let mut out = Vec::with_capacity(terms.len() * CHECK_NAMES.len());
    let sorted = match sorted_input(values_abs) {
        Ok(s) => s,
        Err(Error::NonFinite { index }) => {
            for t in terms {
                for name in CHECK_NAMES {
                    let mut c = Checked::skipped(format!("non-finite sample entry at index {index}"));
                    c.verdict = Verdict::Fail;
                    out.push((t.p, name, c));
                }
            }
            return Ok(out);
        }
        Err(e) => return Err(e),
    };
    let gate = GateStatus::evaluate(values_abs, cdf, theta, params, rule)?;
    let blocker = gate.blocker();
    let prop2_ok = gate.ratio.prop2.pass;
    for t in terms {
        let spec = TrimSpec::new(t.p, theta)?;
        spec.validate_for(n)?;
        let gated = |s: Sandwich, strict: bool| match &blocker {
            Some(r) => Checked::skipped(r.clone()),
            None => Checked::judged(s, if strict { s.holds_strictly() } else { s.holds() }),
        };
        out.push((t.p, CHECK_NAMES[0], gated(evaluate_hatq_sandwich(&sorted, t, theta), true)));
        out.push((t.p, CHECK_NAMES[1], gated(evaluate_int_preliminary(&sorted, &spec, t.q_theta1, t.q_theta2), false)));
        for (name, q, above, err, sf) in [
            (CHECK_NAMES[2], t.q_theta1, t.strict_tail_at_q1, t.err_q1, t.sf_q1),
            (CHECK_NAMES[3], t.q_theta2, t.tail_at_q2, t.err_q2, t.sf_q2),
        ] {
            let c = if sf < params.delta {
                Checked::skipped(format!("P(f > T) = {sf} < delta"))
            } else if !prop2_ok {
                Checked::skipped("property 2 fails on this sample")
            } else {
                let s = evaluate_integral_sandwich(&sorted, t.p, q, t.moment, above, err);
                Checked::judged(s, s.holds())
            };
            out.push((t.p, name, c));
        }
        out.push((t.p, CHECK_NAMES[4], gated(evaluate_main_theorem(&sorted, &spec, t, params.lambda), false)));
    }
    Ok(out)
}

/// The seeded trial grid: one-dimensional samples of each law, every
/// validator at every exponent.
pub fn run_lemma_suite(cfg: &LemmaSuiteConfig) -> Result<LemmaSuiteReport> {
    if cfg.trials == 0 {
        return param_err("trial count must be >= 1");
    }
    if cfg.laws.is_empty() || cfg.ps.is_empty() {
        return param_err("need at least one law and one exponent");
    }
    let params = RatioParams::new(cfg.delta, cfg.lambda, cfg.big_c)?;
    let thetas = params.derive(cfg.theta)?;
    let mut rows = Vec::new();
    for (li, law) in cfg.laws.iter().enumerate() {
        let spec = DistributionSpec::new(*law, 1)?;
        let cdf = MarginalCdf::for_direction(&spec, &[1.0], 0, 0)?;
        let mut terms = Vec::new();
        for &p in &cfg.ps {
            if !law.has_moment(p) {
                return Err(Error::MomentDoesNotExist { p, nu: law.nu().unwrap_or(f64::INFINITY) });
            }
            terms.push(OracleTerms::compute(&cdf, p, &thetas, cfg.delta)?);
        }
        let name = spec.name();
        let per_trial = (0..cfg.trials)
            .into_par_iter()
            .map(|r| -> Result<Vec<LemmaRow>> {
                let seed = derive_seed(cfg.seed, &[purpose::SAMPLE, li as u64, r as u64]);
                let sample = draw_sample(&spec, cfg.n, seed)?;
                let f = project_abs(&sample, &[1.0])?;
                Ok(validate_sample(&f, &cdf, &terms, cfg.theta, &params, cfg.gate)?
                    .into_iter()
                    .map(|(p, check, c)| row(&name, r, p, check, c))
                    .collect())
            })
            .collect::<Result<Vec<_>>>()?;
        rows.extend(per_trial.into_iter().flatten());
    }
    Ok(summarize(rows))
}

pub fn summarize(rows: Vec<LemmaRow>) -> LemmaSuiteReport {
    let mut tallies: Vec<(String, Tally)> = CHECK_NAMES.iter().map(|n| (n.to_string(), Tally::default())).collect();
    for r in &rows {
        if let Some((_, t)) = tallies.iter_mut().find(|(n, _)| *n == r.check) {
            t.add(r.verdict);
        }
    }
    let hard_failures = rows.iter().filter(|r| r.verdict == Verdict::Fail).count();
    LemmaSuiteReport { rows, tallies, hard_failures }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::AnalyticMarginal;
    use crate::trim::psi;

    fn normal() -> MarginalCdf {
        MarginalCdf::Analytic(AnalyticMarginal::FoldedNormal { scale: 1.0 })
    }

    fn gaussian_values(n: usize, seed: u64) -> Vec<f64> {
        let spec = DistributionSpec::parse("gaussian", None, 1).unwrap();
        project_abs(&draw_sample(&spec, n, seed).unwrap(), &[1.0]).unwrap()
    }

    #[test]
    fn step_integral_is_min_power_mean() {
        let v = [1.0, 2.0, 3.0, 10.0];
        assert_eq!(empirical_tail_integral(&v, 2.0, 2.5).unwrap(), (1.0 + 4.0 + 6.25 + 6.25) / 4.0);
        assert_eq!(empirical_tail_integral(&v, 2.0, 100.0).unwrap(), 28.5);
    }

    #[test]
    fn hatq_on_gaussian_sample() {
        let f = gaussian_values(10_000, 3);
        let params = RatioParams::standard(0.01).unwrap();
        let c = check_hatq_sandwich(&f, &normal(), 0.1, &params, GateRule::Proof).unwrap();
        assert_eq!(c.verdict, Verdict::Pass, "{c:?}");
        let c = check_hatq_sandwich(&f, &normal(), 0.1, &params, GateRule::Theorem).unwrap();
        assert_eq!(c.verdict, Verdict::NotApplicable);
        let c = check_hatq_sandwich(&f, &normal(), 0.14, &params, GateRule::Theorem).unwrap();
        assert_eq!(c.verdict, Verdict::Pass);
    }

    #[test]
    fn hatq_on_exact_sample() {
        let values: Vec<f64> = (1..=1000).map(|i| i as f64 / 1000.0).collect();
        let cdf = MarginalCdf::from_values(&values).unwrap();
        let params = RatioParams::standard(0.01).unwrap();
        let c = check_hatq_sandwich(&values, &cdf, 0.1, &params, GateRule::Proof).unwrap();
        assert_eq!(c.verdict, Verdict::Pass, "{c:?}");
        let s = c.values.unwrap();
        assert_eq!(s.value, oracle::quantile(&cdf, 0.1).unwrap());
    }

    #[test]
    fn theta_gate_reports_not_applicable() {
        let f = gaussian_values(2000, 1);
        let params = RatioParams::standard(0.01).unwrap();
        // theta2 = 0.02 / 1.5 < 2 delta
        let c = check_hatq_sandwich(&f, &normal(), 0.06, &params, GateRule::Proof).unwrap();
        assert_eq!(c.verdict, Verdict::NotApplicable);
    }

    #[test]
    fn int_preliminary_hand_example() {
        // [1, 2, 3, 10], theta = 1/2, p = 2: k0 = 2, hat Q = 3, psi = 14/4
        let sorted = [10.0, 3.0, 2.0, 1.0];
        let spec = TrimSpec::new(2.0, 0.5).unwrap();
        let s = evaluate_int_preliminary(&sorted, &spec, 2.5, 5.0);
        assert_eq!(s.value, 3.5);
        assert_eq!(s.lower, (1.0 + 4.0 + 6.25 + 6.25) / 4.0 - 0.5 * 9.0);
        assert_eq!(s.upper, (1.0 + 4.0 + 9.0 + 25.0) / 4.0);
        assert!(s.holds());
    }

    #[test]
    fn int_preliminary_without_trim_is_tight() {
        let f = gaussian_values(1000, 9);
        let mut sorted = f.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let spec = TrimSpec::new(2.0, 1.0 / 1000.0).unwrap();
        let s = evaluate_int_preliminary(&sorted, &spec, 0.0, sorted[0] * 2.0);
        assert_eq!(s.value, s.upper);
        assert_eq!(s.value, psi(&f, &spec).unwrap());
    }

    #[test]
    fn int_preliminary_gaussian() {
        let f = gaussian_values(1000, 4);
        let params = RatioParams::standard(0.01).unwrap();
        let spec = TrimSpec::new(2.0, 0.1).unwrap();
        let c = check_int_preliminary(&f, &normal(), &spec, &params, GateRule::Proof).unwrap();
        assert_ne!(c.verdict, Verdict::Fail, "{c:?}");
    }

    #[test]
    fn integral_sandwich_cases() {
        let f = gaussian_values(10_000, 5);
        let t = oracle::quantile(&normal(), 0.1).unwrap();
        let c = check_integral_sandwich(&f, &normal(), 2.0, t, 0.02).unwrap();
        assert_eq!(c.verdict, Verdict::Pass, "{c:?}");
        // exact sample
        let values: Vec<f64> = (1..=2000).map(|i| (i as f64 / 2000.0).sqrt()).collect();
        let cdf = MarginalCdf::from_values(&values).unwrap();
        let t = oracle::quantile(&cdf, 0.2).unwrap();
        let c = check_integral_sandwich(&values, &cdf, 2.0, t, 0.02).unwrap();
        let s = c.values.unwrap();
        assert_eq!(c.verdict, Verdict::Pass);
        assert!(s.lower_slack() >= 0.0 && s.upper_slack() >= 0.0);
        // adversarial: all mass piled near zero
        let bad = vec![1e-3; 500];
        let c = check_integral_sandwich(&bad, &normal(), 2.0, 0.5, 0.02).unwrap();
        assert_eq!(c.verdict, Verdict::NotApplicable);
    }

    #[test]
    fn main_theorem_cases() {
        let params = RatioParams::standard(0.01).unwrap();
        let spec = TrimSpec::new(2.0, 0.08).unwrap();
        let f = gaussian_values(10_000, 6);
        let c = check_main_theorem(&f, &normal(), &spec, &params, GateRule::Proof).unwrap();
        assert_eq!(c.verdict, Verdict::Pass, "{c:?}");
        let t6 = DistributionSpec::parse("product_student_t", Some(6.0), 1).unwrap();
        let cdf = MarginalCdf::for_direction(&t6, &[1.0], 0, 0).unwrap();
        let g = project_abs(&draw_sample(&t6, 10_000, 6).unwrap(), &[1.0]).unwrap();
        let c = check_main_theorem(&g, &cdf, &spec, &params, GateRule::Proof).unwrap();
        assert_ne!(c.verdict, Verdict::Fail, "{c:?}");
    }

    #[test]
    fn corrupted_sample_is_a_hard_failure() {
        let params = RatioParams::standard(0.01).unwrap();
        let thetas = params.derive(0.1).unwrap();
        let terms = [OracleTerms::compute(&normal(), 2.0, &thetas, 0.01).unwrap()];
        let mut f = gaussian_values(100, 1);
        f[7] = f64::NAN;
        let out = validate_sample(&f, &normal(), &terms, 0.1, &params, GateRule::Proof).unwrap();
        assert!(out.iter().all(|(_, _, c)| c.verdict == Verdict::Fail));
    }

    #[test]
    fn small_suite() {
        let cfg = LemmaSuiteConfig {
            laws: vec![Law::Gaussian, Law::CubeUniform, Law::ProductLaplace, Law::ProductStudentT { nu: 6.0 }],
            n: 10_000,
            delta: 0.01,
            lambda: 0.5,
            big_c: 2.0,
            theta: 0.1,
            ps: vec![1.0, 2.0, 3.0],
            trials: 5,
            seed: 42,
            gate: GateRule::Proof,
        };
        let rep = run_lemma_suite(&cfg).unwrap();
        assert_eq!(rep.rows.len(), 4 * 5 * 3 * CHECK_NAMES.len());
        assert_eq!(rep.hard_failures, 0);
        assert!(rep.tallies.iter().all(|(_, t)| t.pass > 0));
        assert_eq!(rep, run_lemma_suite(&cfg).unwrap());
    }
}
