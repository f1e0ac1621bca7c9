//! Population functionals of a marginal law, by quadrature against its
//! survival function: quantiles, truncated moments, the error functional
//! `E_{T,p} = 2 sqrt(delta) int_0^T p t^(p-1) sqrt(P(f>t)) dt`, and the
//! tail-moment bounds built from them.
//!
//! Analytic laws are integrated by adaptive Simpson; empirical laws are
//! integrated exactly as step functions.

use serde::{Deserialize, Serialize};

use crate::distributions::{AnalyticMarginal, MarginalCdf};
use crate::error::{param_err, Error, Result};
use crate::quadrature::{integrate_dyadic, Integral};

const REL_TOL: f64 = 1e-11;

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0 && p.is_finite()) {
        return param_err(format!("exponent p must be >= 1, got {p}"));
    }
    Ok(())
}

/// `Q_{1-eta} = inf{t : P(f > t) < eta}`.
pub fn quantile(cdf: &MarginalCdf, eta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta < 1.0) {
        return param_err(format!("quantile level must lie in (0, 1), got {eta}"));
    }
    match cdf {
        MarginalCdf::Empirical(e) => Ok(e.quantile(eta)),
        MarginalCdf::Analytic(a) => Ok(bisect_quantile(a, eta)),
    }
}

fn bisect_quantile(law: &AnalyticMarginal, eta: f64) -> f64 {
    let mut lo = 0.0;
    let mut hi = law.characteristic_scale();
    while law.sf(hi) >= eta {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return f64::INFINITY;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) || hi - lo <= 1e-15 * hi {
            break;
        }
        if law.sf(mid) < eta {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// `int_lower^upper p t^(p-1) P(f>t)^alpha dt`.
fn power_sf_integral(cdf: &MarginalCdf, p: f64, lower: f64, upper: f64, alpha: f64) -> Result<Integral> {
    let lower = lower.max(0.0);
    let upper = upper.min(cdf.support_max());
    if !(upper > lower) {
        return Ok(Integral {
            value: 0.0,
            error_estimate: 0.0,
            truncation_bound: 0.0,
            evaluations: 0,
            covered_to: lower,
        });
    }
    match cdf {
        MarginalCdf::Empirical(e) => {
            let value = e.power_sf_integral(p, upper, alpha) - e.power_sf_integral(p, lower, alpha);
            Ok(Integral { value, error_estimate: 0.0, truncation_bound: 0.0, evaluations: 0, covered_to: upper })
        }
        MarginalCdf::Analytic(law) => {
            if upper.is_infinite() {
                if let Some(nu) = cdf.tail_index() {
                    if nu * alpha <= p {
                        return Err(Error::MomentDoesNotExist { p: p / alpha, nu });
                    }
                }
            }
            let scale = law.characteristic_scale();
            let f = |x: f64| {
                let t = lower + x;
                let s = law.sf(t);
                let s = if alpha == 1.0 { s } else { s.powf(alpha) };
                p * t.powf(p - 1.0) * s
            };
            let tail = |x: f64| law.tail_mass_bound(p, alpha, lower + x);
            let abs_tol = 1e-15 * scale.powf(p);
            let span = upper - lower;
            let first = if span.is_finite() && span <= 64.0 * scale { span } else { scale };
            let mut r = integrate_dyadic(&f, span, first, &tail, abs_tol, REL_TOL);
            r.covered_to += lower;
            Ok(r)
        }
    }
}

/// `int_0^T p t^(p-1) P(f>t) dt`, which equals `E min(f, T)^p`.
/// `T = +inf` gives `E f^p`.
pub fn tail_integral_moment(cdf: &MarginalCdf, p: f64, t_upper: f64) -> Result<f64> {
    check_p(p)?;
    if !(t_upper >= 0.0) {
        return param_err(format!("upper limit must be >= 0, got {t_upper}"));
    }
    Ok(power_sf_integral(cdf, p, 0.0, t_upper, 1.0)?.value)
}

/// Like [`tail_integral_moment`] but with the quadrature diagnostics.
pub fn tail_integral_moment_detailed(cdf: &MarginalCdf, p: f64, t_upper: f64) -> Result<Integral> {
    check_p(p)?;
    power_sf_integral(cdf, p, 0.0, t_upper, 1.0)
}

/// `E f^p`: closed form where the law has one, quadrature otherwise.
pub fn moment(cdf: &MarginalCdf, p: f64) -> Result<f64> {
    check_p(p)?;
    match cdf {
        MarginalCdf::Analytic(a) => a.moment(p),
        MarginalCdf::Empirical(e) => Ok(e.moment(p)),
    }
}

/// `E_{T,p} = 2 sqrt(delta) int_0^T p t^(p-1) sqrt(P(f > t)) dt`.
pub fn error_functional(cdf: &MarginalCdf, p: f64, t_upper: f64, delta: f64) -> Result<f64> {
    check_p(p)?;
    if !(t_upper >= 0.0) {
        return param_err(format!("upper limit must be >= 0, got {t_upper}"));
    }
    if !(delta > 0.0 && delta <= 0.5) {
        return param_err(format!("delta must lie in (0, 1/2], got {delta}"));
    }
    Ok(2.0 * delta.sqrt() * power_sf_integral(cdf, p, 0.0, t_upper, 0.5)?.value)
}

/// `E f^p 1{f > u}` (`f >= u` when `inclusive`).
pub fn upper_moment(cdf: &MarginalCdf, p: f64, u: f64, inclusive: bool) -> Result<f64> {
    check_p(p)?;
    match cdf {
        MarginalCdf::Empirical(e) => Ok(e.upper_moment(p, u, inclusive)),
        MarginalCdf::Analytic(_) => {
            let u = u.max(0.0);
            let at = if inclusive { cdf.sf_left(u) } else { cdf.sf(u) };
            let beyond = power_sf_integral(cdf, p, u, f64::INFINITY, 1.0)?.value;
            Ok(u.powf(p) * at + beyond)
        }
    }
}

/// `E f^p 1{f > Q_{1-kappa}}`.
pub fn truncated_upper_moment(cdf: &MarginalCdf, p: f64, kappa: f64) -> Result<f64> {
    let q = quantile(cdf, kappa)?;
    upper_moment(cdf, p, q, false)
}

/// `2p / (q - 2p)`.
pub fn c_qp(p: f64, q: f64) -> f64 {
    2.0 * p / (q - 2.0 * p)
}

/// Exponent `q > 2p` used for the power-form bound: `4p` when that moment
/// exists, otherwise the midpoint of `(2p, nu)`. `None` when `2p >= nu`.
pub fn default_q(p: f64, tail_index: Option<f64>) -> Option<f64> {
    match tail_index {
        None => Some(4.0 * p),
        Some(nu) if 4.0 * p < nu => Some(4.0 * p),
        Some(nu) if 2.0 * p < nu => Some(0.5 * (2.0 * p + nu)),
        Some(_) => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Inequality {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
}

impl Inequality {
    pub fn new(lhs: f64, rhs: f64) -> Self {
        Self { lhs, rhs, slack: rhs - lhs, holds: lhs <= rhs }
    }
}

/// The three tail-parameter bounds at `T = Q_{1-kappa}`:
/// * `E f^p 1{f > T} <= ||f||_{2p}^p sqrt(kappa)`;
/// * `E_{T,p} <= 2 sqrt(delta) (||f||_p^p + sqrt(log(1/kappa)/2) ||f||_{2p}^p)`;
/// * `E_{T,p} <= 2 sqrt(delta) (1 + c_{q,p}) ||f||_q^p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailBoundReport {
    pub p: f64,
    pub q: f64,
    pub kappa: f64,
    pub delta: f64,
    pub threshold: f64,
    pub c_qp: f64,
    pub tail: Inequality,
    pub log_bound: Inequality,
    pub power_bound: Inequality,
}

impl TailBoundReport {
    pub fn all_hold(&self) -> bool {
        self.tail.holds && self.log_bound.holds && self.power_bound.holds
    }

    pub fn min_slack(&self) -> f64 {
        self.tail.slack.min(self.log_bound.slack).min(self.power_bound.slack)
    }
}

pub fn lemma24_bounds(cdf: &MarginalCdf, p: f64, q: f64, kappa: f64, delta: f64) -> Result<TailBoundReport> {
    check_p(p)?;
    if !(q > 2.0 * p) {
        return param_err(format!("need q > 2p, got p = {p}, q = {q}"));
    }
    if !(kappa > 0.0 && kappa < 1.0) {
        return param_err(format!("kappa must lie in (0, 1), got {kappa}"));
    }
    if let Some(nu) = cdf.tail_index() {
        if q >= nu {
            return Err(Error::MomentDoesNotExist { p: q, nu });
        }
    }
    let threshold = quantile(cdf, kappa)?;
    let norm_p = moment(cdf, p)?;
    let norm_2p = moment(cdf, 2.0 * p)?.sqrt();
    let norm_q = moment(cdf, q)?.powf(p / q);
    let tail_lhs = upper_moment(cdf, p, threshold, false)?;
    let err = error_functional(cdf, p, threshold, delta)?;
    let root = 2.0 * delta.sqrt();
    let cqp = c_qp(p, q);
    Ok(TailBoundReport {
        p,
        q,
        kappa,
        delta,
        threshold,
        c_qp: cqp,
        tail: Inequality::new(tail_lhs, norm_2p * kappa.sqrt()),
        log_bound: Inequality::new(err, root * (norm_p + (0.5 * (1.0 / kappa).ln()).sqrt() * norm_2p)),
        power_bound: Inequality::new(err, root * (1.0 + cqp) * norm_q),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform01() -> MarginalCdf {
        MarginalCdf::Analytic(AnalyticMarginal::FoldedUniform { half_width: 1.0 })
    }

    fn exponential1() -> MarginalCdf {
        MarginalCdf::Analytic(AnalyticMarginal::FoldedLaplace { scale: 1.0 })
    }

    fn folded_normal() -> MarginalCdf {
        MarginalCdf::Analytic(AnalyticMarginal::FoldedNormal { scale: 1.0 })
    }

    #[test]
    fn quantile_examples() {
        assert!((quantile(&uniform01(), 0.1).unwrap() - 0.9).abs() < 1e-9);
        for kappa in [0.5, 0.1, 0.01, 1e-6] {
            assert!((quantile(&exponential1(), kappa).unwrap() - (1.0 / kappa).ln()).abs() < 1e-9);
        }
        assert!((quantile(&folded_normal(), 0.05).unwrap() - 1.959_963_984_540_054).abs() < 1e-4);
        assert!(quantile(&uniform01(), 1.0).is_err());
    }

    #[test]
    fn quantile_cdf_consistency() {
        let laws = [
            folded_normal(),
            exponential1(),
            uniform01(),
            MarginalCdf::Analytic(AnalyticMarginal::FoldedStudentT { scale: 0.9, nu: 4.5 }),
        ];
        for law in &laws {
            for eta in [0.9, 0.5, 0.1, 0.01, 0.001] {
                let q = quantile(law, eta).unwrap();
                assert!(law.sf(q) <= eta, "{law:?} {eta}");
                assert!(law.sf(q - 1e-6) >= eta, "{law:?} {eta}");
            }
        }
    }

    #[test]
    fn tail_integral_examples() {
        assert!((tail_integral_moment(&uniform01(), 2.0, 1.0).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!((tail_integral_moment(&uniform01(), 2.0, 0.5).unwrap() - 1.0 / 6.0).abs() < 1e-12);
        assert_eq!(tail_integral_moment(&folded_normal(), 3.0, 0.0).unwrap(), 0.0);
        let t = MarginalCdf::Analytic(AnalyticMarginal::FoldedStudentT { scale: 1.0, nu: 4.5 });
        assert!(matches!(tail_integral_moment(&t, 5.0, f64::INFINITY), Err(Error::MomentDoesNotExist { .. })));
        assert!(tail_integral_moment(&t, 5.0, 100.0).is_ok());
    }

    #[test]
    fn error_functional_examples() {
        assert_eq!(error_functional(&folded_normal(), 2.0, 0.0, 0.1).unwrap(), 0.0);
        let e = error_functional(&uniform01(), 1.0, 1.0, 0.25).unwrap();
        assert!((e - 2.0 / 3.0).abs() < 1e-9, "{e}");
    }

    #[test]
    fn error_functional_matches_trapezoid_brute_force() {
        let law = folded_normal();
        let t = quantile(&law, 0.01).unwrap();
        let delta = 0.01;
        let got = error_functional(&law, 2.0, t, delta).unwrap();
        // dense composite trapezoid, independent of the adaptive engine
        let n = 200_000;
        let h = t / n as f64;
        let g = |x: f64| 2.0 * x * law.sf(x).sqrt();
        let mut acc = 0.5 * (g(0.0) + g(t));
        for i in 1..n {
            acc += g(i as f64 * h);
        }
        let brute = 2.0 * delta.sqrt() * acc * h;
        assert!((got - brute).abs() <= 1e-4 * brute, "{got} vs {brute}");
    }

    #[test]
    fn truncated_upper_examples() {
        let got = truncated_upper_moment(&uniform01(), 2.0, 0.1).unwrap();
        assert!((got - (1.0 - 0.729) / 3.0).abs() < 1e-9, "{got}");
        let all = truncated_upper_moment(&uniform01(), 2.0, 1.0 - 1e-9).unwrap();
        assert!((all - 1.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn lemma24_uniform_example() {
        let r = lemma24_bounds(&uniform01(), 2.0, 8.0, 0.1, 0.02).unwrap();
        assert!((r.tail.lhs - 0.090_333_333).abs() < 1e-8);
        assert!((r.tail.rhs - (0.2f64).sqrt() * 0.1f64.sqrt()).abs() < 1e-12);
        assert!((r.tail.rhs - 0.141_42).abs() < 1e-5);
        assert_eq!(r.c_qp, 1.0);
        assert!(r.all_hold());
    }

    #[test]
    fn lemma24_folded_normal_example() {
        let r = lemma24_bounds(&folded_normal(), 2.0, 8.0, 0.01, 0.02).unwrap();
        assert!(r.all_hold() && r.min_slack() > 0.0, "{r:?}");
    }

    #[test]
    fn empirical_mode_integrates_exactly() {
        let e = MarginalCdf::from_values(&[0.5, 1.0, 2.0, 4.0]).unwrap();
        // E min(f, 1.5)^2 = (0.25 + 1 + 2.25 + 2.25) / 4
        let v = tail_integral_moment(&e, 2.0, 1.5).unwrap();
        assert!((v - 5.75 / 4.0).abs() < 1e-14);
        assert!((moment(&e, 2.0).unwrap() - 21.25 / 4.0).abs() < 1e-14);
        assert!((tail_integral_moment(&e, 2.0, f64::INFINITY).unwrap() - 21.25 / 4.0).abs() < 1e-14);
    }
}
