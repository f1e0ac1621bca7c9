use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

use statrs::function::beta::beta_reg;
use statrs::function::erf::erfc;
use statrs::function::gamma::{gamma_ur, ln_gamma};

fn upper_gamma(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x.is_infinite() {
        0.0
    } else {
        gamma_ur(a, x)
    }
}

use super::{euclidean_norm, DistributionSpec, Law};
use crate::error::{Error, Result};
use crate::seed::{purpose, rng_for};
use crate::trim::first_kept_rank;

/// Size of the cached reference sample backing empirical marginals.
pub const DEFAULT_REFERENCE_SIZE: usize = 1_000_000;

/// Closed-form laws of `|<X, v>|` available in this crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnalyticMarginal {
    /// `|s Z|`, `Z` standard normal.
    FoldedNormal { scale: f64 },
    /// Uniform on `[0, half_width]`.
    FoldedUniform { half_width: f64 },
    /// Exponential with mean `scale` (the modulus of a Laplace variable).
    FoldedLaplace { scale: f64 },
    /// `|s T|`, `T` Student-t with `nu` degrees of freedom.
    FoldedStudentT { scale: f64, nu: f64 },
}

impl AnalyticMarginal {
    /// `P(f > t)`.
    pub fn sf(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 1.0;
        }
        match *self {
            AnalyticMarginal::FoldedNormal { scale } => erfc(t / (scale * SQRT_2)),
            AnalyticMarginal::FoldedUniform { half_width } => (1.0 - t / half_width).clamp(0.0, 1.0),
            AnalyticMarginal::FoldedLaplace { scale } => (-t / scale).exp(),
            AnalyticMarginal::FoldedStudentT { scale, nu } => {
                let x = t / scale;
                if x == 0.0 {
                    1.0
                } else if x.is_infinite() {
                    0.0
                } else {
                    beta_reg(nu / 2.0, 0.5, nu / (nu + x * x))
                }
            }
        }
    }

    /// `E f^p` in closed form.
    pub fn moment(&self, p: f64) -> Result<f64> {
        Ok(match *self {
            AnalyticMarginal::FoldedNormal { scale } => {
                scale.powf(p) * ((p / 2.0) * 2f64.ln() + ln_gamma((p + 1.0) / 2.0)).exp() / PI.sqrt()
            }
            AnalyticMarginal::FoldedUniform { half_width } => half_width.powf(p) / (p + 1.0),
            AnalyticMarginal::FoldedLaplace { scale } => scale.powf(p) * ln_gamma(p + 1.0).exp(),
            AnalyticMarginal::FoldedStudentT { scale, nu } => {
                if p >= nu {
                    return Err(Error::MomentDoesNotExist { p, nu });
                }
                scale.powf(p)
                    * ((p / 2.0) * nu.ln() + ln_gamma((p + 1.0) / 2.0) + ln_gamma((nu - p) / 2.0) - ln_gamma(nu / 2.0))
                        .exp()
                    / PI.sqrt()
            }
        })
    }

    pub fn characteristic_scale(&self) -> f64 {
        match *self {
            AnalyticMarginal::FoldedNormal { scale }
            | AnalyticMarginal::FoldedLaplace { scale }
            | AnalyticMarginal::FoldedStudentT { scale, .. } => scale,
            AnalyticMarginal::FoldedUniform { half_width } => half_width,
        }
    }

    /// Upper bound (asymptotic estimate for Student-t) on
    /// `int_u^inf p t^(p-1) P(f>t)^alpha dt`.
    pub fn tail_mass_bound(&self, p: f64, alpha: f64, u: f64) -> f64 {
        match *self {
            AnalyticMarginal::FoldedNormal { scale } => {
                // 2 Phi(-x) <= exp(-x^2 / 2)
                let a = alpha / (2.0 * scale * scale);
                0.5 * p * (1.0 / a).powf(p / 2.0) * ln_gamma(p / 2.0).exp() * upper_gamma(p / 2.0, a * u * u)
            }
            AnalyticMarginal::FoldedUniform { half_width } => {
                if u >= half_width {
                    0.0
                } else {
                    half_width.powf(p)
                }
            }
            AnalyticMarginal::FoldedLaplace { scale } => {
                let b = scale / alpha;
                b.powf(p) * ln_gamma(p + 1.0).exp() * upper_gamma(p, u / b)
            }
            AnalyticMarginal::FoldedStudentT { nu, .. } => {
                let rate = nu * alpha - p;
                if rate <= 0.0 {
                    f64::INFINITY
                } else {
                    2.0 * p * u.powf(p) * self.sf(u).powf(alpha) / rate
                }
            }
        }
    }
}

/// Step-function law of a finite reference sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMarginal {
    sorted: Arc<[f64]>,
    pub seed: Option<u64>,
}

impl EmpiricalMarginal {
    pub fn from_values(values: &[f64], seed: Option<u64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Parameter("empirical marginal needs at least one value".into()));
        }
        if let Some(index) = values.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let mut sorted: Vec<f64> = values.iter().map(|x| x.abs()).collect();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { sorted: sorted.into(), seed })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Ascending reference values.
    pub fn values(&self) -> &[f64] {
        &self.sorted
    }

    fn count_greater(&self, t: f64) -> usize {
        self.sorted.len() - self.sorted.partition_point(|&x| x <= t)
    }

    fn count_at_least(&self, t: f64) -> usize {
        self.sorted.len() - self.sorted.partition_point(|&x| x < t)
    }

    /// `inf{t : P(f > t) < eta}`, the `ceil(eta M)`-th largest value.
    pub fn quantile(&self, eta: f64) -> f64 {
        let m = self.sorted.len();
        let k = first_kept_rank(eta, m).min(m);
        self.sorted[m - k]
    }

    /// `int_0^T p t^(p-1) P(f>t)^alpha dt`, exactly, treating the law as a
    /// step function.
    pub fn power_sf_integral(&self, p: f64, upper: f64, alpha: f64) -> f64 {
        let m = self.sorted.len() as f64;
        let mut acc = 0.0;
        let mut left = 0.0f64;
        let mut i = 0;
        let n = self.sorted.len();
        // S(t) = #{x > t} / M is constant between consecutive distinct values
        while i <= n && left < upper {
            let right = if i < n { self.sorted[i].min(upper) } else { upper };
            let above = (n - i) as f64 / m;
            if right > left && above > 0.0 {
                acc += above.powf(alpha) * (right.powf(p) - left.powf(p));
            }
            if i == n {
                break;
            }
            left = left.max(right);
            let v = self.sorted[i];
            while i < n && self.sorted[i] == v {
                i += 1;
            }
        }
        acc
    }

    pub fn moment(&self, p: f64) -> f64 {
        let parts: Vec<f64> = self.sorted.iter().rev().map(|x| x.powf(p)).collect();
        crate::trim::pairwise_sum(&parts) / self.sorted.len() as f64
    }

    /// `E f^p 1{f > u}` (or `f >= u` when `inclusive`).
    pub fn upper_moment(&self, p: f64, u: f64, inclusive: bool) -> f64 {
        let start =
            if inclusive { self.sorted.partition_point(|&x| x < u) } else { self.sorted.partition_point(|&x| x <= u) };
        let parts: Vec<f64> = self.sorted[start..].iter().rev().map(|x| x.powf(p)).collect();
        crate::trim::pairwise_sum(&parts) / self.sorted.len() as f64
    }
}

/// Queryable law of `f = |<X, v>|`.
#[derive(Debug, Clone, PartialEq)]
pub enum MarginalCdf {
    Analytic(AnalyticMarginal),
    Empirical(EmpiricalMarginal),
}

impl MarginalCdf {
    /// The law of `|<X, v>|` under `spec`: closed form for Gaussian laws and
    /// for directions with a single nonzero coordinate, otherwise a sorted
    /// reference sample of `reference_size` draws keyed by `seed`.
    pub fn for_direction(spec: &DistributionSpec, v: &[f64], reference_size: usize, seed: u64) -> Result<Self> {
        if v.len() != spec.dim {
            return Err(Error::DimensionMismatch { expected: spec.dim, got: v.len() });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index: v.iter().position(|x| !x.is_finite()).unwrap_or(0) });
        }
        let norm = euclidean_norm(v);
        if norm == 0.0 {
            return Err(Error::DegenerateDirection);
        }
        if spec.law == Law::Gaussian {
            return Ok(MarginalCdf::Analytic(AnalyticMarginal::FoldedNormal { scale: norm }));
        }
        let mut nonzero = v.iter().filter(|x| **x != 0.0);
        if let (Some(&w), None) = (nonzero.next(), nonzero.next()) {
            return Ok(MarginalCdf::Analytic(spec.law.scaled_marginal(w)));
        }
        if reference_size == 0 {
            return Err(Error::Parameter("reference sample size must be >= 1".into()));
        }
        let sampler = spec.law.coordinate_sampler();
        let mut rng = rng_for(seed, &[purpose::REFERENCE]);
        let values: Vec<f64> =
            (0..reference_size).map(|_| v.iter().map(|w| w * sampler.draw(&mut rng)).sum::<f64>().abs()).collect();
        Ok(MarginalCdf::Empirical(EmpiricalMarginal::from_values(&values, Some(seed))?))
    }

    /// Treats `values` themselves as the law, so that `P_N = P` exactly.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        Ok(MarginalCdf::Empirical(EmpiricalMarginal::from_values(values, None)?))
    }

    pub fn is_analytic(&self) -> bool {
        matches!(self, MarginalCdf::Analytic(_))
    }

    pub fn mode(&self) -> &'static str {
        match self {
            MarginalCdf::Analytic(_) => "analytic",
            MarginalCdf::Empirical(_) => "empirical",
        }
    }

    /// `P(f > t)`.
    #[inline]
    pub fn sf(&self, t: f64) -> f64 {
        match self {
            MarginalCdf::Analytic(a) => a.sf(t),
            MarginalCdf::Empirical(e) => e.count_greater(t) as f64 / e.len() as f64,
        }
    }

    /// `P(f >= t)`.
    #[inline]
    pub fn sf_left(&self, t: f64) -> f64 {
        match self {
            MarginalCdf::Analytic(a) => a.sf(t),
            MarginalCdf::Empirical(e) => e.count_at_least(t) as f64 / e.len() as f64,
        }
    }

    /// `F(t) = P(f <= t)`.
    pub fn cdf(&self, t: f64) -> f64 {
        1.0 - self.sf(t)
    }

    /// `P(f = t)`; zero for the continuous laws.
    pub fn atom(&self, t: f64) -> f64 {
        match self {
            MarginalCdf::Analytic(_) => 0.0,
            MarginalCdf::Empirical(_) => self.sf_left(t) - self.sf(t),
        }
    }

    /// `P(a < f < b)`.
    pub fn open_mass(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        (self.sf(a) - self.sf_left(b)).max(0.0)
    }

    pub fn tail_index(&self) -> Option<f64> {
        match self {
            MarginalCdf::Analytic(AnalyticMarginal::FoldedStudentT { nu, .. }) => Some(*nu),
            _ => None,
        }
    }

    pub fn support_max(&self) -> f64 {
        match self {
            MarginalCdf::Analytic(AnalyticMarginal::FoldedUniform { half_width }) => *half_width,
            MarginalCdf::Analytic(_) => f64::INFINITY,
            MarginalCdf::Empirical(e) => e.sorted[e.len() - 1],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_folded_tail() {
        let spec = DistributionSpec::parse("gaussian", None, 3).unwrap();
        let v = [0.6, 0.0, 0.8];
        let cdf = MarginalCdf::for_direction(&spec, &v, 10, 0).unwrap();
        assert_eq!(cdf.cdf(0.0), 0.0);
        // two-sided 5% point of the standard normal
        assert!((cdf.sf(1.959_963_984_540_054) - 0.05).abs() < 1e-10);
        assert!((1.0 - cdf.cdf(1.96) - 0.05).abs() < 1e-3);
        assert!(matches!(MarginalCdf::for_direction(&spec, &[0.0; 3], 10, 0), Err(Error::DegenerateDirection)));
    }

    #[test]
    fn coordinate_directions_are_analytic() {
        let spec = DistributionSpec::parse("product_laplace", None, 4).unwrap();
        let cdf = MarginalCdf::for_direction(&spec, &[0.0, -2.0, 0.0, 0.0], 10, 0).unwrap();
        assert_eq!(cdf, MarginalCdf::Analytic(AnalyticMarginal::FoldedLaplace { scale: 2.0 / SQRT_2 }));
        let cdf = MarginalCdf::for_direction(&spec, &[0.5, 0.5, 0.5, 0.5], 1000, 0).unwrap();
        assert!(!cdf.is_analytic());
    }

    #[test]
    fn empirical_queries() {
        let e = MarginalCdf::from_values(&[3.0, 1.0, 2.0, 2.0]).unwrap();
        assert_eq!(e.sf(0.5), 1.0);
        assert_eq!(e.cdf(0.5), 0.0); // below the minimum
        assert_eq!(e.sf(2.0), 0.25);
        assert_eq!(e.sf_left(2.0), 0.75);
        assert_eq!(e.atom(2.0), 0.5);
        assert_eq!(e.open_mass(1.0, 3.0), 0.5);
        assert_eq!(e.open_mass(1.5, 2.5), 0.5);
        assert_eq!(e.open_mass(2.0, 3.0), 0.0);
        if let MarginalCdf::Empirical(emp) = &e {
            assert_eq!(emp.quantile(0.25), 3.0);
            assert_eq!(emp.quantile(0.5), 2.0);
            assert_eq!(emp.quantile(0.99), 1.0);
            // int_0^inf 2t S(t) dt = E f^2 = (9 + 1 + 4 + 4) / 4
            assert!((emp.power_sf_integral(2.0, f64::INFINITY, 1.0) - 4.5).abs() < 1e-14);
            assert!((emp.moment(2.0) - 4.5).abs() < 1e-14);
            assert!((emp.upper_moment(2.0, 2.0, false) - 2.25).abs() < 1e-14);
            assert!((emp.upper_moment(2.0, 2.0, true) - 4.25).abs() < 1e-14);
        }
    }

    #[test]
    fn empirical_reference_is_reproducible_and_monotone() {
        let spec = DistributionSpec::parse("cube_uniform", None, 3).unwrap();
        let v = [0.3, -0.4, 0.5];
        let a = MarginalCdf::for_direction(&spec, &v, 20_000, 5).unwrap();
        let b = MarginalCdf::for_direction(&spec, &v, 20_000, 5).unwrap();
        assert_eq!(a, b);
        let grid: Vec<f64> = (0..200).map(|i| i as f64 * 0.02).collect();
        for w in grid.windows(2) {
            assert!(a.cdf(w[0]) <= a.cdf(w[1]));
        }
    }

    #[test]
    fn analytic_moments_and_tails() {
        let laws = [
            AnalyticMarginal::FoldedNormal { scale: 1.3 },
            AnalyticMarginal::FoldedUniform { half_width: 2.0 },
            AnalyticMarginal::FoldedLaplace { scale: 0.7 },
            AnalyticMarginal::FoldedStudentT { scale: 0.8, nu: 7.0 },
        ];
        for law in laws {
            // tail bound at 0 dominates the full moment
            let m = law.moment(2.0).unwrap();
            assert!(
                law.tail_mass_bound(2.0, 1.0, 0.0) >= m * (1.0 - 1e-12)
                    || matches!(law, AnalyticMarginal::FoldedStudentT { .. }),
                "{law:?}"
            );
            assert_eq!(law.sf(-1.0), 1.0);
            assert!((law.sf(0.0) - 1.0).abs() < 1e-15);
        }
        // exponential: P(f > t) = e^{-t}
        let e = AnalyticMarginal::FoldedLaplace { scale: 1.0 };
        assert!((e.sf(2.0) - (-2.0f64).exp()).abs() < 1e-15);
    }
}
