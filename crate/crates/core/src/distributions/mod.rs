//! Isotropic product laws, their marginals, and direction sets.
//!
//! Every law is centred with identity covariance: cube coordinates are
//! uniform on `[-sqrt 3, sqrt 3]`, Laplace coordinates have scale
//! `1/sqrt 2`, and Student-t coordinates are multiplied by
//! `sqrt((nu - 2)/nu)`.

mod marginal;
mod moments;

use std::f64::consts::{PI, SQRT_2};
use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal, StudentT, Uniform};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{param_err, Error, Result};
use crate::sample::SampleMatrix;
use crate::seed::rng_for;

pub use marginal::{AnalyticMarginal, EmpiricalMarginal, MarginalCdf, DEFAULT_REFERENCE_SIZE};
pub use moments::{true_p_moment, true_p_moment_with, MomentEstimate, MomentMethod, MomentOptions};

const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// Named coordinate law of a product measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Law {
    Gaussian,
    CubeUniform,
    ProductLaplace,
    ProductStudentT { nu: f64 },
}

impl Law {
    /// Parses `gaussian`, `cube_uniform`, `product_laplace` or
    /// `product_student_t` (which needs `nu > 2`).
    pub fn parse(name: &str, nu: Option<f64>) -> Result<Self> {
        let law = match name {
            "gaussian" => Law::Gaussian,
            "cube_uniform" => Law::CubeUniform,
            "product_laplace" => Law::ProductLaplace,
            "product_student_t" | "student_t" => Law::ProductStudentT { nu: nu.unwrap_or(4.5) },
            other => return Err(Error::UnknownDistribution(other.to_string())),
        };
        law.validate()?;
        Ok(law)
    }

    pub fn validate(&self) -> Result<()> {
        if let Law::ProductStudentT { nu } = *self {
            if !(nu > 2.0 && nu.is_finite()) {
                return param_err(format!("student-t needs nu > 2 for unit variance, got {nu}"));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            Law::Gaussian => "gaussian",
            Law::CubeUniform => "cube_uniform",
            Law::ProductLaplace => "product_laplace",
            Law::ProductStudentT { .. } => "product_student_t",
        }
    }

    pub fn nu(&self) -> Option<f64> {
        match *self {
            Law::ProductStudentT { nu } => Some(nu),
            _ => None,
        }
    }

    pub fn is_log_concave(&self) -> bool {
        !matches!(self, Law::ProductStudentT { .. })
    }

    /// Polynomial tail exponent, if any.
    pub fn tail_index(&self) -> Option<f64> {
        self.nu()
    }

    /// Whether `E|Y|^p` is finite for a coordinate.
    pub fn has_moment(&self, p: f64) -> bool {
        self.nu().is_none_or(|nu| p < nu)
    }

    fn student_scale(nu: f64) -> f64 {
        ((nu - 2.0) / nu).sqrt()
    }

    /// `E|Y|^p` of one standardized coordinate.
    pub fn coordinate_abs_moment(&self, p: f64) -> Result<f64> {
        Ok(match *self {
            Law::Gaussian => ((p / 2.0) * 2f64.ln() + ln_gamma((p + 1.0) / 2.0)).exp() / PI.sqrt(),
            Law::CubeUniform => 3f64.powf(p / 2.0) / (p + 1.0),
            Law::ProductLaplace => (ln_gamma(p + 1.0) - (p / 2.0) * 2f64.ln()).exp(),
            Law::ProductStudentT { nu } => {
                if p >= nu {
                    return Err(Error::MomentDoesNotExist { p, nu });
                }
                ((p / 2.0) * (nu - 2.0).ln() + ln_gamma((p + 1.0) / 2.0) + ln_gamma((nu - p) / 2.0)
                    - ln_gamma(nu / 2.0))
                .exp()
                    / PI.sqrt()
            }
        })
    }

    /// Law of `|w Y|` for a single coordinate `Y`.
    pub fn scaled_marginal(&self, w: f64) -> AnalyticMarginal {
        let s = w.abs();
        match *self {
            Law::Gaussian => AnalyticMarginal::FoldedNormal { scale: s },
            Law::CubeUniform => AnalyticMarginal::FoldedUniform { half_width: SQRT_3 * s },
            Law::ProductLaplace => AnalyticMarginal::FoldedLaplace { scale: s / SQRT_2 },
            Law::ProductStudentT { nu } => AnalyticMarginal::FoldedStudentT { scale: s * Self::student_scale(nu), nu },
        }
    }

    fn coordinate_sampler(&self) -> CoordinateSampler {
        match *self {
            Law::Gaussian => CoordinateSampler::Normal,
            Law::CubeUniform => {
                CoordinateSampler::Uniform(Uniform::new_inclusive(-SQRT_3, SQRT_3).expect("finite bounds"))
            }
            Law::ProductLaplace => CoordinateSampler::Laplace,
            Law::ProductStudentT { nu } => {
                CoordinateSampler::StudentT(StudentT::new(nu).expect("nu validated"), Self::student_scale(nu))
            }
        }
    }
}

impl fmt::Display for Law {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Law::ProductStudentT { nu } => write!(f, "product_student_t({nu})"),
            other => f.write_str(other.name()),
        }
    }
}

enum CoordinateSampler {
    Normal,
    Uniform(Uniform<f64>),
    Laplace,
    StudentT(StudentT<f64>, f64),
}

impl CoordinateSampler {
    #[inline]
    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            CoordinateSampler::Normal => StandardNormal.sample(rng),
            CoordinateSampler::Uniform(u) => u.sample(rng),
            CoordinateSampler::Laplace => {
                let e: f64 = Exp1.sample(rng);
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                sign * e / SQRT_2
            }
            CoordinateSampler::StudentT(t, scale) => t.sample(rng) * scale,
        }
    }
}

/// `||<X,v>||_q <= L ||<X,v>||_p` for every direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEquivalence {
    pub p: f64,
    pub q: f64,
    pub l: f64,
}

/// A named isotropic product law on R^d.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionSpec {
    pub law: Law,
    pub dim: usize,
    pub moment_equiv: Option<MomentEquivalence>,
}

impl DistributionSpec {
    /// Attaches the `L_4 - L_2` equivalence constant. For a product of
    /// symmetric unit-variance coordinates with fourth moment `m4`,
    /// `E<X,v>^4 = 3 + (m4 - 3) sum v_i^4` on the unit sphere, so the sharp
    /// constant is `max(m4, 3)^(1/4)`.
    pub fn new(law: Law, dim: usize) -> Result<Self> {
        law.validate()?;
        if dim == 0 {
            return param_err("dimension must be >= 1");
        }
        let moment_equiv = if law.has_moment(4.0) {
            let m4 = law.coordinate_abs_moment(4.0)?;
            let m4 = if dim == 1 { m4 } else { m4.max(3.0) };
            Some(MomentEquivalence { p: 2.0, q: 4.0, l: m4.powf(0.25) })
        } else {
            None
        };
        Ok(Self { law, dim, moment_equiv })
    }

    pub fn parse(name: &str, nu: Option<f64>, dim: usize) -> Result<Self> {
        Self::new(Law::parse(name, nu)?, dim)
    }

    pub fn name(&self) -> String {
        self.law.to_string()
    }
}

/// `n` i.i.d. rows from `spec`; identical `(spec, n, seed)` give identical bits.
pub fn draw_sample(spec: &DistributionSpec, n: usize, seed: u64) -> Result<SampleMatrix<f64>> {
    if n == 0 {
        return param_err("sample size must be >= 1");
    }
    spec.law.validate()?;
    let sampler = spec.law.coordinate_sampler();
    let mut rng = rng_for(seed, &[]);
    let data: Vec<f64> = (0..n * spec.dim).map(|_| sampler.draw(&mut rng)).collect();
    SampleMatrix::from_flat(data, n, spec.dim, seed, spec.name())
}

/// `m` i.i.d. uniform directions on the unit sphere in R^d.
pub fn sphere_directions(d: usize, m: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if d == 0 || m == 0 {
        return param_err("sphere_directions needs d >= 1 and m >= 1");
    }
    let mut rng = rng_for(seed, &[]);
    let mut out = Vec::with_capacity(m);
    while out.len() < m {
        let g: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-150 {
            out.push(g.into_iter().map(|x| x / norm).collect());
        }
    }
    Ok(out)
}

/// The `2d` signed coordinate directions `+-e_i`.
pub fn signed_coordinate_directions(d: usize) -> Vec<Vec<f64>> {
    (0..2 * d)
        .map(|k| {
            let mut v = vec![0.0; d];
            v[k / 2] = if k % 2 == 0 { 1.0 } else { -1.0 };
            v
        })
        .collect()
}

pub(crate) fn euclidean_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn mean_and_cov(sample: &SampleMatrix<f64>) -> (Vec<f64>, Vec<Vec<f64>>) {
        let d = sample.dim();
        let n = sample.n() as f64;
        let mut mean = vec![0.0; d];
        for row in sample.rows() {
            for (m, x) in mean.iter_mut().zip(row) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut cov = vec![vec![0.0; d]; d];
        for row in sample.rows() {
            for i in 0..d {
                for j in 0..d {
                    cov[i][j] += (row[i] - mean[i]) * (row[j] - mean[j]);
                }
            }
        }
        cov.iter_mut().flatten().for_each(|c| *c /= n);
        (mean, cov)
    }

    #[test]
    fn determinism() {
        let spec = DistributionSpec::parse("product_laplace", None, 3).unwrap();
        let a = draw_sample(&spec, 100, 42).unwrap();
        let b = draw_sample(&spec, 100, 42).unwrap();
        assert_eq!(a, b);
        let c = draw_sample(&spec, 100, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn errors() {
        assert!(matches!(Law::parse("cauchy", None), Err(Error::UnknownDistribution(_))));
        assert!(Law::parse("product_student_t", Some(2.0)).is_err());
        let spec = DistributionSpec::parse("gaussian", None, 2).unwrap();
        assert!(draw_sample(&spec, 0, 1).is_err());
    }

    #[test]
    fn cube_support() {
        let spec = DistributionSpec::parse("cube_uniform", None, 4).unwrap();
        let s = draw_sample(&spec, 10_000, 9).unwrap();
        assert!(s.as_flat().iter().all(|x| x.abs() <= SQRT_3));
    }

    #[test]
    fn gaussian_covariance_close_to_identity() {
        let spec = DistributionSpec::parse("gaussian", None, 5).unwrap();
        let s = draw_sample(&spec, 100_000, 2024).unwrap();
        let (_, cov) = mean_and_cov(&s);
        for (i, row) in cov.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((c - target).abs() <= 0.05, "cov[{i}][{j}] = {c}");
            }
        }
    }

    #[test]
    fn every_law_is_isotropic() {
        for law in [
            Law::Gaussian,
            Law::CubeUniform,
            Law::ProductLaplace,
            Law::ProductStudentT { nu: 6.0 },
            Law::ProductStudentT { nu: 4.5 },
        ] {
            let spec = DistributionSpec::new(law, 10).unwrap();
            let s = draw_sample(&spec, 100_000, 77).unwrap();
            let (mean, cov) = mean_and_cov(&s);
            for (i, row) in cov.iter().enumerate() {
                assert!(mean[i].abs() <= 0.05, "{law}: mean[{i}] = {}", mean[i]);
                for (j, c) in row.iter().enumerate() {
                    let target = if i == j { 1.0 } else { 0.0 };
                    assert!((c - target).abs() <= 0.05, "{law}: cov[{i}][{j}] = {c}");
                }
            }
        }
    }

    #[test]
    fn sphere_examples() {
        for v in sphere_directions(7, 200, 5).unwrap() {
            assert!((euclidean_norm(&v) - 1.0).abs() <= 1e-12);
        }
        for v in sphere_directions(1, 50, 5).unwrap() {
            assert!(v[0] == 1.0 || v[0] == -1.0);
        }
        let dirs = sphere_directions(3, 100_000, 11).unwrap();
        for k in 0..3 {
            let m: f64 = dirs.iter().map(|v| v[k]).sum::<f64>() / dirs.len() as f64;
            assert!(m.abs() <= 0.02, "coordinate {k} mean {m}");
        }
        assert!(sphere_directions(0, 1, 0).is_err());
    }

    #[test]
    fn coordinate_moments() {
        let t10 = Law::ProductStudentT { nu: 10.0 };
        assert!((t10.coordinate_abs_moment(4.0).unwrap() - 4.0).abs() < 1e-12);
        assert!((Law::Gaussian.coordinate_abs_moment(4.0).unwrap() - 3.0).abs() < 1e-12);
        for law in [Law::Gaussian, Law::CubeUniform, Law::ProductLaplace, t10] {
            assert!((law.coordinate_abs_moment(2.0).unwrap() - 1.0).abs() < 1e-12, "{law}");
        }
        assert!(matches!(
            Law::ProductStudentT { nu: 4.5 }.coordinate_abs_moment(5.0),
            Err(Error::MomentDoesNotExist { .. })
        ));
    }

    #[test]
    fn equivalence_constants() {
        let g = DistributionSpec::parse("gaussian", None, 5).unwrap();
        assert!((g.moment_equiv.unwrap().l - 3f64.powf(0.25)).abs() < 1e-12);
        let l = DistributionSpec::parse("product_laplace", None, 5).unwrap();
        assert!((l.moment_equiv.unwrap().l - 6f64.powf(0.25)).abs() < 1e-12);
        let t = DistributionSpec::parse("product_student_t", Some(3.5), 5).unwrap();
        assert!(t.moment_equiv.is_none());
    }
}
