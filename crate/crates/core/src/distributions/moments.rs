//! Ground-truth `E|<X, v>|^p` for the product laws.
//!
//! Routes, in order of preference:
//! * closed form (Gaussian, or a single nonzero coordinate);
//! * even integer `p`: exact moment convolution over coordinates;
//! * `p = 1` or `2 < p <= 3` for cube/Laplace products: the
//!   characteristic-function identity
//!   `E|Y|^p = (2 Gamma(p+1) |sin(pi p/2)| / pi) int_0^inf g(t) t^(-p-1) dt`
//!   with `g = 1 - phi` (p < 2) or `g = phi - 1 + t^2/2` (2 < p < 4);
//! * Monte Carlo otherwise.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::{euclidean_norm, DistributionSpec, Law};
use crate::error::{param_err, Error, Result};
use crate::quadrature::integrate_dyadic;
use crate::seed::{purpose, rng_for};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentMethod {
    Analytic,
    MomentConvolution,
    CharacteristicFunction,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub value: f64,
    /// Standard error for Monte Carlo estimates, numerical error bound otherwise.
    pub std_error: f64,
    pub method: MomentMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentOptions {
    pub mc_draws: usize,
    pub seed: u64,
    /// Skip the deterministic routes (used to cross-check them).
    pub force_monte_carlo: bool,
}

impl Default for MomentOptions {
    fn default() -> Self {
        Self { mc_draws: 10_000_000, seed: 0x005e_ed0f_7e57, force_monte_carlo: false }
    }
}

pub fn true_p_moment(spec: &DistributionSpec, v: &[f64], p: f64) -> Result<MomentEstimate> {
    true_p_moment_with(spec, v, p, &MomentOptions::default())
}

pub fn true_p_moment_with(spec: &DistributionSpec, v: &[f64], p: f64, opts: &MomentOptions) -> Result<MomentEstimate> {
    if !(p >= 1.0 && p.is_finite()) {
        return param_err(format!("exponent p must be >= 1, got {p}"));
    }
    if v.len() != spec.dim {
        return Err(Error::DimensionMismatch { expected: spec.dim, got: v.len() });
    }
    if let Some(nu) = spec.law.nu() {
        if p >= nu {
            return Err(Error::MomentDoesNotExist { p, nu });
        }
    }
    let norm = euclidean_norm(v);
    let exact = |value: f64, method| Ok(MomentEstimate { value, std_error: 0.0, method });
    if norm == 0.0 {
        return exact(0.0, MomentMethod::Analytic);
    }
    if opts.force_monte_carlo {
        return monte_carlo(spec, v, p, opts);
    }
    if spec.law == Law::Gaussian {
        return exact(norm.powf(p) * Law::Gaussian.coordinate_abs_moment(p)?, MomentMethod::Analytic);
    }
    let nonzero: Vec<f64> = v.iter().copied().filter(|x| *x != 0.0).collect();
    if nonzero.len() == 1 {
        return exact(nonzero[0].abs().powf(p) * spec.law.coordinate_abs_moment(p)?, MomentMethod::Analytic);
    }
    if p.fract() == 0.0 && (p as u64).is_multiple_of(2) && p <= 64.0 {
        return exact(even_moment(spec.law, &nonzero, p as usize)?, MomentMethod::MomentConvolution);
    }
    if matches!(spec.law, Law::CubeUniform | Law::ProductLaplace) && (p == 1.0 || (p > 2.0 && p <= 3.0)) {
        let unit: Vec<f64> = nonzero.iter().map(|x| x / norm).collect();
        let (value, err) = characteristic_moment(spec.law, &unit, p);
        return Ok(MomentEstimate {
            value: value * norm.powf(p),
            std_error: err * norm.powf(p),
            method: MomentMethod::CharacteristicFunction,
        });
    }
    monte_carlo(spec, v, p, opts)
}

fn monte_carlo(spec: &DistributionSpec, v: &[f64], p: f64, opts: &MomentOptions) -> Result<MomentEstimate> {
    if opts.mc_draws < 2 {
        return param_err("Monte Carlo needs at least two draws");
    }
    let sampler = spec.law.coordinate_sampler();
    let mut rng = rng_for(opts.seed, &[purpose::MONTE_CARLO]);
    // Welford accumulation
    let (mut mean, mut m2) = (0.0f64, 0.0f64);
    for k in 0..opts.mc_draws {
        let y: f64 = v.iter().map(|w| w * sampler.draw(&mut rng)).sum::<f64>().abs().powf(p);
        let delta = y - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (y - mean);
    }
    let var = m2 / (opts.mc_draws - 1) as f64;
    Ok(MomentEstimate { value: mean, std_error: (var / opts.mc_draws as f64).sqrt(), method: MomentMethod::MonteCarlo })
}

/// `E Y^(2j)` for one standardized coordinate.
fn coordinate_even_moment(law: Law, two_j: usize) -> Result<f64> {
    law.coordinate_abs_moment(two_j as f64)
}

/// `E (sum w_i Y_i)^p` for even `p` by convolving raw moment sequences.
fn even_moment(law: Law, w: &[f64], p: usize) -> Result<f64> {
    let coord: Vec<f64> =
        (0..=p).map(|j| if j % 2 == 1 { Ok(0.0) } else { coordinate_even_moment(law, j) }).collect::<Result<_>>()?;
    let mut binom = vec![vec![1.0f64; p + 1]; p + 1];
    for n in 1..=p {
        for k in 1..n {
            binom[n][k] = binom[n - 1][k - 1] + binom[n - 1][k];
        }
    }
    let mut acc = vec![0.0f64; p + 1];
    acc[0] = 1.0;
    for &wi in w {
        let mut next = vec![0.0f64; p + 1];
        for (n, slot) in next.iter_mut().enumerate().step_by(2) {
            *slot = (0..=n).step_by(2).map(|j| binom[n][j] * acc[n - j] * wi.powi(j as i32) * coord[j]).sum();
        }
        acc = next;
    }
    Ok(acc[p])
}

/// `log phi(s) + s^2/2` for one coordinate, or `None` where `phi(s) <= 0`.
fn log_char_excess(law: Law, s: f64) -> Option<f64> {
    match law {
        Law::Gaussian => Some(0.0),
        Law::ProductLaplace => {
            let x = 0.5 * s * s;
            Some(if x < 1e-3 { x * x * (0.5 - x * (1.0 / 3.0 - x * (0.25 - x * 0.2))) } else { x - x.ln_1p() })
        }
        Law::CubeUniform => {
            let a = 3f64.sqrt() * s.abs();
            if a < 0.5 {
                let a2 = a * a;
                // log(sin a / a) + a^2/6
                Some(
                    -a2 * a2
                        * (1.0 / 180.0
                            + a2 * (1.0 / 2835.0
                                + a2 * (1.0 / 37800.0 + a2 * (1.0 / 467775.0 + a2 * 691.0 / 3831077250.0)))),
                )
            } else if a < PI {
                Some((a.sin() / a).ln() + a * a / 6.0)
            } else {
                None
            }
        }
        Law::ProductStudentT { .. } => None,
    }
}

fn char_fn(law: Law, s: f64) -> f64 {
    match law {
        Law::Gaussian => (-0.5 * s * s).exp(),
        Law::ProductLaplace => 1.0 / (1.0 + 0.5 * s * s),
        Law::CubeUniform => {
            let a = 3f64.sqrt() * s;
            if a == 0.0 {
                1.0
            } else {
                a.sin() / a
            }
        }
        Law::ProductStudentT { .. } => f64::NAN,
    }
}

fn char_envelope(law: Law, s: f64) -> f64 {
    match law {
        Law::ProductLaplace => 1.0 / (1.0 + 0.5 * s * s),
        Law::CubeUniform => (1.0 / (3f64.sqrt() * s.abs())).min(1.0),
        _ => (-0.5 * s * s).exp(),
    }
}

/// `(phi(t) - 1, phi(t) - 1 + t^2/2)` for the unit direction `w`, computed
/// without cancellation near `t = 0`.
fn char_deficits(law: Law, w: &[f64], t: f64) -> (f64, f64) {
    let mut excess = 0.0;
    let mut stable = true;
    for &wi in w {
        match log_char_excess(law, wi * t) {
            Some(r) => excess += r,
            None => {
                stable = false;
                break;
            }
        }
    }
    let half_t2 = 0.5 * t * t;
    if stable {
        let log_phi = excess - half_t2;
        if log_phi.abs() < 1.0 {
            let em1 = log_phi.exp_m1();
            let second = if log_phi.abs() < 1e-2 {
                let l = log_phi;
                l * l * (0.5 + l * (1.0 / 6.0 + l * (1.0 / 24.0 + l * (1.0 / 120.0 + l / 720.0))))
            } else {
                em1 - log_phi
            };
            return (em1, excess + second);
        }
    }
    let phi: f64 = w.iter().map(|&wi| char_fn(law, wi * t)).product();
    (phi - 1.0, phi - 1.0 + half_t2)
}

/// `E|<Y, w>|^p` for a unit vector `w`; returns (value, error estimate).
fn characteristic_moment(law: Law, w: &[f64], p: f64) -> (f64, f64) {
    let m4: f64 = {
        let c4 = law.coordinate_abs_moment(4.0).unwrap_or(3.0);
        let s4: f64 = w.iter().map(|x| x.powi(4)).sum();
        3.0 + (c4 - 3.0) * s4
    };
    let low_order = p < 2.0;
    let integrand = |t: f64| -> f64 {
        if t == 0.0 {
            return if low_order {
                if p == 1.0 {
                    0.5
                } else {
                    f64::INFINITY
                }
            } else if p < 3.0 {
                0.0
            } else if p == 3.0 {
                m4 / 24.0
            } else {
                f64::INFINITY
            };
        }
        let (d1, d2) = char_deficits(law, w, t);
        if low_order {
            -d1 / t.powf(p + 1.0)
        } else {
            d2 / t.powf(p + 1.0)
        }
    };
    let envelope = |t: f64| w.iter().map(|&wi| char_envelope(law, wi * t)).product::<f64>();
    // bound on the phi-dependent part of the integrand beyond t
    let phi_tail = |t: f64| envelope(t) * t.powf(-p) / p;
    let r = integrate_dyadic(&integrand, f64::INFINITY, 0.5, &phi_tail, 1e-14, 1e-12);
    // the phi-free part of the integrand beyond the cut-off, in closed form
    let u = r.covered_to;
    let poly_tail = if low_order { u.powf(-p) / p } else { u.powf(2.0 - p) / (2.0 * (p - 2.0)) - u.powf(-p) / p };
    let constant = 2.0 * ln_gamma(p + 1.0).exp() * (PI * p / 2.0).sin().abs() / PI;
    (constant * (r.value + poly_tail), constant * (r.error_estimate + r.truncation_bound))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_analytic_values() {
        let spec = DistributionSpec::parse("gaussian", None, 3).unwrap();
        let v = [0.0, 0.6, 0.8];
        assert!((true_p_moment(&spec, &v, 2.0).unwrap().value - 1.0).abs() < 1e-14);
        assert!((true_p_moment(&spec, &v, 4.0).unwrap().value - 3.0).abs() < 1e-13);
        let v2 = [0.0, 1.2, 1.6]; // norm 2
        assert!((true_p_moment(&spec, &v2, 2.0).unwrap().value - 4.0).abs() < 1e-13);
    }

    #[test]
    fn student_t_fourth_moment() {
        let spec = DistributionSpec::parse("product_student_t", Some(10.0), 4).unwrap();
        let e1 = [1.0, 0.0, 0.0, 0.0];
        let m = true_p_moment(&spec, &e1, 4.0).unwrap();
        assert_eq!(m.method, MomentMethod::Analytic);
        assert!((m.value - 4.0).abs() < 1e-12);
        assert!(matches!(true_p_moment(&spec, &e1, 10.0), Err(Error::MomentDoesNotExist { .. })));
    }

    #[test]
    fn even_moments_by_convolution() {
        // E(w1 Y1 + w2 Y2)^4 = m4 (w1^4 + w2^4) + 6 w1^2 w2^2
        let spec = DistributionSpec::parse("product_laplace", None, 2).unwrap();
        let w = [0.6, 0.8];
        let m = true_p_moment(&spec, &w, 4.0).unwrap();
        assert_eq!(m.method, MomentMethod::MomentConvolution);
        let expect = 6.0 * (0.6f64.powi(4) + 0.8f64.powi(4)) + 6.0 * 0.36 * 0.64;
        assert!((m.value - expect).abs() < 1e-13);
        assert!((true_p_moment(&spec, &w, 2.0).unwrap().value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn characteristic_route_recovers_gaussian() {
        let d = 5;
        let w: Vec<f64> = (0..d).map(|i| (i + 1) as f64).collect();
        let n = euclidean_norm(&w);
        let w: Vec<f64> = w.iter().map(|x| x / n).collect();
        for p in [1.0, 2.5, 3.0] {
            let (val, _) = characteristic_moment(Law::Gaussian, &w, p);
            let exact = Law::Gaussian.coordinate_abs_moment(p).unwrap();
            assert!((val - exact).abs() < 1e-9 * exact, "p={p}: {val} vs {exact}");
        }
    }
}
