//! Order statistics and the trimmed p-th moment functional.
//!
//! `psi` averages the p-th powers of a sample after discarding the
//! `ceil(theta * N) - 1` largest of them; the empirical threshold `hat_q` is
//! the `ceil(theta * N)`-th largest magnitude.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{param_err, Error, Result};
use crate::sample::SampleMatrix;
use crate::scalar::Scalar;

const PAIRWISE_BLOCK: usize = 8;

/// Tree summation; the rounding error grows like `log2(len)` instead of `len`.
pub fn pairwise_sum<T: Scalar>(xs: &[T]) -> T {
    if xs.len() <= PAIRWISE_BLOCK {
        return xs.iter().cloned().fold(T::zero(), |acc, x| acc + x);
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

fn check_finite<T: Scalar>(xs: &[T]) -> Result<()> {
    match xs.iter().position(|x| !x.is_finite_scalar()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

/// `ceil(theta * n)`, snapping products that land within rounding distance
/// of an integer (so `theta = 1/n` gives 1, not 2).
pub fn first_kept_rank(theta: f64, n: usize) -> usize {
    let x = theta * n as f64;
    let r = x.round();
    let k = if (x - r).abs() <= 1e-9 * r.max(1.0) { r } else { x.ceil() };
    k.max(1.0) as usize
}

/// Trim parameters `(p, theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrimSpec {
    pub p: f64,
    pub theta: f64,
}

impl TrimSpec {
    pub fn new(p: f64, theta: f64) -> Result<Self> {
        if !(p.is_finite() && p >= 1.0) {
            return param_err(format!("exponent p must be >= 1, got {p}"));
        }
        if !(theta > 0.0 && theta < 1.0) {
            return param_err(format!("trim fraction must lie in (0, 1), got {theta}"));
        }
        Ok(Self { p, theta })
    }

    /// Checks `1/N <= theta` and that at least one value survives the trim.
    pub fn validate_for(&self, n: usize) -> Result<()> {
        if n == 0 {
            return param_err("empty sample");
        }
        if self.theta * (n as f64) < 1.0 - 1e-9 {
            return param_err(format!("trim fraction {} is below 1/N for N = {n}", self.theta));
        }
        if self.first_kept_rank(n) > n {
            return param_err(format!("trim fraction {} keeps nothing at N = {n}", self.theta));
        }
        Ok(())
    }

    /// 1-based rank `k0 = ceil(theta N)` of the largest value that is kept.
    pub fn first_kept_rank(&self, n: usize) -> usize {
        first_kept_rank(self.theta, n)
    }

    /// Number of values discarded from the top.
    pub fn dropped(&self, n: usize) -> usize {
        self.first_kept_rank(n) - 1
    }
}

/// Default trim fraction for a target accuracy: `max(c0 * eps^2, 1/N)`.
pub fn theta_from_epsilon(epsilon: f64, c0: f64, n: usize) -> f64 {
    (c0 * epsilon * epsilon).max(1.0 / n as f64)
}

/// `(|<X_i, v>|)_i` in row order.
pub fn project_abs<T: Scalar>(sample: &SampleMatrix<T>, v: &[T]) -> Result<Vec<T>> {
    if v.len() != sample.dim() {
        return Err(Error::DimensionMismatch { expected: sample.dim(), got: v.len() });
    }
    check_finite(v)?;
    Ok(sample
        .rows()
        .map(|row| row.iter().zip(v).fold(T::zero(), |acc, (x, w)| acc + x.clone() * w.clone()).abs())
        .collect())
}

fn descending<T: PartialOrd>(a: &T, b: &T) -> Ordering {
    b.partial_cmp(a).unwrap_or(Ordering::Equal)
}

/// Absolute values sorted in non-increasing order. The sort is stable, so
/// ties keep their input order.
pub fn nonincreasing_rearrangement<T: Scalar>(z: &[T]) -> Result<Vec<T>> {
    check_finite(z)?;
    let mut out: Vec<T> = z.iter().map(|x| x.abs()).collect();
    out.sort_by(descending);
    Ok(out)
}

fn powers<T: Scalar>(sorted: &[T], p: f64) -> Result<Vec<T>> {
    sorted.iter().map(|x| x.pow_p(p).ok_or(Error::UnsupportedExponent(p))).collect()
}

fn divide_by_len<T: Scalar>(sum: T, n: usize) -> Result<T> {
    let n = T::from_usize(n).ok_or_else(|| Error::Parameter("sample size not representable".into()))?;
    Ok(sum / n)
}

/// Trimmed p-th moment of the magnitudes `values_abs`.
pub fn psi<T: Scalar>(values_abs: &[T], spec: &TrimSpec) -> Result<T> {
    let n = values_abs.len();
    spec.validate_for(n)?;
    let sorted = nonincreasing_rearrangement(values_abs)?;
    let kept = powers(&sorted[spec.dropped(n)..], spec.p)?;
    divide_by_len(pairwise_sum(&kept), n)
}

/// Plain empirical p-th moment `(1/N) sum |z_i|^p`.
pub fn empirical_p_mean<T: Scalar>(values_abs: &[T], p: f64) -> Result<T> {
    if !(p.is_finite() && p >= 1.0) {
        return param_err(format!("exponent p must be >= 1, got {p}"));
    }
    if values_abs.is_empty() {
        return param_err("empty sample");
    }
    // Summed in the same (non-increasing) order as `psi`, so an untrimmed
    // `psi` reproduces this value bit for bit.
    let sorted = nonincreasing_rearrangement(values_abs)?;
    divide_by_len(pairwise_sum(&powers(&sorted, p)?), values_abs.len())
}

/// The `ceil(theta N)`-th largest magnitude.
pub fn empirical_hat_q<T: Scalar>(values_abs: &[T], theta: f64) -> Result<T> {
    let n = values_abs.len();
    if n == 0 {
        return param_err("empty sample");
    }
    if !(theta < 1.0 && theta * n as f64 >= 1.0 - 1e-9) {
        return param_err(format!("trim fraction must satisfy 1/N <= theta < 1, got {theta}"));
    }
    let k0 = first_kept_rank(theta, n);
    if k0 > n {
        return param_err(format!("rank {k0} exceeds sample size {n}"));
    }
    let sorted = nonincreasing_rearrangement(values_abs)?;
    Ok(sorted[k0 - 1].clone())
}
