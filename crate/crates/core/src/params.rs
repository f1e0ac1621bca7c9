//! Ratio-property parameters `(delta, lambda, C)` and the trim fractions
//! `theta1 > theta > theta2` they induce.

use serde::{Deserialize, Serialize};

use crate::error::{param_err, Result};

/// Parameters of the ratio properties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioParams {
    pub delta: f64,
    pub lambda: f64,
    pub big_c: f64,
}

impl RatioParams {
    pub fn new(delta: f64, lambda: f64, big_c: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 0.5) {
            return param_err(format!("delta must lie in (0, 1/2], got {delta}"));
        }
        if !(lambda > 0.0 && lambda < 1.0) {
            return param_err(format!("lambda must lie in (0, 1), got {lambda}"));
        }
        if !(big_c >= 1.0 && big_c.is_finite()) {
            return param_err(format!("C must be >= 1, got {big_c}"));
        }
        Ok(Self { delta, lambda, big_c })
    }

    /// `lambda = 1/2`, `C = 2`.
    pub fn standard(delta: f64) -> Result<Self> {
        Self::new(delta, 0.5, 2.0)
    }

    pub fn derive(&self, theta: f64) -> Result<DerivedThetas> {
        derived_thetas(theta, self.delta, self.lambda, self.big_c)
    }
}

/// Which precondition on `theta` the lemma validators enforce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GateRule {
    /// `theta >= 4 delta max(1 + lambda, C + 3/2)`.
    Theorem,
    /// The conditions the arguments actually consume:
    /// `theta >= (C + 3/2) delta` and `theta2 >= 2 delta`.
    #[default]
    Proof,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedThetas {
    pub theta: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub theorem_gate: bool,
    pub proof_gate: bool,
}

impl DerivedThetas {
    pub fn gate(&self, rule: GateRule) -> bool {
        match rule {
            GateRule::Theorem => self.theorem_gate,
            GateRule::Proof => self.proof_gate,
        }
    }
}

/// `theta1 = (theta + 2 C delta) / (1 - lambda)`,
/// `theta2 = (theta - 2 C delta) / (1 + lambda)`.
///
/// `delta = 0` is accepted here as a degenerate case.
pub fn derived_thetas(theta: f64, delta: f64, lambda: f64, big_c: f64) -> Result<DerivedThetas> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return param_err(format!("lambda must lie in (0, 1), got {lambda}"));
    }
    if !(delta >= 0.0) || !(big_c >= 1.0) {
        return param_err("delta must be >= 0 and C >= 1");
    }
    if theta <= 2.0 * big_c * delta {
        return param_err(format!(
            "theta = {theta} must exceed 2 C delta = {}; theta2 would be nonpositive",
            2.0 * big_c * delta
        ));
    }
    let theta1 = (theta + 2.0 * big_c * delta) / (1.0 - lambda);
    let theta2 = (theta - 2.0 * big_c * delta) / (1.0 + lambda);
    let theorem_gate = theta >= 4.0 * delta * (1.0 + lambda).max(big_c + 1.5);
    let proof_gate = theta >= (big_c + 1.5) * delta && theta2 >= 2.0 * delta;
    Ok(DerivedThetas { theta, theta1, theta2, theorem_gate, proof_gate })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn formula_examples() {
        let d = derived_thetas(0.1, 0.01, 0.5, 2.0).unwrap();
        assert!(close(d.theta1, 0.28, 1e-15) && close(d.theta2, 0.04, 1e-15));
        assert!(d.proof_gate);
        assert!(!d.theorem_gate); // 0.1 < 4 * 0.01 * 3.5

        let d = derived_thetas(0.1, 0.0, 0.5, 2.0).unwrap();
        assert!(close(d.theta1, 0.2, 1e-15) && close(d.theta2, 0.1 / 1.5, 1e-15));

        assert!(derived_thetas(0.05, 0.02, 0.5, 2.0).is_err());
    }

    #[test]
    fn theorem_gate_implies_theta2_at_least_two_delta() {
        for &delta in &[0.001, 0.01, 0.05] {
            for &lambda in &[0.1, 0.5, 0.9] {
                for &c in &[1.0, 2.0, 5.0] {
                    let theta = 4.0 * delta * (1.0f64 + lambda).max(c + 1.5);
                    let d = derived_thetas(theta, delta, lambda, c).unwrap();
                    assert!(d.theorem_gate);
                    assert!(d.theta2 >= 2.0 * delta);
                    assert!(d.proof_gate);
                }
            }
        }
    }

    #[test]
    fn params_validation() {
        assert!(RatioParams::new(0.6, 0.5, 2.0).is_err());
        assert!(RatioParams::new(0.0, 0.5, 2.0).is_err());
        assert!(RatioParams::new(0.1, 1.0, 2.0).is_err());
        assert!(RatioParams::new(0.1, 0.5, 0.5).is_err());
        assert!(RatioParams::standard(0.5).is_ok());
    }
}
