//! Domain types and the exact finite-dimensional risk formulas.
//!
//! For a linear model `y = <x, θ₀> + w` with `x ~ N(0, I_p)` and
//! `w ~ N(0, σ₀²)`, both risks of an estimator θ̂ have closed forms:
//!
//! * standard risk: `SR(θ̂) = σ₀²/p + ‖θ̂−θ₀‖²/p`
//! * adversarial risk at test budget ε: obtained by maximizing the squared
//!   loss over `‖δ‖ ≤ ε` feature perturbations, which is attained by pushing
//!   along ±θ̂ and yields an extra `ε²‖θ̂‖²` term plus a half-normal cross term.
//!
//! All operations here are pure functions on immutable inputs.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::math::{dist2_sq, norm2, SQRT_2_OVER_PI};
use crate::Result;

/// Parameters of the limiting problem: aspect ratio δ = n/p, normalized noise
/// σ, normalized signal norm V, training adversary budget ε and test adversary
/// budget ε_test (both in ℓ₂ units of feature space).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticConfig {
    pub delta: f64,
    pub sigma: f64,
    pub v_norm: f64,
    pub eps_train: f64,
    pub eps_test: f64,
}

impl AsymptoticConfig {
    /// Validates `delta > 0` and nonnegativity of the remaining fields.
    pub fn new(delta: f64, sigma: f64, v_norm: f64, eps_train: f64, eps_test: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::invalid(format!("delta must be > 0, got {delta}")));
        }
        for (name, v) in [
            ("sigma", sigma),
            ("v_norm", v_norm),
            ("eps_train", eps_train),
            ("eps_test", eps_test),
        ] {
            if !(v >= 0.0) {
                return Err(Error::invalid(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(Self {
            delta,
            sigma,
            v_norm,
            eps_train,
            eps_test,
        })
    }

    /// Same configuration with a different training budget.
    pub fn with_eps_train(mut self, eps_train: f64) -> Self {
        self.eps_train = eps_train;
        self
    }

    /// Same configuration with a different aspect ratio.
    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }
}

/// A concrete dataset drawn from the Gaussian linear model at size (n, p),
/// under the scaling `σ₀ = σ√p`, `‖θ₀‖² = pV²`.
#[derive(Debug, Clone)]
pub struct FiniteInstance {
    pub n: usize,
    pub p: usize,
    /// n×p design matrix of i.i.d. standard Gaussians.
    pub design: Array2<f64>,
    /// Length-n label vector `y = Xθ₀ + w`.
    pub labels: Array1<f64>,
    /// Length-p true parameter vector.
    pub theta0: Array1<f64>,
    /// Per-sample noise standard deviation.
    pub sigma0: f64,
}

/// Where a (SR, AR) pair came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskSource {
    ParetoTheory,
    SaddleTheory,
    Empirical,
}

/// Which knob swept out the point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnobKind {
    Lambda,
    Epsilon,
}

/// A (standard risk, adversarial risk) pair with provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskPoint {
    pub sr: f64,
    pub ar: f64,
    pub source: RiskSource,
    pub knob: f64,
    pub knob_kind: KnobKind,
}

fn check_dims(theta_hat: &[f64], theta0: &[f64]) -> Result<usize> {
    if theta_hat.len() != theta0.len() {
        return Err(Error::DimensionMismatch {
            left: theta_hat.len(),
            right: theta0.len(),
        });
    }
    if theta_hat.is_empty() {
        return Err(Error::invalid("p must be >= 1"));
    }
    Ok(theta_hat.len())
}

/// Standard risk `σ₀²/p + ‖θ̂−θ₀‖²/p`, exact in double precision.
pub fn standard_risk(theta_hat: &[f64], theta0: &[f64], sigma0: f64) -> Result<f64> {
    let p = check_dims(theta_hat, theta0)? as f64;
    Ok(sigma0 * sigma0 / p + dist2_sq(theta_hat, theta0) / p)
}

/// Adversarial risk at test budget `eps_test`:
///
/// `(σ₀² + ‖θ̂−θ₀‖² + ε²‖θ̂‖²)/p + 2√(2/π)·(ε/√p)·‖θ̂‖·((σ₀²+‖θ̂−θ₀‖²)/p)^{1/2}`
///
/// Coincides with [`standard_risk`] when `eps_test = 0`.
pub fn adversarial_risk(theta_hat: &[f64], theta0: &[f64], sigma0: f64, eps_test: f64) -> Result<f64> {
    if eps_test < 0.0 {
        return Err(Error::invalid(format!("eps_test must be >= 0, got {eps_test}")));
    }
    let p = check_dims(theta_hat, theta0)? as f64;
    let err_sq = dist2_sq(theta_hat, theta0);
    let norm_hat = norm2(theta_hat);
    let clean = (sigma0 * sigma0 + err_sq) / p;
    Ok(clean
        + eps_test * eps_test * norm_hat * norm_hat / p
        + 2.0 * SQRT_2_OVER_PI * (eps_test / p.sqrt()) * norm_hat * clean.sqrt())
}

/// Worst-case feature perturbation of budget `eps` for the squared loss at
/// `(x, y)` under model θ: `δ = −eps·sign(y − <x,θ>)·θ/‖θ‖`.
///
/// Degenerate cases return the zero vector: `θ = 0` (loss is perturbation
/// invariant) and a zero residual (sign(0) taken as 0).
pub fn worst_case_perturbation(x: &[f64], y: f64, theta: &[f64], eps: f64) -> Result<Vec<f64>> {
    if x.len() != theta.len() {
        return Err(Error::DimensionMismatch {
            left: x.len(),
            right: theta.len(),
        });
    }
    if eps < 0.0 {
        return Err(Error::invalid(format!("eps must be >= 0, got {eps}")));
    }
    let theta_norm = norm2(theta);
    let residual = y - x.iter().zip(theta).map(|(a, b)| a * b).sum::<f64>();
    if theta_norm == 0.0 || residual == 0.0 || eps == 0.0 {
        return Ok(vec![0.0; theta.len()]);
    }
    let scale = -eps * residual.signum() / theta_norm;
    Ok(theta.iter().map(|t| scale * t).collect())
}
