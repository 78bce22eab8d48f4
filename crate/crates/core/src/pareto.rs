//! The fundamental (infinite-data) tradeoff curve between standard and
//! adversarial risk, and the weight→budget correspondence.
//!
//! Minimizing `λ·SR + AR` over all estimators yields a pure shrinkage of the
//! true parameter, `θ^λ = θ₀/(1+γ₀)`, where the shrinkage coefficient γ₀ is a
//! fixed point of a scalar map. Sweeping λ traces the Pareto frontier. In the
//! infinite-data limit the adversarially trained estimator with budget ε lands
//! on the same frontier; [`lambda_to_epsilon`] computes the ε that matches a
//! given λ by solving a quadratic in ε.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::math::SQRT_2_OVER_PI;
use crate::model::{AsymptoticConfig, KnobKind, RiskPoint, RiskSource};
use crate::Result;

/// Target on the fixed-point defect |γ − g(γ)|.
const RESIDUAL_TOL: f64 = 1e-13;
/// Damping factor of the fixed-point iteration.
const DAMPING: f64 = 0.5;
/// Iteration budget before falling back to bisection.
const MAX_DAMPED_ITERS: usize = 10_000;

/// A converged point of the frontier fixed point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParetoSolution {
    /// Weight on the standard risk in the scalarized objective.
    pub lambda: f64,
    /// Shrinkage coefficient γ₀; the optimal estimator is θ₀/(1+γ₀).
    pub gamma0: f64,
    /// Auxiliary ratio A = √((1+γ₀)²σ² + γ₀²V²)/V at the fixed point.
    pub a_lambda: f64,
    pub sr: f64,
    pub ar: f64,
    /// Fixed-point defect |γ₀ − g(γ₀)| actually achieved.
    pub residual: f64,
}

/// A(γ) = √((1+γ)²σ² + γ²V²) / V.
fn aux_ratio(gamma: f64, cfg: &AsymptoticConfig) -> f64 {
    let s = (1.0 + gamma) * cfg.sigma;
    let v = gamma * cfg.v_norm;
    (s * s + v * v).sqrt() / cfg.v_norm
}

/// The fixed-point map g(γ) whose root characterizes the frontier point.
fn fixed_point_map(gamma: f64, lambda: f64, cfg: &AsymptoticConfig) -> f64 {
    let et = cfg.eps_test;
    if et == 0.0 {
        return 0.0;
    }
    let a = aux_ratio(gamma, cfg);
    // a = 0 can only happen at γ = 0 with σ = 0; the limit of the map is 0.
    if a == 0.0 {
        return 0.0;
    }
    (et * et + SQRT_2_OVER_PI * et * a) / (1.0 + lambda + SQRT_2_OVER_PI * et / a)
}

fn check_inputs(lambda: f64, cfg: &AsymptoticConfig) -> Result<()> {
    if !(lambda >= 0.0) {
        return Err(Error::invalid(format!("lambda must be >= 0, got {lambda}")));
    }
    if !(cfg.v_norm > 0.0) {
        return Err(Error::invalid("v_norm must be > 0 for the frontier fixed point"));
    }
    if !(cfg.sigma >= 0.0) || !(cfg.eps_test >= 0.0) {
        return Err(Error::invalid("sigma and eps_test must be >= 0"));
    }
    Ok(())
}

/// Solves γ = g(γ) by damped iteration with a bisection fallback and returns
/// the frontier point for weight `lambda`.
///
/// The damped map is empirically contractive; bisection on the defect
/// h(γ) = γ − g(γ) guarantees termination when it is not. More than one sign
/// change of h over the bracket is reported as an internal-consistency error
/// instead of silently picking a root.
pub fn pareto_fixed_point(lambda: f64, cfg: &AsymptoticConfig) -> Result<ParetoSolution> {
    check_inputs(lambda, cfg)?;
    let g = |gamma: f64| fixed_point_map(gamma, lambda, cfg);
    let gamma0 = solve_scalar_fixed_point(&g, cfg.eps_test * cfg.eps_test)?;
    let residual = (gamma0 - g(gamma0)).abs();
    let (sr, ar) = pareto_risks(gamma0, cfg)?;
    Ok(ParetoSolution {
        lambda,
        gamma0,
        a_lambda: aux_ratio(gamma0, cfg),
        sr,
        ar,
        residual,
    })
}

/// Generic driver: damped iteration from `start`, bisection fallback.
fn solve_scalar_fixed_point(g: &dyn Fn(f64) -> f64, start: f64) -> Result<f64> {
    let mut gamma = start.max(0.0);
    for _ in 0..MAX_DAMPED_ITERS {
        let mapped = g(gamma);
        if !mapped.is_finite() {
            break;
        }
        let next = (1.0 - DAMPING) * gamma + DAMPING * mapped;
        if (next - gamma).abs() <= RESIDUAL_TOL && (gamma - mapped).abs() <= RESIDUAL_TOL {
            return Ok(next.max(0.0));
        }
        gamma = next.max(0.0);
    }
    bisect_defect(g)
}

/// Bisection on h(γ) = γ − g(γ) over [0, hi], hi doubled until h > 0.
fn bisect_defect(g: &dyn Fn(f64) -> f64) -> Result<f64> {
    let h = |gamma: f64| {
        let m = g(gamma);
        if m.is_finite() {
            gamma - m
        } else {
            f64::NEG_INFINITY
        }
    };
    if h(0.0) >= 0.0 {
        // γ = 0 already a root (or the map is degenerate there).
        return Ok(0.0);
    }
    let mut hi = 1.0;
    let mut doublings = 0;
    while h(hi) <= 0.0 {
        hi *= 2.0;
        doublings += 1;
        if doublings > 200 {
            return Err(Error::Convergence {
                iterations: doublings,
                residual: f64::INFINITY,
                context: ", no sign change of the fixed-point defect".into(),
            });
        }
    }
    // Reject brackets with more than one sign change: the fixed point is
    // assumed unique and anything else means the model inputs are off.
    let mut changes = 0;
    let mut prev = h(0.0);
    for k in 1..=64 {
        let x = hi * k as f64 / 64.0;
        let cur = h(x);
        if prev.signum() != cur.signum() && cur != 0.0 {
            changes += 1;
        }
        prev = cur;
    }
    if changes > 1 {
        return Err(Error::InternalConsistency(format!(
            "{changes} sign changes of the fixed-point defect on [0, {hi}]"
        )));
    }
    let (mut lo, mut hi) = (0.0, hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi.max(1.0) {
            break;
        }
    }
    let root = 0.5 * (lo + hi);
    let residual = (root - g(root)).abs();
    if residual > 1e-12 {
        return Err(Error::Convergence {
            iterations: MAX_DAMPED_ITERS,
            residual,
            context: ", bisection fallback stalled".into(),
        });
    }
    Ok(root)
}

/// Asymptotic (SR, AR) of the shrinkage estimator θ₀/(1+γ₀).
pub fn pareto_risks(gamma0: f64, cfg: &AsymptoticConfig) -> Result<(f64, f64)> {
    if !(gamma0 >= 0.0) {
        return Err(Error::invalid(format!("gamma0 must be >= 0, got {gamma0}")));
    }
    let (sigma, v, et) = (cfg.sigma, cfg.v_norm, cfg.eps_test);
    let shrink = gamma0 / (1.0 + gamma0);
    let scale = 1.0 / (1.0 + gamma0);
    let sr = sigma * sigma + (shrink * v) * (shrink * v);
    let ar = sr
        + et * et * v * v * scale * scale
        + 2.0 * SQRT_2_OVER_PI * et * v * scale * sr.sqrt();
    Ok((sr, ar))
}

/// Frontier points for a grid of weights, evaluated in parallel and returned
/// in the input order.
pub fn pareto_curve(lambdas: &[f64], cfg: &AsymptoticConfig) -> Result<Vec<RiskPoint>> {
    if lambdas.is_empty() {
        return Err(Error::invalid("lambda grid must be nonempty"));
    }
    lambdas
        .par_iter()
        .map(|&lambda| {
            let sol = pareto_fixed_point(lambda, cfg).map_err(|e| match e {
                Error::Convergence {
                    iterations,
                    residual,
                    context,
                } => Error::Convergence {
                    iterations,
                    residual,
                    context: format!("{context} at lambda = {lambda}"),
                },
                other => other,
            })?;
            Ok(RiskPoint {
                sr: sol.sr,
                ar: sol.ar,
                source: RiskSource::ParetoTheory,
                knob: lambda,
                knob_kind: KnobKind::Lambda,
            })
        })
        .collect()
}

/// Training budget ε whose infinite-data estimator matches the frontier point
/// of weight λ.
///
/// With unlimited data the adversarially trained estimator minimizes the
/// population value of its loss, `E(|y − <x,θ>| + ε‖θ‖)²`, which is exactly
/// the λ = 0 scalarized objective with test budget ε. Its shrinkage therefore
/// satisfies γ = (ε² + √(2/π)·ε·A)/(1 + √(2/π)·ε/A); equating it with γ₀^λ
/// (the two share A when the shrinkage matches) gives the quadratic
///
/// `ε² + √(2/π)·(A − γ₀^λ/A)·ε − γ₀^λ = 0`
///
/// whose unique nonnegative root is returned.
pub fn lambda_to_epsilon(lambda: f64, cfg: &AsymptoticConfig) -> Result<f64> {
    let sol = pareto_fixed_point(lambda, cfg)?;
    if cfg.eps_test == 0.0 {
        return Ok(0.0);
    }
    let a = sol.a_lambda;
    let c1 = SQRT_2_OVER_PI * (a - sol.gamma0 / a);
    let disc = c1 * c1 + 4.0 * sol.gamma0;
    if disc < 0.0 {
        return Err(Error::InternalConsistency(format!(
            "negative discriminant {disc} in the lambda->epsilon quadratic"
        )));
    }
    // One sign change: positive leading, nonpositive constant coefficient.
    // Take the larger root and clamp round-off.
    let eps = (-c1 + disc.sqrt()) / 2.0;
    Ok(eps.max(0.0))
}

/// Shrinkage coefficient γ₀^ε of the infinite-data (δ→∞) adversarially
/// trained estimator: the fixed point of the population-loss optimality
/// condition γ = (ε² + √(2/π)·ε·A(γ)) / (1 + √(2/π)·ε/A(γ)), i.e. the λ = 0
/// frontier map with the training budget in the adversary's seat.
///
/// Used to verify [`lambda_to_epsilon`] by plugging ε back.
pub fn infinite_data_fixed_point(eps: f64, cfg: &AsymptoticConfig) -> Result<f64> {
    if !(eps >= 0.0) {
        return Err(Error::invalid(format!("eps must be >= 0, got {eps}")));
    }
    if eps == 0.0 {
        return Ok(0.0);
    }
    let mut population = *cfg;
    population.eps_test = eps;
    Ok(pareto_fixed_point(0.0, &population)?.gamma0)
}
