//! Finite-instance generation and adversarial training.
//!
//! Training minimizes the closed form of the inner maximum of the adversarial
//! objective,
//!
//! `L(θ) = (1/2n)·Σᵢ (|yᵢ − <xᵢ,θ>| + ε‖θ‖)²`,
//!
//! which is convex and piecewise smooth. The optimizer is monotone descent on
//! a chosen subgradient with a backtracking line search, so the loss trace is
//! nonincreasing by construction.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::model::{AsymptoticConfig, FiniteInstance, KnobKind, RiskPoint, RiskSource};
use crate::Result;

/// Armijo parameter of the line search.
const ARMIJO_C: f64 = 1e-4;
/// Backtracking shrink factor.
const BACKTRACK: f64 = 0.5;

/// Deterministic, splittable random source. A single master seed defines the
/// whole experiment; replicate `k` draws from an independent counter-derived
/// stream, so any replicate is reproducible in isolation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeededRng {
    pub seed: u64,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng { seed }
    }

    /// The stream for replicate `k`. ChaCha streams are independent by
    /// construction and identical across platforms.
    pub fn replicate(&self, k: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(k);
        rng
    }
}

/// Outcome of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub theta_hat: Array1<f64>,
    pub final_loss: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    /// Losses of the accepted iterates; nonincreasing.
    pub loss_trace: Vec<f64>,
}

/// Draws an instance under the converging-sequence scaling: X i.i.d. N(0,1),
/// θ₀ Gaussian rescaled so that ‖θ₀‖² = p·V² exactly, σ₀ = σ√p, y = Xθ₀ + w.
///
/// Draw order is fixed (X row-major, then θ₀, then w) so instances are
/// bit-reproducible from the stream.
pub fn generate_instance(
    n: usize,
    p: usize,
    cfg: &AsymptoticConfig,
    rng: &mut ChaCha8Rng,
) -> FiniteInstance {
    assert!(n >= 1 && p >= 1, "n and p must be >= 1");
    let design = Array2::from_shape_fn((n, p), |_| rng.sample(StandardNormal));
    let mut theta0 = Array1::from_shape_fn(p, |_| rng.sample::<f64, _>(StandardNormal));
    let target = (p as f64).sqrt() * cfg.v_norm;
    let raw = theta0.dot(&theta0).sqrt();
    if cfg.v_norm == 0.0 || raw == 0.0 {
        theta0.fill(0.0);
        if cfg.v_norm > 0.0 {
            theta0[0] = target;
        }
    } else {
        theta0 *= target / raw;
    }
    let sigma0 = cfg.sigma * (p as f64).sqrt();
    let noise = Array1::from_shape_fn(n, |_| rng.sample::<f64, _>(StandardNormal) * sigma0);
    let labels = design.dot(&theta0) + &noise;
    FiniteInstance {
        n,
        p,
        design,
        labels,
        theta0,
        sigma0,
    }
}

fn check_theta(theta: &Array1<f64>, inst: &FiniteInstance) -> Result<()> {
    if theta.len() != inst.p {
        return Err(Error::DimensionMismatch {
            left: theta.len(),
            right: inst.p,
        });
    }
    Ok(())
}

/// Closed-form adversarial training loss `(1/2n)·Σ(|yᵢ − <xᵢ,θ>| + ε‖θ‖)²`,
/// equal to the inner maximum of the min-max objective.
pub fn adversarial_loss(theta: &Array1<f64>, inst: &FiniteInstance, eps: f64) -> Result<f64> {
    check_theta(theta, inst)?;
    if eps < 0.0 {
        return Err(Error::invalid(format!("eps must be >= 0, got {eps}")));
    }
    let residuals = &inst.labels - &inst.design.dot(theta);
    let penalty = eps * theta.dot(theta).sqrt();
    let sum: f64 = residuals
        .iter()
        .map(|r| {
            let m = r.abs() + penalty;
            m * m
        })
        .sum();
    Ok(sum / (2.0 * inst.n as f64))
}

/// Loss, chosen subgradient, and the residual vector in one pass. Kink
/// conventions: sign(0) = 0 for zero residuals, and the ‖θ‖ term contributes
/// the zero subgradient at θ = 0.
/// Iterate state shared by the descent phases: residuals are maintained
/// incrementally (one design matvec per line search) and refreshed
/// periodically against float drift.
struct IterState {
    theta: Array1<f64>,
    residuals: Array1<f64>,
    theta_norm: f64,
    loss: f64,
}

fn loss_from(residuals: &Array1<f64>, theta_norm: f64, eps: f64, n: usize) -> f64 {
    let penalty = eps * theta_norm;
    let sum: f64 = residuals
        .iter()
        .map(|r| {
            let m = r.abs() + penalty;
            m * m
        })
        .sum();
    sum / (2.0 * n as f64)
}

impl IterState {
    fn fresh(theta: Array1<f64>, inst: &FiniteInstance, eps: f64) -> Self {
        let residuals = &inst.labels - &inst.design.dot(&theta);
        let theta_norm = theta.dot(&theta).sqrt();
        let loss = loss_from(&residuals, theta_norm, eps, inst.n);
        IterState {
            theta,
            residuals,
            theta_norm,
            loss,
        }
    }
}

fn sign0(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Chosen subgradient (sign(0) = 0 at kinks, zero subgradient of ‖θ‖ at 0)
/// when `mu = 0`; for `mu > 0` the gradient of the smoothed loss with
/// |r| replaced by √(r²+μ²) − μ, used as a homotopy direction.
fn descent_gradient(
    state: &IterState,
    inst: &FiniteInstance,
    design_t: &Array2<f64>,
    eps: f64,
    mu: f64,
) -> Array1<f64> {
    let n = inst.n as f64;
    let penalty = eps * state.theta_norm;
    let mut coeff = Array1::zeros(inst.n);
    let mut magnitude_sum = 0.0;
    for (i, r) in state.residuals.iter().enumerate() {
        if mu > 0.0 {
            let root = (r * r + mu * mu).sqrt();
            let m = (root - mu) + penalty;
            magnitude_sum += m;
            coeff[i] = m * r / root;
        } else {
            let m = r.abs() + penalty;
            magnitude_sum += m;
            coeff[i] = m * sign0(*r);
        }
    }
    let mut grad = design_t.dot(&coeff);
    grad.mapv_inplace(|g| -g / n);
    if state.theta_norm > 0.0 {
        let scale = eps * magnitude_sum / (n * state.theta_norm);
        grad.scaled_add(scale, &state.theta);
    }
    grad
}

/// Crude upper bound on the smooth part's curvature, used for the initial
/// step: λ_max(XᵀX)/n via a few power iterations, plus the ε terms.
fn curvature_estimate(inst: &FiniteInstance, eps: f64) -> f64 {
    let mut v = Array1::from_elem(inst.p, (inst.p as f64).powf(-0.5));
    let mut lam = 1.0;
    for _ in 0..12 {
        let w = inst.design.t().dot(&inst.design.dot(&v));
        lam = w.dot(&w).sqrt();
        if lam == 0.0 {
            break;
        }
        v = w / lam;
    }
    let top = lam / inst.n as f64;
    top + 2.0 * eps * top.sqrt() + eps * eps
}

/// Residuals this close to zero (relative to the additive penalty ε‖θ‖)
/// count as sitting on a kink of the loss.
const KINK_BAND: f64 = 1e-6;

/// Upper bound on the distance from 0 to the subdifferential ∂L(θ), allowing
/// free sign choices s ∈ [−1, 1] for residuals inside the kink band.
///
/// The minimizer of the loss keeps a positive fraction of residuals exactly
/// at zero whenever ε > 0 (the loss soft-thresholds residuals), so the
/// sign(0) = 0 descent subgradient cannot certify optimality there. This
/// solves the small box-constrained least squares
/// `min_{s ∈ [−1,1]^K} ‖g_smooth − Σ_k (m_k/n)·s_k·x_k‖` by exact cyclic
/// coordinate descent and returns the best value found, which certifies
/// stationarity of a point within O(band) of θ.
fn min_norm_subgradient(state: &IterState, inst: &FiniteInstance, eps: f64, target: f64) -> f64 {
    let n = inst.n as f64;
    let penalty = eps * state.theta_norm;
    let band = KINK_BAND * penalty;

    // Smooth part of the subgradient plus the list of kink columns.
    let mut magnitude_sum = 0.0;
    let mut kink: Vec<(usize, f64)> = Vec::new();
    let mut coeff = Array1::zeros(inst.n);
    for (i, r) in state.residuals.iter().enumerate() {
        let m = r.abs() + penalty;
        magnitude_sum += m;
        if r.abs() <= band {
            kink.push((i, m / n));
        } else {
            coeff[i] = m * sign0(*r);
        }
    }
    let mut g_smooth = inst.design.t().dot(&coeff);
    g_smooth.mapv_inplace(|g| -g / n);
    let norm_pull = eps * magnitude_sum / n;
    if state.theta_norm > 0.0 {
        g_smooth.scaled_add(norm_pull / state.theta_norm, &state.theta);
    }

    // At θ = 0 the norm term contributes any vector of length ≤ ε·Σm/n.
    let slack = if state.theta_norm == 0.0 { norm_pull } else { 0.0 };

    if kink.is_empty() {
        return (g_smooth.dot(&g_smooth).sqrt() - slack).max(0.0);
    }

    // Kink columns as a K×p matrix of weighted design rows.
    let mut a = Array2::zeros((kink.len(), inst.p));
    for (k, &(i, w)) in kink.iter().enumerate() {
        let mut row = a.row_mut(k);
        row.assign(&inst.design.row(i));
        row.mapv_inplace(|x| x * w);
    }
    let col_norms_sq: Vec<f64> = (0..kink.len()).map(|k| a.row(k).dot(&a.row(k))).collect();

    // Cyclic coordinate descent on q(s) = ‖g_smooth − Aᵀs‖² over the box:
    // each coordinate update is an exact clamped minimization, so the value
    // is monotone and converges to the box-QP optimum.
    let mut s: Array1<f64> = Array1::zeros(kink.len());
    let mut r = g_smooth.clone();
    let mut best = r.dot(&r).sqrt();
    for _ in 0..200 {
        if (best - slack).max(0.0) <= target {
            break;
        }
        let mut moved = false;
        for k in 0..kink.len() {
            if col_norms_sq[k] == 0.0 {
                continue;
            }
            let ak = a.row(k);
            let new = (s[k] + ak.dot(&r) / col_norms_sq[k]).clamp(-1.0, 1.0);
            let delta = new - s[k];
            if delta != 0.0 {
                r.scaled_add(-delta, &ak.to_owned());
                s[k] = new;
                moved = true;
            }
        }
        let now = r.dot(&r).sqrt();
        if now < best {
            best = now;
        }
        if !moved {
            break;
        }
    }
    (best - slack).max(0.0)
}

/// Effective descent direction (returned as a gradient-like vector). When
/// residuals sit inside the kink band their design rows are projected out of
/// the subgradient, so the step moves exactly along the affine manifold that
/// keeps those residuals pinned; the raw subgradient cannot descend across
/// the kinks it is pinned on.
fn active_set_gradient(
    state: &IterState,
    inst: &FiniteInstance,
    design_t: &Array2<f64>,
    eps: f64,
) -> (Array1<f64>, usize) {
    let n = inst.n as f64;
    let penalty = eps * state.theta_norm;
    let band = KINK_BAND * penalty;
    let kink: Vec<usize> = state
        .residuals
        .iter()
        .enumerate()
        .filter(|(_, r)| r.abs() <= band)
        .map(|(i, _)| i)
        .collect();
    let raw = descent_gradient(state, inst, design_t, eps, 0.0);
    if kink.is_empty() {
        return (raw, 0);
    }

    // Strip the (sign-arbitrary) kink contributions from the subgradient.
    let mut g = raw;
    let mut coeff = Array1::zeros(inst.n);
    for &i in &kink {
        let r = state.residuals[i];
        coeff[i] = (r.abs() + penalty) * sign0(r) / n;
    }
    g += &design_t.dot(&coeff);

    // Project onto the null space of the pinned rows: solve
    // (X_K X_Kᵀ + ridge)λ = X_K g by conjugate gradients.
    let k = kink.len();
    let mut xk = Array2::zeros((k, inst.p));
    for (row, &i) in kink.iter().enumerate() {
        xk.row_mut(row).assign(&inst.design.row(i));
    }
    let ridge = 1e-12 * xk.iter().map(|x| x * x).sum::<f64>().max(1e-300) / k as f64;
    let matvec = |v: &Array1<f64>| -> Array1<f64> {
        let mut out = xk.dot(&xk.t().dot(v));
        out.scaled_add(ridge, v);
        out
    };
    let b = xk.dot(&g);
    let mut lambda: Array1<f64> = Array1::zeros(k);
    let mut resid = b.clone();
    let mut dir = resid.clone();
    let mut rs = resid.dot(&resid);
    let b_norm = b.dot(&b).sqrt().max(1e-300);
    // The direction only needs to be approximately tangent; the line search
    // guards against residual kink crossing from an inexact projection.
    for _ in 0..k.max(30).min(200) {
        if rs.sqrt() <= 1e-10 * b_norm {
            break;
        }
        let ad = matvec(&dir);
        let alpha = rs / dir.dot(&ad).max(1e-300);
        lambda.scaled_add(alpha, &dir);
        resid.scaled_add(-alpha, &ad);
        let rs_new = resid.dot(&resid);
        dir = &resid + &(dir * (rs_new / rs));
        rs = rs_new;
    }
    let projected = &g - &xk.t().dot(&lambda);
    (projected, k)
}

/// Minimizes the adversarial loss from θ = 0 by monotone descent with a
/// backtracking line search and Barzilai-Borwein trial steps. The descent
/// direction follows a smoothing homotopy (|r| → √(r²+μ²), μ shrinking
/// geometrically) so the iterate approaches the kinks of the loss gracefully;
/// once residuals pin, descent continues along the manifold that holds them
/// fixed (see [`active_set_gradient`]). Acceptance is always measured on the
/// true loss, so the trace is nonincreasing.
///
/// Termination: either the chosen subgradient satisfies ‖g‖ ≤ tol·(1+loss),
/// or (at a kinked optimum, the typical case for ε > 0) the kink-aware
/// minimal-norm subgradient from [`min_norm_subgradient`] does. The reported
/// `grad_norm` is whichever certificate fired.
pub fn train_adversarial(
    inst: &FiniteInstance,
    eps: f64,
    tol: f64,
    max_iter: usize,
) -> Result<TrainReport> {
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("tol must be > 0, got {tol}")));
    }
    if eps < 0.0 {
        return Err(Error::invalid(format!("eps must be >= 0, got {eps}")));
    }
    // Contiguous transpose for the gradient-side products.
    let design_t = inst.design.t().as_standard_layout().to_owned();
    let mut state = IterState::fresh(Array1::zeros(inst.p), inst, eps);
    let mut trace = vec![state.loss];
    let base_step = 1.0 / curvature_estimate(inst, eps).max(1e-12);

    // Smoothing schedule, relative to the label scale.
    let label_rms = (inst.labels.dot(&inst.labels) / inst.n as f64).sqrt().max(1e-12);
    let mut mu = if eps > 0.0 { 0.3 * label_rms } else { 0.0 };
    let mu_floor = 1e-9 * label_rms;
    let sharpen = |mu: &mut f64| {
        *mu = if *mu <= mu_floor { 0.0 } else { (0.05 * *mu).max(mu_floor * 0.99) };
    };

    let mut prev_theta: Option<Array1<f64>> = None;
    let mut prev_grad: Option<Array1<f64>> = None;
    // Length of the stagnation window.
    const WINDOW: usize = 25;
    let mut next_certificate = WINDOW;
    let mut stalled_certificates = 0;
    let mut stage_iters = 0;

    let finish = |state: IterState, iter: usize, grad_norm: f64, trace: Vec<f64>| TrainReport {
        theta_hat: state.theta,
        final_loss: state.loss,
        iterations: iter,
        grad_norm,
        loss_trace: trace,
    };

    for iter in 0..max_iter {
        let loss = state.loss;
        let threshold = tol * (1.0 + loss);
        let raw = descent_gradient(&state, inst, &design_t, eps, 0.0);
        let raw_norm = raw.dot(&raw).sqrt();
        if raw_norm <= threshold {
            return Ok(finish(state, iter, raw_norm, trace));
        }

        // Pick the direction for the current phase.
        let mut direction;
        if mu > 0.0 {
            direction = descent_gradient(&state, inst, &design_t, eps, mu);
            let g_norm = direction.dot(&direction).sqrt();
            // Advance the homotopy once this stage's gradient is small on its
            // own scale.
            if g_norm <= threshold.max(1e-2 * mu) || stage_iters >= 60 {
                sharpen(&mut mu);
                stage_iters = 0;
                prev_theta = None;
                prev_grad = None;
                continue;
            }
            stage_iters += 1;
        } else {
            let (g_eff, kinks) = active_set_gradient(&state, inst, &design_t, eps);
            let eff_norm = g_eff.dot(&g_eff).sqrt();
            direction = g_eff;
            if kinks > 0 && eff_norm <= threshold {
                // Stationary on the manifold; validate the dual signs.
                let certified = min_norm_subgradient(&state, inst, eps, threshold);
                if certified <= threshold {
                    return Ok(finish(state, iter, certified, trace));
                }
                // A kink should release: fall back to the raw subgradient.
                direction = raw.clone();
            }
        }

        // Certify kinked optima once progress stalls (or periodically).
        let stagnant = mu == 0.0
            && trace.len() > WINDOW
            && trace[trace.len() - 1 - WINDOW] - loss <= 1e-13 * (1.0 + loss);
        if (stagnant || iter >= next_certificate) && eps > 0.0 {
            next_certificate = iter + 250;
            let certified = min_norm_subgradient(&state, inst, eps, threshold);
            if certified <= threshold {
                return Ok(finish(state, iter, certified, trace));
            }
            if stagnant {
                // Monotone descent cannot meaningfully improve a stalled
                // iterate; give it a little slack, then report failure.
                stalled_certificates += 1;
                if stalled_certificates >= 3 {
                    return Err(Error::TrainingStalled {
                        report: Box::new(finish(state, iter, certified, trace)),
                    });
                }
            }
        }

        let dir_norm_sq = direction.dot(&direction);

        // Barzilai-Borwein step when history exists, else the curvature bound.
        let mut step = match (&prev_theta, &prev_grad) {
            (Some(pt), Some(pg)) => {
                let s = &state.theta - pt;
                let y = &direction - pg;
                let sy = s.dot(&y);
                if sy > 0.0 {
                    (s.dot(&s) / sy).clamp(1e-4 * base_step, 1e4 * base_step)
                } else {
                    base_step
                }
            }
            _ => base_step,
        };

        prev_theta = Some(state.theta.clone());
        prev_grad = Some(direction.clone());

        // One design product per line search: r(θ − t·d) = r(θ) + t·X·d.
        let design_dir = inst.design.dot(&direction);
        let mut accepted = false;
        for _ in 0..60 {
            let trial_theta = &state.theta - &(step * &direction);
            let trial_residuals = &state.residuals + &(step * &design_dir);
            let trial_norm = trial_theta.dot(&trial_theta).sqrt();
            let trial_loss = loss_from(&trial_residuals, trial_norm, eps, inst.n);
            if trial_loss <= loss - ARMIJO_C * step * dir_norm_sq || trial_loss < loss {
                state = IterState {
                    theta: trial_theta,
                    residuals: trial_residuals,
                    theta_norm: trial_norm,
                    loss: trial_loss,
                };
                trace.push(state.loss);
                accepted = true;
                break;
            }
            step *= BACKTRACK;
        }
        if !accepted {
            if mu > 0.0 {
                // The smoothed direction cannot decrease the true loss any
                // further; sharpen the smoothing and retry.
                sharpen(&mut mu);
                stage_iters = 0;
                prev_theta = None;
                prev_grad = None;
                continue;
            }
            // No decrease at float resolution: last chance to certify (this
            // also covers a kink release that found no descent).
            let certified = if eps > 0.0 {
                min_norm_subgradient(&state, inst, eps, threshold).min(raw_norm)
            } else {
                raw_norm
            };
            if certified <= threshold {
                return Ok(finish(state, iter, certified, trace));
            }
            return Err(Error::TrainingStalled {
                report: Box::new(finish(state, iter, certified, trace)),
            });
        }
    }
    let loss = state.loss;
    let threshold = tol * (1.0 + loss);
    let raw = descent_gradient(&state, inst, &design_t, eps, 0.0);
    let raw_norm = raw.dot(&raw).sqrt();
    let certified = if eps > 0.0 {
        min_norm_subgradient(&state, inst, eps, threshold).min(raw_norm)
    } else {
        raw_norm
    };
    if certified <= threshold {
        return Ok(finish(state, max_iter, certified, trace));
    }
    Err(Error::TrainingStalled {
        report: Box::new(finish(state, max_iter, certified, trace)),
    })
}

/// Empirical (SR, AR) of an estimator on the instance's population, via the
/// exact risk formulas at the configured test budget.
pub fn empirical_risk_point(
    inst: &FiniteInstance,
    theta_hat: &Array1<f64>,
    cfg: &AsymptoticConfig,
) -> Result<RiskPoint> {
    check_theta(theta_hat, inst)?;
    let hat = theta_hat.as_slice().expect("contiguous");
    let truth = inst.theta0.as_slice().expect("contiguous");
    let sr = crate::model::standard_risk(hat, truth, inst.sigma0)?;
    let ar = crate::model::adversarial_risk(hat, truth, inst.sigma0, cfg.eps_test)?;
    Ok(RiskPoint {
        sr,
        ar,
        source: RiskSource::Empirical,
        knob: cfg.eps_train,
        knob_kind: KnobKind::Epsilon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::ProptestConfig;
    use proptest::{prop_assert, proptest};

    fn cfg() -> AsymptoticConfig {
        AsymptoticConfig::new(2.0, 1.0, 1.0, 0.5, 0.5).unwrap()
    }

    #[test]
    fn noiseless_labels_are_exact() {
        let mut c = cfg();
        c.sigma = 0.0;
        let mut rng = SeededRng::new(1).replicate(0);
        let inst = generate_instance(20, 5, &c, &mut rng);
        let pred = inst.design.dot(&inst.theta0);
        for (a, b) in pred.iter().zip(inst.labels.iter()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn null_model_gives_pure_noise() {
        let mut c = cfg();
        c.v_norm = 0.0;
        let mut rng = SeededRng::new(2).replicate(0);
        let inst = generate_instance(10, 4, &c, &mut rng);
        assert!(inst.theta0.iter().all(|&t| t == 0.0));
    }

    #[test]
    fn theta0_norm_is_exact() {
        let c = cfg();
        for seed in 0..5 {
            let mut rng = SeededRng::new(7).replicate(seed);
            let inst = generate_instance(8, 13, &c, &mut rng);
            let nsq = inst.theta0.dot(&inst.theta0);
            assert!((nsq - 13.0 * c.v_norm * c.v_norm).abs() < 1e-9);
        }
    }

    /// Chi-square concentration: ‖w‖²/(n·σ₀²) ∈ 1 ± 5/√n at n = 10⁴.
    #[test]
    fn noise_moments_concentrate() {
        let c = cfg();
        let n = 10_000;
        let master = SeededRng::new(2024);
        for k in 0..100 {
            let mut rng = master.replicate(k);
            let inst = generate_instance(n, 3, &c, &mut rng);
            let fitted = inst.design.dot(&inst.theta0);
            let w = &inst.labels - &fitted;
            let ratio = w.dot(&w) / (n as f64 * inst.sigma0 * inst.sigma0);
            assert!(
                (ratio - 1.0).abs() <= 5.0 / (n as f64).sqrt(),
                "replicate {k}: ratio {ratio}"
            );
        }
    }

    #[test]
    fn loss_zero_for_interpolation_without_adversary() {
        let c = cfg();
        let mut rng = SeededRng::new(3).replicate(0);
        let mut inst = generate_instance(6, 3, &c, &mut rng);
        inst.labels = inst.design.dot(&inst.theta0);
        assert_eq!(adversarial_loss(&inst.theta0, &inst, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn loss_hand_value() {
        // n=1, x=(1,0), y=1, θ=(1,0), ε=0.5 → (0 + 0.5)²/2 = 0.125.
        let inst = FiniteInstance {
            n: 1,
            p: 2,
            design: ndarray::array![[1.0, 0.0]],
            labels: ndarray::array![1.0],
            theta0: ndarray::array![1.0, 0.0],
            sigma0: 0.0,
        };
        let l = adversarial_loss(&ndarray::array![1.0, 0.0], &inst, 0.5).unwrap();
        assert_eq!(l, 0.125);
    }

    /// Sampled inner-max oracle: the closed form dominates the objective at
    /// random feasible perturbations and is attained at the analytic worst
    /// case.
    #[test]
    fn loss_equals_sampled_inner_max() {
        use rand::rngs::StdRng;
        let c = cfg();
        let eps = 0.6;
        let mut rng = SeededRng::new(5).replicate(0);
        let inst = generate_instance(5, 3, &c, &mut rng);
        let theta = Array1::from_vec(vec![0.4, -1.1, 0.7]);
        let closed = adversarial_loss(&theta, &inst, eps).unwrap();

        let objective_value = |perturbs: &[Vec<f64>]| -> f64 {
            let mut total = 0.0;
            for i in 0..inst.n {
                let xi = inst.design.row(i);
                let pred: f64 = xi
                    .iter()
                    .zip(&perturbs[i])
                    .zip(theta.iter())
                    .map(|((x, d), t)| (x + d) * t)
                    .sum();
                let r = inst.labels[i] - pred;
                total += r * r;
            }
            total / (2.0 * inst.n as f64)
        };

        // Analytic worst case attains the closed form.
        let worst: Vec<Vec<f64>> = (0..inst.n)
            .map(|i| {
                crate::model::worst_case_perturbation(
                    inst.design.row(i).as_slice().unwrap(),
                    inst.labels[i],
                    theta.as_slice().unwrap(),
                    eps,
                )
                .unwrap()
            })
            .collect();
        assert!((objective_value(&worst) - closed).abs() <= 1e-12);

        // And dominates 10⁴ random feasible tuples.
        let mut sampler = StdRng::seed_from_u64(17);
        for _ in 0..10_000 {
            let tuple: Vec<Vec<f64>> = (0..inst.n)
                .map(|_| {
                    let g: Vec<f64> = (0..inst.p)
                        .map(|_| sampler.sample::<f64, _>(StandardNormal))
                        .collect();
                    let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
                    let r = eps * sampler.gen::<f64>().powf(1.0 / inst.p as f64);
                    g.iter().map(|x| x * r / norm).collect()
                })
                .collect();
            assert!(objective_value(&tuple) <= closed + 1e-12);
        }
    }

    #[test]
    fn exact_recovery_noiseless_overdetermined() {
        let mut c = cfg();
        c.sigma = 0.0;
        let mut rng = SeededRng::new(11).replicate(0);
        let p = 10;
        let inst = generate_instance(2 * p, p, &c, &mut rng);
        let report = train_adversarial(&inst, 0.0, 1e-12, 200_000).unwrap();
        let err = (&report.theta_hat - &inst.theta0)
            .iter()
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt();
        assert!(err <= 1e-8, "recovery error {err}");
    }

    #[test]
    fn trace_monotone_and_grad_criterion() {
        let c = cfg();
        let mut rng = SeededRng::new(13).replicate(0);
        let inst = generate_instance(40, 20, &c, &mut rng);
        let report = train_adversarial(&inst, 0.5, 1e-5, 200_000).unwrap();
        for w in report.loss_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-15);
        }
        assert!(report.grad_norm <= 1e-5 * (1.0 + report.final_loss));
    }

    #[test]
    fn training_is_bit_deterministic() {
        let c = cfg();
        let run = || {
            let mut rng = SeededRng::new(99).replicate(3);
            let inst = generate_instance(30, 15, &c, &mut rng);
            train_adversarial(&inst, 0.5, 1e-5, 200_000).unwrap().theta_hat
        };
        let a = run();
        let b = run();
        assert_eq!(a, b);
    }

    /// Grid-search oracle at p = 2: exhaustive scan at resolution 1e-3 plus a
    /// local pattern-search refinement.
    #[test]
    fn training_matches_grid_search_oracle() {
        let c = cfg();
        let eps = 0.5;
        let mut rng = SeededRng::new(21).replicate(0);
        let inst = generate_instance(6, 2, &c, &mut rng);
        let report = train_adversarial(&inst, eps, 1e-5, 200_000).unwrap();

        let loss_at = |a: f64, b: f64| {
            adversarial_loss(&Array1::from_vec(vec![a, b]), &inst, eps).unwrap()
        };
        let mut best = (f64::INFINITY, 0.0, 0.0);
        let steps = 6000;
        for i in 0..=steps {
            let a = -3.0 + 6.0 * i as f64 / steps as f64;
            for j in 0..=steps {
                let b = -3.0 + 6.0 * j as f64 / steps as f64;
                let l = loss_at(a, b);
                if l < best.0 {
                    best = (l, a, b);
                }
            }
        }
        // Pattern-search refinement around the best grid cell.
        let (mut lbest, mut abest, mut bbest) = best;
        let mut h = 1e-3;
        while h > 1e-12 {
            let mut improved = false;
            for (da, db) in [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h), (h, h), (-h, -h), (h, -h), (-h, h)] {
                let l = loss_at(abest + da, bbest + db);
                if l < lbest {
                    lbest = l;
                    abest += da;
                    bbest += db;
                    improved = true;
                }
            }
            if !improved {
                h *= 0.5;
            }
        }
        assert!(
            (report.final_loss - lbest).abs() <= 1e-6,
            "trainer {} vs oracle {}",
            report.final_loss,
            lbest
        );
    }

    #[test]
    fn empirical_point_trivial_estimators() {
        let c = cfg();
        let mut rng = SeededRng::new(31).replicate(0);
        let inst = generate_instance(50, 25, &c, &mut rng);
        let at_truth = empirical_risk_point(&inst, &inst.theta0.clone(), &c).unwrap();
        assert!((at_truth.sr - c.sigma * c.sigma).abs() < 1e-12);
        let zero = Array1::zeros(inst.p);
        let at_zero = empirical_risk_point(&inst, &zero, &c).unwrap();
        let clean = c.sigma * c.sigma + inst.theta0.dot(&inst.theta0) / inst.p as f64;
        assert!((at_zero.sr - clean).abs() < 1e-12);
        assert!((at_zero.ar - clean).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        /// Convexity of the loss along random chords.
        #[test]
        fn loss_is_convex(seed in 0u64..1000, t in 0.01f64..0.99) {
            let c = cfg();
            let mut rng = SeededRng::new(seed).replicate(0);
            let inst = generate_instance(8, 4, &c, &mut rng);
            let mut draw = SeededRng::new(seed ^ 0xabcd).replicate(1);
            let t1 = Array1::from_shape_fn(4, |_| draw.sample::<f64, _>(StandardNormal) * 2.0);
            let t2 = Array1::from_shape_fn(4, |_| draw.sample::<f64, _>(StandardNormal) * 2.0);
            let mid = &t1 * t + &t2 * (1.0 - t);
            let l_mid = adversarial_loss(&mid, &inst, 0.7).unwrap();
            let bound = t * adversarial_loss(&t1, &inst, 0.7).unwrap()
                + (1.0 - t) * adversarial_loss(&t2, &inst, 0.7).unwrap();
            prop_assert!(l_mid <= bound + 1e-12);
        }
    }
}
