//! The five-variable convex-concave scalar problem predicting the asymptotic
//! behavior of the adversarially trained estimator.
//!
//! The objective `D(α, β, γ, τ_h, τ_g)` is minimized over `(α, τ_g)` (jointly
//! strictly convex) and maximized over `(β, γ, τ_h)` (jointly concave). Its
//! soft-threshold correction term is active on the region
//! `a := γ(τ_g+β)/(δεβ√(α²+σ²)) > √(2/π)` and involves the root τ* of a
//! strictly decreasing erf characteristic. The saddle point gives the
//! asymptotic estimation error (α*²) and estimator norm, hence the asymptotic
//! standard and adversarial risks.
//!
//! All functions are pure; solves for different configs can run concurrently.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::math::{erf, erfc, pos, SQRT_2_OVER_PI};
use crate::model::AsymptoticConfig;
use crate::Result;

/// Stationarity target for the solver (stricter than the 1e-7 contract).
const STATIONARITY_TOL: f64 = 1e-8;
/// Gradient-norm target of the inner (α, τ_g) minimization.
const INNER_TOL: f64 = 1e-10;
/// Armijo sufficient-decrease parameter.
const ARMIJO_C: f64 = 1e-4;
/// Backtracking shrink factor.
const BACKTRACK: f64 = 0.5;
/// Smallest value the positive variables are allowed to take during
/// iteration. Tighter floors create astronomically scaled indicator ratios
/// that waste bisection budget without being anywhere near the saddle.
const FLOOR: f64 = 1e-9;

/// The five optimization variables of the scalar saddle problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleVars {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub tau_h: f64,
    pub tau_g: f64,
}

impl SaddleVars {
    #[cfg(test)]
    fn to_array(self) -> [f64; 5] {
        [self.alpha, self.beta, self.gamma, self.tau_h, self.tau_g]
    }

    fn from_array(x: [f64; 5]) -> Self {
        SaddleVars {
            alpha: x[0],
            beta: x[1],
            gamma: x[2],
            tau_h: x[3],
            tau_g: x[4],
        }
    }
}

/// The saddle point together with convergence diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaddleSolution {
    /// Limit of ‖θ̂−θ₀‖/√p.
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub tau_h: f64,
    pub tau_g: f64,
    /// Value of the characteristic root τ* at the optimum (0 when the
    /// indicator is off).
    pub tau_star: f64,
    /// Saddle value of the objective.
    pub d_value: f64,
    /// Max projected-gradient norm across the min and max blocks.
    pub stationarity: f64,
}

/// Characteristic function whose unique root is τ*:
/// `a − ratio·τ − τ·erf(τ/√2) − √(2/π)·e^{−τ²/2}` with `ratio = β/τ_g`.
pub fn tau_characteristic(a: f64, ratio: f64, tau: f64) -> f64 {
    a - ratio * tau - tau * erf(tau / std::f64::consts::SQRT_2)
        - SQRT_2_OVER_PI * (-0.5 * tau * tau).exp()
}

/// Unique root τ ≥ 0 of the characteristic equation. The left side is
/// strictly decreasing in τ, so bracketing ([0, 1], doubling the upper end
/// until negative) followed by bisection always terminates.
pub fn tau_star(a: f64, beta: f64, tau_g: f64) -> Result<f64> {
    if !(beta > 0.0) || !(tau_g > 0.0) {
        return Err(Error::invalid(format!(
            "beta and tau_g must be > 0, got beta={beta}, tau_g={tau_g}"
        )));
    }
    if !(a >= SQRT_2_OVER_PI) {
        return Err(Error::domain(format!(
            "tau_star requires a >= sqrt(2/pi), got a = {a}"
        )));
    }
    let ratio = beta / tau_g;
    let f = |tau: f64| tau_characteristic(a, ratio, tau);
    if f(0.0) == 0.0 {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    let mut doublings = 0;
    while f(hi) > 0.0 {
        hi *= 2.0;
        doublings += 1;
        if doublings > 200 {
            return Err(Error::Convergence {
                iterations: doublings,
                residual: f(hi),
                context: ", tau_star bracket never went negative".into(),
            });
        }
    }
    // The characteristic value scales with a, so the achievable absolute
    // residual does too; keep the strict 1e-12 target at moderate a.
    let tol = 1e-12 * (a.abs() * 1e-2).max(1.0);
    let mut lo = 0.0;
    let mut root = 0.5 * hi;
    let mut residual = f(root).abs();
    for iter in 0..300 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm.abs() < residual {
            residual = fm.abs();
            root = mid;
        }
        if fm > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if (iter >= 79 && residual <= tol) || hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    if residual > tol {
        return Err(Error::Convergence {
            iterations: 300,
            residual,
            context: ", tau_star bisection".into(),
        });
    }
    Ok(root)
}

/// Limit of (1/n)·G for a Gaussian vector of per-entry variance ω², before
/// minimizing over τ:
///
/// `ω²/(2μ(μ+1))·[(1 − √(2/π)(τ/ω)e^{−τ²/(2ω²)}) + (τ²/ω² − 1)erfc(τ/(√2ω))]
///  − ω²/(2(μ+1)²)·(γ(μ+1)/(δεω) + (τ/ω)erfc(τ/(√2ω)) − √(2/π)e^{−τ²/(2ω²)})₊²`
pub fn g_limit(mu: f64, tau: f64, gamma: f64, omega: f64, cfg: &AsymptoticConfig) -> Result<f64> {
    if !(mu > 0.0) || !(omega > 0.0) || !(tau >= 0.0) {
        return Err(Error::invalid(format!(
            "g_limit requires mu > 0, omega > 0, tau >= 0; got mu={mu}, omega={omega}, tau={tau}"
        )));
    }
    let t = tau / omega;
    let gauss = (-0.5 * t * t).exp();
    let tail = erfc(t / std::f64::consts::SQRT_2);
    let first = (1.0 - SQRT_2_OVER_PI * t * gauss) + (t * t - 1.0) * tail;
    let a_part = if gamma == 0.0 {
        0.0
    } else {
        gamma * (mu + 1.0) / (cfg.delta * cfg.eps_train * omega)
    };
    let second = pos(a_part + t * tail - SQRT_2_OVER_PI * gauss);
    Ok(omega * omega / (2.0 * mu * (mu + 1.0)) * first
        - omega * omega / (2.0 * (mu + 1.0) * (mu + 1.0)) * second * second)
}

/// Intermediate quantities of the soft-threshold (indicator) term, shared by
/// the objective and its gradient.
struct IndicatorParts {
    /// γ(τ_g+β)/(δεβω).
    a: f64,
    /// τ_g/β.
    mu: f64,
    /// √(α²+σ²).
    omega: f64,
    /// Root of the characteristic equation; `None` when the indicator is off.
    tau: Option<f64>,
}

fn indicator_parts(v: &SaddleVars, cfg: &AsymptoticConfig) -> Result<IndicatorParts> {
    let omega = (v.alpha * v.alpha + cfg.sigma * cfg.sigma).sqrt();
    if omega == 0.0 {
        return Err(Error::domain("alpha^2 + sigma^2 must be positive"));
    }
    let mu = v.tau_g / v.beta;
    let a = if v.gamma == 0.0 {
        0.0
    } else {
        v.gamma * (v.tau_g + v.beta) / (cfg.delta * cfg.eps_train * v.beta * omega)
    };
    let tau = if a > SQRT_2_OVER_PI {
        Some(tau_star(a, v.beta, v.tau_g)?)
    } else {
        None
    };
    Ok(IndicatorParts { a, mu, omega, tau })
}

fn validate_point(v: &SaddleVars, cfg: &AsymptoticConfig) -> Result<()> {
    if !(v.tau_h > 0.0) || !(v.tau_g > 0.0) {
        return Err(Error::invalid(format!(
            "tau_h and tau_g must be > 0, got tau_h={}, tau_g={}",
            v.tau_h, v.tau_g
        )));
    }
    if !(v.beta > 0.0) || !(v.alpha >= 0.0) || !(v.gamma >= 0.0) {
        return Err(Error::invalid(format!(
            "need beta > 0, alpha >= 0, gamma >= 0; got beta={}, alpha={}, gamma={}",
            v.beta, v.alpha, v.gamma
        )));
    }
    if !(cfg.eps_train > 0.0) {
        return Err(Error::invalid(
            "the scalar objective is defined for eps_train > 0; the eps_train = 0 \
             case is handled by the closed-form branch of the solver",
        ));
    }
    Ok(())
}

/// The convex-concave objective D at a point.
pub fn saddle_objective(v: &SaddleVars, cfg: &AsymptoticConfig) -> Result<f64> {
    validate_point(v, cfg)?;
    let parts = indicator_parts(v, cfg)?;
    let omega_sq = parts.omega * parts.omega;
    let delta = cfg.delta;
    let sum_tg_b = v.tau_g + v.beta;

    let mut d = delta * v.beta * omega_sq / (2.0 * sum_tg_b);
    if let Some(tau) = parts.tau {
        let coeff = delta * v.beta * v.beta * omega_sq / (2.0 * v.tau_g * sum_tg_b);
        d += coeff * (erf(tau / std::f64::consts::SQRT_2) - parts.a * tau);
    }
    d += -(v.alpha / (2.0 * v.tau_h)) * (v.gamma * v.gamma + v.beta * v.beta);
    let r = radial(v, cfg);
    d += v.gamma * r;
    d += -v.alpha * v.tau_h / 2.0 + v.beta * v.tau_g / 2.0;
    Ok(d)
}

/// √(α²β²/τ_h² + V²).
fn radial(v: &SaddleVars, cfg: &AsymptoticConfig) -> f64 {
    let ab = v.alpha * v.beta / v.tau_h;
    (ab * ab + cfg.v_norm * cfg.v_norm).sqrt()
}

/// Analytic gradient of D in the order (α, β, γ, τ_h, τ_g).
///
/// The soft-threshold term is differentiated through the unminimized limit
/// function with τ held at its optimal value (envelope theorem); the term and
/// its first derivatives vanish continuously at the indicator boundary, so D
/// is C¹ everywhere in the admissible region.
pub fn saddle_gradient(v: &SaddleVars, cfg: &AsymptoticConfig) -> Result<[f64; 5]> {
    validate_point(v, cfg)?;
    let parts = indicator_parts(v, cfg)?;
    let (omega, mu, a) = (parts.omega, parts.mu, parts.a);
    let omega_sq = omega * omega;
    let delta = cfg.delta;
    let sum_tg_b = v.tau_g + v.beta;
    let r = radial(v, cfg);

    // Soft-threshold term contributions via (ω, μ, a) chain rule.
    let (mut t_alpha, mut t_beta, mut t_gamma, mut t_tau_g) = (0.0, 0.0, 0.0, 0.0);
    if let Some(tau) = parts.tau {
        let gauss = (-0.5 * tau * tau).exp();
        let tail = erfc(tau / std::f64::consts::SQRT_2);
        let e1 = (1.0 - SQRT_2_OVER_PI * tau * gauss) + (tau * tau - 1.0) * tail;
        let q = pos(a + tau * tail - SQRT_2_OVER_PI * gauss);
        let mu1 = mu + 1.0;

        let dh_domega = omega / (mu * mu1) * e1 - omega / (mu1 * mu1) * q * q;
        let dh_dmu =
            -omega_sq * (2.0 * mu + 1.0) / (2.0 * mu * mu * mu1 * mu1) * e1
                + omega_sq / (mu1 * mu1 * mu1) * q * q;
        let dh_da = -omega_sq / (mu1 * mu1) * q;

        let da_domega = -a / omega;
        let da_dmu = v.gamma / (delta * cfg.eps_train * omega);
        let da_dgamma = mu1 / (delta * cfg.eps_train * omega);

        let total_omega = dh_domega + dh_da * da_domega;
        let total_mu = dh_dmu + dh_da * da_dmu;

        t_alpha = delta * total_omega * (v.alpha / omega);
        t_beta = delta * total_mu * (-mu / v.beta);
        t_tau_g = delta * total_mu / v.beta;
        t_gamma = delta * dh_da * da_dgamma;
    }

    // Cross terms of γ√(α²β²/τ_h² + V²); zero model norm with γ = 0 is the
    // only way r can vanish, and then the whole term is 0.
    let (r_alpha, r_beta, r_tau_h) = if r > 0.0 {
        let c = v.gamma / r;
        (
            c * v.alpha * v.beta * v.beta / (v.tau_h * v.tau_h),
            c * v.alpha * v.alpha * v.beta / (v.tau_h * v.tau_h),
            -c * v.alpha * v.alpha * v.beta * v.beta / (v.tau_h * v.tau_h * v.tau_h),
        )
    } else {
        (0.0, 0.0, 0.0)
    };

    let g_alpha = delta * v.beta * v.alpha / sum_tg_b + t_alpha
        - (v.gamma * v.gamma + v.beta * v.beta) / (2.0 * v.tau_h)
        + r_alpha
        - v.tau_h / 2.0;
    let g_beta = delta * omega_sq * v.tau_g / (2.0 * sum_tg_b * sum_tg_b) + t_beta
        - v.alpha * v.beta / v.tau_h
        + r_beta
        + v.tau_g / 2.0;
    let g_gamma = t_gamma - v.alpha * v.gamma / v.tau_h + r;
    let g_tau_h = v.alpha * (v.gamma * v.gamma + v.beta * v.beta) / (2.0 * v.tau_h * v.tau_h)
        + r_tau_h
        - v.alpha / 2.0;
    let g_tau_g = -delta * v.beta * omega_sq / (2.0 * sum_tg_b * sum_tg_b) + t_tau_g + v.beta / 2.0;

    Ok([g_alpha, g_beta, g_gamma, g_tau_h, g_tau_g])
}

// ---------------------------------------------------------------------------
// Solver
// ---------------------------------------------------------------------------

/// Box definition and lower floors for the iterates.
#[derive(Debug, Clone, Copy)]
struct Boxes {
    k_alpha: f64,
    k_beta: f64,
}

/// Lower/upper clamp for each coordinate (α, β, γ, τ_h, τ_g). Values within
/// a factor of two of the floor snap onto it exactly so that bound detection
/// does not flicker.
fn clamp(x: [f64; 5], b: &Boxes) -> [f64; 5] {
    let snap = |v: f64| if v < 2.0 * FLOOR { FLOOR } else { v };
    [
        snap(x[0]).min(b.k_alpha),
        snap(x[1]).min(b.k_beta),
        if x[2] < FLOOR { 0.0 } else { x[2] },
        snap(x[3]),
        snap(x[4]),
    ]
}

/// Projected gradient: zero out components pushing outside an active bound.
/// Minimization coordinates descend along −g, maximization ascend along +g.
fn projected_gradient(x: [f64; 5], g: [f64; 5], b: &Boxes) -> [f64; 5] {
    let mut pg = g;
    // α (min block): at lower floor and gradient positive -> stuck; at upper.
    if x[0] <= FLOOR && g[0] > 0.0 {
        pg[0] = 0.0;
    }
    if x[0] >= b.k_alpha && g[0] < 0.0 {
        pg[0] = 0.0;
    }
    // τ_g (min block).
    if x[4] <= FLOOR && g[4] > 0.0 {
        pg[4] = 0.0;
    }
    // β (max block): at upper bound and gradient positive -> stuck.
    if x[1] >= b.k_beta && g[1] > 0.0 {
        pg[1] = 0.0;
    }
    if x[1] <= FLOOR && g[1] < 0.0 {
        pg[1] = 0.0;
    }
    // γ ≥ 0 (max block).
    if x[2] <= 0.0 && g[2] < 0.0 {
        pg[2] = 0.0;
    }
    // τ_h > 0 (max block).
    if x[3] <= FLOOR && g[3] < 0.0 {
        pg[3] = 0.0;
    }
    pg
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Max projected-gradient norm across the min block (α, τ_g) and the max
/// block (β, γ, τ_h).
fn stationarity(x: [f64; 5], g: [f64; 5], b: &Boxes) -> f64 {
    let pg = projected_gradient(x, g, b);
    let min_block = (pg[0] * pg[0] + pg[4] * pg[4]).sqrt();
    let max_block = (pg[1] * pg[1] + pg[2] * pg[2] + pg[3] * pg[3]).sqrt();
    min_block.max(max_block)
}

/// Indicator activity, used to keep finite differences on one side of the
/// (second-order) kink at a = √(2/π).
fn indicator_active(v: &SaddleVars, cfg: &AsymptoticConfig) -> bool {
    let omega = (v.alpha * v.alpha + cfg.sigma * cfg.sigma).sqrt();
    if omega == 0.0 || v.gamma == 0.0 {
        return false;
    }
    v.gamma * (v.tau_g + v.beta) / (cfg.delta * cfg.eps_train * v.beta * omega) > SQRT_2_OVER_PI
}

/// Gradient as a function of the packed variable vector.
fn grad_at(x: [f64; 5], cfg: &AsymptoticConfig) -> Result<[f64; 5]> {
    saddle_gradient(&SaddleVars::from_array(x), cfg)
}

fn value_at(x: [f64; 5], cfg: &AsymptoticConfig) -> Result<f64> {
    saddle_objective(&SaddleVars::from_array(x), cfg)
}

/// Objective value for line-search trials; a failed evaluation (extreme
/// indicator ratios) just means the trial step is rejected.
fn try_value(x: [f64; 5], cfg: &AsymptoticConfig) -> Option<f64> {
    value_at(x, cfg).ok().filter(|v| v.is_finite())
}

/// Columns of the gradient Jacobian by finite differences of the analytic
/// gradient. Steps that straddle the indicator kink fall back to one-sided
/// differences on the center's side.
fn fd_jacobian_cols(
    x: [f64; 5],
    cfg: &AsymptoticConfig,
    b: &Boxes,
    cols: &[usize],
) -> Result<Vec<[f64; 5]>> {
    let state0 = indicator_active(&SaddleVars::from_array(x), cfg);
    let mut out = Vec::with_capacity(cols.len());
    for &j in cols {
        // Shrink the step until both probes stay on the center's side of the
        // indicator kink; second derivatives jump across it, so a straddling
        // difference would blend the two regimes.
        let mut h = 1e-6 * (1.0 + x[j].abs());
        let mut chosen = None;
        for _ in 0..8 {
            let mut xp = x;
            let mut xm = x;
            xp[j] += h;
            xm[j] -= h;
            xp = clamp(xp, b);
            xm = clamp(xm, b);
            let state_p = indicator_active(&SaddleVars::from_array(xp), cfg);
            let state_m = indicator_active(&SaddleVars::from_array(xm), cfg);
            if state_p == state0 && state_m == state0 {
                chosen = Some((xp, xm));
                break;
            }
            h *= 0.1;
        }
        let (ga, gb, denom) = match chosen {
            Some((xp, xm)) => (grad_at(xp, cfg)?, grad_at(xm, cfg)?, xp[j] - xm[j]),
            None => {
                // The center sits essentially on the kink; fall back to a
                // one-sided difference on whichever side matches.
                let h = 1e-8 * (1.0 + x[j].abs());
                let mut xp = x;
                let mut xm = x;
                xp[j] += h;
                xm[j] -= h;
                xp = clamp(xp, b);
                xm = clamp(xm, b);
                if indicator_active(&SaddleVars::from_array(xp), cfg) == state0 {
                    (grad_at(xp, cfg)?, grad_at(x, cfg)?, xp[j] - x[j])
                } else {
                    (grad_at(x, cfg)?, grad_at(xm, cfg)?, x[j] - xm[j])
                }
            }
        };
        let mut col = [0.0; 5];
        for i in 0..5 {
            col[i] = (ga[i] - gb[i]) / denom;
        }
        out.push(col);
    }
    Ok(out)
}

/// Coordinates pinned by an active bound (projected gradient zeroed there).
fn bound_active(x: [f64; 5], g: [f64; 5], b: &Boxes) -> [bool; 5] {
    let pg = projected_gradient(x, g, b);
    let mut active = [false; 5];
    for i in 0..5 {
        active[i] = pg[i] == 0.0 && g[i] != 0.0;
    }
    active
}

/// Newton step restricted to the free coordinates; pinned ones stay put.
fn solve_reduced(jac: &[[f64; 5]; 5], g: &[f64; 5], free: &[usize]) -> Option<[f64; 5]> {
    let k = free.len();
    if k == 0 {
        return None;
    }
    let mut m = [[0.0f64; 6]; 5];
    for (ri, &i) in free.iter().enumerate() {
        for (ci, &j) in free.iter().enumerate() {
            m[ri][ci] = jac[i][j];
        }
        m[ri][k] = g[i];
    }
    for col in 0..k {
        let mut piv = col;
        for row in col + 1..k {
            if m[row][col].abs() > m[piv][col].abs() {
                piv = row;
            }
        }
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        for row in col + 1..k {
            let f = m[row][col] / m[col][col];
            for c in col..=k {
                m[row][c] -= f * m[col][c];
            }
        }
    }
    let mut sol = [0.0f64; 5];
    for ri in (0..k).rev() {
        let mut acc = m[ri][k];
        for ci in ri + 1..k {
            acc -= m[ri][ci] * sol[free[ci]];
        }
        sol[free[ri]] = acc / m[ri][ri];
    }
    Some(sol)
}

/// Minimize D over (α, τ_g) at fixed (β, γ, τ_h): projected Newton with an
/// Armijo-backtracked gradient fallback. Strict joint convexity makes the
/// value function of the outer variables well-defined.
fn inner_minimize(
    x: &mut [f64; 5],
    cfg: &AsymptoticConfig,
    b: &Boxes,
    max_iters: usize,
) -> Result<f64> {
    let idx = [0usize, 4usize];
    for _ in 0..max_iters {
        let g = grad_at(*x, cfg)?;
        let pg = projected_gradient(*x, g, b);
        let gnorm = (pg[0] * pg[0] + pg[4] * pg[4]).sqrt();
        if gnorm <= INNER_TOL {
            return Ok(gnorm);
        }

        // 2x2 Newton from one-sided-aware finite differences of the gradient.
        let cols = fd_jacobian_cols(*x, cfg, b, &idx)?;
        let h = [
            [cols[0][idx[0]], cols[1][idx[0]]],
            [cols[0][idx[1]], cols[1][idx[1]]],
        ];
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        let mut step = if det.abs() > 1e-300 && h[0][0] > 0.0 && det > 0.0 {
            // Newton direction −H⁻¹g, guaranteed descent for SPD H.
            [
                -(h[1][1] * g[idx[0]] - h[0][1] * g[idx[1]]) / det,
                -(h[0][0] * g[idx[1]] - h[1][0] * g[idx[0]]) / det,
            ]
        } else {
            let scale = 1.0 / (1.0 + norm(&[g[idx[0]], g[idx[1]]]));
            [-g[idx[0]] * scale, -g[idx[1]] * scale]
        };

        let f0 = value_at(*x, cfg)?;
        let slope = g[idx[0]] * step[0] + g[idx[1]] * step[1];
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let mut xt = *x;
            xt[idx[0]] = (x[idx[0]] + t * step[0]).clamp(FLOOR, b.k_alpha);
            xt[idx[1]] = (x[idx[1]] + t * step[1]).max(FLOOR);
            match try_value(xt, cfg) {
                Some(ft)
                    if ft <= f0 + ARMIJO_C * t * slope
                        || ft < f0 - 1e-15 * f0.abs().max(1.0) =>
                {
                    *x = xt;
                    accepted = true;
                    break;
                }
                _ => t *= BACKTRACK,
            }
        }
        if !accepted {
            // Value resolution exhausted; polish by damped Newton on the
            // gradient norm instead of the value.
            let gn0 = gnorm;
            let mut t = 1.0;
            for _ in 0..20 {
                let mut xt = *x;
                xt[idx[0]] = (x[idx[0]] + t * step[0]).clamp(FLOOR, b.k_alpha);
                xt[idx[1]] = (x[idx[1]] + t * step[1]).max(FLOOR);
                if let Ok(gt) = grad_at(xt, cfg) {
                    let pgt = projected_gradient(xt, gt, b);
                    let gnt = (pgt[0] * pgt[0] + pgt[4] * pgt[4]).sqrt();
                    if gnt < gn0 {
                        *x = xt;
                        accepted = true;
                        break;
                    }
                }
                t *= BACKTRACK;
            }
            if !accepted {
                // Try a pure gradient probe before giving up on this pass.
                step = [-pg[idx[0]], -pg[idx[1]]];
                let mut t = 1e-2 / (1.0 + norm(&step));
                let mut improved = false;
                for _ in 0..20 {
                    let mut xt = *x;
                    xt[idx[0]] = (x[idx[0]] + t * step[0]).clamp(FLOOR, b.k_alpha);
                    xt[idx[1]] = (x[idx[1]] + t * step[1]).max(FLOOR);
                    if try_value(xt, cfg).is_some_and(|ft| ft < f0) {
                        *x = xt;
                        improved = true;
                        break;
                    }
                    t *= BACKTRACK;
                }
                if !improved {
                    return Ok(gnorm);
                }
            }
        }
    }
    let g = grad_at(*x, cfg)?;
    let pg = projected_gradient(*x, g, b);
    Ok((pg[0] * pg[0] + pg[4] * pg[4]).sqrt())
}

/// Heuristic interior starting point.
fn initial_guess(cfg: &AsymptoticConfig, b: &Boxes) -> [f64; 5] {
    let sigma = cfg.sigma.max(0.05);
    let mut x = if cfg.delta > 1.2 {
        // Perturb off the eps_train = 0 stationary point.
        let alpha = sigma / (cfg.delta - 1.0).sqrt();
        let beta = sigma * (cfg.delta - 1.0).sqrt();
        [alpha, beta, 0.0, beta, alpha]
    } else {
        let alpha = sigma * (1.0 + 1.0 / cfg.delta.sqrt());
        let beta = sigma * (1.0 + cfg.delta.sqrt()) / 2.0;
        [alpha, beta, 0.0, beta, alpha]
    };
    // Start with the indicator just active.
    let omega = (x[0] * x[0] + cfg.sigma * cfg.sigma).sqrt();
    let gamma_edge =
        SQRT_2_OVER_PI * cfg.delta * cfg.eps_train * x[1] * omega / (x[4] + x[1]);
    x[2] = 1.5 * gamma_edge;
    clamp(x, b)
}

/// Levenberg-Marquardt iteration on F(x) = P∇D(x): robust to the mildly
/// discontinuous Jacobian near the indicator kink and the shrinkage boundary.
/// Returns the best (stationarity, point) found.
fn lm_polish(
    mut x: [f64; 5],
    cfg: &AsymptoticConfig,
    b: &Boxes,
    max_iter: usize,
) -> Result<(f64, [f64; 5])> {
    let mut g = grad_at(x, cfg)?;
    let mut best = (stationarity(x, g, b), x);
    let mut nu = 1e-8;
    for _ in 0..max_iter {
        let stat = stationarity(x, g, b);
        if stat <= STATIONARITY_TOL * 1e-3 {
            break;
        }
        let active = bound_active(x, g, b);
        let free: Vec<usize> = (0..5).filter(|&i| !active[i]).collect();
        if free.is_empty() {
            break;
        }
        let cols = fd_jacobian_cols(x, cfg, b, &free)?;
        // Reduced residual vector and Jacobian (free coordinates only).
        let k = free.len();
        let mut jr = vec![vec![0.0f64; k]; k];
        let mut fr = vec![0.0f64; k];
        for (ri, &i) in free.iter().enumerate() {
            fr[ri] = g[i];
            for (ci, col) in cols.iter().enumerate() {
                jr[ri][ci] = col[i];
            }
        }
        // Normal equations with Marquardt scaling.
        let mut jtj = vec![vec![0.0f64; k]; k];
        let mut jtf = vec![0.0f64; k];
        for a_ in 0..k {
            for c in 0..k {
                let mut acc = 0.0;
                for r in 0..k {
                    acc += jr[r][a_] * jr[r][c];
                }
                jtj[a_][c] = acc;
            }
            let mut acc = 0.0;
            for r in 0..k {
                acc += jr[r][a_] * fr[r];
            }
            jtf[a_] = acc;
        }

        let mut improved = false;
        for _ in 0..25 {
            // Solve (JᵀJ + ν·diag(JᵀJ)) s = Jᵀf.
            let mut m = vec![vec![0.0f64; k + 1]; k];
            for r in 0..k {
                for c in 0..k {
                    m[r][c] = jtj[r][c];
                }
                m[r][r] += nu * jtj[r][r].abs().max(1e-12);
                m[r][k] = jtf[r];
            }
            let mut ok = true;
            for col in 0..k {
                let mut piv = col;
                for row in col + 1..k {
                    if m[row][col].abs() > m[piv][col].abs() {
                        piv = row;
                    }
                }
                if m[piv][col].abs() < 1e-300 {
                    ok = false;
                    break;
                }
                m.swap(col, piv);
                for row in col + 1..k {
                    let f = m[row][col] / m[col][col];
                    for c in col..=k {
                        m[row][c] -= f * m[col][c];
                    }
                }
            }
            if !ok {
                nu = (nu * 10.0).min(1e8);
                continue;
            }
            let mut step = vec![0.0f64; k];
            for r in (0..k).rev() {
                let mut acc = m[r][k];
                for c in r + 1..k {
                    acc -= m[r][c] * step[c];
                }
                step[r] = acc / m[r][r];
            }
            let mut xt = x;
            for (ri, &i) in free.iter().enumerate() {
                xt[i] -= step[ri];
            }
            xt = clamp(xt, b);
            if let Ok(gt) = grad_at(xt, cfg) {
                let st = stationarity(xt, gt, b);
                if st < stat {
                    x = xt;
                    g = gt;
                    nu = (nu / 3.0).max(1e-12);
                    improved = true;
                    if st < best.0 {
                        best = (st, x);
                    }
                    break;
                }
            }
            nu = (nu * 4.0).min(1e8);
        }
        if !improved {
            break;
        }
    }
    Ok(best)
}

/// One attempt at solving the saddle within the given boxes, optionally from
/// a warm start. The nested phase is budgeted: it only needs to reach the
/// basin of the full-system Newton polish.
fn solve_in_boxes(
    cfg: &AsymptoticConfig,
    b: &Boxes,
    start: Option<[f64; 5]>,
) -> Result<SaddleSolution> {
    if let Some(s) = start {
        // A warm start is expected to be in the Newton basin already.
        let (stat, x) = lm_polish(clamp(s, b), cfg, b, 150)?;
        if stat <= 1e-7 {
            return finish_solution(x, stat, cfg, b);
        }
    }
    let mut x = match start {
        Some(s) => clamp(s, b),
        None => initial_guess(cfg, b),
    };
    let mut inner_gnorm = inner_minimize(&mut x, cfg, b, 60)?;

    // Outer concave maximization over (β, γ, τ_h) on the inner value function;
    // Danskin gives its gradient as the partial gradient of D at the inner
    // minimizer. Newton steps from the finite-difference Jacobian of that
    // reduced gradient, with projected-gradient ascent as fallback.
    let out = [1usize, 2usize, 3usize];
    let mut ascent_step = 1.0;
    for _ in 0..60 {
        let g = grad_at(x, cfg)?;
        let stat = stationarity(x, g, b);
        if stat <= STATIONARITY_TOL && inner_gnorm <= INNER_TOL.max(STATIONARITY_TOL) {
            break;
        }

        let pg = projected_gradient(x, g, b);
        let outer_pg = [pg[1], pg[2], pg[3]];
        let outer_norm = norm(&outer_pg);
        if outer_norm <= STATIONARITY_TOL * 0.5 {
            // Outer done; tighten the inner block and re-check.
            inner_gnorm = inner_minimize(&mut x, cfg, b, 60)?;
            let g2 = grad_at(x, cfg)?;
            if stationarity(x, g2, b) <= STATIONARITY_TOL {
                break;
            }
        }

        // Reduced Newton system for the free coordinates of the max block.
        let active = bound_active(x, g, b);
        let free_out: Vec<usize> = out.iter().copied().filter(|&i| !active[i]).collect();
        let newton = if free_out.is_empty() {
            None
        } else {
            let cols = fd_jacobian_cols(x, cfg, b, &free_out)?;
            let mut jac = [[0.0; 5]; 5];
            for (&j, col) in free_out.iter().zip(cols.iter()) {
                for i in 0..5 {
                    jac[i][j] = col[i];
                }
            }
            solve_reduced(&jac, &g, &free_out)
        };
        let phi0 = value_at(x, cfg)?;

        // Evaluates an outer trial point: inner re-solve plus value.
        let probe = |xt: [f64; 5]| -> Option<([f64; 5], f64, f64)> {
            let mut solved = xt;
            let gin = inner_minimize(&mut solved, cfg, b, 40).ok()?;
            let phit = try_value(solved, cfg)?;
            Some((solved, gin, phit))
        };

        let mut moved = false;
        if let Some(d) = newton {
            // Ascent direction check against the projected gradient.
            let dir = [-d[1], -d[2], -d[3]];
            let along = dir[0] * outer_pg[0] + dir[1] * outer_pg[1] + dir[2] * outer_pg[2];
            if along > 0.0 {
                let mut t = 1.0;
                for _ in 0..12 {
                    let mut xt = x;
                    for (k, &oi) in out.iter().enumerate() {
                        xt[oi] += t * dir[k];
                    }
                    xt = clamp(xt, b);
                    if let Some((solved, gin, phit)) = probe(xt) {
                        if phit >= phi0 + ARMIJO_C * t * along {
                            x = solved;
                            inner_gnorm = gin;
                            moved = true;
                            break;
                        }
                    }
                    t *= BACKTRACK;
                }
            }
        }
        if !moved {
            // Projected gradient ascent with an adaptive step.
            let mut t = ascent_step;
            let mut accepted = false;
            for _ in 0..20 {
                let mut xt = x;
                for &oi in &out {
                    xt[oi] += t * pg[oi];
                }
                xt = clamp(xt, b);
                if let Some((solved, gin, phit)) = probe(xt) {
                    if phit >= phi0 + ARMIJO_C * t * outer_norm * outer_norm {
                        x = solved;
                        inner_gnorm = gin;
                        ascent_step = (t * 2.0).min(1e3);
                        accepted = true;
                        break;
                    }
                }
                t *= BACKTRACK;
            }
            if !accepted {
                // Ascent stalled at value resolution: final full-system
                // Newton polish below will finish the job.
                break;
            }
        }
    }

    // Levenberg-Marquardt polish on the projected-gradient system.
    let (stat, x) = lm_polish(x, cfg, b, 150)?;

    finish_solution(x, stat, cfg, b)
}

/// Validates a converged point (tolerance, box interiority) and packages it.
fn finish_solution(
    x: [f64; 5],
    stat: f64,
    cfg: &AsymptoticConfig,
    b: &Boxes,
) -> Result<SaddleSolution> {
    if stat > 1e-7 {
        return Err(Error::Convergence {
            iterations: 60,
            residual: stat,
            context: ", saddle stationarity target missed".into(),
        });
    }
    // The boxes are artificial; a solution on them means they were too small.
    if x[0] >= 0.999 * b.k_alpha {
        return Err(Error::BoxTooSmall {
            bound: "k_alpha",
            value: x[0],
            limit: b.k_alpha,
        });
    }
    if x[1] >= 0.999 * b.k_beta {
        return Err(Error::BoxTooSmall {
            bound: "k_beta",
            value: x[1],
            limit: b.k_beta,
        });
    }
    if x[0] <= FLOOR * 2.0 || x[1] <= FLOOR * 2.0 {
        return Err(Error::InternalConsistency(format!(
            "saddle pinned at the lower boundary: alpha={}, beta={}",
            x[0], x[1]
        )));
    }

    let v = SaddleVars::from_array(x);
    let parts = indicator_parts(&v, cfg)?;
    Ok(SaddleSolution {
        alpha: v.alpha,
        beta: v.beta,
        gamma: v.gamma,
        tau_h: v.tau_h,
        tau_g: v.tau_g,
        tau_star: parts.tau.unwrap_or(0.0),
        d_value: value_at(x, cfg)?,
        stationarity: stat,
    })
}

/// Closed-form stationary point of the eps_train = 0 objective (least
/// squares): α = σ/√(δ−1), τ_g = α, τ_h = β = σ√(δ−1), γ = 0.
fn closed_form_ols(cfg: &AsymptoticConfig) -> Result<SaddleSolution> {
    if !(cfg.delta > 1.0) {
        return Err(Error::domain(format!(
            "eps_train = 0 requires delta > 1, got {}",
            cfg.delta
        )));
    }
    let root = (cfg.delta - 1.0).sqrt();
    let alpha = cfg.sigma / root;
    let beta = cfg.sigma * root;
    Ok(SaddleSolution {
        alpha,
        beta,
        gamma: 0.0,
        tau_h: beta,
        tau_g: alpha,
        tau_star: 0.0,
        d_value: (cfg.delta - 1.0) * cfg.sigma * cfg.sigma / 2.0,
        stationarity: 0.0,
    })
}

/// Solve within auto-enlarged boxes, optionally warm-started.
fn solve_boxed(cfg: &AsymptoticConfig, start: Option<[f64; 5]>) -> Result<SaddleSolution> {
    let mut boxes = Boxes {
        k_alpha: 100.0 * cfg.sigma.max(cfg.v_norm).max(1.0),
        k_beta: 100.0 * cfg.sigma * (1.0 + cfg.delta.sqrt()) + 100.0,
    };
    for _ in 0..6 {
        match solve_in_boxes(cfg, &boxes, start) {
            Ok(sol) => return Ok(sol),
            Err(Error::BoxTooSmall { bound, .. }) => {
                if bound == "k_alpha" {
                    boxes.k_alpha *= 2.0;
                } else {
                    boxes.k_beta *= 2.0;
                }
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::InternalConsistency(
        "saddle solution kept touching the artificial boxes after 6 enlargements".into(),
    ))
}

fn as_start(sol: &SaddleSolution) -> [f64; 5] {
    [sol.alpha, sol.beta, sol.gamma, sol.tau_h, sol.tau_g]
}

/// Solves the saddle problem for the given configuration.
///
/// `eps_train = 0` (requires `delta > 1`) returns the closed-form least
/// squares point directly. Otherwise the nested convex-concave scheme plus a
/// full Newton polish runs inside artificial boxes `K_α = 100·max(1, σ, V)`
/// and `K_β = 100·σ(1+√δ) + 100` (doubled and retried if the solution ever
/// touches them). Configurations far from the well-behaved region are reached
/// by continuation: first in ε at the anchor aspect ratio δ = 2, then
/// geometrically in δ toward the target, warm-starting every step.
pub fn solve_saddle(cfg: &AsymptoticConfig) -> Result<SaddleSolution> {
    if !(cfg.delta > 0.0) {
        return Err(Error::invalid("delta must be > 0"));
    }
    if cfg.eps_train == 0.0 {
        return closed_form_ols(cfg);
    }
    // Direct attempt first; the anchor region handles most requests.
    if let Ok(sol) = solve_boxed(cfg, None) {
        return Ok(sol);
    }

    // Continuation. Anchor at δ = 2 with a moderate ε, walk ε to the target,
    // then walk δ geometrically.
    let anchor = cfg.with_delta(2.0);
    let mut eps = cfg.eps_train.clamp(0.1, 0.5);
    let mut sol = solve_boxed(&anchor.with_eps_train(eps), None)?;
    let mut guard = 0;
    while eps != cfg.eps_train {
        let ratio: f64 = 1.6;
        eps = if cfg.eps_train > eps {
            (eps * ratio).min(cfg.eps_train)
        } else {
            (eps / ratio).max(cfg.eps_train)
        };
        sol = solve_boxed(&anchor.with_eps_train(eps), Some(as_start(&sol)))?;
        guard += 1;
        if guard > 60 {
            return Err(Error::Convergence {
                iterations: guard,
                residual: f64::NAN,
                context: ", eps continuation did not terminate".into(),
            });
        }
    }
    let mut delta = 2.0;
    let mut step: f64 = 1.35;
    while delta != cfg.delta {
        let next = if cfg.delta > delta {
            (delta * step).min(cfg.delta)
        } else {
            (delta / step).max(cfg.delta)
        };
        match solve_boxed(&cfg.with_delta(next), Some(as_start(&sol))) {
            Ok(s) => {
                sol = s;
                delta = next;
            }
            Err(e) => {
                // Refine the continuation step; switch strategies when it
                // collapses: walk delta at an easy budget first, then walk
                // the budget at the target delta.
                step = step.sqrt();
                if step < 1.0009 {
                    return solve_via_easy_eps(cfg).map_err(|_| e);
                }
            }
        }
        guard += 1;
        if guard > 200 {
            return solve_via_easy_eps(cfg);
        }
    }
    Ok(sol)
}

/// Fallback continuation: reach the target δ at a small, well-behaved budget
/// and then walk ε to its target with warm starts.
fn solve_via_easy_eps(cfg: &AsymptoticConfig) -> Result<SaddleSolution> {
    let easy = 0.05 * cfg.sigma.max(cfg.v_norm).max(0.2);
    let easy = easy.min(cfg.eps_train);
    let anchor = cfg.with_delta(2.0).with_eps_train(easy);
    let mut sol = solve_boxed(&anchor, None)?;
    let mut delta = 2.0;
    let mut step: f64 = 1.3;
    let mut guard = 0;
    while delta != cfg.delta {
        let next = if cfg.delta > delta {
            (delta * step).min(cfg.delta)
        } else {
            (delta / step).max(cfg.delta)
        };
        match solve_boxed(&cfg.with_delta(next).with_eps_train(easy), Some(as_start(&sol))) {
            Ok(s) => {
                sol = s;
                delta = next;
            }
            Err(e) => {
                step = step.sqrt();
                if step < 1.0009 {
                    return Err(e);
                }
            }
        }
        guard += 1;
        if guard > 200 {
            return Err(Error::Convergence {
                iterations: guard,
                residual: f64::NAN,
                context: ", delta continuation (easy-eps) did not terminate".into(),
            });
        }
    }
    let mut eps = easy;
    let mut step: f64 = 1.4;
    while eps != cfg.eps_train {
        let next = (eps * step).min(cfg.eps_train);
        match solve_boxed(&cfg.with_eps_train(next), Some(as_start(&sol))) {
            Ok(s) => {
                sol = s;
                eps = next;
            }
            Err(e) => {
                step = step.sqrt();
                if step < 1.0009 {
                    return Err(e);
                }
            }
        }
        guard += 1;
        if guard > 400 {
            return Err(Error::Convergence {
                iterations: guard,
                residual: f64::NAN,
                context: ", eps continuation (easy-eps) did not terminate".into(),
            });
        }
    }
    Ok(sol)
}

/// Asymptotic (SR, AR) implied by a saddle solution.
///
/// SR = σ² + α*². The estimator-norm limit is `β*τ*√(α*²+σ²)/(ε·τ_g*)` for
/// ε > 0; at ε = 0 (least squares, δ > 1) it is `√(V² + σ²/(δ−1))` because
/// the estimation error is uncorrelated with θ₀ in the limit.
pub fn asymptotic_risks(sol: &SaddleSolution, cfg: &AsymptoticConfig) -> Result<(f64, f64)> {
    let sr = cfg.sigma * cfg.sigma + sol.alpha * sol.alpha;
    let omega = sr.sqrt();
    let norm_limit = if cfg.eps_train > 0.0 {
        sol.beta * sol.tau_star * omega / (cfg.eps_train * sol.tau_g)
    } else {
        (cfg.v_norm * cfg.v_norm + cfg.sigma * cfg.sigma / (cfg.delta - 1.0)).sqrt()
    };
    let et = cfg.eps_test;
    let ar = sr + et * et * norm_limit * norm_limit
        + 2.0 * SQRT_2_OVER_PI * et * norm_limit * sr.sqrt();
    Ok((sr, ar))
}

/// First-order expansion of the standard risk in the training budget at
/// ε = 0⁺ for δ > 1: returns (intercept, slope) with
/// intercept = δσ²/(δ−1) and
/// slope = −2√(2/π)·σ³δ^{3/2} / ((δ−1)²·√(σ² + V²(δ−1))).
pub fn small_eps_expansion(cfg: &AsymptoticConfig) -> Result<(f64, f64)> {
    if !(cfg.delta > 1.0) {
        return Err(Error::domain(format!(
            "the small-eps expansion requires delta > 1, got {}",
            cfg.delta
        )));
    }
    let (d, s, v) = (cfg.delta, cfg.sigma, cfg.v_norm);
    let intercept = d * s * s / (d - 1.0);
    let slope = -2.0 * SQRT_2_OVER_PI * s.powi(3) * d.powf(1.5)
        / ((d - 1.0) * (d - 1.0) * (s * s + v * v * (d - 1.0)).sqrt());
    Ok((intercept, slope))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn cfg(delta: f64, eps_train: f64) -> AsymptoticConfig {
        AsymptoticConfig::new(delta, 1.0, 1.0, eps_train, 0.5).unwrap()
    }

    #[test]
    fn tau_star_at_indicator_boundary_is_zero() {
        assert_eq!(tau_star(SQRT_2_OVER_PI, 1.0, 1.0).unwrap(), 0.0);
        assert_eq!(tau_star(SQRT_2_OVER_PI, 3.0, 0.2).unwrap(), 0.0);
    }

    #[test]
    fn tau_star_below_boundary_is_domain_error() {
        assert!(matches!(tau_star(0.5, 1.0, 1.0), Err(Error::Domain(_))));
    }

    /// Independent bisection oracle on the fixed bracket [0, 10].
    fn oracle_root(a: f64, beta: f64, tau_g: f64) -> f64 {
        let ratio = beta / tau_g;
        let f = |t: f64| tau_characteristic(a, ratio, t);
        assert!(f(0.0) > 0.0 && f(10.0) < 0.0);
        let (mut lo, mut hi) = (0.0f64, 10.0f64);
        for _ in 0..120 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn tau_star_agrees_with_bisection_oracle() {
        let r1 = tau_star(1.0, 1.0, 1.0).unwrap();
        assert!((r1 - oracle_root(1.0, 1.0, 1.0)).abs() <= 1e-10);
        let r2 = tau_star(2.0, 1.0, 0.5).unwrap();
        assert!((r2 - oracle_root(2.0, 1.0, 0.5)).abs() <= 1e-10);
        // Monotone in a at fixed (β, τ_g).
        let r3 = tau_star(1.0, 1.0, 0.5).unwrap();
        assert!(r2 > r3);
    }

    #[test]
    fn tau_star_residual_tolerance() {
        for &a in &[0.9, 1.3, 2.7, 8.0] {
            for &beta in &[0.3, 1.0, 4.0] {
                for &tau_g in &[0.2, 1.0, 3.0] {
                    let root = tau_star(a, beta, tau_g).unwrap();
                    let res = tau_characteristic(a, beta / tau_g, root).abs();
                    assert!(res <= 1e-12, "residual {res} at ({a},{beta},{tau_g})");
                }
            }
        }
    }

    #[test]
    fn objective_hand_value() {
        // Indicator off since γ = 0: D = 1 − 0.5 + 0 − 0.5 + 0.5 = 0.5.
        let v = SaddleVars {
            alpha: 1.0,
            beta: 1.0,
            gamma: 0.0,
            tau_h: 1.0,
            tau_g: 1.0,
        };
        let c = cfg(2.0, 0.3);
        assert!((saddle_objective(&v, &c).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn objective_gamma_zero_kills_erf_term() {
        let c = cfg(2.0, 0.5);
        for &(alpha, beta, tau_h, tau_g) in
            &[(0.5, 1.2, 0.7, 0.9), (2.0, 0.4, 1.5, 0.3), (1.0, 1.0, 1.0, 1.0)]
        {
            let v = SaddleVars { alpha, beta, gamma: 0.0, tau_h, tau_g };
            let d = saddle_objective(&v, &c).unwrap();
            // Reconstruct without any erf contribution.
            let omega_sq = alpha * alpha + 1.0;
            let expect = c.delta * beta * omega_sq / (2.0 * (tau_g + beta))
                - (alpha / (2.0 * tau_h)) * beta * beta
                - alpha * tau_h / 2.0
                + beta * tau_g / 2.0;
            assert!((d - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn objective_continuous_at_indicator_boundary() {
        // γ chosen so a = √(2/π)·(1+1e−6): the erf term must be ~0.
        let c = cfg(2.0, 0.5);
        let (alpha, beta, tau_h, tau_g) = (0.8f64, 1.1, 0.9, 0.7);
        let omega = (alpha * alpha + 1.0).sqrt();
        let gamma =
            SQRT_2_OVER_PI * (1.0 + 1e-6) * c.delta * c.eps_train * beta * omega / (tau_g + beta);
        let v = SaddleVars { alpha, beta, gamma, tau_h, tau_g };
        assert!(indicator_active(&v, &c));
        let with = saddle_objective(&v, &c).unwrap();
        let without = c.delta * beta * omega * omega / (2.0 * (tau_g + beta))
            - (alpha / (2.0 * tau_h)) * (gamma * gamma + beta * beta)
            + gamma * radial(&v, &c)
            - alpha * tau_h / 2.0
            + beta * tau_g / 2.0;
        let erf_term = with - without;
        assert!(erf_term.abs() < 1e-10, "erf term {erf_term} should vanish at the boundary");
    }

    /// The analytic gradient must match central finite differences of the
    /// objective at generic points, both indicator-active and -inactive.
    #[test]
    fn gradient_matches_finite_differences() {
        let c = cfg(2.0, 0.5);
        let mut rng = StdRng::seed_from_u64(7);
        let mut checked_active = 0;
        let mut checked_inactive = 0;
        while checked_active < 8 || checked_inactive < 8 {
            let v = SaddleVars {
                alpha: 0.2 + 2.0 * rng.gen::<f64>(),
                beta: 0.2 + 2.0 * rng.gen::<f64>(),
                gamma: 3.0 * rng.gen::<f64>(),
                tau_h: 0.2 + 2.0 * rng.gen::<f64>(),
                tau_g: 0.2 + 2.0 * rng.gen::<f64>(),
            };
            let active = indicator_active(&v, &c);
            if active {
                checked_active += 1;
            } else {
                checked_inactive += 1;
            }
            let g = saddle_gradient(&v, &c).unwrap();
            let x = v.to_array();
            for j in 0..5 {
                let h = 1e-6 * (1.0 + x[j].abs());
                let mut xp = x;
                let mut xm = x;
                xp[j] += h;
                xm[j] -= h;
                // Skip FD probes that cross the indicator kink.
                let sp = indicator_active(&SaddleVars::from_array(xp), &c);
                let sm = indicator_active(&SaddleVars::from_array(xm), &c);
                if sp != active || sm != active {
                    continue;
                }
                let fd = (value_at(xp, &c).unwrap() - value_at(xm, &c).unwrap()) / (2.0 * h);
                assert!(
                    (g[j] - fd).abs() <= 1e-5 * (1.0 + fd.abs()),
                    "coord {j}: analytic {} vs fd {} at {:?}",
                    g[j],
                    fd,
                    v
                );
            }
        }
    }

    #[test]
    fn g_limit_tail_probe() {
        // τ = 50ω: first bracket → 1, erfc terms → 0.
        let c = cfg(2.0, 0.5);
        let (mu, omega, gamma) = (0.7, 1.3, 0.4);
        let v = g_limit(mu, 50.0 * omega, gamma, omega, &c).unwrap();
        let expect = omega * omega / (2.0 * mu * (mu + 1.0))
            - omega * omega / (2.0 * (mu + 1.0) * (mu + 1.0))
                * (gamma * (mu + 1.0) / (c.delta * c.eps_train * omega)).powi(2);
        assert!((v - expect).abs() < 1e-12);
    }

    #[test]
    fn g_limit_minimum_is_zero_below_threshold() {
        // γ(μ+1) ≤ √(2/π)·δεω ⇒ min over τ is 0, attained at τ = 0.
        let c = cfg(2.0, 0.5);
        let (mu, omega) = (1.0, 1.0);
        let gamma = SQRT_2_OVER_PI * c.delta * c.eps_train * omega / (mu + 1.0) * 0.9;
        let mut min = f64::INFINITY;
        for k in 0..=4000 {
            let tau = 5.0 * omega * k as f64 / 4000.0;
            min = min.min(g_limit(mu, tau, gamma, omega, &c).unwrap());
        }
        assert!(min.abs() <= 1e-9, "min {min}");
        assert!(g_limit(mu, 0.0, gamma, omega, &c).unwrap().abs() < 1e-15);
    }

    /// The indicator-active erf term of D equals δ·min_τ of the g-limit.
    #[test]
    fn erf_term_consistent_with_g_limit_minimum() {
        let c = cfg(2.0, 0.5);
        let v = SaddleVars {
            alpha: 0.9,
            beta: 1.2,
            gamma: 2.5,
            tau_h: 1.1,
            tau_g: 0.8,
        };
        assert!(indicator_active(&v, &c));
        let with = saddle_objective(&v, &c).unwrap();
        let without = {
            let omega_sq = v.alpha * v.alpha + 1.0;
            c.delta * v.beta * omega_sq / (2.0 * (v.tau_g + v.beta))
                - (v.alpha / (2.0 * v.tau_h)) * (v.gamma * v.gamma + v.beta * v.beta)
                + v.gamma * radial(&v, &c)
                - v.alpha * v.tau_h / 2.0
                + v.beta * v.tau_g / 2.0
        };
        let erf_term = with - without;

        let mu = v.tau_g / v.beta;
        let omega = (v.alpha * v.alpha + 1.0f64).sqrt();
        let mut min = f64::INFINITY;
        for k in 0..=20000 {
            let tau = 5.0 * omega * k as f64 / 20000.0;
            min = min.min(g_limit(mu, tau, v.gamma, omega, &c).unwrap());
        }
        let expect = c.delta * min;
        assert!(
            (erf_term - expect).abs() <= 1e-6 * expect.abs().max(1e-3),
            "erf term {erf_term} vs δ·min G {expect}"
        );
    }

    #[test]
    fn ols_closed_form_point() {
        let c = cfg(2.0, 0.0);
        let sol = solve_saddle(&c).unwrap();
        assert_eq!(sol.alpha, 1.0);
        assert_eq!(sol.beta, 1.0);
        assert_eq!(sol.tau_h, 1.0);
        assert_eq!(sol.tau_g, 1.0);
        assert_eq!(sol.gamma, 0.0);
        assert_eq!(sol.d_value, 0.5);
        let (sr, _) = asymptotic_risks(&sol, &c).unwrap();
        assert_eq!(sr, 2.0);
    }

    #[test]
    fn ols_branch_needs_delta_above_one() {
        let c = cfg(0.8, 0.0);
        assert!(matches!(solve_saddle(&c), Err(Error::Domain(_))));
    }

    #[test]
    fn generic_branch_approaches_ols_as_eps_vanishes() {
        let c0 = cfg(2.0, 0.0);
        let sol0 = solve_saddle(&c0).unwrap();
        let c1 = cfg(2.0, 1e-4);
        let sol1 = solve_saddle(&c1).unwrap();
        assert!(
            (sol1.alpha - sol0.alpha).abs() <= 1e-3,
            "alpha {} vs {}",
            sol1.alpha,
            sol0.alpha
        );
    }

    #[test]
    fn solve_reports_tight_stationarity() {
        let sol = solve_saddle(&cfg(2.0, 0.5)).unwrap();
        assert!(sol.stationarity <= 1e-7, "stationarity {}", sol.stationarity);
        assert!(sol.alpha > 0.0 && sol.beta > 0.0 && sol.gamma > 0.0);
        assert!(sol.tau_star > 0.0);
    }

    /// Local saddle verification: no feasible direction improves either block.
    #[test]
    fn saddle_point_verified_by_random_probes() {
        let c = cfg(2.0, 0.5);
        let sol = solve_saddle(&c).unwrap();
        let x = [sol.alpha, sol.beta, sol.gamma, sol.tau_h, sol.tau_g];
        let d0 = value_at(x, &c).unwrap();
        let mut rng = StdRng::seed_from_u64(99);
        let step = 1e-3;
        for _ in 0..100 {
            // Min block probe: D must not decrease.
            let (da, dg): (f64, f64) = (rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            let n = (da * da + dg * dg).sqrt();
            let mut xt = x;
            xt[0] = (x[0] + step * da / n).max(FLOOR);
            xt[4] = (x[4] + step * dg / n).max(FLOOR);
            assert!(value_at(xt, &c).unwrap() >= d0 - 1e-9);

            // Max block probe: D must not increase.
            let (db, dgm, dth): (f64, f64, f64) =
                (rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            let n = (db * db + dgm * dgm + dth * dth).sqrt();
            let mut xt = x;
            xt[1] = (x[1] + step * db / n).max(FLOOR);
            xt[2] = (x[2] + step * dgm / n).max(0.0);
            xt[3] = (x[3] + step * dth / n).max(FLOOR);
            assert!(value_at(xt, &c).unwrap() <= d0 + 1e-9);
        }
    }

    /// Midpoint probes of joint convexity in (α, τ_g) and concavity in
    /// (β, γ, τ_h).
    #[test]
    fn block_convexity_probes() {
        let c = cfg(2.0, 0.5);
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..100 {
            let beta = 0.2 + 2.0 * rng.gen::<f64>();
            let gamma = 2.5 * rng.gen::<f64>();
            let tau_h = 0.2 + 2.0 * rng.gen::<f64>();
            let p1 = [0.1 + 2.0 * rng.gen::<f64>(), 0.1 + 2.0 * rng.gen::<f64>()];
            let p2 = [0.1 + 2.0 * rng.gen::<f64>(), 0.1 + 2.0 * rng.gen::<f64>()];
            let at = |p: [f64; 2]| {
                value_at([p[0], beta, gamma, tau_h, p[1]], &c).unwrap()
            };
            let mid = [(p1[0] + p2[0]) / 2.0, (p1[1] + p2[1]) / 2.0];
            assert!(at(mid) <= 0.5 * (at(p1) + at(p2)) + 1e-10);
        }
        for _ in 0..100 {
            let alpha = 0.1 + 2.0 * rng.gen::<f64>();
            let tau_g = 0.1 + 2.0 * rng.gen::<f64>();
            let q1 = [
                0.2 + 2.0 * rng.gen::<f64>(),
                2.5 * rng.gen::<f64>(),
                0.2 + 2.0 * rng.gen::<f64>(),
            ];
            let q2 = [
                0.2 + 2.0 * rng.gen::<f64>(),
                2.5 * rng.gen::<f64>(),
                0.2 + 2.0 * rng.gen::<f64>(),
            ];
            let at = |q: [f64; 3]| value_at([alpha, q[0], q[1], q[2], tau_g], &c).unwrap();
            let mid = [
                (q1[0] + q2[0]) / 2.0,
                (q1[1] + q2[1]) / 2.0,
                (q1[2] + q2[2]) / 2.0,
            ];
            assert!(at(mid) >= 0.5 * (at(q1) + at(q2)) - 1e-10);
        }
    }

    #[test]
    fn asymptotic_risks_zero_test_budget() {
        let mut c = cfg(2.0, 0.5);
        c.eps_test = 0.0;
        let sol = solve_saddle(&c).unwrap();
        let (sr, ar) = asymptotic_risks(&sol, &c).unwrap();
        assert_eq!(sr, ar);
    }

    #[test]
    fn asymptotic_risks_ols_formula() {
        let c = cfg(2.0, 0.0);
        let sol = solve_saddle(&c).unwrap();
        let (sr, ar) = asymptotic_risks(&sol, &c).unwrap();
        assert_eq!(sr, 2.0);
        let norm = (1.0f64 + 1.0).sqrt();
        let expect = 2.0 + 0.25 * 2.0 + 2.0 * SQRT_2_OVER_PI * 0.5 * norm * 2.0f64.sqrt();
        assert!((ar - expect).abs() < 1e-12);
    }

    #[test]
    fn small_eps_expansion_values() {
        let c = cfg(2.0, 0.0);
        let (intercept, slope) = small_eps_expansion(&c).unwrap();
        assert_eq!(intercept, 2.0);
        assert!((slope - (-4.0 * SQRT_2_OVER_PI)).abs() < 1e-14);
        assert!(matches!(small_eps_expansion(&cfg(1.0, 0.0)), Err(Error::Domain(_))));
    }

    /// Finite-difference slope of SR in ε near 0 matches the expansion.
    #[test]
    fn small_eps_slope_matches_solver() {
        let c0 = cfg(2.0, 0.0);
        let (_, slope) = small_eps_expansion(&c0).unwrap();
        let eps = 0.02;
        let sol = solve_saddle(&cfg(2.0, eps)).unwrap();
        let (sr, _) = asymptotic_risks(&sol, &cfg(2.0, eps)).unwrap();
        let fd = (sr - 2.0) / eps;
        assert!(
            (fd - slope).abs() <= 0.05 * slope.abs(),
            "fd {fd} vs slope {slope}"
        );
    }
}
