//! Table builders behind the CLI subcommands.

use advrisk_core::model::AsymptoticConfig;
use advrisk_core::pareto::pareto_curve;
use advrisk_core::saddle::{asymptotic_risks, solve_saddle};
use advrisk_core::simulate::{empirical_risk_point, generate_instance, train_adversarial, SeededRng};
use advrisk_core::table::{EmpiricalCols, Provenance, SweepRow, SweepTable, TableMeta, SCHEMA_VERSION};
use anyhow::{bail, Context, Result};
use rayon::prelude::*;

/// Tolerance passed to the trainer for empirical columns.
const TRAIN_TOL: f64 = 1e-5;
const TRAIN_MAX_ITER: usize = 200_000;

/// Monte Carlo settings for the empirical columns.
#[derive(Debug, Clone, Copy)]
pub struct Empirical {
    pub p: usize,
    pub seeds: u64,
}

pub fn timestamp() -> String {
    std::env::var("SOURCE_DATE_EPOCH").unwrap_or_default()
}

fn provenance(seed: u64) -> Provenance {
    Provenance {
        master_seed: seed,
        timestamp: timestamp(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
    }
}

fn meta(cfg: AsymptoticConfig, axis_name: &str, seed: u64, notes: Vec<String>) -> TableMeta {
    TableMeta {
        schema_version: SCHEMA_VERSION.to_string(),
        config: cfg,
        axis_name: axis_name.to_string(),
        provenance: provenance(seed),
        notes,
    }
}

fn dedup_sorted(mut grid: Vec<f64>) -> Vec<f64> {
    grid.sort_by(|a, b| a.total_cmp(b));
    grid.dedup();
    grid
}

/// Frontier sweep over the weight λ.
pub fn pareto_table(
    sigma: f64,
    v: f64,
    eps_test: f64,
    lambda_grid: &[f64],
    seed: u64,
) -> Result<SweepTable> {
    let cfg = AsymptoticConfig::new(1.0, sigma, v, 0.0, eps_test)?;
    let grid = dedup_sorted(lambda_grid.to_vec());
    let points = pareto_curve(&grid, &cfg)?;
    let rows = points
        .iter()
        .map(|pt| SweepRow {
            axis_value: pt.knob,
            sr_theory: pt.sr,
            ar_theory: pt.ar,
            empirical: None,
        })
        .collect();
    Ok(SweepTable::new(meta(cfg, "lambda", seed, vec![]), rows)?)
}

fn theory_point(cfg: &AsymptoticConfig) -> Result<(f64, f64)> {
    let sol = solve_saddle(cfg)
        .with_context(|| format!("saddle solve failed at delta={}, eps={}", cfg.delta, cfg.eps_train))?;
    Ok(asymptotic_risks(&sol, cfg)?)
}

fn empirical_cols(
    cfg: &AsymptoticConfig,
    emp: Empirical,
    master: SeededRng,
    stream_base: u64,
) -> Result<EmpiricalCols> {
    let n = (cfg.delta * emp.p as f64).round().max(1.0) as usize;
    let runs: Vec<(f64, f64)> = (0..emp.seeds)
        .into_par_iter()
        .map(|k| -> Result<(f64, f64)> {
            let mut rng = master.replicate(stream_base + k);
            let inst = generate_instance(n, emp.p, cfg, &mut rng);
            let report = train_adversarial(&inst, cfg.eps_train, TRAIN_TOL, TRAIN_MAX_ITER)
                .with_context(|| format!("training failed at delta={}, eps={}", cfg.delta, cfg.eps_train))?;
            let point = empirical_risk_point(&inst, &report.theta_hat, cfg)?;
            Ok((point.sr, point.ar))
        })
        .collect::<Result<_>>()?;
    let srs: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let ars: Vec<f64> = runs.iter().map(|r| r.1).collect();
    Ok(EmpiricalCols {
        sr_empirical: advrisk_core::math::mean(&srs),
        ar_empirical: advrisk_core::math::mean(&ars),
        n_seeds: emp.seeds as usize,
        stderr_sr: advrisk_core::math::std_error(&srs),
        stderr_ar: advrisk_core::math::std_error(&ars),
    })
}

/// SR/AR versus training budget ε at fixed δ; one table per δ. Used by both
/// the tradeoff-curve and SR-sweep subcommands.
pub fn eps_sweep_tables(
    sigma: f64,
    v: f64,
    eps_test: f64,
    deltas: &[f64],
    eps_grid: &[f64],
    empirical: Option<Empirical>,
    seed: u64,
) -> Result<Vec<(String, SweepTable)>> {
    let grid = dedup_sorted(eps_grid.to_vec());
    let master = SeededRng::new(seed);
    let mut tables = Vec::new();
    for (t_idx, &delta) in deltas.iter().enumerate() {
        for &eps in &grid {
            if eps < 0.0 {
                bail!("training eps must be >= 0, got {eps}");
            }
            if eps == 0.0 && delta <= 1.0 {
                bail!("eps = 0 requires delta > 1 (got delta = {delta})");
            }
        }
        let cfg0 = AsymptoticConfig::new(delta, sigma, v, 0.0, eps_test)?;
        let rows: Vec<SweepRow> = grid
            .par_iter()
            .enumerate()
            .map(|(row_idx, &eps)| -> Result<SweepRow> {
                let cfg = cfg0.with_eps_train(eps);
                let (sr, ar) = theory_point(&cfg)?;
                let empirical = match empirical {
                    Some(emp) => Some(empirical_cols(
                        &cfg,
                        emp,
                        master,
                        (t_idx as u64) * 1_000_000 + (row_idx as u64) * 1_000,
                    )?),
                    None => None,
                };
                Ok(SweepRow {
                    axis_value: eps,
                    sr_theory: sr,
                    ar_theory: ar,
                    empirical,
                })
            })
            .collect::<Result<_>>()?;
        let cfg_echo = cfg0.with_eps_train(grid[0]);
        let table = SweepTable::new(meta(cfg_echo, "eps", seed, vec![format!("delta={delta}")]), rows)?;
        tables.push((format!("delta={delta}"), table));
    }
    Ok(tables)
}

/// SR versus model complexity 1/δ; one table per training budget ε.
pub fn double_descent_tables(
    sigma: f64,
    v: f64,
    eps_test: f64,
    inv_delta_grid: &[f64],
    eps_list: &[f64],
    empirical: Option<Empirical>,
    seed: u64,
) -> Result<Vec<(String, SweepTable)>> {
    let grid = dedup_sorted(inv_delta_grid.to_vec());
    if grid.iter().any(|&x| x <= 0.0) {
        bail!("1/delta grid values must be > 0");
    }
    let master = SeededRng::new(seed);
    let mut tables = Vec::new();
    for (t_idx, &eps) in eps_list.iter().enumerate() {
        let mut skipped = Vec::new();
        let kept: Vec<(usize, f64)> = grid
            .iter()
            .enumerate()
            .filter_map(|(i, &inv_delta)| {
                let delta = 1.0 / inv_delta;
                // The eps = 0 theory only exists for delta > 1 and blows up
                // at the interpolation threshold.
                if eps == 0.0 && (delta <= 1.0 || (delta - 1.0).abs() < 0.02) {
                    skipped.push(inv_delta);
                    None
                } else {
                    Some((i, inv_delta))
                }
            })
            .collect();
        let rows: Vec<SweepRow> = kept
            .par_iter()
            .map(|&(row_idx, inv_delta)| -> Result<SweepRow> {
                let cfg = AsymptoticConfig::new(1.0 / inv_delta, sigma, v, eps, eps_test)?;
                let (sr, ar) = theory_point(&cfg)?;
                let empirical = match empirical {
                    Some(emp) => Some(empirical_cols(
                        &cfg,
                        emp,
                        master,
                        (t_idx as u64) * 1_000_000 + (row_idx as u64) * 1_000,
                    )?),
                    None => None,
                };
                Ok(SweepRow {
                    axis_value: inv_delta,
                    sr_theory: sr,
                    ar_theory: ar,
                    empirical,
                })
            })
            .collect::<Result<_>>()?;
        let mut notes = vec![format!("eps={eps}")];
        if !skipped.is_empty() {
            notes.push(format!(
                "skipped_inv_delta={}",
                skipped.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
            ));
        }
        let cfg_echo = AsymptoticConfig::new(1.0 / grid[grid.len() - 1], sigma, v, eps, eps_test)?;
        let table = SweepTable::new(meta(cfg_echo, "inv_delta", seed, notes), rows)?;
        tables.push((format!("eps={eps}"), table));
    }
    Ok(tables)
}

/// Empirical risks of the trained estimator over an ε grid at a single δ,
/// with the theory columns alongside.
pub fn montecarlo_table(
    sigma: f64,
    v: f64,
    eps_test: f64,
    delta: f64,
    eps_grid: &[f64],
    emp: Empirical,
    seed: u64,
) -> Result<SweepTable> {
    let mut tables = eps_sweep_tables(sigma, v, eps_test, &[delta], eps_grid, Some(emp), seed)?;
    Ok(tables.remove(0).1)
}
