//! `advrisk`: reproduces the standard/adversarial risk tradeoff experiments
//! as CSV or JSON tables, and runs the validation suite.

use advrisk_cli::commands::{self, Empirical};
use advrisk_cli::grid::parse_grid;
use advrisk_cli::validate::{self, Budget};
use advrisk_core::table::SweepTable;
use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "advrisk", version, about = "Standard vs. adversarial risk tradeoffs in Gaussian linear regression: exact asymptotics and Monte Carlo")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct ModelArgs {
    /// Normalized noise level σ.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Normalized true-model norm V.
    #[arg(long = "v", default_value_t = 1.0)]
    v: f64,
    /// Test-time adversary budget ε_test.
    #[arg(long, default_value_t = 0.5)]
    eps_test: f64,
    /// Master seed for everything stochastic.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output path (stdout when omitted). Multi-table sweeps insert their
    /// label before the extension.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Emit the table as a single JSON document instead of CSV.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct EmpiricalArgs {
    /// Also run Monte Carlo replicas and attach empirical columns.
    #[arg(long)]
    empirical: bool,
    /// Problem dimension p for the replicas.
    #[arg(long, default_value_t = 1000)]
    p: usize,
    /// Number of replicas per grid point.
    #[arg(long, default_value_t = 50)]
    seeds: u64,
}

impl EmpiricalArgs {
    fn settings(&self) -> Option<Empirical> {
        self.empirical.then_some(Empirical {
            p: self.p,
            seeds: self.seeds,
        })
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Pareto frontier of (SR, AR) over the weight λ.
    Pareto {
        #[command(flatten)]
        model: ModelArgs,
        /// λ grid, as start:stop:count:lin|log or a comma list.
        #[arg(long, default_value = "1e-3:1e3:40:log")]
        lambda_grid: String,
    },
    /// Algorithmic (SR, AR) tradeoff curves over the training budget ε,
    /// one table per δ.
    AlgoCurve {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        empirical: EmpiricalArgs,
        /// Aspect ratios δ = n/p (comma list).
        #[arg(long, default_value = "1,2,5,20")]
        delta: String,
        /// Training-budget grid.
        #[arg(long, default_value = "0.01:2:25:log")]
        eps_grid: String,
    },
    /// Standard risk versus ε, one table per δ.
    SrSweep {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        empirical: EmpiricalArgs,
        #[arg(long, default_value = "0.5,2,10")]
        delta: String,
        #[arg(long, default_value = "0.01:2:25:log")]
        eps_grid: String,
    },
    /// Standard risk versus model complexity 1/δ, one table per ε.
    DoubleDescent {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        empirical: EmpiricalArgs,
        /// 1/δ grid.
        #[arg(long, default_value = "0.2:3:29:lin")]
        inv_delta_grid: String,
        /// Training budgets ε, one curve each.
        #[arg(long, default_value = "0.1,0.4,0.8")]
        eps_grid: String,
    },
    /// Train the adversarial estimator and report empirical risks alongside
    /// the theory, over an ε grid at a single δ.
    Montecarlo {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 2.0)]
        delta: f64,
        #[arg(long, default_value = "0.05:1.5:10:log")]
        eps_grid: String,
        #[arg(long, default_value_t = 1000)]
        p: usize,
        #[arg(long, default_value_t = 50)]
        seeds: u64,
    },
    /// Run the validation suite and exit nonzero on any failure.
    Validate {
        /// Reduce Monte Carlo budgets 5x and relax stochastic tolerances 2x.
        #[arg(long)]
        quick: bool,
        /// Run only the named criteria (comma list).
        #[arg(long, value_delimiter = ',')]
        only: Option<Vec<String>>,
        /// Emit the report as JSON.
        #[arg(long)]
        json: bool,
    },
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Pareto { model, lambda_grid } => {
            let grid = parse_grid(&lambda_grid)?;
            let table =
                commands::pareto_table(model.sigma, model.v, model.eps_test, &grid, model.seed)?;
            emit(vec![(String::new(), table)], &model)
        }
        Cmd::AlgoCurve { model, empirical, delta, eps_grid } => {
            let tables = commands::eps_sweep_tables(
                model.sigma,
                model.v,
                model.eps_test,
                &parse_grid(&delta)?,
                &parse_grid(&eps_grid)?,
                empirical.settings(),
                model.seed,
            )?;
            emit(tables, &model)
        }
        Cmd::SrSweep { model, empirical, delta, eps_grid } => {
            let tables = commands::eps_sweep_tables(
                model.sigma,
                model.v,
                model.eps_test,
                &parse_grid(&delta)?,
                &parse_grid(&eps_grid)?,
                empirical.settings(),
                model.seed,
            )?;
            emit(tables, &model)
        }
        Cmd::DoubleDescent { model, empirical, inv_delta_grid, eps_grid } => {
            let tables = commands::double_descent_tables(
                model.sigma,
                model.v,
                model.eps_test,
                &parse_grid(&inv_delta_grid)?,
                &parse_grid(&eps_grid)?,
                empirical.settings(),
                model.seed,
            )?;
            emit(tables, &model)
        }
        Cmd::Montecarlo { model, delta, eps_grid, p, seeds } => {
            let table = commands::montecarlo_table(
                model.sigma,
                model.v,
                model.eps_test,
                delta,
                &parse_grid(&eps_grid)?,
                Empirical { p, seeds },
                model.seed,
            )?;
            emit(vec![(String::new(), table)], &model)
        }
        Cmd::Validate { quick, only, json } => {
            let budget = if quick { Budget::quick() } else { Budget::full() };
            let reports = validate::run(&budget, only.as_deref());
            if json {
                println!("{}", serde_json::to_string_pretty(&reports)?);
            } else {
                for r in &reports {
                    println!("{}", r.line());
                }
            }
            if reports.iter().any(|r| !r.passed) {
                std::process::exit(1);
            }
            Ok(())
        }
    }
}

fn emit(tables: Vec<(String, SweepTable)>, model: &ModelArgs) -> Result<()> {
    let render = |t: &SweepTable| if model.json { t.to_json() } else { t.to_csv() };
    match (&model.out, tables.len()) {
        (None, 1) => print!("{}", render(&tables[0].1)),
        (None, _) if model.json => {
            let docs: Vec<&SweepTable> = tables.iter().map(|(_, t)| t).collect();
            println!("{}", serde_json::to_string_pretty(&docs)?);
        }
        (None, _) => {
            for (i, (_, t)) in tables.iter().enumerate() {
                if i > 0 {
                    println!();
                }
                print!("{}", render(t));
            }
        }
        (Some(path), 1) => write_file(path, &render(&tables[0].1))?,
        (Some(path), _) => {
            for (label, t) in &tables {
                let labeled = labeled_path(path, label);
                write_file(&labeled, &render(t))?;
            }
        }
    }
    Ok(())
}

fn labeled_path(path: &Path, label: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("table");
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    path.with_file_name(format!("{stem}.{label}.{ext}"))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}
