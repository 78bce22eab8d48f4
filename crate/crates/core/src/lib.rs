//! Exact theory and finite-sample simulation of the tradeoff between standard
//! and adversarial risk for ℓ₂-adversarially trained linear regression with
//! Gaussian design.
//!
//! The crate has four layers:
//!
//! * [`model`] — the regression model itself: closed-form standard and
//!   adversarial risk of an estimator, and the worst-case test-time
//!   perturbation that attains the adversarial risk.
//! * [`pareto`] — the information-theoretic (infinite-data) Pareto frontier
//!   between the two risks, computed from a scalar fixed point, together with
//!   the map from a frontier weight λ to the training budget ε that realizes
//!   the same point in the infinite-data limit.
//! * [`saddle`] — the five-variable convex-concave scalar problem whose saddle
//!   point predicts the risks of the adversarially trained estimator at aspect
//!   ratio δ = n/p, plus its small-ε expansion and the erf/erfc limit function
//!   backing the objective's soft-threshold term.
//! * [`simulate`] — seeded finite-instance generation and the actual training
//!   of the adversarial estimator by minimizing its closed-form convex loss,
//!   which produces the empirical points the theory is checked against.
//!
//! [`table`] holds the sweep-table format shared with the command-line driver.

pub mod error;
pub mod math;
pub mod model;
pub mod pareto;
pub mod saddle;
pub mod simulate;
pub mod table;

pub use error::Error;
pub use model::{AsymptoticConfig, FiniteInstance, KnobKind, RiskPoint, RiskSource};
pub use pareto::ParetoSolution;
pub use saddle::SaddleSolution;
pub use simulate::{SeededRng, TrainReport};
pub use table::{SweepRow, SweepTable};

/// Crate result alias.
pub type Result<T> = std::result::Result<T, Error>;
