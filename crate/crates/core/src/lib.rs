//! Requirement-based incentive contracts for a one-shot, single-layer
//! systems engineering process.
//!
//! A systems engineer (the principal) hires `N` subsystem engineers (agents).
//! Agent `i` picks an effort `e in [0, 1]`, producing quality
//! `q = a e + sigma xi` at cost `c e`, and is paid `psi1 + psi2 H(q - psi3)`.
//! The principal earns `V0` only if every `q_i` meets its true requirement
//! `r_i`, and chooses the contracts to maximize expected profit while keeping
//! every agent willing to participate.
//!
//! The numerical core is generic over [`Scalar`] (`f32` and `f64`); the
//! aliases at the crate root fix it to `f64`, which is what the solver and
//! CLI use.

pub mod agent;
pub mod calibration;
pub mod error;
pub mod model;
pub mod montecarlo;
pub mod optim;
pub mod principal;
pub mod scalar;

pub use error::{ModelError, Result};
pub use principal::{OptimizerOptions, SweepResult as SweepResultOf};
pub use scalar::Scalar;

pub type AgentParams = model::AgentParams<f64>;
pub type Contract = model::Contract<f64>;
pub type Scenario = model::Scenario<f64>;
pub type EffortSolution = model::EffortSolution<f64>;
pub type SolveResult = model::SolveResult<f64>;
pub type SweepResult = principal::SweepResult<f64>;
pub type HistoricalRecord = calibration::HistoricalRecord<f64>;
pub type CalibrationFit = calibration::CalibrationFit<f64>;
pub type DimensionlessParams = calibration::DimensionlessParams<f64>;

pub type AgentParams32 = model::AgentParams<f32>;
pub type Contract32 = model::Contract<f32>;
pub type Scenario32 = model::Scenario<f32>;
