//! The three training strategies: Adam over estimated gradients, CMA-ES,
//! and the hybrid schedule that warm-starts CMA-ES from the Adam plateau.

mod adam;
mod cma;
mod strategy;

pub use adam::AdamState;
pub use cma::{CmaState, DEFAULT_POPULATION, DEFAULT_SIGMA0};
pub use strategy::{
    run_strategy, uniform_theta, Method, RunOutcome, RunRecord, StrategySchedule,
    EVO_EFFORT_UNITS,
};
