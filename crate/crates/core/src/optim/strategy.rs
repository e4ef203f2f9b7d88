//! Strategy schedules and the per-run training loop.
//!
//! One *gradient epoch* is a full-dataset gradient plus one Adam step; one
//! *evolutionary epoch* is a CMA-ES generation (`lambda` objective
//! evaluations). The hybrid schedule runs its gradient budget first, then
//! restarts CMA-ES centered on the final Adam parameters.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::adam::AdamState;
use super::cma::{fitness_cmp, CmaState, DEFAULT_POPULATION, DEFAULT_SIGMA0};
use crate::error::{Error, Result};
use crate::objective::Objective;
use crate::scalar::{real, Scalar};

/// Effort units one evolutionary epoch costs relative to a gradient epoch
/// on the emitted effort axis.
pub const EVO_EFFORT_UNITS: u64 = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Gradient,
    CmaEs,
    Hybrid,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Gradient, Method::CmaEs, Method::Hybrid];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Gradient => "gradient",
            Method::CmaEs => "cmaes",
            Method::Hybrid => "hybrid",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "gradient" => Ok(Method::Gradient),
            "cmaes" => Ok(Method::CmaEs),
            "hybrid" => Ok(Method::Hybrid),
            other => Err(Error::Config(format!(
                "unknown method {other:?} (expected gradient, cmaes, or hybrid)"
            ))),
        }
    }

    fn rng_stream(&self) -> u64 {
        match self {
            Method::Gradient => 1,
            Method::CmaEs => 2,
            Method::Hybrid => 3,
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Epoch budgets for one training run.
#[derive(Clone, Copy, Debug)]
pub struct StrategySchedule {
    pub method: Method,
    pub gradient_epochs: usize,
    pub evo_generations: usize,
    pub seed: u64,
    /// CMA-ES population size (protocol default 10).
    pub population: usize,
    /// CMA-ES initial step size, also used for the hybrid restart.
    pub sigma0: f64,
}

impl StrategySchedule {
    /// The paper protocol's budgets: 100 gradient epochs, 11 CMA-ES
    /// generations, or 20 + 9 for the hybrid.
    pub fn protocol(method: Method, seed: u64) -> Self {
        let (gradient_epochs, evo_generations) = match method {
            Method::Gradient => (100, 0),
            Method::CmaEs => (0, 11),
            Method::Hybrid => (20, 9),
        };
        Self {
            method,
            gradient_epochs,
            evo_generations,
            seed,
            population: DEFAULT_POPULATION,
            sigma0: DEFAULT_SIGMA0,
        }
    }

    pub fn with_budgets(mut self, gradient_epochs: usize, evo_generations: usize) -> Self {
        self.gradient_epochs = gradient_epochs;
        self.evo_generations = evo_generations;
        self
    }

    pub fn total_epochs(&self) -> usize {
        self.gradient_epochs + self.evo_generations
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.method {
            Method::Gradient => self.gradient_epochs > 0 && self.evo_generations == 0,
            Method::CmaEs => self.gradient_epochs == 0 && self.evo_generations > 0,
            Method::Hybrid => self.gradient_epochs > 0 && self.evo_generations > 0,
        };
        if !ok {
            return Err(Error::Config(format!(
                "budgets {}+{} do not fit method {}",
                self.gradient_epochs, self.evo_generations, self.method
            )));
        }
        if self.population < 2 {
            return Err(Error::Config("population size must be at least 2".into()));
        }
        if !(self.sigma0 > 0.0) {
            return Err(Error::Config("sigma0 must be positive".into()));
        }
        Ok(())
    }
}

/// One per-epoch row of a training trace.
#[derive(Clone, Copy, Debug)]
pub struct RunRecord<T> {
    pub method: Method,
    pub seed: u64,
    /// 1-based, contiguous across the gradient and evolutionary segments.
    pub epoch: usize,
    /// `gradient_epochs_consumed + 20 * evo_generations_consumed`.
    pub effort_x: u64,
    /// Cumulative objective evaluations after this epoch.
    pub circuit_evals: u64,
    pub train_loss: T,
    pub test_rel_rmse: T,
}

/// A finished (or aborted) training run. On failure the records collected
/// so far are preserved alongside the error.
#[derive(Clone, Debug)]
pub struct RunOutcome<T> {
    pub method: Method,
    pub seed: u64,
    pub records: Vec<RunRecord<T>>,
    pub error: Option<String>,
}

impl<T> RunOutcome<T> {
    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }
}

/// Uniform draw from [-pi, pi)^dim, the natural box for rotation angles.
pub fn uniform_theta<T: Scalar>(rng: &mut ChaCha8Rng, dim: usize) -> Vec<T> {
    (0..dim)
        .map(|_| real(rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI)))
        .collect()
}

fn effort(gradient_epochs_consumed: usize, evo_generations_consumed: usize) -> u64 {
    gradient_epochs_consumed as u64 + EVO_EFFORT_UNITS * evo_generations_consumed as u64
}

/// Executes one training run and collects its per-epoch trace.
///
/// Deterministic: the run's RNG is seeded from the schedule (one stream per
/// method), candidate evaluations inside a generation may run in parallel
/// but RNG draws happen only in `ask`, and records are appended in epoch
/// order.
pub fn run_strategy<T, O>(schedule: &StrategySchedule, objective: &O) -> RunOutcome<T>
where
    T: Scalar,
    O: Objective<T>,
{
    let mut outcome = RunOutcome {
        method: schedule.method,
        seed: schedule.seed,
        records: Vec::with_capacity(schedule.total_epochs()),
        error: None,
    };
    if let Err(e) = schedule.validate() {
        outcome.error = Some(e.to_string());
        return outcome;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
    rng.set_stream(schedule.method.rng_stream());
    let dim = objective.dim();

    let mut theta: Vec<T> = uniform_theta(&mut rng, dim);
    let mut adam = AdamState::new(dim);
    for epoch in 1..=schedule.gradient_epochs {
        let step = (|| -> Result<(T, T)> {
            let grad = objective.grad(&theta)?;
            adam.step(&mut theta, &grad)?;
            let train_loss = objective.loss(&theta)?;
            let test_rel_rmse = objective.test_metric(&theta)?;
            Ok((train_loss, test_rel_rmse))
        })();
        match step {
            Ok((train_loss, test_rel_rmse)) => outcome.records.push(RunRecord {
                method: schedule.method,
                seed: schedule.seed,
                epoch,
                effort_x: effort(epoch, 0),
                circuit_evals: objective.evals(),
                train_loss,
                test_rel_rmse,
            }),
            Err(e) => {
                outcome.error = Some(e.to_string());
                return outcome;
            }
        }
    }

    if schedule.evo_generations == 0 {
        return outcome;
    }

    let sigma0 = real::<T>(schedule.sigma0);
    let cma = match schedule.method {
        Method::CmaEs => CmaState::init_random_mean(dim, sigma0, schedule.population, rng),
        _ => CmaState::new(theta.clone(), sigma0, schedule.population, rng),
    };
    let mut cma = match cma {
        Ok(c) => c,
        Err(e) => {
            outcome.error = Some(e.to_string());
            return outcome;
        }
    };

    for generation in 1..=schedule.evo_generations {
        let gen = (|| -> Result<(T, T)> {
            let candidates = cma.ask();
            let fitnesses: Vec<T> = candidates
                .par_iter()
                .map(|x| objective.loss(x))
                .collect::<Result<_>>()?;
            cma.tell(&candidates, &fitnesses)?;
            // reported theta: this generation's best candidate by train loss
            let best = (0..fitnesses.len())
                .min_by(|&a, &b| fitness_cmp(fitnesses[a], fitnesses[b]))
                .expect("population is non-empty");
            if fitnesses[best].is_nan() {
                return Err(Error::Config(
                    "every candidate in the generation evaluated to NaN".into(),
                ));
            }
            let test_rel_rmse = objective.test_metric(&candidates[best])?;
            Ok((fitnesses[best], test_rel_rmse))
        })();
        match gen {
            Ok((train_loss, test_rel_rmse)) => outcome.records.push(RunRecord {
                method: schedule.method,
                seed: schedule.seed,
                epoch: schedule.gradient_epochs + generation,
                effort_x: effort(schedule.gradient_epochs, generation),
                circuit_evals: objective.evals(),
                train_loss,
                test_rel_rmse,
            }),
            Err(e) => {
                outcome.error = Some(e.to_string());
                return outcome;
            }
        }
    }
    outcome
}
