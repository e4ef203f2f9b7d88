//! Loss and metric definitions plus the two gradient estimators used by
//! gradient-based training.
//!
//! # Gradients of a recurrent circuit
//!
//! The ansatz parameters recur at every timestep, and during iterative
//! forecasting each measured output feeds the next encoding angle. The
//! parameter-shift gradient therefore combines three ingredients:
//!
//! 1. *Per-occurrence shifts*: for a parameter used at step `t`, the shift
//!    rule is applied to that occurrence only, re-simulating the suffix of
//!    the run with every *other* angle frozen at its forward value. U3
//!    angles obey the two-term rule (shift pi/2, coefficient 1/2); CRX
//!    angles have generator eigenvalues {0, +-1/2} and need the four-term
//!    rule with shifts pi/2 and 3pi/2.
//! 2. *Encoding-angle partials*: for fed-back steps, the derivative of each
//!    later output with respect to the step's encoding angle, again by the
//!    two-term rule.
//! 3. *A classical forward recurrence* assembling total derivatives: the
//!    derivative of an output flows into later outputs through the fed-back
//!    encoding angle (scaled by `encoding_scale`), and squared-error
//!    residuals weight the per-output derivatives.
//!
//! The result is the exact gradient of the loss (to simulation precision),
//! which is what the finite-difference oracle checks.

use rayon::prelude::*;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::data::TimeSeriesDataset;
use crate::error::{Error, Result};
use crate::qrnn::{self, ForecastTask, OccShift, ParamVector, QrnnConfig};
use crate::scalar::{real, Scalar};

/// Training-cost flavor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossMode {
    /// Teacher-forced next-step MSE.
    OneStep,
    /// MSE of iterative `horizon`-step forecasts over all rolling origins.
    MultiStep,
}

/// What the training loss measures.
#[derive(Clone, Copy, Debug)]
pub struct LossSpec {
    pub mode: LossMode,
    pub horizon: usize,
}

impl LossSpec {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::ZeroHorizon);
        }
        Ok(())
    }
}

/// Root-mean-square error of `pred` against `truth`, relative to the RMS of
/// `truth`. `pred = truth` gives 0; `pred = 0` gives exactly 1.
pub fn rel_rmse<T: Scalar>(pred: &[T], truth: &[T]) -> Result<T> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: truth.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::EmptySequence);
    }
    let n = real::<T>(truth.len() as f64);
    let mut err_sq = T::zero();
    let mut ref_sq = T::zero();
    for (&p, &t) in pred.iter().zip(truth) {
        err_sq = err_sq + (p - t) * (p - t);
        ref_sq = ref_sq + t * t;
    }
    let denom = (ref_sq / n).sqrt();
    if denom == T::zero() {
        return Err(Error::ZeroReference);
    }
    Ok(((err_sq / n).sqrt()) / denom)
}

fn check_split<T: Scalar>(xs: &[T], spec: &LossSpec) -> Result<()> {
    spec.validate()?;
    let min_len = match spec.mode {
        LossMode::OneStep => 2,
        LossMode::MultiStep => spec.horizon + 2,
    };
    if xs.len() < min_len {
        return Err(Error::SplitTooShort {
            len: xs.len(),
            horizon: spec.horizon,
        });
    }
    Ok(())
}

/// Rolling origins for a multi-step loss on a split of length `len`:
/// every `t0` with `t0 + horizon` still inside the split.
fn origins(len: usize, horizon: usize) -> std::ops::RangeInclusive<usize> {
    0..=(len - 1 - horizon)
}

/// Mean squared error of the model on the (normalized) train split.
///
/// Multi-step mode launches an iterative forecast from every rolling origin
/// and averages squared errors over all `origin x step` pairs; one-step mode
/// scores teacher-forced next-step predictions.
pub fn train_loss<T: Scalar>(
    xs: &[T],
    theta: &ParamVector<T>,
    cfg: &QrnnConfig<T>,
    spec: &LossSpec,
) -> Result<T> {
    check_split(xs, spec)?;
    match spec.mode {
        LossMode::OneStep => {
            let run = qrnn::run_sequence(xs, theta, cfg)?;
            let mut acc = T::zero();
            for t in 0..xs.len() - 1 {
                let r = run.outputs[t] - xs[t + 1];
                acc = acc + r * r;
            }
            Ok(acc / real((xs.len() - 1) as f64))
        }
        LossMode::MultiStep => {
            // One teacher-forced backbone pass, then a feedback excursion per
            // origin from the cached state. Bit-for-bit identical to calling
            // `forecast` per origin, without re-simulating shared prefixes.
            let trace = qrnn::trace_run(xs, 0, theta, cfg)?;
            let horizon = spec.horizon;
            let mut acc = T::zero();
            let mut terms = 0usize;
            for t0 in origins(xs.len(), horizon) {
                let mut rho = trace.pre_states[t0 + 1].clone();
                let mut y = trace.outputs[t0];
                for k in 0..horizon {
                    let r = y - xs[t0 + 1 + k];
                    acc = acc + r * r;
                    terms += 1;
                    if k + 1 < horizon {
                        y = qrnn::step(&mut rho, y, theta, cfg)?;
                    }
                }
            }
            Ok(acc / real(terms as f64))
        }
    }
}

/// Central finite differences of an arbitrary objective: the independent
/// oracle for the parameter-shift gradient, and the fast mode for long
/// benchmark runs.
pub fn grad_finite_diff<T, F>(f: F, theta: &[T], h: T) -> Result<Vec<T>>
where
    T: Scalar,
    F: Fn(&[T]) -> Result<T> + Sync,
{
    if !(h > T::zero()) {
        return Err(Error::Config("finite-difference step must be positive".into()));
    }
    (0..theta.len())
        .into_par_iter()
        .map(|i| {
            let mut plus = theta.to_vec();
            let mut minus = theta.to_vec();
            plus[i] = plus[i] + h;
            minus[i] = minus[i] - h;
            Ok((f(&plus)? - f(&minus)?) / (h + h))
        })
        .collect()
}

/// Parameter-shift gradient plus the number of circuit evaluations it spent.
#[derive(Clone, Debug)]
pub struct PsGradient<T> {
    pub grad: Vec<T>,
    pub evals: u64,
}

/// Shift terms (delta, coefficient) for one ansatz parameter.
fn shift_terms<T: Scalar>(param: usize, cfg: &QrnnConfig<T>) -> Vec<(T, T)> {
    let pi_2 = T::FRAC_PI_2();
    let half = real::<T>(0.5);
    if param < 3 * cfg.n_qubits() {
        vec![(pi_2, half), (-pi_2, -half)]
    } else {
        // generator eigenvalues {0, +-1/2}: four-term rule
        let sqrt2 = real::<T>(2.0).sqrt();
        let four = real::<T>(4.0);
        let c1 = (sqrt2 + T::one()) / (four * sqrt2);
        let c2 = (sqrt2 - T::one()) / (four * sqrt2);
        let three_pi_2 = pi_2 + T::PI();
        vec![
            (pi_2, c1),
            (-pi_2, -c1),
            (three_pi_2, -c2),
            (-three_pi_2, c2),
        ]
    }
}

/// Gradient contribution of a single run (teacher inputs + fed-back steps).
/// `make_weights` maps the run's outputs to per-output loss weights dL/dy_k.
fn run_gradient<T, W>(
    teacher: &[T],
    n_feedback: usize,
    make_weights: W,
    theta: &[T],
    cfg: &QrnnConfig<T>,
    grad: &mut [T],
) -> Result<u64>
where
    T: Scalar,
    W: FnOnce(&[T]) -> Vec<T>,
{
    let trace = qrnn::trace_run(teacher, n_feedback, theta, cfg)?;
    let steps = trace.outputs.len();
    let n_params = cfg.n_params();
    let first_fed = teacher.len();
    let loss_weights = make_weights(&trace.outputs);
    debug_assert_eq!(loss_weights.len(), steps);
    let mut evals = 1u64; // the forward trace

    // p_sum[j][k]: sum over occurrences t of d y_k / d theta_j^(t)
    let mut p_sum = vec![T::zero(); n_params * steps];
    // enc[t][k]: d y_k / d (encoding angle at step t), fed-back steps only
    let mut enc = vec![T::zero(); steps * steps];

    for t in 0..steps {
        let start = &trace.pre_states[t];
        let frozen = &trace.inputs[t..];
        for param in 0..n_params {
            for (delta, coef) in shift_terms(param, cfg) {
                let outs = qrnn::run_suffix(start, frozen, theta, cfg, OccShift::Ansatz { param, delta })?;
                evals += 1;
                for (off, &z) in outs.iter().enumerate() {
                    p_sum[param * steps + t + off] = p_sum[param * steps + t + off] + coef * z;
                }
            }
        }
        if t >= first_fed {
            // the encoding angle drives one RY per I/O qubit; product rule
            // over the qubits, two-term shift per rotation
            let half = real::<T>(0.5);
            for qubit in 0..cfg.n_io {
                for (delta, coef) in [(T::FRAC_PI_2(), half), (-T::FRAC_PI_2(), -half)] {
                    let outs = qrnn::run_suffix(
                        start,
                        frozen,
                        theta,
                        cfg,
                        OccShift::Encode { qubit, delta },
                    )?;
                    evals += 1;
                    for (off, &z) in outs.iter().enumerate() {
                        enc[t * steps + t + off] = enc[t * steps + t + off] + coef * z;
                    }
                }
            }
        }
    }

    // total[k][j] = d y_k / d theta_j, assembled in step order: partials plus
    // the chain through fed-back encoding angles a_t = scale * y_{t-1}.
    let mut total = vec![T::zero(); steps * n_params];
    for k in 0..steps {
        for j in 0..n_params {
            total[k * n_params + j] = p_sum[j * steps + k];
        }
        for t in first_fed..=k {
            let factor = cfg.encoding_scale * enc[t * steps + k];
            if factor != T::zero() {
                for j in 0..n_params {
                    total[k * n_params + j] =
                        total[k * n_params + j] + factor * total[(t - 1) * n_params + j];
                }
            }
        }
    }

    for (k, &w) in loss_weights.iter().enumerate() {
        if w != T::zero() {
            for j in 0..n_params {
                grad[j] = grad[j] + w * total[k * n_params + j];
            }
        }
    }
    Ok(evals)
}

/// Exact gradient of [`train_loss`] via the parameter-shift rule, summing
/// shifted evaluations over every occurrence of every parameter.
pub fn grad_parameter_shift<T: Scalar>(
    xs: &[T],
    theta: &ParamVector<T>,
    cfg: &QrnnConfig<T>,
    spec: &LossSpec,
) -> Result<PsGradient<T>> {
    check_split(xs, spec)?;
    cfg.validate()?;
    let n_params = cfg.n_params();
    let two = real::<T>(2.0);
    let mut grad = vec![T::zero(); n_params];
    let mut evals = 0u64;
    match spec.mode {
        LossMode::OneStep => {
            let norm = real::<T>((xs.len() - 1) as f64);
            let weights = |outputs: &[T]| {
                let mut w = vec![T::zero(); outputs.len()];
                for t in 0..xs.len() - 1 {
                    w[t] = two * (outputs[t] - xs[t + 1]) / norm;
                }
                w
            };
            evals += run_gradient(xs, 0, weights, theta, cfg, &mut grad)?;
        }
        LossMode::MultiStep => {
            let horizon = spec.horizon;
            let origin_list: Vec<usize> = origins(xs.len(), horizon).collect();
            let terms = real::<T>((origin_list.len() * horizon) as f64);
            for &t0 in &origin_list {
                let teacher = &xs[..=t0];
                let weights = |outputs: &[T]| {
                    let mut w = vec![T::zero(); outputs.len()];
                    for k in 0..horizon {
                        w[t0 + k] = two * (outputs[t0 + k] - xs[t0 + 1 + k]) / terms;
                    }
                    w
                };
                evals += run_gradient(teacher, horizon - 1, weights, theta, cfg, &mut grad)?;
            }
        }
    }
    Ok(PsGradient { grad, evals })
}

/// Analytic count of circuit evaluations [`grad_parameter_shift`] performs:
/// per run, one forward trace, one shifted suffix per (parameter,
/// occurrence, shift term), and two per (fed-back encoding angle, I/O qubit).
pub fn parameter_shift_eval_count<T: Scalar>(
    cfg: &QrnnConfig<T>,
    train_len: usize,
    spec: &LossSpec,
) -> u64 {
    let n = cfg.n_qubits() as u64;
    let per_occurrence = 2 * (3 * n) + 4 * n; // two-term U3 angles + four-term CRX angles
    let per_feedback = 2 * cfg.n_io as u64;
    match spec.mode {
        LossMode::OneStep => {
            let steps = train_len as u64;
            1 + per_occurrence * steps
        }
        LossMode::MultiStep => {
            let horizon = spec.horizon as u64;
            let mut total = 0u64;
            for t0 in origins(train_len, spec.horizon) {
                let steps = t0 as u64 + horizon;
                total += 1 + per_occurrence * steps + per_feedback * (horizon - 1);
            }
            total
        }
    }
}

/// How a gradient-based strategy obtains its gradients.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GradMode<T> {
    /// Exact per-occurrence parameter-shift rule.
    ParameterShift,
    /// Central finite differences with the given step.
    FiniteDiff { h: T },
}

/// A training objective the optimizers can drive, with an evaluation
/// counter for effort accounting.
pub trait Objective<T: Scalar>: Sync {
    fn dim(&self) -> usize;
    fn loss(&self, theta: &[T]) -> Result<T>;
    fn grad(&self, theta: &[T]) -> Result<Vec<T>>;
    /// Reporting metric; not part of training and not counted as effort.
    fn test_metric(&self, theta: &[T]) -> Result<T>;
    fn evals(&self) -> u64;
}

/// The QRNN forecasting objective over a prepared dataset.
///
/// `loss` counts one evaluation; gradients count per the active mode
/// (2 x dim loss calls for finite differences, the analytic shifted-run
/// count for parameter shift). The test metric is the relative RMSE of the
/// denormalized `horizon`-step forecast launched from the end of the train
/// split; it never touches the counter and never feeds back into training.
pub struct ForecastObjective<T: Scalar> {
    dataset: TimeSeriesDataset<T>,
    cfg: QrnnConfig<T>,
    spec: LossSpec,
    grad_mode: GradMode<T>,
    evals: AtomicU64,
}

impl<T: Scalar> ForecastObjective<T> {
    pub fn new(
        dataset: TimeSeriesDataset<T>,
        cfg: QrnnConfig<T>,
        spec: LossSpec,
        grad_mode: GradMode<T>,
    ) -> Result<Self> {
        cfg.validate()?;
        check_split(dataset.train_norm(), &spec)?;
        let task = ForecastTask {
            last_observed: dataset.train_range().end - 1,
            horizon: spec.horizon,
        };
        task.validate(dataset.raw().len())?;
        if let GradMode::FiniteDiff { h } = grad_mode {
            if !(h > T::zero()) {
                return Err(Error::Config(
                    "finite-difference step must be positive".into(),
                ));
            }
        }
        Ok(Self {
            dataset,
            cfg,
            spec,
            grad_mode,
            evals: AtomicU64::new(0),
        })
    }

    pub fn dataset(&self) -> &TimeSeriesDataset<T> {
        &self.dataset
    }

    pub fn config(&self) -> &QrnnConfig<T> {
        &self.cfg
    }

    pub fn loss_spec(&self) -> &LossSpec {
        &self.spec
    }

    pub fn grad_mode(&self) -> GradMode<T> {
        self.grad_mode
    }

    /// Circuit evaluations one gradient call consumes in the active mode.
    pub fn evals_per_grad(&self) -> u64 {
        match self.grad_mode {
            GradMode::FiniteDiff { .. } => 2 * self.dim() as u64,
            GradMode::ParameterShift => parameter_shift_eval_count(
                &self.cfg,
                self.dataset.train_norm().len(),
                &self.spec,
            ),
        }
    }

    fn params(&self, theta: &[T]) -> Result<ParamVector<T>> {
        ParamVector::new(theta.to_vec(), &self.cfg)
    }
}

impl<T: Scalar> Objective<T> for ForecastObjective<T> {
    fn dim(&self) -> usize {
        self.cfg.n_params()
    }

    fn loss(&self, theta: &[T]) -> Result<T> {
        let theta = self.params(theta)?;
        self.evals.fetch_add(1, Ordering::Relaxed);
        train_loss(self.dataset.train_norm(), &theta, &self.cfg, &self.spec)
    }

    fn grad(&self, theta: &[T]) -> Result<Vec<T>> {
        match self.grad_mode {
            GradMode::FiniteDiff { h } => grad_finite_diff(|p| self.loss(p), theta, h),
            GradMode::ParameterShift => {
                let theta = self.params(theta)?;
                let ps = grad_parameter_shift(
                    self.dataset.train_norm(),
                    &theta,
                    &self.cfg,
                    &self.spec,
                )?;
                self.evals.fetch_add(ps.evals, Ordering::Relaxed);
                Ok(ps.grad)
            }
        }
    }

    fn test_metric(&self, theta: &[T]) -> Result<T> {
        let theta = self.params(theta)?;
        let fc = qrnn::forecast(
            self.dataset.train_norm(),
            &theta,
            &self.cfg,
            self.spec.horizon,
        )?;
        let scaler = self.dataset.scaler();
        let pred: Vec<T> = fc.outputs.iter().map(|&y| scaler.denormalize(y)).collect();
        let truth = &self.dataset.test_raw()[..self.spec.horizon];
        rel_rmse(&pred, truth)
    }

    fn evals(&self) -> u64 {
        self.evals.load(Ordering::Relaxed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::split_80_20;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn cfg() -> QrnnConfig<f64> {
        QrnnConfig::default()
    }

    fn random_theta(rng: &mut ChaCha8Rng) -> ParamVector<f64> {
        let cfg = cfg();
        let v = (0..cfg.n_params()).map(|_| rng.gen_range(-PI..PI)).collect();
        ParamVector::new(v, &cfg).unwrap()
    }

    fn random_series(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
        (0..len).map(|_| rng.gen_range(0.05..0.95)).collect()
    }

    #[test]
    fn rel_rmse_reference_cases() {
        let truth = [1.0, 2.0, 3.0];
        assert_eq!(rel_rmse(&truth, &truth).unwrap(), 0.0);
        assert_eq!(rel_rmse(&[0.0, 0.0, 0.0], &truth).unwrap(), 1.0);
        let pred = [1.1, 2.1, 3.1];
        assert_abs_diff_eq!(
            rel_rmse(&pred, &truth).unwrap(),
            0.04629100498862761,
            epsilon = 1e-15
        );
        assert!(matches!(
            rel_rmse(&[1.0], &truth),
            Err(Error::LengthMismatch { left: 1, right: 3 })
        ));
        assert!(matches!(
            rel_rmse(&[1.0, 1.0], &[0.0, 0.0]),
            Err(Error::ZeroReference)
        ));
    }

    #[test]
    fn one_step_loss_is_zero_at_the_fixed_point() {
        let cfg = cfg();
        let theta = ParamVector::zeros(&cfg);
        let xs = vec![0.5; 10];
        let spec = LossSpec {
            mode: LossMode::OneStep,
            horizon: 1,
        };
        let loss = train_loss(&xs, &theta, &cfg, &spec).unwrap();
        assert!(loss >= 0.0);
        assert!(loss < 1e-28, "fixed point should give (near-)zero loss: {loss}");
    }

    #[test]
    fn loss_is_deterministic() {
        let cfg = cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let theta = random_theta(&mut rng);
        let xs = random_series(&mut rng, 15);
        let spec = LossSpec {
            mode: LossMode::MultiStep,
            horizon: 3,
        };
        let a = train_loss(&xs, &theta, &cfg, &spec).unwrap();
        let b = train_loss(&xs, &theta, &cfg, &spec).unwrap();
        assert_eq!(a, b);
        assert!(a >= 0.0);
    }

    #[test]
    fn multi_step_loss_matches_per_origin_forecasts() {
        let cfg = cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let theta = random_theta(&mut rng);
        let xs = random_series(&mut rng, 12);
        let horizon = 3;
        let spec = LossSpec {
            mode: LossMode::MultiStep,
            horizon,
        };
        let fast = train_loss(&xs, &theta, &cfg, &spec).unwrap();
        let mut acc = 0.0;
        let mut terms = 0usize;
        for t0 in 0..=(xs.len() - 1 - horizon) {
            let fc = qrnn::forecast(&xs[..=t0], &theta, &cfg, horizon).unwrap();
            for k in 0..horizon {
                let r = fc.outputs[k] - xs[t0 + 1 + k];
                acc += r * r;
                terms += 1;
            }
        }
        assert_eq!(fast, acc / terms as f64, "cached backbone drifted");
    }

    #[test]
    fn split_length_preconditions() {
        let cfg = cfg();
        let theta = ParamVector::zeros(&cfg);
        let spec = LossSpec {
            mode: LossMode::MultiStep,
            horizon: 4,
        };
        assert!(matches!(
            train_loss(&[0.5; 5], &theta, &cfg, &spec),
            Err(Error::SplitTooShort { len: 5, horizon: 4 })
        ));
        assert!(train_loss(&[0.5; 6], &theta, &cfg, &spec).is_ok());
    }

    #[test]
    fn finite_diff_is_exact_on_quadratics() {
        let f = |theta: &[f64]| Ok(theta.iter().map(|t| t * t).sum());
        let theta = vec![0.3, -1.2, 2.0, 0.0];
        let grad = grad_finite_diff(f, &theta, 1e-5).unwrap();
        for (g, t) in grad.iter().zip(&theta) {
            assert_abs_diff_eq!(*g, 2.0 * t, epsilon = 1e-8);
        }
    }

    #[test]
    fn finite_diff_error_scales_quadratically_in_h() {
        let f = |theta: &[f64]| Ok(theta[0].sin());
        let theta = vec![0.7];
        let exact = 0.7f64.cos();
        let coarse = (grad_finite_diff(f, &theta, 1e-2).unwrap()[0] - exact).abs();
        let fine = (grad_finite_diff(f, &theta, 1e-5).unwrap()[0] - exact).abs();
        assert!(fine < 1e-8, "fine-step error {fine}");
        assert!(
            coarse / fine.max(1e-300) > 1e4,
            "expected O(h^2) ratio, got {coarse} / {fine}"
        );
    }

    #[test]
    fn single_ry_shift_rule_closed_form() {
        // d/dtheta sin^2(theta/2) = sin(theta)/2 via the two-term rule
        use crate::sim::{DensityMatrix, Gate};
        let prob = |theta: f64| {
            let mut rho = DensityMatrix::<f64>::zero_state(1).unwrap();
            rho.apply_gate(&Gate::Ry { target: 0, theta }).unwrap();
            rho.prob_one(0).unwrap()
        };
        for theta in [0.0, 0.4, std::f64::consts::FRAC_PI_2, 2.2] {
            let shifted = (prob(theta + PI / 2.0) - prob(theta - PI / 2.0)) / 2.0;
            assert_abs_diff_eq!(shifted, theta.sin() / 2.0, epsilon = 1e-12);
        }
        let at_quarter = (prob(PI / 2.0 + PI / 2.0) - prob(PI / 2.0 - PI / 2.0)) / 2.0;
        assert_abs_diff_eq!(at_quarter, 0.5, epsilon = 1e-12);
    }

    fn assert_grad_close(ps: &[f64], fd: &[f64]) {
        for (i, (a, b)) in ps.iter().zip(fd).enumerate() {
            let tol = 1e-6f64.max(1e-4 * b.abs());
            assert!(
                (a - b).abs() <= tol,
                "component {i}: shift {a} vs finite-diff {b}"
            );
        }
    }

    #[test]
    fn parameter_shift_matches_finite_differences_one_step() {
        let cfg = cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let theta = random_theta(&mut rng);
        let xs = random_series(&mut rng, 6);
        let spec = LossSpec {
            mode: LossMode::OneStep,
            horizon: 1,
        };
        let ps = grad_parameter_shift(&xs, &theta, &cfg, &spec).unwrap();
        let fd = grad_finite_diff(
            |p| train_loss(&xs, &ParamVector::new(p.to_vec(), &cfg)?, &cfg, &spec),
            &theta,
            1e-5,
        )
        .unwrap();
        assert_grad_close(&ps.grad, &fd);
    }

    #[test]
    fn parameter_shift_matches_finite_differences_multi_step() {
        let cfg = cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..2 {
            let theta = random_theta(&mut rng);
            let xs = random_series(&mut rng, 7);
            let spec = LossSpec {
                mode: LossMode::MultiStep,
                horizon: 2,
            };
            let ps = grad_parameter_shift(&xs, &theta, &cfg, &spec).unwrap();
            let fd = grad_finite_diff(
                |p| train_loss(&xs, &ParamVector::new(p.to_vec(), &cfg)?, &cfg, &spec),
                &theta,
                1e-5,
            )
            .unwrap();
            assert_grad_close(&ps.grad, &fd);
        }
    }

    #[test]
    fn memory_rotation_gradients_vanish_at_identity_coupling() {
        let cfg = cfg();
        let theta = ParamVector::zeros(&cfg);
        let xs = vec![0.5; 8];
        let spec = LossSpec {
            mode: LossMode::OneStep,
            horizon: 1,
        };
        let ps = grad_parameter_shift(&xs, &theta, &cfg, &spec).unwrap();
        // U3 theta-angles on memory qubits 3, 4, 5
        for qubit in 3..6 {
            let idx = 3 * qubit;
            assert!(
                ps.grad[idx].abs() < 1e-12,
                "memory rotation {idx} leaked into the readout: {}",
                ps.grad[idx]
            );
        }
        let fd = grad_finite_diff(
            |p| train_loss(&xs, &ParamVector::new(p.to_vec(), &cfg)?, &cfg, &spec),
            &theta,
            1e-5,
        )
        .unwrap();
        assert_grad_close(&ps.grad, &fd);
    }

    #[test]
    fn parameter_shift_eval_count_is_exact() {
        let cfg = cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let theta = random_theta(&mut rng);
        let xs = random_series(&mut rng, 6);
        for spec in [
            LossSpec {
                mode: LossMode::OneStep,
                horizon: 1,
            },
            LossSpec {
                mode: LossMode::MultiStep,
                horizon: 2,
            },
        ] {
            let ps = grad_parameter_shift(&xs, &theta, &cfg, &spec).unwrap();
            assert_eq!(ps.evals, parameter_shift_eval_count(&cfg, xs.len(), &spec));
        }
    }

    #[test]
    fn forecast_objective_counts_evaluations() {
        let series = crate::data::mackey_glass(&crate::data::MackeyGlassParams::default(), 100)
            .unwrap();
        let dataset = split_80_20(&series, "mg").unwrap();
        let spec = LossSpec {
            mode: LossMode::MultiStep,
            horizon: 4,
        };
        let obj = ForecastObjective::new(
            dataset,
            cfg(),
            spec,
            GradMode::FiniteDiff { h: 1e-5 },
        )
        .unwrap();
        let theta = vec![0.1; 24];
        assert_eq!(obj.evals(), 0);
        obj.loss(&theta).unwrap();
        assert_eq!(obj.evals(), 1);
        obj.grad(&theta).unwrap();
        assert_eq!(obj.evals(), 1 + 48);
        assert_eq!(obj.evals_per_grad(), 48);
        obj.test_metric(&theta).unwrap();
        assert_eq!(obj.evals(), 49, "test metric must not count as effort");
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, .. ProptestConfig::default() })]

        #[test]
        fn rel_rmse_is_scale_covariant(scale in 0.01f64..100.0, seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let truth: Vec<f64> = (0..10).map(|_| rng.gen_range(0.5..2.0)).collect();
            let pred: Vec<f64> = truth.iter().map(|t| t + rng.gen_range(-0.3..0.3)).collect();
            let base = rel_rmse(&pred, &truth).unwrap();
            let scaled = rel_rmse(
                &pred.iter().map(|p| p * scale).collect::<Vec<_>>(),
                &truth.iter().map(|t| t * scale).collect::<Vec<_>>(),
            ).unwrap();
            prop_assert!((base - scaled).abs() < 1e-12);
        }
    }
}
