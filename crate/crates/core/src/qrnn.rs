//! The recurrent quantum model: angle encoding on the I/O register, a
//! 24-parameter recurring ansatz over 3 I/O + 3 memory qubits, single-step
//! evolution, teacher-forced sequence runs, and iterative forecasting.
//!
//! Ansatz layout (for `n` qubits, `4n` parameters): one general single-qubit
//! rotation `U3(theta[3i], theta[3i+1], theta[3i+2])` on each qubit `i`,
//! followed by a cycle of controlled rotations `CRX(theta[3n+i])` with
//! control `i` and target `(i+1) mod n`, linking every qubit and letting the
//! I/O and memory registers exchange information. The whole structure is
//! produced by [`build_ansatz`], so swapping in a different gate assignment
//! is a one-function change.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sim::{DensityMatrix, Gate, MAX_QUBITS};

/// Model shape and encoding conventions.
///
/// The I/O register occupies qubits `0..n_io`, memory occupies the rest.
/// `output_qubit` indexes into the I/O register. `encoding_scale` is the
/// rotation angle per unit of normalized input; the default `pi` maps
/// normalized values in [0, 1] onto the full probability range, so the
/// identity ansatz reproduces its input exactly.
#[derive(Clone, Debug)]
pub struct QrnnConfig<T> {
    pub n_io: usize,
    pub n_mem: usize,
    pub output_qubit: usize,
    pub encoding_scale: T,
}

impl<T: Scalar> Default for QrnnConfig<T> {
    fn default() -> Self {
        Self {
            n_io: 3,
            n_mem: 3,
            output_qubit: 0,
            encoding_scale: T::PI(),
        }
    }
}

impl<T: Scalar> QrnnConfig<T> {
    pub fn n_qubits(&self) -> usize {
        self.n_io + self.n_mem
    }

    /// 3 Euler angles per qubit plus one controlled rotation per qubit.
    pub fn n_params(&self) -> usize {
        4 * self.n_qubits()
    }

    pub fn io_qubits(&self) -> Vec<usize> {
        (0..self.n_io).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_qubits();
        if self.n_io == 0 || n < 2 || n > MAX_QUBITS {
            return Err(Error::Config(format!(
                "need 2..={MAX_QUBITS} qubits with a non-empty I/O register, got n_io={} n_mem={}",
                self.n_io, self.n_mem
            )));
        }
        if self.output_qubit >= self.n_io {
            return Err(Error::Config(format!(
                "output qubit {} outside the I/O register 0..{}",
                self.output_qubit, self.n_io
            )));
        }
        if !self.encoding_scale.is_finite() {
            return Err(Error::Config("encoding scale must be finite".into()));
        }
        Ok(())
    }
}

/// The trainable angles, validated for length and finiteness.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamVector<T>(Vec<T>);

impl<T: Scalar> ParamVector<T> {
    pub fn new(values: Vec<T>, cfg: &QrnnConfig<T>) -> Result<Self> {
        if values.len() != cfg.n_params() {
            return Err(Error::ParamLength {
                got: values.len(),
                expected: cfg.n_params(),
            });
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteParam(bad));
        }
        Ok(Self(values))
    }

    pub fn zeros(cfg: &QrnnConfig<T>) -> Self {
        Self(vec![T::zero(); cfg.n_params()])
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<T> {
        self.0
    }
}

impl<T> std::ops::Deref for ParamVector<T> {
    type Target = [T];
    fn deref(&self) -> &[T] {
        &self.0
    }
}

/// Forecast launch point: predictions cover `last_observed + 1 ..= last_observed + horizon`.
#[derive(Clone, Copy, Debug)]
pub struct ForecastTask {
    pub last_observed: usize,
    pub horizon: usize,
}

impl ForecastTask {
    pub fn validate(&self, series_len: usize) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::ZeroHorizon);
        }
        if self.last_observed + self.horizon >= series_len {
            return Err(Error::SeriesTooShort {
                got: series_len,
                required: self.last_observed + self.horizon + 1,
            });
        }
        Ok(())
    }
}

/// Outputs of a sequence run plus the number of inputs that had to be
/// clamped into [0, 1] before encoding.
#[derive(Clone, Debug)]
pub struct SequenceRun<T> {
    pub outputs: Vec<T>,
    pub clamp_events: u64,
}

fn clamp01<T: Scalar>(x: T) -> T {
    x.max(T::zero()).min(T::one())
}

/// Loads a normalized scalar into the I/O register: `RY(scale * x)` on each
/// I/O qubit. Out-of-range values are clamped; returns whether that happened.
pub fn encode<T: Scalar>(rho: &mut DensityMatrix<T>, x_norm: T, cfg: &QrnnConfig<T>) -> Result<bool> {
    let clamped = x_norm < T::zero() || x_norm > T::one();
    encode_angle(rho, cfg.encoding_scale * clamp01(x_norm), cfg)?;
    Ok(clamped)
}

/// Applies `RY(angle)` to every I/O qubit. Used directly by the gradient
/// code, which shifts the encoding angle itself.
pub(crate) fn encode_angle<T: Scalar>(
    rho: &mut DensityMatrix<T>,
    angle: T,
    cfg: &QrnnConfig<T>,
) -> Result<()> {
    for q in 0..cfg.n_io {
        rho.apply_gate(&Gate::Ry {
            target: q,
            theta: angle,
        })?;
    }
    Ok(())
}

/// The recurring ansatz as an explicit gate list.
pub fn build_ansatz<T: Scalar>(theta: &ParamVector<T>, cfg: &QrnnConfig<T>) -> Result<Vec<Gate<T>>> {
    if theta.len() != cfg.n_params() {
        return Err(Error::ParamLength {
            got: theta.len(),
            expected: cfg.n_params(),
        });
    }
    let n = cfg.n_qubits();
    let mut gates = Vec::with_capacity(2 * n);
    for i in 0..n {
        gates.push(Gate::U3 {
            target: i,
            theta: theta[3 * i],
            phi: theta[3 * i + 1],
            lambda: theta[3 * i + 2],
        });
    }
    for i in 0..n {
        gates.push(Gate::Crx {
            control: i,
            target: (i + 1) % n,
            theta: theta[3 * n + i],
        });
    }
    Ok(gates)
}

/// Applies the ansatz in place, optionally shifting one parameter at this
/// application only (the primitive behind per-occurrence parameter-shift
/// gradients). Must stay gate-for-gate identical to [`build_ansatz`].
pub(crate) fn apply_ansatz<T: Scalar>(
    rho: &mut DensityMatrix<T>,
    theta: &[T],
    cfg: &QrnnConfig<T>,
    shift: Option<(usize, T)>,
) -> Result<()> {
    debug_assert_eq!(theta.len(), cfg.n_params());
    let n = cfg.n_qubits();
    let shifted = |k: usize| -> T {
        match shift {
            Some((param, delta)) if param == k => theta[k] + delta,
            _ => theta[k],
        }
    };
    for i in 0..n {
        rho.apply_gate(&Gate::U3 {
            target: i,
            theta: shifted(3 * i),
            phi: shifted(3 * i + 1),
            lambda: shifted(3 * i + 2),
        })?;
    }
    for i in 0..n {
        rho.apply_gate(&Gate::Crx {
            control: i,
            target: (i + 1) % n,
            theta: shifted(3 * n + i),
        })?;
    }
    Ok(())
}

/// One recurrent step: encode the input, run the ansatz, read out
/// P(1) on the output qubit, then reset the I/O register. The memory
/// register carries forward untouched by the reset.
pub fn step<T: Scalar>(
    rho: &mut DensityMatrix<T>,
    x_norm: T,
    theta: &ParamVector<T>,
    cfg: &QrnnConfig<T>,
) -> Result<T> {
    encode(rho, x_norm, cfg)?;
    apply_ansatz(rho, theta, cfg, None)?;
    let y = clamp01(rho.prob_one(cfg.output_qubit)?);
    rho.reset_qubits(&cfg.io_qubits())?;
    Ok(y)
}

/// Teacher-forced run: feeds the true series, output `t` predicts `xs[t+1]`.
pub fn run_sequence<T: Scalar>(
    xs: &[T],
    theta: &ParamVector<T>,
    cfg: &QrnnConfig<T>,
) -> Result<SequenceRun<T>> {
    if xs.is_empty() {
        return Err(Error::EmptySequence);
    }
    cfg.validate()?;
    let mut rho = DensityMatrix::zero_state(cfg.n_qubits())?;
    let mut outputs = Vec::with_capacity(xs.len());
    let mut clamp_events = 0u64;
    for &x in xs {
        if x < T::zero() || x > T::one() {
            clamp_events += 1;
        }
        outputs.push(step(&mut rho, x, theta, cfg)?);
    }
    Ok(SequenceRun {
        outputs,
        clamp_events,
    })
}

/// Iterative forecast: teacher-forced over `history`, then each prediction
/// is fed back as the next input. Returns `horizon` predictions; the first
/// is the last teacher-forced output (it predicts the point right after the
/// history), so `forecast(h, 1)` equals the tail of `run_sequence(h)`.
pub fn forecast<T: Scalar>(
    history: &[T],
    theta: &ParamVector<T>,
    cfg: &QrnnConfig<T>,
    horizon: usize,
) -> Result<SequenceRun<T>> {
    if horizon == 0 {
        return Err(Error::ZeroHorizon);
    }
    if history.is_empty() {
        return Err(Error::EmptySequence);
    }
    cfg.validate()?;
    let mut rho = DensityMatrix::zero_state(cfg.n_qubits())?;
    let mut clamp_events = 0u64;
    let mut last = T::zero();
    for &x in history {
        if x < T::zero() || x > T::one() {
            clamp_events += 1;
        }
        last = step(&mut rho, x, theta, cfg)?;
    }
    let mut outputs = Vec::with_capacity(horizon);
    outputs.push(last);
    for _ in 1..horizon {
        last = step(&mut rho, last, theta, cfg)?;
        outputs.push(last);
    }
    Ok(SequenceRun {
        outputs,
        clamp_events,
    })
}

/// Forward trace with enough context to differentiate afterwards: the state
/// entering each step, the (already clamped) input fed to each step, and
/// every output. `pre_states` has one extra final entry.
#[derive(Clone, Debug)]
pub(crate) struct StepTrace<T> {
    pub pre_states: Vec<DensityMatrix<T>>,
    pub inputs: Vec<T>,
    pub outputs: Vec<T>,
}

/// Runs `teacher` inputs followed by `n_feedback` fed-back steps, recording
/// the full trace.
pub(crate) fn trace_run<T: Scalar>(
    teacher: &[T],
    n_feedback: usize,
    theta: &[T],
    cfg: &QrnnConfig<T>,
) -> Result<StepTrace<T>> {
    if teacher.is_empty() {
        return Err(Error::EmptySequence);
    }
    let steps = teacher.len() + n_feedback;
    let mut rho = DensityMatrix::zero_state(cfg.n_qubits())?;
    let mut trace = StepTrace {
        pre_states: Vec::with_capacity(steps + 1),
        inputs: Vec::with_capacity(steps),
        outputs: Vec::with_capacity(steps),
    };
    let mut next_input = clamp01(teacher[0]);
    for t in 0..steps {
        trace.pre_states.push(rho.clone());
        trace.inputs.push(next_input);
        encode_angle(&mut rho, cfg.encoding_scale * next_input, cfg)?;
        apply_ansatz(&mut rho, theta, cfg, None)?;
        let y = clamp01(rho.prob_one(cfg.output_qubit)?);
        rho.reset_qubits(&cfg.io_qubits())?;
        trace.outputs.push(y);
        next_input = if t + 1 < teacher.len() {
            clamp01(teacher[t + 1])
        } else {
            y
        };
    }
    trace.pre_states.push(rho);
    Ok(trace)
}

/// Which angle of the first suffix step gets shifted.
///
/// The encoding angle feeds one RY per I/O qubit, so its exact derivative
/// needs a per-gate product rule: `Encode` shifts the rotation on a single
/// I/O qubit, and the caller sums over qubits.
#[derive(Clone, Copy, Debug)]
pub(crate) enum OccShift<T> {
    /// Shift ansatz parameter `param` by `delta` at this occurrence only.
    Ansatz { param: usize, delta: T },
    /// Shift the encoding rotation on I/O qubit `qubit` by `delta`.
    Encode { qubit: usize, delta: T },
}

/// Re-simulates steps `t..` of a traced run with *frozen* inputs (the fed
/// back values stay at their forward-pass values) and one shifted angle at
/// the first suffix step. Returns the suffix outputs.
pub(crate) fn run_suffix<T: Scalar>(
    start: &DensityMatrix<T>,
    frozen_inputs: &[T],
    theta: &[T],
    cfg: &QrnnConfig<T>,
    shift: OccShift<T>,
) -> Result<Vec<T>> {
    let mut rho = start.clone();
    let mut outputs = Vec::with_capacity(frozen_inputs.len());
    for (k, &input) in frozen_inputs.iter().enumerate() {
        let angle = cfg.encoding_scale * input;
        let mut ansatz_shift = None;
        let mut encode_shift = None;
        if k == 0 {
            match shift {
                OccShift::Ansatz { param, delta } => ansatz_shift = Some((param, delta)),
                OccShift::Encode { qubit, delta } => encode_shift = Some((qubit, delta)),
            }
        }
        for q in 0..cfg.n_io {
            let theta_q = match encode_shift {
                Some((qubit, delta)) if qubit == q => angle + delta,
                _ => angle,
            };
            rho.apply_gate(&Gate::Ry {
                target: q,
                theta: theta_q,
            })?;
        }
        apply_ansatz(&mut rho, theta, cfg, ansatz_shift)?;
        let y = clamp01(rho.prob_one(cfg.output_qubit)?);
        rho.reset_qubits(&cfg.io_qubits())?;
        outputs.push(y);
    }
    Ok(outputs)
}
