//! Experiment orchestration: dataset preparation, the three-stage protocol
//! over several seeds, aggregation across runs, and CSV emission.
//!
//! Outputs are fully deterministic for a given configuration: jobs are
//! ordered by (method, seed), every run draws from its own seeded stream,
//! aggregation uses fixed summation order, and floats are written with
//! Rust's shortest round-trip formatting.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::data::{self, TimeSeriesDataset};
use crate::error::{Error, Result};
use crate::objective::{ForecastObjective, GradMode, LossMode, LossSpec};
use crate::optim::{run_strategy, Method, RunOutcome, StrategySchedule};
use crate::qrnn::QrnnConfig;
use crate::scalar::{real, Scalar};

/// Where the series comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum DatasetSource {
    /// Generate the Mackey-Glass series at the stated constants.
    MackeyGlass,
    /// Load one column of a user-supplied CSV file.
    Csv { path: PathBuf, column: String },
}

/// Gradient estimator the gradient-based strategies use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GradKind {
    /// Central finite differences (the fast mode; 48 evaluations per
    /// gradient at 24 parameters).
    FiniteDiff,
    /// Exact per-occurrence parameter shift. Hundreds of times costlier per
    /// epoch on the full protocol; intended for small runs.
    ParameterShift,
}

impl GradKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            GradKind::FiniteDiff => "fd",
            GradKind::ParameterShift => "shift",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "fd" => Ok(GradKind::FiniteDiff),
            "shift" => Ok(GradKind::ParameterShift),
            other => Err(Error::Config(format!(
                "unknown gradient mode {other:?} (expected fd or shift)"
            ))),
        }
    }
}

pub fn parse_loss_mode(s: &str) -> Result<LossMode> {
    match s.trim() {
        "one-step" => Ok(LossMode::OneStep),
        "multi-step" => Ok(LossMode::MultiStep),
        other => Err(Error::Config(format!(
            "unknown loss mode {other:?} (expected one-step or multi-step)"
        ))),
    }
}

pub fn loss_mode_str(mode: LossMode) -> &'static str {
    match mode {
        LossMode::OneStep => "one-step",
        LossMode::MultiStep => "multi-step",
    }
}

/// Epoch budgets per method (protocol defaults 100 / 11 / 20+9).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EpochBudgets {
    pub gradient: usize,
    pub cmaes: usize,
    pub hybrid_gradient: usize,
    pub hybrid_evo: usize,
}

impl Default for EpochBudgets {
    fn default() -> Self {
        Self {
            gradient: 100,
            cmaes: 11,
            hybrid_gradient: 20,
            hybrid_evo: 9,
        }
    }
}

/// A fully resolved experiment.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub source: DatasetSource,
    pub horizon: usize,
    pub methods: Vec<Method>,
    pub runs: usize,
    pub base_seed: u64,
    pub loss_mode: LossMode,
    pub grad: GradKind,
    pub fd_step: f64,
    pub budgets: EpochBudgets,
    pub out_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("no methods enabled".into()));
        }
        if self.runs == 0 {
            return Err(Error::Config("need at least one run".into()));
        }
        if !(self.fd_step > 0.0) {
            return Err(Error::Config("fd-step must be positive".into()));
        }
        for method in &self.methods {
            self.schedule_for(*method, 0).validate()?;
        }
        Ok(())
    }

    pub fn schedule_for(&self, method: Method, seed: u64) -> StrategySchedule {
        let (gradient_epochs, evo_generations) = match method {
            Method::Gradient => (self.budgets.gradient, 0),
            Method::CmaEs => (0, self.budgets.cmaes),
            Method::Hybrid => (self.budgets.hybrid_gradient, self.budgets.hybrid_evo),
        };
        StrategySchedule::protocol(method, seed).with_budgets(gradient_epochs, evo_generations)
    }

    pub fn loss_spec(&self) -> LossSpec {
        LossSpec {
            mode: self.loss_mode,
            horizon: self.horizon,
        }
    }

    fn grad_mode<T: Scalar>(&self) -> GradMode<T> {
        match self.grad {
            GradKind::FiniteDiff => GradMode::FiniteDiff {
                h: real(self.fd_step),
            },
            GradKind::ParameterShift => GradMode::ParameterShift,
        }
    }
}

/// Loads and protocol-splits the configured dataset.
pub fn load_dataset<T: Scalar>(source: &DatasetSource) -> Result<TimeSeriesDataset<T>> {
    match source {
        DatasetSource::MackeyGlass => {
            let series = data::mackey_glass(&data::MackeyGlassParams::default(), 100)?;
            data::split_80_20(&series, "mackey-glass")
        }
        DatasetSource::Csv { path, column } => {
            let series = data::load_csv(path, column)?;
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "csv".to_string());
            data::split_80_20(&series, &name)
        }
    }
}

/// All raw results of one experiment.
#[derive(Clone, Debug)]
pub struct ExperimentRun<T> {
    pub dataset_name: String,
    pub outcomes: Vec<RunOutcome<T>>,
    /// Evaluations one gradient call consumes (for the counter audit).
    pub evals_per_grad: u64,
}

/// Runs every enabled method over `runs` seeds (base seed + run index).
/// Failed runs are recorded, not fatal; jobs execute in parallel but the
/// outcome order is fixed by (method, seed).
pub fn run_experiment<T: Scalar>(config: &ExperimentConfig) -> Result<ExperimentRun<T>> {
    config.validate()?;
    let dataset = load_dataset::<T>(&config.source)?;
    let spec = config.loss_spec();

    // fail fast on an unusable dataset/spec combination
    let probe = ForecastObjective::new(
        dataset.clone(),
        QrnnConfig::default(),
        spec,
        config.grad_mode::<T>(),
    )?;
    let evals_per_grad = probe.evals_per_grad();

    let mut jobs: Vec<(Method, u64)> = Vec::new();
    for &method in &config.methods {
        for run in 0..config.runs {
            jobs.push((method, config.base_seed + run as u64));
        }
    }

    let outcomes: Vec<RunOutcome<T>> = jobs
        .par_iter()
        .map(|&(method, seed)| {
            let objective = match ForecastObjective::new(
                dataset.clone(),
                QrnnConfig::default(),
                spec,
                config.grad_mode::<T>(),
            ) {
                Ok(obj) => obj,
                Err(e) => {
                    return RunOutcome {
                        method,
                        seed,
                        records: Vec::new(),
                        error: Some(e.to_string()),
                    }
                }
            };
            run_strategy(&config.schedule_for(method, seed), &objective)
        })
        .collect();

    Ok(ExperimentRun {
        dataset_name: dataset.name.clone(),
        outcomes,
        evals_per_grad,
    })
}

/// Analytic cumulative evaluation count after `epoch` epochs of a schedule:
/// each gradient epoch costs one gradient plus the recorded loss; each
/// generation costs `population` evaluations.
pub fn expected_cumulative_evals(
    evals_per_grad: u64,
    population: u64,
    gradient_epochs: usize,
    epoch: usize,
) -> u64 {
    let grad_epochs = epoch.min(gradient_epochs) as u64;
    let evo_epochs = epoch.saturating_sub(gradient_epochs) as u64;
    grad_epochs * (evals_per_grad + 1) + evo_epochs * population
}

/// One aggregated point of a method's error curve.
#[derive(Clone, Copy, Debug)]
pub struct CurvePoint<T> {
    pub method: Method,
    pub epoch: usize,
    pub effort_x: u64,
    pub mean_rel_rmse: T,
    pub std_rel_rmse: T,
    pub mean_circuit_evals: f64,
}

/// Table-style summary row for one method.
#[derive(Clone, Copy, Debug)]
pub struct MethodSummary<T> {
    pub method: Method,
    pub best_mean_rel_rmse: T,
    pub best_epoch: usize,
    pub failed_runs: usize,
}

#[derive(Clone, Debug)]
pub struct Aggregates<T> {
    pub curves: Vec<CurvePoint<T>>,
    pub summaries: Vec<MethodSummary<T>>,
}

/// Per-epoch mean and sample standard deviation (n-1 denominator, zero for
/// a single run) of the test error, aggregated per method over successful
/// runs. Failed runs are skipped and counted.
pub fn aggregate<T: Scalar>(outcomes: &[RunOutcome<T>]) -> Result<Aggregates<T>> {
    let mut curves = Vec::new();
    let mut summaries = Vec::new();
    for method in Method::ALL {
        let all: Vec<&RunOutcome<T>> = outcomes.iter().filter(|o| o.method == method).collect();
        if all.is_empty() {
            continue;
        }
        let ok: Vec<&RunOutcome<T>> = all.iter().copied().filter(|o| o.succeeded()).collect();
        let failed_runs = all.len() - ok.len();
        if ok.is_empty() {
            return Err(Error::NoSuccessfulRuns(method.as_str().to_string()));
        }
        let epochs = ok[0].records.len();
        if ok.iter().any(|o| o.records.len() != epochs) {
            return Err(Error::Config(format!(
                "successful {method} runs produced traces of different lengths"
            )));
        }
        let n = real::<T>(ok.len() as f64);
        let mut best: Option<(T, usize)> = None;
        for e in 0..epochs {
            let mut mean = T::zero();
            let mut mean_evals = 0.0f64;
            for o in &ok {
                mean = mean + o.records[e].test_rel_rmse;
                mean_evals += o.records[e].circuit_evals as f64;
            }
            mean = mean / n;
            mean_evals /= ok.len() as f64;
            let std = if ok.len() > 1 {
                let mut ss = T::zero();
                for o in &ok {
                    let d = o.records[e].test_rel_rmse - mean;
                    ss = ss + d * d;
                }
                (ss / real::<T>((ok.len() - 1) as f64)).sqrt()
            } else {
                T::zero()
            };
            let record = &ok[0].records[e];
            curves.push(CurvePoint {
                method,
                epoch: record.epoch,
                effort_x: record.effort_x,
                mean_rel_rmse: mean,
                std_rel_rmse: std,
                mean_circuit_evals: mean_evals,
            });
            let improved = match best {
                Some((current, _)) => mean < current,
                None => true,
            };
            if improved {
                best = Some((mean, record.epoch));
            }
        }
        let (best_mean_rel_rmse, best_epoch) = best.expect("at least one epoch");
        summaries.push(MethodSummary {
            method,
            best_mean_rel_rmse,
            best_epoch,
            failed_runs,
        });
    }
    if summaries.is_empty() {
        return Err(Error::NoSuccessfulRuns("any".to_string()));
    }
    Ok(Aggregates { curves, summaries })
}

fn create_file(path: &Path) -> Result<std::io::BufWriter<fs::File>> {
    let file = fs::File::create(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(std::io::BufWriter::new(file))
}

fn finish(mut w: std::io::BufWriter<fs::File>, path: &Path) -> Result<()> {
    w.flush().map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

macro_rules! emit_line {
    ($w:expr, $path:expr, $($arg:tt)*) => {
        writeln!($w, $($arg)*).map_err(|source| Error::Io {
            path: $path.display().to_string(),
            source,
        })?
    };
}

/// The resolved configuration in the same flat key-value format the config
/// file uses, so an emitted file can be fed back in.
pub fn config_echo(config: &ExperimentConfig) -> String {
    let mut lines = Vec::new();
    match &config.source {
        DatasetSource::MackeyGlass => lines.push("dataset = mackey-glass".to_string()),
        DatasetSource::Csv { path, column } => {
            lines.push("dataset = csv".to_string());
            lines.push(format!("csv = {}", path.display()));
            lines.push(format!("column = {column}"));
        }
    }
    lines.push(format!("horizon = {}", config.horizon));
    let methods: Vec<&str> = config.methods.iter().map(|m| m.as_str()).collect();
    lines.push(format!("methods = {}", methods.join(",")));
    lines.push(format!("runs = {}", config.runs));
    lines.push(format!("seed = {}", config.base_seed));
    lines.push(format!("loss = {}", loss_mode_str(config.loss_mode)));
    lines.push(format!("grad = {}", config.grad.as_str()));
    lines.push(format!("fd-step = {}", config.fd_step));
    lines.push(format!("gradient-epochs = {}", config.budgets.gradient));
    lines.push(format!("cmaes-generations = {}", config.budgets.cmaes));
    lines.push(format!(
        "hybrid-gradient-epochs = {}",
        config.budgets.hybrid_gradient
    ));
    lines.push(format!(
        "hybrid-evo-generations = {}",
        config.budgets.hybrid_evo
    ));
    lines.push(format!("out = {}", config.out_dir.display()));
    lines.join("\n") + "\n"
}

/// Paths written by [`emit_results`].
#[derive(Clone, Debug)]
pub struct EmittedFiles {
    pub curves: PathBuf,
    pub summary: PathBuf,
    pub records: PathBuf,
    pub config_echo: PathBuf,
}

/// Writes `curves.csv`, `summary.csv`, `records.csv`, and `config.echo`
/// into the configured output directory.
pub fn emit_results<T: Scalar>(
    run: &ExperimentRun<T>,
    aggregates: &Aggregates<T>,
    config: &ExperimentConfig,
) -> Result<EmittedFiles> {
    fs::create_dir_all(&config.out_dir).map_err(|source| Error::Io {
        path: config.out_dir.display().to_string(),
        source,
    })?;

    let curves_path = config.out_dir.join("curves.csv");
    let mut w = create_file(&curves_path)?;
    emit_line!(
        w,
        curves_path,
        "method,epoch,effort_x,mean_rel_rmse,std_rel_rmse,mean_circuit_evals"
    );
    for p in &aggregates.curves {
        emit_line!(
            w,
            curves_path,
            "{},{},{},{},{},{}",
            p.method,
            p.epoch,
            p.effort_x,
            p.mean_rel_rmse,
            p.std_rel_rmse,
            p.mean_circuit_evals
        );
    }
    finish(w, &curves_path)?;

    let summary_path = config.out_dir.join("summary.csv");
    let mut w = create_file(&summary_path)?;
    emit_line!(
        w,
        summary_path,
        "method,best_mean_rel_rmse,best_epoch,failed_runs"
    );
    for s in &aggregates.summaries {
        emit_line!(
            w,
            summary_path,
            "{},{},{},{}",
            s.method,
            s.best_mean_rel_rmse,
            s.best_epoch,
            s.failed_runs
        );
    }
    finish(w, &summary_path)?;

    let records_path = config.out_dir.join("records.csv");
    let mut w = create_file(&records_path)?;
    emit_line!(
        w,
        records_path,
        "method,seed,epoch,effort_x,circuit_evals,train_loss,test_rel_rmse"
    );
    for outcome in &run.outcomes {
        for r in &outcome.records {
            emit_line!(
                w,
                records_path,
                "{},{},{},{},{},{},{}",
                r.method,
                r.seed,
                r.epoch,
                r.effort_x,
                r.circuit_evals,
                r.train_loss,
                r.test_rel_rmse
            );
        }
    }
    finish(w, &records_path)?;

    let echo_path = config.out_dir.join("config.echo");
    let mut w = create_file(&echo_path)?;
    emit_line!(w, echo_path, "{}", config_echo(config).trim_end());
    finish(w, &echo_path)?;

    Ok(EmittedFiles {
        curves: curves_path,
        summary: summary_path,
        records: records_path,
        config_echo: echo_path,
    })
}

/// Configuration fields as read from a file or flags; `None` means "not
/// given here".
#[derive(Clone, Debug, Default)]
pub struct PartialConfig {
    pub dataset: Option<String>,
    pub csv: Option<PathBuf>,
    pub column: Option<String>,
    pub horizon: Option<usize>,
    pub methods: Option<Vec<Method>>,
    pub runs: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub loss: Option<LossMode>,
    pub grad: Option<GradKind>,
    pub fd_step: Option<f64>,
    pub gradient_epochs: Option<usize>,
    pub cmaes_generations: Option<usize>,
    pub hybrid_gradient_epochs: Option<usize>,
    pub hybrid_evo_generations: Option<usize>,
}

pub fn parse_methods(s: &str) -> Result<Vec<Method>> {
    let mut methods = Vec::new();
    for part in s.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        methods.push(Method::parse(part)?);
    }
    if methods.is_empty() {
        return Err(Error::Config("no methods given".into()));
    }
    methods.sort();
    methods.dedup();
    Ok(methods)
}

/// Parses the flat `key = value` config format (`#` starts a comment).
pub fn parse_config_text(text: &str) -> Result<PartialConfig> {
    let mut cfg = PartialConfig::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "line {}: expected `key = value`, got {raw:?}",
                lineno + 1
            )));
        };
        let key = key.trim();
        let value = value.trim();
        let parse_usize = |what: &str| -> Result<usize> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("{what} must be a non-negative integer")))
        };
        match key {
            "dataset" => cfg.dataset = Some(value.to_string()),
            "csv" => cfg.csv = Some(PathBuf::from(value)),
            "column" => cfg.column = Some(value.to_string()),
            "horizon" => cfg.horizon = Some(parse_usize("horizon")?),
            "methods" => cfg.methods = Some(parse_methods(value)?),
            "runs" => cfg.runs = Some(parse_usize("runs")?),
            "seed" => {
                cfg.seed = Some(
                    value
                        .parse()
                        .map_err(|_| Error::Config("seed must be an integer".into()))?,
                )
            }
            "out" => cfg.out = Some(PathBuf::from(value)),
            "loss" => cfg.loss = Some(parse_loss_mode(value)?),
            "grad" => cfg.grad = Some(GradKind::parse(value)?),
            "fd-step" => {
                cfg.fd_step = Some(
                    value
                        .parse()
                        .map_err(|_| Error::Config("fd-step must be a number".into()))?,
                )
            }
            "gradient-epochs" => cfg.gradient_epochs = Some(parse_usize("gradient-epochs")?),
            "cmaes-generations" => cfg.cmaes_generations = Some(parse_usize("cmaes-generations")?),
            "hybrid-gradient-epochs" => {
                cfg.hybrid_gradient_epochs = Some(parse_usize("hybrid-gradient-epochs")?)
            }
            "hybrid-evo-generations" => {
                cfg.hybrid_evo_generations = Some(parse_usize("hybrid-evo-generations")?)
            }
            other => {
                return Err(Error::Config(format!(
                    "line {}: unknown configuration key {other:?}",
                    lineno + 1
                )))
            }
        }
    }
    Ok(cfg)
}

impl PartialConfig {
    /// Overlays `self` (higher priority, e.g. flags) on `base` (e.g. file).
    pub fn merge_over(self, base: PartialConfig) -> PartialConfig {
        PartialConfig {
            dataset: self.dataset.or(base.dataset),
            csv: self.csv.or(base.csv),
            column: self.column.or(base.column),
            horizon: self.horizon.or(base.horizon),
            methods: self.methods.or(base.methods),
            runs: self.runs.or(base.runs),
            seed: self.seed.or(base.seed),
            out: self.out.or(base.out),
            loss: self.loss.or(base.loss),
            grad: self.grad.or(base.grad),
            fd_step: self.fd_step.or(base.fd_step),
            gradient_epochs: self.gradient_epochs.or(base.gradient_epochs),
            cmaes_generations: self.cmaes_generations.or(base.cmaes_generations),
            hybrid_gradient_epochs: self
                .hybrid_gradient_epochs
                .or(base.hybrid_gradient_epochs),
            hybrid_evo_generations: self
                .hybrid_evo_generations
                .or(base.hybrid_evo_generations),
        }
    }

    /// Applies protocol defaults and validates into a runnable config.
    pub fn into_config(self) -> Result<ExperimentConfig> {
        let source = match self.dataset.as_deref().unwrap_or("mackey-glass") {
            "mackey-glass" => {
                if self.csv.is_some() || self.column.is_some() {
                    return Err(Error::Config(
                        "csv/column only apply to `dataset = csv`".into(),
                    ));
                }
                DatasetSource::MackeyGlass
            }
            "csv" => {
                let path = self
                    .csv
                    .ok_or_else(|| Error::Config("dataset csv requires `csv = <path>`".into()))?;
                let column = self.column.ok_or_else(|| {
                    Error::Config("dataset csv requires `column = <name>`".into())
                })?;
                DatasetSource::Csv { path, column }
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown dataset {other:?} (expected mackey-glass or csv)"
                )))
            }
        };
        let defaults = EpochBudgets::default();
        let config = ExperimentConfig {
            source,
            horizon: self.horizon.unwrap_or(4),
            methods: self.methods.unwrap_or_else(|| Method::ALL.to_vec()),
            runs: self.runs.unwrap_or(5),
            base_seed: self.seed.unwrap_or(1),
            loss_mode: self.loss.unwrap_or(LossMode::MultiStep),
            grad: self.grad.unwrap_or(GradKind::FiniteDiff),
            fd_step: self.fd_step.unwrap_or(1e-5),
            budgets: EpochBudgets {
                gradient: self.gradient_epochs.unwrap_or(defaults.gradient),
                cmaes: self.cmaes_generations.unwrap_or(defaults.cmaes),
                hybrid_gradient: self
                    .hybrid_gradient_epochs
                    .unwrap_or(defaults.hybrid_gradient),
                hybrid_evo: self.hybrid_evo_generations.unwrap_or(defaults.hybrid_evo),
            },
            out_dir: self.out.unwrap_or_else(|| PathBuf::from("results")),
        };
        config.validate()?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::load_csv;

    fn tiny_config(out: PathBuf) -> ExperimentConfig {
        ExperimentConfig {
            source: DatasetSource::MackeyGlass,
            horizon: 1,
            methods: Method::ALL.to_vec(),
            runs: 2,
            base_seed: 7,
            loss_mode: LossMode::MultiStep,
            grad: GradKind::FiniteDiff,
            fd_step: 1e-5,
            budgets: EpochBudgets {
                gradient: 2,
                cmaes: 2,
                hybrid_gradient: 1,
                hybrid_evo: 1,
            },
            out_dir: out,
        }
    }

    #[test]
    fn config_text_round_trips_through_echo() {
        let text = "\
# comment
dataset = mackey-glass
horizon = 4
methods = hybrid,gradient
runs = 5
seed = 9
loss = multi-step
grad = fd
out = somewhere
";
        let parsed = parse_config_text(text).unwrap();
        let config = parsed.into_config().unwrap();
        assert_eq!(config.horizon, 4);
        assert_eq!(config.base_seed, 9);
        // methods are sorted and deduplicated
        assert_eq!(config.methods, vec![Method::Gradient, Method::Hybrid]);
        let echoed = config_echo(&config);
        let reparsed = parse_config_text(&echoed).unwrap().into_config().unwrap();
        assert_eq!(config_echo(&reparsed), echoed);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_usage_errors() {
        assert!(parse_config_text("dataest = csv").is_err());
        assert!(parse_config_text("horizon = many").is_err());
        assert!(parse_config_text("methods = gradient,annealing").is_err());
        assert!(parse_config_text("horizon 4").is_err());
    }

    #[test]
    fn csv_dataset_requires_path_and_column() {
        let partial = parse_config_text("dataset = csv").unwrap();
        assert!(partial.into_config().is_err());
        let partial = parse_config_text("dataset = csv\ncsv = f.csv\ncolumn = v").unwrap();
        let config = partial.into_config().unwrap();
        assert_eq!(
            config.source,
            DatasetSource::Csv {
                path: PathBuf::from("f.csv"),
                column: "v".into()
            }
        );
    }

    #[test]
    fn flags_override_file_values() {
        let file = parse_config_text("horizon = 4\nseed = 1").unwrap();
        let flags = PartialConfig {
            horizon: Some(9),
            ..Default::default()
        };
        let merged = flags.merge_over(file);
        assert_eq!(merged.horizon, Some(9));
        assert_eq!(merged.seed, Some(1));
    }

    #[test]
    fn tiny_experiment_emits_consistent_files() {
        let dir = tempfile::tempdir().unwrap();
        let config = tiny_config(dir.path().join("out"));
        let run = run_experiment::<f64>(&config).unwrap();
        assert_eq!(run.outcomes.len(), 6); // 3 methods x 2 runs
        assert!(run.outcomes.iter().all(|o| o.succeeded()));
        // records per outcome match the budgets
        for o in &run.outcomes {
            let expected = match o.method {
                Method::Gradient => 2,
                Method::CmaEs => 2,
                Method::Hybrid => 2,
            };
            assert_eq!(o.records.len(), expected);
        }

        let agg = aggregate(&run.outcomes).unwrap();
        assert_eq!(agg.summaries.len(), 3);
        let files = emit_results(&run, &agg, &config).unwrap();

        // curves round-trip through the CSV loader
        let means: Vec<f64> = load_csv(&files.curves, "mean_rel_rmse").unwrap();
        assert_eq!(means.len(), agg.curves.len());
        for (loaded, point) in means.iter().zip(&agg.curves) {
            assert_eq!(*loaded, point.mean_rel_rmse);
        }

        // summary best equals the minimum over that method's curve rows
        for s in &agg.summaries {
            let min = agg
                .curves
                .iter()
                .filter(|p| p.method == s.method)
                .map(|p| p.mean_rel_rmse)
                .fold(f64::INFINITY, f64::min);
            assert_eq!(s.best_mean_rel_rmse, min);
        }

        // evaluation counters match the analytic model
        for o in &run.outcomes {
            let schedule = config.schedule_for(o.method, o.seed);
            for r in &o.records {
                assert_eq!(
                    r.circuit_evals,
                    expected_cumulative_evals(
                        run.evals_per_grad,
                        schedule.population as u64,
                        schedule.gradient_epochs,
                        r.epoch
                    )
                );
            }
        }
    }

    #[test]
    fn reruns_are_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let config_a = tiny_config(dir.path().join("a"));
        let config_b = ExperimentConfig {
            out_dir: dir.path().join("b"),
            ..config_a.clone()
        };
        for config in [&config_a, &config_b] {
            let run = run_experiment::<f64>(config).unwrap();
            let agg = aggregate(&run.outcomes).unwrap();
            emit_results(&run, &agg, config).unwrap();
        }
        for name in ["curves.csv", "summary.csv", "records.csv"] {
            let a = std::fs::read(dir.path().join("a").join(name)).unwrap();
            let b = std::fs::read(dir.path().join("b").join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between identical runs");
        }
    }

    #[test]
    fn aggregate_requires_a_successful_run_per_method() {
        let outcomes: Vec<RunOutcome<f64>> = vec![RunOutcome {
            method: Method::Gradient,
            seed: 0,
            records: vec![],
            error: Some("boom".into()),
        }];
        assert!(matches!(
            aggregate(&outcomes),
            Err(Error::NoSuccessfulRuns(_))
        ));
    }

    #[test]
    fn aggregate_statistics_by_hand() {
        let record = |value: f64, seed: u64| crate::optim::RunRecord {
            method: Method::Gradient,
            seed,
            epoch: 1,
            effort_x: 1,
            circuit_evals: 10,
            train_loss: 0.0,
            test_rel_rmse: value,
        };
        let outcomes = vec![
            RunOutcome {
                method: Method::Gradient,
                seed: 0,
                records: vec![record(1.0, 0)],
                error: None,
            },
            RunOutcome {
                method: Method::Gradient,
                seed: 1,
                records: vec![record(3.0, 1)],
                error: None,
            },
            RunOutcome {
                method: Method::Gradient,
                seed: 2,
                records: vec![],
                error: Some("failed".into()),
            },
        ];
        let agg = aggregate(&outcomes).unwrap();
        assert_eq!(agg.curves.len(), 1);
        assert_eq!(agg.curves[0].mean_rel_rmse, 2.0);
        assert!((agg.curves[0].std_rel_rmse - 2.0f64.sqrt()).abs() < 1e-15);
        assert_eq!(agg.summaries[0].failed_runs, 1);

        // single run: std is zero
        let agg = aggregate(&outcomes[..1]).unwrap();
        assert_eq!(agg.curves[0].std_rel_rmse, 0.0);
    }
}
