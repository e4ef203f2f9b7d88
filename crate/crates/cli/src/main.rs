//! Benchmark CLI: `run` executes the three-strategy forecasting protocol
//! and writes CSV results; `gen-mg` emits a Mackey-Glass series.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qrnn_core::bench::{
    self, aggregate, emit_results, parse_config_text, parse_methods, run_experiment,
    GradKind, PartialConfig,
};
use qrnn_core::data::{mackey_glass, write_timed_csv, MackeyGlassParams};
use qrnn_core::Error;

#[derive(Parser)]
#[command(
    name = "qrnn-bench",
    version,
    about = "Quantum recurrent time-series forecasting benchmark"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the benchmark protocol and write curves/summary/records CSVs
    Run(RunArgs),
    /// Generate a Mackey-Glass series and write it as CSV
    GenMg(GenMgArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Flat key-value config file; command-line flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Data source: mackey-glass or csv
    #[arg(long)]
    dataset: Option<String>,
    /// CSV file to load when --dataset csv
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Column name to read from the CSV
    #[arg(long)]
    column: Option<String>,
    /// Forecast horizon (timesteps into the future)
    #[arg(long)]
    horizon: Option<usize>,
    /// Comma-separated subset of gradient,cmaes,hybrid
    #[arg(long)]
    methods: Option<String>,
    /// Independent runs per method (seeds base..base+runs-1)
    #[arg(long)]
    runs: Option<usize>,
    /// Base seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Training loss: one-step or multi-step
    #[arg(long)]
    loss: Option<String>,
    /// Gradient estimator: fd (fast) or shift (exact parameter shift)
    #[arg(long)]
    grad: Option<String>,
}

#[derive(Args)]
struct GenMgArgs {
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
    /// Number of samples
    #[arg(long, default_value_t = 200)]
    points: usize,
    /// Integration step
    #[arg(long)]
    dt: Option<f64>,
    /// Sampling stride in time units
    #[arg(long)]
    stride: Option<f64>,
    /// Initial condition
    #[arg(long)]
    x0: Option<f64>,
    /// Delay
    #[arg(long)]
    tau: Option<f64>,
}

fn exit_code_for(error: &Error) -> u8 {
    match error {
        Error::Config(_) | Error::MackeyGlassParams(_) => 1,
        _ => 2,
    }
}

fn fail(error: &Error) -> ExitCode {
    eprintln!("error: {error}");
    ExitCode::from(exit_code_for(error))
}

fn run(args: RunArgs) -> ExitCode {
    let from_file = match &args.config {
        Some(path) => {
            let text = match std::fs::read_to_string(path) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: cannot read config {}: {e}", path.display());
                    return ExitCode::from(1);
                }
            };
            match parse_config_text(&text) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            }
        }
        None => PartialConfig::default(),
    };

    let methods = match args.methods.as_deref().map(parse_methods).transpose() {
        Ok(m) => m,
        Err(e) => return fail(&e),
    };
    let loss = match args.loss.as_deref().map(bench::parse_loss_mode).transpose() {
        Ok(l) => l,
        Err(e) => return fail(&e),
    };
    let grad = match args.grad.as_deref().map(GradKind::parse).transpose() {
        Ok(g) => g,
        Err(e) => return fail(&e),
    };

    let from_flags = PartialConfig {
        dataset: args.dataset,
        csv: args.csv,
        column: args.column,
        horizon: args.horizon,
        methods,
        runs: args.runs,
        seed: args.seed,
        out: args.out,
        loss,
        grad,
        ..Default::default()
    };

    let config = match from_flags.merge_over(from_file).into_config() {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };

    let run = match run_experiment::<f64>(&config) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    let aggregates = match aggregate(&run.outcomes) {
        Ok(a) => a,
        Err(e) => return fail(&e),
    };
    let files = match emit_results(&run, &aggregates, &config) {
        Ok(f) => f,
        Err(e) => return fail(&e),
    };

    println!(
        "dataset {} | horizon {} | {} runs | loss {} | grad {}",
        run.dataset_name,
        config.horizon,
        config.runs,
        bench::loss_mode_str(config.loss_mode),
        config.grad.as_str()
    );
    println!("{:<10} {:>20} {:>10} {:>8}", "method", "best mean rel-RMSE", "at epoch", "failed");
    for s in &aggregates.summaries {
        println!(
            "{:<10} {:>20.6} {:>10} {:>8}",
            s.method.as_str(),
            s.best_mean_rel_rmse,
            s.best_epoch,
            s.failed_runs
        );
    }
    for outcome in &run.outcomes {
        if let Some(error) = &outcome.error {
            eprintln!(
                "warning: {} run with seed {} failed: {error}",
                outcome.method, outcome.seed
            );
        }
    }
    println!(
        "wrote {}, {}, {}, {}",
        files.curves.display(),
        files.summary.display(),
        files.records.display(),
        files.config_echo.display()
    );
    ExitCode::SUCCESS
}

fn gen_mg(args: GenMgArgs) -> ExitCode {
    let defaults = MackeyGlassParams::<f64>::default();
    let params = MackeyGlassParams {
        dt: args.dt.unwrap_or(defaults.dt),
        stride: args.stride.unwrap_or(defaults.stride),
        x0: args.x0.unwrap_or(defaults.x0),
        tau: args.tau.unwrap_or(defaults.tau),
        ..defaults
    };
    let series = match mackey_glass(&params, args.points) {
        Ok(s) => s,
        Err(e) => return fail(&e),
    };
    let times: Vec<f64> = (0..series.len()).map(|i| i as f64 * params.stride).collect();
    match write_timed_csv(&args.out, &times, &series) {
        Ok(()) => {
            println!("wrote {} samples to {}", series.len(), args.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Run(args) => run(args),
        Command::GenMg(args) => gen_mg(args),
    }
}
