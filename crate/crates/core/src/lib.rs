//! Quantum recurrent time-series forecasting with three training strategies.
//!
//! The crate provides:
//!
//! - [`sim`]: a dense density-matrix simulator with the measure-and-reset
//!   channel the recurrent architecture needs;
//! - [`qrnn`]: the recurrent model (angle encoding, 24-parameter recurring
//!   ansatz over 3 I/O + 3 memory qubits, teacher-forced runs, iterative
//!   forecasting);
//! - [`objective`]: losses, the relative-RMSE metric, and two gradient
//!   estimators (parameter-shift and central finite differences);
//! - [`optim`]: Adam, a full CMA-ES, and the hybrid warm-start schedule;
//! - [`data`]: Mackey-Glass generation, CSV ingestion, normalization, and
//!   the 80-20 protocol split;
//! - [`bench`]: experiment orchestration and CSV emission for the benchmark
//!   CLI.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below pin the default double-precision instantiation.

pub mod bench;
pub mod data;
pub mod error;
pub mod linalg;
pub mod objective;
pub mod optim;
pub mod qrnn;
pub mod scalar;
pub mod sim;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type DensityMatrix64 = sim::DensityMatrix<f64>;
pub type Gate64 = sim::Gate<f64>;
pub type QrnnConfig64 = qrnn::QrnnConfig<f64>;
pub type ParamVector64 = qrnn::ParamVector<f64>;
pub type Dataset64 = data::TimeSeriesDataset<f64>;
pub type AdamState64 = optim::AdamState<f64>;
pub type CmaState64 = optim::CmaState<f64>;
pub type RunRecord64 = optim::RunRecord<f64>;

pub type DensityMatrix32 = sim::DensityMatrix<f32>;
pub type Gate32 = sim::Gate<f32>;
pub type QrnnConfig32 = qrnn::QrnnConfig<f32>;
pub type ParamVector32 = qrnn::ParamVector<f32>;
pub type Dataset32 = data::TimeSeriesDataset<f32>;
