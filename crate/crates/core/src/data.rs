//! Dataset acquisition and preparation: the Mackey-Glass generator, CSV
//! ingestion for user-supplied series, min-max normalization, and the
//! 100-point 80-20 protocol split.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::ops::Range;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::{real, Scalar};

/// Parameters of the delay differential equation
/// `dx/dt = beta x(t) + alpha x(t - tau) / (1 + x(t - tau)^10)`.
///
/// Integration runs fourth-order Runge-Kutta on a fixed grid of width `dt`,
/// with constant pre-history `x(t) = x0` for `t <= 0` and the delayed term
/// read from the stored trajectory (linear interpolation at half steps).
/// Samples are taken every `stride` time units.
#[derive(Clone, Copy, Debug)]
pub struct MackeyGlassParams<T> {
    pub alpha: T,
    pub beta: T,
    pub tau: T,
    pub x0: T,
    pub dt: T,
    pub stride: T,
}

impl<T: Scalar> Default for MackeyGlassParams<T> {
    fn default() -> Self {
        Self {
            alpha: real(0.2),
            beta: real(-0.1),
            tau: real(17.0),
            x0: real(1.2),
            dt: real(0.1),
            stride: real(1.0),
        }
    }
}

impl<T: Scalar> MackeyGlassParams<T> {
    fn grid_steps(ratio: T, what: &str) -> Result<usize> {
        let steps = ratio.round();
        if (ratio - steps).abs() > real(1e-9) || steps < T::one() {
            return Err(Error::MackeyGlassParams(format!(
                "{what} must be a positive whole number of dt steps"
            )));
        }
        Ok(steps.to_usize().expect("validated step count fits usize"))
    }

    fn validate(&self) -> Result<(usize, usize)> {
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return Err(Error::MackeyGlassParams("dt must be positive".into()));
        }
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("tau", self.tau),
            ("x0", self.x0),
            ("stride", self.stride),
        ] {
            if !v.is_finite() {
                return Err(Error::MackeyGlassParams(format!("{name} must be finite")));
            }
        }
        let delay = Self::grid_steps(self.tau / self.dt, "tau")?;
        let stride = Self::grid_steps(self.stride / self.dt, "stride")?;
        Ok((delay, stride))
    }
}

/// Right-hand side of the Mackey-Glass equation.
pub fn mackey_glass_derivative<T: Scalar>(params: &MackeyGlassParams<T>, x: T, delayed: T) -> T {
    params.beta * x + params.alpha * delayed / (T::one() + delayed.powi(10))
}

/// Generates `n_points` samples of the Mackey-Glass series.
pub fn mackey_glass<T: Scalar>(params: &MackeyGlassParams<T>, n_points: usize) -> Result<Vec<T>> {
    let (delay_steps, stride_steps) = params.validate()?;
    if n_points == 0 {
        return Err(Error::MackeyGlassParams(
            "need at least one sample point".into(),
        ));
    }
    let total_steps = (n_points - 1) * stride_steps;
    let mut grid = Vec::with_capacity(total_steps + 1);
    grid.push(params.x0);

    let half = real::<T>(0.5);
    let sixth = real::<T>(1.0 / 6.0);
    let two = real::<T>(2.0);
    let delayed_at = |grid: &[T], idx: isize| -> T {
        if idx <= 0 {
            params.x0
        } else {
            grid[idx as usize]
        }
    };

    for k in 0..total_steps {
        let x = grid[k];
        let ik = k as isize;
        let id = delay_steps as isize;
        let d0 = delayed_at(&grid, ik - id);
        let d1 = delayed_at(&grid, ik + 1 - id);
        let d_half = (d0 + d1) * half;

        let k1 = mackey_glass_derivative(params, x, d0);
        let k2 = mackey_glass_derivative(params, x + params.dt * half * k1, d_half);
        let k3 = mackey_glass_derivative(params, x + params.dt * half * k2, d_half);
        let k4 = mackey_glass_derivative(params, x + params.dt * k3, d1);
        grid.push(x + params.dt * sixth * (k1 + two * k2 + two * k3 + k4));
    }

    Ok((0..n_points).map(|i| grid[i * stride_steps]).collect())
}

/// Min-max scaler fitted on the train split.
#[derive(Clone, Copy, Debug)]
pub struct Scaler<T> {
    pub min: T,
    pub max: T,
}

impl<T: Scalar> Scaler<T> {
    pub fn normalize(&self, x: T) -> T {
        (x - self.min) / (self.max - self.min)
    }

    pub fn denormalize(&self, y: T) -> T {
        self.min + y * (self.max - self.min)
    }
}

/// Min-max normalization with statistics taken from `train` only, applied to
/// the whole series. Points outside the train range map outside [0, 1]; they
/// are clamped (and counted) at encoding time.
pub fn normalize<T: Scalar>(series: &[T], train: Range<usize>) -> Result<(Vec<T>, Scaler<T>)> {
    let split = series
        .get(train.clone())
        .ok_or(Error::SeriesTooShort {
            got: series.len(),
            required: train.end,
        })?;
    if split.is_empty() {
        return Err(Error::EmptySequence);
    }
    let mut min = split[0];
    let mut max = split[0];
    for &x in split {
        min = min.min(x);
        max = max.max(x);
    }
    if !(max > min) {
        return Err(Error::ConstantTrainSplit);
    }
    let scaler = Scaler { min, max };
    Ok((series.iter().map(|&x| scaler.normalize(x)).collect(), scaler))
}

/// A series prepared for the experimental protocol.
#[derive(Clone, Debug)]
pub struct TimeSeriesDataset<T> {
    pub name: String,
    raw: Vec<T>,
    normalized: Vec<T>,
    scaler: Scaler<T>,
    train: Range<usize>,
    test: Range<usize>,
}

impl<T: Scalar> TimeSeriesDataset<T> {
    pub fn raw(&self) -> &[T] {
        &self.raw
    }

    pub fn normalized(&self) -> &[T] {
        &self.normalized
    }

    pub fn scaler(&self) -> Scaler<T> {
        self.scaler
    }

    pub fn train_range(&self) -> Range<usize> {
        self.train.clone()
    }

    pub fn test_range(&self) -> Range<usize> {
        self.test.clone()
    }

    pub fn train_norm(&self) -> &[T] {
        &self.normalized[self.train.clone()]
    }

    pub fn test_norm(&self) -> &[T] {
        &self.normalized[self.test.clone()]
    }

    pub fn train_raw(&self) -> &[T] {
        &self.raw[self.train.clone()]
    }

    pub fn test_raw(&self) -> &[T] {
        &self.raw[self.test.clone()]
    }

    /// Normalized points outside [0, 1]; each will trip the encode clamp.
    pub fn out_of_range_count(&self) -> usize {
        self.normalized
            .iter()
            .filter(|&&x| x < T::zero() || x > T::one())
            .count()
    }
}

/// Protocol split: keep the first 100 points, train on 0..80, test on 80..100.
/// The scaler is fitted on the train split only.
pub fn split_80_20<T: Scalar>(series: &[T], name: &str) -> Result<TimeSeriesDataset<T>> {
    const PROTOCOL_POINTS: usize = 100;
    const TRAIN_POINTS: usize = 80;
    if series.len() < PROTOCOL_POINTS {
        return Err(Error::SeriesTooShort {
            got: series.len(),
            required: PROTOCOL_POINTS,
        });
    }
    if let Some(bad) = series[..PROTOCOL_POINTS].iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteParam(bad));
    }
    let raw: Vec<T> = series[..PROTOCOL_POINTS].to_vec();
    let train = 0..TRAIN_POINTS;
    let test = TRAIN_POINTS..PROTOCOL_POINTS;
    let (normalized, scaler) = normalize(&raw, train.clone())?;
    Ok(TimeSeriesDataset {
        name: name.to_string(),
        raw,
        normalized,
        scaler,
        train,
        test,
    })
}

/// Loads one numeric column from a headed CSV file.
///
/// Non-numeric or non-finite cells fail with their 1-based data-row number.
pub fn load_csv<T: Scalar>(path: &Path, column: &str) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(file));
    let headers = reader.headers()?.clone();
    let idx = headers
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| Error::MissingColumn(column.to_string()))?;

    let mut values = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let cell = record.get(idx).unwrap_or("");
        let parsed: f64 = cell.parse().map_err(|_| Error::BadCell {
            value: cell.to_string(),
            column: column.to_string(),
            row,
        })?;
        if !parsed.is_finite() {
            return Err(Error::BadCell {
                value: cell.to_string(),
                column: column.to_string(),
                row,
            });
        }
        values.push(real(parsed));
    }
    if values.len() < 2 {
        return Err(Error::SeriesTooShort {
            got: values.len(),
            required: 2,
        });
    }
    Ok(values)
}

/// Writes a `t,value` CSV (shortest round-trip float formatting, so reading
/// the file back reproduces the values exactly).
pub fn write_timed_csv<T: Scalar>(path: &Path, times: &[T], values: &[T]) -> Result<()> {
    if times.len() != values.len() {
        return Err(Error::LengthMismatch {
            left: times.len(),
            right: values.len(),
        });
    }
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut out = BufWriter::new(file);
    let write = |out: &mut BufWriter<File>, line: String| -> Result<()> {
        writeln!(out, "{line}").map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })
    };
    write(&mut out, "t,value".to_string())?;
    for (t, v) in times.iter().zip(values) {
        write(&mut out, format!("{t},{v}"))?;
    }
    out.flush().map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn default_params() -> MackeyGlassParams<f64> {
        MackeyGlassParams::default()
    }

    #[test]
    fn equilibrium_start_stays_put() {
        let params = MackeyGlassParams {
            x0: 1.0,
            ..default_params()
        };
        let series = mackey_glass(&params, 100).unwrap();
        for &x in &series {
            assert!((x - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn initial_derivative_matches_hand_evaluation() {
        let params = default_params();
        let d = mackey_glass_derivative(&params, 1.2, 1.2);
        assert_abs_diff_eq!(d, -0.08662836540387166, epsilon = 1e-14);
        assert_abs_diff_eq!(d, -0.0866, epsilon = 1e-4);
    }

    #[test]
    fn series_is_bounded_for_default_parameters() {
        let series = mackey_glass(&default_params(), 200).unwrap();
        assert!(series.iter().all(|&x| x > 0.0 && x < 2.0));
    }

    #[test]
    fn refinement_oracle_agrees_at_one_thousandth() {
        let coarse = mackey_glass(&default_params(), 100).unwrap();
        let fine_params = MackeyGlassParams {
            dt: 0.01,
            ..default_params()
        };
        let fine = mackey_glass(&fine_params, 100).unwrap();
        let worst = coarse
            .iter()
            .zip(&fine)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(worst < 1e-3, "refinement disagreement {worst}");
    }

    #[test]
    fn generation_is_deterministic() {
        let a = mackey_glass(&default_params(), 150).unwrap();
        let b = mackey_glass(&default_params(), 150).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(mackey_glass(&MackeyGlassParams { dt: 0.0, ..default_params() }, 10).is_err());
        assert!(mackey_glass(
            &MackeyGlassParams {
                tau: 17.05,
                ..default_params()
            },
            10
        )
        .is_err());
        assert!(mackey_glass(
            &MackeyGlassParams {
                stride: 0.25,
                ..default_params()
            },
            10
        )
        .is_err());
        assert!(mackey_glass(&default_params(), 0).is_err());
    }

    #[test]
    fn normalize_maps_train_split_onto_unit_interval() {
        let (norm, scaler) = normalize(&[2.0, 4.0, 6.0], 0..3).unwrap();
        assert_eq!(norm, vec![0.0, 0.5, 1.0]);
        assert_eq!(scaler.min, 2.0);
        assert_eq!(scaler.max, 6.0);
    }

    #[test]
    fn normalize_rejects_constant_train_split() {
        assert!(matches!(
            normalize(&[3.0, 3.0, 3.0], 0..3),
            Err(Error::ConstantTrainSplit)
        ));
    }

    #[test]
    fn split_protocol_sizes_and_truncation() {
        let series: Vec<f64> = (0..150).map(|i| i as f64).collect();
        let ds = split_80_20(&series, "ramp").unwrap();
        assert_eq!(ds.train_range(), 0..80);
        assert_eq!(ds.test_range(), 80..100);
        assert_eq!(ds.raw().len(), 100);
        assert_eq!(ds.train_norm().len(), 80);
        assert_eq!(ds.test_norm().len(), 20);
        // ramp: test points exceed the train max, so they normalize above 1
        assert_eq!(ds.out_of_range_count(), 20);
        assert!(ds.test_norm().iter().all(|&x| x > 1.0));

        let short: Vec<f64> = (0..90).map(|i| i as f64).collect();
        assert!(matches!(
            split_80_20(&short, "short"),
            Err(Error::SeriesTooShort {
                got: 90,
                required: 100
            })
        ));
    }

    #[test]
    fn load_csv_reads_named_column() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("series.csv");
        std::fs::write(&path, "a\n1\n2\n3\n").unwrap();
        let values: Vec<f64> = load_csv(&path, "a").unwrap();
        assert_eq!(values, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn load_csv_errors_name_the_offending_row() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "a,b\n1,x\n2,y\noops,z\n").unwrap();
        match load_csv::<f64>(&path, "a") {
            Err(Error::BadCell { row, column, value }) => {
                assert_eq!(row, 3);
                assert_eq!(column, "a");
                assert_eq!(value, "oops");
            }
            other => panic!("expected BadCell, got {other:?}"),
        }
        assert!(matches!(
            load_csv::<f64>(&path, "missing"),
            Err(Error::MissingColumn(_))
        ));
    }

    #[test]
    fn load_csv_requires_two_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tiny.csv");
        std::fs::write(&path, "v\n1\n").unwrap();
        assert!(matches!(
            load_csv::<f64>(&path, "v"),
            Err(Error::SeriesTooShort { got: 1, required: 2 })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 32, failure_persistence: None, .. ProptestConfig::default() })]

        #[test]
        fn csv_round_trip_is_exact(values in proptest::collection::vec(-1e6f64..1e6, 2..50)) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("roundtrip.csv");
            let times: Vec<f64> = (0..values.len()).map(|i| i as f64).collect();
            write_timed_csv(&path, &times, &values).unwrap();
            let back: Vec<f64> = load_csv(&path, "value").unwrap();
            prop_assert_eq!(back, values);
        }

        #[test]
        fn scaler_round_trip(raw in proptest::collection::vec(-1e3f64..1e3, 3..40)) {
            prop_assume!(raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                > raw.iter().cloned().fold(f64::INFINITY, f64::min));
            let (norm, scaler) = normalize(&raw, 0..raw.len()).unwrap();
            for (&x, &y) in raw.iter().zip(&norm) {
                prop_assert!((scaler.denormalize(y) - x).abs() < 1e-9);
            }
        }
    }
}
