//! Covariance matrix adaptation evolution strategy (CMA-ES), minimizing,
//! with weighted recombination, cumulative step-size adaptation, and
//! rank-one plus rank-mu covariance updates at the standard
//! dimension-dependent settings.
//!
//! The state is deterministic: all randomness flows through the owned,
//! seeded RNG, draws happen only inside [`CmaState::ask`] in a fixed order,
//! and the eigendecomposition is refreshed eagerly after every update (at
//! dimension 24 it is far from the bottleneck).

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::linalg::jacobi_eigh;
use crate::scalar::{real, Scalar};

/// Population size used by the experimental protocol.
pub const DEFAULT_POPULATION: usize = 10;
/// Initial step size used by the experimental protocol.
pub const DEFAULT_SIGMA0: f64 = 0.5;

const EIGENVALUE_FLOOR: f64 = 1e-14;

/// Orders fitnesses ascending with NaN ranked strictly worst; stable sorts
/// then break ties by candidate index.
pub(crate) fn fitness_cmp<T: Scalar>(a: T, b: T) -> Ordering {
    match (a.is_nan(), b.is_nan()) {
        (true, true) => Ordering::Equal,
        (true, false) => Ordering::Greater,
        (false, true) => Ordering::Less,
        (false, false) => a.partial_cmp(&b).expect("both finite or comparable"),
    }
}

#[derive(Clone, Debug)]
pub struct CmaState<T> {
    dim: usize,
    lambda: usize,
    mu: usize,
    mean: Vec<T>,
    sigma: T,
    cov: Vec<T>,
    eig_vectors: Vec<T>,
    eig_sqrt: Vec<T>,
    path_sigma: Vec<T>,
    path_c: Vec<T>,
    weights: Vec<T>,
    mu_eff: T,
    c_sigma: T,
    d_sigma: T,
    c_c: T,
    c_1: T,
    c_mu: T,
    chi_n: T,
    generation: u64,
    rng: ChaCha8Rng,
    best: Option<(T, Vec<T>)>,
    floor_events: u64,
}

impl<T: Scalar> CmaState<T> {
    /// Fresh state around an explicit mean (used by the hybrid warm start).
    pub fn new(mean: Vec<T>, sigma0: T, lambda: usize, rng: ChaCha8Rng) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 {
            return Err(Error::Config("CMA-ES needs at least one dimension".into()));
        }
        if lambda < 2 {
            return Err(Error::Config("population size must be at least 2".into()));
        }
        if !(sigma0 > T::zero()) || !sigma0.is_finite() {
            return Err(Error::Config("initial step size must be positive".into()));
        }
        let mu = lambda / 2;
        let n = real::<T>(dim as f64);

        // w_i proportional to ln(mu + 1/2) - ln(i), normalized over the mu best
        let raw: Vec<T> = (1..=mu)
            .map(|i| (real::<T>(mu as f64) + real::<T>(0.5)).ln() - real::<T>(i as f64).ln())
            .collect();
        let sum = raw.iter().fold(T::zero(), |s, &w| s + w);
        let weights: Vec<T> = raw.iter().map(|&w| w / sum).collect();
        let mu_eff = weights
            .iter()
            .fold(T::zero(), |s, &w| s + w * w)
            .recip();

        let two = real::<T>(2.0);
        let c_sigma = (mu_eff + two) / (n + mu_eff + real(5.0));
        let d_sigma = T::one()
            + two * T::zero().max(((mu_eff - T::one()) / (n + T::one())).sqrt() - T::one())
            + c_sigma;
        let c_c = (real::<T>(4.0) + mu_eff / n) / (n + real::<T>(4.0) + two * mu_eff / n);
        let c_1 = two / ((n + real::<T>(1.3)).powi(2) + mu_eff);
        let c_mu = (T::one() - c_1).min(
            two * (mu_eff - two + mu_eff.recip()) / ((n + two).powi(2) + mu_eff),
        );
        let chi_n = n.sqrt()
            * (T::one() - (real::<T>(4.0) * n).recip()
                + (real::<T>(21.0) * n * n).recip());

        let mut cov = vec![T::zero(); dim * dim];
        let mut eig_vectors = vec![T::zero(); dim * dim];
        for i in 0..dim {
            cov[i * dim + i] = T::one();
            eig_vectors[i * dim + i] = T::one();
        }

        Ok(Self {
            dim,
            lambda,
            mu,
            mean,
            sigma: sigma0,
            cov,
            eig_vectors,
            eig_sqrt: vec![T::one(); dim],
            path_sigma: vec![T::zero(); dim],
            path_c: vec![T::zero(); dim],
            weights,
            mu_eff,
            c_sigma,
            d_sigma,
            c_c,
            c_1,
            c_mu,
            chi_n,
            generation: 0,
            rng,
            best: None,
            floor_events: 0,
        })
    }

    /// Protocol initialization: mean drawn uniformly from [-pi, pi)^dim.
    pub fn init_random_mean(
        dim: usize,
        sigma0: T,
        lambda: usize,
        mut rng: ChaCha8Rng,
    ) -> Result<Self> {
        let mean = (0..dim)
            .map(|_| real::<T>(rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI)))
            .collect();
        Self::new(mean, sigma0, lambda, rng)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambda(&self) -> usize {
        self.lambda
    }

    pub fn mu(&self) -> usize {
        self.mu
    }

    pub fn mean(&self) -> &[T] {
        &self.mean
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn covariance(&self) -> &[T] {
        &self.cov
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn mu_eff(&self) -> T {
        self.mu_eff
    }

    pub fn strategy_constants(&self) -> (T, T, T, T, T, T) {
        (
            self.c_sigma,
            self.d_sigma,
            self.c_c,
            self.c_1,
            self.c_mu,
            self.chi_n,
        )
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn best_fitness(&self) -> Option<T> {
        self.best.as_ref().map(|(f, _)| *f)
    }

    pub fn best_candidate(&self) -> Option<&[T]> {
        self.best.as_ref().map(|(_, x)| x.as_slice())
    }

    /// Times the eigenvalue floor had to re-condition the covariance.
    pub fn floor_events(&self) -> u64 {
        self.floor_events
    }

    /// Samples the generation's candidates: x_i = mean + sigma * B D z_i.
    /// Draw order is fixed (candidate-major), so evaluating candidates in
    /// parallel cannot perturb the stream.
    pub fn ask(&mut self) -> Vec<Vec<T>> {
        let mut out = Vec::with_capacity(self.lambda);
        for _ in 0..self.lambda {
            let z: Vec<T> = (0..self.dim)
                .map(|_| {
                    let draw: f64 = StandardNormal.sample(&mut self.rng);
                    real(draw)
                })
                .collect();
            let mut x = self.mean.clone();
            for row in 0..self.dim {
                let mut acc = T::zero();
                for k in 0..self.dim {
                    acc = acc + self.eig_vectors[row * self.dim + k] * self.eig_sqrt[k] * z[k];
                }
                x[row] = x[row] + self.sigma * acc;
            }
            out.push(x);
        }
        out
    }

    /// Rank-based distribution update. Lower fitness is better; NaN is
    /// ranked worst (with a warning) so a poisoned candidate cannot steer
    /// the distribution.
    pub fn tell(&mut self, candidates: &[Vec<T>], fitnesses: &[T]) -> Result<()> {
        if candidates.len() != self.lambda || fitnesses.len() != self.lambda {
            return Err(Error::LengthMismatch {
                left: candidates.len(),
                right: fitnesses.len(),
            });
        }
        for x in candidates {
            if x.len() != self.dim {
                return Err(Error::LengthMismatch {
                    left: x.len(),
                    right: self.dim,
                });
            }
        }
        if fitnesses.iter().any(|f| f.is_nan()) {
            log::warn!("CMA-ES received NaN fitness; ranking those candidates worst");
        }

        let mut order: Vec<usize> = (0..self.lambda).collect();
        order.sort_by(|&a, &b| fitness_cmp(fitnesses[a], fitnesses[b]));

        let dim = self.dim;
        let old_mean = self.mean.clone();

        // y_i = (x_i - m) / sigma for the mu best, and their weighted sum
        let selected: Vec<Vec<T>> = order[..self.mu]
            .iter()
            .map(|&idx| {
                (0..dim)
                    .map(|r| (candidates[idx][r] - old_mean[r]) / self.sigma)
                    .collect()
            })
            .collect();
        let mut y_w = vec![T::zero(); dim];
        for (w, y) in self.weights.iter().zip(&selected) {
            for r in 0..dim {
                y_w[r] = y_w[r] + *w * y[r];
            }
        }

        // p_sigma <- (1-c_s) p_sigma + sqrt(c_s (2-c_s) mu_eff) C^{-1/2} y_w
        let two = real::<T>(2.0);
        let mut c_inv_half_yw = vec![T::zero(); dim];
        {
            // B^T y_w, scale by 1/sqrt(eig), then B
            let mut tmp = vec![T::zero(); dim];
            for k in 0..dim {
                let mut acc = T::zero();
                for r in 0..dim {
                    acc = acc + self.eig_vectors[r * dim + k] * y_w[r];
                }
                tmp[k] = acc / self.eig_sqrt[k];
            }
            for r in 0..dim {
                let mut acc = T::zero();
                for k in 0..dim {
                    acc = acc + self.eig_vectors[r * dim + k] * tmp[k];
                }
                c_inv_half_yw[r] = acc;
            }
        }
        let cs_norm = (self.c_sigma * (two - self.c_sigma) * self.mu_eff).sqrt();
        for r in 0..dim {
            self.path_sigma[r] = (T::one() - self.c_sigma) * self.path_sigma[r]
                + cs_norm * c_inv_half_yw[r];
        }

        let p_sigma_norm = self
            .path_sigma
            .iter()
            .fold(T::zero(), |s, &x| s + x * x)
            .sqrt();
        let decay = (T::one() - self.c_sigma).powi(2 * (self.generation as i32 + 1));
        let h_sigma = if p_sigma_norm / (T::one() - decay).sqrt() / self.chi_n
            < real::<T>(1.4) + two / (real::<T>(dim as f64) + T::one())
        {
            T::one()
        } else {
            T::zero()
        };

        let cc_norm = (self.c_c * (two - self.c_c) * self.mu_eff).sqrt();
        for r in 0..dim {
            self.path_c[r] =
                (T::one() - self.c_c) * self.path_c[r] + h_sigma * cc_norm * y_w[r];
        }

        // C <- (1 - c1 - cmu + (1-h) c1 cc (2-cc)) C + c1 pc pc^T + cmu sum w y y^T
        let base = T::one() - self.c_1 - self.c_mu
            + (T::one() - h_sigma) * self.c_1 * self.c_c * (two - self.c_c);
        for r in 0..dim {
            for c in 0..dim {
                let mut v = base * self.cov[r * dim + c]
                    + self.c_1 * self.path_c[r] * self.path_c[c];
                for (w, y) in self.weights.iter().zip(&selected) {
                    v = v + self.c_mu * *w * y[r] * y[c];
                }
                self.cov[r * dim + c] = v;
            }
        }

        for r in 0..dim {
            self.mean[r] = old_mean[r] + self.sigma * y_w[r];
        }
        self.sigma = self.sigma
            * ((self.c_sigma / self.d_sigma) * (p_sigma_norm / self.chi_n - T::one())).exp();

        self.generation += 1;
        self.refresh_eigensystem();

        let gen_best = order[0];
        if !fitnesses[gen_best].is_nan() {
            let better = match &self.best {
                Some((f, _)) => fitness_cmp(fitnesses[gen_best], *f) == Ordering::Less,
                None => true,
            };
            if better {
                self.best = Some((fitnesses[gen_best], candidates[gen_best].clone()));
            }
        }
        Ok(())
    }

    fn refresh_eigensystem(&mut self) {
        let dim = self.dim;
        for r in 0..dim {
            for c in (r + 1)..dim {
                let avg = (self.cov[r * dim + c] + self.cov[c * dim + r]) * real::<T>(0.5);
                self.cov[r * dim + c] = avg;
                self.cov[c * dim + r] = avg;
            }
        }
        let (mut values, vectors) = jacobi_eigh(&self.cov, dim);
        let floor = real::<T>(EIGENVALUE_FLOOR);
        let mut floored = false;
        for v in &mut values {
            if *v < floor {
                *v = floor;
                floored = true;
            }
        }
        if floored {
            self.floor_events += 1;
            log::warn!(
                "CMA-ES covariance needed re-conditioning (eigenvalue floor {EIGENVALUE_FLOOR})"
            );
            // write the conditioned matrix back so state and factors agree
            for r in 0..dim {
                for c in 0..dim {
                    let mut acc = T::zero();
                    for k in 0..dim {
                        acc = acc + vectors[r * dim + k] * values[k] * vectors[c * dim + k];
                    }
                    self.cov[r * dim + c] = acc;
                }
            }
        }
        self.eig_vectors = vectors;
        self.eig_sqrt = values.iter().map(|v| v.sqrt()).collect();
    }
}
