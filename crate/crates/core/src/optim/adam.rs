//! Adam with bias correction, at the protocol's settings: learning rate
//! 0.03, everything else at the usual defaults (beta1 0.9, beta2 0.999,
//! epsilon 1e-8, epsilon added outside the square root).

use crate::error::{Error, Result};
use crate::scalar::{real, Scalar};

#[derive(Clone, Debug)]
pub struct AdamState<T> {
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub epsilon: T,
    m: Vec<T>,
    v: Vec<T>,
    t: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(dim: usize) -> Self {
        Self {
            lr: real(0.03),
            beta1: real(0.9),
            beta2: real(0.999),
            epsilon: real(1e-8),
            m: vec![T::zero(); dim],
            v: vec![T::zero(); dim],
            t: 0,
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.t
    }

    /// One bias-corrected update. Rejects non-finite gradients so a poisoned
    /// run aborts with a diagnostic instead of silently corrupting theta.
    pub fn step(&mut self, theta: &mut [T], grad: &[T]) -> Result<()> {
        if theta.len() != self.m.len() || grad.len() != self.m.len() {
            return Err(Error::LengthMismatch {
                left: theta.len(),
                right: grad.len(),
            });
        }
        if let Some(bad) = grad.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient(bad));
        }
        self.t += 1;
        let t = self.t as i32;
        let bc1 = T::one() - self.beta1.powi(t);
        let bc2 = T::one() - self.beta2.powi(t);
        for i in 0..theta.len() {
            self.m[i] = self.beta1 * self.m[i] + (T::one() - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (T::one() - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            theta[i] = theta[i] - self.lr * m_hat / (v_hat.sqrt() + self.epsilon);
        }
        Ok(())
    }
}
