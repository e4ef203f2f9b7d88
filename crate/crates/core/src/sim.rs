//! Dense density-matrix simulator for small registers.
//!
//! The state is a 2^n x 2^n complex matrix stored row-major. Basis ordering:
//! **qubit 0 is the most significant bit of the basis index**, so for a
//! 2-qubit register the basis is |q0 q1> = |00>, |01>, |10>, |11> at indices
//! 0..4 and flipping qubit 0 of |00> lands on index 2.
//!
//! Gates act by unitary conjugation with axis-indexed kernels (no 64x64
//! matrix products); `reset_qubits` implements the measure-and-discard
//! channel exactly as partial trace plus a fresh |0><0| factor.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::{real, Scalar};

/// Hard cap on register size; the dense representation is 4^n complex values.
pub const MAX_QUBITS: usize = 10;

/// A parameterized unitary gate.
///
/// Angles are radians. `Crx` lists the control qubit first.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate<T> {
    Rx { target: usize, theta: T },
    Ry { target: usize, theta: T },
    Rz { target: usize, theta: T },
    U3 { target: usize, theta: T, phi: T, lambda: T },
    Crx { control: usize, target: usize, theta: T },
}

/// Unitary matrix of a gate, sized by its arity.
#[derive(Clone, Debug)]
pub enum GateMatrix<T> {
    /// 2x2, row-major.
    Single([Complex<T>; 4]),
    /// 4x4, row-major, basis |control target>.
    Two([Complex<T>; 16]),
}

impl<T: Scalar> Gate<T> {
    /// The unitary matrix of this gate.
    pub fn matrix(&self) -> GateMatrix<T> {
        let half = real::<T>(0.5);
        let zero = Complex::new(T::zero(), T::zero());
        let one = Complex::new(T::one(), T::zero());
        match *self {
            Gate::Rx { theta, .. } => {
                let (s, c) = (theta * half).sin_cos();
                let mis = Complex::new(T::zero(), -s);
                GateMatrix::Single([Complex::new(c, T::zero()), mis, mis, Complex::new(c, T::zero())])
            }
            Gate::Ry { theta, .. } => {
                let (s, c) = (theta * half).sin_cos();
                GateMatrix::Single([
                    Complex::new(c, T::zero()),
                    Complex::new(-s, T::zero()),
                    Complex::new(s, T::zero()),
                    Complex::new(c, T::zero()),
                ])
            }
            Gate::Rz { theta, .. } => {
                let a = theta * half;
                GateMatrix::Single([
                    Complex::from_polar(T::one(), -a),
                    zero,
                    zero,
                    Complex::from_polar(T::one(), a),
                ])
            }
            Gate::U3 {
                theta, phi, lambda, ..
            } => {
                let (s, c) = (theta * half).sin_cos();
                GateMatrix::Single([
                    Complex::new(c, T::zero()),
                    -Complex::from_polar(T::one(), lambda) * s,
                    Complex::from_polar(T::one(), phi) * s,
                    Complex::from_polar(T::one(), phi + lambda) * c,
                ])
            }
            Gate::Crx { theta, .. } => {
                let (s, c) = (theta * half).sin_cos();
                let cc = Complex::new(c, T::zero());
                let mis = Complex::new(T::zero(), -s);
                let mut m = [zero; 16];
                m[0] = one;
                m[5] = one;
                m[10] = cc;
                m[11] = mis;
                m[14] = mis;
                m[15] = cc;
                GateMatrix::Two(m)
            }
        }
    }

    /// Qubits the gate acts on, control first for `Crx`.
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::Rx { target, .. }
            | Gate::Ry { target, .. }
            | Gate::Rz { target, .. }
            | Gate::U3 { target, .. } => vec![target],
            Gate::Crx {
                control, target, ..
            } => vec![control, target],
        }
    }
}

/// Density matrix of an `n_qubits` register.
#[derive(Clone, Debug)]
pub struct DensityMatrix<T> {
    n_qubits: usize,
    dim: usize,
    data: Vec<Complex<T>>,
}

impl<T: Scalar> DensityMatrix<T> {
    /// |0...0><0...0| on `n_qubits` qubits.
    pub fn zero_state(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::QubitCount(n_qubits));
        }
        let dim = 1 << n_qubits;
        let mut data = vec![Complex::new(T::zero(), T::zero()); dim * dim];
        data[0] = Complex::new(T::one(), T::zero());
        Ok(Self {
            n_qubits,
            dim,
            data,
        })
    }

    /// |psi><psi| from state-vector amplitudes (length 2^n, normalized).
    pub fn from_pure(n_qubits: usize, amplitudes: &[Complex<T>]) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::QubitCount(n_qubits));
        }
        let dim = 1 << n_qubits;
        if amplitudes.len() != dim {
            return Err(Error::LengthMismatch {
                left: amplitudes.len(),
                right: dim,
            });
        }
        let norm_sqr = amplitudes.iter().fold(T::zero(), |s, a| s + a.norm_sqr());
        let scale = norm_sqr.recip();
        let mut data = vec![Complex::new(T::zero(), T::zero()); dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                data[i * dim + j] = amplitudes[i] * amplitudes[j].conj() * scale;
            }
        }
        Ok(Self {
            n_qubits,
            dim,
            data,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Raw row-major elements.
    pub fn data(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> Complex<T> {
        self.data[row * self.dim + col]
    }

    /// Basis-index bit carrying `qubit` (qubit 0 is the most significant bit).
    #[inline]
    fn bit(&self, qubit: usize) -> usize {
        1 << (self.n_qubits - 1 - qubit)
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.n_qubits {
            return Err(Error::QubitIndex {
                index: qubit,
                n_qubits: self.n_qubits,
            });
        }
        Ok(())
    }

    pub fn trace(&self) -> Complex<T> {
        let mut t = Complex::new(T::zero(), T::zero());
        for i in 0..self.dim {
            t += self.data[i * self.dim + i];
        }
        t
    }

    /// Largest elementwise deviation from rho = rho^dagger.
    pub fn hermiticity_error(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.dim {
            for j in i..self.dim {
                let d = self.data[i * self.dim + j] - self.data[j * self.dim + i].conj();
                worst = worst.max(d.norm());
            }
        }
        worst
    }

    /// Exact smallest eigenvalue (dense eigendecomposition; test-grade).
    pub fn min_eigenvalue(&self) -> T {
        linalg::hermitian_min_eigenvalue(&self.data, self.dim)
    }

    /// Fast check that all eigenvalues are at least `-slack`.
    pub fn is_psd_within(&self, slack: T) -> bool {
        linalg::hermitian_is_psd(&self.data, self.dim, slack)
    }

    /// P(measuring |1>) on `qubit`, computed exactly as Tr(rho Pi_1).
    pub fn prob_one(&self, qubit: usize) -> Result<T> {
        self.check_qubit(qubit)?;
        let mask = self.bit(qubit);
        let mut p = T::zero();
        for i in 0..self.dim {
            if i & mask != 0 {
                p = p + self.data[i * self.dim + i].re;
            }
        }
        Ok(p)
    }

    /// Applies a gate by conjugation, rho -> U rho U^dagger.
    pub fn apply_gate(&mut self, gate: &Gate<T>) -> Result<()> {
        match *gate {
            Gate::Crx {
                control,
                target,
                theta,
            } => {
                self.check_qubit(control)?;
                self.check_qubit(target)?;
                if control == target {
                    return Err(Error::DuplicateQubits(vec![control, target]));
                }
                self.apply_crx(control, target, theta);
                Ok(())
            }
            _ => {
                let target = gate.qubits()[0];
                self.check_qubit(target)?;
                let GateMatrix::Single(u) = gate.matrix() else {
                    unreachable!("single-qubit gate has a 2x2 matrix");
                };
                self.apply_single(&u, target);
                Ok(())
            }
        }
    }

    fn apply_single(&mut self, u: &[Complex<T>; 4], qubit: usize) {
        let dim = self.dim;
        let mask = self.bit(qubit);
        // rho -> U rho: mix row pairs.
        for r0 in 0..dim {
            if r0 & mask != 0 {
                continue;
            }
            let r1 = r0 | mask;
            let (head, tail) = self.data.split_at_mut(r1 * dim);
            let row0 = &mut head[r0 * dim..r0 * dim + dim];
            let row1 = &mut tail[..dim];
            for c in 0..dim {
                let a = row0[c];
                let b = row1[c];
                row0[c] = u[0] * a + u[1] * b;
                row1[c] = u[2] * a + u[3] * b;
            }
        }
        // rho -> rho U^dagger: mix column pairs within each row.
        let u00 = u[0].conj();
        let u01 = u[1].conj();
        let u10 = u[2].conj();
        let u11 = u[3].conj();
        for r in 0..dim {
            let row = &mut self.data[r * dim..r * dim + dim];
            for c0 in 0..dim {
                if c0 & mask != 0 {
                    continue;
                }
                let c1 = c0 | mask;
                let a = row[c0];
                let b = row[c1];
                row[c0] = a * u00 + b * u01;
                row[c1] = a * u10 + b * u11;
            }
        }
    }

    /// Controlled-RX kernel: only the control=1 subspace is rotated.
    fn apply_crx(&mut self, control: usize, target: usize, theta: T) {
        let dim = self.dim;
        let cmask = self.bit(control);
        let tmask = self.bit(target);
        let (s, c) = (theta * real::<T>(0.5)).sin_cos();
        let cc = Complex::new(c, T::zero());
        let mis = Complex::new(T::zero(), -s); // -i sin
        let pis = Complex::new(T::zero(), s); // +i sin (conjugate)
        for r0 in 0..dim {
            if r0 & cmask == 0 || r0 & tmask != 0 {
                continue;
            }
            let r1 = r0 | tmask;
            let (head, tail) = self.data.split_at_mut(r1 * dim);
            let row0 = &mut head[r0 * dim..r0 * dim + dim];
            let row1 = &mut tail[..dim];
            for col in 0..dim {
                let a = row0[col];
                let b = row1[col];
                row0[col] = cc * a + mis * b;
                row1[col] = mis * a + cc * b;
            }
        }
        for r in 0..dim {
            let row = &mut self.data[r * dim..r * dim + dim];
            for c0 in 0..dim {
                if c0 & cmask == 0 || c0 & tmask != 0 {
                    continue;
                }
                let c1 = c0 | tmask;
                let a = row[c0];
                let b = row[c1];
                row[c0] = a * cc + b * pis;
                row[c1] = a * pis + b * cc;
            }
        }
    }

    fn qubit_mask(&self, qubits: &[usize]) -> Result<usize> {
        let mut mask = 0usize;
        for &q in qubits {
            self.check_qubit(q)?;
            let bit = self.bit(q);
            if mask & bit != 0 {
                return Err(Error::DuplicateQubits(qubits.to_vec()));
            }
            mask |= bit;
        }
        Ok(mask)
    }

    /// Measure-and-discard channel: traces out `qubits` and re-initializes
    /// them to |0>, leaving the reduced state of the others untouched.
    pub fn reset_qubits(&mut self, qubits: &[usize]) -> Result<()> {
        if qubits.is_empty() {
            return Ok(());
        }
        let mask = self.qubit_mask(qubits)?;
        let dim = self.dim;
        let mut out = vec![Complex::new(T::zero(), T::zero()); dim * dim];
        for i in 0..dim {
            if i & mask != 0 {
                continue;
            }
            for j in 0..dim {
                if j & mask != 0 {
                    continue;
                }
                let mut acc = Complex::new(T::zero(), T::zero());
                let mut sub = mask;
                loop {
                    acc += self.data[(i | sub) * dim + (j | sub)];
                    if sub == 0 {
                        break;
                    }
                    sub = (sub - 1) & mask;
                }
                out[i * dim + j] = acc;
            }
        }
        self.data = out;
        Ok(())
    }

    /// Reduced state over the qubits *not* listed, preserving their order.
    pub fn partial_trace(&self, traced: &[usize]) -> Result<DensityMatrix<T>> {
        let mask = self.qubit_mask(traced)?;
        let kept: Vec<usize> = (0..self.n_qubits).filter(|q| !traced.contains(q)).collect();
        if kept.is_empty() {
            return Err(Error::QubitCount(0));
        }
        let n_out = kept.len();
        let dim_out = 1 << n_out;
        let embed = |idx_out: usize| -> usize {
            let mut idx = 0usize;
            for (pos, &q) in kept.iter().enumerate() {
                if idx_out & (1 << (n_out - 1 - pos)) != 0 {
                    idx |= self.bit(q);
                }
            }
            idx
        };
        let mut data = vec![Complex::new(T::zero(), T::zero()); dim_out * dim_out];
        for i_out in 0..dim_out {
            let i_base = embed(i_out);
            for j_out in 0..dim_out {
                let j_base = embed(j_out);
                let mut acc = Complex::new(T::zero(), T::zero());
                let mut sub = mask;
                loop {
                    acc += self.data[(i_base | sub) * self.dim + (j_base | sub)];
                    if sub == 0 {
                        break;
                    }
                    sub = (sub - 1) & mask;
                }
                data[i_out * dim_out + j_out] = acc;
            }
        }
        Ok(DensityMatrix {
            n_qubits: n_out,
            dim: dim_out,
            data,
        })
    }
}
