//! Dense symmetric/Hermitian helpers: cyclic Jacobi eigendecomposition and a
//! shifted Cholesky positive-semidefiniteness test.
//!
//! Matrices are row-major flat slices. Everything here is deterministic:
//! fixed sweep order, fixed summation order, no randomized pivoting.

use num_complex::Complex;

use crate::scalar::{real, Scalar};

const MAX_SWEEPS: usize = 64;

/// Eigendecomposition of a real symmetric matrix by the cyclic Jacobi method.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvalues ascending and
/// eigenvectors stored as columns (`vectors[i * n + k]` is component `i` of
/// eigenvector `k`), so that `A ≈ V diag(λ) Vᵀ`.
pub fn jacobi_eigh<T: Scalar>(matrix: &[T], n: usize) -> (Vec<T>, Vec<T>) {
    assert_eq!(matrix.len(), n * n, "matrix must be n x n");
    let mut a = matrix.to_vec();
    let mut v = vec![T::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = T::one();
    }

    let frob = a.iter().fold(T::zero(), |s, &x| s + x * x).sqrt();
    let tol = T::epsilon() * (frob + T::one());

    for _ in 0..MAX_SWEEPS {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off = off + a[p * n + q] * a[p * n + q];
            }
        }
        if off.sqrt() <= tol {
            break;
        }

        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == T::zero() {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (apq + apq);
                // For very large |theta| the rotation angle is ~1/(2 theta);
                // branching avoids overflow in theta^2.
                let t = if theta.abs() > real::<T>(1e17) {
                    (theta + theta).recip()
                } else {
                    let sign = if theta >= T::zero() { T::one() } else { -T::one() };
                    sign / (theta.abs() + (theta * theta + T::one()).sqrt())
                };
                let c = (t * t + T::one()).sqrt().recip();
                let s = t * c;
                let tau = s / (T::one() + c);

                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = T::zero();
                a[q * n + p] = T::zero();
                for i in 0..n {
                    if i == p || i == q {
                        continue;
                    }
                    let aip = a[i * n + p];
                    let aiq = a[i * n + q];
                    let new_ip = aip - s * (aiq + tau * aip);
                    let new_iq = aiq + s * (aip - tau * aiq);
                    a[i * n + p] = new_ip;
                    a[p * n + i] = new_ip;
                    a[i * n + q] = new_iq;
                    a[q * n + i] = new_iq;
                }
                for i in 0..n {
                    let vip = v[i * n + p];
                    let viq = v[i * n + q];
                    v[i * n + p] = vip - s * (viq + tau * vip);
                    v[i * n + q] = viq + s * (vip - tau * viq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[i * n + i]
            .partial_cmp(&a[j * n + j])
            .expect("eigenvalues are finite")
    });

    let values: Vec<T> = order.iter().map(|&k| a[k * n + k]).collect();
    let mut vectors = vec![T::zero(); n * n];
    for (new_k, &old_k) in order.iter().enumerate() {
        for i in 0..n {
            vectors[i * n + new_k] = v[i * n + old_k];
        }
    }
    (values, vectors)
}

/// Smallest eigenvalue of a complex Hermitian matrix.
///
/// Uses the real embedding `H = A + iB  ->  [[A, -B], [B, A]]`, whose
/// spectrum is that of `H` with doubled multiplicity.
pub fn hermitian_min_eigenvalue<T: Scalar>(matrix: &[Complex<T>], dim: usize) -> T {
    assert_eq!(matrix.len(), dim * dim, "matrix must be dim x dim");
    let m = 2 * dim;
    let mut embedded = vec![T::zero(); m * m];
    for i in 0..dim {
        for j in 0..dim {
            let z = matrix[i * dim + j];
            embedded[i * m + j] = z.re;
            embedded[i * m + dim + j] = -z.im;
            embedded[(dim + i) * m + j] = z.im;
            embedded[(dim + i) * m + dim + j] = z.re;
        }
    }
    // Guard against tiny Hermiticity violations in the input.
    for i in 0..m {
        for j in (i + 1)..m {
            let avg = (embedded[i * m + j] + embedded[j * m + i]) * real::<T>(0.5);
            embedded[i * m + j] = avg;
            embedded[j * m + i] = avg;
        }
    }
    let (values, _) = jacobi_eigh(&embedded, m);
    values[0]
}

/// Tests whether a Hermitian matrix is positive semidefinite within `slack`,
/// i.e. whether all eigenvalues are at least `-slack`.
///
/// Attempts a Cholesky factorization of `matrix + slack * I`; every pivot of
/// a positive-definite matrix is at least its smallest eigenvalue, so the
/// factorization succeeds exactly when the shifted matrix is PSD. Runs in
/// O(dim^3 / 3), far cheaper than a full eigendecomposition.
pub fn hermitian_is_psd<T: Scalar>(matrix: &[Complex<T>], dim: usize, slack: T) -> bool {
    assert_eq!(matrix.len(), dim * dim, "matrix must be dim x dim");
    let mut l = vec![Complex::new(T::zero(), T::zero()); dim * dim];
    for j in 0..dim {
        let mut d = matrix[j * dim + j].re + slack;
        for k in 0..j {
            d = d - l[j * dim + k].norm_sqr();
        }
        if d <= T::zero() {
            return false;
        }
        let pivot = d.sqrt();
        l[j * dim + j] = Complex::new(pivot, T::zero());
        for i in (j + 1)..dim {
            let mut s = matrix[i * dim + j];
            for k in 0..j {
                s = s - l[i * dim + k] * l[j * dim + k].conj();
            }
            l[i * dim + j] = s / pivot;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_by_two_known_eigenpairs() {
        let a = vec![2.0, 1.0, 1.0, 2.0];
        let (vals, vecs) = jacobi_eigh(&a, 2);
        assert_abs_diff_eq!(vals[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[1], 3.0, epsilon = 1e-12);
        // eigenvector for lambda=1 is (1, -1)/sqrt(2) up to sign
        let ratio = vecs[0] / vecs[2];
        assert_abs_diff_eq!(ratio, -1.0, epsilon = 1e-10);
    }

    #[test]
    fn reconstructs_random_symmetric_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [3usize, 8, 24] {
            let mut a = vec![0.0f64; n * n];
            for i in 0..n {
                for j in i..n {
                    let x = rng.gen_range(-1.0..1.0);
                    a[i * n + j] = x;
                    a[j * n + i] = x;
                }
            }
            let (vals, vecs) = jacobi_eigh(&a, n);
            // A_ij = sum_k vals[k] * vecs[i,k] * vecs[j,k]
            for i in 0..n {
                for j in 0..n {
                    let mut s = 0.0;
                    for k in 0..n {
                        s += vals[k] * vecs[i * n + k] * vecs[j * n + k];
                    }
                    assert_abs_diff_eq!(s, a[i * n + j], epsilon = 1e-10);
                }
            }
            // orthonormal columns
            for k in 0..n {
                for l in 0..n {
                    let mut dot = 0.0;
                    for i in 0..n {
                        dot += vecs[i * n + k] * vecs[i * n + l];
                    }
                    let expect = if k == l { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(dot, expect, epsilon = 1e-10);
                }
            }
            assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn hermitian_min_eigenvalue_matches_real_case() {
        let a: Vec<Complex<f64>> = vec![
            Complex::new(2.0, 0.0),
            Complex::new(0.0, -1.0),
            Complex::new(0.0, 1.0),
            Complex::new(2.0, 0.0),
        ];
        // eigenvalues of [[2, -i],[i, 2]] are 1 and 3
        assert_abs_diff_eq!(hermitian_min_eigenvalue(&a, 2), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn psd_test_agrees_with_min_eigenvalue() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = 4usize;
            // random Hermitian with spectrum straddling zero
            let mut h = vec![Complex::new(0.0f64, 0.0); n * n];
            for i in 0..n {
                h[i * n + i] = Complex::new(rng.gen_range(-0.5..1.0), 0.0);
                for j in (i + 1)..n {
                    let z = Complex::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
                    h[i * n + j] = z;
                    h[j * n + i] = z.conj();
                }
            }
            let min = hermitian_min_eigenvalue(&h, n);
            for slack in [0.0, 0.1, 0.5, 2.0] {
                let expected = min >= -slack - 1e-12;
                let expected_loose = min >= -slack + 1e-12;
                let got = hermitian_is_psd(&h, n, slack);
                // allow disagreement only within roundoff of the boundary
                if expected == expected_loose {
                    assert_eq!(got, expected, "min={min} slack={slack}");
                }
            }
        }
    }
}
