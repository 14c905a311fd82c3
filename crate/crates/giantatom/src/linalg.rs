//! Dense Hermitian eigensolver (cyclic Jacobi) for the validation oracle and
//! matrix certificates. Sizes here stay in the few-hundred range, so the
//! O(n^3)-per-sweep cost is irrelevant and we avoid an external LAPACK
//! dependency entirely.

use num_complex::Complex64;

/// Eigendecomposition of a Hermitian matrix (row-major, n x n).
/// Returns (eigenvalues ascending, eigenvectors as row-major columns):
/// a = V diag(w) V^dagger with V[i*n + j] the i-th component of the j-th
/// eigenvector.
pub(crate) fn hermitian_eigen(a: &[Complex64], n: usize) -> (Vec<f64>, Vec<Complex64>) {
    assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let mut v = vec![Complex64::ZERO; n * n];
    for i in 0..n {
        v[i * n + i] = Complex64::ONE;
    }

    let frob: f64 = m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let stop = (frob * 1e-14).max(f64::MIN_POSITIVE);
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[p * n + q].norm_sqr();
            }
        }
        if off.sqrt() <= stop {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                let norm = apq.norm();
                if norm <= stop * 1e-4 / n as f64 {
                    continue;
                }
                // unitary plane rotation annihilating the (p, q) entry
                let phase = apq / norm;
                let app = m[p * n + p].re;
                let aqq = m[q * n + q].re;
                let tau = (aqq - app) / (2.0 * norm);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // columns: new_p = c*col_p - s*conj(phase)*col_q,
                //          new_q = s*phase*col_p + c*col_q
                for r in 0..n {
                    let mrp = m[r * n + p];
                    let mrq = m[r * n + q];
                    m[r * n + p] = c * mrp - s * phase.conj() * mrq;
                    m[r * n + q] = s * phase * mrp + c * mrq;
                    let vrp = v[r * n + p];
                    let vrq = v[r * n + q];
                    v[r * n + p] = c * vrp - s * phase.conj() * vrq;
                    v[r * n + q] = s * phase * vrp + c * vrq;
                }
                // rows (conjugate transform)
                for r in 0..n {
                    let mpr = m[p * n + r];
                    let mqr = m[q * n + r];
                    m[p * n + r] = c * mpr - s * phase * mqr;
                    m[q * n + r] = s * phase.conj() * mpr + c * mqr;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let evals: Vec<f64> = (0..n).map(|i| m[i * n + i].re).collect();
    order.sort_by(|&i, &j| evals[i].partial_cmp(&evals[j]).unwrap());
    let sorted_vals: Vec<f64> = order.iter().map(|&i| evals[i]).collect();
    let mut sorted_vecs = vec![Complex64::ZERO; n * n];
    for (new_col, &old_col) in order.iter().enumerate() {
        for r in 0..n {
            sorted_vecs[r * n + new_col] = v[r * n + old_col];
        }
    }
    (sorted_vals, sorted_vecs)
}

/// Largest |eigenvalue| of a Hermitian matrix (its operator norm).
pub(crate) fn hermitian_norm(a: &[Complex64], n: usize) -> f64 {
    let (w, _) = hermitian_eigen(a, n);
    w.iter().fold(0.0f64, |acc, &x| acc.max(x.abs()))
}

/// Smallest and largest eigenvalues, for semidefiniteness certificates.
pub(crate) fn eigenvalue_range(a: &[Complex64], n: usize) -> (f64, f64) {
    let (w, _) = hermitian_eigen(a, n);
    (w[0], w[n - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_hermitian(n: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut a = vec![Complex64::ZERO; n * n];
        for i in 0..n {
            a[i * n + i] = Complex64::new(rng.gen_range(-1.0..1.0), 0.0);
            for j in (i + 1)..n {
                let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                a[i * n + j] = z;
                a[j * n + i] = z.conj();
            }
        }
        a
    }

    #[test]
    fn reconstructs_random_matrices() {
        for seed in 0..5u64 {
            let n = 24;
            let a = random_hermitian(n, seed);
            let (w, v) = hermitian_eigen(&a, n);
            for i in 1..n {
                assert!(w[i] >= w[i - 1]);
            }
            // V diag(w) V^dagger == A
            let mut worst = 0.0f64;
            for i in 0..n {
                for j in 0..n {
                    let mut acc = Complex64::ZERO;
                    for l in 0..n {
                        acc += v[i * n + l] * w[l] * v[j * n + l].conj();
                    }
                    worst = worst.max((acc - a[i * n + j]).norm());
                }
            }
            assert!(worst < 1e-10, "seed {seed}: worst {worst:.3e}");
            // unitarity
            for c1 in 0..n {
                for c2 in 0..n {
                    let mut acc = Complex64::ZERO;
                    for r in 0..n {
                        acc += v[r * n + c1].conj() * v[r * n + c2];
                    }
                    let expect = if c1 == c2 { 1.0 } else { 0.0 };
                    assert!((acc - Complex64::new(expect, 0.0)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn diagonal_matrix_is_its_own_spectrum() {
        let n = 4;
        let mut a = vec![Complex64::ZERO; n * n];
        for (i, val) in [3.0, -1.0, 2.0, 0.5].iter().enumerate() {
            a[i * n + i] = Complex64::new(*val, 0.0);
        }
        let (w, _) = hermitian_eigen(&a, n);
        assert_eq!(w, vec![-1.0, 0.5, 2.0, 3.0]);
        assert_eq!(hermitian_norm(&a, n), 3.0);
        assert_eq!(eigenvalue_range(&a, n), (-1.0, 3.0));
    }
}
