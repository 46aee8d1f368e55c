//! Small dense symmetric eigenproblems and related helpers for the
//! Rayleigh-Ritz projections and subspace comparisons. Sizes here are the
//! block sizes of the iterative solvers (a few dozen at most), so cyclic
//! Jacobi is accurate, simple and deterministic.

/// Eigen decomposition of a small symmetric matrix.
#[derive(Clone, Debug)]
pub struct SymEig {
    /// Ascending eigenvalues.
    pub vals: Vec<f64>,
    /// Column-major eigenvectors aligned with `vals` (n x n).
    pub vecs: Vec<f64>,
}

/// Cyclic Jacobi on a symmetric matrix given in row-major order.
pub fn sym_eig(a_in: &[f64], n: usize) -> SymEig {
    assert_eq!(a_in.len(), n * n);
    let mut a = a_in.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let norm: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        if off.sqrt() <= 1e-15 * norm {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| a[i * n + i].partial_cmp(&a[j * n + j]).unwrap());
    let vals: Vec<f64> = idx.iter().map(|&i| a[i * n + i]).collect();
    let mut vecs = vec![0.0; n * n];
    for (col, &i) in idx.iter().enumerate() {
        for k in 0..n {
            vecs[col * n + k] = v[k * n + i];
        }
    }
    SymEig { vals, vecs }
}

/// Singular values of a small p x q matrix (row-major), descending, via the
/// eigenvalues of A^T A.
pub fn singular_values(a: &[f64], p: usize, q: usize) -> Vec<f64> {
    assert_eq!(a.len(), p * q);
    let mut ata = vec![0.0; q * q];
    for i in 0..q {
        for j in 0..q {
            let mut s = 0.0;
            for k in 0..p {
                s += a[k * q + i] * a[k * q + j];
            }
            ata[i * q + j] = s;
        }
    }
    let eig = sym_eig(&ata, q);
    let mut sv: Vec<f64> = eig.vals.iter().rev().map(|&l| l.max(0.0).sqrt()).collect();
    // clamp tiny negatives from roundoff
    for s in &mut sv {
        if !s.is_finite() {
            *s = 0.0;
        }
    }
    sv
}

/// In-place dense Cholesky of a small SPD matrix (row-major); returns false
/// when a pivot is non-positive.
pub fn small_cholesky(a: &mut [f64], n: usize) -> bool {
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            if i == j {
                if s <= 0.0 {
                    return false;
                }
                a[i * n + i] = s.sqrt();
            } else {
                a[i * n + j] = s / a[j * n + j];
            }
        }
        for j in (i + 1)..n {
            a[i * n + j] = 0.0;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::Rng;

    #[test]
    fn jacobi_reconstructs_matrix() {
        let n = 8;
        let mut rng = Rng::new(77);
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = rng.next_sym();
                a[i * n + j] = v;
                a[j * n + i] = v;
            }
        }
        let eig = sym_eig(&a, n);
        // A v = lambda v for every pair
        for col in 0..n {
            for i in 0..n {
                let mut av = 0.0;
                for j in 0..n {
                    av += a[i * n + j] * eig.vecs[col * n + j];
                }
                let lv = eig.vals[col] * eig.vecs[col * n + i];
                assert!((av - lv).abs() < 1e-12, "col {col} row {i}");
            }
        }
        // ascending
        for c in 1..n {
            assert!(eig.vals[c] >= eig.vals[c - 1]);
        }
    }

    #[test]
    fn known_2x2() {
        let a = vec![2.0, 1.0, 1.0, 2.0];
        let eig = sym_eig(&a, 2);
        assert!((eig.vals[0] - 1.0).abs() < 1e-14);
        assert!((eig.vals[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn singular_values_of_rotation_scaled() {
        // diag(3, 1/2) rotated: singular values 3 and 0.5
        let (c, s) = (0.6f64, 0.8f64);
        let a = vec![3.0 * c, -0.5 * s, 3.0 * s, 0.5 * c];
        let sv = singular_values(&a, 2, 2);
        assert!((sv[0] - 3.0).abs() < 1e-12);
        assert!((sv[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn small_cholesky_spd_and_failure() {
        let mut a = vec![4.0, 2.0, 2.0, 3.0];
        assert!(small_cholesky(&mut a, 2));
        assert!((a[0] - 2.0).abs() < 1e-15);
        let mut b = vec![1.0, 2.0, 2.0, 1.0];
        assert!(!small_cholesky(&mut b, 2));
    }
}
