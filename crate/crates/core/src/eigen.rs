//! Symmetric eigendecomposition by cyclic Jacobi rotations.
//!
//! Deterministic, dependency-free and accurate for the small matrices this
//! crate works with (tasks and branches, so dimensions in the tens).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fmath;
use crate::tensor::Tensor;

const MAX_SWEEPS: usize = 100;

/// Eigenvalues and eigenvectors of a symmetric matrix.
///
/// `vectors` holds one eigenvector per column, paired with `values` by index;
/// no ordering is imposed here.
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: Tensor,
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a[i * n + j] * a[i * n + j];
            }
        }
    }
    fmath::sqrt(acc)
}

/// Decomposes a symmetric matrix. Fails on asymmetric input or if the sweep
/// budget is exhausted before the off-diagonal norm vanishes.
pub fn symmetric_eigen(matrix: &Tensor) -> Result<EigenDecomposition> {
    if matrix.rank() != 2 || matrix.shape()[0] != matrix.shape()[1] {
        return Err(Error::Dimension(format!(
            "eigendecomposition wants a square matrix, got {:?}",
            matrix.shape()
        )));
    }
    let n = matrix.shape()[0];
    for i in 0..n {
        for j in (i + 1)..n {
            if fmath::abs(matrix.at2(i, j) - matrix.at2(j, i)) > 1e-9 {
                return Err(Error::Validation(format!(
                    "matrix asymmetric at ({i},{j}): {} vs {}",
                    matrix.at2(i, j),
                    matrix.at2(j, i)
                )));
            }
        }
    }

    let mut a: Vec<f64> = matrix.data().to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    if n == 1 {
        return Ok(EigenDecomposition { values: vec![a[0]], vectors: Tensor::new(vec![1, 1], v)? });
    }

    let scale = {
        let mut f = 0.0;
        for x in &a {
            f += x * x;
        }
        fmath::sqrt(f).max(1.0)
    };
    let tol = 1e-13 * scale;

    let mut sweeps = 0;
    while off_diagonal_norm(&a, n) > tol {
        if sweeps >= MAX_SWEEPS {
            return Err(Error::Numeric(format!(
                "Jacobi eigensolver did not converge after {sweeps} sweeps"
            )));
        }
        sweeps += 1;
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if fmath::abs(apq) <= tol / (n * n) as f64 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + fmath::hypot(theta, 1.0))
                } else {
                    1.0 / (theta - fmath::hypot(theta, 1.0))
                };
                let c = 1.0 / fmath::sqrt(t * t + 1.0);
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

    let values: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    Ok(EigenDecomposition { values, vectors: Tensor::new(vec![n, n], v)? })
}

/// Columns of the `k` leading eigenvectors, ordered by descending eigenvalue
/// (stable on ties) and sign-normalized: within each column the first
/// largest-magnitude component is made positive.
pub fn top_k_eigenvectors(matrix: &Tensor, k: usize) -> Result<Tensor> {
    let n = matrix.shape()[0];
    if k == 0 || k > n {
        return Err(Error::Config(format!("k = {k} outside 1..={n}")));
    }
    let eig = symmetric_eigen(matrix)?;
    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps the solver's deterministic order on exact ties.
    order.sort_by(|&i, &j| eig.values[j].partial_cmp(&eig.values[i]).unwrap());

    let mut out = Tensor::zeros(&[n, k]);
    for (col, &src) in order.iter().take(k).enumerate() {
        let mut best = 0usize;
        let mut best_mag = -1.0;
        for row in 0..n {
            let mag = fmath::abs(eig.vectors.at2(row, src));
            if mag > best_mag {
                best_mag = mag;
                best = row;
            }
        }
        let flip = if eig.vectors.at2(best, src) < 0.0 { -1.0 } else { 1.0 };
        for row in 0..n {
            out.set2(row, col, flip * eig.vectors.at2(row, src));
        }
    }
    Ok(out)
}

/// Eigenvalues sorted in descending order.
pub fn eigenvalues_desc(matrix: &Tensor) -> Result<Vec<f64>> {
    let mut values = symmetric_eigen(matrix)?.values;
    values.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruct(eig: &EigenDecomposition) -> Tensor {
        // V diag(w) V^T
        let n = eig.values.len();
        let mut out = Tensor::zeros(&[n, n]);
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += eig.vectors.at2(i, k) * eig.values[k] * eig.vectors.at2(j, k);
                }
                out.set2(i, j, acc);
            }
        }
        out
    }

    #[test]
    fn diagonal_matrix() {
        let m = Tensor::from_rows(&[
            vec![3.0, 0.0, 0.0],
            vec![0.0, 2.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        let vals = eigenvalues_desc(&m).unwrap();
        assert_eq!(vals, vec![3.0, 2.0, 1.0]);
        let top = top_k_eigenvectors(&m, 1).unwrap();
        assert_eq!(top.data(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn reconstruction_matches_input() {
        let m = Tensor::from_rows(&[
            vec![2.0, -0.3, 0.4, 0.0],
            vec![-0.3, 1.0, 0.7, -0.2],
            vec![0.4, 0.7, -0.5, 0.1],
            vec![0.0, -0.2, 0.1, 3.0],
        ])
        .unwrap();
        let eig = symmetric_eigen(&m).unwrap();
        let back = reconstruct(&eig);
        for (a, b) in m.data().iter().zip(back.data()) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn rejects_asymmetric() {
        let m = Tensor::from_rows(&[vec![1.0, 0.5], vec![0.1, 1.0]]).unwrap();
        assert!(matches!(symmetric_eigen(&m), Err(Error::Validation(_))));
    }

    #[test]
    fn top_k_bounds() {
        let m = Tensor::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(top_k_eigenvectors(&m, 0).is_err());
        assert!(top_k_eigenvectors(&m, 3).is_err());
    }
}
