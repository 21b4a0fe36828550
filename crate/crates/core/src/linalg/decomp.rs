use super::{LinalgError, Matrix};

const JACOBI_SWEEPS: usize = 100;

/// Singular values in descending order (one-sided Jacobi).
pub fn singular_values(m: &Matrix) -> Vec<f64> {
    // Work on the orientation with fewer columns.
    let work = if m.cols() > m.rows() { m.transpose() } else { m.clone() };
    let (rows, cols) = work.shape();
    let mut cols_data: Vec<Vec<f64>> = (0..cols)
        .map(|j| (0..rows).map(|i| work[(i, j)]).collect())
        .collect();
    for _ in 0..JACOBI_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let alpha: f64 = cols_data[p].iter().map(|v| v * v).sum();
                let beta: f64 = cols_data[q].iter().map(|v| v * v).sum();
                let gamma: f64 = cols_data[p].iter().zip(&cols_data[q]).map(|(a, b)| a * b).sum();
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..rows {
                    let a = cols_data[p][i];
                    let b = cols_data[q][i];
                    cols_data[p][i] = c * a - s * b;
                    cols_data[q][i] = s * a + c * b;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = cols_data
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Numerical rank: count of singular values above `tol`, or above
/// `max(rows, cols)·eps·σ_max` when no tolerance is supplied.
pub fn rank(m: &Matrix, tol: Option<f64>) -> usize {
    let sv = singular_values(m);
    let smax = sv.first().copied().unwrap_or(0.0);
    let tol = tol.unwrap_or(m.rows().max(m.cols()) as f64 * f64::EPSILON * smax);
    sv.iter().filter(|s| **s > tol).count()
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues in ascending order and the matching orthonormal
/// eigenvectors as columns.
pub fn symmetric_eigen(m: &Matrix) -> Result<(Vec<f64>, Matrix), LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::Dimension("symmetric_eigen needs a square matrix".into()));
    }
    let n = m.rows();
    let mut a = m.symmetrize();
    let mut v = Matrix::identity(n);
    for _ in 0..JACOBI_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off == 0.0 || off.sqrt() <= 1e-3 * f64::EPSILON * a.norm_fro() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = Matrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok((values, vectors))
}

/// Principal square root of a symmetric positive semi-definite matrix.
/// Slightly negative eigenvalues from round-off are clamped to zero.
pub fn sqrt_psd(m: &Matrix) -> Result<Matrix, LinalgError> {
    let (values, vectors) = symmetric_eigen(m)?;
    let scale = values.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    if values.iter().any(|v| *v < -1e-10 * scale) {
        return Err(LinalgError::NotPositiveSemidefinite);
    }
    let n = m.rows();
    let root: Vec<f64> = values.iter().map(|v| v.max(0.0).sqrt()).collect();
    Ok(Matrix::from_fn(n, n, |i, j| {
        (0..n).map(|k| vectors[(i, k)] * root[k] * vectors[(j, k)]).sum()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_rank() {
        assert_eq!(rank(&Matrix::identity(4), None), 4);
    }

    #[test]
    fn proportional_rows() {
        let m = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]).unwrap();
        assert_eq!(rank(&m, None), 1);
        assert_eq!(rank(&Matrix::zeros(3, 2), None), 0);
    }

    #[test]
    fn singular_values_of_known_matrix() {
        // [[3, 0], [4, 5]] has singular values sqrt(45) and sqrt(5)
        let m = Matrix::from_rows(&[[3.0, 0.0], [4.0, 5.0]]).unwrap();
        let sv = singular_values(&m);
        assert!((sv[0] - 45f64.sqrt()).abs() < 1e-13);
        assert!((sv[1] - 5f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn symmetric_eigen_reconstructs() {
        let m = Matrix::from_rows(&[[4.0, 1.0, 0.5], [1.0, 3.0, -1.0], [0.5, -1.0, 2.0]]).unwrap();
        let (vals, vecs) = symmetric_eigen(&m).unwrap();
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let recon = Matrix::from_fn(3, 3, |i, j| (0..3).map(|k| vecs[(i, k)] * vals[k] * vecs[(j, k)]).sum());
        assert!((&recon - &m).max_abs() < 1e-13);
    }

    #[test]
    fn psd_square_root() {
        let m = Matrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let r = sqrt_psd(&m).unwrap();
        assert!((&(&r * &r) - &m).max_abs() < 1e-13);
        assert!(sqrt_psd(&Matrix::diag(&[1.0, -1.0])).is_err());
    }
}
