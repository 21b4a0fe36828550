use super::{eigenvalues, solve_linear, LinalgError, Matrix};

/// Solves `aᵀ·P + P·a + q = 0` for symmetric `P` through the n²×n²
/// Kronecker system `(I ⊗ aᵀ + aᵀ ⊗ I)·vec(P) = −vec(q)`.
pub fn solve_lyapunov(a: &Matrix, q: &Matrix) -> Result<Matrix, LinalgError> {
    if !a.is_square() || q.shape() != a.shape() {
        return Err(LinalgError::Dimension(format!(
            "lyapunov needs square a and matching q, got {:?} and {:?}",
            a.shape(),
            q.shape()
        )));
    }
    let n = a.rows();
    let spectrum = eigenvalues(a)?;
    let tol = 1e-10 * a.norm_inf().max(1.0);
    for (i, li) in spectrum.values().iter().enumerate() {
        for lj in &spectrum.values()[i..] {
            if (li + lj).norm() <= tol {
                return Err(LinalgError::NoUniqueSolution);
            }
        }
    }

    // vec is column-major: index(i, j) = j·n + i
    let idx = |i: usize, j: usize| j * n + i;
    let mut kron = Matrix::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            let row = idx(i, j);
            // (aᵀP)_ij = Σ_k a_ki P_kj
            for k in 0..n {
                kron[(row, idx(k, j))] += a[(k, i)];
            }
            // (P a)_ij = Σ_k P_ik a_kj
            for k in 0..n {
                kron[(row, idx(i, k))] += a[(k, j)];
            }
        }
    }
    let mut rhs = Matrix::zeros(n * n, 1);
    for i in 0..n {
        for j in 0..n {
            rhs[(idx(i, j), 0)] = -q[(i, j)];
        }
    }
    let vec_p = solve_linear(&kron, &rhs).map_err(|e| match e {
        LinalgError::Singular { .. } => LinalgError::NoUniqueSolution,
        other => other,
    })?;
    let p = Matrix::from_fn(n, n, |i, j| vec_p[(idx(i, j), 0)]);
    Ok(p.symmetrize())
}

/// Residual `aᵀP + Pa + q` for checking a Lyapunov solution.
pub fn lyapunov_residual(a: &Matrix, p: &Matrix, q: &Matrix) -> Matrix {
    let at = a.transpose();
    &(&(&at * p) + &(p * a)) + q
}
