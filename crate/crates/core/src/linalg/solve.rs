use super::{LinalgError, Matrix};

/// LU factorization with partial pivoting, `P·A = L·U` packed in one matrix.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(a: &Matrix) -> Result<Self, LinalgError> {
        if !a.is_square() {
            return Err(LinalgError::Dimension(format!(
                "LU needs a square matrix, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let tiny = a.max_abs() * f64::EPSILON * n as f64;
        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .max_by(|x, y| x.1.total_cmp(&y.1))
                .expect("non-empty pivot column");
            if pivot <= tiny || pivot == 0.0 {
                return Err(LinalgError::Singular { pivot_index: k });
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    let t = lu[(p, j)];
                    lu[(p, j)] = lu[(k, j)];
                    lu[(k, j)] = t;
                }
            }
            let d = lu[(k, k)];
            for i in (k + 1)..n {
                let f = lu[(i, k)] / d;
                lu[(i, k)] = f;
                if f != 0.0 {
                    for j in (k + 1)..n {
                        lu[(i, j)] -= f * lu[(k, j)];
                    }
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn solve(&self, b: &Matrix) -> Result<Matrix, LinalgError> {
        let n = self.lu.rows();
        if b.rows() != n {
            return Err(LinalgError::Dimension(format!(
                "right-hand side has {} rows, system has {n}",
                b.rows()
            )));
        }
        let mut x = Matrix::zeros(n, b.cols());
        for c in 0..b.cols() {
            let mut y: Vec<f64> = self.perm.iter().map(|&p| b[(p, c)]).collect();
            for i in 0..n {
                let s: f64 = (0..i).map(|j| self.lu[(i, j)] * y[j]).sum();
                y[i] -= s;
            }
            for i in (0..n).rev() {
                let s: f64 = ((i + 1)..n).map(|j| self.lu[(i, j)] * y[j]).sum();
                y[i] = (y[i] - s) / self.lu[(i, i)];
            }
            for i in 0..n {
                x[(i, c)] = y[i];
            }
        }
        Ok(x)
    }
}

/// Solves `a·x = b` by partial-pivoting LU.
pub fn solve_linear(a: &Matrix, b: &Matrix) -> Result<Matrix, LinalgError> {
    Lu::factor(a)?.solve(b)
}

pub fn inverse(a: &Matrix) -> Result<Matrix, LinalgError> {
    solve_linear(a, &Matrix::identity(a.rows()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_returns_rhs() {
        let b = Matrix::from_rows(&[[1.0, -2.0], [3.5, 0.0], [7.0, 1e-3]]).unwrap();
        assert_eq!(solve_linear(&Matrix::identity(3), &b).unwrap(), b);
    }

    #[test]
    fn diagonal_system() {
        let a = Matrix::diag(&[2.0, 4.0]);
        let x = solve_linear(&a, &Matrix::column(&[1.0, 1.0])).unwrap();
        assert_eq!(x.as_slice(), &[0.5, 0.25]);
    }

    #[test]
    fn rank_deficient_is_singular() {
        let a = Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        let err = solve_linear(&a, &Matrix::column(&[1.0, 0.0])).unwrap_err();
        assert!(matches!(err, LinalgError::Singular { .. }));
    }

    #[test]
    fn pivoting_handles_zero_leading_entry() {
        let a = Matrix::from_rows(&[[0.0, 1.0, 2.0], [3.0, 0.0, 1.0], [1.0, 4.0, 0.0]]).unwrap();
        let b = Matrix::column(&[1.0, 2.0, 3.0]);
        let x = solve_linear(&a, &b).unwrap();
        let r = &(&a * &x) - &b;
        assert!(r.max_abs() <= 1e-14);
    }
}
