use super::{solve_linear, LinalgError, Matrix};

const PADE_ORDER: usize = 6;
const MAX_SQUARINGS: i32 = 1000;

/// Matrix exponential `exp(m·t)` by scaling and squaring with a diagonal
/// [6/6] Padé kernel. The scaled argument has infinity norm at most 0.5.
pub fn expm(m: &Matrix, t: f64) -> Result<Matrix, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::Dimension(format!(
            "expm needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if !t.is_finite() {
        return Err(LinalgError::Range("expm time argument is not finite".into()));
    }
    let n = m.rows();
    if t == 0.0 {
        return Ok(Matrix::identity(n));
    }
    let at = m.scale(t);
    let norm = at.norm_inf();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    if squarings > MAX_SQUARINGS {
        return Err(LinalgError::Range(format!("‖m·t‖ = {norm:e} is out of range")));
    }
    let x = at.scale(0.5f64.powi(squarings));

    let coeffs = pade_coefficients(PADE_ORDER);
    let ident = Matrix::identity(n);
    let mut numer = ident.clone();
    let mut denom = ident.clone();
    let mut power = ident;
    for (k, c) in coeffs.iter().enumerate().skip(1) {
        power = &power * &x;
        let term = power.scale(*c);
        numer = &numer + &term;
        denom = if k % 2 == 0 { &denom + &term } else { &denom - &term };
    }
    let mut result = solve_linear(&denom, &numer)?;
    for _ in 0..squarings {
        result = &result * &result;
        if !result.is_finite() {
            return Err(LinalgError::Range("matrix exponential overflowed".into()));
        }
    }
    Ok(result)
}

fn pade_coefficients(q: usize) -> Vec<f64> {
    let mut c = vec![1.0];
    for k in 1..=q {
        let prev = c[k - 1];
        c.push(prev * (q + 1 - k) as f64 / (k * (2 * q + 1 - k)) as f64);
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_time_is_identity() {
        let m = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        assert_eq!(expm(&m, 0.0).unwrap(), Matrix::identity(2));
    }

    #[test]
    fn diagonal() {
        let e = expm(&Matrix::diag(&[1.5, -2.0]), 1.0).unwrap();
        assert!((e[(0, 0)] - 1.5f64.exp()).abs() <= 1e-14 * 1.5f64.exp());
        assert!((e[(1, 1)] - (-2.0f64).exp()).abs() <= 1e-15);
        assert_eq!(e[(0, 1)], 0.0);
    }

    #[test]
    fn nilpotent_series_terminates() {
        let m = Matrix::from_rows(&[[0.0, 1.0], [0.0, 0.0]]).unwrap();
        let e = expm(&m, 1.0).unwrap();
        let want = Matrix::from_rows(&[[1.0, 1.0], [0.0, 1.0]]).unwrap();
        assert!((&e - &want).max_abs() <= 1e-15);
    }

    #[test]
    fn rotation() {
        let m = Matrix::from_rows(&[[0.0, 1.0], [-1.0, 0.0]]).unwrap();
        let e = expm(&m, 2.0).unwrap();
        assert!((e[(0, 0)] - 2f64.cos()).abs() < 1e-14);
        assert!((e[(0, 1)] - 2f64.sin()).abs() < 1e-14);
    }

    #[test]
    fn overflow_is_a_range_error() {
        let m = Matrix::diag(&[1.0]);
        assert!(matches!(expm(&m, 1e6), Err(LinalgError::Range(_))));
    }

    #[test]
    fn pade_coefficients_match_closed_form() {
        let c = pade_coefficients(6);
        let want = [1.0, 0.5, 5.0 / 44.0, 1.0 / 66.0, 1.0 / 792.0, 1.0 / 15840.0, 1.0 / 665280.0];
        for (a, b) in c.iter().zip(want) {
            assert!((a - b).abs() <= 1e-15 * b);
        }
    }
}
