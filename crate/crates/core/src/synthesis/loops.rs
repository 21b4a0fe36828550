use serde::{Deserialize, Serialize};

use super::SynthesisError;
use crate::linalg::Matrix;
use crate::lti::StateSpace;

/// The observer-based closed loop in two coordinate systems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationLoop {
    /// State `[x; e]` with `e = x − x̂`: `[[A − BK, BK], [0, A − LC]]`.
    pub error_form: Matrix,
    /// State `[x; x̂]`: `[[A, −BK], [LC, A − BK − LC]]`.
    pub estimate_form: Matrix,
}

fn check_gains(a: &Matrix, b: &Matrix, c: &Matrix, k: &Matrix, l: &Matrix) -> Result<(), SynthesisError> {
    let n = a.rows();
    let ok = a.is_square()
        && b.rows() == n
        && c.cols() == n
        && k.shape() == (b.cols(), n)
        && l.shape() == (n, c.rows());
    if ok {
        Ok(())
    } else {
        Err(SynthesisError::InvalidInput(format!(
            "inconsistent shapes a {:?}, b {:?}, c {:?}, k {:?}, l {:?}",
            a.shape(),
            b.shape(),
            c.shape(),
            k.shape(),
            l.shape()
        )))
    }
}

pub fn assemble_separation_loop(
    a: &Matrix,
    b: &Matrix,
    c: &Matrix,
    k: &Matrix,
    l: &Matrix,
) -> Result<SeparationLoop, SynthesisError> {
    check_gains(a, b, c, k, l)?;
    let n = a.rows();
    let bk = b * k;
    let lc = l * c;
    let error_form = Matrix::block2(&(a - &bk), &bk, &Matrix::zeros(n, n), &(a - &lc))?;
    let estimate_form = Matrix::block2(a, &-&bk, &lc, &(&(a - &bk) - &lc))?;
    Ok(SeparationLoop { error_form, estimate_form })
}

/// Loop transfer `K(sI − A)⁻¹B` broken at the plant input.
pub fn state_feedback_loop(a: &Matrix, b: &Matrix, k: &Matrix) -> Result<StateSpace, SynthesisError> {
    Ok(StateSpace::strictly_proper(a.clone(), b.clone(), k.clone())?)
}

/// Output-feedback compensator from measured output to control magnitude:
/// `(A − BK − LC, L, K, 0)`; the applied control is its output negated.
pub fn observer_compensator(
    a: &Matrix,
    b: &Matrix,
    c: &Matrix,
    k: &Matrix,
    l: &Matrix,
) -> Result<StateSpace, SynthesisError> {
    check_gains(a, b, c, k, l)?;
    let lc = l * c;
    Ok(StateSpace::strictly_proper(&(a - &(b * k)) - &lc, l.clone(), k.clone())?)
}

/// Compensator in series with the plant, broken at the plant input. States
/// `[x; x̂]`; `I + L(s)` is the return difference of the observer-based loop.
pub fn observer_loop_at_input(
    a: &Matrix,
    b: &Matrix,
    c: &Matrix,
    k: &Matrix,
    l: &Matrix,
) -> Result<StateSpace, SynthesisError> {
    check_gains(a, b, c, k, l)?;
    let n = a.rows();
    let lc = l * c;
    let big_a = Matrix::block2(a, &Matrix::zeros(n, n), &lc, &(&(a - &(b * k)) - &lc))?;
    let big_b = Matrix::vstack(&[b, &Matrix::zeros(n, b.cols())])?;
    let big_c = Matrix::hstack(&[&Matrix::zeros(k.rows(), n), k])?;
    Ok(StateSpace::strictly_proper(big_a, big_b, big_c)?)
}
