//! Controller and observer design for the linearized plant: Riccati-based
//! LQR, per-channel pole placement, full-order observer gains, H∞ state
//! feedback and the augmented observer-controller loop.

mod hinf;
mod loops;
mod placement;

pub use hinf::{hinf_norm, hinf_riccati, hinf_state_feedback, performance_channel, HINF_GRID_POINTS};
pub use loops::{
    assemble_separation_loop, observer_compensator, observer_loop_at_input, state_feedback_loop,
    SeparationLoop,
};
pub use placement::{channel_structure, observer_gain, place_poles, Channel, ObserverDesign};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{eigenvalues, inverse, solve_lyapunov, symmetric_eigen, LinalgError, Matrix, Spectrum};
use crate::lti::LtiError;

pub const NEWTON_MAX_ITERATIONS: usize = 50;
pub const NEWTON_GAP: f64 = 1e-12;
pub const CARE_RESIDUAL_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthesisError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Lti(#[from] LtiError),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("pair is not controllable: {0}")]
    NotControllable(String),
    #[error("pair is not observable: {0}")]
    NotObservable(String),
    #[error("no stabilizing solution: {0}")]
    NotStabilizable(String),
    #[error("iteration failed: {0}")]
    Numerical(String),
    #[error("gamma range: {0}")]
    Range(String),
    #[error("system is not asymptotically stable; the H-infinity norm is undefined")]
    UnstableSystem,
}

/// Quadratic cost weights: `q` on the state, `r` on the input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Weights {
    pub q: Matrix,
    pub r: Matrix,
}

impl Weights {
    pub fn identity(states: usize, inputs: usize) -> Self {
        Self {
            q: Matrix::identity(states),
            r: Matrix::identity(inputs),
        }
    }

    pub fn validate(&self, states: usize, inputs: usize) -> Result<(), SynthesisError> {
        if self.q.shape() != (states, states) || self.r.shape() != (inputs, inputs) {
            return Err(SynthesisError::InvalidInput(format!(
                "weights are {:?} and {:?}, expected {states}x{states} and {inputs}x{inputs}",
                self.q.shape(),
                self.r.shape()
            )));
        }
        let qs = self.q.max_abs().max(1.0);
        if self.q.asymmetry() > 1e-12 * qs {
            return Err(SynthesisError::InvalidInput("q is not symmetric".into()));
        }
        let rs = self.r.max_abs().max(1.0);
        if self.r.asymmetry() > 1e-12 * rs {
            return Err(SynthesisError::InvalidInput("r is not symmetric".into()));
        }
        let (qe, _) = symmetric_eigen(&self.q)?;
        if qe.first().is_some_and(|v| *v < -1e-12 * qs) {
            return Err(SynthesisError::InvalidInput("q is not positive semi-definite".into()));
        }
        let (re, _) = symmetric_eigen(&self.r)?;
        if re.first().is_some_and(|v| *v <= 0.0) {
            return Err(SynthesisError::InvalidInput("r is not positive definite".into()));
        }
        Ok(())
    }
}

/// Outcome of a gain design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisResult {
    /// Riccati solution.
    pub p: Matrix,
    /// State-feedback gain, `u = −k·x`.
    pub k: Matrix,
    /// Observer gain, when one was designed alongside.
    pub l: Option<Matrix>,
    /// Attained H∞ bound.
    pub gamma: Option<f64>,
    /// Spectrum of `a − b·k`.
    pub closed_loop_spectrum: Spectrum,
}

pub(crate) fn is_hurwitz(a: &Matrix) -> Result<bool, SynthesisError> {
    Ok(eigenvalues(a)?.max_real() < 0.0)
}

fn check_pair(a: &Matrix, b: &Matrix) -> Result<(), SynthesisError> {
    if !a.is_square() || b.rows() != a.rows() {
        return Err(SynthesisError::InvalidInput(format!(
            "a is {:?}, b is {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

/// `aᵀP + Pa − P·s·P + q` for a symmetric `s`.
pub(crate) fn riccati_residual_with(a: &Matrix, s: &Matrix, q: &Matrix, p: &Matrix) -> Matrix {
    let at_p = &a.transpose() * p;
    let psp = &(p * s) * p;
    &(&(&at_p + &at_p.transpose()) - &psp) + q
}

/// Residual `AᵀP + PA − PBR⁻¹BᵀP + Q` by direct substitution.
pub fn care_residual(a: &Matrix, b: &Matrix, w: &Weights, p: &Matrix) -> Result<Matrix, SynthesisError> {
    let s = &(b * &inverse(&w.r)?) * &b.transpose();
    Ok(riccati_residual_with(a, &s, &w.q, p))
}

/// Stabilizing gain used to start Newton–Kleinman. Zero for a Hurwitz `a`,
/// per-channel placement when the pair decouples into single-input
/// channels, otherwise Bass's Lyapunov construction.
fn stabilizing_seed(a: &Matrix, b: &Matrix) -> Result<Matrix, SynthesisError> {
    let spectrum = eigenvalues(a)?;
    if spectrum.max_real() < 0.0 {
        return Ok(Matrix::zeros(b.cols(), a.rows()));
    }
    let radius = spectrum.values().iter().map(|z| z.norm()).fold(0.0, f64::max);
    let pole = -(2.0 * radius).max(1.0);
    match place_poles(a, b, &Spectrum::from_real(&vec![pole; a.rows()])) {
        Ok(k) => return Ok(k),
        Err(SynthesisError::NotControllable(msg)) => return Err(SynthesisError::NotStabilizable(msg)),
        Err(_) => {}
    }
    // (a + βI)Z + Z(a + βI)ᵀ = 2bbᵀ with −(a + βI) Hurwitz; k = bᵀZ⁻¹.
    let n = a.rows();
    let beta = spectrum.values().iter().map(|z| z.re.abs()).fold(0.0, f64::max) + 1.0;
    let shifted = (a + &Matrix::identity(n).scale(beta)).transpose();
    let bbt = (b * &b.transpose()).scale(2.0);
    let z = solve_lyapunov(&shifted, &bbt.scale(-1.0))?;
    let k = &b.transpose() * &inverse(&z).map_err(|_| SynthesisError::NotStabilizable("(a, b) is not controllable".into()))?;
    if !is_hurwitz(&(a - &(b * &k)))? {
        return Err(SynthesisError::NotStabilizable("no stabilizing seed gain".into()));
    }
    Ok(k)
}

/// Stabilizing solution of `AᵀP + PA − PBR⁻¹BᵀP + Q = 0` by Newton–Kleinman
/// iteration.
pub fn solve_care(a: &Matrix, b: &Matrix, w: &Weights) -> Result<Matrix, SynthesisError> {
    check_pair(a, b)?;
    w.validate(a.rows(), b.cols())?;
    let r_inv = inverse(&w.r)?;
    let r_inv_bt = &r_inv * &b.transpose();
    let mut k = stabilizing_seed(a, b)?;
    let mut p_prev: Option<Matrix> = None;
    for _ in 0..NEWTON_MAX_ITERATIONS {
        let ak = a - &(b * &k);
        let rhs = &w.q + &(&(&k.transpose() * &w.r) * &k);
        let p = solve_lyapunov(&ak, &rhs)
            .map_err(|e| SynthesisError::Numerical(format!("Lyapunov step failed: {e}")))?
            .symmetrize();
        if !p.is_finite() {
            return Err(SynthesisError::Numerical("Riccati iterate diverged".into()));
        }
        k = &r_inv_bt * &p;
        if let Some(prev) = &p_prev {
            let gap = (&p - prev).norm_fro();
            if gap <= NEWTON_GAP * p.norm_fro().max(1.0) {
                return finish_care(a, b, w, p);
            }
        }
        p_prev = Some(p);
    }
    // Newton stalls at round-off level without meeting the gap; accept the
    // last iterate if it satisfies the residual bound.
    finish_care(a, b, w, p_prev.expect("at least one iteration"))
}

fn finish_care(a: &Matrix, b: &Matrix, w: &Weights, p: Matrix) -> Result<Matrix, SynthesisError> {
    let residual = care_residual(a, b, w, &p)?.max_abs();
    let scale = w.q.max_abs().max(1.0);
    if residual > CARE_RESIDUAL_TOLERANCE * scale {
        return Err(SynthesisError::Numerical(format!(
            "Riccati residual {residual:.3e} exceeds tolerance"
        )));
    }
    Ok(p)
}

/// LQR gain `k = R⁻¹BᵀP` from the stabilizing CARE solution.
pub fn lqr_gain(a: &Matrix, b: &Matrix, w: &Weights) -> Result<SynthesisResult, SynthesisError> {
    let p = solve_care(a, b, w)?;
    let k = &(&inverse(&w.r)? * &b.transpose()) * &p;
    let closed_loop_spectrum = eigenvalues(&(a - &(b * &k)))?;
    Ok(SynthesisResult {
        p,
        k,
        l: None,
        gamma: None,
        closed_loop_spectrum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbital::{linearize_plant, LinearizationSign, PhysicalConstants};
    use proptest::prelude::*;

    fn scalar(v: f64) -> Matrix {
        Matrix::from_rows(&[[v]]).unwrap()
    }

    fn plant() -> crate::lti::StateSpace {
        let r0 = 4292.87f64.hypot(8924.17);
        linearize_plant(r0, &PhysicalConstants::default(), LinearizationSign::Positive).unwrap()
    }

    #[test]
    fn scalar_care_roots() {
        let w = Weights::identity(1, 1);
        let p = solve_care(&scalar(0.0), &scalar(1.0), &w).unwrap();
        assert!((p[(0, 0)] - 1.0).abs() < 1e-10);
        let p = solve_care(&scalar(1.0), &scalar(1.0), &w).unwrap();
        assert!((p[(0, 0)] - (1.0 + 2f64.sqrt())).abs() < 1e-10);
    }

    #[test]
    fn scalar_lqr_gains() {
        let w = Weights::identity(1, 1);
        let r = lqr_gain(&scalar(0.0), &scalar(1.0), &w).unwrap();
        assert!((r.k[(0, 0)] - 1.0).abs() < 1e-10);
        assert!((r.closed_loop_spectrum.values()[0].re + 1.0).abs() < 1e-10);
        let r = lqr_gain(&scalar(1.0), &scalar(1.0), &w).unwrap();
        assert!((r.closed_loop_spectrum.values()[0].re + 2f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn plant_care_solution() {
        let sys = plant();
        let w = Weights::identity(4, 2);
        let r = lqr_gain(&sys.a, &sys.b, &w).unwrap();
        assert!(care_residual(&sys.a, &sys.b, &w, &r.p).unwrap().max_abs() <= 1e-8);
        assert!(r.p.asymmetry() <= 1e-12);
        let (eig, _) = symmetric_eigen(&r.p).unwrap();
        assert!(eig[0] >= -1e-10);
        assert!(r.closed_loop_spectrum.max_real() < 0.0);
        let k_direct = &sys.b.transpose() * &r.p;
        assert!((&k_direct - &r.k).max_abs() <= 1e-9);
    }

    #[test]
    fn coupled_multi_input_uses_lyapunov_seed() {
        let a = Matrix::from_rows(&[[1.0, 2.0, 0.0], [0.0, 0.5, 1.0], [1.0, 0.0, 0.3]]).unwrap();
        let b = Matrix::from_rows(&[[1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap();
        let w = Weights::identity(3, 2);
        let r = lqr_gain(&a, &b, &w).unwrap();
        assert!(care_residual(&a, &b, &w, &r.p).unwrap().max_abs() < 1e-8);
        assert!(r.closed_loop_spectrum.max_real() < 0.0);
    }

    #[test]
    fn uncontrollable_unstable_mode_is_rejected() {
        let a = Matrix::diag(&[1.0, -1.0]);
        let b = Matrix::column(&[0.0, 1.0]);
        let err = solve_care(&a, &b, &Weights::identity(2, 1)).unwrap_err();
        assert!(matches!(err, SynthesisError::NotStabilizable(_)), "{err:?}");
    }

    #[test]
    fn invalid_weights() {
        let bad = Weights {
            q: Matrix::diag(&[1.0, -1.0]),
            r: Matrix::identity(1),
        };
        assert!(bad.validate(2, 1).is_err());
        let bad = Weights {
            q: Matrix::identity(2),
            r: Matrix::diag(&[0.0]),
        };
        assert!(bad.validate(2, 1).is_err());
    }

    #[test]
    fn lqr_cost_matches_value_function() {
        // a = 0, b = 1, k = 1 from x0 = 1: x(t) = e^{-t}, u = -x,
        // J = ∫ x² + u² dt should equal P = 1.
        let dt = 1e-3;
        let horizon = 40.0;
        let steps = (horizon / dt) as usize;
        let integrand = |t: f64| 2.0 * (-t).exp().powi(2);
        let mut j = 0.5 * (integrand(0.0) + integrand(horizon));
        for i in 1..steps {
            j += integrand(i as f64 * dt);
        }
        j *= dt;
        let p = solve_care(&scalar(0.0), &scalar(1.0), &Weights::identity(1, 1)).unwrap();
        assert!((j - p[(0, 0)]).abs() < 1e-4);
    }

    proptest! {
        #[test]
        fn care_residual_on_random_plants(
            entries in proptest::collection::vec(-2.0f64..2.0, 9),
            bcol in proptest::collection::vec(-2.0f64..2.0, 6),
            qd in proptest::collection::vec(0.1f64..5.0, 3),
        ) {
            let a = Matrix::new(3, 3, entries).unwrap();
            let b = Matrix::new(3, 2, bcol).unwrap();
            prop_assume!(crate::lti::is_controllable(
                &crate::lti::StateSpace::strictly_proper(a.clone(), b.clone(), Matrix::identity(3)).unwrap()
            ));
            prop_assume!(crate::linalg::singular_values(&crate::lti::controllability_matrix(
                &crate::lti::StateSpace::strictly_proper(a.clone(), b.clone(), Matrix::identity(3)).unwrap()
            ))[2] > 1e-2);
            let w = Weights { q: Matrix::diag(&qd), r: Matrix::identity(2) };
            let r = lqr_gain(&a, &b, &w).unwrap();
            let res = care_residual(&a, &b, &w, &r.p).unwrap().max_abs();
            prop_assert!(res <= 1e-8 * 5f64.max(1.0));
            prop_assert!(r.p.asymmetry() <= 1e-12 * r.p.max_abs().max(1.0));
            prop_assert!(r.closed_loop_spectrum.max_real() < 0.0);
        }
    }
}
