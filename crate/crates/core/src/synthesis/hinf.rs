use num_complex::Complex64;

use super::{
    is_hurwitz, lqr_gain, riccati_residual_with, SynthesisError, SynthesisResult, Weights, NEWTON_GAP,
    NEWTON_MAX_ITERATIONS,
};
use crate::linalg::{eigenvalues, inverse, singular_values, solve_lyapunov, sqrt_psd, symmetric_eigen, Matrix};
use crate::lti::{log_grid, stability_class, transfer_eval, ComplexMatrix, StabilityClass, StateSpace};

pub const HINF_GRID_POINTS: usize = 2000;
const GAMMA_GAP: f64 = 1e-3;
const GOLDEN_ITERATIONS: usize = 80;

/// Stabilizing solution of `AᵀP + PA − P(BR⁻¹Bᵀ − γ⁻²GGᵀ)P + Q = 0`, or
/// an error when none is found (γ infeasible). Newton iteration from `seed`.
pub fn hinf_riccati(
    a: &Matrix,
    b: &Matrix,
    g: &Matrix,
    w: &Weights,
    gamma: f64,
    seed: &Matrix,
) -> Result<Matrix, SynthesisError> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(SynthesisError::InvalidInput(format!("gamma {gamma} must be positive")));
    }
    if g.rows() != a.rows() {
        return Err(SynthesisError::InvalidInput(format!("g has {} rows, expected {}", g.rows(), a.rows())));
    }
    let r_inv = inverse(&w.r)?;
    let s_control = &(b * &r_inv) * &b.transpose();
    let s_disturbance = (g * &g.transpose()).scale(gamma.powi(-2));
    let s = &s_control - &s_disturbance;

    let infeasible = |why: String| SynthesisError::NotStabilizable(format!("gamma = {gamma}: {why}"));
    let mut p = seed.clone();
    let mut converged = false;
    for _ in 0..NEWTON_MAX_ITERATIONS {
        let acl = a - &(&s * &p);
        let rhs = &w.q + &(&(&p * &s) * &p);
        let next = match solve_lyapunov(&acl, &rhs) {
            Ok(x) => x.symmetrize(),
            Err(e) => return Err(infeasible(format!("Newton step failed ({e})"))),
        };
        if !next.is_finite() {
            return Err(infeasible("Newton iterate diverged".into()));
        }
        let gap = (&next - &p).norm_fro();
        p = next;
        if gap <= NEWTON_GAP * p.norm_fro().max(1.0) {
            converged = true;
            break;
        }
    }
    let residual = riccati_residual_with(a, &s, &w.q, &p).max_abs();
    let scale = w.q.max_abs().max(1.0).max(p.max_abs().powi(2) * s.max_abs());
    if !converged && residual > 1e-9 * scale {
        return Err(infeasible(format!("no convergence, residual {residual:.3e}")));
    }
    let (eig, _) = symmetric_eigen(&p)?;
    if eig[0] < -1e-10 * p.max_abs().max(1.0) {
        return Err(infeasible("solution is not positive semi-definite".into()));
    }
    if !is_hurwitz(&(a - &(&s * &p)))? {
        return Err(infeasible("solution is not stabilizing".into()));
    }
    let k = &(&r_inv * &b.transpose()) * &p;
    if !is_hurwitz(&(a - &(b * &k)))? {
        return Err(infeasible("state feedback does not stabilize".into()));
    }
    Ok(p)
}

/// Smallest feasible γ in `gamma_range` found by bisection to relative gap
/// 1e-3, with the state-feedback gain `k = R⁻¹BᵀP` at that γ.
pub fn hinf_state_feedback(
    a: &Matrix,
    b: &Matrix,
    g: &Matrix,
    w: &Weights,
    gamma_range: (f64, f64),
) -> Result<SynthesisResult, SynthesisError> {
    let (mut lo, mut hi) = gamma_range;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(SynthesisError::InvalidInput(format!("gamma range ({lo}, {hi}) must satisfy 0 < lo < hi")));
    }
    let lqr = lqr_gain(a, b, w)?;
    let mut p_hi = hinf_riccati(a, b, g, w, hi, &lqr.p)
        .map_err(|e| SynthesisError::Range(format!("upper bound gamma = {hi} is infeasible ({e})")))?;
    if let Ok(p) = hinf_riccati(a, b, g, w, lo, &p_hi) {
        hi = lo;
        p_hi = p;
    }
    while hi - lo > GAMMA_GAP * hi {
        let mid = 0.5 * (lo + hi);
        match hinf_riccati(a, b, g, w, mid, &p_hi) {
            Ok(p) => {
                hi = mid;
                p_hi = p;
            }
            Err(_) => lo = mid,
        }
    }
    let k = &(&inverse(&w.r)? * &b.transpose()) * &p_hi;
    let closed_loop_spectrum = eigenvalues(&(a - &(b * &k)))?;
    Ok(SynthesisResult {
        p: p_hi,
        k,
        l: None,
        gamma: Some(hi),
        closed_loop_spectrum,
    })
}

/// Closed loop from disturbance `w` to performance output
/// `z = [Q^{1/2}x; R^{1/2}u]` under `u = −k·x`.
pub fn performance_channel(
    a: &Matrix,
    b: &Matrix,
    g: &Matrix,
    w: &Weights,
    k: &Matrix,
) -> Result<StateSpace, SynthesisError> {
    let q_half = sqrt_psd(&w.q)?;
    let r_half_k = &sqrt_psd(&w.r)? * k;
    let c = Matrix::vstack(&[&q_half, &r_half_k.scale(-1.0)])?;
    Ok(StateSpace::strictly_proper(a - &(b * k), g.clone(), c)?)
}

fn largest_singular_value(m: &ComplexMatrix) -> f64 {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let embed = Matrix::new(
        2 * rows,
        2 * cols,
        (0..2 * rows)
            .flat_map(|i| {
                (0..2 * cols).map(move |j| {
                    let z: Complex64 = m[i % rows][j % cols];
                    match (i < rows, j < cols) {
                        (true, true) | (false, false) => z.re,
                        (true, false) => -z.im,
                        (false, true) => z.im,
                    }
                })
            })
            .collect(),
    )
    .expect("finite response");
    singular_values(&embed)[0]
}

/// Peak largest singular value of `sys` over a frequency grid, refined
/// around the best grid point by golden-section search. This is a lower
/// bound on the true H∞ norm whose accuracy is set by the grid.
///
/// Without an explicit grid, 2000 log-spaced points span six decades
/// centred on the geometric mean of the eigenvalue magnitudes, plus ω = 0.
pub fn hinf_norm(sys: &StateSpace, grid: Option<&[f64]>) -> Result<f64, SynthesisError> {
    if stability_class(&sys.a)? != StabilityClass::AsymptoticallyStable {
        return Err(SynthesisError::UnstableSystem);
    }
    let mut omegas: Vec<f64> = match grid {
        Some(g) => g.to_vec(),
        None => {
            let spectrum = eigenvalues(&sys.a)?;
            let mags: Vec<f64> = spectrum.values().iter().map(|z| z.norm()).filter(|m| *m > 0.0).collect();
            let centre = if mags.is_empty() {
                1.0
            } else {
                (mags.iter().map(|m| m.ln()).sum::<f64>() / mags.len() as f64).exp()
            };
            let mut g = vec![0.0];
            g.extend(log_grid(centre * 1e-3, centre * 1e3, HINF_GRID_POINTS));
            g
        }
    };
    omegas.retain(|w| w.is_finite() && *w >= 0.0);
    if omegas.is_empty() {
        return Err(SynthesisError::InvalidInput("empty frequency grid".into()));
    }
    let gain = |omega: f64| -> Result<f64, SynthesisError> {
        Ok(largest_singular_value(&transfer_eval(sys, Complex64::new(0.0, omega))?))
    };
    let mut best = (0usize, f64::NEG_INFINITY);
    for (i, &omega) in omegas.iter().enumerate() {
        let v = gain(omega)?;
        if v > best.1 {
            best = (i, v);
        }
    }
    let (i, mut peak) = best;
    let lo = if i > 0 { omegas[i - 1] } else { omegas[i] };
    let hi = if i + 1 < omegas.len() { omegas[i + 1] } else { omegas[i] };
    if hi > lo {
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a, mut b) = (lo, hi);
        let mut x1 = b - phi * (b - a);
        let mut x2 = a + phi * (b - a);
        let mut f1 = gain(x1)?;
        let mut f2 = gain(x2)?;
        for _ in 0..GOLDEN_ITERATIONS {
            if f1 > f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - phi * (b - a);
                f1 = gain(x1)?;
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + phi * (b - a);
                f2 = gain(x2)?;
            }
        }
        peak = peak.max(f1).max(f2);
    }
    Ok(peak)
}
