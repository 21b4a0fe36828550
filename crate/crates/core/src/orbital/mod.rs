//! Physical models for the planar maneuver: flat-plate solar radiation
//! pressure, two-body motion, the linearized plant, Kepler propagation and
//! Lambert targeting.
//!
//! Units at every public boundary are km, km/s and km/s². SI appears only
//! inside [`srp_force`].

mod kepler;
mod lambert;
mod srp;

pub use kepler::{propagate_kepler, stumpff_c, stumpff_s};
pub use lambert::{lambert_initial_velocity, lambert_solve, LambertSolution, TransferDirection};
pub use srp::{srp_accel, srp_force, SpacecraftParams, SrpConfig};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::Matrix;
use crate::lti::StateSpace;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OrbitalError {
    #[error("radius {radius_km} km is inside the 1 km singularity guard")]
    Singularity { radius_km: f64 },
    #[error("degenerate transfer geometry: {0}")]
    DegenerateGeometry(String),
    #[error("no feasible transfer: {0}")]
    InfeasibleTransfer(String),
    #[error("solver did not converge: {0}")]
    NoConvergence(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Gravitational parameter and speed of light.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalConstants {
    /// km³/s²
    pub mu: f64,
    /// km/s
    pub c_light: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            mu: 3.986004418e5,
            c_light: 2.99792458e5,
        }
    }
}

/// Planar position (km) and velocity (km/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitState {
    pub position: [f64; 2],
    pub velocity: [f64; 2],
}

impl OrbitState {
    pub const fn new(position: [f64; 2], velocity: [f64; 2]) -> Self {
        Self { position, velocity }
    }

    /// `[p, q, ṗ, q̇]`.
    pub fn to_array(&self) -> [f64; 4] {
        [self.position[0], self.position[1], self.velocity[0], self.velocity[1]]
    }

    pub fn from_slice(x: &[f64]) -> Self {
        Self {
            position: [x[0], x[1]],
            velocity: [x[2], x[3]],
        }
    }

    pub fn radius(&self) -> f64 {
        norm2(self.position)
    }

    pub fn speed(&self) -> f64 {
        norm2(self.velocity)
    }

    /// Specific orbital energy v²/2 − μ/r.
    pub fn energy(&self, mu: f64) -> f64 {
        0.5 * self.speed().powi(2) - mu / self.radius()
    }

    /// Planar angular momentum p·q̇ − q·ṗ (positive is counter-clockwise).
    pub fn angular_momentum(&self) -> f64 {
        self.position[0] * self.velocity[1] - self.position[1] * self.velocity[0]
    }
}

pub(crate) fn norm2(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

/// Point-mass gravity acceleration at `position`.
pub fn gravity(position: [f64; 2], mu: f64) -> Result<[f64; 2], OrbitalError> {
    let r = norm2(position);
    if !(r >= 1.0) {
        return Err(OrbitalError::Singularity { radius_km: r });
    }
    let k = -mu / (r * r * r);
    Ok([k * position[0], k * position[1]])
}

/// `(ṗ, q̇, p̈, q̈)` for two-body motion plus SRP and control acceleration.
pub fn two_body_srp_derivative(
    state: &OrbitState,
    a_srp: [f64; 2],
    u: [f64; 2],
    constants: &PhysicalConstants,
) -> Result<[f64; 4], OrbitalError> {
    let g = gravity(state.position, constants.mu)?;
    Ok([
        state.velocity[0],
        state.velocity[1],
        g[0] + a_srp[0] + u[0],
        g[1] + a_srp[1] + u[1],
    ])
}

/// Sign of the ω² entries in the linearized plant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearizationSign {
    /// `+ω²`: characteristic polynomial (s² − ω²) per axis, open-loop unstable.
    #[default]
    Positive,
    /// `−ω²`: the restoring form implied by point-mass gravity, (s² + ω²).
    Negative,
}

/// ω² = μ/r₀³.
pub fn natural_frequency_squared(r0: f64, constants: &PhysicalConstants) -> f64 {
    constants.mu / r0.powi(3)
}

/// Four-state planar plant with state `[p, q, ṗ, q̇]`, inputs the two
/// acceleration components and outputs the two positions.
pub fn linearize_plant(
    r0: f64,
    constants: &PhysicalConstants,
    sign: LinearizationSign,
) -> Result<StateSpace, OrbitalError> {
    if !(r0 > 0.0) || !r0.is_finite() {
        return Err(OrbitalError::InvalidParameter(format!("r0 = {r0} must be positive")));
    }
    let w2 = natural_frequency_squared(r0, constants);
    let w2 = match sign {
        LinearizationSign::Positive => w2,
        LinearizationSign::Negative => -w2,
    };
    let a = Matrix::from_rows(&[
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [w2, 0.0, 0.0, 0.0],
        [0.0, w2, 0.0, 0.0],
    ])
    .expect("finite plant");
    let b = Matrix::from_rows(&[[0.0, 0.0], [0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).expect("finite");
    let c = Matrix::from_rows(&[[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]]).expect("finite");
    Ok(StateSpace::strictly_proper(a, b, c).expect("consistent plant dimensions"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eigenvalues, rank};
    use crate::lti::{controllability_matrix, observability_matrix};

    fn r0() -> f64 {
        4292.87f64.hypot(8924.17)
    }

    #[test]
    fn circular_orbit_balance() {
        let c = PhysicalConstants::default();
        let r = 9903.0;
        let v = (c.mu / r).sqrt();
        let s = OrbitState::new([r, 0.0], [0.0, v]);
        let d = two_body_srp_derivative(&s, [0.0; 2], [0.0; 2], &c).unwrap();
        let radial = -d[2];
        assert!((radial - c.mu / (r * r)).abs() < 1e-15);
        assert!((radial - v * v / r).abs() < 1e-15);
        assert!((radial - 4.064e-3).abs() < 1e-6);
        assert!((v - 6.3443).abs() < 1e-4);
    }

    #[test]
    fn axis_aligned_at_rest() {
        let c = PhysicalConstants::default();
        let s = OrbitState::new([7000.0, 0.0], [0.0, 0.0]);
        let d = two_body_srp_derivative(&s, [1e-9, 2e-9], [3e-6, -1e-6], &c).unwrap();
        assert_eq!(d[0], 0.0);
        assert_eq!(d[1], 0.0);
        assert_eq!(d[2], -c.mu / 7000f64.powi(2) + 1e-9 + 3e-6);
        assert_eq!(d[3], 2e-9 - 1e-6);
    }

    #[test]
    fn singularity_guard() {
        let s = OrbitState::new([0.5, 0.0], [0.0, 0.0]);
        let err = two_body_srp_derivative(&s, [0.0; 2], [0.0; 2], &PhysicalConstants::default());
        assert!(matches!(err, Err(OrbitalError::Singularity { .. })));
    }

    #[test]
    fn plant_structure_is_exact() {
        let c = PhysicalConstants::default();
        let sys = linearize_plant(r0(), &c, LinearizationSign::Positive).unwrap();
        let w2 = c.mu / r0().powi(3);
        for i in 0..4 {
            for j in 0..4 {
                let want = match (i, j) {
                    (0, 2) | (1, 3) => 1.0,
                    (2, 0) | (3, 1) => w2,
                    _ => 0.0,
                };
                assert_eq!(sys.a[(i, j)], want, "A[{i}][{j}]");
            }
        }
        assert!((w2 - 4.104e-7).abs() < 1e-9);
        assert_eq!(rank(&controllability_matrix(&sys), None), 4);
        assert_eq!(rank(&observability_matrix(&sys), None), 4);
    }

    #[test]
    fn plant_eigenvalues_are_saddle_pairs() {
        let c = PhysicalConstants::default();
        let sys = linearize_plant(r0(), &c, LinearizationSign::Positive).unwrap();
        let w = (c.mu / r0().powi(3)).sqrt();
        let s = eigenvalues(&sys.a).unwrap();
        let want = crate::linalg::Spectrum::from_real(&[w, w, -w, -w]);
        assert!(s.distance(&want) <= 1e-9 * w);
        assert!((w - 6.406e-4).abs() < 1e-6);

        let restoring = linearize_plant(r0(), &c, LinearizationSign::Negative).unwrap();
        let s = eigenvalues(&restoring.a).unwrap();
        assert!(s.values().iter().all(|z| z.re.abs() < 1e-12 && (z.im.abs() - w).abs() < 1e-12));
    }

    #[test]
    fn invariants_of_motion() {
        let s = OrbitState::new([1.0, 2.0], [3.0, 5.0]);
        assert_eq!(s.angular_momentum(), 1.0 * 5.0 - 2.0 * 3.0);
        assert_eq!(OrbitState::from_slice(&s.to_array()), s);
    }
}
