use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use super::{norm2, stumpff_c, stumpff_s, OrbitalError, PhysicalConstants};

const MAX_ITERATIONS: usize = 100;
const TOF_TOLERANCE: f64 = 1e-9;
const Z_UPPER: f64 = 4.0 * PI * PI * (1.0 - 1e-9);
const Z_FLOOR: f64 = -1e7;

/// Sense of motion along the transfer arc.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransferDirection {
    /// Counter-clockwise, positive angular momentum.
    #[default]
    Prograde,
    Retrograde,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambertSolution {
    /// Departure velocity, km/s.
    pub v1: [f64; 2],
    /// Arrival velocity, km/s.
    pub v2: [f64; 2],
    pub iterations: usize,
}

/// Initial velocity from speed `v0`, launch direction `phi0` and rotation
/// `theta0`: `v0·(cos(π/2 − φ₀ + θ₀), sin(π/2 − φ₀ + θ₀))`.
pub fn lambert_initial_velocity(v0: f64, phi0: f64, theta0: f64) -> [f64; 2] {
    let (s, c) = (FRAC_PI_2 - phi0 + theta0).sin_cos();
    [v0 * c, v0 * s]
}

/// Single-revolution Lambert arc from `r1` to `r2` in `tof` seconds
/// (universal variables, Newton iteration on z kept inside a bisection
/// bracket).
pub fn lambert_solve(
    r1: [f64; 2],
    r2: [f64; 2],
    tof: f64,
    direction: TransferDirection,
    constants: &PhysicalConstants,
) -> Result<LambertSolution, OrbitalError> {
    let mu = constants.mu;
    let sqrt_mu = mu.sqrt();
    if !(tof > 0.0 && tof.is_finite()) {
        return Err(OrbitalError::InvalidParameter(format!("time of flight {tof} must be positive")));
    }
    let n1 = norm2(r1);
    let n2 = norm2(r2);
    if !(n1 >= 1.0 && n2 >= 1.0) {
        return Err(OrbitalError::Singularity { radius_km: n1.min(n2) });
    }
    if r1 == r2 {
        return Err(OrbitalError::DegenerateGeometry("identical endpoints".into()));
    }

    let cross = r1[0] * r2[1] - r1[1] * r2[0];
    let dot = r1[0] * r2[0] + r1[1] * r2[1];
    let mut dtheta = cross.atan2(dot);
    if dtheta < 0.0 {
        dtheta += 2.0 * PI;
    }
    if direction == TransferDirection::Retrograde {
        dtheta = 2.0 * PI - dtheta;
    }
    let one_minus_cos = 1.0 - dtheta.cos();
    if one_minus_cos < 1e-14 {
        return Err(OrbitalError::DegenerateGeometry(
            "endpoints are radially aligned on the same side of the attractor".into(),
        ));
    }
    let a_geom = dtheta.sin() * (n1 * n2 / one_minus_cos).sqrt();

    let y_of = |z: f64| n1 + n2 + a_geom * (z * stumpff_s(z) - 1.0) / stumpff_c(z).sqrt();
    // Scaled time of flight √μ·t(z), or None where y(z) < 0.
    let time_of = |z: f64| {
        let y = y_of(z);
        if y < 0.0 {
            return None;
        }
        let c = stumpff_c(z);
        let s = stumpff_s(z);
        Some(((y / c).powf(1.5) * s + a_geom * y.sqrt()) / sqrt_mu)
    };
    let slope_of = |z: f64| {
        let y = y_of(z);
        let c = stumpff_c(z);
        let s = stumpff_s(z);
        let d = if z.abs() < 1e-6 {
            2f64.sqrt() / 40.0 * y.powf(1.5) + a_geom / 8.0 * (y.sqrt() + a_geom * (0.5 / y).sqrt())
        } else {
            (y / c).powf(1.5) * ((c - 1.5 * s / c) / (2.0 * z) + 0.75 * s * s / c)
                + a_geom / 8.0 * (3.0 * s / c * y.sqrt() + a_geom * (c / y).sqrt())
        };
        d / sqrt_mu
    };

    let hi_time = time_of(Z_UPPER).unwrap_or(f64::INFINITY);
    if hi_time < tof {
        return Err(OrbitalError::InfeasibleTransfer(format!(
            "time of flight {tof} s exceeds the single-revolution range"
        )));
    }
    let mut hi = Z_UPPER;
    let mut lo = 0.0;
    let mut step = 1.0;
    loop {
        match time_of(lo) {
            Some(t) if t > tof => {
                hi = lo;
                lo -= step;
                step *= 2.0;
                if lo < Z_FLOOR {
                    return Err(OrbitalError::InfeasibleTransfer(format!(
                        "time of flight {tof} s is shorter than any arc with this geometry"
                    )));
                }
            }
            _ => break,
        }
    }

    let residual = |z: f64| time_of(z).map(|t| t - tof);
    let mut z = 0.5 * (lo + hi);
    let tol = TOF_TOLERANCE * tof.max(1.0);
    let mut iterations = 0;
    let mut best = f64::INFINITY;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let Some(f) = residual(z) else {
            lo = z;
            z = 0.5 * (lo + hi);
            continue;
        };
        best = f.abs();
        if f.abs() <= 1e-3 * tol {
            break;
        }
        if f < 0.0 {
            lo = z;
        } else {
            hi = z;
        }
        let d = slope_of(z);
        let newton = z - f / d;
        let next = if d > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if next == z || hi - lo <= 4.0 * f64::EPSILON * z.abs().max(1.0) {
            break;
        }
        z = next;
    }
    if !(best <= tol) {
        return Err(OrbitalError::NoConvergence(format!(
            "time-of-flight residual {best:.3e} s after {iterations} iterations"
        )));
    }

    let y = y_of(z);
    let c = stumpff_c(z);
    let s = stumpff_s(z);
    let chi = (y / c).sqrt();
    // Radial and transverse components avoid the f,g singularity at 180°.
    let sigma = (a_geom * y.sqrt() - n1 * chi * (1.0 - z * s)) / y;
    let v_radial = sqrt_mu * sigma / n1;
    let p = n1 * n2 * one_minus_cos / y;
    if p < 1.0 {
        // Semi-latus rectum below the singularity guard: the only arc with
        // this flight time passes through the attractor.
        return Err(OrbitalError::InfeasibleTransfer(format!(
            "time of flight {tof} s needs a near-rectilinear arc (p = {p:.3e} km)"
        )));
    }
    let v_transverse = (mu * p).sqrt() / n1;
    let rhat = [r1[0] / n1, r1[1] / n1];
    let that = match direction {
        TransferDirection::Prograde => [-rhat[1], rhat[0]],
        TransferDirection::Retrograde => [rhat[1], -rhat[0]],
    };
    let v1 = [
        v_radial * rhat[0] + v_transverse * that[0],
        v_radial * rhat[1] + v_transverse * that[1],
    ];
    let fdot = sqrt_mu / (n1 * n2) * chi * (z * s - 1.0);
    let gdot = 1.0 - y / n2;
    let v2 = [fdot * r1[0] + gdot * v1[0], fdot * r1[1] + gdot * v1[1]];
    if !v1.iter().chain(v2.iter()).all(|v| v.is_finite()) {
        return Err(OrbitalError::NoConvergence("non-finite transfer velocity".into()));
    }
    Ok(LambertSolution { v1, v2, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::Dopri5;
    use crate::orbital::{two_body_srp_derivative, OrbitState};

    fn propagate_numerically(r: [f64; 2], v: [f64; 2], t: f64) -> [f64; 4] {
        let k = PhysicalConstants::default();
        let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
            let d = two_body_srp_derivative(&OrbitState::from_slice(y), [0.0; 2], [0.0; 2], &k).unwrap();
            dy.copy_from_slice(&d);
        };
        let y = Dopri5::new(1e-11, 1e-11).propagate(rhs, 0.0, &[r[0], r[1], v[0], v[1]], t).unwrap();
        [y[0], y[1], y[2], y[3]]
    }

    #[test]
    fn initial_velocity_examples() {
        let v = lambert_initial_velocity(7.8, FRAC_PI_2, 0.0);
        assert!((v[0] - 7.8).abs() < 1e-15 && v[1].abs() < 1e-15);
        assert_eq!(lambert_initial_velocity(0.0, 1.0, 0.3), [0.0, 0.0]);
        let v = lambert_initial_velocity(3.0, 0.4, 0.4);
        assert!(v[0].abs() < 1e-15 && (v[1] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn hohmann_half_orbit() {
        let k = PhysicalConstants::default();
        let tof = PI * (8500f64.powi(3) / k.mu).sqrt();
        assert!((tof - 3899.504).abs() < 1e-3);
        let sol = lambert_solve([7000.0, 0.0], [-10000.0, 0.0], tof, TransferDirection::Prograde, &k).unwrap();
        let perigee = (k.mu * (2.0 / 7000.0 - 1.0 / 8500.0)).sqrt();
        assert!((norm2(sol.v1) - perigee).abs() < 1e-6);
        assert!((perigee - 8.1845).abs() < 5e-4);
        assert!(sol.v1[0].abs() < 1e-6 && sol.v1[1] > 0.0);
        let apogee = (k.mu * (2.0 / 10000.0 - 1.0 / 8500.0)).sqrt();
        assert!((sol.v2[1] + apogee).abs() < 1e-6);
    }

    #[test]
    fn scenario_endpoints_close() {
        let k = PhysicalConstants::default();
        let r1 = [4292.87, 8924.17];
        let r2 = [-2000.0, 8878.0];
        let sol = lambert_solve(r1, r2, 4000.0, TransferDirection::Prograde, &k).unwrap();
        let y = propagate_numerically(r1, sol.v1, 4000.0);
        assert!((y[0] - r2[0]).hypot(y[1] - r2[1]) < 1e-3);
        assert!((y[2] - sol.v2[0]).hypot(y[3] - sol.v2[1]) < 1e-6);
    }

    #[test]
    fn retrograde_has_negative_momentum() {
        let k = PhysicalConstants::default();
        let r1 = [7000.0, 0.0];
        let r2 = [0.0, 8000.0];
        let sol = lambert_solve(r1, r2, 3000.0, TransferDirection::Retrograde, &k).unwrap();
        assert!(r1[0] * sol.v1[1] - r1[1] * sol.v1[0] < 0.0);
        let y = propagate_numerically(r1, sol.v1, 3000.0);
        assert!((y[0] - r2[0]).hypot(y[1] - r2[1]) < 1e-3);
    }

    #[test]
    fn degenerate_and_invalid_requests() {
        let k = PhysicalConstants::default();
        let r = [7000.0, 1.0];
        assert!(matches!(
            lambert_solve(r, r, 100.0, TransferDirection::Prograde, &k),
            Err(OrbitalError::DegenerateGeometry(_))
        ));
        assert!(matches!(
            lambert_solve([7000.0, 0.0], [8000.0, 0.0], 100.0, TransferDirection::Prograde, &k),
            Err(OrbitalError::DegenerateGeometry(_))
        ));
        assert!(lambert_solve(r, [0.0, 7000.0], -1.0, TransferDirection::Prograde, &k).is_err());
    }

    #[test]
    fn arc_through_the_attractor_is_infeasible() {
        let k = PhysicalConstants::default();
        let err = lambert_solve([7000.0, 0.0], [0.0, -7000.0], 1.0, TransferDirection::Prograde, &k);
        assert!(matches!(err, Err(OrbitalError::InfeasibleTransfer(_))), "{err:?}");
    }

    #[test]
    fn randomized_closure() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let k = PhysicalConstants::default();
        let mut solved = 0;
        while solved < 50 {
            let ang1: f64 = rng.random_range(0.0..2.0 * PI);
            let ang2: f64 = ang1 + rng.random_range(0.2..2.0 * PI - 0.2);
            let n1: f64 = rng.random_range(6800.0..30000.0);
            let n2: f64 = rng.random_range(6800.0..30000.0);
            let r1 = [n1 * ang1.cos(), n1 * ang1.sin()];
            let r2 = [n2 * ang2.cos(), n2 * ang2.sin()];
            let tof: f64 = rng.random_range(1500.0..30000.0);
            let dir = if rng.random_bool(0.8) { TransferDirection::Prograde } else { TransferDirection::Retrograde };
            let sol = match lambert_solve(r1, r2, tof, dir, &k) {
                Ok(s) => s,
                Err(OrbitalError::InfeasibleTransfer(_)) => continue,
                Err(e) => panic!("{e}"),
            };
            // Skip arcs that dive through the attractor.
            if rmin(r1, sol.v1, k.mu) < 100.0 {
                continue;
            }
            let y = propagate_numerically(r1, sol.v1, tof);
            let miss = (y[0] - r2[0]).hypot(y[1] - r2[1]);
            assert!(miss < 1f64.max(1e-6 * n2), "miss {miss} km for {r1:?} -> {r2:?} in {tof}");
            solved += 1;
        }
    }

    fn rmin(r: [f64; 2], v: [f64; 2], mu: f64) -> f64 {
        let s = OrbitState::new(r, v);
        let h = s.angular_momentum();
        let energy = s.energy(mu);
        let e = (1.0 + 2.0 * energy * h * h / (mu * mu)).max(0.0).sqrt();
        h * h / mu / (1.0 + e)
    }
}
