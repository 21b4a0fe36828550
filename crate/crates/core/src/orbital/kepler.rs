use super::{norm2, OrbitState, OrbitalError};

const SERIES_LIMIT: f64 = 0.1;
const MAX_ITERATIONS: usize = 100;

/// Stumpff function C(z) = (1 − cos√z)/z, continued through z = 0 and z < 0.
pub fn stumpff_c(z: f64) -> f64 {
    if z.abs() < SERIES_LIMIT {
        // Σ (−z)^k / (2k+2)!
        let mut term = 0.5;
        let mut sum = term;
        for k in 1..10 {
            term *= -z / (((2 * k + 1) * (2 * k + 2)) as f64);
            sum += term;
        }
        sum
    } else if z > 0.0 {
        (1.0 - z.sqrt().cos()) / z
    } else {
        ((-z).sqrt().cosh() - 1.0) / -z
    }
}

/// Stumpff function S(z) = (√z − sin√z)/z^{3/2}, continued through z = 0 and z < 0.
pub fn stumpff_s(z: f64) -> f64 {
    if z.abs() < SERIES_LIMIT {
        // Σ (−z)^k / (2k+3)!
        let mut term = 1.0 / 6.0;
        let mut sum = term;
        for k in 1..10 {
            term *= -z / (((2 * k + 2) * (2 * k + 3)) as f64);
            sum += term;
        }
        sum
    } else if z > 0.0 {
        let s = z.sqrt();
        (s - s.sin()) / (s * z)
    } else {
        let s = (-z).sqrt();
        (s.sinh() - s) / (s * -z)
    }
}

/// Two-body propagation of `state` by `dt` seconds using universal
/// variables. Valid for elliptic, parabolic and hyperbolic orbits and for
/// negative `dt`.
pub fn propagate_kepler(state: &OrbitState, dt: f64, mu: f64) -> Result<OrbitState, OrbitalError> {
    let r0v = state.position;
    let v0v = state.velocity;
    let r0 = norm2(r0v);
    if !(r0 >= 1.0) {
        return Err(OrbitalError::Singularity { radius_km: r0 });
    }
    if dt == 0.0 {
        return Ok(*state);
    }
    let sqrt_mu = mu.sqrt();
    let v2 = v0v[0] * v0v[0] + v0v[1] * v0v[1];
    let sigma0 = (r0v[0] * v0v[0] + r0v[1] * v0v[1]) / sqrt_mu;
    let alpha = 2.0 / r0 - v2 / mu;

    // Universal Kepler equation; its derivative in χ is the radius, so the
    // residual is strictly increasing.
    let residual = |chi: f64| {
        let z = alpha * chi * chi;
        let c = stumpff_c(z);
        let s = stumpff_s(z);
        let f = sigma0 * chi * chi * c + (1.0 - alpha * r0) * chi.powi(3) * s + r0 * chi - sqrt_mu * dt;
        let df = sigma0 * chi * (1.0 - z * s) + (1.0 - alpha * r0) * chi * chi * c + r0;
        (f, df)
    };

    let mut chi = if alpha > 0.0 {
        sqrt_mu * alpha * dt
    } else {
        sqrt_mu * dt / r0
    };
    // Bracket the root.
    let (mut lo, mut hi) = if dt > 0.0 { (0.0, chi.max(1e-12)) } else { (chi.min(-1e-12), 0.0) };
    let mut step = (hi - lo).abs().max(1.0);
    for _ in 0..200 {
        if residual(hi).0 > 0.0 {
            break;
        }
        lo = hi;
        hi += step;
        step *= 2.0;
    }
    step = (hi - lo).abs().max(1.0);
    for _ in 0..200 {
        if residual(lo).0 < 0.0 {
            break;
        }
        hi = lo;
        lo -= step;
        step *= 2.0;
    }
    let (flo, fhi) = (residual(lo).0, residual(hi).0);
    if !(flo <= 0.0 && fhi >= 0.0) {
        return Err(OrbitalError::NoConvergence(format!(
            "could not bracket the universal anomaly for dt = {dt}"
        )));
    }
    if !(lo..=hi).contains(&chi) {
        chi = 0.5 * (lo + hi);
    }

    let mut converged = false;
    for _ in 0..MAX_ITERATIONS {
        let (f, df) = residual(chi);
        if f == 0.0 {
            converged = true;
            break;
        }
        if f < 0.0 {
            lo = chi;
        } else {
            hi = chi;
        }
        let newton = chi - f / df;
        let next = if newton > lo && newton < hi && df > 0.0 {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let delta = (next - chi).abs();
        chi = next;
        if delta <= 4.0 * f64::EPSILON * chi.abs().max(1e-300) || hi - lo <= 4.0 * f64::EPSILON * chi.abs() {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(OrbitalError::NoConvergence(format!(
            "universal Kepler equation did not converge for dt = {dt}"
        )));
    }

    let z = alpha * chi * chi;
    let c = stumpff_c(z);
    let s = stumpff_s(z);
    let f = 1.0 - chi * chi / r0 * c;
    let g = dt - chi.powi(3) / sqrt_mu * s;
    let position = [f * r0v[0] + g * v0v[0], f * r0v[1] + g * v0v[1]];
    let r = norm2(position);
    let fdot = sqrt_mu / (r * r0) * (z * s - 1.0) * chi;
    let gdot = 1.0 - chi * chi / r * c;
    let velocity = [fdot * r0v[0] + gdot * v0v[0], fdot * r0v[1] + gdot * v0v[1]];
    if !(position.iter().chain(velocity.iter()).all(|v| v.is_finite())) {
        return Err(OrbitalError::NoConvergence(format!("non-finite state after dt = {dt}")));
    }
    Ok(OrbitState { position, velocity })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::Dopri5;
    use crate::orbital::{two_body_srp_derivative, PhysicalConstants};
    use std::f64::consts::PI;

    #[test]
    fn stumpff_continuity_at_zero() {
        for z in [-0.1 - 1e-12, -0.1 + 1e-12, 0.1 - 1e-12, 0.1 + 1e-12] {
            let (c_lo, s_lo) = (stumpff_c(z), stumpff_s(z));
            let z2 = if z.abs() < 0.1 { z.signum() * 0.1 * (1.0 + 1e-11) } else { z.signum() * 0.1 * (1.0 - 1e-11) };
            assert!((c_lo - stumpff_c(z2)).abs() < 1e-12);
            assert!((s_lo - stumpff_s(z2)).abs() < 1e-12);
        }
        assert_eq!(stumpff_c(0.0), 0.5);
        assert_eq!(stumpff_s(0.0), 1.0 / 6.0);
        assert!((stumpff_c(PI * PI) - 2.0 / (PI * PI)).abs() < 1e-15);
    }

    #[test]
    fn circular_orbit_quarter_period() {
        let mu = PhysicalConstants::default().mu;
        let r = 7000.0;
        let v = (mu / r).sqrt();
        let period = 2.0 * PI * (r.powi(3) / mu).sqrt();
        let s = OrbitState::new([r, 0.0], [0.0, v]);
        let q = propagate_kepler(&s, period / 4.0, mu).unwrap();
        assert!(q.position[0].abs() < 1e-8 && (q.position[1] - r).abs() < 1e-8);
        assert!((q.velocity[0] + v).abs() < 1e-11);
        let back = propagate_kepler(&q, -period / 4.0, mu).unwrap();
        assert!((back.position[0] - r).abs() < 1e-8 && back.position[1].abs() < 1e-8);
    }

    #[test]
    fn matches_numerical_integration() {
        let k = PhysicalConstants::default();
        let cases = [
            OrbitState::new([4292.87, 8924.17], [7.8, 0.0]),
            OrbitState::new([7000.0, 0.0], [0.0, 11.0]),
            OrbitState::new([7000.0, 100.0], [1.0, 9.0]),
        ];
        for s in cases {
            let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
                let d = two_body_srp_derivative(&OrbitState::from_slice(y), [0.0; 2], [0.0; 2], &k).unwrap();
                dy.copy_from_slice(&d);
            };
            let y = Dopri5::new(1e-12, 1e-12).propagate(rhs, 0.0, &s.to_array(), 3000.0).unwrap();
            let q = propagate_kepler(&s, 3000.0, k.mu).unwrap();
            let dp = (q.position[0] - y[0]).hypot(q.position[1] - y[1]);
            let dv = (q.velocity[0] - y[2]).hypot(q.velocity[1] - y[3]);
            assert!(dp < 1e-5, "position mismatch {dp}");
            assert!(dv < 1e-8, "velocity mismatch {dv}");
        }
    }

    #[test]
    fn conserves_energy_and_momentum() {
        let mu = PhysicalConstants::default().mu;
        let s = OrbitState::new([4292.87, 8924.17], [7.8, 0.0]);
        for dt in [1.0, 100.0, 4000.0, 20000.0, -5000.0] {
            let q = propagate_kepler(&s, dt, mu).unwrap();
            assert!((q.energy(mu) - s.energy(mu)).abs() < 1e-10 * s.energy(mu).abs());
            assert!((q.angular_momentum() - s.angular_momentum()).abs() < 1e-10 * s.angular_momentum().abs());
        }
    }
}
