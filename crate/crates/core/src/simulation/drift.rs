use serde::{Deserialize, Serialize};

use super::{Reference, SimulationError};
use crate::integrate::Dopri5;
use crate::orbital::{srp_accel, OrbitState, PhysicalConstants, SpacecraftParams, SrpConfig};

/// Spacing of the drift series, s.
pub const DRIFT_SAMPLE_INTERVAL: f64 = 60.0;
const DRIFT_RTOL: f64 = 1e-10;
const DRIFT_ATOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftSample {
    pub t: f64,
    /// ‖r_srp − r_ref‖, km
    pub deviation: f64,
    /// deviation / ‖r_ref‖
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftStudy {
    /// Inertial SRP acceleration applied, km/s²
    pub acceleration: [f64; 2],
    /// ½·|a|·T², km
    pub ballistic_estimate: f64,
    pub samples: Vec<DriftSample>,
}

impl DriftStudy {
    pub fn final_deviation(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.deviation)
    }
}

/// Propagates `orbit` with and without SRP and records how far apart the two
/// trajectories drift. The SRP-free trajectory is the analytic two-body arc;
/// the difference is integrated directly.
pub fn srp_drift_study(
    duration: f64,
    craft: &SpacecraftParams,
    srp: &SrpConfig,
    orbit: &OrbitState,
    constants: &PhysicalConstants,
) -> Result<DriftStudy, SimulationError> {
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(SimulationError::InvalidScenario(format!("drift duration {duration} must be positive")));
    }
    let invalid = |e: &dyn std::fmt::Display| SimulationError::InvalidScenario(e.to_string());
    craft.validate().map_err(|e| invalid(&e))?;
    srp.validate().map_err(|e| invalid(&e))?;
    let accel = srp_accel(srp, craft, constants);
    let reference = Reference::Arc { epoch: *orbit, mu: constants.mu };
    let mut times: Vec<f64> = (0..)
        .map(|k| k as f64 * DRIFT_SAMPLE_INTERVAL)
        .take_while(|t| *t < duration)
        .collect();
    times.push(duration);

    let failure = std::cell::RefCell::new(None);
    let rhs = |t: f64, d: &[f64], dy: &mut [f64]| {
        let rate = reference.state(t).and_then(|r| reference.unforced_deviation_rate(&r, d, constants.mu));
        match rate {
            Ok(rate) => {
                dy.copy_from_slice(&rate);
                dy[2] += accel[0];
                dy[3] += accel[1];
            }
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                dy.fill(f64::NAN);
            }
        }
    };
    let states = Dopri5::new(DRIFT_RTOL, DRIFT_ATOL).sample(rhs, 0.0, &[0.0; 4], &times);
    let states = match states {
        Ok(v) => v,
        Err(e) => {
            return Err(match failure.into_inner() {
                Some(orbital) => orbital.into(),
                None => e.into(),
            })
        }
    };
    let mut samples = Vec::with_capacity(times.len());
    for (&t, d) in times.iter().zip(&states) {
        let r = reference.state(t)?;
        let deviation = d[0].hypot(d[1]);
        samples.push(DriftSample { t, deviation, relative_error: deviation / r[0].hypot(r[1]) });
    }
    Ok(DriftStudy {
        acceleration: accel,
        ballistic_estimate: 0.5 * accel[0].hypot(accel[1]) * duration * duration,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn orbit() -> OrbitState {
        OrbitState::new([7000.0, 0.0], [0.0, 7.546])
    }

    #[test]
    fn no_srp_no_drift() {
        let study = srp_drift_study(
            3600.0,
            &SpacecraftParams::default(),
            &SrpConfig::default().disabled(),
            &orbit(),
            &PhysicalConstants::default(),
        )
        .unwrap();
        assert!(study.samples.iter().all(|s| s.deviation == 0.0));
        assert_eq!(study.samples.last().unwrap().t, 3600.0);
        assert_eq!(study.samples.len(), 61);
    }

    #[test]
    fn short_horizon_is_ballistic() {
        // Over a minute gravity gradients barely act on the deviation.
        let srp = SrpConfig::DirectMagnitude { magnitude_w: 1e-9, theta0: 0.3 };
        let study =
            srp_drift_study(60.0, &SpacecraftParams::default(), &srp, &orbit(), &PhysicalConstants::default()).unwrap();
        let rel = (study.final_deviation() - study.ballistic_estimate).abs() / study.ballistic_estimate;
        assert!(rel < 1e-3, "{rel}");
    }

    #[test]
    fn rejects_bad_duration() {
        let r = srp_drift_study(0.0, &SpacecraftParams::default(), &SrpConfig::default(), &orbit(), &PhysicalConstants::default());
        assert!(r.is_err());
    }
}
