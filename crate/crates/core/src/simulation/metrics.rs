use serde::{Deserialize, Serialize};

use super::{SimulationError, SimulationRecord};
use crate::lti::settling_time;
use crate::orbital::OrbitState;

/// Performance of one run, measured against the target position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// ‖p(T) − p_f‖, km
    pub terminal_error: f64,
    /// `sqrt((1/T)∫‖p − p_f‖² dt)`, km
    pub rms_error: f64,
    /// `∫uᵀu dt`, km²/s³
    pub control_energy: f64,
    /// First time after which the position error stays within the settling
    /// band; `None` if it never does.
    pub settling_time: Option<f64>,
}

fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

pub fn compute_metrics(record: &SimulationRecord, xf: &OrbitState, settle_band: f64) -> Result<Metrics, SimulationError> {
    let n = record.times.len();
    if n == 0 || record.true_states.len() != n || record.controls.len() != n {
        return Err(SimulationError::InvalidScenario("record series are empty or inconsistent".into()));
    }
    let [px, py] = xf.position;
    let errors: Vec<f64> = record.true_states.iter().map(|x| (x[0] - px).hypot(x[1] - py)).collect();
    let squared: Vec<f64> = errors.iter().map(|e| e * e).collect();
    let effort: Vec<f64> = record.controls.iter().map(|u| u[0] * u[0] + u[1] * u[1]).collect();
    let span = record.times[n - 1] - record.times[0];
    let rms_error = if span > 0.0 { (trapezoid(&record.times, &squared) / span).sqrt() } else { errors[0] };
    Ok(Metrics {
        terminal_error: errors[n - 1],
        rms_error,
        control_energy: trapezoid(&record.times, &effort),
        settling_time: settling_time(&record.times, &errors, 0.0, settle_band),
    })
}

/// Estimation error magnitudes at one output time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimationErrorSample {
    pub t: f64,
    /// ‖p − p̂‖, km
    pub position: f64,
    /// ‖v − v̂‖, km/s
    pub velocity: f64,
}

pub fn estimation_error_series(record: &SimulationRecord) -> Result<Vec<EstimationErrorSample>, SimulationError> {
    let errors = record.estimation_error.as_ref().ok_or_else(|| {
        SimulationError::NotApplicable(format!("method {} runs no observer", record.method.name()))
    })?;
    Ok(record
        .times
        .iter()
        .zip(errors)
        .map(|(&t, e)| EstimationErrorSample {
            t,
            position: e[0].hypot(e[1]),
            velocity: e[2].hypot(e[3]),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulation::Method;

    fn record(times: Vec<f64>, states: Vec<[f64; 4]>, controls: Vec<[f64; 2]>) -> SimulationRecord {
        SimulationRecord {
            method: Method::Lqr,
            reference: states.clone(),
            times,
            true_states: states,
            estimates: None,
            controls,
            estimation_error: None,
        }
    }

    #[test]
    fn constant_control_energy() {
        let times: Vec<f64> = (0..=10).map(|k| k as f64).collect();
        let rec = record(times, vec![[0.0; 4]; 11], vec![[3.0, 4.0]; 11]);
        let m = compute_metrics(&rec, &OrbitState::new([0.0, 0.0], [0.0, 0.0]), 0.02).unwrap();
        assert!((m.control_energy - 250.0).abs() < 1e-12);
        assert_eq!(m.terminal_error, 0.0);
        assert_eq!(m.settling_time, Some(0.0));
    }

    #[test]
    fn linear_error_rms() {
        // ‖p − p_f‖ = |g|·t: RMS = |g|·T/√3.
        let g = [0.3, 0.4];
        let t_end = 20.0;
        let times: Vec<f64> = (0..=20000).map(|k| k as f64 * 1e-3).collect();
        let states: Vec<[f64; 4]> = times.iter().map(|t| [g[0] * t, g[1] * t, 0.0, 0.0]).collect();
        let rec = record(times, states, vec![[0.0; 2]; 20001]);
        let m = compute_metrics(&rec, &OrbitState::new([0.0, 0.0], [0.0, 0.0]), 0.02).unwrap();
        let want = 0.5 * t_end / 3f64.sqrt();
        assert!((m.rms_error - want).abs() < 1e-6, "{}", m.rms_error);
        assert!((m.terminal_error - 10.0).abs() < 1e-12);
        assert_eq!(m.settling_time, None);
    }

    #[test]
    fn decaying_error_settles() {
        let times: Vec<f64> = (0..=1000).map(|k| k as f64 * 0.01).collect();
        let states: Vec<[f64; 4]> = times.iter().map(|t| [(-t).exp(), 0.0, 0.0, 0.0]).collect();
        let rec = record(times, states, vec![[0.0; 2]; 1001]);
        let m = compute_metrics(&rec, &OrbitState::new([0.0, 0.0], [0.0, 0.0]), 0.02).unwrap();
        let ts = m.settling_time.unwrap();
        assert!((ts - 50f64.ln()).abs() < 0.011, "{ts}");
    }

    #[test]
    fn estimation_error_needs_observer() {
        let rec = record(vec![0.0], vec![[0.0; 4]], vec![[0.0; 2]]);
        assert!(matches!(estimation_error_series(&rec), Err(SimulationError::NotApplicable(_))));
        let rec = SimulationRecord { estimation_error: Some(vec![[3.0, 4.0, 0.0, 1.0]]), ..rec };
        let e = estimation_error_series(&rec).unwrap();
        assert_eq!(e[0].position, 5.0);
        assert_eq!(e[0].velocity, 1.0);
    }
}
