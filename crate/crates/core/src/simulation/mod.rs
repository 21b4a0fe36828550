//! Closed-loop maneuver simulation: scenario definition, the nonlinear (or
//! linearized) plant coupled with observer and control law, performance
//! metrics, method comparison and the SRP drift study.

mod drift;
mod metrics;
mod report;
mod run;

pub use drift::{srp_drift_study, DriftSample, DriftStudy};
pub use metrics::{compute_metrics, estimation_error_series, EstimationErrorSample, Metrics};
pub use report::{compare_methods, ComparisonReport, MethodReport, PaperReference, PAPER_REFERENCE};
pub use run::{design_gains, output_grid, run_scenario, Design, Reference, SimulationRecord};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::integrate::IntegrateError;
use crate::lti::StateSpace;
use crate::linalg::{Matrix, Spectrum};
use crate::orbital::{
    linearize_plant, LinearizationSign, OrbitState, OrbitalError, PhysicalConstants, SpacecraftParams, SrpConfig, TransferDirection,
};
use crate::synthesis::{SynthesisError, Weights};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimulationError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("synthesis failed: {0}")]
    Synthesis(#[from] SynthesisError),
    #[error(transparent)]
    Orbital(#[from] OrbitalError),
    #[error("integration failed: {0}")]
    Integrate(#[from] IntegrateError),
    #[error("not applicable: {0}")]
    NotApplicable(String),
}

/// Control configuration being simulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// No control, no observer.
    Uncontrolled,
    /// LQR on the true state.
    #[serde(alias = "a_lqr", alias = "A")]
    Lqr,
    /// Full-order observer running, no control.
    #[serde(alias = "b_observer_only", alias = "B")]
    ObserverOnly,
    /// LQR on the observer estimate.
    #[default]
    #[serde(alias = "c_observer_lqr", alias = "C")]
    ObserverLqr,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Uncontrolled, Method::Lqr, Method::ObserverOnly, Method::ObserverLqr];

    pub fn has_observer(self) -> bool {
        matches!(self, Method::ObserverOnly | Method::ObserverLqr)
    }

    pub fn has_control(self) -> bool {
        matches!(self, Method::Lqr | Method::ObserverLqr)
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Uncontrolled => "uncontrolled",
            Method::Lqr => "lqr",
            Method::ObserverOnly => "observer_only",
            Method::ObserverLqr => "observer_lqr",
        }
    }
}

/// What the controller tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceMode {
    /// Two-body arc from the initial position with the Lambert departure
    /// velocity that reaches the target position at the horizon.
    #[default]
    LambertArc,
    /// The target state itself, held fixed.
    ConstantSetpoint,
}

/// Dynamics used for the simulated spacecraft (and matched by the observer).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlantMode {
    /// Point-mass gravity about the reference trajectory.
    #[default]
    Nonlinear,
    /// The linearized plant `ẋ = Ax + B(u + a_srp)` in deviation coordinates.
    Linear,
}

/// Disturbance input matrix `G` used by H∞ synthesis.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisturbanceMatrix {
    /// `G = B`: the disturbance enters through the control channel.
    #[default]
    MatchedViaB,
    Custom(Matrix),
}

/// Offset of the default initial estimate from the true initial state.
pub const DEFAULT_ESTIMATE_OFFSET: [f64; 4] = [1.0, 1.0, 0.0, 0.0];

/// Complete description of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub x0: OrbitState,
    pub xf: OrbitState,
    /// s
    pub horizon: f64,
    /// s
    pub output_dt: f64,
    pub rtol: f64,
    pub atol: f64,
    pub srp: SrpConfig,
    pub spacecraft: SpacecraftParams,
    pub constants: PhysicalConstants,
    pub weights: Weights,
    pub observer_speed_factor: f64,
    /// Observer poles before scaling by the speed factor; the LQR
    /// closed-loop poles when absent.
    pub observer_base_poles: Option<Spectrum>,
    /// Measurement matrix (2×4); position measurement `[I 0]` when absent.
    pub output_matrix: Option<Matrix>,
    pub method: Method,
    pub reference_mode: ReferenceMode,
    pub plant_mode: PlantMode,
    pub linearization_sign: LinearizationSign,
    pub transfer_direction: TransferDirection,
    /// Initial observer estimate; `x0` shifted by [`DEFAULT_ESTIMATE_OFFSET`]
    /// when absent.
    pub xhat0: Option<OrbitState>,
    /// Standard deviation of the position measurement noise per axis, km.
    pub measurement_noise_sigma: [f64; 2],
    pub noise_seed: u64,
    pub disturbance_matrix_mode: DisturbanceMatrix,
    /// Bracket for the H∞ γ bisection.
    pub gamma_range: [f64; 2],
    /// Settling band as a fraction of the initial position error.
    pub settle_band: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            x0: OrbitState::new([4292.87, 8924.17], [7.8, 0.0]),
            xf: OrbitState::new([-2000.0, 8878.0], [-2.728, -6.56]),
            horizon: 4000.0,
            output_dt: 0.1,
            rtol: 1e-8,
            atol: 1e-9,
            srp: SrpConfig::default(),
            spacecraft: SpacecraftParams::default(),
            constants: PhysicalConstants::default(),
            weights: Weights::identity(4, 2),
            observer_speed_factor: 4.0,
            observer_base_poles: None,
            output_matrix: None,
            method: Method::default(),
            reference_mode: ReferenceMode::default(),
            plant_mode: PlantMode::default(),
            linearization_sign: LinearizationSign::default(),
            transfer_direction: TransferDirection::default(),
            xhat0: None,
            measurement_noise_sigma: [0.0, 0.0],
            noise_seed: 0,
            disturbance_matrix_mode: DisturbanceMatrix::default(),
            gamma_range: [0.1, 1000.0],
            settle_band: 0.02,
        }
    }
}

fn finite_state(name: &str, s: &OrbitState) -> Result<(), SimulationError> {
    if s.to_array().iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(SimulationError::InvalidScenario(format!("{name} has non-finite entries")))
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<(), SimulationError> {
        let bad = |msg: String| Err(SimulationError::InvalidScenario(msg));
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("horizon {} must be positive", self.horizon));
        }
        if !(self.output_dt > 0.0 && self.output_dt <= self.horizon) {
            return bad(format!("output_dt {} must be in (0, horizon]", self.output_dt));
        }
        if self.horizon / self.output_dt > 1e7 {
            return bad("output grid exceeds 10 million samples".into());
        }
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return bad("rtol and atol must be positive".into());
        }
        finite_state("x0", &self.x0)?;
        finite_state("xf", &self.xf)?;
        if let Some(xh) = &self.xhat0 {
            finite_state("xhat0", xh)?;
        }
        if self.x0.radius() < 1.0 {
            return bad("x0 lies inside the 1 km singularity guard".into());
        }
        if !(self.constants.mu > 0.0 && self.constants.c_light > 0.0) {
            return bad("physical constants must be positive".into());
        }
        let invalid = |e: &dyn std::fmt::Display| SimulationError::InvalidScenario(e.to_string());
        self.srp.validate().map_err(|e| invalid(&e))?;
        self.spacecraft.validate().map_err(|e| invalid(&e))?;
        self.weights.validate(4, 2).map_err(|e| invalid(&e))?;
        if !(self.observer_speed_factor > 0.0 && self.observer_speed_factor.is_finite()) {
            return bad(format!("observer_speed_factor {} must be positive", self.observer_speed_factor));
        }
        if let Some(poles) = &self.observer_base_poles {
            if poles.len() != 4 || !poles.is_conjugate_closed(1e-12) || !(poles.max_real() < 0.0) {
                return bad("observer_base_poles must be 4 conjugate-closed poles in the open left half-plane".into());
            }
        }
        if let Some(c) = &self.output_matrix {
            if c.shape() != (2, 4) || !c.is_finite() {
                return bad(format!("output_matrix must be a finite 2x4 matrix, got {:?}", c.shape()));
            }
        }
        if self.measurement_noise_sigma.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return bad("measurement_noise_sigma must be non-negative".into());
        }
        if let DisturbanceMatrix::Custom(g) = &self.disturbance_matrix_mode {
            if g.rows() != 4 || g.cols() == 0 {
                return bad(format!("custom disturbance matrix must have 4 rows, got {:?}", g.shape()));
            }
        }
        let [lo, hi] = self.gamma_range;
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return bad(format!("gamma_range [{lo}, {hi}] must satisfy 0 < lo < hi"));
        }
        if !(self.settle_band > 0.0 && self.settle_band < 1.0) {
            return bad(format!("settle_band {} must be in (0, 1)", self.settle_band));
        }
        Ok(())
    }

    /// Initial observer estimate.
    pub fn initial_estimate(&self) -> OrbitState {
        self.xhat0.unwrap_or_else(|| {
            let x = self.x0.to_array();
            OrbitState::from_slice(&[
                x[0] + DEFAULT_ESTIMATE_OFFSET[0],
                x[1] + DEFAULT_ESTIMATE_OFFSET[1],
                x[2] + DEFAULT_ESTIMATE_OFFSET[2],
                x[3] + DEFAULT_ESTIMATE_OFFSET[3],
            ])
        })
    }

    /// Linearized plant about `x0`, with the scenario's measurement matrix.
    pub fn plant(&self) -> Result<StateSpace, SimulationError> {
        let mut plant = linearize_plant(self.linearization_radius(), &self.constants, self.linearization_sign)?;
        if let Some(c) = &self.output_matrix {
            plant.c = c.clone();
        }
        Ok(plant)
    }

    /// Linearization radius ‖x0 position‖.
    pub fn linearization_radius(&self) -> f64 {
        self.x0.radius()
    }

    pub fn with_method(&self, method: Method) -> Self {
        Self { method, ..self.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_json() {
        let s = Scenario::default();
        let text = serde_json::to_string(&s).unwrap();
        let back: Scenario = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
        assert!(s.validate().is_ok());
    }

    #[test]
    fn missing_fields_take_defaults() {
        let s: Scenario = serde_json::from_str(r#"{"horizon": 200, "method": "lqr"}"#).unwrap();
        assert_eq!(s.horizon, 200.0);
        assert_eq!(s.method, Method::Lqr);
        assert_eq!(s.x0, Scenario::default().x0);
        let s: Scenario = serde_json::from_str(r#"{"method": "C"}"#).unwrap();
        assert_eq!(s.method, Method::ObserverLqr);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<Scenario>(r#"{"horizn": 200}"#).is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        let mut s = Scenario { horizon: -1.0, ..Scenario::default() };
        assert!(s.validate().is_err());
        s.horizon = 10.0;
        s.output_dt = 20.0;
        assert!(s.validate().is_err());
        let s = Scenario { rtol: 0.0, ..Scenario::default() };
        assert!(s.validate().is_err());
        let s = Scenario { measurement_noise_sigma: [-1.0, 0.0], ..Scenario::default() };
        assert!(s.validate().is_err());
    }

    #[test]
    fn default_estimate_is_offset() {
        let s = Scenario::default();
        let xh = s.initial_estimate();
        assert_eq!(xh.position[0], s.x0.position[0] + 1.0);
        assert_eq!(xh.velocity, s.x0.velocity);
    }
}
