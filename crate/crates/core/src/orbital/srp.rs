use serde::{Deserialize, Serialize};

use super::{OrbitalError, PhysicalConstants};

pub const SOLAR_CONSTANT: f64 = 1361.0;
pub const DEFAULT_SRP_MAGNITUDE: f64 = 1e-9;
pub const DEFAULT_INCIDENCE: f64 = 0.043;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpacecraftParams {
    /// kg
    pub mass: f64,
    /// Effective flat-plate area, m².
    pub area: f64,
    /// 1 for an absorbing plate, 2 for a perfect specular reflector at
    /// normal incidence.
    #[serde(default = "unit")]
    pub reflectivity_multiplier: f64,
}

fn unit() -> f64 {
    1.0
}

impl Default for SpacecraftParams {
    fn default() -> Self {
        Self {
            mass: 500.0,
            area: 20.0,
            reflectivity_multiplier: 1.0,
        }
    }
}

impl SpacecraftParams {
    pub fn validate(&self) -> Result<(), OrbitalError> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(OrbitalError::InvalidParameter(format!("mass {} must be positive", self.mass)));
        }
        if !(self.area > 0.0 && self.area.is_finite()) {
            return Err(OrbitalError::InvalidParameter(format!("area {} must be positive", self.area)));
        }
        if !(1.0..=2.0).contains(&self.reflectivity_multiplier) {
            return Err(OrbitalError::InvalidParameter(format!(
                "reflectivity multiplier {} outside [1, 2]",
                self.reflectivity_multiplier
            )));
        }
        Ok(())
    }
}

/// How the SRP acceleration is specified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum SrpConfig {
    /// Flat plate under irradiance E (W/m²) at incidence `theta0`.
    Irradiance {
        #[serde(default = "solar_constant")]
        irradiance: f64,
        #[serde(default = "default_incidence")]
        theta0: f64,
    },
    /// Acceleration magnitude w (km/s²) split by the flat-plate law.
    DirectMagnitude {
        #[serde(default = "default_magnitude")]
        magnitude_w: f64,
        #[serde(default = "default_incidence")]
        theta0: f64,
    },
}

fn solar_constant() -> f64 {
    SOLAR_CONSTANT
}

fn default_incidence() -> f64 {
    DEFAULT_INCIDENCE
}

fn default_magnitude() -> f64 {
    DEFAULT_SRP_MAGNITUDE
}

impl Default for SrpConfig {
    fn default() -> Self {
        Self::DirectMagnitude {
            magnitude_w: DEFAULT_SRP_MAGNITUDE,
            theta0: DEFAULT_INCIDENCE,
        }
    }
}

impl SrpConfig {
    pub fn theta0(&self) -> f64 {
        match *self {
            Self::Irradiance { theta0, .. } | Self::DirectMagnitude { theta0, .. } => theta0,
        }
    }

    /// Same configuration with the radiation switched off.
    pub fn disabled(&self) -> Self {
        match *self {
            Self::Irradiance { theta0, .. } => Self::Irradiance { irradiance: 0.0, theta0 },
            Self::DirectMagnitude { theta0, .. } => Self::DirectMagnitude { magnitude_w: 0.0, theta0 },
        }
    }

    pub fn validate(&self) -> Result<(), OrbitalError> {
        let theta0 = self.theta0();
        if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&theta0) {
            return Err(OrbitalError::InvalidParameter(format!("theta0 {theta0} outside [0, pi/2]")));
        }
        let (name, value) = match *self {
            Self::Irradiance { irradiance, .. } => ("irradiance", irradiance),
            Self::DirectMagnitude { magnitude_w, .. } => ("magnitude_w", magnitude_w),
        };
        if !(value >= 0.0 && value.is_finite()) {
            return Err(OrbitalError::InvalidParameter(format!("{name} {value} must be non-negative")));
        }
        Ok(())
    }
}

/// Normal and tangential radiation force on a flat plate, in newtons.
pub fn srp_force(
    irradiance: f64,
    area: f64,
    theta: f64,
    reflectivity_multiplier: f64,
    constants: &PhysicalConstants,
) -> (f64, f64) {
    let c_si = constants.c_light * 1e3;
    let pressure = irradiance / c_si * reflectivity_multiplier;
    let (s, c) = theta.sin_cos();
    (pressure * area * c * c, pressure * area * c * s)
}

/// SRP acceleration components in km/s².
pub fn srp_accel(cfg: &SrpConfig, craft: &SpacecraftParams, constants: &PhysicalConstants) -> [f64; 2] {
    match *cfg {
        SrpConfig::Irradiance { irradiance, theta0 } => {
            let (f_n, f_s) = srp_force(irradiance, craft.area, theta0, craft.reflectivity_multiplier, constants);
            // N / kg = m/s²
            [f_n / craft.mass * 1e-3, f_s / craft.mass * 1e-3]
        }
        SrpConfig::DirectMagnitude { magnitude_w, theta0 } => {
            let (s, c) = theta0.sin_cos();
            [magnitude_w * c * c, magnitude_w * s * c]
        }
    }
}
