use std::cell::{Cell, RefCell};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Method, PlantMode, ReferenceMode, Scenario, SimulationError};
use crate::integrate::{Dopri5, IntegrateError};
use crate::linalg::Matrix;
use crate::lti::StateSpace;
use crate::orbital::{
    gravity, lambert_solve, propagate_kepler, srp_accel, OrbitState, OrbitalError,
};
use crate::synthesis::{lqr_gain, observer_gain, ObserverDesign, SynthesisResult};

/// Gains designed on the linearized plant of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Design {
    pub plant: StateSpace,
    pub lqr: SynthesisResult,
    /// Observer poles are the base poles (LQR closed-loop poles by default)
    /// scaled by the scenario's speed factor.
    pub observer: ObserverDesign,
}

pub fn design_gains(s: &Scenario) -> Result<Design, SimulationError> {
    let plant = s.plant()?;
    let lqr = lqr_gain(&plant.a, &plant.b, &s.weights)?;
    let base = s.observer_base_poles.as_ref().unwrap_or(&lqr.closed_loop_spectrum);
    let observer = observer_gain(&plant.a, &plant.c, s.observer_speed_factor, base)?;
    Ok(Design { plant, lqr, observer })
}

/// Trajectory the controller regulates about.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reference {
    /// Unforced two-body arc through `epoch` at t = 0.
    Arc { epoch: OrbitState, mu: f64 },
    /// Fixed state.
    Setpoint(OrbitState),
}

impl Reference {
    pub fn for_scenario(s: &Scenario) -> Result<Self, SimulationError> {
        Ok(match s.reference_mode {
            ReferenceMode::LambertArc => {
                let sol = lambert_solve(
                    s.x0.position,
                    s.xf.position,
                    s.horizon,
                    s.transfer_direction,
                    &s.constants,
                )?;
                Reference::Arc {
                    epoch: OrbitState::new(s.x0.position, sol.v1),
                    mu: s.constants.mu,
                }
            }
            ReferenceMode::ConstantSetpoint => Reference::Setpoint(s.xf),
        })
    }

    pub fn state(&self, t: f64) -> Result<[f64; 4], OrbitalError> {
        match self {
            Reference::Arc { epoch, mu } => Ok(propagate_kepler(epoch, t, *mu)?.to_array()),
            Reference::Setpoint(x) => Ok(x.to_array()),
        }
    }

    /// Rate of the deviation `δ = x − x_ref` under gravity alone, given the
    /// reference state `r`. Along an arc the gravity difference is formed
    /// without cancellation.
    pub(crate) fn unforced_deviation_rate(&self, r: &[f64; 4], d: &[f64], mu: f64) -> Result<[f64; 4], OrbitalError> {
        match self {
            Reference::Arc { .. } => {
                let rr = r[0] * r[0] + r[1] * r[1];
                let x = [r[0] + d[0], r[1] + d[1]];
                let radius = x[0].hypot(x[1]);
                if !(radius >= 1.0) {
                    return Err(OrbitalError::Singularity { radius_km: radius });
                }
                // |r + δ|² / |r|² = 1 + q; g(r + δ) − g(r) = μ/|r|³·(f·(r + δ) − δ)
                let q = (d[0] * (d[0] + 2.0 * r[0]) + d[1] * (d[1] + 2.0 * r[1])) / rr;
                let f = -(-1.5 * q.ln_1p()).exp_m1();
                let k = mu / (rr * rr.sqrt());
                Ok([d[2], d[3], k * (f * x[0] - d[0]), k * (f * x[1] - d[1])])
            }
            Reference::Setpoint(_) => {
                let g = gravity([r[0] + d[0], r[1] + d[1]], mu)?;
                Ok([r[2] + d[2], r[3] + d[3], g[0], g[1]])
            }
        }
    }
}

/// Time series produced by [`run_scenario`]. Every series has one entry per
/// output time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRecord {
    pub method: Method,
    pub times: Vec<f64>,
    /// `[p, q, ṗ, q̇]`
    pub true_states: Vec<[f64; 4]>,
    pub estimates: Option<Vec<[f64; 4]>>,
    /// km/s²
    pub controls: Vec<[f64; 2]>,
    pub reference: Vec<[f64; 4]>,
    /// `x − x̂`
    pub estimation_error: Option<Vec<[f64; 4]>>,
}

impl SimulationRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Output times `0, dt, 2dt, …` ending exactly at `horizon`.
pub fn output_grid(horizon: f64, dt: f64) -> Vec<f64> {
    let ratio = horizon / dt;
    let nearest = ratio.round();
    let (count, exact) = if (ratio - nearest).abs() <= 1e-9 * ratio.max(1.0) {
        (nearest as usize, true)
    } else {
        (ratio.floor() as usize, false)
    };
    let mut times: Vec<f64> = (0..count).map(|k| k as f64 * dt).collect();
    if !exact && count > 0 && times.last().is_some_and(|t| horizon - t < 1e-9 * dt) {
        times.pop();
    }
    if !exact {
        times.push(count as f64 * dt);
    }
    times.push(horizon);
    times.dedup();
    times
}

struct Loop<'a> {
    mode: PlantMode,
    reference: &'a Reference,
    mu: f64,
    a: Matrix,
    c: Matrix,
    k: Option<Matrix>,
    l: Option<Matrix>,
    method: Method,
    disturbance: [f64; 2],
}

impl Loop<'_> {
    fn control(&self, delta: &[f64], estimate: Option<&[f64]>) -> [f64; 2] {
        let Some(k) = &self.k else { return [0.0; 2] };
        let x = match self.method {
            Method::Lqr => delta,
            Method::ObserverLqr => estimate.expect("observer state"),
            Method::Uncontrolled | Method::ObserverOnly => return [0.0; 2],
        };
        let u = k.mul_vec(x);
        [-u[0], -u[1]]
    }

    fn plant_rate(
        &self,
        r: &[f64; 4],
        delta: &[f64],
        push: [f64; 2],
        out: &mut [f64],
    ) -> Result<(), OrbitalError> {
        match self.mode {
            PlantMode::Linear => {
                let ax = self.a.mul_vec(delta);
                out[..4].copy_from_slice(&ax);
            }
            PlantMode::Nonlinear => {
                let rate = self.reference.unforced_deviation_rate(r, delta, self.mu)?;
                out[..4].copy_from_slice(&rate);
            }
        }
        out[2] += push[0];
        out[3] += push[1];
        Ok(())
    }

    fn rate(&self, t: f64, y: &[f64], noise: [f64; 2], dy: &mut [f64]) -> Result<(), OrbitalError> {
        let r = match self.mode {
            PlantMode::Linear => [0.0; 4],
            PlantMode::Nonlinear => self.reference.state(t)?,
        };
        let (delta, estimate) = y.split_at(4);
        let estimate = (!estimate.is_empty()).then_some(estimate);
        let u = self.control(delta, estimate);
        let push = [u[0] + self.disturbance[0], u[1] + self.disturbance[1]];
        self.plant_rate(&r, delta, push, &mut dy[..4])?;
        if let (Some(xh), Some(l)) = (estimate, &self.l) {
            // The observer runs the same model as the plant, without the
            // disturbance, corrected by the position measurement.
            self.plant_rate(&r, xh, u, &mut dy[4..])?;
            let diff = [delta[0] - xh[0], delta[1] - xh[1], delta[2] - xh[2], delta[3] - xh[3]];
            let seen = self.c.mul_vec(&diff);
            let innovation = [seen[0] + noise[0], seen[1] + noise[1]];
            for (i, d) in dy[4..].iter_mut().enumerate() {
                *d += l[(i, 0)] * innovation[0] + l[(i, 1)] * innovation[1];
            }
        }
        Ok(())
    }
}

fn subtract(a: &[f64; 4], b: &[f64; 4]) -> [f64; 4] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]]
}

fn add(a: &[f64; 4], b: &[f64]) -> [f64; 4] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

/// Simulates one scenario. The state is integrated as the deviation from
/// the reference trajectory (exactly, not linearized, in nonlinear mode), so
/// the integrator tolerances act on the deviation. The observer, when
/// present, integrates jointly with the plant.
pub fn run_scenario(s: &Scenario) -> Result<SimulationRecord, SimulationError> {
    s.validate()?;
    let times = output_grid(s.horizon, s.output_dt);
    let reference = Reference::for_scenario(s)?;
    let plant = s.plant()?;
    let design = match s.method {
        Method::Uncontrolled => None,
        _ => Some(design_gains(s)?),
    };
    let model = Loop {
        mode: s.plant_mode,
        reference: &reference,
        mu: s.constants.mu,
        a: plant.a.clone(),
        c: plant.c.clone(),
        k: design.as_ref().filter(|_| s.method.has_control()).map(|d| d.lqr.k.clone()),
        l: design.as_ref().filter(|_| s.method.has_observer()).map(|d| d.observer.l.clone()),
        method: s.method,
        disturbance: srp_accel(&s.srp, &s.spacecraft, &s.constants),
    };

    let r0 = reference.state(0.0)?;
    let mut y0 = subtract(&s.x0.to_array(), &r0).to_vec();
    if s.method.has_observer() {
        y0.extend(subtract(&s.initial_estimate().to_array(), &r0));
    }

    let failure: RefCell<Option<OrbitalError>> = RefCell::new(None);
    let rhs = |t: f64, y: &[f64], noise: [f64; 2], dy: &mut [f64]| {
        if let Err(e) = model.rate(t, y, noise, dy) {
            failure.borrow_mut().get_or_insert(e);
            dy.fill(f64::NAN);
        }
    };
    let samples = match integrate_noisy(s, rhs, &y0, &times) {
        Ok(v) => v,
        Err(e) => {
            return Err(match failure.into_inner() {
                Some(orbital) => orbital.into(),
                None => e.into(),
            })
        }
    };

    // On the linear plant the estimation error obeys its own autonomous
    // equation ė = (A − LC)e + B·a_srp − L·n, integrated separately so the
    // recorded error cannot depend on the control signal.
    let linear_error = match (s.plant_mode, &model.l) {
        (PlantMode::Linear, Some(l)) => {
            let ae = &plant.a - &(l * &plant.c);
            let bd = plant.b.mul_vec(&model.disturbance);
            let e0: Vec<f64> = (0..4).map(|i| y0[i] - y0[4 + i]).collect();
            let rhs = |_: f64, e: &[f64], noise: [f64; 2], de: &mut [f64]| {
                let ln = l.mul_vec(&noise);
                for (i, (d, v)) in de.iter_mut().zip(ae.mul_vec(e)).enumerate() {
                    *d = v + bd[i] - ln[i];
                }
            };
            Some(integrate_noisy(s, rhs, &e0, &times)?)
        }
        _ => None,
    };

    let n = times.len();
    let mut record = SimulationRecord {
        method: s.method,
        times: times.clone(),
        true_states: Vec::with_capacity(n),
        estimates: s.method.has_observer().then(|| Vec::with_capacity(n)),
        controls: Vec::with_capacity(n),
        reference: Vec::with_capacity(n),
        estimation_error: s.method.has_observer().then(|| Vec::with_capacity(n)),
    };
    for (k, (&t, y)) in times.iter().zip(&samples).enumerate() {
        let r = reference.state(t)?;
        let (delta, estimate) = y.split_at(4);
        record.true_states.push(add(&r, delta));
        record.reference.push(r);
        if estimate.is_empty() {
            record.controls.push(model.control(delta, None));
            continue;
        }
        let e: [f64; 4] = match &linear_error {
            Some(errors) => [errors[k][0], errors[k][1], errors[k][2], errors[k][3]],
            None => [delta[0] - estimate[0], delta[1] - estimate[1], delta[2] - estimate[2], delta[3] - estimate[3]],
        };
        let xh = [delta[0] - e[0], delta[1] - e[1], delta[2] - e[2], delta[3] - e[3]];
        record.controls.push(model.control(delta, Some(&xh)));
        record.estimates.as_mut().expect("observer run").push(add(&r, &xh));
        record.estimation_error.as_mut().expect("observer run").push(e);
    }
    Ok(record)
}

/// Integrates `rhs(t, y, noise, dy)` onto `times`. With measurement noise
/// configured, a fresh Gaussian sample per axis is drawn at every output time
/// and held until the next one; the sequence depends only on the seed.
fn integrate_noisy<F>(s: &Scenario, rhs: F, y0: &[f64], times: &[f64]) -> Result<Vec<Vec<f64>>, IntegrateError>
where
    F: Fn(f64, &[f64], [f64; 2], &mut [f64]),
{
    let solver = Dopri5::new(s.rtol, s.atol);
    let sigma = s.measurement_noise_sigma;
    if sigma == [0.0, 0.0] || !s.method.has_observer() {
        return solver.sample(|t, y, dy| rhs(t, y, [0.0; 2], dy), 0.0, y0, times);
    }
    let noise = Cell::new([0.0; 2]);
    let mut rng = ChaCha8Rng::seed_from_u64(s.noise_seed);
    let nx = Normal::new(0.0, sigma[0]).expect("validated sigma");
    let ny = Normal::new(0.0, sigma[1]).expect("validated sigma");
    solver.sample_with_stops(|t, y, dy| rhs(t, y, noise.get(), dy), 0.0, y0, times, |_| {
        noise.set([nx.sample(&mut rng), ny.sample(&mut rng)]);
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbital::SrpConfig;

    #[test]
    fn grid_ends_at_horizon() {
        let g = output_grid(4000.0, 0.1);
        assert_eq!(g.len(), 40001);
        assert_eq!(*g.last().unwrap(), 4000.0);
        assert_eq!(g[1], 0.1);
        let g = output_grid(1.0, 0.3);
        assert_eq!(g, vec![0.0, 0.3, 0.6, 0.8999999999999999, 1.0]);
        assert_eq!(output_grid(2.0, 2.0), vec![0.0, 2.0]);
    }

    #[test]
    fn deviation_rate_matches_direct_difference() {
        let epoch = OrbitState::new([7000.0, 100.0], [0.5, 7.4]);
        let mu = 3.986004418e5;
        let reference = Reference::Arc { epoch, mu };
        let r = epoch.to_array();
        let d = [3.0, -2.0, 0.01, 0.02];
        let rate = reference.unforced_deviation_rate(&r, &d, mu).unwrap();
        let g1 = gravity([r[0] + d[0], r[1] + d[1]], mu).unwrap();
        let g0 = gravity([r[0], r[1]], mu).unwrap();
        assert!((rate[2] - (g1[0] - g0[0])).abs() < 1e-15);
        assert!((rate[3] - (g1[1] - g0[1])).abs() < 1e-15);
        // Tiny deviations stay linear in δ.
        let tiny = reference.unforced_deviation_rate(&r, &[1e-12, 0.0, 0.0, 0.0], mu).unwrap();
        let big = reference.unforced_deviation_rate(&r, &[1e-6, 0.0, 0.0, 0.0], mu).unwrap();
        assert!((big[2] / tiny[2] - 1e6).abs() < 1e-3);
    }

    #[test]
    fn uncontrolled_has_no_observer_and_zero_control() {
        let s = Scenario {
            method: Method::Uncontrolled,
            horizon: 50.0,
            output_dt: 1.0,
            ..Scenario::default()
        };
        let rec = run_scenario(&s).unwrap();
        assert_eq!(rec.len(), 51);
        assert!(rec.estimates.is_none());
        assert!(rec.controls.iter().all(|u| *u == [0.0, 0.0]));
        for (a, b) in rec.true_states[0].iter().zip(s.x0.to_array()) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn matched_observer_from_exact_estimate_reproduces_state_feedback() {
        let base = Scenario {
            horizon: 200.0,
            output_dt: 0.5,
            srp: SrpConfig::default().disabled(),
            ..Scenario::default()
        };
        let base = Scenario { xhat0: Some(base.x0), ..base };
        let a = run_scenario(&base.with_method(Method::Lqr)).unwrap();
        let c = run_scenario(&base.with_method(Method::ObserverLqr)).unwrap();
        for (xa, xc) in a.true_states.iter().zip(&c.true_states) {
            let d = (xa[0] - xc[0]).hypot(xa[1] - xc[1]);
            assert!(d <= 1e-9, "{d}");
        }
        assert!(c.estimation_error.unwrap().iter().all(|e| e.iter().all(|v| v.abs() < 1e-12)));
    }
}
