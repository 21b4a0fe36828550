//! Adaptive Dormand–Prince 5(4) integrator with PI step-size control and
//! the fourth-order continuous extension for dense output.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegrateError {
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("step budget of {max_steps} exhausted at t = {t}")]
    TooManySteps { t: f64, max_steps: usize },
    #[error("derivative is not finite at t = {t}")]
    NonFinite { t: f64 },
    #[error("invalid integration request: {0}")]
    InvalidRequest(String),
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;

/// Error-controlled DOPRI5 configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Upper bound on the step size; `f64::INFINITY` for none.
    pub h_max: f64,
}

impl Dopri5 {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            max_steps: 50_000_000,
            h_max: f64::INFINITY,
        }
    }

    pub fn with_h_max(mut self, h_max: f64) -> Self {
        self.h_max = h_max;
        self
    }

    /// Integrates from `t0` to `t1` and returns the final state.
    pub fn propagate<F>(&self, f: F, t0: f64, y0: &[f64], t1: f64) -> Result<Vec<f64>, IntegrateError>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let mut out = self.sample(f, t0, y0, &[t1])?;
        Ok(out.pop().expect("one sample"))
    }

    /// States at each of `times` (non-decreasing, all ≥ `t0`), read from
    /// the dense-output interpolant of the accepted steps.
    pub fn sample<F>(&self, f: F, t0: f64, y0: &[f64], times: &[f64]) -> Result<Vec<Vec<f64>>, IntegrateError>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        self.validate(t0, times)?;
        let mut out = Vec::with_capacity(times.len());
        let Some(&t_end) = times.last() else {
            return Ok(out);
        };
        let mut stepper = Stepper::new(self, f, t0, y0)?;
        let mut next = 0;
        while next < times.len() && times[next] <= t0 {
            out.push(y0.to_vec());
            next += 1;
        }
        while next < times.len() {
            stepper.step(t_end)?;
            while next < times.len() && times[next] <= stepper.t {
                out.push(if times[next] == stepper.t {
                    stepper.y.clone()
                } else {
                    stepper.interpolate(times[next])
                });
                next += 1;
            }
        }
        Ok(out)
    }

    /// Like [`Dopri5::sample`] but lands a step exactly on every requested
    /// time, so right-hand sides may change discontinuously there. `on_stop`
    /// is invoked with the index of each time reached before integration
    /// continues past it.
    pub fn sample_with_stops<F, S>(
        &self,
        mut f: F,
        t0: f64,
        y0: &[f64],
        times: &[f64],
        mut on_stop: S,
    ) -> Result<Vec<Vec<f64>>, IntegrateError>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
        S: FnMut(usize),
    {
        self.validate(t0, times)?;
        let mut out = Vec::with_capacity(times.len());
        let mut t = t0;
        let mut y = y0.to_vec();
        let mut h_carry: Option<f64> = None;
        for (k, &target) in times.iter().enumerate() {
            if target > t {
                let mut stepper = Stepper::new(self, &mut f, t, &y)?;
                if let Some(h) = h_carry {
                    stepper.h = h;
                }
                while stepper.t < target {
                    stepper.step(target)?;
                }
                h_carry = Some(stepper.h_suggested);
                t = target;
                y = stepper.y;
            }
            out.push(y.clone());
            on_stop(k);
        }
        Ok(out)
    }

    fn validate(&self, t0: f64, times: &[f64]) -> Result<(), IntegrateError> {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(IntegrateError::InvalidRequest("tolerances must be positive".into()));
        }
        if times.windows(2).any(|w| w[1] < w[0]) {
            return Err(IntegrateError::InvalidRequest("output times must be non-decreasing".into()));
        }
        if times.first().is_some_and(|t| *t < t0) {
            return Err(IntegrateError::InvalidRequest("output times precede t0".into()));
        }
        Ok(())
    }
}

struct Stepper<'a, F> {
    cfg: &'a Dopri5,
    f: F,
    t: f64,
    y: Vec<f64>,
    k1: Vec<f64>,
    h: f64,
    h_suggested: f64,
    fac_old: f64,
    steps: usize,
    // dense output for the last accepted step [t_old, t]
    t_old: f64,
    h_last: f64,
    cont: [Vec<f64>; 5],
}

impl<'a, F> Stepper<'a, F>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    fn new(cfg: &'a Dopri5, mut f: F, t0: f64, y0: &[f64]) -> Result<Self, IntegrateError> {
        let n = y0.len();
        let mut k1 = vec![0.0; n];
        f(t0, y0, &mut k1);
        if k1.iter().any(|v| !v.is_finite()) {
            return Err(IntegrateError::NonFinite { t: t0 });
        }
        let mut s = Self {
            cfg,
            f,
            t: t0,
            y: y0.to_vec(),
            k1,
            h: 0.0,
            h_suggested: 0.0,
            fac_old: 1e-4,
            steps: 0,
            t_old: t0,
            h_last: 0.0,
            cont: Default::default(),
        };
        s.h = s.initial_step();
        Ok(s)
    }

    fn weight(&self, a: f64, b: f64) -> f64 {
        self.cfg.atol + self.cfg.rtol * a.abs().max(b.abs())
    }

    fn initial_step(&mut self) -> f64 {
        let n = self.y.len() as f64;
        let sk: Vec<f64> = self.y.iter().map(|v| self.weight(*v, 0.0)).collect();
        let dnf = (self.k1.iter().zip(&sk).map(|(k, s)| (k / s).powi(2)).sum::<f64>() / n).sqrt();
        let dny = (self.y.iter().zip(&sk).map(|(y, s)| (y / s).powi(2)).sum::<f64>() / n).sqrt();
        let mut h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { 0.01 * dny / dnf };
        h = h.min(self.cfg.h_max);
        let y1: Vec<f64> = self.y.iter().zip(&self.k1).map(|(y, k)| y + h * k).collect();
        let mut k2 = vec![0.0; self.y.len()];
        (self.f)(self.t + h, &y1, &mut k2);
        let der2 = (k2
            .iter()
            .zip(&self.k1)
            .zip(&sk)
            .map(|((a, b), s)| ((a - b) / s).powi(2))
            .sum::<f64>()
            / n)
            .sqrt()
            / h;
        let der12 = der2.max(dnf);
        let h1 = if der12 <= 1e-15 {
            (h * 1e-3).max(1e-6)
        } else {
            (0.01 / der12).powf(0.2)
        };
        (100.0 * h).min(h1).min(self.cfg.h_max)
    }

    /// Takes one accepted step, never passing `t_limit`.
    fn step(&mut self, t_limit: f64) -> Result<(), IntegrateError> {
        let n = self.y.len();
        let mut k2 = vec![0.0; n];
        let mut k3 = vec![0.0; n];
        let mut k4 = vec![0.0; n];
        let mut k5 = vec![0.0; n];
        let mut k6 = vec![0.0; n];
        let mut k7 = vec![0.0; n];
        let mut yt = vec![0.0; n];
        let mut y1 = vec![0.0; n];
        loop {
            if self.steps >= self.cfg.max_steps {
                return Err(IntegrateError::TooManySteps {
                    t: self.t,
                    max_steps: self.cfg.max_steps,
                });
            }
            self.steps += 1;
            let mut h = self.h.min(self.cfg.h_max);
            let mut last = false;
            if self.t + h >= t_limit || self.t + 1.01 * h >= t_limit {
                h = t_limit - self.t;
                last = true;
            }
            if h.abs() <= 10.0 * f64::EPSILON * self.t.abs().max(1.0) && !last {
                return Err(IntegrateError::StepUnderflow { t: self.t });
            }
            let t = self.t;
            let y = &self.y;
            let k1 = &self.k1;
            for i in 0..n {
                yt[i] = y[i] + h * A21 * k1[i];
            }
            (self.f)(t + C2 * h, &yt, &mut k2);
            for i in 0..n {
                yt[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
            }
            (self.f)(t + C3 * h, &yt, &mut k3);
            for i in 0..n {
                yt[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            (self.f)(t + C4 * h, &yt, &mut k4);
            for i in 0..n {
                yt[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            (self.f)(t + C5 * h, &yt, &mut k5);
            for i in 0..n {
                yt[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            let t_new = if last { t_limit } else { t + h };
            (self.f)(t_new, &yt, &mut k6);
            for i in 0..n {
                y1[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
            }
            (self.f)(t_new, &y1, &mut k7);
            if k7.iter().chain(&y1).any(|v| !v.is_finite()) {
                // shrink and retry; persistent failure ends in underflow
                self.h = 0.25 * h;
                continue;
            }
            let mut err = 0.0;
            for i in 0..n {
                let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sk = self.weight(y[i], y1[i]);
                err += (e / sk).powi(2);
            }
            let err = (err / n.max(1) as f64).sqrt();

            let fac11 = err.powf(0.2 - BETA * 0.75);
            if err <= 1.0 {
                let fac = (fac11 / self.fac_old.powf(BETA)) / SAFETY;
                let fac = fac.clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
                let h_new = h / fac;
                self.fac_old = err.max(1e-4);
                let ydiff: Vec<f64> = y1.iter().zip(y).map(|(a, b)| a - b).collect();
                let bspl: Vec<f64> = (0..n).map(|i| h * k1[i] - ydiff[i]).collect();
                self.cont = [
                    y.clone(),
                    ydiff.clone(),
                    bspl.clone(),
                    (0..n).map(|i| ydiff[i] - h * k7[i] - bspl[i]).collect(),
                    (0..n)
                        .map(|i| {
                            h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i])
                        })
                        .collect(),
                ];
                self.t_old = t;
                self.h_last = h;
                self.t = t_new;
                std::mem::swap(&mut self.y, &mut y1);
                std::mem::swap(&mut self.k1, &mut k7);
                self.h_suggested = if last { self.h.max(h_new) } else { h_new };
                self.h = h_new;
                return Ok(());
            }
            let shrink = (fac11 / SAFETY).min(1.0 / FAC_MIN);
            self.h = h / shrink;
        }
    }

    fn interpolate(&self, t: f64) -> Vec<f64> {
        let theta = (t - self.t_old) / self.h_last;
        let theta1 = 1.0 - theta;
        let [c0, c1, c2, c3, c4] = &self.cont;
        (0..c0.len())
            .map(|i| c0[i] + theta * (c1[i] + theta1 * (c2[i] + theta * (c3[i] + theta1 * c4[i]))))
            .collect()
    }
}
