//! Continuous-time LTI systems: Kalman rank tests, spectral stability
//! classification, transfer-function and frequency-response evaluation, and
//! the zero-input / zero-state response decomposition.

use std::collections::hash_map::{Entry, HashMap};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{eigenvalues, expm, rank, LinalgError, Matrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LtiError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("state-space dimensions are inconsistent: {0}")]
    Dimension(String),
    #[error("s = {re} + {im}i is at or near an eigenvalue of A")]
    NearSingular { re: f64, im: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// LTI quadruple `ẋ = a·x + b·u`, `y = c·x + d·u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSpace {
    pub a: Matrix,
    pub b: Matrix,
    pub c: Matrix,
    pub d: Matrix,
}

impl StateSpace {
    pub fn new(a: Matrix, b: Matrix, c: Matrix, d: Matrix) -> Result<Self, LtiError> {
        let n = a.rows();
        if !a.is_square() {
            return Err(LtiError::Dimension(format!("A is {}x{}", a.rows(), a.cols())));
        }
        if b.rows() != n {
            return Err(LtiError::Dimension(format!("B has {} rows, A is {n}x{n}", b.rows())));
        }
        if c.cols() != n {
            return Err(LtiError::Dimension(format!("C has {} columns, A is {n}x{n}", c.cols())));
        }
        if d.shape() != (c.rows(), b.cols()) {
            return Err(LtiError::Dimension(format!(
                "D is {:?}, expected {:?}",
                d.shape(),
                (c.rows(), b.cols())
            )));
        }
        Ok(Self { a, b, c, d })
    }

    /// Strictly proper system (`d = 0`).
    pub fn strictly_proper(a: Matrix, b: Matrix, c: Matrix) -> Result<Self, LtiError> {
        let d = Matrix::zeros(c.rows(), b.cols());
        Self::new(a, b, c, d)
    }

    pub fn states(&self) -> usize {
        self.a.rows()
    }

    pub fn inputs(&self) -> usize {
        self.b.cols()
    }

    pub fn outputs(&self) -> usize {
        self.c.rows()
    }
}

/// `[B, AB, …, A^{n−1}B]`.
pub fn controllability_matrix(sys: &StateSpace) -> Matrix {
    let n = sys.states();
    let mut blocks = Vec::with_capacity(n);
    let mut current = sys.b.clone();
    for _ in 0..n {
        let next = &sys.a * &current;
        blocks.push(current);
        current = next;
    }
    let refs: Vec<&Matrix> = blocks.iter().collect();
    Matrix::hstack(&refs).expect("blocks share row count")
}

/// `[C; CA; …; CA^{n−1}]`.
pub fn observability_matrix(sys: &StateSpace) -> Matrix {
    let n = sys.states();
    let mut blocks = Vec::with_capacity(n);
    let mut current = sys.c.clone();
    for _ in 0..n {
        let next = &current * &sys.a;
        blocks.push(current);
        current = next;
    }
    let refs: Vec<&Matrix> = blocks.iter().collect();
    Matrix::vstack(&refs).expect("blocks share column count")
}

pub fn is_controllable(sys: &StateSpace) -> bool {
    rank(&controllability_matrix(sys), None) == sys.states()
}

pub fn is_observable(sys: &StateSpace) -> bool {
    rank(&observability_matrix(sys), None) == sys.states()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityClass {
    AsymptoticallyStable,
    MarginallyStable,
    Unstable,
}

/// Spectral stability classification. Eigenvalues within
/// `1e-9·max(1, ‖a‖∞)` of the imaginary axis count as on-axis; Jordan
/// structure on the axis is not examined.
pub fn stability_class(a: &Matrix) -> Result<StabilityClass, LtiError> {
    let spectrum = eigenvalues(a)?;
    let tol = 1e-9 * a.norm_inf().max(1.0);
    let max_re = spectrum.max_real();
    Ok(if max_re > tol {
        StabilityClass::Unstable
    } else if max_re < -tol {
        StabilityClass::AsymptoticallyStable
    } else {
        StabilityClass::MarginallyStable
    })
}

/// Dense complex matrix, row-major, used for transfer-function values.
pub type ComplexMatrix = Vec<Vec<Complex64>>;

/// `H(s) = C(sI − A)⁻¹B + D`.
pub fn transfer_eval(sys: &StateSpace, s: Complex64) -> Result<ComplexMatrix, LtiError> {
    let n = sys.states();
    let mut lhs: Vec<Vec<Complex64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let diag = if i == j { s } else { Complex64::new(0.0, 0.0) };
                    diag - sys.a[(i, j)]
                })
                .collect()
        })
        .collect();
    let mut rhs: Vec<Vec<Complex64>> = (0..n)
        .map(|i| (0..sys.inputs()).map(|j| Complex64::new(sys.b[(i, j)], 0.0)).collect())
        .collect();
    let scale = sys.a.norm_inf().max(s.norm()).max(1.0);
    complex_solve_in_place(&mut lhs, &mut rhs, scale)
        .map_err(|_| LtiError::NearSingular { re: s.re, im: s.im })?;
    let out = (0..sys.outputs())
        .map(|i| {
            (0..sys.inputs())
                .map(|j| {
                    let acc: Complex64 = (0..n).map(|k| rhs[k][j] * sys.c[(i, k)]).sum();
                    acc + sys.d[(i, j)]
                })
                .collect()
        })
        .collect();
    Ok(out)
}

fn complex_solve_in_place(a: &mut [Vec<Complex64>], b: &mut [Vec<Complex64>], scale: f64) -> Result<(), ()> {
    let n = a.len();
    let tiny = 1e3 * f64::EPSILON * scale;
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| a[i][k].norm().total_cmp(&a[j][k].norm()))
            .expect("non-empty");
        if a[p][k].norm() <= tiny {
            return Err(());
        }
        a.swap(p, k);
        b.swap(p, k);
        let pivot = a[k][k];
        for i in (k + 1)..n {
            let f = a[i][k] / pivot;
            if f == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in k..n {
                let akj = a[k][j];
                a[i][j] -= f * akj;
            }
            for j in 0..b[k].len() {
                let bkj = b[k][j];
                b[i][j] -= f * bkj;
            }
        }
    }
    for k in (0..n).rev() {
        for j in 0..b[k].len() {
            let mut acc = b[k][j];
            for m in (k + 1)..n {
                acc -= a[k][m] * b[m][j];
            }
            b[k][j] = acc / a[k][k];
        }
    }
    Ok(())
}

/// One sample of a frequency response; `response` is `None` where the
/// resolvent was too close to singular to evaluate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyPoint {
    pub omega: f64,
    pub response: Option<ComplexMatrix>,
}

/// `n` logarithmically spaced points over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2, "log_grid needs 0 < lo < hi and n >= 2");
    let (a, b) = (lo.log10(), hi.log10());
    (0..n)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64))
        .collect()
}

/// Default frequency grid: 400 log-spaced points over [1e-5, 1e1] rad/s.
pub fn default_frequency_grid() -> Vec<f64> {
    log_grid(1e-5, 1e1, 400)
}

pub fn frequency_response(sys: &StateSpace, omegas: &[f64]) -> Result<Vec<FrequencyPoint>, LtiError> {
    if omegas.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
        return Err(LtiError::InvalidArgument("frequency grid must be positive".into()));
    }
    if omegas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(LtiError::InvalidArgument("frequency grid must be strictly increasing".into()));
    }
    Ok(omegas
        .iter()
        .map(|&omega| FrequencyPoint {
            omega,
            response: transfer_eval(sys, Complex64::new(0.0, omega)).ok(),
        })
        .collect())
}

fn check_grid(tgrid: &[f64]) -> Result<(), LtiError> {
    if tgrid.is_empty() {
        return Err(LtiError::InvalidArgument("time grid is empty".into()));
    }
    if tgrid.windows(2).any(|w| w[1] < w[0]) {
        return Err(LtiError::InvalidArgument("time grid must be non-decreasing".into()));
    }
    Ok(())
}

/// `x(t) = exp(A·(t − t₀))·x₀` on each grid time, with `t₀ = tgrid[0]`.
pub fn zero_input_response(sys: &StateSpace, x0: &[f64], tgrid: &[f64]) -> Result<Vec<Vec<f64>>, LtiError> {
    check_grid(tgrid)?;
    if x0.len() != sys.states() {
        return Err(LtiError::Dimension(format!("x0 has {} entries", x0.len())));
    }
    let t0 = tgrid[0];
    tgrid
        .iter()
        .map(|t| Ok(expm(&sys.a, t - t0)?.mul_vec(x0)))
        .collect()
}

/// Discretization of `(A, B)` over `dt`, from the exponential of the
/// augmented matrix `[[A, B], [0, 0]]·dt`: returns `(Φ, Γ)` with
/// `x⁺ = Φ·x + Γ·u` exact for constant `u`.
pub fn discretize(a: &Matrix, b: &Matrix, dt: f64) -> Result<(Matrix, Matrix), LtiError> {
    let (n, m) = (a.rows(), b.cols());
    let aug = Matrix::block2(a, b, &Matrix::zeros(m, n), &Matrix::zeros(m, m))?;
    let e = expm(&aug, dt)?;
    let rows: Vec<usize> = (0..n).collect();
    let phi = e.submatrix(&rows, &rows);
    let gamma = e.submatrix(&rows, &(n..n + m).collect::<Vec<_>>());
    Ok((phi, gamma))
}

/// Zero-state response to a piecewise-constant input: `u[k]` holds on
/// `[tgrid[k], tgrid[k+1])`. Each interval is propagated exactly, which
/// also covers singular `A`.
pub fn zero_state_response(sys: &StateSpace, u: &[Vec<f64>], tgrid: &[f64]) -> Result<Vec<Vec<f64>>, LtiError> {
    forced_response(sys, &vec![0.0; sys.states()], u, tgrid)
}

/// Full response `x(t)` from `x0` under piecewise-constant `u`.
pub fn forced_response(
    sys: &StateSpace,
    x0: &[f64],
    u: &[Vec<f64>],
    tgrid: &[f64],
) -> Result<Vec<Vec<f64>>, LtiError> {
    check_grid(tgrid)?;
    if u.len() != tgrid.len() {
        return Err(LtiError::Dimension(format!(
            "{} input samples for {} grid times",
            u.len(),
            tgrid.len()
        )));
    }
    if u.iter().any(|v| v.len() != sys.inputs()) {
        return Err(LtiError::Dimension("input sample width differs from B columns".into()));
    }
    if x0.len() != sys.states() {
        return Err(LtiError::Dimension(format!("x0 has {} entries", x0.len())));
    }
    // Interval lengths repeat on uniform grids; cache the discretizations.
    let mut cache: HashMap<u64, (Matrix, Matrix)> = HashMap::new();
    let mut x = x0.to_vec();
    let mut out = Vec::with_capacity(tgrid.len());
    out.push(x.clone());
    for k in 1..tgrid.len() {
        let dt = tgrid[k] - tgrid[k - 1];
        let key = dt.to_bits();
        if let Entry::Vacant(e) = cache.entry(key) {
            e.insert(discretize(&sys.a, &sys.b, dt)?);
        }
        let (phi, gamma) = &cache[&key];
        let free = phi.mul_vec(&x);
        let forced = gamma.mul_vec(&u[k - 1]);
        x = free.iter().zip(&forced).map(|(a, b)| a + b).collect();
        out.push(x.clone());
    }
    Ok(out)
}

/// Unit-step response on a single input channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResponse {
    pub input: usize,
    pub times: Vec<f64>,
    /// `outputs[k][i]` is output `i` at `times[k]`.
    pub outputs: Vec<Vec<f64>>,
}

pub fn step_response(sys: &StateSpace, horizon: f64, dt: f64) -> Result<Vec<StepResponse>, LtiError> {
    if !(horizon > 0.0) || !(dt > 0.0) {
        return Err(LtiError::InvalidArgument("horizon and dt must be positive".into()));
    }
    let steps = (horizon / dt).round() as usize;
    let times: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
    (0..sys.inputs())
        .map(|j| {
            let u: Vec<Vec<f64>> = times
                .iter()
                .map(|_| (0..sys.inputs()).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
                .collect();
            let states = zero_state_response(sys, &u, &times)?;
            let outputs = states
                .iter()
                .map(|x| {
                    let y = sys.c.mul_vec(x);
                    y.iter().enumerate().map(|(i, yi)| yi + sys.d[(i, j)]).collect()
                })
                .collect();
            Ok(StepResponse {
                input: j,
                times: times.clone(),
                outputs,
            })
        })
        .collect()
}

/// First time after which `|signal − target|` stays within
/// `band·|signal[0] − target|`. `None` if the signal is still outside the
/// band at the final sample.
pub fn settling_time(times: &[f64], signal: &[f64], target: f64, band: f64) -> Option<f64> {
    let initial = (signal.first()? - target).abs();
    let threshold = band * initial;
    let last_outside = signal.iter().rposition(|v| (v - target).abs() > threshold);
    match last_outside {
        None => Some(times[0]),
        Some(k) if k + 1 < times.len() => Some(times[k + 1]),
        Some(_) => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(a: f64, b: f64, c: f64) -> StateSpace {
        StateSpace::strictly_proper(Matrix::diag(&[a]), Matrix::diag(&[b]), Matrix::diag(&[c])).unwrap()
    }

    fn double_integrator() -> StateSpace {
        StateSpace::strictly_proper(
            Matrix::from_rows(&[[0.0, 1.0], [0.0, 0.0]]).unwrap(),
            Matrix::column(&[0.0, 1.0]),
            Matrix::from_rows(&[[1.0, 0.0]]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn dimension_checks() {
        let err = StateSpace::strictly_proper(Matrix::identity(2), Matrix::zeros(3, 1), Matrix::zeros(1, 2));
        assert!(matches!(err, Err(LtiError::Dimension(_))));
    }

    #[test]
    fn double_integrator_controllability() {
        let sys = double_integrator();
        let ctrb = controllability_matrix(&sys);
        assert_eq!(ctrb, Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap());
        assert_eq!(rank(&ctrb, None), 2);
    }

    #[test]
    fn no_actuation_no_controllability() {
        let mut sys = double_integrator();
        sys.b = Matrix::zeros(2, 1);
        let ctrb = controllability_matrix(&sys);
        assert_eq!(ctrb.max_abs(), 0.0);
        assert_eq!(rank(&ctrb, None), 0);
    }

    #[test]
    fn observability_edge_cases() {
        let mut sys = double_integrator();
        sys.c = Matrix::identity(2);
        sys.d = Matrix::zeros(2, 1);
        assert_eq!(rank(&observability_matrix(&sys), None), 2);
        sys.c = Matrix::zeros(2, 2);
        assert_eq!(rank(&observability_matrix(&sys), None), 0);
    }

    #[test]
    fn stability_classes() {
        assert_eq!(
            stability_class(&Matrix::diag(&[-1.0, -1.0])).unwrap(),
            StabilityClass::AsymptoticallyStable
        );
        let rot = Matrix::from_rows(&[[0.0, 1.0], [-1.0, 0.0]]).unwrap();
        assert_eq!(stability_class(&rot).unwrap(), StabilityClass::MarginallyStable);
        assert_eq!(stability_class(&Matrix::diag(&[1e-3, -1.0])).unwrap(), StabilityClass::Unstable);
    }

    #[test]
    fn dc_gain_of_first_order_lag() {
        let h = transfer_eval(&scalar(-1.0, 1.0, 1.0), Complex64::new(0.0, 0.0)).unwrap();
        assert!((h[0][0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn eigenvalue_is_near_singular() {
        let err = transfer_eval(&scalar(-1.0, 1.0, 1.0), Complex64::new(-1.0, 0.0)).unwrap_err();
        assert!(matches!(err, LtiError::NearSingular { .. }));
    }

    #[test]
    fn first_order_pole_at_corner() {
        let pts = frequency_response(&scalar(-1.0, 1.0, 1.0), &[1.0]).unwrap();
        let h = pts[0].response.as_ref().unwrap()[0][0];
        assert!((h.norm() - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((h.arg().to_degrees() + 45.0).abs() < 1e-12);
    }

    #[test]
    fn conjugate_symmetry() {
        let sys = double_integrator();
        let plus = transfer_eval(&sys, Complex64::new(0.0, 0.7)).unwrap()[0][0];
        let minus = transfer_eval(&sys, Complex64::new(0.0, -0.7)).unwrap()[0][0];
        assert!((plus - minus.conj()).norm() < 1e-15);
    }

    #[test]
    fn strictly_proper_rolls_off() {
        let sys = scalar(-1.0, 1.0, 1.0);
        let mags: Vec<f64> = [1e1, 1e3, 1e5]
            .iter()
            .map(|w| transfer_eval(&sys, Complex64::new(0.0, *w)).unwrap()[0][0].norm())
            .collect();
        assert!(mags.windows(2).all(|m| m[1] < m[0]));
        assert!(mags[2] < 1e-4);
    }

    #[test]
    fn grid_validation() {
        let sys = scalar(-1.0, 1.0, 1.0);
        assert!(frequency_response(&sys, &[1.0, 0.5]).is_err());
        assert!(frequency_response(&sys, &[0.0, 1.0]).is_err());
        let g = default_frequency_grid();
        assert_eq!(g.len(), 400);
        assert!((g[0] - 1e-5).abs() < 1e-18 && (g[399] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn zero_input_cases() {
        let frozen = StateSpace::strictly_proper(Matrix::zeros(2, 2), Matrix::zeros(2, 1), Matrix::zeros(1, 2)).unwrap();
        let xs = zero_input_response(&frozen, &[1.0, -2.0], &[0.0, 1.0, 5.0]).unwrap();
        assert!(xs.iter().all(|x| x == &vec![1.0, -2.0]));

        let decay = scalar(-1.0, 1.0, 1.0);
        let xs = zero_input_response(&decay, &[1.0], &[0.0, 1.0]).unwrap();
        assert!((xs[1][0] - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn zero_state_cases() {
        let integ = scalar(0.0, 1.0, 1.0);
        let t: Vec<f64> = (0..=10).map(|k| k as f64 * 0.5).collect();
        let ones = vec![vec![1.0]; t.len()];
        let xs = zero_state_response(&integ, &ones, &t).unwrap();
        for (x, tk) in xs.iter().zip(&t) {
            assert!((x[0] - tk).abs() < 1e-14);
        }
        let zeros = vec![vec![0.0]; t.len()];
        let xs = zero_state_response(&integ, &zeros, &t).unwrap();
        assert!(xs.iter().all(|x| x[0] == 0.0));
    }

    #[test]
    fn first_order_step() {
        let sys = scalar(-1.0, 1.0, 1.0);
        let resp = step_response(&sys, 1.0, 0.01).unwrap();
        let y1 = resp[0].outputs.last().unwrap()[0];
        assert!((y1 - (1.0 - (-1.0f64).exp())).abs() < 1e-13);
    }

    #[test]
    fn step_settles_to_dc_gain() {
        // Stable 2-state system; final value −C·A⁻¹·B.
        let a = Matrix::from_rows(&[[0.0, 1.0], [-2.0, -3.0]]).unwrap();
        let sys = StateSpace::strictly_proper(a.clone(), Matrix::column(&[0.0, 1.0]), Matrix::from_rows(&[[1.0, 0.0]]).unwrap()).unwrap();
        let dc = -(&sys.c * &(&crate::linalg::inverse(&a).unwrap() * &sys.b))[(0, 0)];
        let resp = step_response(&sys, 30.0, 0.05).unwrap();
        let y_end = resp[0].outputs.last().unwrap()[0];
        assert!((y_end - dc).abs() < 1e-10);
        let series: Vec<f64> = resp[0].outputs.iter().map(|y| y[0]).collect();
        let ts = settling_time(&resp[0].times, &series, dc, 0.02).unwrap();
        assert!(ts > 0.0 && ts < 30.0);
    }

    #[test]
    fn settling_time_edge_cases() {
        let t = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(settling_time(&t, &[0.0, 0.0, 0.0, 0.0], 0.0, 0.02), Some(0.0));
        assert_eq!(settling_time(&t, &[1.0, 0.5, 0.01, 0.001], 0.0, 0.02), Some(2.0));
        assert_eq!(settling_time(&t, &[1.0, 0.5, 0.4, 0.3], 0.0, 0.02), None);
    }

    #[test]
    fn duality_of_rank_matrices() {
        let a = Matrix::from_rows(&[[0.1, 2.0, 0.0], [-1.0, 0.3, 1.0], [0.5, 0.0, -0.2]]).unwrap();
        let c = Matrix::from_rows(&[[1.0, 0.0, 2.0], [0.0, 1.0, -1.0]]).unwrap();
        let sys = StateSpace::strictly_proper(a.clone(), Matrix::zeros(3, 1), c.clone()).unwrap();
        let dual = StateSpace::strictly_proper(a.transpose(), c.transpose(), Matrix::zeros(1, 3)).unwrap();
        assert_eq!(observability_matrix(&sys), controllability_matrix(&dual).transpose());
    }
}
