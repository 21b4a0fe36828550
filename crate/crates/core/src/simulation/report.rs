use serde::{Deserialize, Serialize};

use super::{compute_metrics, design_gains, run_scenario, Method, Metrics, Scenario, SimulationError};
use crate::linalg::{eigenvalues, Matrix, Spectrum};
use crate::lti::{stability_class, StabilityClass};
use crate::synthesis::assemble_separation_loop;

/// One row of the method comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: Method,
    /// Closed-loop spectrum of the linearized design model.
    pub spectrum: Spectrum,
    pub stability: StabilityClass,
    /// `None` when the simulation failed; see `error`.
    pub metrics: Option<Metrics>,
    pub error: Option<String>,
}

impl MethodReport {
    /// Stable design model and a completed run that settles.
    pub fn converged(&self) -> bool {
        self.stability == StabilityClass::AsymptoticallyStable
            && self.metrics.is_some_and(|m| m.settling_time.is_some())
    }
}

/// Published values printed next to the computed ones for comparison. They
/// are not reproduced by this model and nothing is checked against them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PaperReference {
    pub dominant_poles: [(&'static str, &'static str); 3],
    /// (method, settling time, steady-state error, control energy)
    pub performance: [(&'static str, &'static str, &'static str, &'static str); 3],
    pub gain_k: [f64; 4],
    pub gain_k_ccf: [f64; 4],
    pub natural_frequency_squared: f64,
}

pub const PAPER_REFERENCE: PaperReference = PaperReference {
    dominant_poles: [
        ("lqr", "-1.02, -0.97, -0.15 ± 0.42i"),
        ("observer_only", "+0.08, 0, -0.02"),
        ("observer_lqr", "-1.25, -1.10, -0.85, -0.60"),
    ],
    performance: [
        ("lqr", "220 s", "0.12 km", "5.2"),
        ("observer_only", "divergent", "> 10 km", "n/a"),
        ("observer_lqr", "140 s", "0.005 km", "6.7"),
    ],
    gain_k: [0.293, 0.169, 9.115, 4.998],
    gain_k_ccf: [3.721, 5.0, 3.998, 1.0],
    natural_frequency_squared: 0.004865,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub methods: Vec<MethodReport>,
    /// Distance between the observer-based loop spectrum and the union of
    /// the controller and observer spectra.
    pub separation_residual: f64,
    pub paper: PaperReference,
}

impl ComparisonReport {
    pub fn get(&self, method: Method) -> Option<&MethodReport> {
        self.methods.iter().find(|m| m.method == method)
    }
}

/// Runs every method on the scenario. A failing run is reported in its row
/// and does not stop the others; only a failed design is fatal.
pub fn compare_methods(s: &Scenario) -> Result<ComparisonReport, SimulationError> {
    s.validate()?;
    let design = design_gains(s)?;
    let (a, b, c) = (&design.plant.a, &design.plant.b, &design.plant.c);
    let k = &design.lqr.k;
    let l = &design.observer.l;
    let n = a.rows();
    let separation = assemble_separation_loop(a, b, c, k, l)?;
    let lc = l * c;
    let observer_only = Matrix::block2(a, &Matrix::zeros(n, n), &lc, &(a - &lc)).expect("square blocks");
    let controller_spectrum = design.lqr.closed_loop_spectrum.clone();
    let observer_spectrum = eigenvalues(&(a - &lc)).map_err(crate::synthesis::SynthesisError::from)?;
    let loop_spectrum = eigenvalues(&separation.estimate_form).map_err(crate::synthesis::SynthesisError::from)?;
    let separation_residual = loop_spectrum.distance(&controller_spectrum.union(&observer_spectrum));

    let mut methods = Vec::with_capacity(Method::ALL.len());
    for method in Method::ALL {
        let matrix = match method {
            Method::Uncontrolled => a.clone(),
            Method::Lqr => a - &(b * k),
            Method::ObserverOnly => observer_only.clone(),
            Method::ObserverLqr => separation.estimate_form.clone(),
        };
        let spectrum = eigenvalues(&matrix).map_err(crate::synthesis::SynthesisError::from)?;
        let stability = stability_class(&matrix).map_err(crate::synthesis::SynthesisError::from)?;
        let outcome =
            run_scenario(&s.with_method(method)).and_then(|rec| compute_metrics(&rec, &s.xf, s.settle_band));
        let (metrics, error) = match outcome {
            Ok(m) => (Some(m), None),
            Err(e) => (None, Some(e.to_string())),
        };
        methods.push(MethodReport { method, spectrum, stability, metrics, error });
    }
    Ok(ComparisonReport { methods, separation_residual, paper: PAPER_REFERENCE })
}
