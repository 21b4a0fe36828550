use std::fs;
use std::path::PathBuf;

use num_complex::Complex64;
use serde_json::{json, Value};
use srpctl_core::linalg::{eigenvalues, rank, Matrix};
use srpctl_core::lti::{
    controllability_matrix, default_frequency_grid, frequency_response, observability_matrix, stability_class,
    step_response, ComplexMatrix, StateSpace,
};
use srpctl_core::orbital::{lambert_solve, natural_frequency_squared, propagate_kepler, OrbitState};
use srpctl_core::simulation::{
    compare_methods, compute_metrics, design_gains, run_scenario, srp_drift_study, DisturbanceMatrix, Method,
    Scenario,
};
use srpctl_core::synthesis::{
    assemble_separation_loop, care_residual, hinf_state_feedback, observer_loop_at_input, state_feedback_loop,
};

use crate::series::{drift_table, frequency_table, render, step_table, trajectory_table, Table};
use crate::{load_scenario, CliError, Command, Format, Outcome, RunConfig};

fn numerical(e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(e.to_string())
}

/// A file produced by a command, named without extension for series.
enum Artifact {
    Series(&'static str, Table),
    Report(&'static str, Value),
}

pub fn dispatch(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let scenario = load_scenario(cfg.scenario_path.as_deref(), &cfg.overrides)?;
    let (summary, artifacts) = match cfg.command {
        Command::Analyze => analyze(&scenario)?,
        Command::Synthesize => synthesize(&scenario)?,
        Command::Lambert => lambert(&scenario)?,
        Command::Simulate => simulate(&scenario)?,
        Command::Compare => compare(&scenario)?,
        Command::Drift => drift(&scenario)?,
        Command::Response => response(&scenario)?,
    };
    let files = match &cfg.output_dir {
        Some(dir) => write_artifacts(dir, cfg.format, &artifacts)?,
        None => Vec::new(),
    };
    Ok(Outcome { summary, files })
}

fn write_artifacts(dir: &PathBuf, format: Format, artifacts: &[Artifact]) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Input(format!("cannot create {}: {e}", dir.display())))?;
    let mut written = Vec::with_capacity(artifacts.len());
    for artifact in artifacts {
        let (path, text) = match artifact {
            Artifact::Series(name, table) => {
                if table.rows.is_empty() {
                    return Err(CliError::Numerical(format!("series {name} is empty")));
                }
                (dir.join(format!("{name}.{}", format.extension())), render(table, format))
            }
            Artifact::Report(name, value) => {
                let mut text = serde_json::to_string_pretty(value).expect("report serializes");
                text.push('\n');
                (dir.join(format!("{name}.json")), text)
            }
        };
        fs::write(&path, text).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?;
        written.push(path);
    }
    Ok(written)
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn analyze(s: &Scenario) -> Result<(Value, Vec<Artifact>), CliError> {
    let plant = s.plant()?;
    let spectrum = eigenvalues(&plant.a).map_err(numerical)?;
    let summary = json!({
        "command": "analyze",
        "linearization_radius": s.linearization_radius(),
        "natural_frequency_squared": natural_frequency_squared(s.linearization_radius(), &s.constants),
        "controllability_rank": rank(&controllability_matrix(&plant), None),
        "observability_rank": rank(&observability_matrix(&plant), None),
        "states": plant.states(),
        "open_loop_spectrum": to_value(&spectrum),
        "stability": to_value(&stability_class(&plant.a).map_err(numerical)?),
        "plant": to_value(&plant),
    });
    Ok((summary.clone(), vec![Artifact::Report("analyze", summary)]))
}

fn disturbance_input(s: &Scenario, plant: &StateSpace) -> Matrix {
    match &s.disturbance_matrix_mode {
        DisturbanceMatrix::MatchedViaB => plant.b.clone(),
        DisturbanceMatrix::Custom(g) => g.clone(),
    }
}

fn synthesize(s: &Scenario) -> Result<(Value, Vec<Artifact>), CliError> {
    let design = design_gains(s)?;
    let plant = &design.plant;
    let (a, b, c) = (&plant.a, &plant.b, &plant.c);
    let k = &design.lqr.k;
    let l = &design.observer.l;
    let observer_spectrum = eigenvalues(&(a - &(l * c))).map_err(numerical)?;
    let separation = assemble_separation_loop(a, b, c, k, l).map_err(numerical)?;
    let loop_spectrum = eigenvalues(&separation.estimate_form).map_err(numerical)?;
    let union = design.lqr.closed_loop_spectrum.union(&observer_spectrum);
    let residual = care_residual(a, b, &s.weights, &design.lqr.p).map_err(numerical)?;
    let g = disturbance_input(s, plant);
    let hinf = match hinf_state_feedback(a, b, &g, &s.weights, (s.gamma_range[0], s.gamma_range[1])) {
        Ok(r) => json!({"gamma": r.gamma, "k": to_value(&r.k), "closed_loop_spectrum": to_value(&r.closed_loop_spectrum)}),
        Err(e) => json!({"error": e.to_string()}),
    };
    let summary = json!({
        "command": "synthesize",
        "lqr": {
            "k": to_value(k),
            "p": to_value(&design.lqr.p),
            "care_residual_max_abs": residual.max_abs(),
            "closed_loop_spectrum": to_value(&design.lqr.closed_loop_spectrum),
        },
        "observer": {
            "l": to_value(l),
            "poles": to_value(&design.observer.poles),
            "error_spectrum": to_value(&observer_spectrum),
            "warnings": design.observer.warnings,
        },
        "separation": {
            "loop_spectrum": to_value(&loop_spectrum),
            "distance_to_union": loop_spectrum.distance(&union),
        },
        "hinf": hinf,
    });
    Ok((summary.clone(), vec![Artifact::Report("synthesize", summary)]))
}

fn lambert(s: &Scenario) -> Result<(Value, Vec<Artifact>), CliError> {
    let sol = lambert_solve(s.x0.position, s.xf.position, s.horizon, s.transfer_direction, &s.constants)
        .map_err(numerical)?;
    let arrival = propagate_kepler(&OrbitState::new(s.x0.position, sol.v1), s.horizon, s.constants.mu).map_err(numerical)?;
    let miss = (arrival.position[0] - s.xf.position[0]).hypot(arrival.position[1] - s.xf.position[1]);
    let dv_depart = (sol.v1[0] - s.x0.velocity[0]).hypot(sol.v1[1] - s.x0.velocity[1]);
    let dv_arrive = (s.xf.velocity[0] - sol.v2[0]).hypot(s.xf.velocity[1] - sol.v2[1]);
    let summary = json!({
        "command": "lambert",
        "time_of_flight": s.horizon,
        "direction": to_value(&s.transfer_direction),
        "v1": sol.v1,
        "v2": sol.v2,
        "iterations": sol.iterations,
        "closure_residual": miss,
        "departure_delta_v": dv_depart,
        "arrival_delta_v": dv_arrive,
    });
    Ok((summary.clone(), vec![Artifact::Report("lambert", summary)]))
}

fn simulate(s: &Scenario) -> Result<(Value, Vec<Artifact>), CliError> {
    let rec = run_scenario(s)?;
    let metrics = compute_metrics(&rec, &s.xf, s.settle_band)?;
    let summary = json!({
        "command": "simulate",
        "method": to_value(&s.method),
        "samples": rec.len(),
        "final_state": rec.true_states.last(),
        "metrics": to_value(&metrics),
    });
    Ok((
        summary,
        vec![
            Artifact::Series("trajectory", trajectory_table(&rec)),
            Artifact::Report("metrics", to_value(&metrics)),
        ],
    ))
}

fn compare(s: &Scenario) -> Result<(Value, Vec<Artifact>), CliError> {
    let report = compare_methods(s)?;
    let mut summary = to_value(&report);
    summary
        .as_object_mut()
        .expect("report is an object")
        .insert("command".into(), json!("compare"));
    Ok((summary, vec![Artifact::Report("compare", to_value(&report))]))
}

fn drift(s: &Scenario) -> Result<(Value, Vec<Artifact>), CliError> {
    let study = srp_drift_study(s.horizon, &s.spacecraft, &s.srp, &s.x0, &s.constants)?;
    let max = study.samples.iter().map(|p| p.deviation).fold(0.0, f64::max);
    let summary = json!({
        "command": "drift",
        "duration": s.horizon,
        "acceleration": study.acceleration,
        "ballistic_estimate": study.ballistic_estimate,
        "final_deviation": study.final_deviation(),
        "max_deviation": max,
        "samples": study.samples.len(),
    });
    Ok((summary, vec![Artifact::Series("drift", drift_table(&study))]))
}

/// `det(I + H)` by Gaussian elimination with partial pivoting.
pub fn return_difference_det(h: &ComplexMatrix) -> Complex64 {
    let n = h.len();
    let mut m: Vec<Vec<Complex64>> = h
        .iter()
        .enumerate()
        .map(|(i, row)| row.iter().enumerate().map(|(j, v)| if i == j { v + 1.0 } else { *v }).collect())
        .collect();
    let mut det = Complex64::new(1.0, 0.0);
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| m[x][col].norm().total_cmp(&m[y][col].norm())).unwrap_or(col);
        if m[pivot][col].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        det *= m[col][col];
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for j in col..n {
                let v = m[col][j];
                m[row][j] -= f * v;
            }
        }
    }
    det
}

fn response(s: &Scenario) -> Result<(Value, Vec<Artifact>), CliError> {
    let plant = s.plant()?;
    let (a, b, c) = (&plant.a, &plant.b, &plant.c);
    let (closed, open, open_label) = match s.method {
        Method::Uncontrolled | Method::ObserverOnly => (plant.clone(), plant.clone(), "plant"),
        Method::Lqr => {
            let k = design_gains(s)?.lqr.k;
            let closed = StateSpace::strictly_proper(a - &(b * &k), b.clone(), c.clone()).map_err(numerical)?;
            (closed, state_feedback_loop(a, b, &k).map_err(numerical)?, "loop_at_plant_input")
        }
        Method::ObserverLqr => {
            let design = design_gains(s)?;
            let (k, l) = (&design.lqr.k, &design.observer.l);
            let n = a.rows();
            let sep = assemble_separation_loop(a, b, c, k, l).map_err(numerical)?;
            let big_b = Matrix::vstack(&[b, &Matrix::zeros(n, b.cols())]).map_err(numerical)?;
            let big_c = Matrix::hstack(&[c, &Matrix::zeros(c.rows(), n)]).map_err(numerical)?;
            let closed = StateSpace::strictly_proper(sep.estimate_form, big_b, big_c).map_err(numerical)?;
            (closed, observer_loop_at_input(a, b, c, k, l).map_err(numerical)?, "loop_at_plant_input")
        }
    };
    let steps = step_response(&closed, s.horizon, s.output_dt).map_err(numerical)?;
    let points = frequency_response(&open, &default_frequency_grid()).map_err(numerical)?;
    let summary = json!({
        "command": "response",
        "method": to_value(&s.method),
        "step_of": "disturbance_input_to_position",
        "frequency_response_of": open_label,
        "closed_loop_stability": to_value(&stability_class(&closed.a).map_err(numerical)?),
        "step_samples": steps.first().map_or(0, |r| r.times.len()),
        "frequency_samples": points.len(),
    });
    Ok((
        summary,
        vec![
            Artifact::Series("step", step_table(&steps)),
            Artifact::Series("frequency", frequency_table(&points, open.outputs(), open.inputs())),
        ],
    ))
}
