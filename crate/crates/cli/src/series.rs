use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde_json::{Map, Value};
use srpctl_core::lti::{FrequencyPoint, StepResponse};
use srpctl_core::simulation::{DriftStudy, SimulationRecord};

use crate::{CliError, Format};

pub const TRAJECTORY_COLUMNS: [&str; 13] = [
    "t", "x_p", "y_p", "vx", "vy", "xhat_p", "yhat_q", "vxhat", "vyhat", "ux", "uy", "ref_x", "ref_y",
];

/// Column-ordered numeric table; `None` marks an absent channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }
}

pub fn trajectory_table(rec: &SimulationRecord) -> Table {
    let mut table = Table::new(&TRAJECTORY_COLUMNS);
    for k in 0..rec.len() {
        let x = rec.true_states[k];
        let u = rec.controls[k];
        let r = rec.reference[k];
        let xh = rec.estimates.as_ref().map(|e| e[k]);
        let mut row = vec![Some(rec.times[k])];
        row.extend(x.iter().map(|v| Some(*v)));
        row.extend((0..4).map(|i| xh.map(|e| e[i])));
        row.extend([Some(u[0]), Some(u[1]), Some(r[0]), Some(r[1])]);
        table.rows.push(row);
    }
    table
}

pub fn drift_table(study: &DriftStudy) -> Table {
    let mut table = Table::new(&["t", "deviation", "relative_error"]);
    for s in &study.samples {
        table.rows.push(vec![Some(s.t), Some(s.deviation), Some(s.relative_error)]);
    }
    table
}

/// One row per time and input channel.
pub fn step_table(responses: &[StepResponse]) -> Table {
    let outputs = responses.first().and_then(|r| r.outputs.first()).map_or(0, |y| y.len());
    let names: Vec<String> = (0..outputs).map(|i| format!("y{i}")).collect();
    let mut columns = vec!["t", "input"];
    columns.extend(names.iter().map(String::as_str));
    let mut table = Table::new(&columns);
    for resp in responses {
        for (t, y) in resp.times.iter().zip(&resp.outputs) {
            let mut row = vec![Some(*t), Some(resp.input as f64)];
            row.extend(y.iter().map(|v| Some(*v)));
            table.rows.push(row);
        }
    }
    table
}

/// Real and imaginary parts of every transfer entry, plus `det(I + L)` for
/// square transfers (the multivariable Nyquist locus).
pub fn frequency_table(points: &[FrequencyPoint], outputs: usize, inputs: usize) -> Table {
    let mut names = vec!["omega".to_string()];
    for i in 0..outputs {
        for j in 0..inputs {
            names.push(format!("l{i}{j}_re"));
            names.push(format!("l{i}{j}_im"));
        }
    }
    let square = outputs == inputs && outputs > 0;
    if square {
        names.extend(["det_re".to_string(), "det_im".to_string()]);
    }
    let columns: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut table = Table::new(&columns);
    for p in points {
        let mut row = vec![Some(p.omega)];
        match &p.response {
            Some(h) => {
                for value in h.iter().flatten() {
                    row.extend([Some(value.re), Some(value.im)]);
                }
                if square {
                    let det = crate::commands::return_difference_det(h);
                    row.extend([Some(det.re), Some(det.im)]);
                }
            }
            None => row.resize(names.len(), None),
        }
        table.rows.push(row);
    }
    table
}

/// Scientific notation with 17 significant digits, enough to reproduce the
/// double exactly.
pub fn format_number(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn render(table: &Table, format: Format) -> String {
    match format {
        Format::Csv => {
            let mut out = table.columns.join(",");
            out.push('\n');
            for row in &table.rows {
                let fields: Vec<String> = row.iter().map(|v| v.map(format_number).unwrap_or_default()).collect();
                let _ = writeln!(out, "{}", fields.join(","));
            }
            out
        }
        Format::Json => {
            let rows: Vec<Value> = table
                .rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> = table
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(c, v)| (c.clone(), v.map_or(Value::Null, Value::from)))
                        .collect();
                    Value::Object(obj)
                })
                .collect();
            let mut text = serde_json::to_string_pretty(&rows).expect("numeric rows serialize");
            text.push('\n');
            text
        }
    }
}

pub fn write_series(table: &Table, path: &Path, format: Format) -> Result<(), CliError> {
    if table.rows.is_empty() {
        return Err(CliError::Numerical(format!("refusing to write empty series to {}", path.display())));
    }
    fs::write(path, render(table, format)).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use srpctl_core::simulation::Method;

    fn one_sample() -> SimulationRecord {
        SimulationRecord {
            method: Method::Lqr,
            times: vec![0.1],
            true_states: vec![[4292.87, 8924.17, 7.8, 0.0]],
            estimates: None,
            controls: vec![[1e-3, -2.5e-7]],
            reference: vec![[1.0 / 3.0, 2.0, 3.0, 4.0]],
            estimation_error: None,
        }
    }

    #[test]
    fn one_sample_csv_has_two_lines() {
        let text = render(&trajectory_table(&one_sample()), Format::Csv);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], "t,x_p,y_p,vx,vy,xhat_p,yhat_q,vxhat,vyhat,ux,uy,ref_x,ref_y");
        let fields: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(fields.len(), 13);
        assert!(fields[5..9].iter().all(|f| f.is_empty()));
    }

    #[test]
    fn csv_round_trips_bit_exactly() {
        let rec = one_sample();
        let text = render(&trajectory_table(&rec), Format::Csv);
        let row = text.lines().nth(1).unwrap();
        let values: Vec<f64> = row.split(',').filter(|f| !f.is_empty()).map(|f| f.parse().unwrap()).collect();
        let mut want = vec![rec.times[0]];
        want.extend(rec.true_states[0]);
        want.extend(rec.controls[0]);
        want.extend(&rec.reference[0][..2]);
        assert_eq!(values, want);
        for v in [std::f64::consts::PI, 1e-300, -2.5e-7, 0.1 + 0.2] {
            assert_eq!(format_number(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn json_uses_the_same_names() {
        let text = render(&trajectory_table(&one_sample()), Format::Json);
        let rows: Vec<Map<String, Value>> = serde_json::from_str(&text).unwrap();
        assert_eq!(rows[0].keys().cloned().collect::<Vec<_>>(), TRAJECTORY_COLUMNS.map(String::from).to_vec());
        assert_eq!(rows[0]["xhat_p"], Value::Null);
        assert_eq!(rows[0]["ref_x"].as_f64().unwrap(), 1.0 / 3.0);
    }
}
