use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::SynthesisError;
use crate::linalg::{eigenvalues, rank, solve_linear, Matrix, Spectrum};

/// A group of states driven by a single input column, decoupled from every
/// other group in both `a` and `b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Channel {
    pub states: Vec<usize>,
    pub input: usize,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Splits `(a, b)` into single-input channels by the connected components of
/// the state/input coupling graph. Fails if a component has no input
/// (uncontrollable) or more than one input.
pub fn channel_structure(a: &Matrix, b: &Matrix) -> Result<Vec<Channel>, SynthesisError> {
    let n = a.rows();
    let m = b.cols();
    let mut parent: Vec<usize> = (0..n + m).collect();
    let join = |parent: &mut Vec<usize>, i: usize, j: usize| {
        let (ri, rj) = (find(parent, i), find(parent, j));
        if ri != rj {
            parent[ri.max(rj)] = ri.min(rj);
        }
    };
    for i in 0..n {
        for j in 0..n {
            if i != j && a[(i, j)] != 0.0 {
                join(&mut parent, i, j);
            }
        }
        for k in 0..m {
            if b[(i, k)] != 0.0 {
                join(&mut parent, i, n + k);
            }
        }
    }
    let mut channels: Vec<(usize, Vec<usize>, Vec<usize>)> = Vec::new();
    for i in 0..n + m {
        let root = find(&mut parent, i);
        let idx = match channels.iter().position(|c| c.0 == root) {
            Some(idx) => idx,
            None => {
                channels.push((root, Vec::new(), Vec::new()));
                channels.len() - 1
            }
        };
        if i < n {
            channels[idx].1.push(i);
        } else {
            channels[idx].2.push(i - n);
        }
    }
    channels
        .into_iter()
        .filter(|(_, states, _)| !states.is_empty())
        .map(|(_, states, inputs)| match inputs.as_slice() {
            [input] => Ok(Channel { states, input: *input }),
            [] => Err(SynthesisError::NotControllable(format!("states {states:?} are not reached by any input"))),
            _ => Err(SynthesisError::InvalidInput(format!(
                "states {states:?} are coupled to inputs {inputs:?}; placement needs single-input channels"
            ))),
        })
        .collect()
}

/// Real coefficients of Π(s − λᵢ), highest power first.
fn monic_polynomial(roots: &[Complex64]) -> Vec<f64> {
    let mut coeffs = vec![Complex64::new(1.0, 0.0)];
    for &root in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); coeffs.len() + 1];
        for (i, c) in coeffs.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= c * root;
        }
        coeffs = next;
    }
    coeffs.into_iter().map(|c| c.re).collect()
}

/// Ackermann's formula for one single-input channel.
fn ackermann(a: &Matrix, b: &Matrix, poles: &[Complex64]) -> Result<Vec<f64>, SynthesisError> {
    let n = a.rows();
    let mut ctrb = Matrix::zeros(n, n);
    let mut col = b.clone();
    for j in 0..n {
        ctrb.set_block(0, j, &col);
        col = a * &col;
    }
    if rank(&ctrb, None) < n {
        return Err(SynthesisError::NotControllable("channel controllability matrix is rank deficient".into()));
    }
    // φ(a) by Horner's rule.
    let coeffs = monic_polynomial(poles);
    let mut phi = Matrix::zeros(n, n);
    for c in &coeffs {
        phi = &(&phi * a) + &Matrix::identity(n).scale(*c);
    }
    let mut last = Matrix::zeros(n, 1);
    last.set_block(n - 1, 0, &Matrix::column(&[1.0]));
    let x = solve_linear(&ctrb.transpose(), &last)?;
    let k = &x.transpose() * &phi;
    Ok(k.row(0).to_vec())
}

/// Splits the requested poles into conjugate-closed groups of the channel
/// sizes, in order.
fn partition(poles: &Spectrum, sizes: &[usize]) -> Option<Vec<Vec<Complex64>>> {
    let tol = 1e-12 * poles.values().iter().map(|z| z.norm()).fold(1.0, f64::max);
    let mut units: Vec<Vec<Complex64>> = Vec::new();
    let mut used = vec![false; poles.len()];
    for (i, z) in poles.values().iter().enumerate() {
        if used[i] {
            continue;
        }
        used[i] = true;
        if z.im.abs() <= tol {
            units.push(vec![Complex64::new(z.re, 0.0)]);
        } else {
            let j = (0..poles.len()).find(|&j| !used[j] && (poles.values()[j] - z.conj()).norm() <= tol.max(tol * z.norm()))?;
            used[j] = true;
            units.push(vec![*z, z.conj()]);
        }
    }
    fn assign(units: &[Vec<Complex64>], taken: &mut [bool], sizes: &[usize], out: &mut Vec<Vec<Complex64>>) -> bool {
        let Some((&size, rest)) = sizes.split_first() else {
            return true;
        };
        fn fill(
            units: &[Vec<Complex64>],
            taken: &mut [bool],
            need: usize,
            start: usize,
            group: &mut Vec<Complex64>,
            rest: &[usize],
            out: &mut Vec<Vec<Complex64>>,
        ) -> bool {
            if need == 0 {
                out.push(group.clone());
                if assign(units, taken, rest, out) {
                    return true;
                }
                out.pop();
                return false;
            }
            for u in start..units.len() {
                if taken[u] || units[u].len() > need {
                    continue;
                }
                taken[u] = true;
                let len = group.len();
                group.extend_from_slice(&units[u]);
                if fill(units, taken, need - units[u].len(), u + 1, group, rest, out) {
                    return true;
                }
                group.truncate(len);
                taken[u] = false;
            }
            false
        }
        fill(units, taken, size, 0, &mut Vec::new(), rest, out)
    }
    let mut taken = vec![false; units.len()];
    let mut out = Vec::new();
    assign(&units, &mut taken, sizes, &mut out).then_some(out)
}

/// Gain `k` with eig(a − b·k) equal to `desired`, computed per decoupled
/// single-input channel by Ackermann's formula and assembled block-wise.
pub fn place_poles(a: &Matrix, b: &Matrix, desired: &Spectrum) -> Result<Matrix, SynthesisError> {
    let n = a.rows();
    if !a.is_square() || b.rows() != n {
        return Err(SynthesisError::InvalidInput(format!("a is {:?}, b is {:?}", a.shape(), b.shape())));
    }
    if desired.len() != n {
        return Err(SynthesisError::InvalidInput(format!("{} poles requested for {n} states", desired.len())));
    }
    let scale = desired.values().iter().map(|z| z.norm()).fold(1.0, f64::max);
    if !desired.is_conjugate_closed(1e-12 * scale) {
        return Err(SynthesisError::InvalidInput("requested poles are not closed under conjugation".into()));
    }
    let channels = channel_structure(a, b)?;
    let sizes: Vec<usize> = channels.iter().map(|c| c.states.len()).collect();
    let groups = partition(desired, &sizes).ok_or_else(|| {
        SynthesisError::InvalidInput("requested poles cannot be split into conjugate-closed channel sets".into())
    })?;
    let mut k = Matrix::zeros(b.cols(), n);
    for (channel, poles) in channels.iter().zip(&groups) {
        let ac = a.submatrix(&channel.states, &channel.states);
        let bc = b.submatrix(&channel.states, &[channel.input]);
        let kc = ackermann(&ac, &bc, poles)?;
        for (t, &state) in channel.states.iter().enumerate() {
            k.set_block(channel.input, state, &Matrix::column(&[kc[t]]));
        }
    }
    Ok(k)
}

/// Observer gain and the poles it was designed for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObserverDesign {
    pub l: Matrix,
    pub poles: Spectrum,
    pub warnings: Vec<String>,
}

/// Full-order observer gain by duality: `l = place_poles(aᵀ, cᵀ, factor·base)ᵀ`.
/// Speed factors outside [3, 5] are allowed but reported in `warnings`.
pub fn observer_gain(
    a: &Matrix,
    c: &Matrix,
    speed_factor: f64,
    base_poles: &Spectrum,
) -> Result<ObserverDesign, SynthesisError> {
    if !(speed_factor > 0.0 && speed_factor.is_finite()) {
        return Err(SynthesisError::InvalidInput(format!("speed factor {speed_factor} must be positive")));
    }
    let mut warnings = Vec::new();
    if !(3.0..=5.0).contains(&speed_factor) {
        warnings.push(format!(
            "observer speed factor {speed_factor} is outside the recommended range [3, 5]"
        ));
    }
    let poles = base_poles.scaled(speed_factor);
    let lt = place_poles(&a.transpose(), &c.transpose(), &poles).map_err(|e| match e {
        SynthesisError::NotControllable(msg) => {
            SynthesisError::NotObservable(format!("dual pair (aᵀ, cᵀ) fails: {msg}"))
        }
        other => other,
    })?;
    let l = lt.transpose();
    if eigenvalues(&(a - &(&l * c)))?.max_real() >= 0.0 {
        return Err(SynthesisError::Numerical("observer error dynamics are not Hurwitz".into()));
    }
    Ok(ObserverDesign { l, poles, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const W2: f64 = 4.104e-7;

    fn channel() -> (Matrix, Matrix) {
        (
            Matrix::from_rows(&[[0.0, 1.0], [W2, 0.0]]).unwrap(),
            Matrix::column(&[0.0, 1.0]),
        )
    }

    #[test]
    fn double_integrator_gain() {
        let a = Matrix::from_rows(&[[0.0, 1.0], [0.0, 0.0]]).unwrap();
        let k = place_poles(&a, &Matrix::column(&[0.0, 1.0]), &Spectrum::from_real(&[-1.0, -1.0])).unwrap();
        assert_eq!(k.row(0), &[1.0, 2.0]);
    }

    #[test]
    fn saddle_channel_gain() {
        let (a, b) = channel();
        let k = place_poles(&a, &b, &Spectrum::from_real(&[-1.0, -1.0])).unwrap();
        assert!((k[(0, 0)] - (1.0 + W2)).abs() < 1e-10);
        assert!((k[(0, 1)] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn dual_observer_gain() {
        let (a, _) = channel();
        let c = Matrix::from_rows(&[[1.0, 0.0]]).unwrap();
        let design = observer_gain(&a, &c, 4.0, &Spectrum::from_real(&[-1.0, -1.0])).unwrap();
        assert!((design.l[(0, 0)] - 8.0).abs() < 1e-10);
        assert!((design.l[(1, 0)] - (16.0 + W2)).abs() < 1e-10);
        assert!(design.poles.distance(&Spectrum::from_real(&[-4.0, -4.0])) == 0.0);
        assert!(design.warnings.is_empty());
        let slow = observer_gain(&a, &c, 2.0, &Spectrum::from_real(&[-1.0, -1.0])).unwrap();
        assert_eq!(slow.warnings.len(), 1);
    }

    #[test]
    fn unobservable_output() {
        let (a, _) = channel();
        let c = Matrix::zeros(1, 2);
        let err = observer_gain(&a, &c, 4.0, &Spectrum::from_real(&[-1.0, -1.0])).unwrap_err();
        assert!(matches!(err, SynthesisError::NotObservable(_)), "{err:?}");
    }

    #[test]
    fn interleaved_channels_are_found() {
        let a = Matrix::from_rows(&[
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [W2, 0.0, 0.0, 0.0],
            [0.0, W2, 0.0, 0.0],
        ])
        .unwrap();
        let b = Matrix::from_rows(&[[0.0, 0.0], [0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let ch = channel_structure(&a, &b).unwrap();
        assert_eq!(ch, vec![Channel { states: vec![0, 2], input: 0 }, Channel { states: vec![1, 3], input: 1 }]);
        let k = place_poles(&a, &b, &Spectrum::from_real(&[-1.0; 4])).unwrap();
        assert!((k[(0, 0)] - (1.0 + W2)).abs() < 1e-12 && (k[(0, 2)] - 2.0).abs() < 1e-12);
        assert!((k[(1, 1)] - (1.0 + W2)).abs() < 1e-12 && (k[(1, 3)] - 2.0).abs() < 1e-12);
        assert_eq!(k[(0, 1)], 0.0);
        assert_eq!(k[(1, 0)], 0.0);
    }

    #[test]
    fn bad_requests() {
        let (a, b) = channel();
        let not_closed = Spectrum::new(vec![Complex64::new(-1.0, 1.0), Complex64::new(-1.0, 2.0)]);
        assert!(matches!(place_poles(&a, &b, &not_closed), Err(SynthesisError::InvalidInput(_))));
        assert!(place_poles(&a, &b, &Spectrum::from_real(&[-1.0])).is_err());
        let uncontrollable = Matrix::column(&[1.0, 0.0]);
        let a0 = Matrix::from_rows(&[[0.0, 1.0], [0.0, 0.0]]).unwrap();
        assert!(matches!(
            place_poles(&Matrix::diag(&[1.0, 2.0]), &uncontrollable, &Spectrum::from_real(&[-1.0, -2.0])),
            Err(SynthesisError::NotControllable(_))
        ));
        assert!(place_poles(&a0, &uncontrollable, &Spectrum::from_real(&[-1.0, -2.0])).is_err());
    }

    proptest! {
        #[test]
        fn placement_round_trip(
            re in proptest::collection::vec(-3.0f64..-0.1, 2),
            im in 0.05f64..2.0,
            w2 in 1e-8f64..1e-2,
        ) {
            let a = Matrix::from_rows(&[
                [0.0, 0.0, 1.0, 0.0],
                [0.0, 0.0, 0.0, 1.0],
                [w2, 0.0, 0.0, 0.0],
                [0.0, w2, 0.0, 0.0],
            ]).unwrap();
            let b = Matrix::from_rows(&[[0.0, 0.0], [0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
            let desired = Spectrum::new(vec![
                Complex64::new(re[0], im),
                Complex64::new(re[0], -im),
                Complex64::new(re[1], 0.0),
                Complex64::new(re[1] - 0.5, 0.0),
            ]);
            let k = place_poles(&a, &b, &desired).unwrap();
            let got = eigenvalues(&(&a - &(&b * &k))).unwrap();
            prop_assert!(got.distance(&desired) < 1e-8, "{:?} vs {:?}", got, desired);
        }
    }
}
