use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{LinalgError, Matrix};

const MAX_QR_ITERATIONS: usize = 60;

/// Eigenvalues of a real matrix, ordered by descending real part and then by
/// descending imaginary part. Complex values come in exact conjugate pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum(Vec<Complex64>);

impl Spectrum {
    /// Sorts the supplied values into canonical order.
    pub fn new(mut values: Vec<Complex64>) -> Self {
        values.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
        Self(values)
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self::new(values.iter().map(|v| Complex64::new(*v, 0.0)).collect())
    }

    pub fn values(&self) -> &[Complex64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max_real(&self) -> f64 {
        self.0.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Multiset union of two spectra.
    pub fn union(&self, other: &Spectrum) -> Spectrum {
        Spectrum::new(self.0.iter().chain(&other.0).copied().collect())
    }

    pub fn scaled(&self, factor: f64) -> Spectrum {
        Spectrum::new(self.0.iter().map(|z| z * factor).collect())
    }

    /// True when every non-real value has its conjugate present.
    pub fn is_conjugate_closed(&self, tol: f64) -> bool {
        let mut used = vec![false; self.0.len()];
        for (i, z) in self.0.iter().enumerate() {
            if used[i] || z.im.abs() <= tol {
                used[i] = true;
                continue;
            }
            let partner = (0..self.0.len()).find(|&j| {
                j != i && !used[j] && (self.0[j] - z.conj()).norm() <= tol.max(tol * z.norm())
            });
            match partner {
                Some(j) => {
                    used[i] = true;
                    used[j] = true;
                }
                None => return false,
            }
        }
        true
    }

    /// Largest distance between matched entries of two spectra of equal
    /// length. Matching is greedy nearest-neighbour, which is exact for the
    /// well-separated or exactly repeated sets compared in this crate.
    pub fn distance(&self, other: &Spectrum) -> f64 {
        if self.len() != other.len() {
            return f64::INFINITY;
        }
        let mut taken = vec![false; other.len()];
        let mut worst = 0.0f64;
        for z in &self.0 {
            let (j, d) = other
                .0
                .iter()
                .enumerate()
                .filter(|(j, _)| !taken[*j])
                .map(|(j, w)| (j, (z - w).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("equal lengths");
            taken[j] = true;
            worst = worst.max(d);
        }
        worst
    }
}

/// All eigenvalues of a square matrix.
///
/// Balancing, reduction to upper Hessenberg form by stabilized elementary
/// similarity transforms, then Francis double-shift QR.
pub fn eigenvalues(m: &Matrix) -> Result<Spectrum, LinalgError> {
    if !m.is_square() || m.rows() == 0 {
        return Err(LinalgError::Dimension(format!(
            "eigenvalues need a non-empty square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let n = m.rows();
    // 1-based working copy keeps the QR sweep readable.
    let mut a = vec![vec![0.0; n + 1]; n + 1];
    for i in 0..n {
        for j in 0..n {
            a[i + 1][j + 1] = m[(i, j)];
        }
    }
    balance(&mut a, n);
    to_hessenberg(&mut a, n);
    let values = hessenberg_qr(&mut a, n)?;
    Ok(Spectrum::new(values))
}

fn balance(a: &mut [Vec<f64>], n: usize) {
    const RADIX: f64 = 2.0;
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 1..=n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 1..=n {
                if j != i {
                    c += a[j][i].abs();
                    r += a[i][j].abs();
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut g = r / RADIX;
                let mut f = 1.0;
                let s = c + r;
                while c < g {
                    f *= RADIX;
                    c *= sqrdx;
                }
                g = r * RADIX;
                while c > g {
                    f /= RADIX;
                    c /= sqrdx;
                }
                if (c + r) / f < 0.95 * s {
                    done = false;
                    let g = 1.0 / f;
                    for j in 1..=n {
                        a[i][j] *= g;
                    }
                    for j in 1..=n {
                        a[j][i] *= f;
                    }
                }
            }
        }
    }
}

fn to_hessenberg(a: &mut [Vec<f64>], n: usize) {
    for m in 2..n {
        let mut x = 0.0f64;
        let mut i = m;
        for j in m..=n {
            if a[j][m - 1].abs() > x.abs() {
                x = a[j][m - 1];
                i = j;
            }
        }
        if i != m {
            for j in (m - 1)..=n {
                let tmp = a[i][j];
                a[i][j] = a[m][j];
                a[m][j] = tmp;
            }
            for row in a.iter_mut().take(n + 1).skip(1) {
                row.swap(i, m);
            }
        }
        if x != 0.0 {
            for i in (m + 1)..=n {
                let mut y = a[i][m - 1];
                if y != 0.0 {
                    y /= x;
                    a[i][m - 1] = y;
                    for j in m..=n {
                        a[i][j] -= y * a[m][j];
                    }
                    for j in 1..=n {
                        a[j][m] += y * a[j][i];
                    }
                }
            }
        }
    }
    for i in 1..=n {
        for j in 1..i.saturating_sub(1) {
            a[i][j] = 0.0;
        }
    }
}

fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

#[allow(clippy::many_single_char_names, unused_assignments)]
fn hessenberg_qr(a: &mut [Vec<f64>], n: usize) -> Result<Vec<Complex64>, LinalgError> {
    let mut wr = vec![0.0; n + 1];
    let mut wi = vec![0.0; n + 1];
    let mut anorm = 0.0;
    for i in 1..=n {
        for j in i.saturating_sub(1).max(1)..=n {
            anorm += a[i][j].abs();
        }
    }
    let mut nn = n;
    let mut t = 0.0;
    let (mut p, mut q, mut r) = (0.0, 0.0, 0.0);
    let (mut x, mut y, mut z, mut w);
    while nn >= 1 {
        let mut its = 0;
        loop {
            let mut l = nn;
            while l >= 2 {
                let mut s = a[l - 1][l - 1].abs() + a[l][l].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[l][l - 1].abs() + s == s {
                    a[l][l - 1] = 0.0;
                    break;
                }
                l -= 1;
            }
            x = a[nn][nn];
            if l == nn {
                wr[nn] = x + t;
                wi[nn] = 0.0;
                nn -= 1;
            } else {
                y = a[nn - 1][nn - 1];
                w = a[nn][nn - 1] * a[nn - 1][nn];
                if l == nn - 1 {
                    p = 0.5 * (y - x);
                    q = p * p + w;
                    z = q.abs().sqrt();
                    x += t;
                    if q >= 0.0 {
                        z = p + sign(z, p);
                        wr[nn - 1] = x + z;
                        wr[nn] = x + z;
                        if z != 0.0 {
                            wr[nn] = x - w / z;
                        }
                        wi[nn - 1] = 0.0;
                        wi[nn] = 0.0;
                    } else {
                        wr[nn - 1] = x + p;
                        wr[nn] = x + p;
                        wi[nn - 1] = -z;
                        wi[nn] = z;
                    }
                    nn -= 2;
                } else {
                    if its == MAX_QR_ITERATIONS {
                        return Err(LinalgError::NoConvergence(
                            "Hessenberg QR iteration exceeded its sweep budget".into(),
                        ));
                    }
                    if its == 10 || its == 20 || its == 40 {
                        // exceptional shift
                        t += x;
                        for i in 1..=nn {
                            a[i][i] -= x;
                        }
                        let s = a[nn][nn - 1].abs() + a[nn - 1][nn - 2].abs();
                        x = 0.75 * s;
                        y = x;
                        w = -0.4375 * s * s;
                    }
                    its += 1;
                    let mut m = nn - 2;
                    loop {
                        z = a[m][m];
                        r = x - z;
                        let s = y - z;
                        p = (r * s - w) / a[m + 1][m] + a[m][m + 1];
                        q = a[m + 1][m + 1] - z - r - s;
                        r = a[m + 2][m + 1];
                        let s = p.abs() + q.abs() + r.abs();
                        p /= s;
                        q /= s;
                        r /= s;
                        if m == l {
                            break;
                        }
                        let u = a[m][m - 1].abs() * (q.abs() + r.abs());
                        let v = p.abs() * (a[m - 1][m - 1].abs() + z.abs() + a[m + 1][m + 1].abs());
                        if u + v == v {
                            break;
                        }
                        m -= 1;
                    }
                    for i in (m + 2)..=nn {
                        a[i][i - 2] = 0.0;
                        if i != m + 2 {
                            a[i][i - 3] = 0.0;
                        }
                    }
                    let mut k = m;
                    while k < nn {
                        if k != m {
                            p = a[k][k - 1];
                            q = a[k + 1][k - 1];
                            r = 0.0;
                            if k != nn - 1 {
                                r = a[k + 2][k - 1];
                            }
                            x = p.abs() + q.abs() + r.abs();
                            if x != 0.0 {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        let s = sign((p * p + q * q + r * r).sqrt(), p);
                        if s != 0.0 {
                            if k == m {
                                if l != m {
                                    a[k][k - 1] = -a[k][k - 1];
                                }
                            } else {
                                a[k][k - 1] = -s * x;
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            z = r / s;
                            q /= p;
                            r /= p;
                            for j in k..=nn {
                                p = a[k][j] + q * a[k + 1][j];
                                if k != nn - 1 {
                                    p += r * a[k + 2][j];
                                    a[k + 2][j] -= p * z;
                                }
                                a[k + 1][j] -= p * y;
                                a[k][j] -= p * x;
                            }
                            let mmin = if nn < k + 3 { nn } else { k + 3 };
                            for i in l..=mmin {
                                p = x * a[i][k] + y * a[i][k + 1];
                                if k != nn - 1 {
                                    p += z * a[i][k + 2];
                                    a[i][k + 2] -= p * r;
                                }
                                a[i][k + 1] -= p * q;
                                a[i][k] -= p;
                            }
                        }
                        k += 1;
                    }
                }
            }
            if nn < 2 || l + 1 >= nn {
                break;
            }
        }
    }
    Ok((1..=n).map(|i| Complex64::new(wr[i], wi[i])).collect())
}
