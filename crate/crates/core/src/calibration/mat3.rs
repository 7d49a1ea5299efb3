use std::ops::{Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::Rgb;

/// Row-major 3×3 matrix. In color matrices rows index camera (output)
/// channels and columns index input channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub const IDENTITY: Mat3 = Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
    pub const ZERO: Mat3 = Mat3([[0.0; 3]; 3]);

    pub fn diag(d: Rgb) -> Self {
        Mat3([[d[0], 0.0, 0.0], [0.0, d[1], 0.0], [0.0, 0.0, d[2]]])
    }

    pub fn from_columns(cols: [Rgb; 3]) -> Self {
        let mut m = [[0.0; 3]; 3];
        for (c, col) in cols.iter().enumerate() {
            for r in 0..3 {
                m[r][c] = col[r];
            }
        }
        Mat3(m)
    }

    pub fn column(&self, c: usize) -> Rgb {
        [self.0[0][c], self.0[1][c], self.0[2][c]]
    }

    pub fn transpose(&self) -> Self {
        Mat3::from_columns(self.0)
    }

    pub fn scale(&self, s: f64) -> Self {
        Mat3(self.0.map(|row| row.map(|v| v * s)))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.0.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Gauss-Jordan elimination with partial pivoting. `None` if a pivot
    /// vanishes.
    pub fn inverse(&self) -> Option<Mat3> {
        let mut a = self.0;
        let mut inv = Mat3::IDENTITY.0;
        for col in 0..3 {
            let pivot = (col..3)
                .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
                .unwrap();
            if a[pivot][col] == 0.0 || !a[pivot][col].is_finite() {
                return None;
            }
            a.swap(col, pivot);
            inv.swap(col, pivot);
            let p = a[col][col];
            for k in 0..3 {
                a[col][k] /= p;
                inv[col][k] /= p;
            }
            for row in 0..3 {
                if row != col {
                    let f = a[row][col];
                    if f != 0.0 {
                        for k in 0..3 {
                            a[row][k] -= f * a[col][k];
                            inv[row][k] -= f * inv[col][k];
                        }
                    }
                }
            }
        }
        Some(Mat3(inv))
    }

    /// Singular values in descending order (one-sided Jacobi).
    pub fn singular_values(&self) -> [f64; 3] {
        let mut cols = [self.column(0), self.column(1), self.column(2)];
        let dot = |a: &Rgb, b: &Rgb| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        for _sweep in 0..60 {
            let mut rotated = false;
            for i in 0..2 {
                for j in i + 1..3 {
                    let alpha = dot(&cols[i], &cols[i]);
                    let beta = dot(&cols[j], &cols[j]);
                    let gamma = dot(&cols[i], &cols[j]);
                    if gamma == 0.0 || gamma.abs() <= 1e-17 * (alpha * beta).sqrt() {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (2.0 * gamma);
                    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    let (ci, cj) = (cols[i], cols[j]);
                    for k in 0..3 {
                        cols[i][k] = c * ci[k] - s * cj[k];
                        cols[j][k] = s * ci[k] + c * cj[k];
                    }
                }
            }
            if !rotated {
                break;
            }
        }
        let mut sv = cols.map(|c| dot(&c, &c).sqrt());
        sv.sort_by(|a, b| b.total_cmp(a));
        sv
    }

    /// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
    /// Returns eigenvalues in descending order and the matching unit
    /// eigenvectors as columns.
    pub fn symmetric_eigen(&self) -> (Rgb, Mat3) {
        let mut a = self.0;
        let mut v = Mat3::IDENTITY.0;
        for _sweep in 0..60 {
            let off = a[0][1].abs() + a[0][2].abs() + a[1][2].abs();
            let scale = a[0][0].abs() + a[1][1].abs() + a[2][2].abs();
            if off == 0.0 || off <= 1e-18 * scale {
                break;
            }
            for (p, q) in [(0, 1), (0, 2), (1, 2)] {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..3 {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..3 {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
        let mut order = [0usize, 1, 2];
        order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]));
        let values = order.map(|i| a[i][i]);
        let vectors = Mat3::from_columns(order.map(|i| [v[0][i], v[1][i], v[2][i]]));
        (values, vectors)
    }

    /// `σ_max / σ_min`; infinite for a singular matrix.
    pub fn condition_number(&self) -> f64 {
        let sv = self.singular_values();
        if sv[2] == 0.0 {
            f64::INFINITY
        } else {
            sv[0] / sv[2]
        }
    }
}

impl Mul for Mat3 {
    type Output = Mat3;

    fn mul(self, rhs: Mat3) -> Mat3 {
        let mut out = [[0.0; 3]; 3];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| self.0[r][k] * rhs.0[k][c]).sum();
            }
        }
        Mat3(out)
    }
}

impl Mul<Rgb> for Mat3 {
    type Output = Rgb;

    fn mul(self, v: Rgb) -> Rgb {
        self.0
            .map(|row| row[0] * v[0] + row[1] * v[1] + row[2] * v[2])
    }
}

impl Sub for Mat3 {
    type Output = Mat3;

    fn sub(self, rhs: Mat3) -> Mat3 {
        let mut out = self.0;
        for r in 0..3 {
            for c in 0..3 {
                out[r][c] -= rhs.0[r][c];
            }
        }
        Mat3(out)
    }
}
