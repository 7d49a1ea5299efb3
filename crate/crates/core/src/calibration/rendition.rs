//! Color-rendition calibration: chart simulation from per-channel captures,
//! the post-correction `Q`, and the in-frustum pre-correction `N`.

use serde::{Deserialize, Serialize};

use super::{check_beta, CalibrationError, Mat3, Result};
use crate::imaging::{ChartSamples, PATCH_COUNT};
use crate::Rgb;

/// Above this condition number `Q` is not inverted and `N` falls back to `M`.
pub const DEFAULT_COND_LIMIT_Q: f64 = 1e4;
pub const UNIFORM_WEIGHTS: [f64; PATCH_COUNT] = [1.0; PATCH_COUNT];

/// Relative eigenvalue floor of the weighted normal matrix below which
/// the predicted colors are considered to span fewer than 3 dimensions.
const RANK_TOLERANCE: f64 = 1e-13;

/// Per-patch camera response to each LED channel: column `c` of matrix `j`
/// is patch `j` photographed under LED channel `c` alone, at capture scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SrlFields", into = "SrlFields")]
pub struct SrlSet {
    matrices: Vec<Mat3>,
    white_index: usize,
}

#[derive(Serialize, Deserialize)]
struct SrlFields {
    white_index: usize,
    matrices: Vec<Mat3>,
}

impl TryFrom<SrlFields> for SrlSet {
    type Error = CalibrationError;

    fn try_from(f: SrlFields) -> Result<Self> {
        SrlSet::new(f.matrices, f.white_index)
    }
}

impl From<SrlSet> for SrlFields {
    fn from(s: SrlSet) -> Self {
        SrlFields {
            white_index: s.white_index,
            matrices: s.matrices,
        }
    }
}

impl SrlSet {
    pub fn new(matrices: Vec<Mat3>, white_index: usize) -> Result<Self> {
        if matrices.len() != PATCH_COUNT {
            return Err(CalibrationError::Imaging(
                crate::imaging::ImagingError::PatchCount(matrices.len()),
            ));
        }
        if white_index >= PATCH_COUNT {
            return Err(CalibrationError::Imaging(
                crate::imaging::ImagingError::WhiteIndex(white_index),
            ));
        }
        for m in &matrices {
            for &value in m.0.iter().flatten() {
                if !value.is_finite() || value < 0.0 {
                    return Err(CalibrationError::InvalidInput {
                        what: "[SRL]",
                        value,
                    });
                }
            }
        }
        Ok(Self {
            matrices,
            white_index,
        })
    }

    pub fn matrices(&self) -> &[Mat3] {
        &self.matrices
    }

    pub fn get(&self, j: usize) -> &Mat3 {
        &self.matrices[j]
    }

    pub fn white_index(&self) -> usize {
        self.white_index
    }
}

/// Assembles `[SRL]_j` from the charts captured under the red, green and
/// blue channels.
pub fn build_srl(red: &ChartSamples, green: &ChartSamples, blue: &ChartSamples) -> Result<SrlSet> {
    let idx = [red.white_index(), green.white_index(), blue.white_index()];
    if idx[0] != idx[1] || idx[0] != idx[2] {
        return Err(CalibrationError::WhiteIndexMismatch(idx));
    }
    let matrices = (0..PATCH_COUNT)
        .map(|j| Mat3::from_columns([red.patch(j), green.patch(j), blue.patch(j)]))
        .collect();
    SrlSet::new(matrices, idx[0])
}

/// Unclamped predicted chart under the stage: `(1/β)·[SRL]_j·M·w_avg`.
pub fn predict_patches(srl: &SrlSet, m: &Mat3, w_avg: Rgb, beta: f64) -> Result<Vec<Rgb>> {
    check_beta(beta)?;
    let drive = *m * w_avg;
    Ok(srl
        .matrices
        .iter()
        .map(|s| (*s * drive).map(|v| v / beta))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedChart {
    pub chart: ChartSamples,
    /// Number of negative predicted components clamped to zero.
    pub clamped: usize,
}

fn clamp_chart(patches: Vec<Rgb>, white_index: usize) -> Result<SimulatedChart> {
    let mut clamped = 0;
    let patches: Vec<Rgb> = patches
        .into_iter()
        .map(|p| {
            p.map(|v| {
                if v < 0.0 {
                    clamped += 1;
                    0.0
                } else {
                    v
                }
            })
        })
        .collect();
    if clamped > 0 {
        log::warn!("{clamped} negative predicted chart components clamped to 0");
    }
    Ok(SimulatedChart {
        chart: ChartSamples::new(&patches, white_index)?,
        clamped,
    })
}

/// Appearance of the chart lit by the stage showing an environment with
/// diffuse integral `w_avg` through `M`.
pub fn simulate_lit_chart(
    srl: &SrlSet,
    m: &Mat3,
    w_avg: Rgb,
    beta: f64,
) -> Result<SimulatedChart> {
    clamp_chart(predict_patches(srl, m, w_avg, beta)?, srl.white_index)
}

/// `Q` applied to every patch, negatives clamped to zero.
pub fn post_correct_chart(chart: &ChartSamples, q: &Mat3) -> Result<SimulatedChart> {
    let patches = chart.patches().iter().map(|&p| *q * p).collect();
    clamp_chart(patches, chart.white_index())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QSolution {
    pub q: Mat3,
    /// Weighted sum of squared errors at `q`.
    pub residual: f64,
    /// Dimension spanned by the weighted predicted colors. Below 3 the
    /// minimizer is not unique and `q` is the one nearest the identity.
    pub rank: usize,
}

fn check_weights(weights: &[f64]) -> Result<()> {
    if weights.len() != PATCH_COUNT {
        return Err(CalibrationError::Weights(format!(
            "expected {PATCH_COUNT}, got {}",
            weights.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(CalibrationError::Weights(format!("invalid weight {w}")));
    }
    Ok(())
}

/// `Σ_j weight_j·‖Q·x_j − p_j‖²` with `x_j` the unclamped prediction.
pub fn q_objective(
    q: &Mat3,
    srl: &SrlSet,
    m: &Mat3,
    w_avg: Rgb,
    targets: &ChartSamples,
    beta: f64,
    weights: &[f64],
) -> Result<f64> {
    check_weights(weights)?;
    let predicted = predict_patches(srl, m, w_avg, beta)?;
    Ok(weighted_sse(q, &predicted, targets, weights))
}

fn weighted_sse(q: &Mat3, predicted: &[Rgb], targets: &ChartSamples, weights: &[f64]) -> f64 {
    predicted
        .iter()
        .zip(targets.patches())
        .zip(weights)
        .map(|((x, p), w)| {
            let qx = *q * *x;
            w * (0..3).map(|c| (qx[c] - p[c]).powi(2)).sum::<f64>()
        })
        .sum()
}

/// Least-squares post-correction.
///
/// The objective separates by output channel, so each row `q_r` of `Q`
/// solves the same weighted normal equations `A q_r = Σ w·x·p_r` with
/// `A = Σ w·x·xᵀ`. Writing `q_r = e_r + d_r`, the correction `d_r` is taken
/// as the minimum-norm solution through the eigen-decomposition of `A`:
/// with full rank this is the unique minimizer, otherwise it is the
/// minimizer closest to the identity.
pub fn solve_q(
    srl: &SrlSet,
    m: &Mat3,
    w_avg: Rgb,
    targets: &ChartSamples,
    beta: f64,
    weights: &[f64],
) -> Result<QSolution> {
    check_weights(weights)?;
    let predicted = predict_patches(srl, m, w_avg, beta)?;

    let mut normal = [[0.0; 3]; 3];
    let mut rhs = [[0.0; 3]; 3]; // rhs[r] pairs with output channel r
    for ((x, p), &w) in predicted.iter().zip(targets.patches()).zip(weights) {
        if w == 0.0 {
            continue;
        }
        for a in 0..3 {
            for b in 0..3 {
                normal[a][b] += w * x[a] * x[b];
            }
            for r in 0..3 {
                rhs[r][a] += w * x[a] * p[r];
            }
        }
    }
    let normal = Mat3(normal);
    if !normal.is_finite() || !rhs.iter().flatten().all(|v| v.is_finite()) {
        return Err(CalibrationError::InvalidInput {
            what: "predicted chart",
            value: f64::NAN,
        });
    }
    let (eigvals, eigvecs) = normal.symmetric_eigen();
    if !(eigvals[0] > 0.0) {
        return Err(CalibrationError::DegenerateLighting);
    }
    let rank = eigvals
        .iter()
        .filter(|&&l| l > RANK_TOLERANCE * eigvals[0])
        .count();
    if rank < 3 {
        log::warn!("predicted chart colors span only {rank} dimension(s); Q is underdetermined");
    }

    let mut q = Mat3::IDENTITY;
    for (r, q_row) in q.0.iter_mut().enumerate() {
        // residual right-hand side after the identity row
        let g = [0, 1, 2].map(|a| rhs[r][a] - normal.0[a][r]);
        for k in 0..rank {
            let v = eigvecs.column(k);
            let coef = (v[0] * g[0] + v[1] * g[1] + v[2] * g[2]) / eigvals[k];
            for a in 0..3 {
                q_row[a] += coef * v[a];
            }
        }
    }
    let residual = weighted_sse(&q, &predicted, targets, weights);
    Ok(QSolution { q, residual, rank })
}

/// In-frustum pre-correction `N = M·Q⁻¹`, or `None` when `Q` is too
/// ill-conditioned to invert (the caller then falls back to `M`).
pub fn solve_n(m: &Mat3, q: &Mat3, cond_limit: f64) -> Option<Mat3> {
    if !m.is_finite() || !q.is_finite() {
        return None;
    }
    let cond = q.condition_number();
    if !(cond <= cond_limit) {
        log::warn!("Q condition number {cond:e} exceeds {cond_limit:e}; N unavailable");
        return None;
    }
    q.inverse().map(|qi| *m * qi)
}

/// Mean absolute error per channel relative to the target's white patch:
/// `(1/24)·Σ_j |measured − target| / target_white`.
pub fn chart_error(target: &ChartSamples, measured: &ChartSamples) -> Result<Rgb> {
    let white = target.white();
    if let Some(c) = (0..3).find(|&c| !(white[c] > 0.0)) {
        return Err(CalibrationError::ZeroWhite(c));
    }
    let mut err = [0.0; 3];
    for (t, m) in target.patches().iter().zip(measured.patches()) {
        for c in 0..3 {
            err[c] += (m[c] - t[c]).abs();
        }
    }
    Ok([0, 1, 2].map(|c| err[c] / white[c] / PATCH_COUNT as f64))
}

/// Channel average of [`chart_error`].
pub fn mean_relative_error(err: Rgb) -> f64 {
    (err[0] + err[1] + err[2]) / 3.0
}
