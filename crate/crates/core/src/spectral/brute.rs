use nalgebra::{DMatrix, DVector};

use super::{Result, SpectralError};
use crate::calibration::{CalibrationError, Mat3};
use crate::imaging::{ChartSamples, PATCH_COUNT};

/// Post-correction by direct least squares on the stacked system: 72
/// equations (24 patches × 3 channels) in the 9 entries of `Q`, solved with
/// the SVD pseudo-inverse of the weighted design matrix.
pub fn brute_force_q(
    predicted: &ChartSamples,
    targets: &ChartSamples,
    weights: &[f64],
) -> Result<Mat3> {
    if weights.len() != PATCH_COUNT || weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(SpectralError::Calibration(CalibrationError::Weights(
            "expected 24 finite non-negative weights".into(),
        )));
    }
    let rows = 3 * PATCH_COUNT;
    let mut design = DMatrix::<f64>::zeros(rows, 9);
    let mut rhs = DVector::<f64>::zeros(rows);
    for j in 0..PATCH_COUNT {
        let sw = weights[j].sqrt();
        let x = predicted.patch(j);
        let p = targets.patch(j);
        for r in 0..3 {
            let row = 3 * j + r;
            for k in 0..3 {
                design[(row, 3 * r + k)] = sw * x[k];
            }
            rhs[row] = sw * p[r];
        }
    }
    let svd = design.svd(true, true);
    let tol = svd.singular_values.max() * rows as f64 * f64::EPSILON;
    let rank = svd.rank(tol);
    if rank < 9 {
        return Err(SpectralError::RankDeficient(rank));
    }
    let solution = svd
        .solve(&rhs, tol)
        .map_err(|e| SpectralError::Scene(e.to_string()))?;
    let mut q = [[0.0; 3]; 3];
    for r in 0..3 {
        for k in 0..3 {
            q[r][k] = solution[3 * r + k];
        }
    }
    Ok(Mat3(q))
}
