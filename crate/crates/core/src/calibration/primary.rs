use super::{CalibrationError, Mat3, Result};
use crate::Rgb;

/// Above this condition number the primary capture is treated as broken.
pub const DEFAULT_COND_LIMIT_SL: f64 = 1e6;
/// Offsets beyond this are implausible for panel albedos of a few percent.
pub const BLACK_LEVEL_SUSPICIOUS: f64 = 0.2;

fn check_nonneg(what: &'static str, v: Rgb) -> Result<()> {
    for value in v {
        if !value.is_finite() || value < 0.0 {
            return Err(CalibrationError::InvalidInput { what, value });
        }
    }
    Ok(())
}

/// Camera response to each LED primary, one primary per column.
pub fn build_sl(red: Rgb, green: Rgb, blue: Rgb) -> Result<Mat3> {
    check_nonneg("red primary", red)?;
    check_nonneg("green primary", green)?;
    check_nonneg("blue primary", blue)?;
    Ok(Mat3::from_columns([red, green, blue]))
}

/// Primary-based pre-correction `M = [SL]⁻¹`.
pub fn solve_m(sl: &Mat3, cond_limit: f64) -> Result<Mat3> {
    if !sl.is_finite() {
        return Err(CalibrationError::InvalidInput {
            what: "[SL]",
            value: f64::NAN,
        });
    }
    let cond = sl.condition_number();
    if !(cond <= cond_limit) {
        return Err(CalibrationError::IllConditioned {
            which: "[SL]",
            cond,
            limit: cond_limit,
        });
    }
    sl.inverse().ok_or(CalibrationError::IllConditioned {
        which: "[SL]",
        cond: f64::INFINITY,
        limit: cond_limit,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlackLevel {
    /// Content-space offset subtracted from in-frustum pixels.
    pub offset: Rgb,
    /// Some component exceeds [`BLACK_LEVEL_SUSPICIOUS`].
    pub suspicious: bool,
}

/// `b_camera / w_camera` per channel, where `b_camera` is the camera reading
/// of the dark in-frustum panels while the stage lights the set and
/// `w_camera` the camera reading of displayed `[1, 1, 1]`.
pub fn compute_black_level(b_camera: Rgb, w_camera: Rgb) -> Result<BlackLevel> {
    check_nonneg("black level", b_camera)?;
    for value in w_camera {
        if !(value.is_finite() && value > 0.0) {
            return Err(CalibrationError::InvalidInput {
                what: "w_camera",
                value,
            });
        }
    }
    let offset = [0, 1, 2].map(|c| b_camera[c] / w_camera[c]);
    let suspicious = offset.iter().any(|&o| o > BLACK_LEVEL_SUSPICIOUS);
    if suspicious {
        log::warn!("black level offset {offset:?} is unusually large");
    }
    Ok(BlackLevel { offset, suspicious })
}
