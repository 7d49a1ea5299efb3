//! Color calibration for RGB LED virtual-production stages.
//!
//! The stage pipeline uses three 3×3 matrices:
//!
//! * `M`, applied to out-of-frustum content that lights the subjects, maps
//!   scene colors to LED drive values so the camera sees the displayed
//!   primaries as the scene colors;
//! * `Q`, applied to the recorded footage, post-corrects the color rendition
//!   of subjects lit by the stage so a color chart matches its appearance in
//!   the original environment;
//! * `N = M·Q⁻¹`, applied to the in-frustum background, pre-compensates for
//!   `Q` so the background still reads correctly after post-correction.
//!
//! [`calibration`] solves these from the calibration captures,
//! [`geometry`] provides the diffuse-convolution integrals (the panel scale
//! factor β and the environment tint `w_avg`), [`imaging`] handles linear
//! image I/O and chart sampling, and [`spectral`] is a synthetic spectral
//! world used as ground truth for the solvers.

// `!(x <= limit)` deliberately rejects NaN; indexed loops mirror the math.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod calibration;
pub mod geometry;
pub mod imaging;
pub mod spectral;

/// A linear RGB triple in camera (or display) space.
pub type Rgb = [f64; 3];

pub use calibration::{CalibrationBundle, Mat3, SrlSet};
pub use geometry::{Direction, EnvMap};
pub use imaging::{ChartGridSpec, ChartSamples, LinearImage};
pub use spectral::{OracleScene, SpectralCurve};
