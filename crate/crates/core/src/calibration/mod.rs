//! Solvers for the stage's color matrices and black-level offset.

mod bundle;
mod content;
mod mat3;
mod primary;
mod rendition;

pub use bundle::{CalibrationBundle, Diagnostics};
pub use content::{transform_content, ContentMode, GamutStats};
pub use mat3::Mat3;
pub use primary::{
    build_sl, compute_black_level, solve_m, BlackLevel, BLACK_LEVEL_SUSPICIOUS,
    DEFAULT_COND_LIMIT_SL,
};
pub use rendition::{
    build_srl, chart_error, mean_relative_error, post_correct_chart, predict_patches,
    q_objective, simulate_lit_chart, solve_n, solve_q, QSolution, SimulatedChart, SrlSet,
    DEFAULT_COND_LIMIT_Q, UNIFORM_WEIGHTS,
};

use thiserror::Error;

use crate::imaging::ImagingError;

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("negative or non-finite {what} component {value}")]
    InvalidInput { what: &'static str, value: f64 },
    #[error("{which} is ill-conditioned: condition number {cond:e} exceeds limit {limit:e}")]
    IllConditioned {
        which: &'static str,
        cond: f64,
        limit: f64,
    },
    #[error("white patch index differs between the per-channel charts: {0:?}")]
    WhiteIndexMismatch([usize; 3]),
    #[error("beta must be in (0, 1], got {0}")]
    Beta(f64),
    #[error("weights: {0}")]
    Weights(String),
    #[error("degenerate lighting: predicted chart colors span fewer than 3 dimensions")]
    DegenerateLighting,
    #[error("target white patch channel {0} is not positive")]
    ZeroWhite(usize),
    #[error("invalid bundle: {0}")]
    Bundle(String),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
}

pub type Result<T> = std::result::Result<T, CalibrationError>;

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta <= 1.0 {
        Ok(())
    } else {
        Err(CalibrationError::Beta(beta))
    }
}
