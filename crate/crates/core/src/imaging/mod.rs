//! Linear image I/O, display transfer function, chart sampling and
//! comparison-chart rendering.

mod chart;
mod compare;
mod pfm;
mod png_io;
mod sampling;
mod transfer;

pub use chart::{
    extract_chart, normalize_green_white, read_chart_csv, read_chart_csv_from, write_chart_csv,
    write_chart_csv_to, ChartExtraction, ChartGridSpec, ChartSamples, CHART_COLS, CHART_ROWS,
    DEFAULT_INSET, DEFAULT_WHITE_INDEX, PATCH_COUNT,
};
pub use compare::{render_comparison_chart, COMPARISON_PATCH_PX};
pub use pfm::{read_pfm, read_pfm_from, write_pfm, write_pfm_to};
pub use png_io::{read_png, write_png16};
pub use sampling::{sample_region, trimmed_mean, Roi, TRIM_FRACTION};
pub use transfer::{decode_transfer, encode_transfer, DISPLAY_GAMMA};

use std::path::PathBuf;

use thiserror::Error;

/// Largest value a display-referred encoding can hold; regions sitting at
/// this level are reported as clipped.
pub const ENCODING_MAX: f32 = 1.0;

#[derive(Debug, Error)]
pub enum ImagingError {
    #[error("image data has {actual} pixels, expected {width}x{height}")]
    SizeMismatch {
        width: usize,
        height: usize,
        actual: usize,
    },
    #[error("invalid pixel value {value} at ({x}, {y}) channel {channel}")]
    InvalidPixel {
        x: usize,
        y: usize,
        channel: usize,
        value: f32,
    },
    #[error("gamma must be positive and finite, got {0}")]
    InvalidGamma(f64),
    #[error("chart must have exactly {PATCH_COUNT} patches, got {0}")]
    PatchCount(usize),
    #[error("white patch index {0} out of range")]
    WhiteIndex(usize),
    #[error("invalid value {value} in patch {patch}")]
    InvalidPatchValue { patch: usize, value: f64 },
    #[error("chart grid: {0}")]
    Grid(String),
    #[error("patch {patch} region covers {pixels} pixels, need at least 4")]
    PatchTooSmall { patch: usize, pixels: usize },
    #[error("region of interest {0:?} is empty or outside the image")]
    Roi(Roi),
    #[error("white patch green channel is zero in the {0} chart")]
    ZeroGreenWhite(&'static str),
    #[error("PFM: {0}")]
    Pfm(String),
    #[error("PNG: {0}")]
    Png(String),
    #[error("chart CSV: {0}")]
    Csv(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, ImagingError>;

fn check_len(width: usize, height: usize, actual: usize) -> Result<()> {
    if width.checked_mul(height) != Some(actual) {
        return Err(ImagingError::SizeMismatch {
            width,
            height,
            actual,
        });
    }
    Ok(())
}

/// Scene-linear RGB image, row-major, top row first.
///
/// Every component is finite and non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearImage {
    width: usize,
    height: usize,
    data: Vec<[f32; 3]>,
}

impl LinearImage {
    pub fn new(width: usize, height: usize, data: Vec<[f32; 3]>) -> Result<Self> {
        check_len(width, height, data.len())?;
        for (i, px) in data.iter().enumerate() {
            for (channel, &value) in px.iter().enumerate() {
                if !value.is_finite() || value < 0.0 {
                    return Err(ImagingError::InvalidPixel {
                        x: i % width,
                        y: i / width,
                        channel,
                        value,
                    });
                }
            }
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [f32; 3]) -> Result<Self> {
        Self::new(width, height, vec![rgb; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [f32; 3],
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f32; 3] {
        self.data[y * self.width + x]
    }

    pub fn data(&self) -> &[[f32; 3]] {
        &self.data
    }
}

/// Display-referred (gamma-encoded) RGB image. Components are expected in
/// `[0, 1]`; validation happens on decode.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedImage {
    width: usize,
    height: usize,
    data: Vec<[f32; 3]>,
}

impl EncodedImage {
    pub fn new(width: usize, height: usize, data: Vec<[f32; 3]>) -> Result<Self> {
        check_len(width, height, data.len())?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f32; 3] {
        self.data[y * self.width + x]
    }

    pub fn data(&self) -> &[[f32; 3]] {
        &self.data
    }
}
