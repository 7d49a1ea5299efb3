//! Synthetic spectral world used as ground truth.
//!
//! Camera sensitivities, LED emission, illuminants and patch reflectances
//! are tabulated on a fixed 380–780 nm grid; integrating their products
//! gives exactly the quantities the calibration captures would measure.

mod brute;
mod scene;

pub use brute::brute_force_q;
pub use scene::{
    build_scene, lit_chart_under_stage, oracle_calibration, random_scene, read_scene_dir,
    write_scene_dir, OracleCalibration, OracleScene, Scenario, NEUTRAL_REFLECTANCES,
};

use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::Rgb;

pub const GRID_START_NM: f64 = 380.0;
pub const GRID_STEP_NM: f64 = 5.0;
pub const GRID_LEN: usize = 81;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("spectral value {value} at {wavelength} nm is negative or non-finite")]
    Value { wavelength: f64, value: f64 },
    #[error("band center {0} nm outside the grid")]
    Center(f64),
    #[error("band width must be positive, got {0}")]
    Fwhm(f64),
    #[error("scene: {0}")]
    Scene(String),
    #[error("rank-deficient design matrix (rank {0} < 9)")]
    RankDeficient(usize),
    #[error("{0}")]
    Csv(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Calibration(#[from] crate::calibration::CalibrationError),
    #[error(transparent)]
    Imaging(#[from] crate::imaging::ImagingError),
}

pub type Result<T> = std::result::Result<T, SpectralError>;

pub fn wavelength(i: usize) -> f64 {
    GRID_START_NM + GRID_STEP_NM * i as f64
}

/// Non-negative function of wavelength sampled every 5 nm from 380 to 780 nm.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCurve {
    values: [f64; GRID_LEN],
}

impl SpectralCurve {
    pub fn new(values: [f64; GRID_LEN]) -> Result<Self> {
        for (i, &value) in values.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(SpectralError::Value {
                    wavelength: wavelength(i),
                    value,
                });
            }
        }
        Ok(Self { values })
    }

    pub fn constant(v: f64) -> Result<Self> {
        Self::new([v; GRID_LEN])
    }

    pub fn zero() -> Self {
        Self {
            values: [0.0; GRID_LEN],
        }
    }

    pub fn from_fn(mut f: impl FnMut(f64) -> f64) -> Result<Self> {
        let mut values = [0.0; GRID_LEN];
        for (i, v) in values.iter_mut().enumerate() {
            *v = f(wavelength(i));
        }
        Self::new(values)
    }

    pub fn values(&self) -> &[f64; GRID_LEN] {
        &self.values
    }

    pub fn at(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(self.values.map(|v| v * s))
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &SpectralCurve, b: f64) -> Result<Self> {
        let mut values = [0.0; GRID_LEN];
        for (i, v) in values.iter_mut().enumerate() {
            *v = a * self.values[i] + b * other.values[i];
        }
        Self::new(values)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Camera response to light `light` reflected by `reflectance`:
/// channel `c` is `Σ_λ S_c(λ)·L(λ)·R(λ)·Δλ`.
pub fn integrate_response(
    camera: &[SpectralCurve; 3],
    light: &SpectralCurve,
    reflectance: &SpectralCurve,
) -> Rgb {
    integrate_values(camera, &light.values, reflectance)
}

/// As [`integrate_response`] for an arbitrary (possibly signed) light.
pub(crate) fn integrate_values(
    camera: &[SpectralCurve; 3],
    light: &[f64; GRID_LEN],
    reflectance: &SpectralCurve,
) -> Rgb {
    camera.each_ref().map(|s| {
        (0..GRID_LEN)
            .map(|i| s.values[i] * light[i] * reflectance.values[i])
            .sum::<f64>()
            * GRID_STEP_NM
    })
}

/// Gaussian band scaled so the grid sample nearest `center` equals `peak`.
pub fn make_gaussian_band(center: f64, fwhm: f64, peak: f64) -> Result<SpectralCurve> {
    let last = wavelength(GRID_LEN - 1);
    if !(GRID_START_NM..=last).contains(&center) {
        return Err(SpectralError::Center(center));
    }
    if !(fwhm.is_finite() && fwhm > 0.0) {
        return Err(SpectralError::Fwhm(fwhm));
    }
    let k = 4.0 * std::f64::consts::LN_2 / (fwhm * fwhm);
    let nearest = ((center - GRID_START_NM) / GRID_STEP_NM).round();
    let nearest = wavelength(nearest as usize);
    let norm = (-k * (nearest - center).powi(2)).exp();
    SpectralCurve::from_fn(|l| peak * (-k * (l - center).powi(2)).exp() / norm)
}

pub fn write_curve_csv(path: impl AsRef<Path>, curve: &SpectralCurve) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| SpectralError::Io {
        path: path.to_owned(),
        source,
    })?;
    write_curve_csv_to(file, curve)
}

/// CSV with header `wavelength_nm,value`, one row per grid sample.
pub fn write_curve_csv_to(writer: impl Write, curve: &SpectralCurve) -> Result<()> {
    let err = |e: csv::Error| SpectralError::Csv(e.to_string());
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["wavelength_nm", "value"]).map_err(err)?;
    for (i, v) in curve.values.iter().enumerate() {
        w.write_record([wavelength(i).to_string(), v.to_string()])
            .map_err(err)?;
    }
    w.flush().map_err(|e| SpectralError::Csv(e.to_string()))
}

pub fn read_curve_csv(path: impl AsRef<Path>) -> Result<SpectralCurve> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| SpectralError::Io {
        path: path.to_owned(),
        source,
    })?;
    read_curve_csv_from(file)
        .map_err(|e| SpectralError::Csv(format!("{}: {e}", path.display())))
}

pub fn read_curve_csv_from(reader: impl Read) -> Result<SpectralCurve> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = r
        .headers()
        .map_err(|e| SpectralError::Csv(e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["wavelength_nm", "value"] {
        return Err(SpectralError::Csv(
            "expected header wavelength_nm,value".into(),
        ));
    }
    let mut values = [0.0; GRID_LEN];
    let mut count = 0;
    for record in r.records() {
        let record = record.map_err(|e| SpectralError::Csv(e.to_string()))?;
        let wl: f64 = record[0]
            .parse()
            .map_err(|_| SpectralError::Csv(format!("bad wavelength {:?}", &record[0])))?;
        let idx = (wl - GRID_START_NM) / GRID_STEP_NM;
        if count >= GRID_LEN || idx != count as f64 {
            return Err(SpectralError::Csv(format!(
                "wavelength {wl} does not follow the 380–780 nm, 5 nm grid"
            )));
        }
        values[count] = record[1]
            .parse()
            .map_err(|_| SpectralError::Csv(format!("bad value {:?}", &record[1])))?;
        count += 1;
    }
    if count != GRID_LEN {
        return Err(SpectralError::Csv(format!(
            "expected {GRID_LEN} samples, got {count}"
        )));
    }
    SpectralCurve::new(values)
}
