//! Latitude-longitude environment maps and their cosine-weighted (diffuse)
//! integrals.
//!
//! Texel `(x, y)` of a `2h × h` map has inclination
//! `θ = (y + ½)·π/h` measured from `+Y` and azimuth `φ = (x + ½)·2π/(2h)`;
//! its direction is `(sin θ sin φ, cos θ, −sin θ cos φ)`, so the image
//! center looks down `+Z`, the frontal direction of the calibration panel.

use std::f64::consts::PI;
use std::path::Path;

use thiserror::Error;

use crate::imaging::{self, ImagingError, LinearImage};
use crate::Rgb;

/// Panel half-extent reproducing a 54-pixel square on a 90-pixel, 90° cube
/// face.
pub const DEFAULT_HALF_EXTENT: f64 = 0.6;
/// Half-extent of a 1 m × 1 m panel seen from 1 m.
pub const EXACT_PANEL_HALF_EXTENT: f64 = 0.5;
/// Default map height for β (width is twice this).
pub const DEFAULT_BETA_RESOLUTION: usize = 1024;
pub const MIN_BETA_RESOLUTION: usize = 64;
/// Reflectance of a typical chart's white patch.
pub const DEFAULT_WHITE_REFLECTANCE: f64 = 0.9;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("environment map must be 2:1, got {width}x{height}")]
    Aspect { width: usize, height: usize },
    #[error("environment data has {actual} texels, expected {expected}")]
    Size { expected: usize, actual: usize },
    #[error("invalid radiance {value} at texel ({x}, {y})")]
    Radiance { x: usize, y: usize, value: f64 },
    #[error("direction {0:?} cannot be normalized")]
    Direction([f64; 3]),
    #[error("panel half-extent must be positive and finite, got {0}")]
    HalfExtent(f64),
    #[error("resolution {0} below minimum {MIN_BETA_RESOLUTION}")]
    Resolution(usize),
    #[error("white reflectance must be in (0, 1], got {0}")]
    Reflectance(f64),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
}

pub type Result<T> = std::result::Result<T, GeometryError>;

/// Unit 3-vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction([f64; 3]);

impl Direction {
    pub fn new(v: [f64; 3]) -> Result<Self> {
        let len = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if !len.is_finite() || len == 0.0 {
            return Err(GeometryError::Direction(v));
        }
        Ok(Self(v.map(|c| c / len)))
    }

    /// `+Z`, facing the calibration panel.
    pub fn frontal() -> Self {
        Self([0.0, 0.0, 1.0])
    }

    pub fn as_array(&self) -> [f64; 3] {
        self.0
    }

    pub fn dot(&self, v: [f64; 3]) -> f64 {
        self.0[0] * v[0] + self.0[1] * v[1] + self.0[2] * v[2]
    }
}

/// Radiance over the sphere in latitude-longitude layout, `width = 2·height`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvMap {
    height: usize,
    data: Vec<Rgb>,
}

impl EnvMap {
    pub fn new(width: usize, height: usize, data: Vec<Rgb>) -> Result<Self> {
        if height == 0 || width != 2 * height {
            return Err(GeometryError::Aspect { width, height });
        }
        if data.len() != width * height {
            return Err(GeometryError::Size {
                expected: width * height,
                actual: data.len(),
            });
        }
        for (i, px) in data.iter().enumerate() {
            for &value in px {
                if !value.is_finite() || value < 0.0 {
                    return Err(GeometryError::Radiance {
                        x: i % width,
                        y: i / width,
                        value,
                    });
                }
            }
        }
        Ok(Self { height, data })
    }

    pub fn uniform(height: usize, radiance: Rgb) -> Result<Self> {
        Self::new(2 * height, height, vec![radiance; 2 * height * height])
    }

    /// Map whose texels are `f(direction)` evaluated at texel centers.
    pub fn from_fn(height: usize, mut f: impl FnMut([f64; 3]) -> Rgb) -> Result<Self> {
        let width = 2 * height;
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(texel_direction(x, y, height)));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        2 * self.height
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn texel(&self, x: usize, y: usize) -> Rgb {
        self.data[y * self.width() + x]
    }

    pub fn data(&self) -> &[Rgb] {
        &self.data
    }

    pub fn direction(&self, x: usize, y: usize) -> [f64; 3] {
        texel_direction(x, y, self.height)
    }

    pub fn to_image(&self) -> LinearImage {
        let data = self.data.iter().map(|p| p.map(|v| v as f32)).collect();
        LinearImage::new(self.width(), self.height, data).expect("env radiance is valid")
    }

    pub fn from_image(image: &LinearImage) -> Result<Self> {
        let data = image.data().iter().map(|p| p.map(f64::from)).collect();
        Self::new(image.width(), image.height(), data)
    }
}

fn texel_direction(x: usize, y: usize, height: usize) -> [f64; 3] {
    let step = PI / height as f64;
    angle_direction((y as f64 + 0.5) * step, (x as f64 + 0.5) * step)
}

fn angle_direction(theta: f64, phi: f64) -> [f64; 3] {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    [st * sp, ct, -st * cp]
}

pub fn read_env_pfm(path: impl AsRef<Path>) -> Result<EnvMap> {
    EnvMap::from_image(&imaging::read_pfm(path)?)
}

pub fn write_env_pfm(path: impl AsRef<Path>, env: &EnvMap) -> Result<()> {
    Ok(imaging::write_pfm(path, &env.to_image())?)
}

/// Cosine-weighted integral of the map around `n`, divided by π:
/// `(1/π) Σ L(ω)·max(0, ω·n)·Δω` with `Δω = (2π/w)(π/h) sin θ`.
///
/// A uniform map of unit radiance gives `[1, 1, 1]`.
pub fn diffuse_convolve(env: &EnvMap, n: Direction) -> Rgb {
    let (w, h) = (env.width(), env.height());
    let d_phi = 2.0 * PI / w as f64;
    let d_theta = PI / h as f64;
    let azimuth: Vec<(f64, f64)> = (0..w)
        .map(|x| ((x as f64 + 0.5) * d_phi).sin_cos())
        .collect();
    let mut total = [0.0; 3];
    for y in 0..h {
        let (st, ct) = ((y as f64 + 0.5) * d_theta).sin_cos();
        let row = &env.data[y * w..(y + 1) * w];
        let mut row_sum = [0.0; 3];
        for (px, &(sp, cp)) in row.iter().zip(&azimuth) {
            let cos = n.dot([st * sp, ct, -st * cp]);
            if cos > 0.0 {
                for c in 0..3 {
                    row_sum[c] += px[c] * cos;
                }
            }
        }
        let weight = d_phi * d_theta * st;
        for c in 0..3 {
            total[c] += row_sum[c] * weight;
        }
    }
    total.map(|v| v / PI)
}

/// Sub-samples per axis for texels straddling the panel edge.
const PANEL_EDGE_SUBSAMPLES: usize = 8;

/// Unit radiance on directions that hit the square `|x|, |y| ≤ half_extent`
/// of the plane `z = 1`, zero elsewhere.
///
/// Texels whose four corners agree take that value; texels cut by the panel
/// edge store their solid-angle-weighted coverage, so β converges smoothly
/// with resolution instead of oscillating with the edge's texel phase.
pub fn build_panel_env(half_extent: f64, resolution: usize) -> Result<EnvMap> {
    if !(half_extent.is_finite() && half_extent > 0.0) {
        return Err(GeometryError::HalfExtent(half_extent));
    }
    if resolution < MIN_BETA_RESOLUTION {
        return Err(GeometryError::Resolution(resolution));
    }
    let (w, h) = (2 * resolution, resolution);
    let step = PI / h as f64;
    let inside = |theta: f64, phi: f64| {
        let d = angle_direction(theta, phi);
        d[2] > 0.0 && (d[0] / d[2]).abs() <= half_extent && (d[1] / d[2]).abs() <= half_extent
    };
    let corners: Vec<bool> = (0..=h)
        .flat_map(|y| (0..=w).map(move |x| (x, y)))
        .map(|(x, y)| inside(y as f64 * step, x as f64 * step))
        .collect();
    let corner = |x: usize, y: usize| corners[y * (w + 1) + x];

    let mut data = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let c = [corner(x, y), corner(x + 1, y), corner(x, y + 1), corner(x + 1, y + 1)];
            let coverage = if c.iter().all(|&v| v == c[0]) {
                if c[0] { 1.0 } else { 0.0 }
            } else {
                let n = PANEL_EDGE_SUBSAMPLES;
                let (mut hit, mut total) = (0.0, 0.0);
                for j in 0..n {
                    let theta = (y as f64 + (j as f64 + 0.5) / n as f64) * step;
                    let weight = theta.sin();
                    for i in 0..n {
                        let phi = (x as f64 + (i as f64 + 0.5) / n as f64) * step;
                        total += weight;
                        if inside(theta, phi) {
                            hit += weight;
                        }
                    }
                }
                hit / total
            };
            data.push([coverage; 3]);
        }
    }
    EnvMap::new(w, h, data)
}

/// Ratio of the panel's diffuse contribution to that of a full, even sphere
/// of the same radiance (the panel's form factor from the chart).
pub fn compute_beta(half_extent: f64, resolution: usize) -> Result<f64> {
    let env = build_panel_env(half_extent, resolution)?;
    Ok(diffuse_convolve(&env, Direction::frontal())[1])
}

/// Diffuse integral of `env` over the hemisphere around `facing`.
pub fn w_avg_from_env(env: &EnvMap, facing: Direction) -> Rgb {
    diffuse_convolve(env, facing)
}

/// `w_avg` from a white patch photographed in the scene, undoing the patch's
/// reflectance.
pub fn w_avg_from_white(white_patch: Rgb, white_reflectance: f64) -> Result<Rgb> {
    if !(white_reflectance > 0.0 && white_reflectance <= 1.0) {
        return Err(GeometryError::Reflectance(white_reflectance));
    }
    Ok(white_patch.map(|v| v / white_reflectance))
}
