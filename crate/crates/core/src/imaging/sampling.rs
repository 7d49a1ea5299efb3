use serde::{Deserialize, Serialize};

use super::{ImagingError, LinearImage, Result};
use crate::Rgb;

/// Fraction of samples dropped from each tail by [`trimmed_mean`].
pub const TRIM_FRACTION: f64 = 0.1;

/// Per-channel mean after discarding the lowest and highest
/// `floor(n · TRIM_FRACTION)` values of that channel.
///
/// Returns `None` when fewer than 4 samples are given.
pub fn trimmed_mean(pixels: &[[f32; 3]]) -> Option<Rgb> {
    let n = pixels.len();
    if n < 4 {
        return None;
    }
    let drop = (n as f64 * TRIM_FRACTION).floor() as usize;
    let mut out = [0.0; 3];
    let mut channel: Vec<f32> = Vec::with_capacity(n);
    for (c, slot) in out.iter_mut().enumerate() {
        channel.clear();
        channel.extend(pixels.iter().map(|p| p[c]));
        channel.sort_by(f32::total_cmp);
        let kept = &channel[drop..n - drop];
        *slot = kept.iter().map(|&v| v as f64).sum::<f64>() / kept.len() as f64;
    }
    Some(out)
}

/// Axis-aligned pixel rectangle, `[x0, x1) × [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Roi {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl Roi {
    pub fn new(x0: usize, y0: usize, x1: usize, y1: usize) -> Self {
        Self { x0, y0, x1, y1 }
    }
}

/// Trimmed mean of the pixels inside `roi`.
pub fn sample_region(image: &LinearImage, roi: Roi) -> Result<Rgb> {
    if roi.x0 >= roi.x1 || roi.y0 >= roi.y1 || roi.x1 > image.width() || roi.y1 > image.height()
    {
        return Err(ImagingError::Roi(roi));
    }
    let mut pixels = Vec::with_capacity((roi.x1 - roi.x0) * (roi.y1 - roi.y0));
    for y in roi.y0..roi.y1 {
        for x in roi.x0..roi.x1 {
            pixels.push(image.pixel(x, y));
        }
    }
    trimmed_mean(&pixels).ok_or(ImagingError::Roi(roi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trims_outliers() {
        let mut px = vec![[0.5f32, 0.25, 0.125]; 20];
        px[3] = [10.0; 3];
        px[17] = [0.0; 3];
        assert_eq!(trimmed_mean(&px).unwrap(), [0.5, 0.25, 0.125]);
    }

    #[test]
    fn too_few_samples() {
        assert!(trimmed_mean(&[[1.0; 3]; 3]).is_none());
        assert_eq!(trimmed_mean(&[[1.0; 3]; 4]).unwrap(), [1.0; 3]);
    }

    #[test]
    fn roi_bounds() {
        let img = LinearImage::filled(8, 8, [0.2; 3]).unwrap();
        assert!(sample_region(&img, Roi::new(0, 0, 9, 4)).is_err());
        assert!(sample_region(&img, Roi::new(4, 4, 4, 8)).is_err());
        let v = sample_region(&img, Roi::new(2, 2, 6, 6)).unwrap();
        assert!((v[0] - 0.2f32 as f64).abs() < 1e-12);
    }
}
