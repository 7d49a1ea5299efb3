use super::{EncodedImage, ImagingError, LinearImage, Result};

/// Gamma of the stage's LED panels.
pub const DISPLAY_GAMMA: f64 = 2.4;

/// Linearizes a display-referred image: `out = in^gamma` per component.
pub fn decode_transfer(image: &EncodedImage, gamma: f64) -> Result<LinearImage> {
    check_gamma(gamma)?;
    let width = image.width();
    let mut data = Vec::with_capacity(image.data().len());
    for (i, px) in image.data().iter().enumerate() {
        let mut out = [0.0f32; 3];
        for c in 0..3 {
            let v = px[c];
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(ImagingError::InvalidPixel {
                    x: i % width,
                    y: i / width,
                    channel: c,
                    value: v,
                });
            }
            out[c] = (v as f64).powf(gamma) as f32;
        }
        data.push(out);
    }
    LinearImage::new(width, image.height(), data)
}

/// Inverse of [`decode_transfer`]: `out = in^(1/gamma)`. Values above 1 are
/// kept; clamping is left to the file writer.
pub fn encode_transfer(image: &LinearImage, gamma: f64) -> Result<EncodedImage> {
    check_gamma(gamma)?;
    let inv = 1.0 / gamma;
    let data = image
        .data()
        .iter()
        .map(|px| px.map(|v| (v as f64).powf(inv) as f32))
        .collect();
    EncodedImage::new(image.width(), image.height(), data)
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_finite() && gamma > 0.0 {
        Ok(())
    } else {
        Err(ImagingError::InvalidGamma(gamma))
    }
}
