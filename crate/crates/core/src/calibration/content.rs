use super::{CalibrationBundle, Mat3};
use crate::Rgb;

/// Where a pixel goes in the stage pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContentMode {
    /// Out-of-frustum lighting content, pre-corrected with `M`.
    OutOfFrustum,
    /// In-frustum background, pre-corrected with `N` (or `M` when `N` is
    /// unavailable), black level removed, clamped to the displayable range.
    InFrustum,
    /// Recorded footage, post-corrected with `Q`.
    Post,
}

/// Running out-of-gamut count for in-frustum content.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GamutStats {
    pub pixels: u64,
    pub out_of_gamut: u64,
}

impl GamutStats {
    pub fn fraction(&self) -> f64 {
        if self.pixels == 0 {
            0.0
        } else {
            self.out_of_gamut as f64 / self.pixels as f64
        }
    }
}

/// Applies the bundle's matrix for `mode` to one pixel.
///
/// For in-frustum content a pixel counts as out of gamut when the
/// pre-corrected color needs negative drive or exceeds 1 after black-level
/// subtraction; clamping to 0 caused by the black level alone is expected
/// and not counted.
pub fn transform_content(
    pixel: Rgb,
    mode: ContentMode,
    bundle: &CalibrationBundle,
    stats: &mut GamutStats,
) -> Rgb {
    match mode {
        ContentMode::OutOfFrustum => bundle.m * pixel,
        ContentMode::Post => bundle.q * pixel,
        ContentMode::InFrustum => {
            let n: Mat3 = bundle.n_effective();
            let drive = n * pixel;
            let offset = bundle.black_offset;
            let mut clipped = drive.iter().any(|&v| v < 0.0);
            let out = [0, 1, 2].map(|c| {
                let v = (drive[c] - offset[c]).max(0.0);
                if v > 1.0 {
                    clipped = true;
                    1.0
                } else {
                    v
                }
            });
            stats.pixels += 1;
            if clipped {
                stats.out_of_gamut += 1;
            }
            out
        }
    }
}
