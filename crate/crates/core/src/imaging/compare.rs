use super::{
    normalize_green_white, ChartSamples, LinearImage, Result, CHART_COLS, CHART_ROWS, PATCH_COUNT,
};

/// Edge length of one chart square in [`render_comparison_chart`] output.
pub const COMPARISON_PATCH_PX: usize = 64;
const CIRCLE_RADIUS: f64 = 0.3 * COMPARISON_PATCH_PX as f64;

/// Draws the target chart as squares with the measured values as a centered
/// disc in each square. With `normalize`, the measured chart is first scaled
/// so its white-patch green channel matches the target's.
pub fn render_comparison_chart(
    target: &ChartSamples,
    measured: &ChartSamples,
    normalize: bool,
) -> Result<LinearImage> {
    let measured = if normalize {
        normalize_green_white(target, measured)?
    } else {
        measured.clone()
    };
    let to_px = |rgb: crate::Rgb| rgb.map(|v| v as f32);
    let squares: Vec<[f32; 3]> = target.patches().iter().copied().map(to_px).collect();
    let discs: Vec<[f32; 3]> = measured.patches().iter().copied().map(to_px).collect();
    debug_assert_eq!(squares.len(), PATCH_COUNT);

    let s = COMPARISON_PATCH_PX;
    LinearImage::from_fn(CHART_COLS * s, CHART_ROWS * s, |x, y| {
        let j = (y / s) * CHART_COLS + x / s;
        let dx = (x % s) as f64 + 0.5 - s as f64 / 2.0;
        let dy = (y % s) as f64 + 0.5 - s as f64 / 2.0;
        if dx * dx + dy * dy <= CIRCLE_RADIUS * CIRCLE_RADIUS {
            discs[j]
        } else {
            squares[j]
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::DEFAULT_WHITE_INDEX;
    use crate::Rgb;

    fn chart(f: impl Fn(usize) -> Rgb) -> ChartSamples {
        let p: Vec<Rgb> = (0..PATCH_COUNT).map(f).collect();
        ChartSamples::new(&p, DEFAULT_WHITE_INDEX).unwrap()
    }

    fn center(j: usize) -> (usize, usize) {
        let s = COMPARISON_PATCH_PX;
        ((j % CHART_COLS) * s + s / 2, (j / CHART_COLS) * s + s / 2)
    }

    #[test]
    fn identical_inputs_render_flat_squares() {
        let t = chart(|j| [j as f64 * 0.04, 0.3, 1.0 - j as f64 * 0.04]);
        let img = render_comparison_chart(&t, &t, false).unwrap();
        let s = COMPARISON_PATCH_PX;
        assert_eq!((img.width(), img.height()), (6 * s, 4 * s));
        for y in 0..img.height() {
            for x in 0..img.width() {
                let corner = img.pixel((x / s) * s, (y / s) * s);
                assert_eq!(img.pixel(x, y), corner);
            }
        }
    }

    #[test]
    fn normalization_cancels_global_scale() {
        let t = chart(|j| {
            if j == DEFAULT_WHITE_INDEX {
                [0.8; 3]
            } else {
                [0.1 + 0.02 * j as f64, 0.2, 0.05 * (j % 4) as f64]
            }
        });
        let m = t.scaled(2.0).unwrap();
        let img = render_comparison_chart(&t, &m, true).unwrap();
        let flat = render_comparison_chart(&t, &t, false).unwrap();
        assert_eq!(img, flat);
    }

    #[test]
    fn discs_carry_measured_values() {
        let t = chart(|_| [0.5; 3]);
        let m = chart(|j| [0.01 * j as f64, 0.7, 0.2]);
        let img = render_comparison_chart(&t, &m, false).unwrap();
        for j in 0..PATCH_COUNT {
            let (x, y) = center(j);
            assert_eq!(img.pixel(x, y), m.patch(j).map(|v| v as f32));
            let s = COMPARISON_PATCH_PX;
            assert_eq!(img.pixel(x - s / 2 + 1, y - s / 2 + 1), [0.5; 3]);
        }
    }
}
