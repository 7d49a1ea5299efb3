use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::sampling::trimmed_mean;
use super::{ImagingError, LinearImage, Result, ENCODING_MAX};
use crate::Rgb;

pub const PATCH_COUNT: usize = 24;
pub const CHART_ROWS: usize = 4;
pub const CHART_COLS: usize = 6;
/// First patch of the neutral row in the standard 24-patch layout.
pub const DEFAULT_WHITE_INDEX: usize = 18;
/// Each side of a patch loses this fraction of the patch size before sampling.
pub const DEFAULT_INSET: f64 = 0.25;

/// The 24 patches of a color chart in row-major order, linear RGB.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartSamples {
    patches: [Rgb; PATCH_COUNT],
    white_index: usize,
}

impl ChartSamples {
    pub fn new(patches: &[Rgb], white_index: usize) -> Result<Self> {
        let patches: [Rgb; PATCH_COUNT] = patches
            .try_into()
            .map_err(|_| ImagingError::PatchCount(patches.len()))?;
        if white_index >= PATCH_COUNT {
            return Err(ImagingError::WhiteIndex(white_index));
        }
        for (patch, rgb) in patches.iter().enumerate() {
            for &value in rgb {
                if !value.is_finite() || value < 0.0 {
                    return Err(ImagingError::InvalidPatchValue { patch, value });
                }
            }
        }
        Ok(Self {
            patches,
            white_index,
        })
    }

    pub fn patches(&self) -> &[Rgb; PATCH_COUNT] {
        &self.patches
    }

    pub fn patch(&self, j: usize) -> Rgb {
        self.patches[j]
    }

    pub fn white_index(&self) -> usize {
        self.white_index
    }

    pub fn white(&self) -> Rgb {
        self.patches[self.white_index]
    }

    /// Every component multiplied by `s` (`s` must be finite and ≥ 0).
    pub fn scaled(&self, s: f64) -> Result<Self> {
        let patches: Vec<Rgb> = self.patches.iter().map(|p| p.map(|v| v * s)).collect();
        Self::new(&patches, self.white_index)
    }
}

/// Location of a 4×6 chart in an image.
///
/// Corners are pixel coordinates `[x, y]` in the order top-left, top-right,
/// bottom-right, bottom-left (as the chart is read, row-major from the
/// top-left patch). Patches are located by bilinear interpolation between
/// the corners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpecFields", into = "GridSpecFields")]
pub struct ChartGridSpec {
    corners: [[f64; 2]; 4],
    inset: f64,
    white_index: usize,
}

#[derive(Serialize, Deserialize)]
struct GridSpecFields {
    corners: [[f64; 2]; 4],
    #[serde(default = "default_inset")]
    inset: f64,
    #[serde(default = "default_white_index")]
    white_index: usize,
}

fn default_inset() -> f64 {
    DEFAULT_INSET
}

fn default_white_index() -> usize {
    DEFAULT_WHITE_INDEX
}

impl TryFrom<GridSpecFields> for ChartGridSpec {
    type Error = ImagingError;

    fn try_from(f: GridSpecFields) -> Result<Self> {
        Self::new(f.corners, f.inset, f.white_index)
    }
}

impl From<ChartGridSpec> for GridSpecFields {
    fn from(g: ChartGridSpec) -> Self {
        Self {
            corners: g.corners,
            inset: g.inset,
            white_index: g.white_index,
        }
    }
}

impl ChartGridSpec {
    pub fn new(corners: [[f64; 2]; 4], inset: f64, white_index: usize) -> Result<Self> {
        if !(inset > 0.0 && inset < 0.5) {
            return Err(ImagingError::Grid(format!(
                "inset fraction {inset} outside (0, 0.5)"
            )));
        }
        if white_index >= PATCH_COUNT {
            return Err(ImagingError::WhiteIndex(white_index));
        }
        if corners.iter().flatten().any(|v| !v.is_finite()) {
            return Err(ImagingError::Grid("non-finite corner".into()));
        }
        let mut sign = 0.0f64;
        for i in 0..4 {
            let a = corners[i];
            let b = corners[(i + 1) % 4];
            let c = corners[(i + 2) % 4];
            let cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
            if cross == 0.0 || (sign != 0.0 && cross.signum() != sign) {
                return Err(ImagingError::Grid(
                    "corners do not form a convex quadrilateral".into(),
                ));
            }
            sign = cross.signum();
        }
        Ok(Self {
            corners,
            inset,
            white_index,
        })
    }

    /// Axis-aligned chart covering `[x0, x1] × [y0, y1]` in pixel coordinates.
    pub fn axis_aligned(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        Self::new(
            [[x0, y0], [x1, y0], [x1, y1], [x0, y1]],
            DEFAULT_INSET,
            DEFAULT_WHITE_INDEX,
        )
    }

    pub fn with_inset(self, inset: f64) -> Result<Self> {
        Self::new(self.corners, inset, self.white_index)
    }

    pub fn with_white_index(self, white_index: usize) -> Result<Self> {
        Self::new(self.corners, self.inset, white_index)
    }

    pub fn corners(&self) -> [[f64; 2]; 4] {
        self.corners
    }

    pub fn inset(&self) -> f64 {
        self.inset
    }

    pub fn white_index(&self) -> usize {
        self.white_index
    }

    fn map(&self, u: f64, v: f64) -> [f64; 2] {
        let [tl, tr, br, bl] = self.corners;
        let w = [(1.0 - u) * (1.0 - v), u * (1.0 - v), u * v, (1.0 - u) * v];
        [
            w[0] * tl[0] + w[1] * tr[0] + w[2] * br[0] + w[3] * bl[0],
            w[0] * tl[1] + w[1] * tr[1] + w[2] * br[1] + w[3] * bl[1],
        ]
    }

    /// Chart-space `(u, v)` of an image point, by Newton iteration on the
    /// bilinear map.
    fn unmap(&self, p: [f64; 2]) -> Option<(f64, f64)> {
        let [tl, tr, br, bl] = self.corners;
        let (mut u, mut v) = (0.5, 0.5);
        for _ in 0..32 {
            let q = self.map(u, v);
            let rx = q[0] - p[0];
            let ry = q[1] - p[1];
            let du = [
                (1.0 - v) * (tr[0] - tl[0]) + v * (br[0] - bl[0]),
                (1.0 - v) * (tr[1] - tl[1]) + v * (br[1] - bl[1]),
            ];
            let dv = [
                (1.0 - u) * (bl[0] - tl[0]) + u * (br[0] - tr[0]),
                (1.0 - u) * (bl[1] - tl[1]) + u * (br[1] - tr[1]),
            ];
            let det = du[0] * dv[1] - du[1] * dv[0];
            if det == 0.0 {
                return None;
            }
            let step_u = (rx * dv[1] - ry * dv[0]) / det;
            let step_v = (du[0] * ry - du[1] * rx) / det;
            u -= step_u;
            v -= step_v;
            if step_u.abs() < 1e-12 && step_v.abs() < 1e-12 {
                return Some((u, v));
            }
        }
        Some((u, v))
    }
}

/// Result of [`extract_chart`]: the sampled chart plus the indices of
/// patches whose sampling region was entirely clipped.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartExtraction {
    pub samples: ChartSamples,
    pub saturated: Vec<usize>,
}

/// Samples all 24 patches: trimmed mean over the pixels whose centers fall
/// inside each patch's inset region.
pub fn extract_chart(image: &LinearImage, grid: &ChartGridSpec) -> Result<ChartExtraction> {
    let (w, h) = (image.width() as f64, image.height() as f64);
    for c in grid.corners {
        if c[0] < 0.0 || c[1] < 0.0 || c[0] > w || c[1] > h {
            return Err(ImagingError::Grid(format!(
                "corner ({}, {}) outside {}x{} image",
                c[0],
                c[1],
                image.width(),
                image.height()
            )));
        }
    }

    let mut patches = Vec::with_capacity(PATCH_COUNT);
    let mut saturated = Vec::new();
    let mut pixels = Vec::new();
    for j in 0..PATCH_COUNT {
        let (row, col) = (j / CHART_COLS, j % CHART_COLS);
        let u0 = (col as f64 + grid.inset) / CHART_COLS as f64;
        let u1 = (col as f64 + 1.0 - grid.inset) / CHART_COLS as f64;
        let v0 = (row as f64 + grid.inset) / CHART_ROWS as f64;
        let v1 = (row as f64 + 1.0 - grid.inset) / CHART_ROWS as f64;

        // the bilinear image of the sub-rectangle lies in the hull of its corners
        let pts = [
            grid.map(u0, v0),
            grid.map(u1, v0),
            grid.map(u1, v1),
            grid.map(u0, v1),
        ];
        let min_x = pts.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
        let max_x = pts.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
        let min_y = pts.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
        let max_y = pts.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max);
        let x_start = (min_x - 0.5).ceil().max(0.0) as usize;
        let x_end = ((max_x - 0.5).floor() as isize).min(image.width() as isize - 1);
        let y_start = (min_y - 0.5).ceil().max(0.0) as usize;
        let y_end = ((max_y - 0.5).floor() as isize).min(image.height() as isize - 1);

        pixels.clear();
        for y in y_start as isize..=y_end {
            for x in x_start as isize..=x_end {
                let center = [x as f64 + 0.5, y as f64 + 0.5];
                if let Some((u, v)) = grid.unmap(center) {
                    if u >= u0 && u <= u1 && v >= v0 && v <= v1 {
                        pixels.push(image.pixel(x as usize, y as usize));
                    }
                }
            }
        }
        let mean = trimmed_mean(&pixels).ok_or(ImagingError::PatchTooSmall {
            patch: j,
            pixels: pixels.len(),
        })?;
        if pixels
            .iter()
            .all(|p| p.iter().any(|&c| c >= ENCODING_MAX))
        {
            log::warn!("chart patch {j} is fully saturated");
            saturated.push(j);
        }
        patches.push(mean);
    }
    Ok(ChartExtraction {
        samples: ChartSamples::new(&patches, grid.white_index)?,
        saturated,
    })
}

/// Scales `subject` by the single factor that makes its white-patch green
/// channel equal the reference's.
pub fn normalize_green_white(
    reference: &ChartSamples,
    subject: &ChartSamples,
) -> Result<ChartSamples> {
    let ref_g = reference.white()[1];
    let sub_g = subject.white()[1];
    if ref_g <= 0.0 {
        return Err(ImagingError::ZeroGreenWhite("reference"));
    }
    if sub_g <= 0.0 {
        return Err(ImagingError::ZeroGreenWhite("subject"));
    }
    subject.scaled(ref_g / sub_g)
}

pub fn write_chart_csv(path: impl AsRef<Path>, chart: &ChartSamples) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| ImagingError::Io {
        path: path.to_owned(),
        source,
    })?;
    write_chart_csv_to(file, chart)
}

/// CSV with header `patch_index,r,g,b`; values use shortest round-trip
/// formatting so reading back is exact.
pub fn write_chart_csv_to(writer: impl Write, chart: &ChartSamples) -> Result<()> {
    let csv_err = |e: csv::Error| ImagingError::Csv(e.to_string());
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["patch_index", "r", "g", "b"])
        .map_err(csv_err)?;
    for (j, p) in chart.patches().iter().enumerate() {
        w.write_record([
            j.to_string(),
            p[0].to_string(),
            p[1].to_string(),
            p[2].to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()
        .map_err(|e| ImagingError::Csv(e.to_string()))
}

pub fn read_chart_csv(path: impl AsRef<Path>, white_index: usize) -> Result<ChartSamples> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| ImagingError::Io {
        path: path.to_owned(),
        source,
    })?;
    read_chart_csv_from(file, white_index)
}

pub fn read_chart_csv_from(reader: impl Read, white_index: usize) -> Result<ChartSamples> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = r
        .headers()
        .map_err(|e| ImagingError::Csv(e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["patch_index", "r", "g", "b"] {
        return Err(ImagingError::Csv(format!(
            "expected header patch_index,r,g,b, got {}",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut patches: Vec<Option<Rgb>> = vec![None; PATCH_COUNT];
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(|e| ImagingError::Csv(e.to_string()))?;
        let bad = |what: &str| ImagingError::Csv(format!("row {}: bad {what}", line + 2));
        let idx: usize = record[0].parse().map_err(|_| bad("patch_index"))?;
        if idx >= PATCH_COUNT {
            return Err(bad("patch_index"));
        }
        let mut rgb = [0.0; 3];
        for c in 0..3 {
            rgb[c] = record[c + 1].parse().map_err(|_| bad("value"))?;
        }
        if patches[idx].replace(rgb).is_some() {
            return Err(ImagingError::Csv(format!("duplicate patch_index {idx}")));
        }
    }
    let count = patches.iter().filter(|p| p.is_some()).count();
    if count != PATCH_COUNT {
        return Err(ImagingError::PatchCount(count));
    }
    let patches: Vec<Rgb> = patches.into_iter().flatten().collect();
    ChartSamples::new(&patches, white_index)
}
