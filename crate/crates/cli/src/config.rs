use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vpcal::calibration::{DEFAULT_COND_LIMIT_Q, DEFAULT_COND_LIMIT_SL, UNIFORM_WEIGHTS};
use vpcal::geometry::{
    DEFAULT_BETA_RESOLUTION, DEFAULT_HALF_EXTENT, DEFAULT_WHITE_REFLECTANCE, MIN_BETA_RESOLUTION,
};
use vpcal::imaging::{Roi, DEFAULT_WHITE_INDEX, PATCH_COUNT};
use vpcal::ChartGridSpec;

use crate::args::SolveArgs;
use crate::error::{CliError, StageExt};

/// Brightness at which the target chart is shown on the in-frustum wall in
/// the displayed-chart simulation, leaving headroom under the clamp at 1.
pub const DEFAULT_DISPLAY_EXPOSURE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Photograph of the three primaries displayed on in-frustum panels.
    pub primary_image: PathBuf,
    pub primary_rois: PerChannel<Roi>,
    /// Chart photographed under each LED channel alone.
    pub channel_charts: PerChannel<ChartCapture>,
    pub target: TargetSource,
    /// `w_avg` from a white patch photographed in the original environment.
    #[serde(default)]
    pub white_patch_rgb: Option<[f64; 3]>,
    /// `w_avg` from the diffuse integral of an environment map.
    #[serde(default)]
    pub env_map: Option<PathBuf>,
    /// Direction the chart faces in `env_map`.
    #[serde(default)]
    pub env_facing: Option<[f64; 3]>,
    #[serde(default)]
    pub beta: BetaParams,
    #[serde(default = "default_white_reflectance")]
    pub white_reflectance: f64,
    #[serde(default = "default_cond_limit_sl")]
    pub cond_limit_sl: f64,
    #[serde(default = "default_cond_limit_q")]
    pub cond_limit_q: f64,
    #[serde(default = "default_weights")]
    pub weights: Vec<f64>,
    #[serde(default = "default_white_index")]
    pub white_index: usize,
    #[serde(default)]
    pub black_level: Option<BlackLevelInput>,
    #[serde(default = "default_display_exposure")]
    pub display_exposure: f64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerChannel<T> {
    pub red: T,
    pub green: T,
    pub blue: T,
}

impl<T> PerChannel<T> {
    pub fn as_array(&self) -> [&T; 3] {
        [&self.red, &self.green, &self.blue]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartCapture {
    pub image: PathBuf,
    pub grid: ChartGridSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetSource {
    Csv { csv: PathBuf },
    Image { image: PathBuf, grid: ChartGridSpec },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaParams {
    #[serde(default = "default_half_extent")]
    pub half_extent: f64,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
}

impl Default for BetaParams {
    fn default() -> Self {
        Self {
            half_extent: DEFAULT_HALF_EXTENT,
            resolution: DEFAULT_BETA_RESOLUTION,
        }
    }
}

/// In-frustum black capture: panels showing black while the out-of-frustum
/// panels light the scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlackLevelInput {
    pub image: PathBuf,
    pub roi: Roi,
    #[serde(default)]
    pub w_camera: WCamera,
}

/// Camera response to full white on the in-frustum panels.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WCamera {
    /// Sum of the three primary samples.
    #[default]
    PrimarySum,
    Explicit([f64; 3]),
}

fn default_white_reflectance() -> f64 {
    DEFAULT_WHITE_REFLECTANCE
}
fn default_cond_limit_sl() -> f64 {
    DEFAULT_COND_LIMIT_SL
}
fn default_cond_limit_q() -> f64 {
    DEFAULT_COND_LIMIT_Q
}
fn default_weights() -> Vec<f64> {
    UNIFORM_WEIGHTS.to_vec()
}
fn default_white_index() -> usize {
    DEFAULT_WHITE_INDEX
}
fn default_half_extent() -> f64 {
    DEFAULT_HALF_EXTENT
}
fn default_resolution() -> usize {
    DEFAULT_BETA_RESOLUTION
}
fn default_display_exposure() -> f64 {
    DEFAULT_DISPLAY_EXPOSURE
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Where `w_avg` comes from, after resolving the configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum WAvgSource {
    /// The target chart's own white patch.
    TargetWhite,
    WhitePatch([f64; 3]),
    EnvMap { path: PathBuf, facing: [f64; 3] },
}

impl PipelineConfig {
    /// Reads the file, resolves relative paths against its directory and
    /// applies command-line overrides.
    pub fn load(args: &SolveArgs) -> Result<Self, CliError> {
        let text = fs::read_to_string(&args.config)
            .map_err(|e| CliError::new("config", format!("{}: {e}", args.config.display())))?;
        let mut cfg: PipelineConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::new("config", format!("{}: {e}", args.config.display())))?;
        let base = args.config.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        if let Some(v) = args.half_extent {
            cfg.beta.half_extent = v;
        }
        if let Some(v) = args.resolution {
            cfg.beta.resolution = v;
        }
        if let Some(v) = args.cond_limit_q {
            cfg.cond_limit_q = v;
        }
        if let Some(v) = args.cond_limit_sl {
            cfg.cond_limit_sl = v;
        }
        if let Some(v) = args.white_reflectance {
            cfg.white_reflectance = v;
        }
        if let Some(out) = &args.out {
            cfg.output_dir = out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        join(&mut self.primary_image);
        join(&mut self.channel_charts.red.image);
        join(&mut self.channel_charts.green.image);
        join(&mut self.channel_charts.blue.image);
        match &mut self.target {
            TargetSource::Csv { csv } => join(csv),
            TargetSource::Image { image, .. } => join(image),
        }
        if let Some(p) = &mut self.env_map {
            join(p);
        }
        if let Some(b) = &mut self.black_level {
            join(&mut b.image);
        }
        join(&mut self.output_dir);
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::new("config", msg));
        if !(self.beta.half_extent.is_finite() && self.beta.half_extent > 0.0) {
            return bad(format!("beta.half_extent must be positive, got {}", self.beta.half_extent));
        }
        if self.beta.resolution < MIN_BETA_RESOLUTION {
            return bad(format!(
                "beta.resolution must be at least {MIN_BETA_RESOLUTION}, got {}",
                self.beta.resolution
            ));
        }
        if !(self.white_reflectance > 0.0 && self.white_reflectance <= 1.0) {
            return bad(format!("white_reflectance must be in (0, 1], got {}", self.white_reflectance));
        }
        for (name, v) in [("cond_limit_sl", self.cond_limit_sl), ("cond_limit_q", self.cond_limit_q)] {
            if v.is_nan() || v < 1.0 {
                return bad(format!("{name} must be at least 1, got {v}"));
            }
        }
        if self.weights.len() != PATCH_COUNT {
            return bad(format!("weights must have {PATCH_COUNT} entries, got {}", self.weights.len()));
        }
        if self.white_index >= PATCH_COUNT {
            return bad(format!("white_index {} out of range", self.white_index));
        }
        for (name, capture) in ["red", "green", "blue"].iter().zip(self.channel_charts.as_array()) {
            if capture.grid.white_index() != self.white_index {
                return bad(format!(
                    "channel_charts.{name}.grid.white_index {} differs from white_index {}",
                    capture.grid.white_index(),
                    self.white_index
                ));
            }
        }
        if let TargetSource::Image { grid, .. } = &self.target {
            if grid.white_index() != self.white_index {
                return bad("target grid white_index differs from white_index".into());
            }
        }
        if !(self.display_exposure > 0.0 && self.display_exposure.is_finite()) {
            return bad(format!("display_exposure must be positive, got {}", self.display_exposure));
        }
        self.w_avg_source().map(|_| ())
    }

    pub fn w_avg_source(&self) -> Result<WAvgSource, CliError> {
        match (&self.white_patch_rgb, &self.env_map, &self.env_facing) {
            (Some(_), Some(_), _) => Err(CliError::new(
                "config",
                "white_patch_rgb and env_map are mutually exclusive w_avg sources",
            )),
            (Some(rgb), None, _) => {
                if rgb.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(CliError::new("config", format!("invalid white_patch_rgb {rgb:?}")));
                }
                Ok(WAvgSource::WhitePatch(*rgb))
            }
            (None, Some(path), Some(facing)) => Ok(WAvgSource::EnvMap {
                path: path.clone(),
                facing: *facing,
            }),
            (None, Some(_), None) => Err(CliError::new(
                "config",
                "env_map requires env_facing (the chart's facing direction in the map)",
            )),
            (None, None, _) => Ok(WAvgSource::TargetWhite),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Writes `cfg` as JSON.
pub fn write_config(path: &Path, cfg: &PipelineConfig) -> Result<(), CliError> {
    fs::write(path, cfg.to_json() + "\n")
        .map_err(|e| format!("{}: {e}", path.display()))
        .stage("oracle")
}
