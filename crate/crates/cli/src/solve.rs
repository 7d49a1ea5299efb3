use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use vpcal::calibration::{
    build_sl, build_srl, chart_error, compute_black_level, mean_relative_error,
    post_correct_chart, simulate_lit_chart, solve_m, solve_n, solve_q, transform_content,
    CalibrationBundle, ContentMode, Diagnostics, GamutStats, Mat3, SrlSet,
};
use vpcal::geometry::{
    compute_beta, read_env_pfm, w_avg_from_env, w_avg_from_white, Direction,
    EXACT_PANEL_HALF_EXTENT,
};
use vpcal::imaging::{
    extract_chart, read_chart_csv, read_pfm, render_comparison_chart, sample_region,
    write_chart_csv, write_png16, ChartSamples, DEFAULT_INSET, DISPLAY_GAMMA, TRIM_FRACTION,
};
use vpcal::Rgb;

use crate::config::{PipelineConfig, TargetSource, WAvgSource, WCamera};
use crate::error::{CliError, StageExt};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaReport {
    pub value: f64,
    pub half_extent: f64,
    pub resolution: usize,
    /// β for a 1 m × 1 m panel at 1 m, for comparison with the default
    /// geometry.
    pub exact_panel_value: f64,
    pub exact_panel_half_extent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WAvgReport {
    pub value: Rgb,
    pub source: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatchStatistic {
    pub method: &'static str,
    pub trim_fraction_per_tail: f64,
    pub default_inset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlackLevelReport {
    pub b_camera: Rgb,
    pub w_camera: Rgb,
    pub w_camera_source: &'static str,
    pub offset: Rgb,
    pub suspicious: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariantError {
    /// `(1/24)·Σ|measured − target| / target_white` per channel.
    pub per_channel: Rgb,
    /// Channel average: the mean error relative to the white patch.
    pub mean: f64,
    pub target_csv: &'static str,
    pub measured_csv: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChartErrors {
    /// Chart lit by the stage through `M` only.
    pub lit_m_only: VariantError,
    /// The same, post-corrected with `Q`.
    pub lit_m_q: VariantError,
    /// Target chart shown in-frustum through `N`, recorded and
    /// post-corrected, with the panel black level left in.
    pub displayed_without_black_level: VariantError,
    /// As above with the black-level offset subtracted before display.
    pub displayed_with_black_level: VariantError,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub beta: BetaReport,
    pub w_avg: WAvgReport,
    pub patch_statistic: PatchStatistic,
    pub sl: Mat3,
    pub primaries: [Rgb; 3],
    pub black_level: Option<BlackLevelReport>,
    pub display_exposure: f64,
    pub chart_error: ChartErrors,
    pub diagnostics: Diagnostics,
    pub n_available: bool,
    pub saturated_patches: SaturatedPatches,
    pub warnings: Vec<String>,
    pub outputs: Vec<&'static str>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SaturatedPatches {
    pub red: Vec<usize>,
    pub green: Vec<usize>,
    pub blue: Vec<usize>,
    pub target: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub bundle: CalibrationBundle,
    pub srl: SrlSet,
    pub report: Report,
    pub output_dir: PathBuf,
}

impl SolveOutcome {
    pub fn n_available(&self) -> bool {
        self.bundle.n.is_some()
    }
}

pub const BUNDLE_FILE: &str = "bundle.json";
pub const SRL_FILE: &str = "srl.json";
pub const REPORT_FILE: &str = "report.json";

pub const TARGET_CSV: &str = "target.csv";
pub const M_ONLY_CSV: &str = "predicted_m_only.csv";
pub const M_Q_CSV: &str = "predicted_m_q.csv";
pub const DISPLAYED_TARGET_CSV: &str = "displayed_target.csv";
pub const DISPLAYED_RAW_CSV: &str = "displayed_without_black_level.csv";
pub const DISPLAYED_BL_CSV: &str = "displayed_with_black_level.csv";
pub const LIT_M_ONLY_PNG: &str = "lit_m_only.png";
pub const LIT_M_Q_PNG: &str = "lit_m_q.png";
pub const DISPLAYED_RAW_PNG: &str = "displayed_without_black_level.png";
pub const DISPLAYED_BL_PNG: &str = "displayed_with_black_level.png";

/// Runs the whole calibration and writes bundle, `[SRL]`, report, chart
/// CSVs and comparison images to the output directory.
pub fn cmd_solve(cfg: &PipelineConfig) -> Result<SolveOutcome, CliError> {
    let mut warnings = Vec::new();

    // primaries → [SL] → M
    let primary = read_pfm(&cfg.primary_image).stage("primary")?;
    let rois = cfg.primary_rois.as_array();
    let mut primaries = [[0.0; 3]; 3];
    for (slot, roi) in primaries.iter_mut().zip(rois) {
        *slot = sample_region(&primary, *roi).stage("primary")?;
    }
    let sl = build_sl(primaries[0], primaries[1], primaries[2]).stage("primary")?;
    let cond_sl = sl.condition_number();
    let m = solve_m(&sl, cfg.cond_limit_sl).stage("solve_m")?;

    // per-channel charts → [SRL]
    let mut saturated = SaturatedPatches::default();
    let mut charts = Vec::with_capacity(3);
    for (name, capture) in ["red", "green", "blue"].iter().zip(cfg.channel_charts.as_array()) {
        let image = read_pfm(&capture.image).stage("srl")?;
        let extraction = extract_chart(&image, &capture.grid).stage("srl")?;
        if !extraction.saturated.is_empty() {
            warnings.push(format!(
                "{name}-channel chart: saturated patches {:?}",
                extraction.saturated
            ));
        }
        match *name {
            "red" => saturated.red = extraction.saturated,
            "green" => saturated.green = extraction.saturated,
            _ => saturated.blue = extraction.saturated,
        }
        charts.push(extraction.samples);
    }
    let srl = build_srl(&charts[0], &charts[1], &charts[2]).stage("srl")?;

    let targets = match &cfg.target {
        TargetSource::Csv { csv } => read_chart_csv(csv, cfg.white_index).stage("target")?,
        TargetSource::Image { image, grid } => {
            let image = read_pfm(image).stage("target")?;
            let extraction = extract_chart(&image, grid).stage("target")?;
            if !extraction.saturated.is_empty() {
                warnings.push(format!("target chart: saturated patches {:?}", extraction.saturated));
            }
            saturated.target = extraction.saturated;
            extraction.samples
        }
    };

    let beta = compute_beta(cfg.beta.half_extent, cfg.beta.resolution).stage("beta")?;
    let exact_beta = compute_beta(EXACT_PANEL_HALF_EXTENT, cfg.beta.resolution).stage("beta")?;

    let (w_avg, w_source) = match cfg.w_avg_source()? {
        WAvgSource::TargetWhite => (
            w_avg_from_white(targets.white(), cfg.white_reflectance).stage("w_avg")?,
            "target_white_patch",
        ),
        WAvgSource::WhitePatch(rgb) => (
            w_avg_from_white(rgb, cfg.white_reflectance).stage("w_avg")?,
            "white_patch_rgb",
        ),
        WAvgSource::EnvMap { path, facing } => {
            let env = read_env_pfm(&path).stage("w_avg")?;
            let facing = Direction::new(facing).stage("w_avg")?;
            (w_avg_from_env(&env, facing), "env_map")
        }
    };

    let q_solution =
        solve_q(&srl, &m, w_avg, &targets, beta, &cfg.weights).stage("solve_q")?;
    if q_solution.rank < 3 {
        warnings.push(format!(
            "predicted chart colors span only {} dimension(s); Q is the least-squares solution nearest the identity",
            q_solution.rank
        ));
    }
    let q = q_solution.q;
    let cond_q = q.condition_number();
    let n = solve_n(&m, &q, cfg.cond_limit_q);
    if n.is_none() {
        warnings.push(format!(
            "Q is ill-conditioned (condition number {cond_q:e} > {:e}); N unavailable, in-frustum content falls back to M",
            cfg.cond_limit_q
        ));
    }

    let (black_level, black_offset, b_camera) = match &cfg.black_level {
        None => (None, [0.0; 3], [0.0; 3]),
        Some(input) => {
            let image = read_pfm(&input.image).stage("black_level")?;
            let b_camera = sample_region(&image, input.roi).stage("black_level")?;
            let (w_camera, w_src) = match input.w_camera {
                WCamera::PrimarySum => (sl * [1.0; 3], "primary_sum"),
                WCamera::Explicit(w) => (w, "explicit"),
            };
            let level = compute_black_level(b_camera, w_camera).stage("black_level")?;
            if level.suspicious {
                warnings.push(format!(
                    "black-level offset {:?} exceeds typical panel albedo",
                    level.offset
                ));
            }
            let report = BlackLevelReport {
                b_camera,
                w_camera,
                w_camera_source: w_src,
                offset: level.offset,
                suspicious: level.suspicious,
            };
            (Some(report), level.offset, b_camera)
        }
    };

    // lit-chart simulation
    let lit_m_only = simulate_lit_chart(&srl, &m, w_avg, beta).stage("simulate")?;
    let lit_m_q = post_correct_chart(&lit_m_only.chart, &q).stage("simulate")?;
    let clamped = lit_m_only.clamped + lit_m_q.clamped;
    if clamped > 0 {
        warnings.push(format!("{clamped} simulated chart components were negative and clamped to 0"));
    }

    let provisional = CalibrationBundle::new(m, q, n, beta, black_offset, Diagnostics::default())
        .stage("bundle")?;
    let displayed_target = targets.scaled(cfg.display_exposure).stage("display")?;
    let mut gamut = GamutStats::default();
    let displayed_with = display_chart(&displayed_target, &provisional, &sl, b_camera, &mut gamut)
        .stage("display")?;
    let no_offset = CalibrationBundle { black_offset: [0.0; 3], ..provisional.clone() };
    let displayed_without = display_chart(&displayed_target, &no_offset, &sl, b_camera, &mut GamutStats::default())
        .stage("display")?;

    let diagnostics = Diagnostics {
        cond_sl,
        cond_q,
        residual: q_solution.residual,
        q_rank: q_solution.rank,
        out_of_gamut_fraction: gamut.fraction(),
        clamped_predictions: clamped,
    };
    let bundle = CalibrationBundle { diagnostics, ..provisional };

    let variant = |target: &ChartSamples, measured: &ChartSamples, t: &'static str, m: &'static str| {
        chart_error(target, measured)
            .map(|per_channel| VariantError {
                per_channel,
                mean: mean_relative_error(per_channel),
                target_csv: t,
                measured_csv: m,
            })
            .stage("report")
    };
    let chart_errors = ChartErrors {
        lit_m_only: variant(&targets, &lit_m_only.chart, TARGET_CSV, M_ONLY_CSV)?,
        lit_m_q: variant(&targets, &lit_m_q.chart, TARGET_CSV, M_Q_CSV)?,
        displayed_without_black_level: variant(&displayed_target, &displayed_without, DISPLAYED_TARGET_CSV, DISPLAYED_RAW_CSV)?,
        displayed_with_black_level: variant(&displayed_target, &displayed_with, DISPLAYED_TARGET_CSV, DISPLAYED_BL_CSV)?,
    };

    for w in &warnings {
        log::warn!("{w}");
    }
    let report = Report {
        beta: BetaReport {
            value: beta,
            half_extent: cfg.beta.half_extent,
            resolution: cfg.beta.resolution,
            exact_panel_value: exact_beta,
            exact_panel_half_extent: EXACT_PANEL_HALF_EXTENT,
        },
        w_avg: WAvgReport { value: w_avg, source: w_source },
        patch_statistic: PatchStatistic {
            method: "trimmed_mean",
            trim_fraction_per_tail: TRIM_FRACTION,
            default_inset: DEFAULT_INSET,
        },
        sl,
        primaries,
        black_level,
        display_exposure: cfg.display_exposure,
        chart_error: chart_errors,
        diagnostics,
        n_available: bundle.n.is_some(),
        saturated_patches: saturated,
        warnings,
        outputs: vec![
            BUNDLE_FILE, SRL_FILE, REPORT_FILE, TARGET_CSV, M_ONLY_CSV, M_Q_CSV,
            DISPLAYED_TARGET_CSV, DISPLAYED_RAW_CSV, DISPLAYED_BL_CSV, LIT_M_ONLY_PNG,
            LIT_M_Q_PNG, DISPLAYED_RAW_PNG, DISPLAYED_BL_PNG,
        ],
    };

    // outputs
    let out = &cfg.output_dir;
    fs::create_dir_all(out)
        .map_err(|e| format!("{}: {e}", out.display()))
        .stage("output")?;
    write_text(&out.join(BUNDLE_FILE), &bundle.to_json())?;
    write_text(&out.join(SRL_FILE), &serde_json::to_string_pretty(&srl).expect("srl serializes"))?;
    write_text(&out.join(REPORT_FILE), &serde_json::to_string_pretty(&report).expect("report serializes"))?;
    for (name, chart) in [
        (TARGET_CSV, &targets),
        (M_ONLY_CSV, &lit_m_only.chart),
        (M_Q_CSV, &lit_m_q.chart),
        (DISPLAYED_TARGET_CSV, &displayed_target),
        (DISPLAYED_RAW_CSV, &displayed_without),
        (DISPLAYED_BL_CSV, &displayed_with),
    ] {
        write_chart_csv(out.join(name), chart).stage("output")?;
    }
    for (name, target, measured) in [
        (LIT_M_ONLY_PNG, &targets, &lit_m_only.chart),
        (LIT_M_Q_PNG, &targets, &lit_m_q.chart),
        (DISPLAYED_RAW_PNG, &displayed_target, &displayed_without),
        (DISPLAYED_BL_PNG, &displayed_target, &displayed_with),
    ] {
        write_comparison_png(&out.join(name), target, measured)?;
    }

    Ok(SolveOutcome {
        bundle,
        srl,
        report,
        output_dir: out.clone(),
    })
}

/// The in-frustum chart as recorded: content through the in-frustum
/// transform, shown by the panels (`[SL]`), plus the stage light bounced off
/// the panels (`b_camera`), then post-corrected with `Q`.
fn display_chart(
    content: &ChartSamples,
    bundle: &CalibrationBundle,
    sl: &Mat3,
    b_camera: Rgb,
    gamut: &mut GamutStats,
) -> Result<ChartSamples, vpcal::imaging::ImagingError> {
    let patches: Vec<Rgb> = content
        .patches()
        .iter()
        .map(|&p| {
            let drive = transform_content(p, ContentMode::InFrustum, bundle, gamut);
            let seen = *sl * drive;
            let recorded = [0, 1, 2].map(|c| seen[c] + b_camera[c]);
            transform_content(recorded, ContentMode::Post, bundle, gamut).map(|v| v.max(0.0))
        })
        .collect();
    ChartSamples::new(&patches, content.white_index())
}

/// Comparison image with the measured chart normalized to the target's
/// white, scaled so the target white displays at full brightness.
pub fn write_comparison_png(
    path: &Path,
    target: &ChartSamples,
    measured: &ChartSamples,
) -> Result<(), CliError> {
    let peak = target.white().iter().copied().fold(0.0, f64::max);
    let scale = if peak > 0.0 { 1.0 / peak } else { 1.0 };
    let (t, m) = (
        target.scaled(scale).stage("output")?,
        measured.scaled(scale).stage("output")?,
    );
    let normalize = t.white()[1] > 0.0 && m.white()[1] > 0.0;
    let image = render_comparison_chart(&t, &m, normalize).stage("output")?;
    write_png16(path, &image, DISPLAY_GAMMA).stage("output")
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, format!("{text}\n"))
        .map_err(|e| format!("{}: {e}", path.display()))
        .stage("output")
}
