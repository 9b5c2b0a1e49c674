use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{AnalysisConfig, Mode, PriorSpec, DEFAULT_COMPAT_GRID};
use crate::bayes::{conjugate_normal_update, flat_grid_prior, grid_bayes_update, LikelihoodKernel, NormalPrior};
use crate::bispatial::{assess_region_probability, one_sided_p_value};
use crate::composition::ioi_pipeline;
use crate::density::{Density1D, DEFAULT_GRID_POINTS};
use crate::error::{IoiError, Result};
use crate::fiducial::{fiducial_density, normal_mean_pivot, DataSummary};
use crate::gibbs::{
    build_conditional_set, check_compatibility, default_burn_in, gibbs_run, scan_sensitivity, CompatibilityReport,
    MethodTag, ScanOrder, Verdict,
};

/// Command-line overrides applied on top of the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output_path: Option<String>,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub report_path: PathBuf,
    pub draws_path: Option<PathBuf>,
}

#[derive(Serialize)]
struct Quantiles {
    #[serde(rename = "0.025")]
    lower: f64,
    #[serde(rename = "0.5")]
    median: f64,
    #[serde(rename = "0.975")]
    upper: f64,
}

impl Quantiles {
    fn of(d: &Density1D) -> Result<Self> {
        Ok(Quantiles {
            lower: d.quantile(0.025)?,
            median: d.quantile(0.5)?,
            upper: d.quantile(0.975)?,
        })
    }
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    engine: &'static str,
    version: &'static str,
    mode: Mode,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    config: &'a AnalysisConfig,
    #[serde(flatten)]
    result: T,
}

#[derive(Serialize)]
struct DensityResult {
    data: DataSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    update: Option<&'static str>,
    density: Density1D,
    quantiles: Quantiles,
}

#[derive(Serialize)]
struct BispatialResult {
    data: DataSummary,
    epsilon: f64,
    p0: f64,
    applicable: bool,
    region_probability: f64,
}

#[derive(Serialize)]
struct PipelineReport {
    data: DataSummary,
    p0: f64,
    region_probability: f64,
    density: Density1D,
    quantiles: Quantiles,
}

#[derive(Serialize)]
struct GibbsResult {
    draws_path: String,
    method_tags: Vec<MethodTag>,
    scan: ScanOrder,
    iterations: usize,
    burn_in: usize,
    kept: usize,
    means: Vec<f64>,
    correlation: f64,
    compatibility: CompatibilityReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    recommendation: Option<&'static str>,
}

#[derive(Serialize)]
struct ScanResult {
    method_tags: Vec<MethodTag>,
    iterations: usize,
    burn_in: usize,
    scans: Vec<String>,
    projections: Vec<String>,
    ks_matrix: Vec<Vec<f64>>,
    per_projection: Vec<Vec<Vec<f64>>>,
    max_ks: f64,
    compatibility: CompatibilityReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    recommendation: Option<&'static str>,
}

const APPROXIMATE_ADVICE: &str =
    "conditionals are only approximately compatible; use the Gibbs sampler output as the joint post-data distribution";

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let io = |source| IoiError::Io {
        path: path.display().to_string(),
        source,
    };
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)
        .map_err(|e| IoiError::Structural(format!("report serialization failed: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn base_dir(config_path: &Path) -> PathBuf {
    config_path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Loads the config, applies overrides and validates it.
pub fn load_config(config_path: &Path, overrides: &Overrides) -> Result<AnalysisConfig> {
    let mut cfg = AnalysisConfig::load(config_path)?;
    if let Some(seed) = overrides.seed {
        cfg.seed = Some(seed);
    }
    if let Some(out) = &overrides.output_path {
        cfg.output_path = Some(out.clone());
    }
    cfg.validate(&base_dir(config_path))?;
    Ok(cfg)
}

fn prior_density(spec: &PriorSpec) -> Result<Density1D> {
    match spec {
        PriorSpec::Normal { mean, variance } => Density1D::normal(*mean, *variance),
        PriorSpec::Grid { lo, hi, weights: Some(w), .. } => Ok(Density1D::grid(*lo, *hi, w.clone())?.normalize()),
        PriorSpec::Grid { lo, hi, weights: None, n_points } => {
            flat_grid_prior(*lo, *hi, n_points.unwrap_or(DEFAULT_GRID_POINTS))
        }
    }
}

fn compat_without_joint(mut rep: CompatibilityReport) -> CompatibilityReport {
    rep.joint = None;
    rep
}

/// Executes one analysis and writes its report(s).
pub fn run(config_path: &Path, overrides: &Overrides) -> Result<RunOutcome> {
    let cfg = load_config(config_path, overrides)?;
    let base = base_dir(config_path);
    let report_path = cfg.resolve(&base, cfg.output_path.as_deref().expect("validated"));
    let mut draws_path = None;

    let bytes = match cfg.mode {
        Mode::Fiducial => {
            let data = cfg.data_summary(&base)?;
            let density = fiducial_density(&normal_mean_pivot(), &data, cfg.knowledge())?;
            let quantiles = Quantiles::of(&density)?;
            render(&cfg, DensityResult { data, update: None, density, quantiles })?
        }
        Mode::Bayes => {
            let data = cfg.data_summary(&base)?;
            let spec = cfg.model.prior.as_ref().expect("validated");
            let (density, update) = match spec {
                PriorSpec::Normal { mean, variance } => {
                    (conjugate_normal_update(&NormalPrior::new(*mean, *variance)?, &data)?, "conjugate")
                }
                grid => (
                    grid_bayes_update(&prior_density(grid)?, &LikelihoodKernel::normal_mean(), &data)?,
                    "grid",
                ),
            };
            let quantiles = Quantiles::of(&density)?;
            render(&cfg, DensityResult { data, update: Some(update), density, quantiles })?
        }
        Mode::Bispatial => {
            let data = cfg.data_summary(&base)?;
            let bcfg = cfg.model.bispatial.as_ref().expect("validated").to_config()?;
            let pv = one_sided_p_value(&data, bcfg.epsilon())?;
            let region_probability = assess_region_probability(&pv, &bcfg)?;
            render(
                &cfg,
                BispatialResult {
                    data,
                    epsilon: bcfg.epsilon(),
                    p0: pv.p0,
                    applicable: pv.applicable,
                    region_probability,
                },
            )?
        }
        Mode::ComposePipeline => {
            let data = cfg.data_summary(&base)?;
            let bcfg = cfg.model.bispatial.as_ref().expect("validated").to_config()?;
            let out = ioi_pipeline(&data, &bcfg, cfg.knowledge())?;
            let quantiles = Quantiles::of(&out.density)?;
            render(
                &cfg,
                PipelineReport {
                    data,
                    p0: out.p0,
                    region_probability: out.region_probability,
                    density: out.density,
                    quantiles,
                },
            )?
        }
        Mode::Gibbs => {
            let set = build_conditional_set(cfg.model.conditionals.as_deref().expect("validated"))?;
            let iterations = cfg.iterations.expect("validated");
            let burn_in = cfg.burn_in.unwrap_or_else(|| default_burn_in(iterations));
            let init = cfg.model.init.clone().unwrap_or_else(|| vec![0.0; set.k()]);
            let scan = cfg.scans().into_iter().next().expect("default scans are non-empty");
            let chain = gibbs_run(&set, &scan, &init, iterations, burn_in, cfg.seed.expect("validated"))?;
            let compat = check_compatibility(&set, cfg.working_box(), cfg.model.grid_n.unwrap_or(DEFAULT_COMPAT_GRID))?;

            let csv_rel = cfg.draws_path.clone().unwrap_or_else(|| {
                Path::new(cfg.output_path.as_deref().expect("validated"))
                    .with_extension("csv")
                    .to_string_lossy()
                    .into_owned()
            });
            let csv_path = cfg.resolve(&base, &csv_rel);
            write_atomic(&csv_path, chain.to_csv().as_bytes())?;
            draws_path = Some(csv_path);

            let recommendation = (compat.verdict == Verdict::ApproximatelyCompatible).then_some(APPROXIMATE_ADVICE);
            render(
                &cfg,
                GibbsResult {
                    draws_path: csv_rel,
                    method_tags: set.tags().to_vec(),
                    scan,
                    iterations,
                    burn_in,
                    kept: iterations - burn_in,
                    means: (0..set.k()).map(|j| chain.mean(j)).collect(),
                    correlation: chain.correlation(0, 1),
                    compatibility: compat_without_joint(compat),
                    recommendation,
                },
            )?
        }
        Mode::ScanSensitivity => {
            let set = build_conditional_set(cfg.model.conditionals.as_deref().expect("validated"))?;
            let iterations = cfg.iterations.expect("validated");
            let burn_in = cfg.burn_in.unwrap_or_else(|| default_burn_in(iterations));
            let init = cfg.model.init.clone().unwrap_or_else(|| vec![0.0; set.k()]);
            let sens = scan_sensitivity(&set, &cfg.scans(), &init, iterations, burn_in, cfg.seed.expect("validated"))?;
            let compat = check_compatibility(&set, cfg.working_box(), cfg.model.grid_n.unwrap_or(DEFAULT_COMPAT_GRID))?;
            let recommendation = (compat.verdict == Verdict::ApproximatelyCompatible).then_some(APPROXIMATE_ADVICE);
            let max_ks = sens.max_ks();
            render(
                &cfg,
                ScanResult {
                    method_tags: set.tags().to_vec(),
                    iterations,
                    burn_in,
                    scans: sens.scans,
                    projections: sens.projections,
                    ks_matrix: sens.ks,
                    per_projection: sens.per_projection,
                    max_ks,
                    compatibility: compat_without_joint(compat),
                    recommendation,
                },
            )?
        }
    };

    write_atomic(&report_path, &bytes)?;
    Ok(RunOutcome { report_path, draws_path })
}

fn render<T: Serialize>(cfg: &AnalysisConfig, result: T) -> Result<Vec<u8>> {
    to_json(&Report {
        engine: "ioi",
        version: crate::VERSION,
        mode: cfg.mode,
        seed: cfg.seed,
        config: cfg,
        result,
    })
}

/// Structured error record written to stderr.
pub fn error_record(err: &IoiError) -> String {
    serde_json::json!({
        "error": {
            "kind": err.kind(),
            "message": err.to_string(),
            "exit_code": err.exit_code(),
        }
    })
    .to_string()
}
