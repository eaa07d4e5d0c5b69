//! Scenario pipeline behind the `jointnet` binary: load inputs, synthesize
//! the joint network, run cascades, derive availability masks and compare
//! estimation error between the two interdependency models.
//!
//! Scenario files are JSON, version 1:
//!
//! ```json
//! {
//!   "version": 1,
//!   "label": "substation 6 attack",
//!   "grid": "../crates/core/fixtures/ieee14.json",
//!   "synthesis": "../crates/core/fixtures/ieee14_synthesis.json",
//!   "models": "both",
//!   "case": 1,
//!   "killed": ["P(12)", "C(1,1,6,6)", "C(1,2,6,6)"],
//!   "estimation": {"seeds": 100, "base_seed": 0}
//! }
//! ```
//!
//! `grid`, `synthesis` (when a string) and `estimation.true_state` are
//! resolved relative to the scenario file. `synthesis` may also be an
//! inline config object.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use jointnet_core::cascade::{run_network, AvailabilityMask, CascadeTrace, FootprintDiff};
use jointnet_core::estimation::{compare_models, state_from_points, ModelReport, NoiseModel, PolarPoint, StateVector};
use jointnet_core::idr::format_idr_file;
use jointnet_core::{footprint_diff, CasePolicy, EntityId, FailureScenario, Grid, JointNetwork, Model, SynthesisConfig};

pub const SCENARIO_VERSION: u32 = 1;

/// Input problems that map to exit code 2.
#[derive(Debug)]
pub struct ValidationFailed(pub Vec<String>);

impl fmt::Display for ValidationFailed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "validation failed: {}", self.0.join("; "))
    }
}

impl std::error::Error for ValidationFailed {}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    ValidationFailed(vec![msg.into()]).into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelChoice {
    Miim,
    Iim,
    #[default]
    Both,
}

impl ModelChoice {
    pub fn models(self) -> Vec<Model> {
        match self {
            ModelChoice::Miim => vec![Model::Miim],
            ModelChoice::Iim => vec![Model::Iim],
            ModelChoice::Both => vec![Model::Miim, Model::Iim],
        }
    }
}

impl std::str::FromStr for ModelChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "miim" => Ok(ModelChoice::Miim),
            "iim" => Ok(ModelChoice::Iim),
            "both" => Ok(ModelChoice::Both),
            _ => Err(format!("unknown model '{s}' (expected miim, iim or both)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum SynthesisSource {
    Path(String),
    Inline(SynthesisConfig),
}

// Untagged derive buffers the input, which loses string-to-integer map keys.
impl<'de> Deserialize<'de> for SynthesisSource {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::String(p) => Ok(SynthesisSource::Path(p)),
            v => SynthesisConfig::deserialize(v)
                .map(SynthesisSource::Inline)
                .map_err(serde::de::Error::custom),
        }
    }
}

impl Default for SynthesisSource {
    fn default() -> Self {
        SynthesisSource::Inline(SynthesisConfig::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimationSettings {
    pub seeds: u64,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_state: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub version: u32,
    #[serde(default)]
    pub label: String,
    pub grid: String,
    #[serde(default)]
    pub synthesis: SynthesisSource,
    #[serde(default)]
    pub models: ModelChoice,
    #[serde(default = "default_case")]
    pub case: u8,
    #[serde(default)]
    pub killed: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimation: Option<EstimationSettings>,
}

fn default_case() -> u8 {
    1
}

/// A scenario with every reference resolved.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub file: ScenarioFile,
    pub dir: PathBuf,
    pub grid: Grid,
    pub config: SynthesisConfig,
    pub case: CasePolicy,
    pub failure: FailureScenario,
}

pub fn load_grid(path: impl AsRef<Path>) -> Result<Grid> {
    let path = path.as_ref();
    Grid::load(path).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

pub fn load_config(path: impl AsRef<Path>) -> Result<SynthesisConfig> {
    let path = path.as_ref();
    SynthesisConfig::load(path).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<LoadedScenario> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: ScenarioFile =
        serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    if file.version != SCENARIO_VERSION {
        return Err(invalid(format!(
            "{}: unknown scenario version {} (supported: {SCENARIO_VERSION})",
            path.display(),
            file.version
        )));
    }
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let grid = load_grid(dir.join(&file.grid))?;
    let config = match &file.synthesis {
        SynthesisSource::Path(p) => load_config(dir.join(p))?,
        SynthesisSource::Inline(c) => c.clone(),
    };
    let case = CasePolicy::from_number(file.case).ok_or_else(|| invalid(format!("case must be 1 or 2, got {}", file.case)))?;
    let killed = file
        .killed
        .iter()
        .map(|s| EntityId::parse(s).map_err(|e| invalid(format!("killed entity '{s}': {e}"))))
        .collect::<Result<BTreeSet<_>>>()?;
    let failure = FailureScenario {
        label: file.label.clone(),
        killed,
    };
    Ok(LoadedScenario {
        file,
        dir,
        grid,
        config,
        case,
        failure,
    })
}

pub fn synthesize(grid: &Grid, config: &SynthesisConfig) -> Result<JointNetwork> {
    jointnet_core::synthesize(grid, config).map_err(|e| invalid(format!("synthesis: {e}")))
}

/// Write `network.json` and the four rule files.
pub fn write_synthesis(network: &JointNetwork, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    let path = out_dir.join("network.json");
    fs::write(&path, serde_json::to_string_pretty(network)? + "\n")?;
    written.push(path);
    for set in &network.rule_sets {
        let path = out_dir.join(format!("{}_case{}.idr", set.model, set.case));
        let header = format!("{} rules, case {}, {} rules", set.model, set.case, set.rules.len());
        fs::write(&path, format_idr_file(&set.rules, set.model, &header))?;
        written.push(path);
    }
    Ok(written)
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceStep {
    pub step: usize,
    pub changes: Vec<TraceChange>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceChange {
    pub entity: EntityId,
    pub value: u8,
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceJson {
    pub label: String,
    pub model: Model,
    pub case: CasePolicy,
    pub converged_at: usize,
    pub steps: Vec<TraceStep>,
}

pub fn trace_json(trace: &CascadeTrace, case: CasePolicy) -> TraceJson {
    TraceJson {
        label: trace.label.clone(),
        model: trace.model,
        case,
        converged_at: trace.converged_at,
        steps: (1..=trace.steps.len())
            .map(|t| TraceStep {
                step: t,
                changes: trace
                    .changes_at(t)
                    .into_iter()
                    .map(|(entity, value)| TraceChange { entity, value })
                    .collect(),
            })
            .collect(),
    }
}

/// Cascade result for one model.
#[derive(Debug, Clone)]
pub struct ModelRun {
    pub model: Model,
    pub case: CasePolicy,
    pub trace: CascadeTrace,
    pub mask: AvailabilityMask,
}

pub fn run_cascades(network: &JointNetwork, models: &[Model], case: CasePolicy, failure: &FailureScenario) -> Result<Vec<ModelRun>> {
    models
        .iter()
        .map(|&model| {
            let (trace, mask) = run_network(network, model, case, failure).with_context(|| format!("cascade ({model})"))?;
            Ok(ModelRun {
                model,
                case,
                trace,
                mask,
            })
        })
        .collect()
}

/// Write trace TSV/JSON and the mask for one run; returns the written paths.
pub fn write_run(run: &ModelRun, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let stem = format!("{}_case{}", run.model, run.case);
    let files = [
        (format!("{stem}_trace.tsv"), run.trace.to_tsv()),
        (
            format!("{stem}_trace.json"),
            serde_json::to_string_pretty(&trace_json(&run.trace, run.case))? + "\n",
        ),
        (format!("{stem}_mask.json"), serde_json::to_string_pretty(&run.mask)? + "\n"),
    ];
    let mut out = Vec::new();
    for (name, body) in files {
        let p = out_dir.join(name);
        fs::write(&p, body)?;
        out.push(p);
    }
    Ok(out)
}

pub fn load_mask(path: impl AsRef<Path>) -> Result<AvailabilityMask> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

pub fn true_state(grid: &Grid, path: Option<&Path>) -> Result<StateVector> {
    match path {
        None => Ok(StateVector::from_grid(grid)),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let points: Vec<PolarPoint> =
                serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", p.display())))?;
            state_from_points(grid, &points).map_err(|e| invalid(format!("{}: {e}", p.display())))
        }
    }
}

/// Per-bus error table, columns `bus, model, mean_abs_err, std_err, flagged_unobservable`.
pub fn errors_csv(reports: &[ModelReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["bus", "model", "mean_abs_err", "std_err", "flagged_unobservable"])?;
    for r in reports {
        for b in &r.buses {
            w.write_record([
                b.bus.to_string(),
                r.model.to_string(),
                format!("{:.9e}", b.mean_abs_err),
                format!("{:.9e}", b.std_err),
                b.flagged_unobservable.to_string(),
            ])?;
        }
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn estimate(grid: &Grid, truth: &StateVector, masks: &[AvailabilityMask], seeds: u64, base_seed: u64) -> Result<Vec<ModelReport>> {
    let seeds: Vec<u64> = (base_seed..base_seed + seeds).collect();
    compare_models(grid, truth, masks, &seeds, NoiseModel::default()).context("estimation")
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelSummary {
    pub model: Model,
    pub converged_at: usize,
    pub failed_entities: usize,
    pub scada_lost: Vec<u32>,
    pub pmu_available: Vec<u32>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimationSummary {
    pub seeds: u64,
    pub base_seed: u64,
    pub csv: String,
    /// Mean over buses of the per-bus mean error, per model.
    pub mean_error: Vec<(Model, f64)>,
}

/// Everything a `run` produces; also written as `report.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub label: String,
    pub case: CasePolicy,
    pub killed: Vec<EntityId>,
    pub models: Vec<ModelSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diff: Option<FootprintDiff>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimation: Option<EstimationSummary>,
    #[serde(skip)]
    pub runs: Vec<ModelRun>,
    #[serde(skip)]
    pub files: Vec<PathBuf>,
}

/// Overrides from the command line.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub models: Option<ModelChoice>,
    pub case: Option<CasePolicy>,
    pub seed: Option<u64>,
}

/// Full pipeline for one scenario file, writing all artifacts under `out_dir`.
pub fn run_scenario(path: impl AsRef<Path>, out_dir: &Path, opts: RunOptions) -> Result<RunReport> {
    let sc = load_scenario(path)?;
    let case = opts.case.unwrap_or(sc.case);
    let models = opts.models.unwrap_or(sc.file.models).models();
    let network = synthesize(&sc.grid, &sc.config)?;
    let violations = network.validate();
    if !violations.is_empty() {
        return Err(ValidationFailed(violations.iter().map(ToString::to_string).collect()).into());
    }
    check_killed(&network, &sc.failure)?;
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;

    let mut files = write_synthesis(&network, out_dir)?;
    let runs = run_cascades(&network, &models, case, &sc.failure)?;
    for r in &runs {
        files.extend(write_run(r, out_dir)?);
    }
    let diff = if runs.len() == 2 {
        let d = footprint_diff(&runs[0].mask, &runs[1].mask)?;
        let p = out_dir.join("diff.json");
        fs::write(&p, serde_json::to_string_pretty(&d)? + "\n")?;
        files.push(p);
        Some(d)
    } else {
        None
    };

    let estimation = match &sc.file.estimation {
        None => None,
        Some(est) => {
            let truth = true_state(&sc.grid, est.true_state.as_ref().map(|p| sc.dir.join(p)).as_deref())?;
            let base = opts.seed.unwrap_or(est.base_seed);
            let masks: Vec<AvailabilityMask> = runs.iter().map(|r| r.mask.clone()).collect();
            let reports = estimate(&sc.grid, &truth, &masks, est.seeds, base)?;
            let p = out_dir.join("errors.csv");
            fs::write(&p, errors_csv(&reports)?)?;
            files.push(p);
            Some(EstimationSummary {
                seeds: est.seeds,
                base_seed: base,
                csv: "errors.csv".into(),
                mean_error: reports
                    .iter()
                    .map(|r| (r.model, r.buses.iter().map(|b| b.mean_abs_err).sum::<f64>() / r.buses.len() as f64))
                    .collect(),
            })
        }
    };

    let report = RunReport {
        label: sc.file.label.clone(),
        case,
        killed: sc.failure.killed.iter().cloned().collect(),
        models: runs
            .iter()
            .map(|r| ModelSummary {
                model: r.model,
                converged_at: r.trace.converged_at,
                failed_entities: r.trace.final_levels().iter().filter(|v| **v == 0).count(),
                scada_lost: r.mask.scada_lost(),
                pmu_available: r.mask.pmu_available(),
            })
            .collect(),
        diff,
        estimation,
        runs,
        files: vec![],
    };
    let p = out_dir.join("report.json");
    fs::write(&p, serde_json::to_string_pretty(&report)? + "\n")?;
    files.push(p);
    Ok(RunReport { files, ..report })
}

/// Check a grid (and optional config) end to end; returns every problem found.
pub fn validate_inputs(grid: &Path, config: Option<&Path>) -> Result<Vec<String>> {
    let grid = match Grid::load(grid) {
        Ok(g) => g,
        Err(e) => return Ok(vec![e.to_string()]),
    };
    let config = match config {
        Some(p) => match SynthesisConfig::load(p) {
            Ok(c) => c,
            Err(e) => return Ok(vec![e.to_string()]),
        },
        None => SynthesisConfig::default(),
    };
    Ok(match jointnet_core::synthesize(&grid, &config) {
        Ok(net) => net.validate().iter().map(ToString::to_string).collect(),
        Err(e) => vec![e.to_string()],
    })
}

/// Parse a rule file, reporting the first error.
pub fn validate_idr(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(match jointnet_core::idr::parse_idr_file(&text) {
        Ok(_) => vec![],
        Err(e) => vec![e.to_string()],
    })
}

/// Reject kill lists naming entities the network does not have, or views.
pub fn check_killed(network: &JointNetwork, failure: &FailureScenario) -> Result<()> {
    let bad: Vec<String> = failure
        .killed
        .iter()
        .filter(|id| id.is_view() || !network.registry.contains_key(*id))
        .map(|id| format!("cannot kill '{id}': not a network entity"))
        .collect();
    ensure_no_violations(bad)
}

pub fn ensure_no_violations(problems: Vec<String>) -> Result<()> {
    if problems.is_empty() {
        Ok(())
    } else {
        Err(ValidationFailed(problems).into())
    }
}
