//! Batch command-line front end: `simulate`, `calibrate`, `train`,
//! `evaluate` and `report`.
//!
//! Settings resolve in three layers, later ones winning:
//! built-in defaults → the TOML file given by `--config` → command-line flags.
//! The effective configuration is echoed into every output as a provenance
//! record (tool version, command, configuration, its SHA-256, seeds and the
//! SHA-256 of every input file), so any output can be regenerated from it.
//!
//! Failures print one line `error[<category>]: <message>` on stderr and exit
//! with 1 (usage), 2 (schema/data) or 3 (numeric).

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::datasets::{self, preset, split, stepped, Dataset, Target, TransportMode};
use crate::error::{Error, ErrorCategory, Result};
use crate::eval::{self, CiMethod, EvalOptions, Metrics, Predictor};
use crate::geometry::{ArrayGeometry, DetectorModel};
use crate::models::{self, container::Container, ModelConfig, TrainedModel};
use crate::reftable::{self, CalibrationMode, CalibrationSpec, QueryMode, ReferenceTable};
use crate::scaling::ScalerKind;
use crate::transport::Scene;

pub const TOOL: &str = "radloc";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Optional overrides of a preset's scene template.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub n_detectors: Option<usize>,
    pub ring_radius: Option<f64>,
    pub detector_radius: Option<f64>,
    pub intrinsic_efficiency: Option<f64>,
    pub face_area: Option<f64>,
    pub mu_self: Option<f64>,
    pub activity_ci: Option<f64>,
    pub live_time: Option<f64>,
    pub background_rate: Option<f64>,
}

/// An inclusive `start..=end` range with a fixed step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeConfig {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl RangeConfig {
    fn values(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0) || self.end < self.start {
            return Err(Error::InvalidInput(format!("invalid range {self:?}")));
        }
        Ok(stepped(self.start, self.end, self.step))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum TransportKind {
    Expected,
    Poisson,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub preset: String,
    pub seed: Option<u64>,
    pub transport: Option<TransportKind>,
    pub mc_photons: u64,
    pub replicates: Option<usize>,
    pub angles: Option<RangeConfig>,
    pub distances: Option<RangeConfig>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            preset: "S1-small".into(),
            seed: None,
            transport: None,
            mc_photons: 1_000_000,
            replicates: None,
            angles: None,
            distances: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub enabled: bool,
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            test_fraction: 0.2,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationConfig {
    pub distance: f64,
    pub replicates: usize,
    pub mode: CalibrationMode,
    pub seed: u64,
    /// Calibration angles; defaults to the preset's angle grid.
    pub angles: Option<RangeConfig>,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            distance: CalibrationSpec::DEFAULT_DISTANCE,
            replicates: CalibrationSpec::DEFAULT_REPLICATES,
            mode: CalibrationMode::Poisson,
            seed: 42,
            angles: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum QueryKind {
    #[default]
    Raw,
    Normalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub bootstrap: bool,
    pub bootstrap_resamples: usize,
    pub bootstrap_seed: u64,
    /// How a reference table compares queries.
    pub query: QueryKind,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            bootstrap: false,
            bootstrap_resamples: CiMethod::DEFAULT_RESAMPLES,
            bootstrap_seed: 42,
            query: QueryKind::Raw,
        }
    }
}

/// Everything a run depends on; the `[section]` names of the TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scene: SceneConfig,
    pub grid: GridConfig,
    pub split: SplitConfig,
    pub scaler: ScalerKind,
    pub target: Target,
    pub model: ModelConfig,
    pub calibration: CalibrationConfig,
    pub eval: EvalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scene: SceneConfig::default(),
            grid: GridConfig::default(),
            split: SplitConfig::default(),
            scaler: ScalerKind::UnitNorm,
            target: Target::Angle,
            model: ModelConfig::default(),
            calibration: CalibrationConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidInput(format!("config: {}", e.message())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| {
            Error::InvalidInput(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::from_toml(&text)
    }

    /// Preset template with the `[scene]` overrides applied.
    pub fn scene(&self) -> Result<Scene> {
        let p = preset(&self.grid.preset)?;
        let mut scene = p.scene;
        let s = &self.scene;
        let base = scene.array.detectors[0];
        let model = DetectorModel {
            radius: s.detector_radius.unwrap_or(base.radius),
            intrinsic_efficiency: s.intrinsic_efficiency.unwrap_or(base.intrinsic_efficiency),
            face_area: s.face_area.unwrap_or(base.face_area),
            mu_self: s.mu_self.unwrap_or(base.mu_self),
        };
        let n = s.n_detectors.unwrap_or(scene.array.len());
        let ring = s.ring_radius.unwrap_or(scene.array.ring_radius);
        scene.array = ArrayGeometry::ring(n, ring, model)?;
        if let Some(a) = s.activity_ci {
            scene.source.activity = a;
        }
        if let Some(t) = s.live_time {
            scene.acquisition.live_time = t;
        }
        if let Some(b) = s.background_rate {
            scene.acquisition.background_rate = b;
        }
        for d in &scene.array.detectors {
            if !(d.intrinsic_efficiency > 0.0 && d.intrinsic_efficiency <= 1.0) {
                return Err(Error::InvalidInput(
                    "intrinsic efficiency must be in (0, 1]".into(),
                ));
            }
            if !(d.face_area > 0.0) || !(d.mu_self >= 0.0) {
                return Err(Error::InvalidInput(
                    "face area must be > 0 and mu_self >= 0".into(),
                ));
            }
        }
        Ok(scene)
    }

    /// Preset grid with the `[grid]` overrides applied.
    pub fn grid(&self) -> Result<datasets::ScenarioGrid> {
        let g = &self.grid;
        let mut grid = preset(&g.preset)?.grid;
        if let Some(seed) = g.seed {
            grid.seed = seed;
        }
        if let Some(r) = g.replicates {
            grid.replicates = r;
        }
        if let Some(a) = &g.angles {
            grid.angles = a.values()?;
        }
        if let Some(d) = &g.distances {
            grid.distances = d.values()?;
        }
        if let Some(t) = g.transport {
            grid.transport_mode = match t {
                TransportKind::Expected => TransportMode::Expected,
                TransportKind::Poisson => TransportMode::Poisson,
                TransportKind::MonteCarlo => TransportMode::MonteCarlo {
                    n_photons: g.mc_photons,
                },
            };
        }
        grid.validate()?;
        Ok(grid)
    }

    pub fn ci_method(&self) -> CiMethod {
        if self.eval.bootstrap {
            CiMethod::Bootstrap {
                resamples: self.eval.bootstrap_resamples,
                seed: self.eval.bootstrap_seed,
            }
        } else {
            CiMethod::Normal
        }
    }
}

/// Lowercase hex SHA-256 digest.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Provenance record attached to every output.
pub fn provenance(command: &str, config: &RunConfig, inputs: &[(&str, &[u8])]) -> Value {
    let config_json = serde_json::to_value(config).expect("config serializes");
    let hash = sha256_hex(config_json.to_string().as_bytes());
    let inputs: serde_json::Map<String, Value> = inputs
        .iter()
        .map(|(name, bytes)| (name.to_string(), Value::String(sha256_hex(bytes))))
        .collect();
    json!({
        "tool": TOOL,
        "version": VERSION,
        "command": command,
        "config_sha256": hash,
        "seeds": {
            "grid": config.grid.seed,
            "split": config.split.seed,
            "model": config.model.seed,
            "calibration": config.calibration.seed,
            "bootstrap": config.eval.bootstrap_seed,
        },
        "inputs": inputs,
        "config": config_json,
    })
}

pub const PROVENANCE_PREFIX: &str = "provenance: ";

fn provenance_comment(p: &Value) -> String {
    format!("{PROVENANCE_PREFIX}{p}")
}

#[derive(Debug, Parser)]
#[command(
    name = "radloc",
    version,
    about = "Gamma-ray source localization toolkit"
)]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Worker threads (results do not depend on this).
    #[arg(long, global = true, env = "RADLOC_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labeled count dataset (CSV).
    Simulate(SimulateArgs),
    /// Build a reference table (JSON container).
    Calibrate(CalibrateArgs),
    /// Train a classifier on a dataset (JSON container).
    Train(TrainArgs),
    /// Evaluate models and reference tables on a dataset.
    Evaluate(EvaluateArgs),
    /// Pivot metrics CSVs into an accuracy-vs-distance table.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub transport: Option<TransportKind>,
    #[arg(long)]
    pub mc_photons: Option<u64>,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub preset: Option<String>,
    /// Calibration distance in meters.
    #[arg(long)]
    pub distance: Option<f64>,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Noiseless,
    Poisson,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Use the whole dataset instead of the train/test partition.
    #[arg(long)]
    pub no_split: bool,
    #[arg(long)]
    pub test_fraction: Option<f64>,
    #[arg(long)]
    pub split_seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub scaler: Option<String>,
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub split: SplitArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Trained model container; repeatable.
    #[arg(long = "model")]
    pub models: Vec<PathBuf>,
    /// Reference-table container; repeatable.
    #[arg(long = "table")]
    pub tables: Vec<PathBuf>,
    #[arg(long, value_enum)]
    pub query: Option<QueryKind>,
    /// Bootstrap confidence intervals instead of the normal approximation.
    #[arg(long)]
    pub bootstrap: bool,
    /// Name written in the `dataset` column; defaults to the file stem.
    #[arg(long)]
    pub dataset_name: Option<String>,
    #[command(flatten)]
    pub split: SplitArgs,
    /// Flat metrics CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Structured JSON report.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Metrics CSVs written by `evaluate`; repeatable.
    #[arg(long = "metrics", required = true)]
    pub metrics: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

fn read_input(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))
}

fn write_output(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, bytes)?;
    Ok(())
}

fn apply_split_args(cfg: &mut RunConfig, a: &SplitArgs) {
    if a.no_split {
        cfg.split.enabled = false;
    }
    if let Some(f) = a.test_fraction {
        cfg.split.test_fraction = f;
    }
    if let Some(s) = a.split_seed {
        cfg.split.seed = s;
    }
}

/// `(train, test)` partition, or the whole set twice when splitting is off.
fn partition(cfg: &RunConfig, ds: &Dataset) -> Result<(Dataset, Dataset)> {
    if cfg.split.enabled {
        split(ds, cfg.split.test_fraction, cfg.split.seed)
    } else {
        Ok((ds.clone(), ds.clone()))
    }
}

fn read_dataset(bytes: &[u8]) -> Result<Dataset> {
    datasets::read_csv_from(bytes)
}

pub fn cmd_simulate(cfg: &mut RunConfig, a: &SimulateArgs) -> Result<()> {
    if let Some(p) = &a.preset {
        cfg.grid.preset = p.clone();
    }
    if let Some(s) = a.seed {
        cfg.grid.seed = Some(s);
    }
    if let Some(t) = a.transport {
        cfg.grid.transport = Some(t);
    }
    if let Some(n) = a.mc_photons {
        cfg.grid.mc_photons = n;
    }
    if let Some(r) = a.replicates {
        cfg.grid.replicates = Some(r);
    }
    let grid = cfg.grid()?;
    let scene = cfg.scene()?;
    let ds = datasets::generate(&grid, &scene)?;
    let prov = provenance("simulate", cfg, &[]);
    let mut buf = Vec::new();
    datasets::write_csv_to(&ds, &mut buf, &[provenance_comment(&prov)])?;
    write_output(&a.out, &buf)?;
    log::info!("wrote {} samples to {}", ds.len(), a.out.display());
    Ok(())
}

pub fn cmd_calibrate(cfg: &mut RunConfig, a: &CalibrateArgs) -> Result<()> {
    if let Some(p) = &a.preset {
        cfg.grid.preset = p.clone();
    }
    if let Some(d) = a.distance {
        cfg.calibration.distance = d;
    }
    if let Some(r) = a.replicates {
        cfg.calibration.replicates = r;
    }
    if let Some(m) = a.mode {
        cfg.calibration.mode = match m {
            ModeArg::Noiseless => CalibrationMode::Noiseless,
            ModeArg::Poisson => CalibrationMode::Poisson,
        };
    }
    if let Some(s) = a.seed {
        cfg.calibration.seed = s;
    }
    let scene = cfg.scene()?;
    let c = &cfg.calibration;
    let angles = match &c.angles {
        Some(r) => r.values()?,
        None => cfg.grid()?.angles,
    };
    let spec = CalibrationSpec {
        angles,
        distance: c.distance,
        replicates: c.replicates,
        mode: c.mode,
        seed: c.seed,
    };
    let table = reftable::calibrate(&scene, &spec)?;
    let prov = provenance("calibrate", cfg, &[]);
    write_output(&a.out, table.to_container(Some(prov)).to_json()?.as_bytes())
}

pub fn cmd_train(cfg: &mut RunConfig, a: &TrainArgs) -> Result<()> {
    if let Some(m) = &a.model {
        cfg.model.kind = m.parse()?;
    }
    if let Some(s) = &a.scaler {
        cfg.scaler = s.parse()?;
    }
    if let Some(t) = &a.target {
        cfg.target = t.parse()?;
    }
    if let Some(s) = a.seed {
        cfg.model.seed = s;
    }
    apply_split_args(cfg, &a.split);
    let bytes = read_input(&a.data)?;
    let ds = read_dataset(&bytes)?;
    if let Some(n) = cfg.scene.n_detectors {
        if n != ds.n_detectors {
            return Err(Error::Schema(format!(
                "dataset has {} detector columns but the configuration expects {n}",
                ds.n_detectors
            )));
        }
    }
    let (train_set, _) = partition(cfg, &ds)?;
    let model = models::train(&cfg.model, cfg.scaler, &train_set, cfg.target)?;
    let prov = provenance("train", cfg, &[("data", &bytes)]);
    write_output(&a.out, model.to_container(Some(prov)).to_json()?.as_bytes())
}

/// Evaluation of one predictor, as stored in the JSON report.
#[derive(Debug, Clone, Serialize)]
struct ReportEntry {
    predictor: String,
    scaler: String,
    source: String,
    metrics: Metrics,
}

pub fn cmd_evaluate(cfg: &mut RunConfig, a: &EvaluateArgs) -> Result<()> {
    if a.models.is_empty() && a.tables.is_empty() {
        return Err(Error::InvalidInput(
            "give at least one --model or --table".into(),
        ));
    }
    if let Some(q) = a.query {
        cfg.eval.query = q;
    }
    if a.bootstrap {
        cfg.eval.bootstrap = true;
    }
    apply_split_args(cfg, &a.split);
    let data_bytes = read_input(&a.data)?;
    let ds = read_dataset(&data_bytes)?;
    let (_, test) = partition(cfg, &ds)?;
    let dataset_name = a.dataset_name.clone().unwrap_or_else(|| {
        a.data
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into())
    });
    let opts = EvalOptions {
        pipeline: None,
        ci: cfg.ci_method(),
    };

    let mut inputs: Vec<(String, Vec<u8>)> = vec![("data".into(), data_bytes.clone())];
    let mut entries = Vec::new();
    for (i, path) in a.models.iter().enumerate() {
        let bytes = read_input(path)?;
        let text = String::from_utf8(bytes.clone())
            .map_err(|_| Error::Corrupt("model is not UTF-8".into()))?;
        let model = TrainedModel::from_container(&Container::from_json(&text)?)?;
        let metrics = eval::evaluate(Predictor::Model(&model), &test, &opts)?;
        entries.push(ReportEntry {
            predictor: model.kind().to_string(),
            scaler: model.scaler.kind().to_string(),
            source: format!("model[{i}]"),
            metrics,
        });
        inputs.push((format!("model[{i}]"), bytes));
    }
    let mode = match cfg.eval.query {
        QueryKind::Raw => QueryMode::Raw,
        QueryKind::Normalized => QueryMode::Normalized,
    };
    for (i, path) in a.tables.iter().enumerate() {
        let bytes = read_input(path)?;
        let text = String::from_utf8(bytes.clone())
            .map_err(|_| Error::Corrupt("table is not UTF-8".into()))?;
        let table = ReferenceTable::from_container(&Container::from_json(&text)?)?;
        let metrics = eval::evaluate(Predictor::Table(&table, mode), &test, &opts)?;
        entries.push(ReportEntry {
            predictor: reftable::REFERENCE_TABLE_KIND.to_string(),
            scaler: match mode {
                QueryMode::Raw => ScalerKind::Raw.to_string(),
                QueryMode::Normalized => ScalerKind::UnitNorm.to_string(),
            },
            source: format!("table[{i}]"),
            metrics,
        });
        inputs.push((format!("table[{i}]"), bytes));
    }
    let input_refs: Vec<(&str, &[u8])> = inputs
        .iter()
        .map(|(n, b)| (n.as_str(), b.as_slice()))
        .collect();
    let prov = provenance("evaluate", cfg, &input_refs);

    let rows: Vec<eval::MetricsRow> = entries
        .iter()
        .flat_map(|e| eval::metrics_rows(&e.metrics, &e.predictor, &e.scaler, &dataset_name))
        .collect();
    let mut buf = Vec::new();
    eval::write_metrics_csv(&rows, &mut buf, &[provenance_comment(&prov)])?;
    write_output(&a.out, &buf)?;
    if let Some(path) = &a.json {
        let report = json!({
            "dataset": dataset_name,
            "n_test_samples": test.len(),
            "results": entries,
            "provenance": prov,
        });
        let mut text =
            serde_json::to_string_pretty(&report).map_err(|e| Error::Numeric(e.to_string()))?;
        text.push('\n');
        write_output(path, text.as_bytes())?;
    }
    for e in &entries {
        let m = &e.metrics;
        if m.zero_count_samples > 0 {
            log::warn!(
                "{}: {} test samples had no counts at all",
                e.source,
                m.zero_count_samples
            );
        }
    }
    Ok(())
}

pub fn cmd_report(cfg: &mut RunConfig, a: &ReportArgs) -> Result<()> {
    let mut rows = Vec::new();
    let mut inputs = Vec::new();
    for (i, path) in a.metrics.iter().enumerate() {
        let bytes = read_input(path)?;
        rows.extend(eval::read_metrics_csv(bytes.as_slice())?);
        inputs.push((format!("metrics[{i}]"), bytes));
    }
    let input_refs: Vec<(&str, &[u8])> = inputs
        .iter()
        .map(|(n, b)| (n.as_str(), b.as_slice()))
        .collect();
    let prov = provenance("report", cfg, &input_refs);
    let (series, table) = eval::accuracy_by_distance(&rows);
    let mut out = Vec::new();
    writeln!(out, "# {}", provenance_comment(&prov))?;
    let mut header = vec!["distance_m".to_string()];
    header.extend(series);
    writeln!(out, "{}", header.join(","))?;
    for (d, cols) in table {
        let mut fields = vec![d.to_string()];
        fields.extend(
            cols.iter()
                .map(|c| c.map(|v| v.to_string()).unwrap_or_default()),
        );
        writeln!(out, "{}", fields.join(","))?;
    }
    write_output(&a.out, &out)
}

fn dispatch(cli: &Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(&mut cfg, a),
        Command::Calibrate(a) => cmd_calibrate(&mut cfg, a),
        Command::Train(a) => cmd_train(&mut cfg, a),
        Command::Evaluate(a) => cmd_evaluate(&mut cfg, a),
        Command::Report(a) => cmd_report(&mut cfg, a),
    }
}

/// Runs the CLI on `args` and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                ErrorCategory::Usage.exit_code()
            } else {
                0
            };
            let _ = e.print();
            return code;
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error[usage]: --threads must be >= 1");
            return ErrorCategory::Usage.exit_code();
        }
        // a second initialization (e.g. repeated in-process runs) is harmless
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            let cat = e.category();
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {msg}", cat.as_str());
            cat.exit_code()
        }
    }
}
