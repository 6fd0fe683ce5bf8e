//! Load data → define model → train → evaluate, uniformly over task kinds.
//!
//! [`run_task`] computes every output in memory; [`execute`] additionally
//! commits them to the output directory. One seed drives the split, the fit
//! and generation through labelled substreams.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use trialml_core::audit::{audit_sequential, audit_tabular, AuditConfig, AuditError, AuditReport, FidelityReport};
use trialml_core::baselines::{fit_logistic_regression, predict_proba, BaselineError, LogRegConfig};
use trialml_core::data_model::{
    stratified_split, Partition, Section, SequentialDataset, SplitError, TabularDataset, TabularEncoder, TargetKind,
};
use trialml_core::metrics::{binary_classification_metrics, site_selection_metrics, MetricValue};
use trialml_core::rng::derive_seed;
use trialml_core::search::{build_index, evaluate_search, Bm25Params, FieldWeights, IdfVariant, SearchReport};
use trialml_core::simulation::{
    fit_gaussian_copula_with, plan_simulants, sample_copula, simulants_generate, uniform_random_generate, CopulaConfig,
    DEFAULT_K, DEFAULT_SWAP_PROB,
};

use crate::io::{self, IoError, TabularOptions};
use crate::outputs::Outputs;
use crate::persist::{self, SavedModel, TOOLKIT_VERSION};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    IndivOutcome,
    TrialOutcome,
    TrialSearch,
    TrialSimulationTabular,
    TrialSimulationSequence,
    SiteSelectionEval,
}

impl TaskKind {
    pub const ALL: [TaskKind; 6] = [
        TaskKind::IndivOutcome,
        TaskKind::TrialOutcome,
        TaskKind::TrialSearch,
        TaskKind::TrialSimulationTabular,
        TaskKind::TrialSimulationSequence,
        TaskKind::SiteSelectionEval,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::IndivOutcome => "indiv_outcome",
            TaskKind::TrialOutcome => "trial_outcome",
            TaskKind::TrialSearch => "trial_search",
            TaskKind::TrialSimulationTabular => "trial_simulation_tabular",
            TaskKind::TrialSimulationSequence => "trial_simulation_sequence",
            TaskKind::SiteSelectionEval => "site_selection_eval",
        }
    }

    /// The `data` key this task reads.
    pub fn data_keys(self) -> &'static [&'static str] {
        match self {
            TaskKind::IndivOutcome | TaskKind::TrialOutcome | TaskKind::TrialSimulationTabular => &["table"],
            TaskKind::TrialSearch => &["corpus", "qrels"],
            TaskKind::TrialSimulationSequence => &["sequences"],
            TaskKind::SiteSelectionEval => &["sites"],
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub struct RegistryEntry {
    pub task: TaskKind,
    pub model: &'static str,
    pub hyperparameters: &'static [&'static str],
}

const LOGREG_KEYS: &[&str] = &["learning_rate", "l2", "max_epochs", "tolerance"];

/// Every runnable (task, model) pair.
pub const REGISTRY: &[RegistryEntry] = &[
    RegistryEntry { task: TaskKind::IndivOutcome, model: "logistic_regression", hyperparameters: LOGREG_KEYS },
    RegistryEntry { task: TaskKind::TrialOutcome, model: "logistic_regression", hyperparameters: LOGREG_KEYS },
    RegistryEntry {
        task: TaskKind::TrialSearch,
        model: "bm25",
        hyperparameters: &["k1", "b", "epsilon", "idf", "title_weight"],
    },
    RegistryEntry {
        task: TaskKind::TrialSimulationTabular,
        model: "gaussian_copula",
        hyperparameters: &["calibrate_discrete", "n_samples"],
    },
    RegistryEntry { task: TaskKind::TrialSimulationSequence, model: "simulants", hyperparameters: &["k", "swap_prob"] },
    RegistryEntry { task: TaskKind::TrialSimulationSequence, model: "uniform_random", hyperparameters: &[] },
    RegistryEntry { task: TaskKind::SiteSelectionEval, model: "enrollment_report", hyperparameters: &[] },
];

pub fn lookup(task: TaskKind, model: &str) -> Option<&'static RegistryEntry> {
    REGISTRY.iter().find(|e| e.task == task && e.model == model)
}

// ---------------------------------------------------------------------------
// Errors

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    Config,
    LoadData,
    DefineModel,
    Train,
    Evaluate,
    WriteOutputs,
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Step::Config => "config",
            Step::LoadData => "load data",
            Step::DefineModel => "model definition",
            Step::Train => "model training",
            Step::Evaluate => "model evaluation",
            Step::WriteOutputs => "write outputs",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FailureKind {
    /// Input data is malformed or violates an invariant.
    Data,
    /// The request itself is wrong: unknown names, bad values, missing files.
    Config,
    Internal,
}

impl FailureKind {
    pub fn exit_code(self) -> i32 {
        match self {
            FailureKind::Data => 2,
            FailureKind::Config => 3,
            FailureKind::Internal => 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PipelineError {
    pub step: Step,
    pub kind: FailureKind,
    pub message: String,
}

impl PipelineError {
    pub fn new(step: Step, kind: FailureKind, message: impl Into<String>) -> Self {
        Self { step, kind, message: message.into() }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(Step::Config, FailureKind::Config, message)
    }

    pub fn data(step: Step, message: impl fmt::Display) -> Self {
        Self::new(step, FailureKind::Data, message.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        self.kind.exit_code()
    }
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} failed: {}", self.step, self.message)
    }
}

impl std::error::Error for PipelineError {}

/// Missing inputs are configuration errors, unreadable or invalid ones are
/// data errors and write failures are internal.
pub fn io_failure(step: Step, e: IoError) -> PipelineError {
    let kind = match &e {
        _ if e.is_not_found() => FailureKind::Config,
        IoError::Write { .. } => FailureKind::Internal,
        _ => FailureKind::Data,
    };
    PipelineError::new(step, kind, e.to_string())
}

fn audit_failure(step: Step, e: AuditError) -> PipelineError {
    PipelineError::data(step, e)
}

// ---------------------------------------------------------------------------
// Configuration

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataPaths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequences: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qrels: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sites: Option<PathBuf>,
}

impl DataPaths {
    fn get(&self, key: &str) -> Option<&PathBuf> {
        match key {
            "table" => self.table.as_ref(),
            "sequences" => self.sequences.as_ref(),
            "corpus" => self.corpus.as_ref(),
            "qrels" => self.qrels.as_ref(),
            "sites" => self.sites.as_ref(),
            _ => None,
        }
    }

    fn resolve(&mut self, base: &Path) {
        for p in [&mut self.table, &mut self.sequences, &mut self.corpus, &mut self.qrels, &mut self.sites]
            .into_iter()
            .flatten()
        {
            *p = base.join(&*p);
        }
    }
}

fn default_split() -> f64 {
    0.2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub task: TaskKind,
    pub model: String,
    #[serde(default)]
    pub hyperparameters: BTreeMap<String, serde_json::Value>,
    pub data: DataPaths,
    /// Held-out share: the test split for outcome tasks, the evaluation
    /// split for simulation audits.
    #[serde(default = "default_split")]
    pub split_fraction: f64,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Audit settings for simulation tasks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit: Option<AuditConfig>,
}

impl RunConfig {
    /// Reads a config file; relative paths are taken from the file's directory.
    pub fn from_file(path: &Path) -> Result<Self, PipelineError> {
        let bytes = io::read_bytes(path).map_err(|e| PipelineError::config(e.to_string()))?;
        let mut config: RunConfig =
            serde_json::from_slice(&bytes).map_err(|e| PipelineError::config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.data.resolve(base);
        config.output_dir = base.join(&config.output_dir);
        Ok(config)
    }

    /// Checks everything that can be checked without reading data.
    pub fn validate(&self) -> Result<ModelSpec, PipelineError> {
        if lookup(self.task, &self.model).is_none() {
            let known: Vec<&str> = REGISTRY.iter().filter(|e| e.task == self.task).map(|e| e.model).collect();
            return Err(PipelineError::config(format!(
                "model `{}` is not registered for task {} (registered: {})",
                self.model,
                self.task,
                known.join(", ")
            )));
        }
        for key in self.task.data_keys() {
            if self.data.get(key).is_none() {
                return Err(PipelineError::config(format!("task {} needs data.{key}", self.task)));
            }
        }
        let uses_split = !matches!(self.task, TaskKind::TrialSearch | TaskKind::SiteSelectionEval);
        if uses_split && !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(PipelineError::config(format!(
                "split_fraction {} must lie strictly between 0 and 1",
                self.split_fraction
            )));
        }
        ModelSpec::parse(&self.model, &self.hyperparameters)
    }
}

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct LogRegHyper {
    learning_rate: f64,
    l2: f64,
    max_epochs: usize,
    tolerance: f64,
}

impl Default for LogRegHyper {
    fn default() -> Self {
        let c = LogRegConfig::default();
        Self { learning_rate: c.learning_rate, l2: c.l2, max_epochs: c.max_epochs, tolerance: c.tolerance }
    }
}

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct Bm25Hyper {
    k1: f64,
    b: f64,
    epsilon: f64,
    idf: IdfVariant,
    title_weight: u32,
}

impl Default for Bm25Hyper {
    fn default() -> Self {
        let p = Bm25Params::default();
        Self {
            k1: p.k1,
            b: p.b,
            epsilon: p.epsilon,
            idf: p.idf,
            title_weight: FieldWeights::default().weight(Section::Title),
        }
    }
}

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct CopulaHyper {
    calibrate_discrete: bool,
    n_samples: Option<usize>,
}

impl Default for CopulaHyper {
    fn default() -> Self {
        Self { calibrate_discrete: CopulaConfig::default().calibrate_discrete, n_samples: None }
    }
}

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SimulantsHyper {
    k: usize,
    swap_prob: f64,
}

impl Default for SimulantsHyper {
    fn default() -> Self {
        Self { k: DEFAULT_K, swap_prob: DEFAULT_SWAP_PROB }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NoHyper {}

/// A registered model with parsed hyperparameters.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelSpec {
    LogisticRegression(LogRegConfig),
    Bm25 { params: Bm25Params, weights: FieldWeights },
    GaussianCopula { config: CopulaConfig, n_samples: Option<usize> },
    Simulants { k: usize, swap_prob: f64 },
    UniformRandom,
    EnrollmentReport,
}

impl ModelSpec {
    pub fn parse(model: &str, hyper: &BTreeMap<String, serde_json::Value>) -> Result<Self, PipelineError> {
        let value = serde_json::Value::Object(hyper.clone().into_iter().collect());
        let bad = |e: serde_json::Error| PipelineError::config(format!("hyperparameters of `{model}`: {e}"));
        let check = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(PipelineError::config(format!("hyperparameters of `{model}`: {what}")))
            }
        };
        match model {
            "logistic_regression" => {
                let h: LogRegHyper = serde_json::from_value(value).map_err(bad)?;
                check(h.learning_rate > 0.0 && h.learning_rate.is_finite(), "learning_rate must be positive")?;
                check(h.l2 >= 0.0 && h.l2.is_finite(), "l2 must be nonnegative")?;
                check(h.tolerance >= 0.0, "tolerance must be nonnegative")?;
                Ok(ModelSpec::LogisticRegression(LogRegConfig {
                    learning_rate: h.learning_rate,
                    l2: h.l2,
                    max_epochs: h.max_epochs,
                    tolerance: h.tolerance,
                }))
            }
            "bm25" => {
                let h: Bm25Hyper = serde_json::from_value(value).map_err(bad)?;
                check(h.k1 >= 0.0 && h.k1.is_finite(), "k1 must be nonnegative")?;
                check((0.0..=1.0).contains(&h.b), "b must lie in [0, 1]")?;
                check(h.epsilon >= 0.0 && h.epsilon.is_finite(), "epsilon must be nonnegative")?;
                let mut weights = FieldWeights::default();
                weights.0.insert(Section::Title, h.title_weight);
                Ok(ModelSpec::Bm25 { params: Bm25Params { k1: h.k1, b: h.b, epsilon: h.epsilon, idf: h.idf }, weights })
            }
            "gaussian_copula" => {
                let h: CopulaHyper = serde_json::from_value(value).map_err(bad)?;
                Ok(ModelSpec::GaussianCopula {
                    config: CopulaConfig { calibrate_discrete: h.calibrate_discrete },
                    n_samples: h.n_samples,
                })
            }
            "simulants" => {
                let h: SimulantsHyper = serde_json::from_value(value).map_err(bad)?;
                check(h.k >= 1, "k must be at least 1")?;
                check((0.0..=1.0).contains(&h.swap_prob), "swap_prob must lie in [0, 1]")?;
                Ok(ModelSpec::Simulants { k: h.k, swap_prob: h.swap_prob })
            }
            "uniform_random" | "enrollment_report" => {
                let _: NoHyper = serde_json::from_value(value).map_err(bad)?;
                Ok(if model == "uniform_random" { ModelSpec::UniformRandom } else { ModelSpec::EnrollmentReport })
            }
            other => Err(PipelineError::config(format!("unknown model `{other}`"))),
        }
    }
}

// ---------------------------------------------------------------------------
// Reports

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetFingerprint {
    pub rows: usize,
    pub sha256: String,
}

/// SHA-256 of a single file, or of the concatenated per-file digests.
pub fn fingerprint(rows: usize, files: &[Vec<u8>]) -> DatasetFingerprint {
    let sha256 = match files {
        [one] => persist::sha256_hex(one),
        many => {
            let mut h = Sha256::new();
            for f in many {
                h.update(Sha256::digest(f));
            }
            hex::encode(h.finalize())
        }
    };
    DatasetFingerprint { rows, sha256 }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub task: TaskKind,
    pub model: String,
    pub metrics: BTreeMap<String, MetricValue>,
    pub dataset: DatasetFingerprint,
    pub seed: u64,
    pub version: String,
    /// Seconds spent in the run; the only field that varies between repeats.
    pub wall_clock: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub notes: BTreeMap<String, String>,
}

impl EvaluationReport {
    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("report serializes");
        out.push(b'\n');
        out
    }

    /// Report bytes with `wall_clock` zeroed, for determinism checks.
    pub fn canonical_json(&self) -> Vec<u8> {
        Self { wall_clock: 0.0, ..self.clone() }.to_json()
    }
}

/// Metric names each task can report. Threshold- and k-indexed audit
/// metrics carry an `@` suffix.
pub fn metric_names(task: TaskKind) -> &'static [&'static str] {
    match task {
        TaskKind::IndivOutcome | TaskKind::TrialOutcome => &["accuracy", "auroc", "pr_auc"],
        TaskKind::TrialSearch => &["prec@1", "prec@2", "prec@5", "rec@1", "rec@2", "rec@5", "ndcg@5"],
        TaskKind::TrialSimulationTabular | TaskKind::TrialSimulationSequence => &[
            "presence_sensitivity@",
            "attribute_sensitivity@",
            "nnaa",
            "dist_eval_synth",
            "dist_train_synth",
            "fidelity_r",
            "utility_auroc",
        ],
        TaskKind::SiteSelectionEval => &["relative_error", "entropy"],
    }
}

/// Flattens an audit report into report metrics.
pub fn audit_metrics(report: &AuditReport) -> BTreeMap<String, MetricValue> {
    let mut m = BTreeMap::new();
    for (t, s) in &report.presence {
        m.insert(format!("presence_sensitivity@{t}"), MetricValue::Defined(*s));
    }
    for (k, s) in &report.attribute {
        m.insert(format!("attribute_sensitivity@{k}"), *s);
    }
    m.insert("nnaa".into(), MetricValue::Defined(report.nnaa.nnaa));
    m.insert("dist_eval_synth".into(), MetricValue::Defined(report.nnaa.dist_eval_synth));
    m.insert("dist_train_synth".into(), MetricValue::Defined(report.nnaa.dist_train_synth));
    m.insert("fidelity_r".into(), report.fidelity.r);
    m.insert("utility_auroc".into(), report.utility.auroc);
    m
}

pub fn audit_report_json(report: &AuditReport, pairs_file: Option<&str>) -> Vec<u8> {
    #[derive(Serialize)]
    struct Fidelity<'a> {
        r: MetricValue,
        n_features: usize,
        #[serde(skip_serializing_if = "Option::is_none")]
        pairs: Option<&'a str>,
    }
    #[derive(Serialize)]
    struct File<'a> {
        presence: &'a BTreeMap<usize, f64>,
        attribute: &'a BTreeMap<usize, MetricValue>,
        nnaa: &'a trialml_core::audit::NnaaReport,
        fidelity: Fidelity<'a>,
        utility: &'a trialml_core::audit::UtilitySummary,
    }
    let file = File {
        presence: &report.presence,
        attribute: &report.attribute,
        nnaa: &report.nnaa,
        fidelity: Fidelity { r: report.fidelity.r, n_features: report.fidelity.n_features, pairs: pairs_file },
        utility: &report.utility,
    };
    let mut out = serde_json::to_vec_pretty(&file).expect("audit report serializes");
    out.push(b'\n');
    out
}

// ---------------------------------------------------------------------------
// Running

pub const REPORT_FILE: &str = "report.json";
pub const AUDIT_FILE: &str = "audit.json";
pub const PAIRS_FILE: &str = "fidelity_pairs.csv";
pub const MODEL_DIR: &str = "model";

/// A finished run: the report plus every file to write, relative to the
/// output directory (the report included).
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub report: EvaluationReport,
    pub outputs: Outputs,
}

struct Evaluated {
    metrics: BTreeMap<String, MetricValue>,
    dataset: DatasetFingerprint,
    notes: BTreeMap<String, String>,
    outputs: Outputs,
}

pub fn run_task(config: &RunConfig) -> Result<RunOutput, PipelineError> {
    let started = Instant::now();
    let spec = config.validate()?;
    let e = match config.task {
        TaskKind::IndivOutcome | TaskKind::TrialOutcome => run_outcome(config, &spec)?,
        TaskKind::TrialSearch => run_search(config, &spec)?,
        TaskKind::TrialSimulationTabular => run_simulation_tabular(config, &spec)?,
        TaskKind::TrialSimulationSequence => run_simulation_sequence(config, &spec)?,
        TaskKind::SiteSelectionEval => run_sites(config)?,
    };
    let report = EvaluationReport {
        task: config.task,
        model: config.model.clone(),
        metrics: e.metrics,
        dataset: e.dataset,
        seed: config.seed,
        version: TOOLKIT_VERSION.to_string(),
        wall_clock: started.elapsed().as_secs_f64(),
        notes: e.notes,
    };
    let mut outputs = e.outputs;
    outputs.add(REPORT_FILE, report.to_json());
    Ok(RunOutput { report, outputs })
}

/// [`run_task`], then writes its outputs; nothing is written on failure.
pub fn execute(config: &RunConfig) -> Result<(EvaluationReport, Vec<PathBuf>), PipelineError> {
    let run = run_task(config)?;
    let written = run.outputs.commit(&config.output_dir).map_err(|e| io_failure(Step::WriteOutputs, e))?;
    Ok((run.report, written))
}

fn data_path<'a>(config: &'a RunConfig, key: &str) -> &'a Path {
    config.data.get(key).expect("checked by validate")
}

/// A table plus the bytes that fingerprint it (CSV, then sidecar if any).
pub fn load_table_with_bytes(path: &Path) -> Result<(TabularDataset, Vec<Vec<u8>>), PipelineError> {
    let data = io::load_tabular(path, &TabularOptions::default()).map_err(|e| io_failure(Step::LoadData, e))?;
    let mut bytes = vec![io::read_bytes(path).map_err(|e| io_failure(Step::LoadData, e))?];
    let sidecar = io::sidecar_path(path);
    if sidecar.exists() {
        bytes.push(io::read_bytes(&sidecar).map_err(|e| io_failure(Step::LoadData, e))?);
    }
    Ok((data, bytes))
}

fn model_outputs(model: &SavedModel, hyper: &BTreeMap<String, serde_json::Value>) -> Outputs {
    let (_, files) = persist::model_files(model, hyper);
    let mut out = Outputs::default();
    for (name, bytes) in files {
        out.add(Path::new(MODEL_DIR).join(name), bytes);
    }
    out
}

fn split<D: Partition>(data: &D, fraction: f64, seed: u64) -> Result<(D, D), PipelineError> {
    stratified_split(data, fraction, seed).map_err(|e| match e {
        SplitError::InvalidFraction => PipelineError::config(e.to_string()),
        SplitError::ClassTooSmall { .. } => PipelineError::data(Step::LoadData, e),
    })
}

fn run_outcome(config: &RunConfig, spec: &ModelSpec) -> Result<Evaluated, PipelineError> {
    let ModelSpec::LogisticRegression(logreg) = *spec else {
        unreachable!("registry pairs outcome tasks with logistic regression")
    };
    let path = data_path(config, "table");
    let (data, bytes) = load_table_with_bytes(path)?;
    match &data.target {
        Some(t) if t.kind == TargetKind::Binary => {}
        _ => {
            return Err(PipelineError::data(
                Step::LoadData,
                format!("{}: task {} needs a binary target column", path.display(), config.task),
            ))
        }
    }
    let (train, test) = split(&data, config.split_fraction, config.seed)?;

    let encoder = TabularEncoder::fit(&train).map_err(|e| PipelineError::data(Step::DefineModel, e))?;
    let x_train = encoder.transform(&train).map_err(|e| PipelineError::data(Step::DefineModel, e))?;
    let x_test = encoder.transform(&test).map_err(|e| PipelineError::data(Step::DefineModel, e))?;
    let y_train = train.binary_labels().map_err(|e| PipelineError::data(Step::Train, e))?;
    let y_test = test.binary_labels().map_err(|e| PipelineError::data(Step::Evaluate, e))?;

    let model = fit_logistic_regression(&x_train, &y_train, logreg).map_err(|e| match e {
        BaselineError::SingleClass => PipelineError::data(Step::Train, "training labels contain a single class"),
        other => PipelineError::data(Step::Train, other),
    })?;
    let scores = predict_proba(&model, &x_test)
        .map_err(|e| PipelineError::new(Step::Evaluate, FailureKind::Internal, e.to_string()))?;
    let m = binary_classification_metrics(&scores, &y_test).map_err(|e| PipelineError::data(Step::Evaluate, e))?;

    let metrics = BTreeMap::from([
        ("accuracy".to_string(), MetricValue::Defined(m.accuracy)),
        ("auroc".to_string(), m.auroc),
        ("pr_auc".to_string(), m.pr_auc),
    ]);
    let saved = SavedModel::LogisticRegression(model.with_encoder(encoder));
    Ok(Evaluated {
        metrics,
        dataset: fingerprint(data.n_rows(), &bytes),
        notes: BTreeMap::from([("test_rows".to_string(), test.n_rows().to_string())]),
        outputs: model_outputs(&saved, &config.hyperparameters),
    })
}

pub fn search_metrics(r: &SearchReport) -> BTreeMap<String, MetricValue> {
    BTreeMap::from([
        ("prec@1".to_string(), r.prec_at_1),
        ("prec@2".to_string(), r.prec_at_2),
        ("prec@5".to_string(), r.prec_at_5),
        ("rec@1".to_string(), r.rec_at_1),
        ("rec@2".to_string(), r.rec_at_2),
        ("rec@5".to_string(), r.rec_at_5),
        ("ndcg@5".to_string(), r.ndcg_at_5),
    ])
}

pub fn search_notes(r: &SearchReport) -> BTreeMap<String, String> {
    BTreeMap::from([
        ("ranking_scope".to_string(), r.ranking_scope.clone()),
        ("undefined_queries".to_string(), r.n_undefined.to_string()),
    ])
}

fn run_search(config: &RunConfig, spec: &ModelSpec) -> Result<Evaluated, PipelineError> {
    let ModelSpec::Bm25 { params, weights } = spec else { unreachable!("registry pairs search with bm25") };
    let corpus_path = data_path(config, "corpus");
    let qrels_path = data_path(config, "qrels");
    let corpus = io::load_corpus(corpus_path).map_err(|e| io_failure(Step::LoadData, e))?;
    let qrels = io::load_qrels(qrels_path).map_err(|e| io_failure(Step::LoadData, e))?;
    let bytes = [corpus_path, qrels_path]
        .iter()
        .map(|p| io::read_bytes(p).map_err(|e| io_failure(Step::LoadData, e)))
        .collect::<Result<Vec<_>, _>>()?;
    let index = build_index(&corpus, weights, *params).map_err(|e| PipelineError::data(Step::Train, e))?;
    let report = evaluate_search(&index, &qrels).map_err(|e| PipelineError::data(Step::Evaluate, e))?;
    Ok(Evaluated {
        metrics: search_metrics(&report),
        dataset: fingerprint(qrels.len(), &bytes),
        notes: search_notes(&report),
        outputs: model_outputs(&SavedModel::Bm25(index), &config.hyperparameters),
    })
}

fn audit_outputs(report: &AuditReport, fidelity: &FidelityReport) -> Outputs {
    let mut out = Outputs::default();
    out.add(AUDIT_FILE, audit_report_json(report, Some(PAIRS_FILE)));
    out.add(PAIRS_FILE, io::fidelity_pairs_to_csv(&fidelity.pairs));
    out
}

fn audit_config(config: &RunConfig) -> AuditConfig {
    config.audit.clone().unwrap_or_default()
}

fn run_simulation_tabular(config: &RunConfig, spec: &ModelSpec) -> Result<Evaluated, PipelineError> {
    let ModelSpec::GaussianCopula { config: copula, n_samples } = *spec else {
        unreachable!("registry pairs tabular simulation with the copula")
    };
    let path = data_path(config, "table");
    let (data, bytes) = load_table_with_bytes(path)?;
    let (train, eval) = split(&data, config.split_fraction, config.seed)?;
    let model = fit_gaussian_copula_with(&train, copula).map_err(|e| PipelineError::data(Step::Train, e))?;
    let n = n_samples.unwrap_or(train.n_rows());
    let synthetic = sample_copula(&model, n, derive_seed(config.seed, "pipeline/sample"));
    let (report, fidelity) =
        audit_tabular(&train, &eval, &synthetic, &audit_config(config), derive_seed(config.seed, "pipeline/audit"))
            .map_err(|e| audit_failure(Step::Evaluate, e))?;

    let mut outputs = audit_outputs(&report, &fidelity);
    let (csv, schema) = io::tabular_files(&synthetic);
    outputs.add("synthetic.csv", csv);
    outputs.add("synthetic.csv.schema.json", schema);
    let mut all = model_outputs(&SavedModel::GaussianCopula(model), &config.hyperparameters);
    all.extend_under(Path::new(""), outputs);
    Ok(Evaluated {
        metrics: audit_metrics(&report),
        dataset: fingerprint(data.n_rows(), &bytes),
        notes: BTreeMap::new(),
        outputs: all,
    })
}

fn run_simulation_sequence(config: &RunConfig, spec: &ModelSpec) -> Result<Evaluated, PipelineError> {
    let path = data_path(config, "sequences");
    let data = io::load_sequential(path).map_err(|e| io_failure(Step::LoadData, e))?;
    let bytes = io::read_bytes(path).map_err(|e| io_failure(Step::LoadData, e))?;
    let (train, eval) = split(&data, config.split_fraction, config.seed)?;

    let (synthetic, mut outputs) = generate_sequential(&train, spec, config.seed, &config.hyperparameters)?;
    let (report, fidelity) =
        audit_sequential(&train, &eval, &synthetic, &audit_config(config), derive_seed(config.seed, "pipeline/audit"))
            .map_err(|e| audit_failure(Step::Evaluate, e))?;
    outputs.extend_under(Path::new(""), audit_outputs(&report, &fidelity));
    outputs.add("synthetic.jsonl", io::sequential_to_jsonl(&synthetic));
    Ok(Evaluated {
        metrics: audit_metrics(&report),
        dataset: fingerprint(data.n_records(), &[bytes]),
        notes: BTreeMap::new(),
        outputs,
    })
}

/// Runs a sequential generator; the Simulants plan is returned as model files.
pub fn generate_sequential(
    train: &SequentialDataset,
    spec: &ModelSpec,
    seed: u64,
    hyper: &BTreeMap<String, serde_json::Value>,
) -> Result<(SequentialDataset, Outputs), PipelineError> {
    match *spec {
        ModelSpec::Simulants { k, swap_prob } => {
            let plan = plan_simulants(train, k, swap_prob, derive_seed(seed, "pipeline/simulants"))
                .map_err(|e| PipelineError::data(Step::Train, e))?;
            let synthetic = simulants_generate(train, &plan).map_err(|e| PipelineError::data(Step::Train, e))?;
            Ok((synthetic, model_outputs(&SavedModel::Simulants(plan), hyper)))
        }
        ModelSpec::UniformRandom => {
            Ok((uniform_random_generate(train, derive_seed(seed, "pipeline/uniform")), Outputs::default()))
        }
        _ => unreachable!("registry pairs sequence simulation with simulants or uniform_random"),
    }
}

fn run_sites(config: &RunConfig) -> Result<Evaluated, PipelineError> {
    let path = data_path(config, "sites");
    let cases = io::load_sites(path).map_err(|e| io_failure(Step::LoadData, e))?;
    let bytes = io::read_bytes(path).map_err(|e| io_failure(Step::LoadData, e))?;
    if cases.is_empty() {
        return Err(PipelineError::data(Step::LoadData, format!("{}: no trials", path.display())));
    }
    let mut rel = 0.0;
    let mut ent = 0.0;
    for c in &cases {
        let m = site_selection_metrics(c.max_enrollment, c.model_enrollment, &c.groups)
            .map_err(|e| PipelineError::data(Step::Evaluate, format!("trial `{}`: {e}", c.trial_id)))?;
        rel += m.relative_error;
        ent += m.entropy;
    }
    let n = cases.len() as f64;
    Ok(Evaluated {
        metrics: BTreeMap::from([
            ("relative_error".to_string(), MetricValue::Defined(rel / n)),
            ("entropy".to_string(), MetricValue::Defined(ent / n)),
        ]),
        dataset: fingerprint(cases.len(), &[bytes]),
        notes: BTreeMap::new(),
        outputs: Outputs::default(),
    })
}
