//! Command-line surface. Every command prints exactly one status line on
//! standard output, writes its files only on success and exits with 0
//! (success), 2 (data failure), 3 (configuration error) or 4 (internal).

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use trialml_core::audit::{audit_sequential, audit_tabular, AuditConfig};
use trialml_core::data_model::{Validate, ValidationReport};
use trialml_core::demo_data::{
    generate_demo_search, generate_demo_sequential, generate_demo_sites, generate_demo_tabular, SearchDemoSpec,
    SequentialDemoSpec, TabularDemoSpec,
};
use trialml_core::search::{build_index, evaluate_search, IdfVariant};
use trialml_core::simulation::{fit_gaussian_copula_with, sample_copula, CopulaConfig};

use crate::io::{self, TabularOptions};
use crate::outputs::Outputs;
use crate::persist::{self, SavedModel};
use crate::pipeline::{
    self, audit_metrics, generate_sequential, io_failure, EvaluationReport, FailureKind, ModelSpec, PipelineError,
    RunConfig, Step,
};

#[derive(Parser, Debug)]
#[command(name = "trialml", version, about = "Clinical-trial ML evaluation toolkit")]
pub struct Cli {
    /// Worker threads for parallel inner loops (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a demo dataset from published summary statistics.
    DemoGen(DemoGenArgs),
    /// Check a dataset file against its invariants.
    Validate(ValidateArgs),
    /// Run a task from a config file and write its report.
    Run(RunArgs),
    /// Fit a generator on real data and write a synthetic dataset.
    Simulate(SimulateArgs),
    /// Audit synthetic data for privacy, fidelity and utility.
    Audit(AuditArgs),
    /// Build a BM25 index over a trial corpus and save it.
    SearchBuild(SearchBuildArgs),
    /// Score a saved index against relevance judgments.
    SearchEval(SearchEvalArgs),
    /// Merge evaluation reports into one CSV table.
    Report(ReportArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DemoKind {
    Tabular,
    Sequential,
    Search,
    Sites,
}

#[derive(Args, Debug)]
pub struct DemoGenArgs {
    #[arg(long, value_enum)]
    pub kind: DemoKind,
    /// Named preset, e.g. nct00041119 (tabular) or nct00174655 (sequential).
    #[arg(long, conflicts_with = "spec")]
    pub preset: Option<String>,
    /// JSON file holding a full generator spec.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Tabular rows.
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub categorical: Option<usize>,
    #[arg(long)]
    pub binary: Option<usize>,
    #[arg(long)]
    pub numerical: Option<usize>,
    #[arg(long)]
    pub positive_ratio: Option<f64>,
    /// Scale of the planted label signal.
    #[arg(long)]
    pub signal: Option<f64>,
    /// Sequential patients.
    #[arg(long)]
    pub patients: Option<usize>,
    #[arg(long)]
    pub max_visits: Option<usize>,
    /// Search queries.
    #[arg(long)]
    pub queries: Option<usize>,
    /// Site-selection trials.
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FileKind {
    Tabular,
    Sequential,
    Corpus,
    Qrels,
    Sites,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// File kind; guessed from the extension and first line when omitted.
    #[arg(long, value_enum)]
    pub kind: Option<FileKind>,
    /// Reject categorical values outside the declared categories.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Generator {
    GaussianCopula,
    Simulants,
    UniformRandom,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Real data: a CSV table for the copula, a sequential file otherwise.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub generator: Generator,
    /// Synthetic dataset path.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: u64,
    /// Copula sample size (default: input rows).
    #[arg(long)]
    pub n: Option<usize>,
    /// Use the plain normal-score correlation for discrete columns.
    #[arg(long)]
    pub no_calibrate: bool,
    /// Simulants neighbor count.
    #[arg(long)]
    pub k: Option<usize>,
    /// Simulants per-slot swap probability.
    #[arg(long)]
    pub swap_prob: Option<f64>,
    /// Also save the fitted generator here.
    #[arg(long)]
    pub model_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AuditArgs {
    /// Real training data the synthetic data was generated from.
    #[arg(long)]
    pub real: PathBuf,
    /// Held-out real data.
    #[arg(long)]
    pub eval: PathBuf,
    #[arg(long)]
    pub synthetic: PathBuf,
    /// Audit report path.
    #[arg(long)]
    pub report: PathBuf,
    /// Fidelity scatter CSV path.
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    /// JSON file with audit settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum IdfArg {
    PlusOne,
    Floored,
}

#[derive(Args, Debug)]
pub struct SearchBuildArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Index directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub k1: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, value_enum)]
    pub idf: Option<IdfArg>,
    /// Repeat count of title tokens.
    #[arg(long)]
    pub title_weight: Option<u32>,
}

#[derive(Args, Debug)]
pub struct SearchEvalArgs {
    /// Index directory written by search-build.
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long)]
    pub qrels: PathBuf,
    #[arg(long)]
    pub report: PathBuf,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Evaluation report files.
    #[arg(long, num_args = 1.., required = true)]
    pub inputs: Vec<PathBuf>,
    /// CSV table path.
    #[arg(long)]
    pub out: PathBuf,
}

/// Status line and files of a successful command.
struct Done {
    status: String,
    outputs: Outputs,
}

type CmdResult = Result<Done, PipelineError>;

/// Parses `args` (program name first) and runs the command.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{rendered}");
                0
            } else {
                let _ = write!(stderr, "{rendered}");
                3
            };
        }
    };
    let result = match cli.threads {
        Some(0) => Err(PipelineError::config("--threads must be at least 1")),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(cli.command)),
            Err(e) => Err(PipelineError::new(Step::Config, FailureKind::Internal, e.to_string())),
        },
        None => dispatch(cli.command),
    };
    let result = result.and_then(|done| {
        done.outputs.commit(Path::new("")).map_err(|e| io_failure(Step::WriteOutputs, e))?;
        Ok(done.status)
    });
    match result {
        Ok(status) => {
            let _ = writeln!(stdout, "{status}");
            0
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            let _ = writeln!(stdout, "failed ({}): {}", e.step, first_line(&e.message));
            e.exit_code()
        }
    }
}

fn first_line(s: &str) -> &str {
    s.lines().next().unwrap_or("")
}

fn dispatch(command: Command) -> CmdResult {
    match command {
        Command::DemoGen(a) => demo_gen(a),
        Command::Validate(a) => validate(a),
        Command::Run(a) => run(a),
        Command::Simulate(a) => simulate(a),
        Command::Audit(a) => audit(a),
        Command::SearchBuild(a) => search_build(a),
        Command::SearchEval(a) => search_eval(a),
        Command::Report(a) => report(a),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, PipelineError> {
    let bytes = io::read_bytes(path).map_err(|e| PipelineError::config(e.to_string()))?;
    serde_json::from_slice(&bytes).map_err(|e| PipelineError::config(format!("{}: {e}", path.display())))
}

fn demo_error(e: impl std::fmt::Display) -> PipelineError {
    PipelineError::config(format!("demo spec: {e}"))
}

fn demo_gen(a: DemoGenArgs) -> CmdResult {
    let mut outputs = Outputs::default();
    let name = a.preset.clone().map(|p| p.to_ascii_lowercase()).unwrap_or_else(|| "demo".to_string());
    let unknown_preset =
        |kind: &str| PipelineError::config(format!("unknown {kind} preset `{}`", a.preset.as_deref().unwrap_or("")));
    let status = match a.kind {
        DemoKind::Tabular => {
            let mut spec = match (&a.preset, &a.spec) {
                (Some(p), _) => TabularDemoSpec::preset(p, a.seed).ok_or_else(|| unknown_preset("tabular"))?,
                (None, Some(f)) => read_json(f)?,
                (None, None) => TabularDemoSpec {
                    n_rows: 1000,
                    n_categorical: 2,
                    n_binary: 4,
                    n_numerical: 2,
                    positive_ratio: 0.3,
                    signal_strength: 1.0,
                    seed: a.seed,
                },
            };
            spec.seed = a.seed;
            spec.n_rows = a.rows.unwrap_or(spec.n_rows);
            spec.n_categorical = a.categorical.unwrap_or(spec.n_categorical);
            spec.n_binary = a.binary.unwrap_or(spec.n_binary);
            spec.n_numerical = a.numerical.unwrap_or(spec.n_numerical);
            spec.positive_ratio = a.positive_ratio.unwrap_or(spec.positive_ratio);
            spec.signal_strength = a.signal.unwrap_or(spec.signal_strength);
            let data = generate_demo_tabular(&spec).map_err(demo_error)?;
            let path = a.out.join(format!("{name}.csv"));
            let (csv, schema) = io::tabular_files(&data);
            outputs.add(&path, csv);
            outputs.add(io::sidecar_path(&path), schema);
            format!(
                "wrote {} ({} rows, positive ratio {:.4})",
                path.display(),
                data.n_rows(),
                data.positive_ratio().unwrap_or(f64::NAN)
            )
        }
        DemoKind::Sequential => {
            let mut spec = match (&a.preset, &a.spec) {
                (Some(p), _) => SequentialDemoSpec::preset(p, a.seed).ok_or_else(|| unknown_preset("sequential"))?,
                (None, Some(f)) => read_json(f)?,
                (None, None) => SequentialDemoSpec::preset("nct00174655", a.seed).expect("built-in preset"),
            };
            spec.seed = a.seed;
            spec.n_patients = a.patients.unwrap_or(spec.n_patients);
            if let Some(m) = a.max_visits {
                spec.max_visits = m;
                spec.mean_visits = spec.mean_visits.map(|v| v.min(m as f64));
            }
            spec.positive_ratio = a.positive_ratio.unwrap_or(spec.positive_ratio);
            let data = generate_demo_sequential(&spec).map_err(demo_error)?;
            let path = a.out.join(format!("{name}.jsonl"));
            outputs.add(&path, io::sequential_to_jsonl(&data));
            format!("wrote {} ({} patients, {} visits)", path.display(), data.n_records(), data.total_visits())
        }
        DemoKind::Search => {
            let mut spec: SearchDemoSpec = match &a.spec {
                Some(f) => read_json(f)?,
                None => SearchDemoSpec::default(),
            };
            spec.seed = a.seed;
            spec.n_queries = a.queries.unwrap_or(spec.n_queries);
            let (corpus, qrels) = generate_demo_search(&spec).map_err(demo_error)?;
            outputs.add(a.out.join("corpus.jsonl"), io::corpus_to_jsonl(&corpus));
            outputs.add(a.out.join("qrels.jsonl"), io::qrels_to_jsonl(&qrels));
            format!("wrote {} ({} documents, {} queries)", a.out.display(), corpus.documents.len(), qrels.len())
        }
        DemoKind::Sites => {
            let n = a.trials.unwrap_or(20);
            let cases = generate_demo_sites(n, a.seed);
            let path = a.out.join("sites.csv");
            outputs.add(&path, io::sites_to_csv(&cases));
            format!("wrote {} ({} trials)", path.display(), cases.len())
        }
    };
    Ok(Done { status, outputs })
}

/// Guesses a file kind from its extension and, for JSON lines, the keys of
/// the first line.
fn sniff_kind(path: &Path) -> Result<FileKind, PipelineError> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    if ext == "csv" {
        let bytes = io::read_bytes(path).map_err(|e| io_failure(Step::LoadData, e))?;
        let first = bytes.split(|&b| b == b'\n').next().unwrap_or(&[]);
        return Ok(if first.starts_with(b"trial_id,max_enrollment") { FileKind::Sites } else { FileKind::Tabular });
    }
    let bytes = io::read_bytes(path).map_err(|e| io_failure(Step::LoadData, e))?;
    let text = String::from_utf8_lossy(&bytes);
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    let keys: BTreeSet<String> = serde_json::from_str::<BTreeMap<String, serde_json::Value>>(first)
        .map(|m| m.into_keys().collect())
        .unwrap_or_default();
    if keys.contains("voc") {
        Ok(FileKind::Sequential)
    } else if keys.contains("nct_id") {
        Ok(FileKind::Corpus)
    } else if keys.contains("query_id") {
        Ok(FileKind::Qrels)
    } else {
        Err(PipelineError::config(format!("{}: cannot tell the file kind; pass --kind", path.display())))
    }
}

fn validate(a: ValidateArgs) -> CmdResult {
    let kind = match a.kind {
        Some(k) => k,
        None => sniff_kind(&a.input)?,
    };
    let load = |e| io_failure(Step::LoadData, e);
    let (rows, report): (usize, ValidationReport) = match kind {
        FileKind::Tabular => {
            let d = io::parse_tabular(&a.input, &TabularOptions { schema: None, strict: a.strict }).map_err(load)?;
            (d.n_rows(), d.validate())
        }
        FileKind::Sequential => {
            let d = io::parse_sequential(&a.input).map_err(load)?;
            (d.n_records(), d.validate())
        }
        FileKind::Corpus => {
            let d = io::parse_corpus(&a.input).map_err(load)?;
            (d.documents.len(), d.validate())
        }
        FileKind::Qrels => {
            let d = io::parse_qrels(&a.input).map_err(load)?;
            (d.len(), d.validate())
        }
        FileKind::Sites => (io::load_sites(&a.input).map_err(load)?.len(), ValidationReport::default()),
    };
    if !report.is_empty() {
        let listed: Vec<String> = report.violations.iter().take(20).map(ToString::to_string).collect();
        let more = report.len().saturating_sub(listed.len());
        let mut message = format!("{}: {} violation(s)\n  {}", a.input.display(), report.len(), listed.join("\n  "));
        if more > 0 {
            message.push_str(&format!("\n  ... and {more} more"));
        }
        return Err(PipelineError::new(Step::LoadData, FailureKind::Data, message));
    }
    Ok(Done { status: format!("valid: {} ({rows} records)", a.input.display()), outputs: Outputs::default() })
}

fn run(a: RunArgs) -> CmdResult {
    let mut config = RunConfig::from_file(&a.config)?;
    if let Some(s) = a.seed {
        config.seed = s;
    }
    if let Some(d) = a.output_dir {
        config.output_dir = d;
    }
    let run = pipeline::run_task(&config)?;
    let mut outputs = Outputs::default();
    outputs.extend_under(&config.output_dir, run.outputs);
    let headline: Vec<String> = run
        .report
        .metrics
        .iter()
        .take(3)
        .map(|(k, v)| match v.value() {
            Some(x) => format!("{k}={x:.4}"),
            None => format!("{k}=undefined"),
        })
        .collect();
    let status = format!(
        "ok {}/{} -> {} ({})",
        config.task,
        config.model,
        config.output_dir.join(pipeline::REPORT_FILE).display(),
        headline.join(", ")
    );
    Ok(Done { status, outputs })
}

fn hyper_map(pairs: &[(&str, Option<serde_json::Value>)]) -> BTreeMap<String, serde_json::Value> {
    pairs.iter().filter_map(|(k, v)| v.clone().map(|v| (k.to_string(), v))).collect()
}

fn is_table(path: &Path) -> bool {
    path.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn simulate(a: SimulateArgs) -> CmdResult {
    let load = |e| io_failure(Step::LoadData, e);
    let mut outputs = Outputs::default();
    let status = match a.generator {
        Generator::GaussianCopula => {
            if !is_table(&a.input) || !is_table(&a.out) {
                return Err(PipelineError::config("gaussian_copula reads and writes CSV tables"));
            }
            let hyper = hyper_map(&[
                ("calibrate_discrete", Some(serde_json::json!(!a.no_calibrate))),
                ("n_samples", a.n.map(|n| serde_json::json!(n))),
            ]);
            let data = io::load_tabular(&a.input, &TabularOptions::default()).map_err(load)?;
            let config = CopulaConfig { calibrate_discrete: !a.no_calibrate };
            let model = fit_gaussian_copula_with(&data, config).map_err(|e| PipelineError::data(Step::Train, e))?;
            let n = a.n.unwrap_or(data.n_rows());
            let synthetic = sample_copula(&model, n, trialml_core::rng::derive_seed(a.seed, "pipeline/sample"));
            let (csv, schema) = io::tabular_files(&synthetic);
            outputs.add(&a.out, csv);
            outputs.add(io::sidecar_path(&a.out), schema);
            if let Some(dir) = &a.model_dir {
                let (_, files) = persist::model_files(&SavedModel::GaussianCopula(model), &hyper);
                for (name, bytes) in files {
                    outputs.add(dir.join(name), bytes);
                }
            }
            format!("wrote {} ({n} synthetic rows)", a.out.display())
        }
        Generator::Simulants | Generator::UniformRandom => {
            if is_table(&a.input) {
                return Err(PipelineError::config("sequential generators read sequential files"));
            }
            let (model, hyper) = if a.generator == Generator::Simulants {
                (
                    "simulants",
                    hyper_map(&[
                        ("k", a.k.map(|k| serde_json::json!(k))),
                        ("swap_prob", a.swap_prob.map(|p| serde_json::json!(p))),
                    ]),
                )
            } else {
                if a.k.is_some() || a.swap_prob.is_some() {
                    return Err(PipelineError::config("--k and --swap-prob apply to simulants only"));
                }
                ("uniform_random", BTreeMap::new())
            };
            let spec = ModelSpec::parse(model, &hyper)?;
            let data = io::load_sequential(&a.input).map_err(load)?;
            let (synthetic, model_files) = generate_sequential(&data, &spec, a.seed, &hyper)?;
            outputs.add(&a.out, io::sequential_to_jsonl(&synthetic));
            if let Some(dir) = &a.model_dir {
                outputs.extend_under(dir, model_files);
            }
            format!("wrote {} ({} synthetic patients)", a.out.display(), synthetic.n_records())
        }
    };
    Ok(Done { status, outputs })
}

fn audit(a: AuditArgs) -> CmdResult {
    let config: AuditConfig = match &a.config {
        Some(p) => read_json(p)?,
        None => AuditConfig::default(),
    };
    let tables = [&a.real, &a.eval, &a.synthetic].map(|p| is_table(p));
    if tables.iter().any(|&t| t != tables[0]) {
        return Err(PipelineError::config("--real, --eval and --synthetic must all be tables or all sequential files"));
    }
    let load = |e| io_failure(Step::LoadData, e);
    let seed = trialml_core::rng::derive_seed(a.seed, "pipeline/audit");
    let (report, fidelity) = if tables[0] {
        let opts = TabularOptions::default();
        let real = io::load_tabular(&a.real, &opts).map_err(load)?;
        let eval = io::load_tabular(&a.eval, &opts).map_err(load)?;
        let synthetic = io::load_tabular(&a.synthetic, &opts).map_err(load)?;
        audit_tabular(&real, &eval, &synthetic, &config, seed)
    } else {
        let real = io::load_sequential(&a.real).map_err(load)?;
        let eval = io::load_sequential(&a.eval).map_err(load)?;
        let synthetic = io::load_sequential(&a.synthetic).map_err(load)?;
        audit_sequential(&real, &eval, &synthetic, &config, seed)
    }
    .map_err(|e| PipelineError::data(Step::Evaluate, e))?;

    let mut outputs = Outputs::default();
    let pairs_name = a.pairs.as_ref().map(|p| p.display().to_string());
    outputs.add(&a.report, pipeline::audit_report_json(&report, pairs_name.as_deref()));
    if let Some(p) = &a.pairs {
        outputs.add(p, io::fidelity_pairs_to_csv(&fidelity.pairs));
    }
    let m = audit_metrics(&report);
    let show = |k: &str| m.get(k).and_then(|v| v.value()).map_or("undefined".to_string(), |x| format!("{x:.4}"));
    let status = format!(
        "audited {} -> {} (nnaa={}, fidelity_r={}, utility_auroc={})",
        a.synthetic.display(),
        a.report.display(),
        show("nnaa"),
        show("fidelity_r"),
        show("utility_auroc")
    );
    Ok(Done { status, outputs })
}

fn search_build(a: SearchBuildArgs) -> CmdResult {
    let idf = a.idf.map(|i| match i {
        IdfArg::PlusOne => serde_json::to_value(IdfVariant::PlusOne).expect("enum serializes"),
        IdfArg::Floored => serde_json::to_value(IdfVariant::Floored).expect("enum serializes"),
    });
    let hyper = hyper_map(&[
        ("k1", a.k1.map(|v| serde_json::json!(v))),
        ("b", a.b.map(|v| serde_json::json!(v))),
        ("epsilon", a.epsilon.map(|v| serde_json::json!(v))),
        ("idf", idf),
        ("title_weight", a.title_weight.map(|v| serde_json::json!(v))),
    ]);
    let ModelSpec::Bm25 { params, weights } = ModelSpec::parse("bm25", &hyper)? else {
        unreachable!("bm25 parses to Bm25")
    };
    let corpus = io::load_corpus(&a.corpus).map_err(|e| io_failure(Step::LoadData, e))?;
    let index = build_index(&corpus, &weights, params).map_err(|e| PipelineError::data(Step::Train, e))?;
    let n_terms = index.postings.len();
    let (_, files) = persist::model_files(&SavedModel::Bm25(index), &hyper);
    let mut outputs = Outputs::default();
    for (name, bytes) in files {
        outputs.add(a.out.join(name), bytes);
    }
    Ok(Done {
        status: format!("indexed {} documents, {n_terms} terms -> {}", corpus.documents.len(), a.out.display()),
        outputs,
    })
}

fn search_eval(a: SearchEvalArgs) -> CmdResult {
    let (_, model) = persist::load_model(&a.index).map_err(|e| {
        let kind = if e.is_not_found() { FailureKind::Config } else { FailureKind::Data };
        PipelineError::new(Step::DefineModel, kind, e.to_string())
    })?;
    let SavedModel::Bm25(index) = model else {
        return Err(PipelineError::config(format!("{} does not hold a bm25 index", a.index.display())));
    };
    let qrels = io::load_qrels(&a.qrels).map_err(|e| io_failure(Step::LoadData, e))?;
    let report = evaluate_search(&index, &qrels).map_err(|e| PipelineError::data(Step::Evaluate, e))?;
    let mut bytes = serde_json::to_vec_pretty(&report).expect("search report serializes");
    bytes.push(b'\n');
    let mut outputs = Outputs::default();
    outputs.add(&a.report, bytes);
    let fmt = |v: trialml_core::MetricValue| v.value().map_or("undefined".to_string(), |x| format!("{x:.4}"));
    Ok(Done {
        status: format!(
            "evaluated {} queries -> {} (prec@1={}, ndcg@5={})",
            report.n_queries,
            a.report.display(),
            fmt(report.prec_at_1),
            fmt(report.ndcg_at_5)
        ),
        outputs,
    })
}

/// One CSV row per report: identity columns, then the union of metric names.
pub fn reports_to_csv(reports: &[(PathBuf, EvaluationReport)]) -> Vec<u8> {
    let names: BTreeSet<&str> = reports.iter().flat_map(|(_, r)| r.metrics.keys().map(String::as_str)).collect();
    let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let mut header = vec!["file", "task", "model", "seed", "rows", "sha256"];
    header.extend(names.iter().copied());
    writer.write_record(&header).expect("in-memory write");
    for (path, r) in reports {
        let mut row = vec![
            path.display().to_string(),
            r.task.to_string(),
            r.model.clone(),
            r.seed.to_string(),
            r.dataset.rows.to_string(),
            r.dataset.sha256.clone(),
        ];
        row.extend(
            names.iter().map(|n| r.metrics.get(*n).and_then(|v| v.value()).map_or(String::new(), |x| x.to_string())),
        );
        writer.write_record(&row).expect("in-memory write");
    }
    writer.into_inner().expect("in-memory flush")
}

fn report(a: ReportArgs) -> CmdResult {
    let mut reports = Vec::with_capacity(a.inputs.len());
    for p in &a.inputs {
        let bytes = io::read_bytes(p).map_err(|e| io_failure(Step::LoadData, e))?;
        let r: EvaluationReport = serde_json::from_slice(&bytes)
            .map_err(|e| PipelineError::data(Step::LoadData, format!("{}: {e}", p.display())))?;
        reports.push((p.clone(), r));
    }
    let mut outputs = Outputs::default();
    outputs.add(&a.out, reports_to_csv(&reports));
    Ok(Done { status: format!("merged {} report(s) -> {}", reports.len(), a.out.display()), outputs })
}
