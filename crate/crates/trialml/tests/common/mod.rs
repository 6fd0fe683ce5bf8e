#![allow(dead_code)]

use std::path::{Path, PathBuf};

use trialml::io;
use trialml::pipeline::{RunConfig, TaskKind, REGISTRY};
use trialml_core::demo_data::{
    generate_demo_search, generate_demo_sequential, generate_demo_sites, generate_demo_tabular, SearchDemoSpec,
    SequentialDemoSpec, TabularDemoSpec,
};

/// Small demo inputs for every task kind under one directory.
pub struct DemoFiles {
    pub table: PathBuf,
    pub sequences: PathBuf,
    pub corpus: PathBuf,
    pub qrels: PathBuf,
    pub sites: PathBuf,
}

pub fn write_demo_files(dir: &Path, seed: u64) -> DemoFiles {
    let mut tab = TabularDemoSpec::preset("nct00041119", seed).unwrap();
    tab.n_rows = 600;
    let table = dir.join("table.csv");
    io::write_tabular(&table, &generate_demo_tabular(&tab).unwrap()).unwrap();

    let mut seq = SequentialDemoSpec::preset("nct01439568", seed).unwrap();
    seq.n_patients = 120;
    let sequences = dir.join("sequences.jsonl");
    io::write_sequential(&sequences, &generate_demo_sequential(&seq).unwrap()).unwrap();

    let (corpus, qrels) = generate_demo_search(&SearchDemoSpec { n_queries: 12, seed, ..Default::default() }).unwrap();
    let corpus_path = dir.join("corpus.jsonl");
    let qrels_path = dir.join("qrels.jsonl");
    std::fs::write(&corpus_path, io::corpus_to_jsonl(&corpus)).unwrap();
    std::fs::write(&qrels_path, io::qrels_to_jsonl(&qrels)).unwrap();

    let sites = dir.join("sites.csv");
    std::fs::write(&sites, io::sites_to_csv(&generate_demo_sites(15, seed))).unwrap();

    DemoFiles { table, sequences, corpus: corpus_path, qrels: qrels_path, sites }
}

/// Config JSON for one registry pair over the demo files.
pub fn config_json(task: TaskKind, model: &str, files: &DemoFiles, seed: u64, output_dir: &Path) -> serde_json::Value {
    let data = match task {
        TaskKind::IndivOutcome | TaskKind::TrialOutcome | TaskKind::TrialSimulationTabular => {
            serde_json::json!({ "table": files.table })
        }
        TaskKind::TrialSearch => {
            serde_json::json!({ "corpus": files.corpus, "qrels": files.qrels })
        }
        TaskKind::TrialSimulationSequence => serde_json::json!({ "sequences": files.sequences }),
        TaskKind::SiteSelectionEval => serde_json::json!({ "sites": files.sites }),
    };
    let mut cfg = serde_json::json!({
        "task": task, "model": model, "data": data, "seed": seed, "output_dir": output_dir,
    });
    if task == TaskKind::TrialSimulationTabular {
        cfg["hyperparameters"] = serde_json::json!({ "n_samples": 300 });
    }
    if task == TaskKind::TrialSimulationSequence {
        cfg["audit"] = serde_json::json!({ "nnaa_max": 200, "attribute_queries": 30 });
    }
    cfg
}

pub fn run_config(task: TaskKind, model: &str, files: &DemoFiles, seed: u64, output_dir: &Path) -> RunConfig {
    serde_json::from_value(config_json(task, model, files, seed, output_dir)).unwrap()
}

/// Every registry pair as a ready config.
pub fn all_configs(files: &DemoFiles, seed: u64, out_root: &Path) -> Vec<RunConfig> {
    REGISTRY
        .iter()
        .map(|e| run_config(e.task, e.model, files, seed, &out_root.join(format!("{}-{}", e.task.as_str(), e.model))))
        .collect()
}

/// Runs the CLI in-process, returning (exit code, stdout, stderr).
pub fn cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("trialml").chain(args.iter().copied());
    let code = trialml::cli::run_cli(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

/// All files below `dir`, relative, sorted.
pub fn tree(dir: &Path) -> Vec<String> {
    fn walk(base: &Path, dir: &Path, out: &mut Vec<String>) {
        let Ok(entries) = std::fs::read_dir(dir) else {
            return;
        };
        for e in entries {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(base, &p, out);
            } else {
                out.push(p.strip_prefix(base).unwrap().to_string_lossy().into_owned());
            }
        }
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out.sort();
    out
}
