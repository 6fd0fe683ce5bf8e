mod common;

use std::fs;

use trialml::pipeline::{
    execute, fingerprint, metric_names, run_task, FailureKind, RunConfig, Step, TaskKind, REGISTRY, REPORT_FILE,
};

#[test]
fn every_registry_pair_reports_its_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let files = common::write_demo_files(dir.path(), 3);
    for cfg in common::all_configs(&files, 3, &dir.path().join("out")) {
        let run = run_task(&cfg).unwrap_or_else(|e| panic!("{}/{}: {e}", cfg.task.as_str(), cfg.model));
        for name in metric_names(cfg.task) {
            let present = if name.ends_with('@') {
                run.report.metrics.keys().any(|k| k.starts_with(name))
            } else {
                run.report.metrics.contains_key(*name)
            };
            assert!(present, "{}/{} lacks {name}", cfg.task.as_str(), cfg.model);
        }
        assert_eq!(run.report.seed, 3);
        assert!(run.outputs.paths().any(|p| p == std::path::Path::new(REPORT_FILE)));
    }
    assert_eq!(REGISTRY.len(), 7);
}

#[test]
fn repeated_runs_are_identical_except_wall_clock() {
    let dir = tempfile::tempdir().unwrap();
    let files = common::write_demo_files(dir.path(), 8);
    for cfg in common::all_configs(&files, 8, &dir.path().join("out")) {
        let a = run_task(&cfg).unwrap();
        let b = run_task(&cfg).unwrap();
        assert_eq!(a.report.canonical_json(), b.report.canonical_json(), "{}", cfg.model);
    }
}

#[test]
fn different_seeds_change_simulation_results() {
    let dir = tempfile::tempdir().unwrap();
    let files = common::write_demo_files(dir.path(), 1);
    let out = dir.path().join("o");
    let a = run_task(&common::run_config(TaskKind::TrialSimulationSequence, "simulants", &files, 1, &out)).unwrap();
    let b = run_task(&common::run_config(TaskKind::TrialSimulationSequence, "simulants", &files, 2, &out)).unwrap();
    assert_ne!(a.report.canonical_json(), b.report.canonical_json());
}

#[test]
fn zero_swap_simulants_copy_the_training_split() {
    let dir = tempfile::tempdir().unwrap();
    let files = common::write_demo_files(dir.path(), 5);
    let mut v = common::config_json(TaskKind::TrialSimulationSequence, "simulants", &files, 5, &dir.path().join("o"));
    v["hyperparameters"] = serde_json::json!({ "swap_prob": 0.0 });
    let run = run_task(&serde_json::from_value(v).unwrap()).unwrap();
    let m = &run.report.metrics;
    assert_eq!(m["presence_sensitivity@0"].value(), Some(1.0));
    assert!((m["fidelity_r"].value().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn fingerprint_tracks_file_content() {
    let a = fingerprint(2, &[b"a,b\n1,2\n".to_vec()]);
    let b = fingerprint(2, &[b"a,b\n1,3\n".to_vec()]);
    let c = fingerprint(2, &[b"a,b\n1,2\n".to_vec(), b"{}".to_vec()]);
    assert_ne!(a.sha256, b.sha256);
    assert_ne!(a.sha256, c.sha256);
    assert_eq!(a, fingerprint(2, &[b"a,b\n1,2\n".to_vec()]));

    let dir = tempfile::tempdir().unwrap();
    let files = common::write_demo_files(dir.path(), 2);
    let cfg = common::run_config(TaskKind::IndivOutcome, "logistic_regression", &files, 2, &dir.path().join("o"));
    let before = run_task(&cfg).unwrap().report.dataset;
    let mut text = fs::read_to_string(&files.table).unwrap();
    text.push('\n');
    fs::write(&files.table, text).unwrap();
    let after = run_task(&cfg).unwrap().report.dataset;
    assert_eq!(before.rows, after.rows);
    assert_ne!(before.sha256, after.sha256);
}

fn expect_config_error(v: serde_json::Value) -> String {
    let err = match serde_json::from_value::<RunConfig>(v) {
        Err(e) => return e.to_string(),
        Ok(cfg) => run_task(&cfg).unwrap_err(),
    };
    assert_eq!(err.kind, FailureKind::Config, "{err}");
    assert_eq!(err.step, Step::Config);
    err.to_string()
}

#[test]
fn bad_configs_fail_before_reading_data() {
    let dir = tempfile::tempdir().unwrap();
    let files = common::write_demo_files(dir.path(), 2);
    let base = common::config_json(TaskKind::IndivOutcome, "logistic_regression", &files, 2, dir.path());

    let mut v = base.clone();
    v["model"] = "bm25".into();
    assert!(expect_config_error(v).contains("not registered"));

    let mut v = base.clone();
    v["hyperparameters"] = serde_json::json!({ "learning_rte": 0.1 });
    assert!(expect_config_error(v).contains("learning_rte"));

    let mut v = base.clone();
    v["hyperparameters"] = serde_json::json!({ "learning_rate": -1.0 });
    assert!(expect_config_error(v).contains("learning_rate"));

    let mut v = base.clone();
    v["split_fraction"] = 1.5.into();
    assert!(expect_config_error(v).contains("split_fraction"));

    let mut v = base.clone();
    v["data"] = serde_json::json!({ "sequences": files.sequences });
    assert!(expect_config_error(v).contains("data.table"));

    let mut v = base;
    v["colour"] = "blue".into();
    assert!(expect_config_error(v).contains("colour"));
}

#[test]
fn failed_run_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let files = common::write_demo_files(dir.path(), 2);
    fs::write(&files.table, "a,b,label\n1,2,0\n3\n").unwrap();
    fs::remove_file(trialml::io::sidecar_path(&files.table)).unwrap();
    let out = dir.path().join("never");
    let cfg = common::run_config(TaskKind::IndivOutcome, "logistic_regression", &files, 2, &out);
    let err = execute(&cfg).unwrap_err();
    assert_eq!(err.kind, FailureKind::Data);
    assert_eq!(err.exit_code(), 2);
    assert!(!out.exists());
}

#[test]
fn execute_writes_every_promised_file() {
    let dir = tempfile::tempdir().unwrap();
    let files = common::write_demo_files(dir.path(), 4);
    for cfg in common::all_configs(&files, 4, &dir.path().join("out")) {
        let (report, written) = execute(&cfg).unwrap();
        for p in &written {
            let bytes = fs::read(p).unwrap();
            let name = p.file_name().unwrap().to_string_lossy();
            if name.ends_with(".json") {
                serde_json::from_slice::<serde_json::Value>(&bytes).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            }
        }
        let back: trialml::pipeline::EvaluationReport =
            serde_json::from_slice(&fs::read(cfg.output_dir.join(REPORT_FILE)).unwrap()).unwrap();
        assert_eq!(back, report);
    }
}

#[test]
fn config_paths_resolve_against_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    common::write_demo_files(dir.path(), 2);
    let cfg_path = dir.path().join("run.json");
    fs::write(
        &cfg_path,
        r#"{"task":"site_selection_eval","model":"enrollment_report","data":{"sites":"sites.csv"},"seed":1,"output_dir":"out"}"#,
    )
    .unwrap();
    let cfg = RunConfig::from_file(&cfg_path).unwrap();
    assert_eq!(cfg.output_dir, dir.path().join("out"));
    execute(&cfg).unwrap();
    assert!(dir.path().join("out").join(REPORT_FILE).exists());
}
