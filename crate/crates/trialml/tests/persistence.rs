use std::collections::BTreeMap;
use std::fs;

use trialml::persist::{load_manifest, load_model, model_files, save_model, PersistError, SavedModel, MANIFEST};
use trialml_core::baselines::{fit_logistic_regression, predict_proba, LogRegConfig};
use trialml_core::data_model::{stratified_split, TabularEncoder};
use trialml_core::demo_data::{generate_demo_tabular, TabularDemoSpec};
use trialml_core::simulation::{fit_gaussian_copula, sample_copula};

fn fitted() -> (SavedModel, SavedModel, trialml_core::data_model::FeatureMatrix) {
    let data = generate_demo_tabular(&TabularDemoSpec::preset("nct00079274", 6).unwrap()).unwrap();
    let (train, test) = stratified_split(&data, 0.25, 6).unwrap();
    let enc = TabularEncoder::fit(&train).unwrap();
    let x = enc.transform(&train).unwrap();
    let lr = fit_logistic_regression(&x, &train.binary_labels().unwrap(), LogRegConfig::default()).unwrap();
    let xt = enc.transform(&test).unwrap();
    (
        SavedModel::LogisticRegression(lr.with_encoder(enc)),
        SavedModel::GaussianCopula(fit_gaussian_copula(&train).unwrap()),
        xt,
    )
}

fn hyper() -> BTreeMap<String, serde_json::Value> {
    BTreeMap::from([("learning_rate".to_string(), serde_json::json!(0.1))])
}

#[test]
fn predictions_and_samples_survive_a_round_trip_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let (lr, cop, xt) = fitted();
    save_model(&lr, &hyper(), &dir.path().join("lr")).unwrap();
    save_model(&cop, &hyper(), &dir.path().join("cop")).unwrap();
    let (m, back_lr) = load_model(&dir.path().join("lr")).unwrap();
    assert_eq!(m.model, "logistic_regression");
    assert_eq!(m.hyperparameters, hyper());
    assert_eq!(back_lr, lr);
    let (SavedModel::LogisticRegression(a), SavedModel::LogisticRegression(b)) = (&lr, &back_lr) else { panic!() };
    let pa = predict_proba(a, &xt).unwrap();
    let pb = predict_proba(b, &xt).unwrap();
    assert!(pa.iter().zip(&pb).all(|(x, y)| x.to_bits() == y.to_bits()));

    let (_, back_cop) = load_model(&dir.path().join("cop")).unwrap();
    let (SavedModel::GaussianCopula(a), SavedModel::GaussianCopula(b)) = (&cop, &back_cop) else { panic!() };
    assert_eq!(a, b);
    assert_eq!(sample_copula(a, 200, 3), sample_copula(b, 200, 3));
}

#[test]
fn save_load_save_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let (lr, cop, _) = fitted();
    for m in [lr, cop] {
        let d = dir.path().join(m.name());
        let first = save_model(&m, &hyper(), &d).unwrap();
        let (manifest, back) = load_model(&d).unwrap();
        assert_eq!(manifest, first);
        let (again, files) = model_files(&back, &manifest.hyperparameters);
        assert_eq!(again, first);
        for (name, bytes) in files {
            assert_eq!(bytes, fs::read(d.join(&name)).unwrap(), "{name}");
        }
    }
}

#[test]
fn tampered_file_fails_checksum_naming_it() {
    let dir = tempfile::tempdir().unwrap();
    let (lr, _, _) = fitted();
    let d = dir.path().join("lr");
    save_model(&lr, &hyper(), &d).unwrap();
    let target = d.join("weights.json");
    let mut bytes = fs::read(&target).unwrap();
    let i = bytes.iter().position(|b| b.is_ascii_digit()).unwrap();
    bytes[i] = if bytes[i] == b'9' { b'8' } else { bytes[i] + 1 };
    fs::write(&target, bytes).unwrap();
    let err = load_model(&d).unwrap_err();
    assert!(matches!(&err, PersistError::Checksum { path, .. } if path == &target), "{err}");
    assert!(err.to_string().contains("weights.json"));
}

#[test]
fn future_format_version_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let (_, cop, _) = fitted();
    let d = dir.path().join("cop");
    save_model(&cop, &hyper(), &d).unwrap();
    let text = fs::read_to_string(d.join(MANIFEST)).unwrap();
    fs::write(d.join(MANIFEST), text.replace("\"format_version\":1", "\"format_version\":2")).unwrap();
    assert!(matches!(load_manifest(&d).unwrap_err(), PersistError::Version { found: 2, .. }));
}

#[test]
fn manifest_cannot_point_outside_the_directory() {
    let dir = tempfile::tempdir().unwrap();
    let (_, cop, _) = fitted();
    let d = dir.path().join("cop");
    save_model(&cop, &hyper(), &d).unwrap();
    let text = fs::read_to_string(d.join(MANIFEST)).unwrap();
    fs::write(d.join(MANIFEST), text.replace("\"copula.json\"", "\"../copula.json\"")).unwrap();
    assert!(matches!(load_model(&d).unwrap_err(), PersistError::Parse { .. }));
}

#[test]
fn missing_directory_is_not_found() {
    let err = load_model(std::path::Path::new("/nonexistent/model")).unwrap_err();
    assert!(err.is_not_found());
}
