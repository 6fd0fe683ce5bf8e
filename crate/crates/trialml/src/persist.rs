//! Model directories: `manifest.json` plus one JSON parameter file per
//! component. Floats are written with 17 significant digits, which parse
//! back to the same bits.

use std::collections::BTreeMap;
use std::io;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use trialml_core::baselines::LogRegModel;
use trialml_core::data_model::TabularEncoder;
use trialml_core::search::InvertedIndex;
use trialml_core::simulation::{CopulaModel, SimulantsPlan};

use crate::io::{read_bytes, IoError};
use crate::outputs::Outputs;

/// Bumped whenever a parameter file layout changes.
pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST: &str = "manifest.json";
pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum PersistError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{}: checksum mismatch (manifest {expected}, file {actual})", path.display())]
    Checksum { path: PathBuf, expected: String, actual: String },
    #[error("{}: format version {found} is not supported (this build reads {FORMAT_VERSION})", path.display())]
    Version { path: PathBuf, found: u32 },
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error("{}: manifest declares model `{model}` but lists files {files:?}", path.display())]
    Layout { path: PathBuf, model: String, files: Vec<String> },
}

impl PersistError {
    pub fn is_not_found(&self) -> bool {
        matches!(self, PersistError::Io(e) if e.is_not_found())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format_version: u32,
    pub model: String,
    pub toolkit_version: String,
    pub hyperparameters: BTreeMap<String, serde_json::Value>,
    /// File name → lowercase hex SHA-256 of its bytes.
    pub files: BTreeMap<String, String>,
}

/// A fitted model of any registered kind.
#[derive(Clone, Debug, PartialEq)]
pub enum SavedModel {
    LogisticRegression(LogRegModel),
    GaussianCopula(CopulaModel),
    Bm25(InvertedIndex),
    Simulants(SimulantsPlan),
}

impl SavedModel {
    pub fn name(&self) -> &'static str {
        match self {
            SavedModel::LogisticRegression(_) => "logistic_regression",
            SavedModel::GaussianCopula(_) => "gaussian_copula",
            SavedModel::Bm25(_) => "bm25",
            SavedModel::Simulants(_) => "simulants",
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// `serde_json` formatter writing every float in `{:.16e}` form.
struct Sig17;

impl serde_json::ser::Formatter for Sig17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

/// JSON with 17-significant-digit floats and a trailing newline.
pub fn to_sig17_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Sig17);
    value.serialize(&mut ser).expect("model parameters serialize");
    out.push(b'\n');
    out
}

fn component_files(model: &SavedModel) -> Vec<(&'static str, Vec<u8>)> {
    match model {
        SavedModel::LogisticRegression(m) => {
            let mut weights = m.clone();
            let encoder = weights.encoder.take();
            let mut files = vec![("weights.json", to_sig17_json(&weights))];
            if let Some(e) = encoder {
                files.push(("encoder.json", to_sig17_json(&e)));
            }
            files
        }
        SavedModel::GaussianCopula(m) => vec![("copula.json", to_sig17_json(m))],
        SavedModel::Bm25(m) => vec![("index.json", to_sig17_json(m))],
        SavedModel::Simulants(m) => vec![("plan.json", to_sig17_json(m))],
    }
}

/// Parameter files and manifest as `(relative path, bytes)`, manifest last.
pub fn model_files(
    model: &SavedModel,
    hyperparameters: &BTreeMap<String, serde_json::Value>,
) -> (Manifest, Vec<(String, Vec<u8>)>) {
    let files = component_files(model);
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        model: model.name().to_string(),
        toolkit_version: TOOLKIT_VERSION.to_string(),
        hyperparameters: hyperparameters.clone(),
        files: files.iter().map(|(name, bytes)| (name.to_string(), sha256_hex(bytes))).collect(),
    };
    let mut out: Vec<(String, Vec<u8>)> = files.into_iter().map(|(n, b)| (n.to_string(), b)).collect();
    out.push((MANIFEST.to_string(), to_sig17_json(&manifest)));
    (manifest, out)
}

/// Writes a model directory; nothing is left behind on failure.
pub fn save_model(
    model: &SavedModel,
    hyperparameters: &BTreeMap<String, serde_json::Value>,
    dir: &Path,
) -> Result<Manifest, PersistError> {
    let (manifest, files) = model_files(model, hyperparameters);
    let mut outputs = Outputs::default();
    for (name, bytes) in files {
        outputs.add(name, bytes);
    }
    outputs.commit(dir)?;
    Ok(manifest)
}

fn parse<T: DeserializeOwned>(path: &Path, bytes: &[u8]) -> Result<T, PersistError> {
    serde_json::from_slice(bytes).map_err(|e| PersistError::Parse { path: path.to_path_buf(), message: e.to_string() })
}

pub fn load_manifest(dir: &Path) -> Result<Manifest, PersistError> {
    let path = dir.join(MANIFEST);
    let bytes = read_bytes(&path)?;
    // Check the version before the full shape so newer layouts fail clearly.
    #[derive(Deserialize)]
    struct VersionOnly {
        format_version: u32,
    }
    let v: VersionOnly = parse(&path, &bytes)?;
    if v.format_version != FORMAT_VERSION {
        return Err(PersistError::Version { path, found: v.format_version });
    }
    parse(&path, &bytes)
}

/// Reads and checksums one component file listed in the manifest.
fn component(dir: &Path, manifest: &Manifest, name: &str) -> Result<Option<Vec<u8>>, PersistError> {
    let Some(expected) = manifest.files.get(name) else {
        return Ok(None);
    };
    if name.contains(['/', '\\']) || name == ".." || name == "." {
        return Err(PersistError::Parse {
            path: dir.join(MANIFEST),
            message: format!("file name `{name}` leaves the model directory"),
        });
    }
    let path = dir.join(name);
    let bytes = read_bytes(&path)?;
    let actual = sha256_hex(&bytes);
    if &actual != expected {
        return Err(PersistError::Checksum { path, expected: expected.clone(), actual });
    }
    Ok(Some(bytes))
}

fn required<T: DeserializeOwned>(dir: &Path, manifest: &Manifest, name: &str) -> Result<T, PersistError> {
    match component(dir, manifest, name)? {
        Some(bytes) => parse(&dir.join(name), &bytes),
        None => Err(PersistError::Layout {
            path: dir.join(MANIFEST),
            model: manifest.model.clone(),
            files: manifest.files.keys().cloned().collect(),
        }),
    }
}

pub fn load_model(dir: &Path) -> Result<(Manifest, SavedModel), PersistError> {
    let manifest = load_manifest(dir)?;
    // Every listed file is verified, including ones this model kind ignores.
    for name in manifest.files.keys() {
        component(dir, &manifest, name)?;
    }
    let model = match manifest.model.as_str() {
        "logistic_regression" => {
            let mut m: LogRegModel = required(dir, &manifest, "weights.json")?;
            if let Some(bytes) = component(dir, &manifest, "encoder.json")? {
                m.encoder = Some(parse::<TabularEncoder>(&dir.join("encoder.json"), &bytes)?);
            }
            SavedModel::LogisticRegression(m)
        }
        "gaussian_copula" => SavedModel::GaussianCopula(required(dir, &manifest, "copula.json")?),
        "bm25" => SavedModel::Bm25(required(dir, &manifest, "index.json")?),
        "simulants" => SavedModel::Simulants(required(dir, &manifest, "plan.json")?),
        other => {
            return Err(PersistError::Parse { path: dir.join(MANIFEST), message: format!("unknown model `{other}`") });
        }
    };
    Ok((manifest, model))
}
