//! Privacy, fidelity and utility audits of synthetic patient data.
//!
//! Privacy attacks work on [`PatientVectors`]; see [`Vectorizer`] for the
//! record representation. Fidelity compares dimension-wise probabilities of
//! the raw datasets. Utility trains logistic regression on synthetic records
//! and scores AUROC on real ones.

mod fidelity;
mod privacy;
mod utility;
mod vectorize;

pub use fidelity::{
    fidelity_from_probabilities, fidelity_sequential, fidelity_tabular, visit_probabilities, FidelityPair,
    FidelityReport, DEFAULT_FIDELITY_EVENTS,
};
pub use privacy::{
    attribute_disclosure, nearest_distances, nnaa, presence_disclosure, sample_attribute_queries, DisclosureQuery,
    NnaaReport,
};
pub use utility::{utility_sequential, utility_tabular};
pub use vectorize::{vectorize_sequential, vectorize_tabular, PatientVectors, Vectorizer};

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{BaselineError, LogRegConfig};
use crate::data_model::{EncodeError, EventType, LabelError, SequentialDataset, TabularDataset};
use crate::metrics::{MetricError, MetricValue};
use crate::rng::substream;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum AuditError {
    #[error("{0} dataset is empty")]
    EmptyDataset(String),
    #[error("vector widths differ ({left} vs {right})")]
    WidthMismatch { left: usize, right: usize },
    #[error("set sizes differ (train {train}, eval {eval}, synthetic {synthetic})")]
    SizeMismatch { train: usize, eval: usize, synthetic: usize },
    #[error("at least 2 records per set are needed, got {0}")]
    TooFewRecords(usize),
    #[error("no known records")]
    NoKnownRecords,
    #[error("no attribute queries")]
    NoQueries,
    #[error("query {0} has no unknown features")]
    NoUnknownFeatures(usize),
    #[error("query {0} has out-of-range or overlapping feature indices")]
    BadQuery(usize),
    #[error("k = {k} but {available} synthetic records are available")]
    BadK { k: usize, available: usize },
    #[error("at least 2 features are needed for a correlation, got {0}")]
    TooFewFeatures(usize),
    #[error("feature vectors differ in length")]
    FeatureMismatch,
    #[error("vocabularies differ between datasets")]
    VocabularyMismatch,
    #[error("schemas differ between datasets")]
    SchemaMismatch,
    #[error("vectorizer kind does not match the dataset kind")]
    KindMismatch,
    #[error("records are missing labels")]
    MissingLabels,
    #[error("real test labels contain a single class")]
    SingleClassTest,
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Label(#[from] LabelError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditConfig {
    /// Hamming thresholds for presence disclosure.
    pub presence_thresholds: Vec<usize>,
    /// Share of training records the presence attacker holds.
    pub known_fraction: f64,
    /// Neighbor counts for attribute disclosure.
    pub attribute_ks: Vec<usize>,
    /// Present features revealed to the attribute attacker per record.
    pub attribute_known: usize,
    pub attribute_queries: usize,
    /// Upper bound on the common NNAA set size.
    pub nnaa_max: usize,
    pub fidelity_events: Vec<EventType>,
    pub logreg: LogRegConfig,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            presence_thresholds: vec![0],
            known_fraction: 0.2,
            attribute_ks: vec![5],
            attribute_known: 5,
            attribute_queries: 100,
            nnaa_max: 1000,
            fidelity_events: DEFAULT_FIDELITY_EVENTS.to_vec(),
            logreg: LogRegConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelitySummary {
    pub r: MetricValue,
    pub n_features: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UtilitySummary {
    pub auroc: MetricValue,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    /// Hamming threshold → sensitivity.
    pub presence: BTreeMap<usize, f64>,
    /// k → mean sensitivity; undefined when no query could be formed.
    pub attribute: BTreeMap<usize, MetricValue>,
    pub nnaa: NnaaReport,
    pub fidelity: FidelitySummary,
    pub utility: UtilitySummary,
}

/// Audit inputs after vectorization with a vectorizer fitted on `train`.
struct Vectors {
    train: PatientVectors,
    eval: PatientVectors,
    synthetic: PatientVectors,
}

fn sample_indices(n: usize, take: usize, seed: u64, label: &str) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut substream(seed, label));
    idx.truncate(take);
    idx.sort_unstable();
    idx
}

type PrivacyResults = (BTreeMap<usize, f64>, BTreeMap<usize, MetricValue>, NnaaReport);

fn privacy(v: &Vectors, config: &AuditConfig, seed: u64) -> Result<PrivacyResults, AuditError> {
    let n_known = ((config.known_fraction * v.train.len() as f64) as usize).clamp(1, v.train.len());
    let known = v.train.select(&sample_indices(v.train.len(), n_known, seed, "audit/presence"));
    let mut presence = BTreeMap::new();
    for &t in &config.presence_thresholds {
        presence.insert(t, presence_disclosure(&v.synthetic, &known, t)?);
    }

    let queries = sample_attribute_queries(&v.train, config.attribute_queries, config.attribute_known, seed);
    let mut attribute = BTreeMap::new();
    for &k in &config.attribute_ks {
        let value = if queries.is_empty() {
            MetricValue::Undefined
        } else {
            MetricValue::Defined(attribute_disclosure(&v.synthetic, &queries, k)?)
        };
        attribute.insert(k, value);
    }

    let n = v.train.len().min(v.eval.len()).min(v.synthetic.len()).min(config.nnaa_max);
    let nn = nnaa(
        &v.train.select(&sample_indices(v.train.len(), n, seed, "audit/nnaa/train")),
        &v.eval.select(&sample_indices(v.eval.len(), n, seed, "audit/nnaa/eval")),
        &v.synthetic.select(&sample_indices(v.synthetic.len(), n, seed, "audit/nnaa/synthetic")),
    )?;
    Ok((presence, attribute, nn))
}

fn utility_or_undefined(result: Result<MetricValue, AuditError>) -> Result<MetricValue, AuditError> {
    match result {
        Err(AuditError::MissingLabels | AuditError::SingleClassTest | AuditError::Label(_))
        | Err(AuditError::Baseline(BaselineError::SingleClass)) => Ok(MetricValue::Undefined),
        other => other,
    }
}

/// Full audit of a synthetic sequential dataset generated from `train`,
/// with `eval` as held-out real data.
pub fn audit_sequential(
    train: &SequentialDataset,
    eval: &SequentialDataset,
    synthetic: &SequentialDataset,
    config: &AuditConfig,
    seed: u64,
) -> Result<(AuditReport, FidelityReport), AuditError> {
    let vz = Vectorizer::fit_sequential(train)?;
    let v = Vectors {
        train: vz.sequential(train, "train")?,
        eval: vz.sequential(eval, "eval")?,
        synthetic: vz.sequential(synthetic, "synthetic")?,
    };
    let (presence, attribute, nnaa) = privacy(&v, config, seed)?;
    let fidelity = fidelity_sequential(train, synthetic, &config.fidelity_events)?;
    let auroc = utility_or_undefined(utility_sequential(synthetic, eval, config.logreg))?;
    let report = AuditReport {
        presence,
        attribute,
        nnaa,
        fidelity: FidelitySummary { r: fidelity.pearson_r, n_features: fidelity.pairs.len() },
        utility: UtilitySummary { auroc },
    };
    Ok((report, fidelity))
}

pub fn audit_tabular(
    train: &TabularDataset,
    eval: &TabularDataset,
    synthetic: &TabularDataset,
    config: &AuditConfig,
    seed: u64,
) -> Result<(AuditReport, FidelityReport), AuditError> {
    let vz = Vectorizer::fit_tabular(train)?;
    let v = Vectors {
        train: vz.tabular(train, "train")?,
        eval: vz.tabular(eval, "eval")?,
        synthetic: vz.tabular(synthetic, "synthetic")?,
    };
    let (presence, attribute, nnaa) = privacy(&v, config, seed)?;
    let fidelity = fidelity_tabular(train, synthetic)?;
    let auroc = utility_or_undefined(utility_tabular(synthetic, eval, config.logreg))?;
    let report = AuditReport {
        presence,
        attribute,
        nnaa,
        fidelity: FidelitySummary { r: fidelity.pearson_r, n_features: fidelity.pairs.len() },
        utility: UtilitySummary { auroc },
    };
    Ok((report, fidelity))
}
