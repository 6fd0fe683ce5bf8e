//! Prediction, ranking and site-selection metrics.
//!
//! Metrics that cannot be computed for an input (AUROC on single-class
//! labels, recall with no relevant items, ...) come back as
//! [`MetricValue::Undefined`] rather than a silent zero.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math;

/// A metric value, or the marker that it is not defined for this input.
/// Serializes as a number or `null`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "Option<f64>", into = "Option<f64>")]
pub enum MetricValue {
    Defined(f64),
    Undefined,
}

impl MetricValue {
    pub fn value(self) -> Option<f64> {
        match self {
            MetricValue::Defined(v) => Some(v),
            MetricValue::Undefined => None,
        }
    }

    pub fn is_defined(self) -> bool {
        matches!(self, MetricValue::Defined(_))
    }

    /// Unwraps a defined value; panics on `Undefined`.
    pub fn expect_defined(self, what: &str) -> f64 {
        match self {
            MetricValue::Defined(v) => v,
            MetricValue::Undefined => panic!("{what} is undefined"),
        }
    }
}

impl From<Option<f64>> for MetricValue {
    fn from(v: Option<f64>) -> Self {
        v.map_or(MetricValue::Undefined, MetricValue::Defined)
    }
}

impl From<MetricValue> for Option<f64> {
    fn from(v: MetricValue) -> Self {
        v.value()
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum MetricError {
    #[error("length mismatch: {0} predictions vs {1} targets")]
    LengthMismatch(usize, usize),
    #[error("no samples")]
    Empty,
    #[error("score at position {0} is not finite")]
    NonFiniteScore(usize),
    #[error("label at position {0} is not 0/1")]
    BadLabel(usize),
    #[error("cutoff k = {k} must lie in 1..={len}")]
    BadCutoff { k: usize, len: usize },
    #[error("ranked list contains duplicate id `{0}`")]
    DuplicateId(String),
    #[error("ranked list of {ranked} ids exceeds the candidate pool of {pool}")]
    PoolTooSmall { ranked: usize, pool: usize },
    #[error("maximum enrollment must be positive")]
    ZeroMaxEnrollment,
    #[error("group distribution must be nonnegative and sum to 1")]
    BadDistribution,
}

fn check_scored(scores: &[f64], labels: &[u8]) -> Result<(), MetricError> {
    if scores.len() != labels.len() {
        return Err(MetricError::LengthMismatch(scores.len(), labels.len()));
    }
    if scores.is_empty() {
        return Err(MetricError::Empty);
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(MetricError::NonFiniteScore(i));
    }
    if let Some(i) = labels.iter().position(|&y| y > 1) {
        return Err(MetricError::BadLabel(i));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinaryMetrics {
    pub accuracy: f64,
    pub auroc: MetricValue,
    pub pr_auc: MetricValue,
}

/// Accuracy at threshold 0.5 (score ≥ 0.5 predicts 1), tie-corrected AUROC
/// and average precision.
pub fn binary_classification_metrics(scores: &[f64], labels: &[u8]) -> Result<BinaryMetrics, MetricError> {
    check_scored(scores, labels)?;
    let correct = scores.iter().zip(labels).filter(|(&s, &y)| u8::from(s >= 0.5) == y).count();
    Ok(BinaryMetrics {
        accuracy: correct as f64 / scores.len() as f64,
        auroc: auroc_unchecked(scores, labels),
        pr_auc: average_precision_unchecked(scores, labels),
    })
}

/// Mann–Whitney AUROC; tied positive/negative pairs count one half.
pub fn auroc(scores: &[f64], labels: &[u8]) -> Result<MetricValue, MetricError> {
    check_scored(scores, labels)?;
    Ok(auroc_unchecked(scores, labels))
}

fn auroc_unchecked(scores: &[f64], labels: &[u8]) -> MetricValue {
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return MetricValue::Undefined;
    }
    let ranks = math::midranks(scores);
    let rank_sum: f64 = ranks.iter().zip(labels).filter(|(_, &y)| y == 1).map(|(r, _)| r).sum();
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    MetricValue::Defined(u / (n_pos as f64 * n_neg as f64))
}

/// Average precision with step interpolation. Tied scores form a single
/// threshold.
pub fn average_precision(scores: &[f64], labels: &[u8]) -> Result<MetricValue, MetricError> {
    check_scored(scores, labels)?;
    Ok(average_precision_unchecked(scores, labels))
}

fn average_precision_unchecked(scores: &[f64], labels: &[u8]) -> MetricValue {
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    if n_pos == 0 || n_pos == labels.len() {
        return MetricValue::Undefined;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut ap = 0.0;
    let mut tp = 0usize;
    let mut seen = 0usize;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let mut tp_block = 0;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            tp_block += usize::from(labels[order[j]]);
            j += 1;
        }
        tp += tp_block;
        seen += j - i;
        if tp_block > 0 {
            ap += (tp_block as f64 / n_pos as f64) * (tp as f64 / seen as f64);
        }
        i = j;
    }
    MetricValue::Defined(ap)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultilabelMetrics {
    pub f1: f64,
    pub jaccard: f64,
}

/// Sample-averaged F1 and Jaccard over predicted vs true label sets. Two
/// empty sets score 1.
pub fn multilabel_metrics<T: Ord>(
    predicted: &[BTreeSet<T>],
    truth: &[BTreeSet<T>],
) -> Result<MultilabelMetrics, MetricError> {
    if predicted.len() != truth.len() {
        return Err(MetricError::LengthMismatch(predicted.len(), truth.len()));
    }
    if predicted.is_empty() {
        return Err(MetricError::Empty);
    }
    let mut f1_sum = 0.0;
    let mut jac_sum = 0.0;
    for (p, t) in predicted.iter().zip(truth) {
        if p.is_empty() && t.is_empty() {
            f1_sum += 1.0;
            jac_sum += 1.0;
            continue;
        }
        let inter = p.intersection(t).count() as f64;
        let union = p.union(t).count() as f64;
        jac_sum += inter / union;
        if inter > 0.0 {
            let precision = inter / p.len() as f64;
            let recall = inter / t.len() as f64;
            f1_sum += 2.0 * precision * recall / (precision + recall);
        }
    }
    let n = predicted.len() as f64;
    Ok(MultilabelMetrics { f1: f1_sum / n, jaccard: jac_sum / n })
}

pub fn mse(predictions: &[f64], targets: &[f64]) -> Result<f64, MetricError> {
    if predictions.len() != targets.len() {
        return Err(MetricError::LengthMismatch(predictions.len(), targets.len()));
    }
    if predictions.is_empty() {
        return Err(MetricError::Empty);
    }
    let sum: f64 = predictions.iter().zip(targets).map(|(p, y)| (p - y) * (p - y)).sum();
    Ok(sum / predictions.len() as f64)
}

/// A ranking of candidate ids with the set of relevant ones.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedList {
    pub ranked: Vec<String>,
    pub relevant: BTreeSet<String>,
    pub pool_size: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankingAtK {
    pub k: usize,
    pub precision: f64,
    pub recall: MetricValue,
    pub ndcg: MetricValue,
}

pub fn ranking_metrics(list: &RankedList, ks: &[usize]) -> Result<Vec<RankingAtK>, MetricError> {
    if list.ranked.len() > list.pool_size {
        return Err(MetricError::PoolTooSmall { ranked: list.ranked.len(), pool: list.pool_size });
    }
    let mut seen = BTreeSet::new();
    for id in &list.ranked {
        if !seen.insert(id.as_str()) {
            return Err(MetricError::DuplicateId(id.clone()));
        }
    }
    let flags: Vec<bool> = list.ranked.iter().map(|id| list.relevant.contains(id)).collect();
    ranking_metrics_from_flags(&flags, list.relevant.len(), ks)
}

/// Precision, recall and nDCG at each cutoff from per-rank relevance flags.
pub fn ranking_metrics_from_flags(
    flags: &[bool],
    n_relevant: usize,
    ks: &[usize],
) -> Result<Vec<RankingAtK>, MetricError> {
    ks.iter()
        .map(|&k| {
            if k == 0 || k > flags.len() {
                return Err(MetricError::BadCutoff { k, len: flags.len() });
            }
            let hits = flags[..k].iter().filter(|&&f| f).count();
            let (recall, ndcg) = if n_relevant == 0 {
                (MetricValue::Undefined, MetricValue::Undefined)
            } else {
                let dcg: f64 = flags[..k].iter().enumerate().filter(|(_, &f)| f).map(|(i, _)| discount(i)).sum();
                let idcg: f64 = (0..k.min(n_relevant)).map(discount).sum();
                (MetricValue::Defined(hits as f64 / n_relevant as f64), MetricValue::Defined(dcg / idcg))
            };
            Ok(RankingAtK { k, precision: hits as f64 / k as f64, recall, ndcg })
        })
        .collect()
}

/// `1 / log2(i + 2)` for 0-based rank `i`.
fn discount(i: usize) -> f64 {
    1.0 / math::log2((i + 2) as f64)
}

/// Share of enrolled patients in each of six demographic groups.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 6]", into = "[f64; 6]")]
pub struct GroupDistribution([f64; 6]);

impl TryFrom<[f64; 6]> for GroupDistribution {
    type Error = MetricError;
    fn try_from(p: [f64; 6]) -> Result<Self, MetricError> {
        Self::new(p)
    }
}

impl From<GroupDistribution> for [f64; 6] {
    fn from(g: GroupDistribution) -> Self {
        g.0
    }
}

impl GroupDistribution {
    pub fn new(p: [f64; 6]) -> Result<Self, MetricError> {
        let sum: f64 = p.iter().sum();
        if p.iter().any(|&x| !(x >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(MetricError::BadDistribution);
        }
        Ok(Self(p))
    }

    /// Normalizes nonnegative group counts.
    pub fn from_counts(counts: [f64; 6]) -> Result<Self, MetricError> {
        let total: f64 = counts.iter().sum();
        if !(total > 0.0) {
            return Err(MetricError::BadDistribution);
        }
        Self::new(counts.map(|c| c / total))
    }

    pub fn uniform() -> Self {
        Self([1.0 / 6.0; 6])
    }

    pub fn probabilities(&self) -> &[f64; 6] {
        &self.0
    }

    /// Shannon entropy in nats, with `0 ln 0 = 0`.
    pub fn entropy(&self) -> f64 {
        -self.0.iter().filter(|&&p| p > 0.0).map(|&p| p * math::ln(p)).sum::<f64>()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SiteSelectionMetrics {
    pub relative_error: f64,
    pub entropy: f64,
}

/// One trial's enrollment outcome under a site-selection model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SiteSelectionCase {
    pub trial_id: String,
    pub max_enrollment: f64,
    pub model_enrollment: f64,
    pub groups: GroupDistribution,
}

pub fn relative_error(max_enrollment: f64, model_enrollment: f64) -> Result<f64, MetricError> {
    if !(max_enrollment > 0.0) {
        return Err(MetricError::ZeroMaxEnrollment);
    }
    Ok((max_enrollment - model_enrollment) / max_enrollment)
}

pub fn site_selection_metrics(
    max_enrollment: f64,
    model_enrollment: f64,
    groups: &GroupDistribution,
) -> Result<SiteSelectionMetrics, MetricError> {
    Ok(SiteSelectionMetrics {
        relative_error: relative_error(max_enrollment, model_enrollment)?,
        entropy: groups.entropy(),
    })
}
