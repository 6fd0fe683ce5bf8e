use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::AuditError;
use crate::data_model::{Cell, ColumnKind, EventType, SequentialDataset, TabularDataset};
use crate::math;
use crate::metrics::MetricValue;

/// Event types compared by default: medications and adverse events.
/// Treatment arms are excluded because a single per-visit arm sums to one
/// across codes, which would dominate the correlation.
pub const DEFAULT_FIDELITY_EVENTS: [EventType; 2] = [EventType::Medication, EventType::AdverseEvent];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityPair {
    pub feature: String,
    pub real_dp: f64,
    pub synthetic_dp: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub pairs: Vec<FidelityPair>,
    /// Pearson correlation of the paired probabilities; undefined when
    /// either side is constant.
    pub pearson_r: MetricValue,
}

/// Pearson correlation between real and synthetic dimension-wise
/// probabilities.
pub fn fidelity_from_probabilities(real: &[f64], synthetic: &[f64]) -> Result<MetricValue, AuditError> {
    if real.len() != synthetic.len() {
        return Err(AuditError::FeatureMismatch);
    }
    if real.len() < 2 {
        return Err(AuditError::TooFewFeatures(real.len()));
    }
    Ok(math::pearson(real, synthetic).map_or(MetricValue::Undefined, MetricValue::Defined))
}

fn report(names: Vec<String>, real: Vec<f64>, synthetic: Vec<f64>) -> Result<FidelityReport, AuditError> {
    let pearson_r = fidelity_from_probabilities(&real, &synthetic)?;
    let pairs = names
        .into_iter()
        .zip(real.into_iter().zip(synthetic))
        .map(|(feature, (real_dp, synthetic_dp))| FidelityPair { feature, real_dp, synthetic_dp })
        .collect();
    Ok(FidelityReport { pairs, pearson_r })
}

/// Share of visits containing each code of the chosen event types.
pub fn visit_probabilities(data: &SequentialDataset, events: &[EventType]) -> Result<Vec<f64>, AuditError> {
    let total = data.total_visits();
    if total == 0 {
        return Err(AuditError::EmptyDataset(String::from("no visits")));
    }
    let mut out = Vec::new();
    for &et in events {
        let mut counts = vec![0usize; data.vocabulary(et).len()];
        for v in data.records.iter().flat_map(|r| &r.visits) {
            for &c in v.codes(et) {
                counts[c as usize] += 1;
            }
        }
        out.extend(counts.into_iter().map(|c| c as f64 / total as f64));
    }
    Ok(out)
}

pub fn fidelity_sequential(
    real: &SequentialDataset,
    synthetic: &SequentialDataset,
    events: &[EventType],
) -> Result<FidelityReport, AuditError> {
    if real.vocabularies != synthetic.vocabularies {
        return Err(AuditError::VocabularyMismatch);
    }
    let names = events
        .iter()
        .flat_map(|&et| real.vocabulary(et).codes.iter().map(move |c| format!("{}:{c}", et.as_str())))
        .collect();
    report(names, visit_probabilities(real, events)?, visit_probabilities(synthetic, events)?)
}

/// Indicator features of a table: binary columns and one indicator per
/// declared category, target excluded.
fn row_indicators(data: &TabularDataset) -> (Vec<String>, Vec<f64>) {
    let mut names = Vec::new();
    let mut counts: Vec<f64> = Vec::new();
    let mut cols = Vec::new();
    for (j, spec) in data.feature_columns() {
        match spec.kind {
            ColumnKind::Binary => {
                names.push(spec.name.clone());
                cols.push((j, None));
            }
            ColumnKind::Categorical => {
                for cat in &spec.categories {
                    names.push(format!("{}={cat}", spec.name));
                    cols.push((j, Some(cat.as_str())));
                }
            }
            _ => {}
        }
    }
    counts.resize(cols.len(), 0.0);
    for row in &data.rows {
        for (slot, &(j, cat)) in cols.iter().enumerate() {
            let active = match (cat, &row[j]) {
                (None, Cell::Num(v)) => *v == 1.0,
                (Some(c), Cell::Str(s)) => s == c,
                _ => false,
            };
            if active {
                counts[slot] += 1.0;
            }
        }
    }
    let n = data.n_rows() as f64;
    (names, counts.into_iter().map(|c| c / n).collect())
}

pub fn fidelity_tabular(real: &TabularDataset, synthetic: &TabularDataset) -> Result<FidelityReport, AuditError> {
    if real.schema != synthetic.schema || real.target != synthetic.target {
        return Err(AuditError::SchemaMismatch);
    }
    for (d, name) in [(real, "real"), (synthetic, "synthetic")] {
        if d.is_empty() {
            return Err(AuditError::EmptyDataset(name.into()));
        }
    }
    let (names, r) = row_indicators(real);
    let (_, s) = row_indicators(synthetic);
    report(names, r, s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn proportional_and_reversed_vectors() {
        assert_eq!(
            fidelity_from_probabilities(&[0.8, 0.2, 0.5], &[0.4, 0.1, 0.25]).unwrap(),
            MetricValue::Defined(1.0)
        );
        assert_eq!(fidelity_from_probabilities(&[0.9, 0.1], &[0.1, 0.9]).unwrap(), MetricValue::Defined(-1.0));
        assert!(matches!(fidelity_from_probabilities(&[0.5], &[0.5]), Err(AuditError::TooFewFeatures(1))));
    }

    #[test]
    fn identical_data_is_perfect() {
        let d = crate::demo_data::generate_demo_sequential(
            &crate::demo_data::SequentialDemoSpec::preset("nct01439568", 5).unwrap(),
        )
        .unwrap();
        let r = fidelity_sequential(&d, &d, &DEFAULT_FIDELITY_EVENTS).unwrap();
        assert_eq!(r.pearson_r, MetricValue::Defined(1.0));
        assert_eq!(r.pairs.len(), 129);
        assert!(r.pairs.iter().all(|p| p.real_dp == p.synthetic_dp && (0.0..=1.0).contains(&p.real_dp)));
    }

    #[test]
    fn tabular_indicators_cover_binary_and_levels() {
        let t = crate::demo_data::generate_demo_tabular(
            &crate::demo_data::TabularDemoSpec::preset("nct00003299", 5).unwrap(),
        )
        .unwrap();
        let r = fidelity_tabular(&t, &t).unwrap();
        let levels: usize =
            t.schema.iter().filter(|c| c.kind == ColumnKind::Categorical).map(|c| c.categories.len()).sum();
        assert_eq!(r.pairs.len(), 11 + levels);
        assert_eq!(r.pearson_r, MetricValue::Defined(1.0));
    }
}
