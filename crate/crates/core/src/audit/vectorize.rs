use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::AuditError;
use crate::data_model::{ColumnEncoding, EventType, SequentialDataset, TabularDataset, TabularEncoder};
use crate::math;

/// Fixed-width patient vectors, row-major, one row per source record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatientVectors {
    /// Label of the dataset the rows came from.
    pub source: String,
    pub width: usize,
    pub values: Vec<f64>,
    /// Per coordinate: whether it is a presence indicator (multi-hot code or
    /// binary column), i.e. zero means absent.
    pub indicator: Vec<bool>,
}

impl PatientVectors {
    pub fn len(&self) -> usize {
        self.values.len().checked_div(self.width).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.width..(i + 1) * self.width]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.width.max(1))
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        let mut values = Vec::with_capacity(indices.len() * self.width);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Self { source: self.source.clone(), width: self.width, values, indicator: self.indicator.clone() }
    }
}

/// Vectorization fitted on a reference dataset so every set in one audit
/// shares a width and the same baseline statistics.
///
/// Sequential records become, per event type, a multi-hot vector over the
/// vocabulary of codes seen in any visit, scaled by `1/√(vocabulary size)`,
/// followed by the encoded baseline features. Tables use the fitted
/// tabular encoder directly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Vectorizer {
    Tabular { encoder: TabularEncoder },
    Sequential { vocab_sizes: [usize; 3], baseline: TabularEncoder },
}

fn encoder_indicators(encoder: &TabularEncoder) -> Vec<bool> {
    encoder
        .columns
        .iter()
        .flat_map(|c| core::iter::repeat_n(matches!(c, ColumnEncoding::Binary { .. }), c.width()))
        .collect()
}

impl Vectorizer {
    pub fn fit_tabular(reference: &TabularDataset) -> Result<Self, AuditError> {
        Ok(Self::Tabular { encoder: TabularEncoder::fit(reference)? })
    }

    pub fn fit_sequential(reference: &SequentialDataset) -> Result<Self, AuditError> {
        Ok(Self::Sequential {
            vocab_sizes: reference.vocab_sizes(),
            baseline: TabularEncoder::fit(&reference.baseline_table())?,
        })
    }

    pub fn width(&self) -> usize {
        match self {
            Self::Tabular { encoder } => encoder.width(),
            Self::Sequential { vocab_sizes, baseline } => vocab_sizes.iter().sum::<usize>() + baseline.width(),
        }
    }

    pub fn indicators(&self) -> Vec<bool> {
        match self {
            Self::Tabular { encoder } => encoder_indicators(encoder),
            Self::Sequential { vocab_sizes, baseline } => {
                let mut out = alloc::vec![true; vocab_sizes.iter().sum()];
                out.extend(encoder_indicators(baseline));
                out
            }
        }
    }

    pub fn tabular(&self, data: &TabularDataset, source: &str) -> Result<PatientVectors, AuditError> {
        let Self::Tabular { encoder } = self else { return Err(AuditError::KindMismatch) };
        if data.is_empty() {
            return Err(AuditError::EmptyDataset(source.into()));
        }
        let m = encoder.transform(data)?;
        Ok(PatientVectors { source: source.into(), width: m.n_cols, values: m.values, indicator: self.indicators() })
    }

    pub fn sequential(&self, data: &SequentialDataset, source: &str) -> Result<PatientVectors, AuditError> {
        let Self::Sequential { vocab_sizes, baseline } = self else { return Err(AuditError::KindMismatch) };
        if data.records.is_empty() {
            return Err(AuditError::EmptyDataset(source.into()));
        }
        if data.vocab_sizes() != *vocab_sizes {
            return Err(AuditError::VocabularyMismatch);
        }
        let width = self.width();
        let mut values = Vec::with_capacity(width * data.n_records());
        let base = baseline.transform(&data.baseline_table())?;
        for (i, record) in data.records.iter().enumerate() {
            for et in EventType::ALL {
                let size = vocab_sizes[et.index()];
                let start = values.len();
                values.resize(start + size, 0.0);
                if size == 0 {
                    continue;
                }
                let scale = 1.0 / math::sqrt(size as f64);
                for c in record.aggregated_codes(et) {
                    values[start + c as usize] = scale;
                }
            }
            values.extend_from_slice(base.row(i));
        }
        Ok(PatientVectors { source: source.into(), width, values, indicator: self.indicators() })
    }
}

/// Sequential vectors with the vectorizer fitted on the data itself.
pub fn vectorize_sequential(data: &SequentialDataset) -> Result<PatientVectors, AuditError> {
    Vectorizer::fit_sequential(data)?.sequential(data, "data")
}

/// Tabular vectors with the encoder fitted on the data itself.
pub fn vectorize_tabular(data: &TabularDataset) -> Result<PatientVectors, AuditError> {
    Vectorizer::fit_tabular(data)?.tabular(data, "data")
}
