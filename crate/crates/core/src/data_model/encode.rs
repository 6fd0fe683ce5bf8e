use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::tabular::{Cell, ColumnKind, ColumnSpec, TabularDataset};
use super::text::{hash_bucket, tokenize};
use crate::math;

/// Width of the hashed token-count block for each text column.
pub const TEXT_HASH_DIM: usize = 256;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("dataset schema does not match the encoder's training schema")]
    SchemaMismatch,
    #[error("row {row}, column `{column}`: cell does not match the column kind")]
    BadCell { row: usize, column: String },
}

/// Fitted per-column transform.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnEncoding {
    /// Missing → 0, declared category `i` → `i + 1`.
    Ordinal {
        column: String,
        categories: Vec<String>,
    },
    /// 0/1 pass through; missing → 0.
    Binary {
        column: String,
    },
    /// z-score with train statistics; missing → train mean (encodes to 0).
    Standardize {
        column: String,
        mean: f64,
        std: f64,
        zero_variance: bool,
    },
    HashedText {
        column: String,
        dim: usize,
    },
}

impl ColumnEncoding {
    pub fn width(&self) -> usize {
        match self {
            ColumnEncoding::HashedText { dim, .. } => *dim,
            _ => 1,
        }
    }
}

/// Encoder state fitted on a training table. Statistics never look at
/// anything but the training rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabularEncoder {
    /// Schema the encoder was fitted on (target included).
    pub schema: Vec<ColumnSpec>,
    pub target: Option<String>,
    pub columns: Vec<ColumnEncoding>,
}

/// Dense row-major numeric matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub values: Vec<f64>,
    pub column_names: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(n_rows: usize, n_cols: usize, values: Vec<f64>, column_names: Vec<String>) -> Self {
        assert_eq!(values.len(), n_rows * n_cols, "matrix buffer size");
        assert_eq!(column_names.len(), n_cols, "column name count");
        Self { n_rows, n_cols, values, column_names }
    }

    pub fn from_rows(rows: &[Vec<f64>], column_names: Vec<String>) -> Self {
        let n_cols = column_names.len();
        let mut values = Vec::with_capacity(rows.len() * n_cols);
        for r in rows {
            assert_eq!(r.len(), n_cols, "ragged rows");
            values.extend_from_slice(r);
        }
        Self::new(rows.len(), n_cols, values, column_names)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.n_cols.max(1)).take(self.n_rows)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Appends a column of zeros (used to check that dead features stay dead).
    pub fn with_zero_column(&self, name: impl Into<String>) -> Self {
        let mut values = Vec::with_capacity(self.n_rows * (self.n_cols + 1));
        for r in self.rows() {
            values.extend_from_slice(r);
            values.push(0.0);
        }
        let mut names = self.column_names.clone();
        names.push(name.into());
        Self::new(self.n_rows, self.n_cols + 1, values, names)
    }
}

impl TabularEncoder {
    pub fn fit(train: &TabularDataset) -> Result<Self, EncodeError> {
        let mut columns = Vec::new();
        for (j, spec) in train.feature_columns() {
            let enc = match spec.kind {
                ColumnKind::Categorical => {
                    ColumnEncoding::Ordinal { column: spec.name.clone(), categories: spec.categories.clone() }
                }
                ColumnKind::Binary => ColumnEncoding::Binary { column: spec.name.clone() },
                ColumnKind::Text => ColumnEncoding::HashedText { column: spec.name.clone(), dim: TEXT_HASH_DIM },
                ColumnKind::Numerical => {
                    let mut vals = Vec::with_capacity(train.n_rows());
                    for (row, cells) in train.rows.iter().enumerate() {
                        match &cells[j] {
                            Cell::Num(v) => vals.push(*v),
                            Cell::Missing => {}
                            Cell::Str(_) => return Err(EncodeError::BadCell { row, column: spec.name.clone() }),
                        }
                    }
                    let mean = math::mean(&vals);
                    let var = if vals.is_empty() {
                        0.0
                    } else {
                        vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / vals.len() as f64
                    };
                    let std = math::sqrt(var);
                    let zero_variance = !(std > 0.0);
                    ColumnEncoding::Standardize {
                        column: spec.name.clone(),
                        mean,
                        std: if zero_variance { 1.0 } else { std },
                        zero_variance,
                    }
                }
            };
            columns.push(enc);
        }
        Ok(Self { schema: train.schema.clone(), target: train.target.as_ref().map(|t| t.column.clone()), columns })
    }

    pub fn width(&self) -> usize {
        self.columns.iter().map(ColumnEncoding::width).sum()
    }

    pub fn column_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.width());
        for c in &self.columns {
            match c {
                ColumnEncoding::HashedText { column, dim } => {
                    names.extend((0..*dim).map(|h| format!("{column}#{h}")));
                }
                ColumnEncoding::Ordinal { column, .. }
                | ColumnEncoding::Binary { column }
                | ColumnEncoding::Standardize { column, .. } => names.push(column.clone()),
            }
        }
        names
    }

    /// Encodes one row (full schema width, target included and skipped).
    pub fn encode_row(&self, cells: &[Cell], row: usize, out: &mut Vec<f64>) -> Result<(), EncodeError> {
        let target_idx = self.target.as_ref().and_then(|t| self.schema.iter().position(|c| &c.name == t));
        let feature_cells = cells.iter().enumerate().filter(|(i, _)| Some(*i) != target_idx).map(|(_, c)| c);
        for (cell, enc) in feature_cells.zip(&self.columns) {
            let bad = |column: &String| EncodeError::BadCell { row, column: column.clone() };
            match enc {
                ColumnEncoding::Ordinal { column, categories } => match cell {
                    Cell::Missing => out.push(0.0),
                    Cell::Str(s) => out.push(categories.iter().position(|c| c == s).map_or(0.0, |i| (i + 1) as f64)),
                    Cell::Num(_) => return Err(bad(column)),
                },
                ColumnEncoding::Binary { column } => match cell {
                    Cell::Missing => out.push(0.0),
                    Cell::Num(v) => out.push(*v),
                    Cell::Str(_) => return Err(bad(column)),
                },
                ColumnEncoding::Standardize { column, mean, std, .. } => match cell {
                    Cell::Missing => out.push(0.0),
                    Cell::Num(v) => out.push((v - mean) / std),
                    Cell::Str(_) => return Err(bad(column)),
                },
                ColumnEncoding::HashedText { column, dim } => {
                    let start = out.len();
                    out.resize(start + dim, 0.0);
                    match cell {
                        Cell::Missing => {}
                        Cell::Str(s) => {
                            for tok in tokenize(s) {
                                out[start + hash_bucket(&tok, *dim)] += 1.0;
                            }
                        }
                        Cell::Num(_) => return Err(bad(column)),
                    }
                }
            }
        }
        Ok(())
    }

    pub fn transform(&self, data: &TabularDataset) -> Result<FeatureMatrix, EncodeError> {
        let same_schema = data.schema.len() == self.schema.len()
            && data.schema.iter().zip(&self.schema).all(|(a, b)| a.name == b.name && a.kind == b.kind);
        if !same_schema || data.target.as_ref().map(|t| &t.column) != self.target.as_ref() {
            return Err(EncodeError::SchemaMismatch);
        }
        let width = self.width();
        let mut values = Vec::with_capacity(width * data.n_rows());
        for (row, cells) in data.rows.iter().enumerate() {
            if cells.len() != self.schema.len() {
                return Err(EncodeError::SchemaMismatch);
            }
            self.encode_row(cells, row, &mut values)?;
        }
        Ok(FeatureMatrix::new(data.n_rows(), width, values, self.column_names()))
    }
}

/// Fits on `train` and encodes `train` followed by each of `others`.
pub fn encode_tabular(
    train: &TabularDataset,
    others: &[&TabularDataset],
) -> Result<(TabularEncoder, Vec<FeatureMatrix>), EncodeError> {
    let encoder = TabularEncoder::fit(train)?;
    let mut out = Vec::with_capacity(others.len() + 1);
    out.push(encoder.transform(train)?);
    for d in others {
        out.push(encoder.transform(d)?);
    }
    Ok((encoder, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_model::{Target, TargetKind};
    use alloc::vec;

    fn table(rows: Vec<Vec<Cell>>) -> TabularDataset {
        TabularDataset::new(
            vec![
                ColumnSpec::numerical("x"),
                ColumnSpec::binary("flag"),
                ColumnSpec::categorical("arm", ["A", "B"]),
                ColumnSpec::binary("label"),
            ],
            rows,
            Some(Target { column: "label".into(), kind: TargetKind::Binary }),
        )
    }

    fn row(x: f64, flag: f64, arm: &str, label: f64) -> Vec<Cell> {
        vec![Cell::Num(x), Cell::Num(flag), Cell::Str(arm.into()), Cell::Num(label)]
    }

    #[test]
    fn two_point_zscore_and_passthrough() {
        let train = table(vec![row(0.0, 0.0, "A", 0.0), row(2.0, 1.0, "B", 1.0)]);
        let (_, mats) = encode_tabular(&train, &[]).unwrap();
        let m = &mats[0];
        assert_eq!(m.n_cols, 3);
        assert_eq!(m.row(0), [-1.0, 0.0, 1.0]);
        assert_eq!(m.row(1), [1.0, 1.0, 2.0]);
        assert_eq!(m.column_names, ["x", "flag", "arm"]);
    }

    #[test]
    fn test_row_at_train_mean_encodes_to_zero() {
        let train = table(vec![row(0.0, 0.0, "A", 0.0), row(2.0, 1.0, "B", 1.0)]);
        let test =
            table(vec![row(1.0, 1.0, "A", 0.0), vec![Cell::Missing, Cell::Missing, Cell::Missing, Cell::Num(0.0)]]);
        let (_, mats) = encode_tabular(&train, &[&test]).unwrap();
        assert_eq!(mats[1].row(0), [0.0, 1.0, 1.0]);
        assert_eq!(mats[1].row(1), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn zero_variance_column_uses_unit_std() {
        let train = table(vec![row(5.0, 0.0, "A", 0.0), row(5.0, 1.0, "B", 1.0)]);
        let enc = TabularEncoder::fit(&train).unwrap();
        assert_eq!(
            enc.columns[0],
            ColumnEncoding::Standardize { column: "x".into(), mean: 5.0, std: 1.0, zero_variance: true }
        );
        assert!(enc.transform(&train).unwrap().is_finite());
    }

    #[test]
    fn text_columns_hash_token_counts() {
        let data = TabularDataset::new(
            vec![ColumnSpec::text("note")],
            vec![vec![Cell::Str("Stage II stage".into())], vec![Cell::Missing]],
            None,
        );
        let m = TabularEncoder::fit(&data).unwrap().transform(&data).unwrap();
        assert_eq!(m.n_cols, TEXT_HASH_DIM);
        assert_eq!(m.row(0).iter().sum::<f64>(), 3.0);
        assert_eq!(m.row(0)[hash_bucket("stage", TEXT_HASH_DIM)], 2.0);
        assert!(m.row(1).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn repeated_transform_is_identical() {
        let train = table(vec![row(0.3, 0.0, "A", 0.0), row(2.9, 1.0, "B", 1.0), row(1.1, 1.0, "A", 0.0)]);
        let enc = TabularEncoder::fit(&train).unwrap();
        assert_eq!(enc.transform(&train).unwrap(), enc.transform(&train).unwrap());
    }
}
