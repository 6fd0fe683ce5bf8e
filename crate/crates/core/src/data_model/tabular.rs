use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Binary,
    Categorical,
    Numerical,
    Text,
}

impl ColumnKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ColumnKind::Binary => "binary",
            ColumnKind::Categorical => "categorical",
            ColumnKind::Numerical => "numerical",
            ColumnKind::Text => "text",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    /// Declared categories, in ordinal order. Empty unless categorical.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub categories: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
}

impl ColumnSpec {
    pub fn new(name: impl Into<String>, kind: ColumnKind) -> Self {
        Self { name: name.into(), kind, categories: Vec::new(), unit: None }
    }

    pub fn binary(name: impl Into<String>) -> Self {
        Self::new(name, ColumnKind::Binary)
    }

    pub fn numerical(name: impl Into<String>) -> Self {
        Self::new(name, ColumnKind::Numerical)
    }

    pub fn text(name: impl Into<String>) -> Self {
        Self::new(name, ColumnKind::Text)
    }

    pub fn categorical<S: Into<String>>(name: impl Into<String>, categories: impl IntoIterator<Item = S>) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Categorical,
            categories: categories.into_iter().map(Into::into).collect(),
            unit: None,
        }
    }

    pub fn with_unit(mut self, unit: impl Into<String>) -> Self {
        self.unit = Some(unit.into());
        self
    }

    pub fn category_index(&self, value: &str) -> Option<usize> {
        self.categories.iter().position(|c| c == value)
    }
}

/// One table cell. Binary and numerical columns hold `Num`; categorical and
/// text columns hold `Str`. The empty CSV field maps to `Missing`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Cell {
    Missing,
    Num(f64),
    Str(String),
}

impl Cell {
    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Cell::Str(s) => Some(s),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    Binary,
    Multiclass,
    Regression,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Target {
    pub column: String,
    pub kind: TargetKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum LabelError {
    #[error("dataset has no prediction target")]
    NoTarget,
    #[error("target `{column}` is {kind:?}, expected a binary target")]
    NotBinary { column: String, kind: TargetKind },
    #[error("target column `{0}` is not in the schema")]
    UnknownColumn(String),
    #[error("row {row}: target value is missing or not 0/1")]
    BadLabel { row: usize },
}

/// Schema-typed rows with an optional prediction target.
///
/// The target column is part of `schema` and `rows`; [`feature_columns`]
/// yields every other column.
///
/// [`feature_columns`]: TabularDataset::feature_columns
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabularDataset {
    pub schema: Vec<ColumnSpec>,
    pub rows: Vec<Vec<Cell>>,
    pub target: Option<Target>,
}

impl TabularDataset {
    pub fn new(schema: Vec<ColumnSpec>, rows: Vec<Vec<Cell>>, target: Option<Target>) -> Self {
        Self { schema, rows, target }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.schema.iter().position(|c| c.name == name)
    }

    pub fn target_index(&self) -> Option<usize> {
        self.target.as_ref().and_then(|t| self.column_index(&t.column))
    }

    pub fn feature_columns(&self) -> impl Iterator<Item = (usize, &ColumnSpec)> {
        let target = self.target_index();
        self.schema.iter().enumerate().filter(move |(i, _)| Some(*i) != target)
    }

    /// 0/1 labels of a binary target.
    pub fn binary_labels(&self) -> Result<Vec<u8>, LabelError> {
        let target = self.target.as_ref().ok_or(LabelError::NoTarget)?;
        if target.kind != TargetKind::Binary {
            return Err(LabelError::NotBinary { column: target.column.clone(), kind: target.kind });
        }
        let idx = self.target_index().ok_or_else(|| LabelError::UnknownColumn(target.column.clone()))?;
        self.rows
            .iter()
            .enumerate()
            .map(|(row, cells)| match cells.get(idx) {
                Some(Cell::Num(v)) if *v == 0.0 => Ok(0),
                Some(Cell::Num(v)) if *v == 1.0 => Ok(1),
                _ => Err(LabelError::BadLabel { row }),
            })
            .collect()
    }

    /// Fraction of positive labels for a binary target.
    pub fn positive_ratio(&self) -> Option<f64> {
        let labels = self.binary_labels().ok()?;
        if labels.is_empty() {
            return None;
        }
        Some(labels.iter().map(|&y| f64::from(y)).sum::<f64>() / labels.len() as f64)
    }

    /// Same schema and target, rows picked by index in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        Self {
            schema: self.schema.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            target: self.target.clone(),
        }
    }

    pub fn with_rows(&self, rows: Vec<Vec<Cell>>) -> Self {
        Self { schema: self.schema.clone(), rows, target: self.target.clone() }
    }
}
