use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use serde::{Deserialize, Serialize};

use super::ontology::OntologyGraph;
use super::sequential::{EventType, SequentialDataset};
use super::tabular::{Cell, ColumnKind, ColumnSpec, TabularDataset, TargetKind};
use super::trial::{RelevanceJudgment, TrialCorpus};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "scope")]
pub enum Location {
    Dataset,
    Column { column: String },
    Cell { row: usize, column: String },
    Record { patient_id: String, visit: Option<usize> },
    Vocabulary { event_type: EventType, code: Option<usize> },
    Document { id: String },
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Dataset => write!(f, "dataset"),
            Location::Column { column } => write!(f, "column `{column}`"),
            Location::Cell { row, column } => write!(f, "row {row}, column `{column}`"),
            Location::Record { patient_id, visit: Some(v) } => write!(f, "patient `{patient_id}`, visit {v}"),
            Location::Record { patient_id, visit: None } => write!(f, "patient `{patient_id}`"),
            Location::Vocabulary { event_type, code: Some(c) } => {
                write!(f, "{} vocabulary, code {c}", event_type.as_str())
            }
            Location::Vocabulary { event_type, code: None } => write!(f, "{} vocabulary", event_type.as_str()),
            Location::Document { id } => write!(f, "document `{id}`"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub location: Location,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

/// Invariant violations found in a dataset. Empty means valid.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }

    fn push(&mut self, location: Location, message: impl Into<String>) {
        self.violations.push(Violation { location, message: message.into() });
    }
}

pub trait Validate {
    fn validate(&self) -> ValidationReport;
}

fn check_schema(schema: &[ColumnSpec], report: &mut ValidationReport) {
    let mut names = BTreeSet::new();
    for col in schema {
        if !names.insert(col.name.as_str()) {
            report.push(Location::Column { column: col.name.clone() }, "duplicate column name");
        }
        match col.kind {
            ColumnKind::Categorical => {
                if col.categories.is_empty() {
                    report.push(
                        Location::Column { column: col.name.clone() },
                        "categorical column declares no categories",
                    );
                }
                let unique: BTreeSet<&String> = col.categories.iter().collect();
                if unique.len() != col.categories.len() {
                    report.push(Location::Column { column: col.name.clone() }, "duplicate category");
                }
                if col.categories.iter().any(String::is_empty) {
                    report.push(
                        Location::Column { column: col.name.clone() },
                        "empty category collides with the missing token",
                    );
                }
            }
            _ => {
                if !col.categories.is_empty() {
                    report.push(
                        Location::Column { column: col.name.clone() },
                        "categories declared on a non-categorical column",
                    );
                }
            }
        }
    }
}

fn check_cell(cell: &Cell, spec: &ColumnSpec) -> Option<String> {
    match (spec.kind, cell) {
        (_, Cell::Missing) => None,
        (ColumnKind::Binary, Cell::Num(v)) if *v == 0.0 || *v == 1.0 => None,
        (ColumnKind::Binary, other) => Some(format!("binary cell {other:?} is not 0/1")),
        (ColumnKind::Numerical, Cell::Num(v)) if v.is_finite() => None,
        (ColumnKind::Numerical, other) => Some(format!("numerical cell {other:?} is not a finite number")),
        (ColumnKind::Categorical, Cell::Str(s)) if spec.category_index(s).is_some() => None,
        (ColumnKind::Categorical, Cell::Str(s)) => Some(format!("category {s:?} is not declared")),
        (ColumnKind::Categorical, other) => Some(format!("categorical cell {other:?} is not a string")),
        (ColumnKind::Text, Cell::Str(_)) => None,
        (ColumnKind::Text, other) => Some(format!("text cell {other:?} is not a string")),
    }
}

fn check_rows<'a>(
    schema: &[ColumnSpec],
    rows: impl Iterator<Item = (Location, usize, &'a [Cell])>,
    report: &mut ValidationReport,
) {
    for (loc, row, cells) in rows {
        if cells.len() != schema.len() {
            report.push(loc, format!("row has {} cells, schema has {} columns", cells.len(), schema.len()));
            continue;
        }
        for (cell, spec) in cells.iter().zip(schema) {
            if let Some(msg) = check_cell(cell, spec) {
                report.push(Location::Cell { row, column: spec.name.clone() }, msg);
            }
        }
    }
}

impl Validate for TabularDataset {
    fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        check_schema(&self.schema, &mut report);
        check_rows(
            &self.schema,
            self.rows
                .iter()
                .enumerate()
                .map(|(i, r)| (Location::Cell { row: i, column: String::new() }, i, r.as_slice())),
            &mut report,
        );
        if let Some(target) = &self.target {
            match self.schema.iter().find(|c| c.name == target.column) {
                None => report
                    .push(Location::Column { column: target.column.clone() }, "target column is not in the schema"),
                Some(col) => {
                    let ok = matches!(
                        (target.kind, col.kind),
                        (TargetKind::Binary, ColumnKind::Binary)
                            | (TargetKind::Multiclass, ColumnKind::Categorical)
                            | (TargetKind::Regression, ColumnKind::Numerical)
                    );
                    if !ok {
                        report.push(
                            Location::Column { column: target.column.clone() },
                            format!("{:?} target on a {} column", target.kind, col.kind.as_str()),
                        );
                    }
                }
            }
        }
        report
    }
}

impl Validate for SequentialDataset {
    fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        for (slot, vocab) in self.vocabularies.iter().enumerate() {
            let event_type = EventType::ALL[slot];
            if vocab.event_type != event_type {
                report.push(
                    Location::Vocabulary { event_type, code: None },
                    format!("vocabulary in the {} slot is labeled {}", event_type.as_str(), vocab.event_type.as_str()),
                );
            }
            let mut seen = BTreeSet::new();
            for (i, code) in vocab.codes.iter().enumerate() {
                if code.is_empty() {
                    report.push(Location::Vocabulary { event_type, code: Some(i) }, "empty code");
                }
                if !seen.insert(code.as_str()) {
                    report.push(Location::Vocabulary { event_type, code: Some(i) }, format!("duplicate code {code:?}"));
                }
            }
        }
        check_schema(&self.baseline_schema, &mut report);
        if self.max_visits == Some(0) {
            report.push(Location::Dataset, "max_visits must be at least 1");
        }

        let sizes = self.vocab_sizes();
        let mut ids = BTreeSet::new();
        for (row, record) in self.records.iter().enumerate() {
            let rec_loc = |visit| Location::Record { patient_id: record.patient_id.clone(), visit };
            if !ids.insert(record.patient_id.as_str()) {
                report.push(rec_loc(None), "duplicate patient_id");
            }
            if record.visits.is_empty() {
                report.push(rec_loc(None), "record has no visits");
            }
            if let Some(max) = self.max_visits {
                if record.visits.len() > max {
                    report.push(
                        rec_loc(None),
                        format!("{} visits exceed the declared maximum {max}", record.visits.len()),
                    );
                }
            }
            if let Some(label) = record.label {
                if label > 1 {
                    report.push(rec_loc(None), format!("label {label} is not 0/1"));
                }
            }
            for (v, visit) in record.visits.iter().enumerate() {
                for (slot, codes) in visit.raw().iter().enumerate() {
                    let event_type = EventType::ALL[slot];
                    if codes.windows(2).any(|w| w[0] >= w[1]) {
                        report
                            .push(rec_loc(Some(v)), format!("{} codes are not sorted and unique", event_type.as_str()));
                    }
                    for &code in codes {
                        if code as usize >= sizes[slot] {
                            report.push(
                                rec_loc(Some(v)),
                                format!(
                                    "{} code index {code} out of range (vocabulary size {})",
                                    event_type.as_str(),
                                    sizes[slot]
                                ),
                            );
                        }
                    }
                }
            }
            if record.baseline.len() != self.baseline_schema.len() {
                report.push(
                    rec_loc(None),
                    format!(
                        "baseline has {} cells, schema has {} columns",
                        record.baseline.len(),
                        self.baseline_schema.len()
                    ),
                );
            } else {
                for (cell, spec) in record.baseline.iter().zip(&self.baseline_schema) {
                    if let Some(msg) = check_cell(cell, spec) {
                        report.push(Location::Cell { row, column: spec.name.clone() }, msg);
                    }
                }
            }
        }
        report
    }
}

impl Validate for TrialCorpus {
    fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let mut ids = BTreeSet::new();
        for doc in &self.documents {
            let loc = || Location::Document { id: doc.nct_id.clone() };
            if doc.nct_id.is_empty() {
                report.push(loc(), "empty nct_id");
            }
            if !ids.insert(doc.nct_id.as_str()) {
                report.push(loc(), "duplicate nct_id");
            }
            if let Some(label) = doc.outcome_label {
                if label > 1 {
                    report.push(loc(), format!("outcome label {label} is not 0/1"));
                }
            }
        }
        report
    }
}

impl Validate for [RelevanceJudgment] {
    fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        for j in self {
            let loc = || Location::Document { id: j.query_id.clone() };
            let mut ids = BTreeSet::new();
            for c in &j.candidates {
                if !ids.insert(c.id.as_str()) {
                    report.push(loc(), format!("candidate `{}` listed twice", c.id));
                }
                if c.label > 1 {
                    report.push(loc(), format!("candidate `{}` has non-binary label {}", c.id, c.label));
                }
            }
        }
        report
    }
}

impl Validate for OntologyGraph {
    fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let mut codes = BTreeSet::new();
        for node in &self.nodes {
            if !codes.insert(node.code.as_str()) {
                report.push(Location::Document { id: node.code.clone() }, "duplicate ontology code");
            }
        }
        for (child, parent) in &self.edges {
            for end in [child, parent] {
                if !codes.contains(end.as_str()) {
                    report.push(Location::Document { id: end.clone() }, "edge endpoint is not a declared node");
                }
            }
        }
        if let Some(code) = self.find_cycle() {
            report.push(Location::Document { id: code.into() }, "ontology contains a cycle");
        }
        report
    }
}
