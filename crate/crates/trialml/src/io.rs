//! On-disk formats.
//!
//! Tables are UTF-8 CSV with a mandatory header and `""` as the missing
//! token, optionally described by a sidecar `<file>.schema.json`. Sequential
//! datasets are line-delimited JSON: one vocabulary header object, then one
//! record per line. Writers are canonical, so load → write → load is
//! byte-identical.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use trialml_core::audit::FidelityPair;
use trialml_core::data_model::{
    infer_schema, parse_cell, Cell, CellParseError, ColumnKind, ColumnSpec, EventType, EventVocabulary,
    RelevanceJudgment, SequentialDataset, SequentialPatientRecord, TabularDataset, Target, TargetKind, TrialCorpus,
    TrialDocument, Validate, ValidationReport, Visit,
};
use trialml_core::demo_data::LABEL_COLUMN;
use trialml_core::metrics::{GroupDistribution, SiteSelectionCase};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{}: {message}", path.display())]
    Csv { path: PathBuf, message: String },
    #[error("{}: row {row}: expected {expected} fields, found {found}", path.display())]
    RowWidth { path: PathBuf, row: usize, expected: usize, found: usize },
    #[error("{}: row {row}: {source}", path.display())]
    Cell { path: PathBuf, row: usize, source: CellParseError },
    #[error("{}: row {row}, column `{column}`: {value:?} is not a declared category", path.display())]
    UnknownCategory { path: PathBuf, row: usize, column: String, value: String },
    #[error("{}: line {line}: {message}", path.display())]
    Syntax { path: PathBuf, line: usize, message: String },
    #[error("{}: schema: {message}", path.display())]
    Schema { path: PathBuf, message: String },
    #[error("{}: {first} ({count} violation(s) in total)", path.display())]
    Invalid { path: PathBuf, first: String, count: usize },
}

impl IoError {
    /// True when the input file does not exist.
    pub fn is_not_found(&self) -> bool {
        matches!(self, IoError::Read { source, .. } if source.kind() == std::io::ErrorKind::NotFound)
    }

    pub fn path(&self) -> &Path {
        match self {
            IoError::Read { path, .. }
            | IoError::Write { path, .. }
            | IoError::Csv { path, .. }
            | IoError::RowWidth { path, .. }
            | IoError::Cell { path, .. }
            | IoError::UnknownCategory { path, .. }
            | IoError::Syntax { path, .. }
            | IoError::Schema { path, .. }
            | IoError::Invalid { path, .. } => path,
        }
    }
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>, IoError> {
    fs::read(path).map_err(|source| IoError::Read { path: path.to_path_buf(), source })
}

fn read_text(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Read { path: path.to_path_buf(), source })
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let err = |source| IoError::Write { path: path.to_path_buf(), source };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(err)?;
    }
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp-{}", std::process::id()));
    let result = fs::File::create(&tmp).and_then(|mut f| {
        f.write_all(bytes)?;
        f.sync_all()
    });
    if let Err(e) = result.and_then(|()| fs::rename(&tmp, path)) {
        let _ = fs::remove_file(&tmp);
        return Err(err(e));
    }
    Ok(())
}

pub fn invalid(path: &Path, report: &ValidationReport) -> IoError {
    IoError::Invalid { path: path.to_path_buf(), first: report.violations[0].to_string(), count: report.len() }
}

// ---------------------------------------------------------------------------
// Tabular CSV

/// A column entry of the schema sidecar.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SidecarColumn {
    kind: ColumnKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    categories: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    unit: Option<String>,
    /// Present on the prediction target only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target: Option<TargetKind>,
}

/// Column specs in file order plus the prediction target.
#[derive(Clone, Debug, PartialEq)]
pub struct TableSchema {
    pub columns: Vec<ColumnSpec>,
    pub target: Option<Target>,
}

impl TableSchema {
    /// Marks a binary `label` column as the binary target.
    fn with_default_target(columns: Vec<ColumnSpec>) -> Self {
        let target = columns
            .iter()
            .find(|c| c.name == LABEL_COLUMN && c.kind == ColumnKind::Binary)
            .map(|c| Target { column: c.name.clone(), kind: TargetKind::Binary });
        Self { columns, target }
    }
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    let mut name = csv.as_os_str().to_owned();
    name.push(".schema.json");
    PathBuf::from(name)
}

/// Sidecar object with keys in column order.
pub fn schema_to_json(schema: &TableSchema) -> Vec<u8> {
    let mut out = String::from("{\n");
    for (i, col) in schema.columns.iter().enumerate() {
        let target = schema.target.as_ref().filter(|t| t.column == col.name).map(|t| t.kind);
        let entry =
            SidecarColumn { kind: col.kind, categories: col.categories.clone(), unit: col.unit.clone(), target };
        let key = serde_json::to_string(&col.name).expect("string serializes");
        let value = serde_json::to_string(&entry).expect("sidecar entry serializes");
        out.push_str(&format!("  {key}: {value}"));
        out.push_str(if i + 1 < schema.columns.len() { ",\n" } else { "\n" });
    }
    out.push_str("}\n");
    out.into_bytes()
}

/// Parses a sidecar and orders its columns by `header`.
fn schema_from_json(path: &Path, text: &str, header: &[String]) -> Result<TableSchema, IoError> {
    let schema_err = |message: String| IoError::Schema { path: path.to_path_buf(), message };
    let mut entries: BTreeMap<String, SidecarColumn> =
        serde_json::from_str(text).map_err(|e| schema_err(e.to_string()))?;
    let mut columns = Vec::with_capacity(header.len());
    let mut target = None;
    for name in header {
        let entry = entries.remove(name).ok_or_else(|| schema_err(format!("column `{name}` is not described")))?;
        if let Some(kind) = entry.target {
            if target.is_some() {
                return Err(schema_err("more than one target column".into()));
            }
            target = Some(Target { column: name.clone(), kind });
        }
        columns.push(ColumnSpec {
            name: name.clone(),
            kind: entry.kind,
            categories: entry.categories,
            unit: entry.unit,
        });
    }
    if let Some(extra) = entries.keys().next() {
        return Err(schema_err(format!("column `{extra}` is not in the file")));
    }
    Ok(TableSchema { columns, target })
}

#[derive(Clone, Debug, Default)]
pub struct TabularOptions {
    /// Overrides the sidecar and inference.
    pub schema: Option<TableSchema>,
    /// Reject categorical values outside the declared categories instead of
    /// appending them.
    pub strict: bool,
}

fn read_csv_records(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), IoError> {
    let bytes = read_bytes(path)?;
    let csv_err = |e: csv::Error| IoError::Csv { path: path.to_path_buf(), message: e.to_string() };
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(bytes.as_slice());
    let header: Vec<String> = reader.headers().map_err(csv_err)?.iter().map(str::to_owned).collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(IoError::Csv { path: path.to_path_buf(), message: "missing header row".into() });
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        if record.len() != header.len() {
            return Err(IoError::RowWidth {
                path: path.to_path_buf(),
                row: i + 1,
                expected: header.len(),
                found: record.len(),
            });
        }
        rows.push(record.iter().map(str::to_owned).collect());
    }
    Ok((header, rows))
}

/// Loads a CSV table without checking dataset invariants. Data rows are
/// numbered from 1 in errors.
pub fn parse_tabular(path: &Path, options: &TabularOptions) -> Result<TabularDataset, IoError> {
    let (header, raw) = read_csv_records(path)?;
    let schema = match &options.schema {
        Some(s) => {
            let names: Vec<&str> = s.columns.iter().map(|c| c.name.as_str()).collect();
            if names != header.iter().map(String::as_str).collect::<Vec<_>>() {
                return Err(IoError::Schema {
                    path: path.to_path_buf(),
                    message: "header does not match the given schema".into(),
                });
            }
            s.clone()
        }
        None => {
            let sidecar = sidecar_path(path);
            if sidecar.exists() {
                schema_from_json(&sidecar, &read_text(&sidecar)?, &header)?
            } else {
                TableSchema::with_default_target(infer_schema(&header, &raw))
            }
        }
    };
    let mut columns = schema.columns;
    let mut rows = Vec::with_capacity(raw.len());
    for (i, fields) in raw.iter().enumerate() {
        let mut cells = Vec::with_capacity(fields.len());
        for (field, spec) in fields.iter().zip(columns.iter_mut()) {
            let cell = parse_cell(field, spec).map_err(|source| IoError::Cell {
                path: path.to_path_buf(),
                row: i + 1,
                source,
            })?;
            if let (ColumnKind::Categorical, Cell::Str(v)) = (spec.kind, &cell) {
                if spec.category_index(v).is_none() {
                    if options.strict {
                        return Err(IoError::UnknownCategory {
                            path: path.to_path_buf(),
                            row: i + 1,
                            column: spec.name.clone(),
                            value: v.clone(),
                        });
                    }
                    spec.categories.push(v.clone());
                }
            }
            cells.push(cell);
        }
        rows.push(cells);
    }
    Ok(TabularDataset::new(columns, rows, schema.target))
}

/// [`parse_tabular`] followed by validation.
pub fn load_tabular(path: &Path, options: &TabularOptions) -> Result<TabularDataset, IoError> {
    let data = parse_tabular(path, options)?;
    let report = data.validate();
    if !report.is_empty() {
        return Err(invalid(path, &report));
    }
    Ok(data)
}

fn cell_text(cell: &Cell) -> String {
    match cell {
        Cell::Missing => String::new(),
        Cell::Num(v) => v.to_string(),
        Cell::Str(s) => s.clone(),
    }
}

pub fn tabular_to_csv(data: &TabularDataset) -> Vec<u8> {
    let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    writer.write_record(data.schema.iter().map(|c| c.name.as_str())).expect("in-memory write");
    for row in &data.rows {
        writer.write_record(row.iter().map(cell_text)).expect("in-memory write");
    }
    writer.into_inner().expect("in-memory flush")
}

pub fn table_schema(data: &TabularDataset) -> TableSchema {
    TableSchema { columns: data.schema.clone(), target: data.target.clone() }
}

/// CSV bytes and sidecar bytes.
pub fn tabular_files(data: &TabularDataset) -> (Vec<u8>, Vec<u8>) {
    (tabular_to_csv(data), schema_to_json(&table_schema(data)))
}

/// Writes the CSV and its sidecar.
pub fn write_tabular(path: &Path, data: &TabularDataset) -> Result<(), IoError> {
    let (csv, schema) = tabular_files(data);
    write_atomic(path, &csv)?;
    write_atomic(&sidecar_path(path), &schema)
}

// ---------------------------------------------------------------------------
// Sequential JSONL

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Vocabularies {
    medication: Vec<String>,
    adverse_event: Vec<String>,
    treatment: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SequentialHeader {
    voc: Vocabularies,
    #[serde(default)]
    baseline: Vec<ColumnSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max_visits: Option<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VisitLine {
    #[serde(default)]
    medication: Vec<u32>,
    #[serde(default)]
    adverse_event: Vec<u32>,
    #[serde(default)]
    treatment: Vec<u32>,
}

/// Baseline cell as it appears in `x`: number, string or `null`.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum JsonCell {
    Null(()),
    Num(f64),
    Str(String),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordLine {
    id: String,
    v: Vec<VisitLine>,
    #[serde(default)]
    x: Vec<JsonCell>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    y: Option<u8>,
}

fn to_cell(c: JsonCell) -> Cell {
    match c {
        JsonCell::Null(()) => Cell::Missing,
        JsonCell::Num(v) => Cell::Num(v),
        JsonCell::Str(s) => Cell::Str(s),
    }
}

fn from_cell(c: &Cell) -> JsonCell {
    match c {
        Cell::Missing => JsonCell::Null(()),
        Cell::Num(v) => JsonCell::Num(*v),
        Cell::Str(s) => JsonCell::Str(s.clone()),
    }
}

/// Loads a sequential file without checking dataset invariants.
pub fn parse_sequential(path: &Path) -> Result<SequentialDataset, IoError> {
    let text = read_text(path)?;
    let syntax = |line: usize, message: String| IoError::Syntax { path: path.to_path_buf(), line, message };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines.next().ok_or_else(|| syntax(1, "missing vocabulary header".into()))?;
    let header: SequentialHeader =
        serde_json::from_str(first).map_err(|e| syntax(1, format!("vocabulary header: {e}")))?;
    let mut records = Vec::new();
    for (i, line) in lines {
        let r: RecordLine = serde_json::from_str(line).map_err(|e| syntax(i + 1, e.to_string()))?;
        records.push(SequentialPatientRecord {
            patient_id: r.id,
            baseline: r.x.into_iter().map(to_cell).collect(),
            visits: r.v.into_iter().map(|v| Visit::new(v.medication, v.adverse_event, v.treatment)).collect(),
            label: r.y,
        });
    }
    Ok(SequentialDataset {
        vocabularies: [
            EventVocabulary::new(EventType::Medication, header.voc.medication),
            EventVocabulary::new(EventType::AdverseEvent, header.voc.adverse_event),
            EventVocabulary::new(EventType::Treatment, header.voc.treatment),
        ],
        baseline_schema: header.baseline,
        max_visits: header.max_visits,
        records,
    })
}

/// [`parse_sequential`] followed by validation; out-of-range codes and
/// duplicate ids are reported with the patient and visit.
pub fn load_sequential(path: &Path) -> Result<SequentialDataset, IoError> {
    let data = parse_sequential(path)?;
    let report = data.validate();
    if !report.is_empty() {
        return Err(invalid(path, &report));
    }
    Ok(data)
}

pub fn sequential_to_jsonl(data: &SequentialDataset) -> Vec<u8> {
    let header = SequentialHeader {
        voc: Vocabularies {
            medication: data.vocabularies[0].codes.clone(),
            adverse_event: data.vocabularies[1].codes.clone(),
            treatment: data.vocabularies[2].codes.clone(),
        },
        baseline: data.baseline_schema.clone(),
        max_visits: data.max_visits,
    };
    let mut out = serde_json::to_vec(&header).expect("header serializes");
    out.push(b'\n');
    for r in &data.records {
        let line = RecordLine {
            id: r.patient_id.clone(),
            v: r.visits
                .iter()
                .map(|v| VisitLine {
                    medication: v.codes(EventType::Medication).to_vec(),
                    adverse_event: v.codes(EventType::AdverseEvent).to_vec(),
                    treatment: v.codes(EventType::Treatment).to_vec(),
                })
                .collect(),
            x: r.baseline.iter().map(from_cell).collect(),
            y: r.label,
        };
        serde_json::to_writer(&mut out, &line).expect("record serializes");
        out.push(b'\n');
    }
    out
}

pub fn write_sequential(path: &Path, data: &SequentialDataset) -> Result<(), IoError> {
    write_atomic(path, &sequential_to_jsonl(data))
}

// ---------------------------------------------------------------------------
// Trial corpus and relevance judgments

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, IoError> {
    let text = read_text(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| IoError::Syntax {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

fn to_jsonl<T: Serialize>(items: &[T]) -> Vec<u8> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, item).expect("record serializes");
        out.push(b'\n');
    }
    out
}

pub fn parse_corpus(path: &Path) -> Result<TrialCorpus, IoError> {
    read_jsonl::<TrialDocument>(path).map(TrialCorpus::new)
}

pub fn load_corpus(path: &Path) -> Result<TrialCorpus, IoError> {
    let corpus = parse_corpus(path)?;
    let report = corpus.validate();
    if !report.is_empty() {
        return Err(invalid(path, &report));
    }
    Ok(corpus)
}

pub fn corpus_to_jsonl(corpus: &TrialCorpus) -> Vec<u8> {
    to_jsonl(&corpus.documents)
}

pub fn parse_qrels(path: &Path) -> Result<Vec<RelevanceJudgment>, IoError> {
    read_jsonl(path)
}

pub fn load_qrels(path: &Path) -> Result<Vec<RelevanceJudgment>, IoError> {
    let qrels = parse_qrels(path)?;
    let report = qrels.validate();
    if !report.is_empty() {
        return Err(invalid(path, &report));
    }
    Ok(qrels)
}

pub fn qrels_to_jsonl(qrels: &[RelevanceJudgment]) -> Vec<u8> {
    to_jsonl(qrels)
}

// ---------------------------------------------------------------------------
// Site-selection cases and fidelity pairs

const SITE_HEADER: [&str; 9] = ["trial_id", "max_enrollment", "model_enrollment", "p1", "p2", "p3", "p4", "p5", "p6"];

pub fn load_sites(path: &Path) -> Result<Vec<SiteSelectionCase>, IoError> {
    let (header, rows) = read_csv_records(path)?;
    if header != SITE_HEADER {
        return Err(IoError::Schema {
            path: path.to_path_buf(),
            message: format!("expected header {}", SITE_HEADER.join(",")),
        });
    }
    let bad = |row: usize, message: String| IoError::Syntax { path: path.to_path_buf(), line: row + 1, message };
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            let num = |j: usize| {
                r[j].trim().parse::<f64>().map_err(|_| bad(i + 1, format!("`{}` is not a number", SITE_HEADER[j])))
            };
            let mut p = [0.0; 6];
            for (k, slot) in p.iter_mut().enumerate() {
                *slot = num(3 + k)?;
            }
            Ok(SiteSelectionCase {
                trial_id: r[0].clone(),
                max_enrollment: num(1)?,
                model_enrollment: num(2)?,
                groups: GroupDistribution::new(p).map_err(|e| bad(i + 1, e.to_string()))?,
            })
        })
        .collect()
}

pub fn sites_to_csv(cases: &[SiteSelectionCase]) -> Vec<u8> {
    let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    writer.write_record(SITE_HEADER).expect("in-memory write");
    for c in cases {
        let mut row = vec![c.trial_id.clone(), c.max_enrollment.to_string(), c.model_enrollment.to_string()];
        row.extend(c.groups.probabilities().iter().map(f64::to_string));
        writer.write_record(&row).expect("in-memory write");
    }
    writer.into_inner().expect("in-memory flush")
}

/// Scatter data: one `feature,real_dp,synthetic_dp` row per feature.
pub fn fidelity_pairs_to_csv(pairs: &[FidelityPair]) -> Vec<u8> {
    let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    writer.write_record(["feature", "real_dp", "synthetic_dp"]).expect("in-memory write");
    for p in pairs {
        writer
            .write_record([p.feature.clone(), p.real_dp.to_string(), p.synthetic_dp.to_string()])
            .expect("in-memory write");
    }
    writer.into_inner().expect("in-memory flush")
}
