//! Dataset types shared by every task, plus validation, splitting and
//! feature encoding.

mod encode;
mod ontology;
mod schema;
mod sequential;
mod split;
mod tabular;
pub mod text;
mod trial;
mod validate;

pub use encode::{encode_tabular, ColumnEncoding, EncodeError, FeatureMatrix, TabularEncoder, TEXT_HASH_DIM};
pub use ontology::{OntologyGraph, OntologyNode};
pub use schema::{infer_schema, parse_cell, CellParseError};
pub use sequential::{EventType, EventVocabulary, SequentialDataset, SequentialPatientRecord, Visit};
pub use split::{split_indices, stratified_split, Partition, SplitError};
pub use tabular::{Cell, ColumnKind, ColumnSpec, LabelError, TabularDataset, Target, TargetKind};
pub use trial::{JudgedCandidate, Phase, RelevanceJudgment, Section, TrialCorpus, TrialDocument};
pub use validate::{Location, Validate, ValidationReport, Violation};
