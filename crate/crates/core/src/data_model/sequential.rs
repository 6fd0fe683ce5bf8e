use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::tabular::{Cell, ColumnSpec, TabularDataset};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventType {
    Medication,
    AdverseEvent,
    Treatment,
}

impl EventType {
    pub const ALL: [EventType; 3] = [EventType::Medication, EventType::AdverseEvent, EventType::Treatment];

    pub fn index(self) -> usize {
        match self {
            EventType::Medication => 0,
            EventType::AdverseEvent => 1,
            EventType::Treatment => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EventType::Medication => "medication",
            EventType::AdverseEvent => "adverse_event",
            EventType::Treatment => "treatment",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventVocabulary {
    pub event_type: EventType,
    pub codes: Vec<String>,
}

impl EventVocabulary {
    pub fn new<S: Into<String>>(event_type: EventType, codes: impl IntoIterator<Item = S>) -> Self {
        Self { event_type, codes: codes.into_iter().map(Into::into).collect() }
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn index_of(&self, code: &str) -> Option<usize> {
        self.codes.iter().position(|c| c == code)
    }
}

/// Coded events recorded at one visit, one sorted index set per event type.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Visit {
    events: [Vec<u32>; 3],
}

impl Visit {
    pub fn new(medication: Vec<u32>, adverse_event: Vec<u32>, treatment: Vec<u32>) -> Self {
        let mut v = Self { events: [medication, adverse_event, treatment] };
        for set in &mut v.events {
            set.sort_unstable();
            set.dedup();
        }
        v
    }

    pub fn codes(&self, event_type: EventType) -> &[u32] {
        &self.events[event_type.index()]
    }

    pub fn set_codes(&mut self, event_type: EventType, mut codes: Vec<u32>) {
        codes.sort_unstable();
        codes.dedup();
        self.events[event_type.index()] = codes;
    }

    /// Raw slots, which may be unsorted if deserialized from untrusted input.
    pub(crate) fn raw(&self) -> &[Vec<u32>; 3] {
        &self.events
    }

    pub fn is_empty(&self) -> bool {
        self.events.iter().all(Vec::is_empty)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequentialPatientRecord {
    pub patient_id: String,
    /// Baseline features, one cell per column of the dataset's baseline schema.
    pub baseline: Vec<Cell>,
    /// Visits in chronological order.
    pub visits: Vec<Visit>,
    pub label: Option<u8>,
}

impl SequentialPatientRecord {
    /// Union of codes over all visits for one event type, sorted.
    pub fn aggregated_codes(&self, event_type: EventType) -> Vec<u32> {
        let mut all: Vec<u32> = self.visits.iter().flat_map(|v| v.codes(event_type).iter().copied()).collect();
        all.sort_unstable();
        all.dedup();
        all
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequentialDataset {
    /// One vocabulary per event type, in [`EventType::ALL`] order.
    pub vocabularies: [EventVocabulary; 3],
    pub baseline_schema: Vec<ColumnSpec>,
    /// Declared upper bound on visits per patient, if any.
    pub max_visits: Option<usize>,
    pub records: Vec<SequentialPatientRecord>,
}

impl SequentialDataset {
    pub fn vocabulary(&self, event_type: EventType) -> &EventVocabulary {
        &self.vocabularies[event_type.index()]
    }

    pub fn vocab_sizes(&self) -> [usize; 3] {
        [self.vocabularies[0].len(), self.vocabularies[1].len(), self.vocabularies[2].len()]
    }

    pub fn n_records(&self) -> usize {
        self.records.len()
    }

    pub fn total_visits(&self) -> usize {
        self.records.iter().map(|r| r.visits.len()).sum()
    }

    pub fn labels(&self) -> Option<Vec<u8>> {
        self.records.iter().map(|r| r.label).collect()
    }

    /// Baseline features as a target-free table.
    pub fn baseline_table(&self) -> TabularDataset {
        TabularDataset::new(
            self.baseline_schema.clone(),
            self.records.iter().map(|r| r.baseline.clone()).collect(),
            None,
        )
    }

    pub fn with_records(&self, records: Vec<SequentialPatientRecord>) -> Self {
        Self {
            vocabularies: self.vocabularies.clone(),
            baseline_schema: self.baseline_schema.clone(),
            max_visits: self.max_visits,
            records,
        }
    }

    pub fn select_records(&self, indices: &[usize]) -> Self {
        self.with_records(indices.iter().map(|&i| self.records[i].clone()).collect())
    }
}
