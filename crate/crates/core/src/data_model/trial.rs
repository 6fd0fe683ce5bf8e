use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Section {
    Title,
    Summary,
    Conditions,
    Interventions,
    InclusionCriteria,
    ExclusionCriteria,
}

impl Section {
    pub const ALL: [Section; 6] = [
        Section::Title,
        Section::Summary,
        Section::Conditions,
        Section::Interventions,
        Section::InclusionCriteria,
        Section::ExclusionCriteria,
    ];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Phase {
    I,
    II,
    III,
    IV,
}

/// A trial protocol reorganized into named sections.
///
/// Eligibility lives in the `InclusionCriteria` and `ExclusionCriteria`
/// sections, one criterion per line.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialDocument {
    pub nct_id: String,
    pub sections: BTreeMap<Section, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<Phase>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<NaiveDate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome_label: Option<u8>,
}

impl TrialDocument {
    pub fn new(nct_id: impl Into<String>) -> Self {
        Self { nct_id: nct_id.into(), sections: BTreeMap::new(), phase: None, timestamp: None, outcome_label: None }
    }

    pub fn with_section(mut self, section: Section, text: impl Into<String>) -> Self {
        self.sections.insert(section, text.into());
        self
    }

    pub fn section(&self, section: Section) -> Option<&str> {
        self.sections.get(&section).map(String::as_str)
    }

    pub fn inclusion_criteria(&self) -> Vec<&str> {
        criteria_lines(self.section(Section::InclusionCriteria))
    }

    pub fn exclusion_criteria(&self) -> Vec<&str> {
        criteria_lines(self.section(Section::ExclusionCriteria))
    }
}

fn criteria_lines(text: Option<&str>) -> Vec<&str> {
    text.map(|t| t.lines().map(str::trim).filter(|l| !l.is_empty()).collect()).unwrap_or_default()
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialCorpus {
    pub documents: Vec<TrialDocument>,
}

impl TrialCorpus {
    pub fn new(documents: Vec<TrialDocument>) -> Self {
        Self { documents }
    }

    pub fn get(&self, nct_id: &str) -> Option<&TrialDocument> {
        self.documents.iter().find(|d| d.nct_id == nct_id)
    }

    /// Dated trials grouped by start date, earliest first. Trials in one
    /// group started concurrently. Undated trials are left out.
    pub fn timestamp_slices(&self) -> Vec<(NaiveDate, Vec<&TrialDocument>)> {
        let mut groups: BTreeMap<NaiveDate, Vec<&TrialDocument>> = BTreeMap::new();
        for doc in &self.documents {
            if let Some(ts) = doc.timestamp {
                groups.entry(ts).or_default().push(doc);
            }
        }
        for docs in groups.values_mut() {
            docs.sort_by(|a, b| a.nct_id.cmp(&b.nct_id));
        }
        groups.into_iter().collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgedCandidate {
    pub id: String,
    pub label: u8,
}

/// Labeled candidate set for one query trial.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelevanceJudgment {
    pub query_id: String,
    pub candidates: Vec<JudgedCandidate>,
}

impl RelevanceJudgment {
    pub fn relevant_ids(&self) -> impl Iterator<Item = &str> {
        self.candidates.iter().filter(|c| c.label == 1).map(|c| c.id.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn criteria_split_on_lines() {
        let doc = TrialDocument::new("NCT1").with_section(Section::InclusionCriteria, "age >= 18\n\n  ECOG 0-1 \n");
        assert_eq!(doc.inclusion_criteria(), ["age >= 18", "ECOG 0-1"]);
        assert!(doc.exclusion_criteria().is_empty());
    }

    #[test]
    fn slices_group_by_date() {
        let d = |id: &str, y: i32| {
            let mut doc = TrialDocument::new(id);
            doc.timestamp = NaiveDate::from_ymd_opt(y, 1, 1);
            doc
        };
        let corpus = TrialCorpus::new(alloc::vec![d("B", 2012), d("A", 2010), d("C", 2010), TrialDocument::new("X")]);
        let slices = corpus.timestamp_slices();
        assert_eq!(slices.len(), 2);
        let ids: Vec<&str> = slices[0].1.iter().map(|d| d.nct_id.as_str()).collect();
        assert_eq!(ids, ["A", "C"]);
    }
}
