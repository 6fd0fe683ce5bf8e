//! Okapi BM25 retrieval over trial documents and the relevance-judgment
//! evaluation harness.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data_model::text::tokenize;
use crate::data_model::{RelevanceJudgment, Section, TrialCorpus, TrialDocument};
use crate::math;
use crate::metrics::{self, MetricValue};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum SearchError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("duplicate document id `{0}`")]
    DuplicateId(String),
    #[error("query `{query}`: judged document `{id}` is not in the index")]
    MissingDocument { query: String, id: String },
    #[error("query `{query}` has {got} candidates, at least {needed} are needed")]
    TooFewCandidates { query: String, got: usize, needed: usize },
    #[error("k must be at least 1")]
    ZeroK,
    #[error(transparent)]
    Metric(#[from] metrics::MetricError),
}

/// How document frequency becomes IDF.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdfVariant {
    /// `ln(1 + (N − n + 0.5) / (n + 0.5))`, always positive.
    PlusOne,
    /// `ln((N − n + 0.5) / (n + 0.5))`; negative values are replaced by
    /// `epsilon × mean IDF`.
    Floored,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
    pub epsilon: f64,
    pub idf: IdfVariant,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.5, b: 0.75, epsilon: 0.25, idf: IdfVariant::PlusOne }
    }
}

/// Per-section repeat counts folded into term frequencies.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldWeights(pub BTreeMap<Section, u32>);

impl Default for FieldWeights {
    fn default() -> Self {
        Self(Section::ALL.iter().map(|&s| (s, if s == Section::Title { 2 } else { 1 })).collect())
    }
}

impl FieldWeights {
    pub fn weight(&self, section: Section) -> u32 {
        self.0.get(&section).copied().unwrap_or(0)
    }

    /// Weighted term counts of a document.
    pub fn term_counts(&self, doc: &TrialDocument) -> BTreeMap<String, u32> {
        let mut counts = BTreeMap::new();
        for (&section, text) in &doc.sections {
            let w = self.weight(section);
            if w == 0 {
                continue;
            }
            for tok in tokenize(text) {
                *counts.entry(tok).or_insert(0) += w;
            }
        }
        counts
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub doc: u32,
    pub tf: u32,
}

/// Term → postings, with documents numbered in sorted-id order so the index
/// does not depend on insertion order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvertedIndex {
    pub params: Bm25Params,
    pub field_weights: FieldWeights,
    pub doc_ids: Vec<String>,
    pub doc_lengths: Vec<u32>,
    pub avg_doc_length: f64,
    pub postings: BTreeMap<String, Vec<Posting>>,
}

pub enum Query<'a> {
    Text(&'a str),
    Document(&'a TrialDocument),
    /// A document already in the index, by id.
    Indexed(&'a str),
}

pub fn build_index(
    corpus: &TrialCorpus,
    weights: &FieldWeights,
    params: Bm25Params,
) -> Result<InvertedIndex, SearchError> {
    let docs: Vec<(String, BTreeMap<String, u32>)> =
        corpus.documents.iter().map(|d| (d.nct_id.clone(), weights.term_counts(d))).collect();
    index_from_counts(docs, weights.clone(), params)
}

/// Index over raw `(id, text)` pairs, each token counted once.
pub fn build_index_from_texts(docs: &[(String, String)], params: Bm25Params) -> Result<InvertedIndex, SearchError> {
    let counted = docs.iter().map(|(id, text)| (id.clone(), count_tokens(text))).collect();
    index_from_counts(counted, FieldWeights::default(), params)
}

fn count_tokens(text: &str) -> BTreeMap<String, u32> {
    let mut counts = BTreeMap::new();
    for tok in tokenize(text) {
        *counts.entry(tok).or_insert(0) += 1;
    }
    counts
}

fn index_from_counts(
    mut docs: Vec<(String, BTreeMap<String, u32>)>,
    field_weights: FieldWeights,
    params: Bm25Params,
) -> Result<InvertedIndex, SearchError> {
    if docs.is_empty() {
        return Err(SearchError::EmptyCorpus);
    }
    docs.sort_by(|a, b| a.0.cmp(&b.0));
    if let Some(w) = docs.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(SearchError::DuplicateId(w[0].0.clone()));
    }
    let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
    let mut doc_lengths = Vec::with_capacity(docs.len());
    for (i, (_, counts)) in docs.iter().enumerate() {
        doc_lengths.push(counts.values().sum());
        for (term, &tf) in counts {
            postings.entry(term.clone()).or_default().push(Posting { doc: i as u32, tf });
        }
    }
    let total: u64 = doc_lengths.iter().map(|&l| u64::from(l)).sum();
    Ok(InvertedIndex {
        params,
        field_weights,
        avg_doc_length: total as f64 / docs.len() as f64,
        doc_ids: docs.into_iter().map(|(id, _)| id).collect(),
        doc_lengths,
        postings,
    })
}

impl InvertedIndex {
    pub fn n_docs(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn doc_index(&self, id: &str) -> Option<usize> {
        self.doc_ids.binary_search_by(|d| d.as_str().cmp(id)).ok()
    }

    fn raw_idf(&self, df: usize) -> f64 {
        let n = self.n_docs() as f64;
        let df = df as f64;
        match self.params.idf {
            IdfVariant::PlusOne => math::ln(1.0 + (n - df + 0.5) / (df + 0.5)),
            IdfVariant::Floored => math::ln((n - df + 0.5) / (df + 0.5)),
        }
    }

    fn mean_raw_idf(&self) -> f64 {
        if self.postings.is_empty() {
            return 0.0;
        }
        self.postings.values().map(|p| self.raw_idf(p.len())).sum::<f64>() / self.postings.len() as f64
    }

    pub fn idf(&self, term: &str) -> f64 {
        let Some(p) = self.postings.get(term) else { return 0.0 };
        let raw = self.raw_idf(p.len());
        if self.params.idf == IdfVariant::Floored && raw < 0.0 {
            self.params.epsilon * self.mean_raw_idf()
        } else {
            raw
        }
    }

    /// Weighted term counts of an indexed document.
    pub fn document_terms(&self, id: &str) -> Option<BTreeMap<String, u32>> {
        let idx = self.doc_index(id)? as u32;
        let mut out = BTreeMap::new();
        for (term, plist) in &self.postings {
            if let Ok(pos) = plist.binary_search_by(|p| p.doc.cmp(&idx)) {
                out.insert(term.clone(), plist[pos].tf);
            }
        }
        Some(out)
    }

    fn query_terms(&self, query: &Query<'_>) -> BTreeMap<String, u32> {
        match query {
            Query::Text(t) => count_tokens(t),
            Query::Document(d) => self.field_weights.term_counts(d),
            Query::Indexed(id) => self.document_terms(id).unwrap_or_default(),
        }
    }

    /// BM25 score of every document. Each query-term occurrence contributes
    /// once; terms are visited in sorted order.
    pub fn scores(&self, query: &Query<'_>) -> Vec<f64> {
        let mut scores = alloc::vec![0.0; self.n_docs()];
        let mean_idf = self.mean_raw_idf();
        let Bm25Params { k1, b, .. } = self.params;
        for (term, qtf) in self.query_terms(query) {
            let Some(plist) = self.postings.get(&term) else { continue };
            let mut idf = self.raw_idf(plist.len());
            if self.params.idf == IdfVariant::Floored && idf < 0.0 {
                idf = self.params.epsilon * mean_idf;
            }
            for p in plist {
                let tf = f64::from(p.tf);
                let len = f64::from(self.doc_lengths[p.doc as usize]);
                let denom = tf + k1 * (1.0 - b + b * len / self.avg_doc_length);
                scores[p.doc as usize] += f64::from(qtf) * idf * tf * (k1 + 1.0) / denom;
            }
        }
        scores
    }

    /// Top `k` documents with a nonzero score, best first, ties by id.
    pub fn search(&self, query: &Query<'_>, k: usize) -> Result<Vec<(String, f64)>, SearchError> {
        if k == 0 {
            return Err(SearchError::ZeroK);
        }
        let scores = self.scores(query);
        let mut hits: Vec<(usize, f64)> = scores.into_iter().enumerate().filter(|(_, s)| *s != 0.0).collect();
        hits.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        hits.truncate(k);
        Ok(hits.into_iter().map(|(i, s)| (self.doc_ids[i].clone(), s)).collect())
    }

    /// Ranks exactly the judged candidates of a query (scores of zero
    /// included), best first, ties by id.
    pub fn rank_candidates(&self, judgment: &RelevanceJudgment) -> Result<Vec<String>, SearchError> {
        let missing = |id: &str| SearchError::MissingDocument { query: judgment.query_id.clone(), id: id.to_string() };
        if self.doc_index(&judgment.query_id).is_none() {
            return Err(missing(&judgment.query_id));
        }
        let scores = self.scores(&Query::Indexed(&judgment.query_id));
        let mut ranked = Vec::with_capacity(judgment.candidates.len());
        for c in &judgment.candidates {
            let idx = self.doc_index(&c.id).ok_or_else(|| missing(&c.id))?;
            ranked.push((c.id.clone(), scores[idx]));
        }
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Ok(ranked.into_iter().map(|(id, _)| id).collect())
    }
}

/// Averages over queries of precision/recall at 1, 2 and 5 and nDCG at 5.
/// Queries without any relevant candidate have undefined recall and nDCG
/// and are left out of those two means.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    #[serde(rename = "prec@1")]
    pub prec_at_1: MetricValue,
    #[serde(rename = "prec@2")]
    pub prec_at_2: MetricValue,
    #[serde(rename = "prec@5")]
    pub prec_at_5: MetricValue,
    #[serde(rename = "rec@1")]
    pub rec_at_1: MetricValue,
    #[serde(rename = "rec@2")]
    pub rec_at_2: MetricValue,
    #[serde(rename = "rec@5")]
    pub rec_at_5: MetricValue,
    #[serde(rename = "ndcg@5")]
    pub ndcg_at_5: MetricValue,
    pub n_queries: usize,
    /// Queries whose recall/nDCG were undefined and excluded from the means.
    pub n_undefined: usize,
    /// What each query ranks: always the judged candidate set.
    pub ranking_scope: String,
}

pub const REPORT_CUTOFFS: [usize; 3] = [1, 2, 5];

/// Per-query metrics at [`REPORT_CUTOFFS`].
pub fn query_metrics(judgment: &RelevanceJudgment, ranked: &[String]) -> Result<Vec<metrics::RankingAtK>, SearchError> {
    let needed = REPORT_CUTOFFS[REPORT_CUTOFFS.len() - 1];
    if ranked.len() < needed {
        return Err(SearchError::TooFewCandidates { query: judgment.query_id.clone(), got: ranked.len(), needed });
    }
    let list = metrics::RankedList {
        ranked: ranked.to_vec(),
        relevant: judgment.relevant_ids().map(String::from).collect::<BTreeSet<_>>(),
        pool_size: judgment.candidates.len(),
    };
    Ok(metrics::ranking_metrics(&list, &REPORT_CUTOFFS)?)
}

/// Evaluates any ranker over a judgment set.
pub fn evaluate_rankings<F>(judgments: &[RelevanceJudgment], mut ranker: F) -> Result<SearchReport, SearchError>
where
    F: FnMut(&RelevanceJudgment) -> Result<Vec<String>, SearchError>,
{
    let mut prec = [0.0; 3];
    let mut rec = [0.0; 3];
    let mut ndcg5 = 0.0;
    let mut defined = 0usize;
    for j in judgments {
        let ranked = ranker(j)?;
        let per_k = query_metrics(j, &ranked)?;
        for (i, m) in per_k.iter().enumerate() {
            prec[i] += m.precision;
        }
        if let (Some(_), Some(n)) = (per_k[0].recall.value(), per_k[2].ndcg.value()) {
            defined += 1;
            for (i, m) in per_k.iter().enumerate() {
                rec[i] += m.recall.value().unwrap_or(0.0);
            }
            ndcg5 += n;
        }
    }
    let n = judgments.len();
    let avg = |sum: f64, count: usize| {
        if count == 0 {
            MetricValue::Undefined
        } else {
            MetricValue::Defined(sum / count as f64)
        }
    };
    Ok(SearchReport {
        prec_at_1: avg(prec[0], n),
        prec_at_2: avg(prec[1], n),
        prec_at_5: avg(prec[2], n),
        rec_at_1: avg(rec[0], defined),
        rec_at_2: avg(rec[1], defined),
        rec_at_5: avg(rec[2], defined),
        ndcg_at_5: avg(ndcg5, defined),
        n_queries: n,
        n_undefined: n - defined,
        ranking_scope: String::from("judged_candidates"),
    })
}

/// BM25 evaluation: each query ranks its judged candidates.
pub fn evaluate_search(index: &InvertedIndex, judgments: &[RelevanceJudgment]) -> Result<SearchReport, SearchError> {
    evaluate_rankings(judgments, |j| index.rank_candidates(j))
}
