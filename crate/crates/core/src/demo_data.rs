//! Seeded generators for demo datasets that reproduce published summary
//! statistics (row counts, column-type counts, positive ratios, visit and
//! vocabulary sizes) without any record-level data.
//!
//! Every generator is a pure function of its spec, seed included.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use chrono::NaiveDate;
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal, Zipf};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data_model::{
    Cell, ColumnSpec, EventType, EventVocabulary, JudgedCandidate, Phase, RelevanceJudgment, Section,
    SequentialDataset, SequentialPatientRecord, TabularDataset, Target, TargetKind, TrialCorpus, TrialDocument, Visit,
};
use crate::math;
use crate::metrics::{GroupDistribution, SiteSelectionCase};
use crate::rng::{substream, StreamRng};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum DemoSpecError {
    #[error("positive_ratio must lie strictly between 0 and 1, got {0}")]
    PositiveRatio(f64),
    #[error("signal_strength must be finite and nonnegative, got {0}")]
    Signal(f64),
    #[error("max_visits must be at least 1")]
    MaxVisits,
    #[error("every vocabulary needs at least one code")]
    EmptyVocabulary,
    #[error("popularity_skew must be finite and nonnegative, got {0}")]
    Skew(f64),
    #[error("mean_visits {mean} must lie in [1, {max}]")]
    MeanVisits { mean: f64, max: usize },
    #[error("{relevant} relevant out of {candidates} candidates per query is not possible")]
    Judgments { relevant: usize, candidates: usize },
}

/// Name of the label column in generated tables.
pub const LABEL_COLUMN: &str = "label";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabularDemoSpec {
    pub n_rows: usize,
    pub n_categorical: usize,
    pub n_binary: usize,
    pub n_numerical: usize,
    pub positive_ratio: f64,
    /// Scale of the planted linear score against unit logistic noise; 0
    /// makes labels independent of features.
    pub signal_strength: f64,
    pub seed: u64,
}

/// Outcome-prediction trials: (id, rows, categorical, binary, numerical, positive ratio).
pub const TABULAR_PRESETS: [(&str, usize, usize, usize, usize, f64); 7] = [
    ("nct00041119", 3871, 5, 8, 2, 0.07),
    ("nct00174655", 994, 3, 31, 15, 0.02),
    ("nct00312208", 1651, 5, 12, 6, 0.19),
    ("nct00079274", 2968, 5, 8, 3, 0.12),
    ("nct00003299", 587, 2, 11, 4, 0.94),
    ("nct00694382", 1604, 1, 29, 11, 0.45),
    ("nct03041311", 53, 2, 11, 13, 0.64),
];

impl TabularDemoSpec {
    pub fn preset(name: &str, seed: u64) -> Option<Self> {
        let name = name.to_ascii_lowercase();
        TABULAR_PRESETS.iter().find(|p| p.0 == name).map(|&(_, n_rows, c, b, nu, ratio)| Self {
            n_rows,
            n_categorical: c,
            n_binary: b,
            n_numerical: nu,
            positive_ratio: ratio,
            signal_strength: 1.0,
            seed,
        })
    }

    /// Two numerical columns whose labels are a threshold of a linear score.
    pub fn separable(n_rows: usize, seed: u64) -> Self {
        Self { n_rows, n_categorical: 0, n_binary: 0, n_numerical: 2, positive_ratio: 0.5, signal_strength: 1e4, seed }
    }

    pub fn check(&self) -> Result<(), DemoSpecError> {
        if !(self.positive_ratio > 0.0 && self.positive_ratio < 1.0) {
            return Err(DemoSpecError::PositiveRatio(self.positive_ratio));
        }
        if !(self.signal_strength >= 0.0 && self.signal_strength.is_finite()) {
            return Err(DemoSpecError::Signal(self.signal_strength));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequentialDemoSpec {
    pub n_patients: usize,
    pub max_visits: usize,
    /// Medication, adverse-event and treatment vocabulary sizes.
    pub vocab_sizes: [usize; 3],
    pub positive_ratio: f64,
    /// Zipf exponent of code popularity.
    pub popularity_skew: f64,
    /// Target mean of the truncated visit-count law. `None` uses a Poisson
    /// rate of `max_visits / 2`.
    #[serde(default)]
    pub mean_visits: Option<f64>,
    pub seed: u64,
}

/// (id, patients, visits, max visits, vocab sizes, severe outcomes).
pub type SequentialPreset = (&'static str, usize, usize, usize, [usize; 3], usize);

pub const SEQUENTIAL_PRESETS: [SequentialPreset; 2] =
    [("nct00174655", 971, 8292, 14, [100, 56, 4], 122), ("nct01439568", 77, 353, 5, [100, 29, 3], 56)];

impl SequentialDemoSpec {
    pub fn preset(name: &str, seed: u64) -> Option<Self> {
        let name = name.to_ascii_lowercase();
        SEQUENTIAL_PRESETS.iter().find(|p| p.0 == name).map(|&(_, n, visits, max_visits, vocab_sizes, severe)| Self {
            n_patients: n,
            max_visits,
            vocab_sizes,
            positive_ratio: severe as f64 / n as f64,
            popularity_skew: 1.1,
            mean_visits: Some(visits as f64 / n as f64),
            seed,
        })
    }

    pub fn check(&self) -> Result<(), DemoSpecError> {
        if !(self.positive_ratio > 0.0 && self.positive_ratio < 1.0) {
            return Err(DemoSpecError::PositiveRatio(self.positive_ratio));
        }
        if self.max_visits == 0 {
            return Err(DemoSpecError::MaxVisits);
        }
        if self.vocab_sizes.contains(&0) {
            return Err(DemoSpecError::EmptyVocabulary);
        }
        if !(self.popularity_skew >= 0.0 && self.popularity_skew.is_finite()) {
            return Err(DemoSpecError::Skew(self.popularity_skew));
        }
        if let Some(mean) = self.mean_visits {
            if !(mean >= 1.0 && mean <= self.max_visits as f64) {
                return Err(DemoSpecError::MeanVisits { mean, max: self.max_visits });
            }
        }
        Ok(())
    }
}

fn normal(rng: &mut StreamRng) -> f64 {
    StandardNormal.sample(rng)
}

/// Standard logistic variate.
fn logistic(rng: &mut StreamRng) -> f64 {
    let u: f64 = rng.random_range(f64::EPSILON..1.0);
    math::ln(u / (1.0 - u))
}

fn poisson(rng: &mut StreamRng, lambda: f64) -> usize {
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda).map(|p| p.sample(rng) as usize).unwrap_or(0)
}

/// Indices of the `m` largest keys, ties to the lower index.
fn top_m(keys: &[f64], m: usize) -> Vec<bool> {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| keys[b].total_cmp(&keys[a]).then(a.cmp(&b)));
    let mut flags = vec![false; keys.len()];
    for &i in order.iter().take(m) {
        flags[i] = true;
    }
    flags
}

fn positives(n: usize, ratio: f64) -> usize {
    (math::round(ratio * n as f64) as usize).min(n)
}

fn standardize(values: &mut [f64]) {
    let n = values.len() as f64;
    if values.is_empty() {
        return;
    }
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let sd = math::sqrt(var);
    for v in values.iter_mut() {
        *v = if sd > 0.0 { (*v - mean) / sd } else { 0.0 };
    }
}

const LEVEL_NAMES: [&str; 6] = ["A", "B", "C", "D", "E", "F"];

enum Generator {
    Categorical { cuts: Vec<f64> },
    Binary { cut: f64 },
    Numerical { mean: f64, sd: f64 },
}

/// Tabular demo data from a two-factor latent Gaussian model.
///
/// Columns are `cat_*`, `bin_*`, `num_*` then `label`. Each feature is a
/// monotone map of a unit-variance latent; the label marks the `m` rows with
/// the largest `signal_strength · score + logistic noise`, where `score` is a
/// standardized random linear combination of the encoded features and
/// `m = round(positive_ratio · n_rows)`.
pub fn generate_demo_tabular(spec: &TabularDemoSpec) -> Result<TabularDataset, DemoSpecError> {
    spec.check()?;
    let mut rng = substream(spec.seed, "demo/tabular");
    let n_features = spec.n_categorical + spec.n_binary + spec.n_numerical;

    let mut schema = Vec::with_capacity(n_features + 1);
    let mut generators = Vec::with_capacity(n_features);
    let mut loadings = Vec::with_capacity(n_features);
    for j in 0..spec.n_categorical {
        let k = rng.random_range(3..=6usize);
        let weights: Vec<f64> = (0..k).map(|_| rng.random_range(0.5..1.5)).collect();
        let total: f64 = weights.iter().sum();
        let mut acc = 0.0;
        let cuts = weights[..k - 1]
            .iter()
            .map(|w| {
                acc += w / total;
                math::normal_quantile(acc)
            })
            .collect();
        schema.push(ColumnSpec::categorical(format!("cat_{j}"), LEVEL_NAMES[..k].iter().copied()));
        generators.push(Generator::Categorical { cuts });
    }
    for j in 0..spec.n_binary {
        let prevalence: f64 = rng.random_range(0.1..0.5);
        schema.push(ColumnSpec::binary(format!("bin_{j}")));
        generators.push(Generator::Binary { cut: math::normal_quantile(1.0 - prevalence) });
    }
    for j in 0..spec.n_numerical {
        let mean = math::round(rng.random_range(20.0..120.0));
        let sd = rng.random_range(2.0..15.0);
        schema.push(ColumnSpec::numerical(format!("num_{j}")));
        generators.push(Generator::Numerical { mean, sd });
    }
    for _ in 0..n_features {
        let a: f64 = rng.random_range(-0.6..0.6);
        let b: f64 = rng.random_range(-0.6..0.6);
        loadings.push((a, b, math::sqrt(1.0 - a * a - b * b)));
    }
    let beta: Vec<f64> = (0..n_features).map(|_| normal(&mut rng)).collect();
    schema.push(ColumnSpec::binary(LABEL_COLUMN));

    let mut rows: Vec<Vec<Cell>> = Vec::with_capacity(spec.n_rows);
    let mut encoded = vec![vec![0.0; spec.n_rows]; n_features];
    // Column-major fill: `i` indexes the inner vectors.
    #[allow(clippy::needless_range_loop)]
    for i in 0..spec.n_rows {
        let f1 = normal(&mut rng);
        let f2 = normal(&mut rng);
        let mut row = Vec::with_capacity(n_features + 1);
        for (j, generator) in generators.iter().enumerate() {
            let (a, b, c) = loadings[j];
            let latent = a * f1 + b * f2 + c * normal(&mut rng);
            let (cell, code) = match generator {
                Generator::Categorical { cuts } => {
                    let level = cuts.iter().filter(|&&t| t < latent).count();
                    (Cell::Str(LEVEL_NAMES[level].to_string()), level as f64)
                }
                Generator::Binary { cut } => {
                    let v = if latent > *cut { 1.0 } else { 0.0 };
                    (Cell::Num(v), v)
                }
                Generator::Numerical { mean, sd } => {
                    let v = math::round((mean + sd * latent) * 100.0) / 100.0;
                    (Cell::Num(v), v)
                }
            };
            encoded[j][i] = code;
            row.push(cell);
        }
        rows.push(row);
    }
    for column in encoded.iter_mut() {
        standardize(column);
    }
    let mut score: Vec<f64> =
        (0..spec.n_rows).map(|i| beta.iter().enumerate().map(|(j, b)| b * encoded[j][i]).sum()).collect();
    standardize(&mut score);
    let keys: Vec<f64> = score.iter().map(|s| spec.signal_strength * s + logistic(&mut rng)).collect();
    let labels = top_m(&keys, positives(spec.n_rows, spec.positive_ratio));
    for (row, &y) in rows.iter_mut().zip(&labels) {
        row.push(Cell::Num(if y { 1.0 } else { 0.0 }));
    }
    Ok(TabularDataset::new(schema, rows, Some(Target { column: LABEL_COLUMN.to_string(), kind: TargetKind::Binary })))
}

/// `P(X = k | 1 ≤ X ≤ max)` for `X ~ Poisson(lambda)`, `k = 1..=max`.
fn truncated_poisson_pmf(lambda: f64, max: usize) -> Vec<f64> {
    let ln_lambda = math::ln(lambda);
    let mut log_p = Vec::with_capacity(max);
    let mut ln_fact = 0.0;
    for k in 1..=max {
        ln_fact += math::ln(k as f64);
        log_p.push(k as f64 * ln_lambda - ln_fact);
    }
    let peak = log_p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_p.iter().map(|l| math::exp(l - peak)).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

fn pmf_mean(pmf: &[f64]) -> f64 {
    pmf.iter().enumerate().map(|(i, p)| (i + 1) as f64 * p).sum()
}

/// Poisson rate whose truncation to `[1, max]` has the given mean.
pub fn rate_for_truncated_mean(mean: f64, max: usize) -> f64 {
    let (mut lo, mut hi) = (1e-9, 64.0 * max as f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if pmf_mean(&truncated_poisson_pmf(mid, max)) < mean {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn sample_index(cdf: &[f64], rng: &mut StreamRng) -> usize {
    let u: f64 = rng.random();
    cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1)
}

fn cumulative(pmf: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    pmf.iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect()
}

struct CodeSampler {
    zipf: Option<Zipf<f64>>,
}

impl CodeSampler {
    fn new(size: usize, skew: f64) -> Self {
        Self { zipf: Zipf::new(size as f64, skew).ok() }
    }

    /// Code index; 0 is the most popular.
    fn draw(&self, rng: &mut StreamRng) -> u32 {
        self.zipf.as_ref().map_or(0, |z| z.sample(rng) as u32 - 1)
    }

    /// Up to `count` distinct codes.
    fn draw_distinct(&self, rng: &mut StreamRng, count: usize, into: &mut Vec<u32>) {
        let target = into.len() + count;
        for _ in 0..64 * count {
            if into.len() >= target {
                break;
            }
            let c = self.draw(rng);
            if !into.contains(&c) {
                into.push(c);
            }
        }
    }
}

fn vocabulary(event_type: EventType, size: usize) -> EventVocabulary {
    let prefix = match event_type {
        EventType::Medication => "MED",
        EventType::AdverseEvent => "AE",
        EventType::Treatment => "TRT",
    };
    let width = if event_type == EventType::Treatment { 1 } else { 3 };
    EventVocabulary::new(event_type, (0..size).map(|i| format!("{prefix}_{i:0width$}")))
}

pub const STAGES: [&str; 4] = ["I", "II", "III", "IV"];

/// Sequential demo data driven by a latent per-patient severity.
///
/// Each patient has a visit count from the truncated Poisson law, one
/// treatment arm present at every visit, a recurring medication regimen plus
/// occasional extra medications, and an adverse-event rate that grows with
/// severity. Codes follow Zipf popularity with index 0 the most common. The
/// `m = round(positive_ratio · n)` patients with the largest
/// `1.5 · severity + logistic noise` are labelled 1. Baseline columns are
/// age, sex and stage, the first and last correlated with severity.
pub fn generate_demo_sequential(spec: &SequentialDemoSpec) -> Result<SequentialDataset, DemoSpecError> {
    spec.check()?;
    let mut rng = substream(spec.seed, "demo/sequential");
    let lambda = match spec.mean_visits {
        Some(mean) if spec.max_visits > 1 => rate_for_truncated_mean(mean, spec.max_visits),
        _ => spec.max_visits as f64 / 2.0,
    };
    let visit_cdf = cumulative(&truncated_poisson_pmf(lambda, spec.max_visits));
    let [n_med, n_ae, n_trt] = spec.vocab_sizes;
    let meds = CodeSampler::new(n_med, spec.popularity_skew);
    let aes = CodeSampler::new(n_ae, spec.popularity_skew);
    let trts = CodeSampler::new(n_trt, spec.popularity_skew);
    let stage_cuts = [-0.8, 0.2, 1.0];

    let mut records = Vec::with_capacity(spec.n_patients);
    let mut keys = Vec::with_capacity(spec.n_patients);
    for i in 0..spec.n_patients {
        let severity = normal(&mut rng);
        let n_visits = sample_index(&visit_cdf, &mut rng) + 1;
        let arm = trts.draw(&mut rng);
        let mut regimen = Vec::new();
        let n_regimen = (2 + poisson(&mut rng, 2.0)).min(n_med);
        meds.draw_distinct(&mut rng, n_regimen, &mut regimen);
        let ae_rate = 0.8 * math::exp(0.6 * severity);
        let mut visits = Vec::with_capacity(n_visits);
        for _ in 0..n_visits {
            let mut med: Vec<u32> = regimen.iter().copied().filter(|_| rng.random_bool(0.6)).collect();
            let n_extra = poisson(&mut rng, 0.5);
            meds.draw_distinct(&mut rng, n_extra, &mut med);
            let mut ae = Vec::new();
            let n_ae_visit = poisson(&mut rng, ae_rate).min(n_ae);
            aes.draw_distinct(&mut rng, n_ae_visit, &mut ae);
            visits.push(Visit::new(med, ae, vec![arm]));
        }
        let age = (58.0 + 8.0 * (0.4 * severity + 0.9 * normal(&mut rng))).clamp(18.0, 90.0);
        let sex = if rng.random_bool(0.5) { 1.0 } else { 0.0 };
        let stage_latent = 0.8 * severity + 0.6 * normal(&mut rng);
        let stage = stage_cuts.iter().filter(|&&c| c < stage_latent).count();
        keys.push(1.5 * severity + logistic(&mut rng));
        records.push(SequentialPatientRecord {
            patient_id: format!("P{i:05}"),
            baseline: vec![Cell::Num(math::round(age)), Cell::Num(sex), Cell::Str(STAGES[stage].to_string())],
            visits,
            label: None,
        });
    }
    let labels = top_m(&keys, positives(spec.n_patients, spec.positive_ratio));
    for (r, y) in records.iter_mut().zip(labels) {
        r.label = Some(u8::from(y));
    }
    Ok(SequentialDataset {
        vocabularies: [
            vocabulary(EventType::Medication, n_med),
            vocabulary(EventType::AdverseEvent, n_ae),
            vocabulary(EventType::Treatment, n_trt),
        ],
        baseline_schema: vec![
            ColumnSpec::numerical("age").with_unit("years"),
            ColumnSpec::binary("sex"),
            ColumnSpec::categorical("stage", STAGES),
        ],
        max_visits: Some(spec.max_visits),
        records,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchDemoSpec {
    pub n_queries: usize,
    pub candidates_per_query: usize,
    pub relevant_per_query: usize,
    pub seed: u64,
}

impl Default for SearchDemoSpec {
    fn default() -> Self {
        Self { n_queries: 50, candidates_per_query: 10, relevant_per_query: 3, seed: 0 }
    }
}

const FILLER: [&str; 24] = [
    "patients",
    "study",
    "randomized",
    "treatment",
    "dose",
    "placebo",
    "efficacy",
    "safety",
    "adults",
    "therapy",
    "phase",
    "outcome",
    "response",
    "survival",
    "cohort",
    "controlled",
    "trial",
    "clinical",
    "evaluate",
    "weeks",
    "baseline",
    "progression",
    "assessment",
    "group",
];

fn filler(rng: &mut StreamRng, words: usize) -> String {
    (0..words).map(|_| FILLER[rng.random_range(0..FILLER.len())]).collect::<Vec<_>>().join(" ")
}

/// Query trials and judged candidates. Query `q` has a topic token shared
/// with exactly its relevant candidates; irrelevant candidates carry a
/// private distractor token. Every document also gets filler text, a phase
/// and a start date.
pub fn generate_demo_search(spec: &SearchDemoSpec) -> Result<(TrialCorpus, Vec<RelevanceJudgment>), DemoSpecError> {
    if spec.relevant_per_query > spec.candidates_per_query {
        return Err(DemoSpecError::Judgments {
            relevant: spec.relevant_per_query,
            candidates: spec.candidates_per_query,
        });
    }
    let mut rng = substream(spec.seed, "demo/search");
    let start = NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid date");
    let phases = [Phase::I, Phase::II, Phase::III, Phase::IV];
    let mut documents = Vec::new();
    let mut judgments = Vec::with_capacity(spec.n_queries);
    let make_doc = |id: String, key_token: &str, rng: &mut StreamRng| {
        let mut doc = TrialDocument::new(id)
            .with_section(Section::Title, format!("{} {}", key_token, filler(rng, 4)))
            .with_section(Section::Summary, filler(rng, 20))
            .with_section(Section::Conditions, key_token.to_string())
            .with_section(Section::Interventions, filler(rng, 3))
            .with_section(Section::InclusionCriteria, format!("{}\n{}", filler(rng, 6), filler(rng, 6)))
            .with_section(Section::ExclusionCriteria, filler(rng, 6));
        doc.phase = Some(phases[rng.random_range(0..4)]);
        doc.timestamp = start.checked_add_days(chrono::Days::new(rng.random_range(0..7000)));
        doc
    };
    let mut id = 0usize;
    let mut next_id = || {
        id += 1;
        format!("NCT{id:08}")
    };
    for q in 0..spec.n_queries {
        let topic = format!("topic{q:05}");
        let query_id = next_id();
        documents.push(make_doc(query_id.clone(), &topic, &mut rng));
        let mut relevant = vec![false; spec.candidates_per_query];
        let mut slots: Vec<usize> = (0..spec.candidates_per_query).collect();
        for k in 0..spec.relevant_per_query {
            let pick = rng.random_range(k..slots.len());
            slots.swap(k, pick);
            relevant[slots[k]] = true;
        }
        let mut candidates = Vec::with_capacity(spec.candidates_per_query);
        for (c, &rel) in relevant.iter().enumerate() {
            let cid = next_id();
            let token = if rel { topic.clone() } else { format!("distractor{q:05}x{c:03}") };
            documents.push(make_doc(cid.clone(), &token, &mut rng));
            candidates.push(JudgedCandidate { id: cid, label: u8::from(rel) });
        }
        judgments.push(RelevanceJudgment { query_id, candidates });
    }
    Ok((TrialCorpus { documents }, judgments))
}

/// Site-selection outcomes: each trial has a target enrollment, a
/// model-achieved enrollment at or below it, and a six-group mix.
pub fn generate_demo_sites(n_trials: usize, seed: u64) -> Vec<SiteSelectionCase> {
    let mut rng = substream(seed, "demo/sites");
    (0..n_trials)
        .map(|t| {
            let max = math::round(rng.random_range(50.0..2000.0));
            let model = math::round(max * rng.random_range(0.4..1.0));
            let mut counts = [0.0; 6];
            for c in counts.iter_mut() {
                *c = rng.random_range(0.05..1.0);
            }
            SiteSelectionCase {
                trial_id: format!("NCT{:08}", 90_000_000 + t),
                max_enrollment: max,
                model_enrollment: model,
                groups: GroupDistribution::from_counts(counts).expect("positive counts"),
            }
        })
        .collect()
}

/// Dimension-wise code probabilities per event type: the share of patients
/// whose record contains each code at least once.
pub fn code_prevalence(data: &SequentialDataset) -> BTreeMap<EventType, Vec<f64>> {
    let n = data.n_records().max(1) as f64;
    EventType::ALL
        .iter()
        .map(|&et| {
            let mut counts = vec![0.0; data.vocabulary(et).len()];
            for r in &data.records {
                for c in r.aggregated_codes(et) {
                    counts[c as usize] += 1.0;
                }
            }
            (et, counts.into_iter().map(|c| c / n).collect())
        })
        .collect()
}
