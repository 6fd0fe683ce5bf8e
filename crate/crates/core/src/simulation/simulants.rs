use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data_model::{EventType, SequentialDataset};
use crate::rng::substream;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum SimulantsError {
    #[error("at least 2 patients are needed, got {0}")]
    TooFewPatients(usize),
    #[error("k must be at least 1")]
    ZeroK,
    #[error("swap probability must lie in [0, 1], got {0}")]
    SwapProb(f64),
    #[error("plan was built for {plan} patients, dataset has {data}")]
    PlanMismatch { plan: usize, data: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatientDistance {
    /// Jaccard distance between the sets of (event type, code) pairs seen
    /// in any visit; two empty sets are at distance 0.
    Jaccard,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulantsPlan {
    pub k: usize,
    pub swap_prob: f64,
    pub distance: PatientDistance,
    /// Per patient, the `min(k, n − 1)` nearest other patients, closest
    /// first, ties to the lower index.
    pub neighbors: Vec<Vec<u32>>,
    pub seed: u64,
}

pub const DEFAULT_K: usize = 5;
pub const DEFAULT_SWAP_PROB: f64 = 0.5;

/// Sorted `(event type, code)` keys of every code a patient has.
fn code_set(data: &SequentialDataset, i: usize) -> Vec<u64> {
    let r = &data.records[i];
    let mut keys: Vec<u64> = EventType::ALL
        .iter()
        .flat_map(|&et| r.aggregated_codes(et).into_iter().map(move |c| ((et.index() as u64) << 32) | u64::from(c)))
        .collect();
    keys.sort_unstable();
    keys
}

pub fn jaccard_distance(a: &[u64], b: &[u64]) -> f64 {
    let (mut i, mut j, mut inter) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            core::cmp::Ordering::Less => i += 1,
            core::cmp::Ordering::Greater => j += 1,
            core::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        1.0 - inter as f64 / union as f64
    }
}

pub fn plan_simulants(
    data: &SequentialDataset,
    k: usize,
    swap_prob: f64,
    seed: u64,
) -> Result<SimulantsPlan, SimulantsError> {
    let n = data.n_records();
    if n < 2 {
        return Err(SimulantsError::TooFewPatients(n));
    }
    if k == 0 {
        return Err(SimulantsError::ZeroK);
    }
    if !(0.0..=1.0).contains(&swap_prob) {
        return Err(SimulantsError::SwapProb(swap_prob));
    }
    let sets: Vec<Vec<u64>> = (0..n).map(|i| code_set(data, i)).collect();
    let take = k.min(n - 1);
    let row = |i: usize| -> Vec<u32> {
        let mut d: Vec<(f64, usize)> =
            (0..n).filter(|&j| j != i).map(|j| (jaccard_distance(&sets[i], &sets[j]), j)).collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        d.into_iter().take(take).map(|(_, j)| j as u32).collect()
    };
    #[cfg(feature = "parallel")]
    let neighbors = (0..n).into_par_iter().map(row).collect();
    #[cfg(not(feature = "parallel"))]
    let neighbors = (0..n).map(row).collect();
    Ok(SimulantsPlan { k, swap_prob, distance: PatientDistance::Jaccard, neighbors, seed })
}

/// One synthetic patient per real patient. For every visit `t` and event
/// type, with probability `swap_prob` the slot is replaced by the same slot
/// of a uniformly chosen neighbor at visit `min(t, T_neighbor − 1)`.
/// Identifiers, baselines, labels and visit counts are kept.
pub fn simulants_generate(data: &SequentialDataset, plan: &SimulantsPlan) -> Result<SequentialDataset, SimulantsError> {
    if plan.neighbors.len() != data.n_records() {
        return Err(SimulantsError::PlanMismatch { plan: plan.neighbors.len(), data: data.n_records() });
    }
    let mut rng = substream(plan.seed, "simulants/generate");
    let mut records = Vec::with_capacity(data.n_records());
    for (i, source) in data.records.iter().enumerate() {
        let mut out = source.clone();
        let nbrs = &plan.neighbors[i];
        for (t, visit) in out.visits.iter_mut().enumerate() {
            for et in EventType::ALL {
                let u: f64 = rng.random();
                if u >= plan.swap_prob || nbrs.is_empty() {
                    continue;
                }
                let nb = &data.records[nbrs[rng.random_range(0..nbrs.len())] as usize];
                if let Some(last) = nb.visits.len().checked_sub(1) {
                    visit.set_codes(et, nb.visits[t.min(last)].codes(et).to_vec());
                }
            }
        }
        records.push(out);
    }
    Ok(data.with_records(records))
}

/// Control generator: keeps every record's visit count and per-slot code
/// count but draws codes uniformly without replacement from the vocabulary.
pub fn uniform_random_generate(data: &SequentialDataset, seed: u64) -> SequentialDataset {
    let mut rng = substream(seed, "uniform/generate");
    let sizes = data.vocab_sizes();
    let records = data
        .records
        .iter()
        .map(|source| {
            let mut out = source.clone();
            for visit in out.visits.iter_mut() {
                for et in EventType::ALL {
                    let count = visit.codes(et).len();
                    let codes: Vec<u32> = rand::seq::index::sample(&mut rng, sizes[et.index()], count)
                        .into_iter()
                        .map(|c| c as u32)
                        .collect();
                    visit.set_codes(et, codes);
                }
            }
            out
        })
        .collect();
    data.with_records(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_model::{EventVocabulary, SequentialPatientRecord, Visit};
    use alloc::format;
    use alloc::vec;

    fn toy(visits: Vec<Vec<Visit>>) -> SequentialDataset {
        SequentialDataset {
            vocabularies: [
                EventVocabulary::new(EventType::Medication, (0..6).map(|i| format!("m{i}"))),
                EventVocabulary::new(EventType::AdverseEvent, (0..6).map(|i| format!("a{i}"))),
                EventVocabulary::new(EventType::Treatment, ["t0", "t1"]),
            ],
            baseline_schema: vec![],
            max_visits: None,
            records: visits
                .into_iter()
                .enumerate()
                .map(|(i, v)| SequentialPatientRecord {
                    patient_id: format!("p{i}"),
                    baseline: vec![],
                    visits: v,
                    label: Some((i % 2) as u8),
                })
                .collect(),
        }
    }

    fn v(m: &[u32], a: &[u32], t: &[u32]) -> Visit {
        Visit::new(m.to_vec(), a.to_vec(), t.to_vec())
    }

    #[test]
    fn zero_swap_probability_is_identity() {
        let d = crate::demo_data::generate_demo_sequential(
            &crate::demo_data::SequentialDemoSpec::preset("nct01439568", 2).unwrap(),
        )
        .unwrap();
        let plan = plan_simulants(&d, 5, 0.0, 9).unwrap();
        assert_eq!(simulants_generate(&d, &plan).unwrap(), d);
        assert!(plan.neighbors.iter().enumerate().all(|(i, n)| n.len() == 5 && !n.contains(&(i as u32))));
    }

    #[test]
    fn identical_patients_stay_identical() {
        let d = toy(vec![vec![v(&[0, 1], &[2], &[0])]; 2]);
        let plan = plan_simulants(&d, 1, 0.7, 1).unwrap();
        let out = simulants_generate(&d, &plan).unwrap();
        assert_eq!(out, d);
    }

    #[test]
    fn full_swap_copies_clamped_neighbor_slots() {
        let d = toy(vec![
            vec![v(&[0], &[0], &[0]), v(&[1], &[], &[0]), v(&[2], &[1], &[0])],
            vec![v(&[0], &[0], &[0]), v(&[3], &[4], &[1])],
            vec![v(&[5], &[5], &[1])],
        ]);
        let plan = plan_simulants(&d, 1, 1.0, 4).unwrap();
        assert_eq!(plan.neighbors, vec![vec![1], vec![0], vec![1]]);
        let out = simulants_generate(&d, &plan).unwrap();
        for (i, r) in out.records.iter().enumerate() {
            let nb = &d.records[plan.neighbors[i][0] as usize];
            for (t, visit) in r.visits.iter().enumerate() {
                assert_eq!(visit, &nb.visits[t.min(nb.visits.len() - 1)]);
            }
            assert_eq!(r.visits.len(), d.records[i].visits.len());
            assert_eq!(r.label, d.records[i].label);
        }
    }

    #[test]
    fn jaccard_cases() {
        assert_eq!(jaccard_distance(&[], &[]), 0.0);
        assert_eq!(jaccard_distance(&[1, 2], &[2, 3]), 1.0 - 1.0 / 3.0);
        assert_eq!(jaccard_distance(&[1], &[2]), 1.0);
    }

    #[test]
    fn uniform_control_keeps_shape() {
        let d = crate::demo_data::generate_demo_sequential(
            &crate::demo_data::SequentialDemoSpec::preset("nct01439568", 2).unwrap(),
        )
        .unwrap();
        let u = uniform_random_generate(&d, 3);
        for (a, b) in d.records.iter().zip(&u.records) {
            assert_eq!(a.visits.len(), b.visits.len());
            for (x, y) in a.visits.iter().zip(&b.visits) {
                for et in EventType::ALL {
                    assert_eq!(x.codes(et).len(), y.codes(et).len());
                }
            }
        }
    }

    #[test]
    fn bad_plans_rejected() {
        let d = toy(vec![vec![v(&[0], &[], &[0])]]);
        assert_eq!(plan_simulants(&d, 1, 0.5, 0), Err(SimulantsError::TooFewPatients(1)));
        let d2 = toy(vec![vec![v(&[0], &[], &[0])]; 2]);
        assert_eq!(plan_simulants(&d2, 0, 0.5, 0), Err(SimulantsError::ZeroK));
        assert_eq!(plan_simulants(&d2, 1, 1.5, 0), Err(SimulantsError::SwapProb(1.5)));
    }
}
