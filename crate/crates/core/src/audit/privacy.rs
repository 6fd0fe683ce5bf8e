use alloc::vec::Vec;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{AuditError, PatientVectors};
use crate::math;
use crate::rng::substream;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

fn check_width(a: &PatientVectors, b: &PatientVectors) -> Result<(), AuditError> {
    if a.width != b.width {
        return Err(AuditError::WidthMismatch { left: a.width, right: b.width });
    }
    Ok(())
}

/// Number of coordinates where the vectors differ, counting stops past `limit`.
fn hamming_within(a: &[f64], b: &[f64], limit: usize) -> bool {
    let mut diff = 0usize;
    for (x, y) in a.iter().zip(b) {
        if x != y {
            diff += 1;
            if diff > limit {
                return false;
            }
        }
    }
    true
}

/// Share of known records with a synthetic record within `threshold`
/// differing coordinates (0 = exact copy).
pub fn presence_disclosure(
    synthetic: &PatientVectors,
    known: &PatientVectors,
    threshold: usize,
) -> Result<f64, AuditError> {
    if known.is_empty() {
        return Err(AuditError::NoKnownRecords);
    }
    check_width(synthetic, known)?;
    let discovered = known.rows().filter(|q| synthetic.rows().any(|s| hamming_within(q, s, threshold))).count();
    Ok(discovered as f64 / known.len() as f64)
}

/// Partial knowledge of one record: revealed coordinates with their values,
/// and hidden coordinates with their true values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisclosureQuery {
    pub known: Vec<(usize, f64)>,
    pub unknown: Vec<(usize, f64)>,
}

/// Mean over queries of the share of hidden indicator features recovered.
///
/// The attacker takes the `k` synthetic records nearest under Euclidean
/// distance on the revealed coordinates (ties to the lower index) and
/// predicts each hidden feature present when at least half of them have it.
pub fn attribute_disclosure(
    synthetic: &PatientVectors,
    queries: &[DisclosureQuery],
    k: usize,
) -> Result<f64, AuditError> {
    if k == 0 || k > synthetic.len() {
        return Err(AuditError::BadK { k, available: synthetic.len() });
    }
    if queries.is_empty() {
        return Err(AuditError::NoQueries);
    }
    let mut total = 0.0;
    for (qi, q) in queries.iter().enumerate() {
        if q.unknown.is_empty() {
            return Err(AuditError::NoUnknownFeatures(qi));
        }
        let out_of_range = q.known.iter().chain(&q.unknown).any(|&(j, _)| j >= synthetic.width);
        let overlap = q.known.iter().any(|(j, _)| q.unknown.iter().any(|(u, _)| u == j));
        if out_of_range || overlap {
            return Err(AuditError::BadQuery(qi));
        }
        let mut dist: Vec<(f64, usize)> = synthetic
            .rows()
            .enumerate()
            .map(|(i, row)| (q.known.iter().map(|&(j, v)| (row[j] - v) * (row[j] - v)).sum(), i))
            .collect();
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let neighbors = &dist[..k];
        let discovered = q
            .unknown
            .iter()
            .filter(|&&(j, truth)| {
                let votes = neighbors.iter().filter(|&&(_, i)| synthetic.row(i)[j] != 0.0).count();
                (2 * votes >= k) == (truth != 0.0)
            })
            .count();
        total += discovered as f64 / q.unknown.len() as f64;
    }
    Ok(total / queries.len() as f64)
}

/// Attribute-attack queries from real records: for up to `n_queries`
/// records with more than `n_known` present indicator features, `n_known`
/// of them are revealed and the rest are hidden.
pub fn sample_attribute_queries(
    real: &PatientVectors,
    n_queries: usize,
    n_known: usize,
    seed: u64,
) -> Vec<DisclosureQuery> {
    let mut rng = substream(seed, "audit/attribute");
    let mut order: Vec<usize> = (0..real.len()).collect();
    order.shuffle(&mut rng);
    let mut out = Vec::new();
    for i in order {
        if out.len() >= n_queries {
            break;
        }
        let row = real.row(i);
        let mut present: Vec<usize> = (0..real.width).filter(|&j| real.indicator[j] && row[j] != 0.0).collect();
        if present.len() <= n_known {
            continue;
        }
        present.shuffle(&mut rng);
        let (known, unknown) = present.split_at(n_known);
        let pick = |idx: &[usize]| {
            let mut v: Vec<(usize, f64)> = idx.iter().map(|&j| (j, row[j])).collect();
            v.sort_by_key(|p| p.0);
            v
        };
        out.push(DisclosureQuery { known: pick(known), unknown: pick(unknown) });
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NnaaReport {
    pub nnaa: f64,
    pub dist_eval_synth: f64,
    pub dist_train_synth: f64,
    pub n: usize,
}

/// Nearest-neighbor distance from every row of `from` into `to`; with
/// `exclude_self` the same index is skipped. Each row's minimum is a
/// sequential scan, so results do not depend on threading.
pub fn nearest_distances(from: &PatientVectors, to: &PatientVectors, exclude_self: bool) -> Vec<f64> {
    let one = |(i, a): (usize, &[f64])| -> f64 {
        to.rows()
            .enumerate()
            .filter(|&(j, _)| !(exclude_self && i == j))
            .map(|(_, b)| math::euclidean(a, b))
            .fold(f64::INFINITY, f64::min)
    };
    #[cfg(feature = "parallel")]
    {
        let rows: Vec<&[f64]> = from.rows().collect();
        rows.par_iter().enumerate().map(|(i, a)| one((i, a))).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        from.rows().enumerate().map(one).collect()
    }
}

fn indicator_mean(cross: &[f64], within: &[f64]) -> f64 {
    cross.iter().zip(within).filter(|(c, w)| c > w).count() as f64 / cross.len() as f64
}

/// Nearest-neighbor adversarial accuracy risk over equal-size train,
/// evaluation and synthetic sets.
pub fn nnaa(
    train: &PatientVectors,
    eval: &PatientVectors,
    synthetic: &PatientVectors,
) -> Result<NnaaReport, AuditError> {
    check_width(train, synthetic)?;
    check_width(eval, synthetic)?;
    let n = train.len();
    if eval.len() != n || synthetic.len() != n {
        return Err(AuditError::SizeMismatch { train: n, eval: eval.len(), synthetic: synthetic.len() });
    }
    if n < 2 {
        return Err(AuditError::TooFewRecords(n));
    }
    let ss = nearest_distances(synthetic, synthetic, true);
    let es = nearest_distances(eval, synthetic, false);
    let se = nearest_distances(synthetic, eval, false);
    let ee = nearest_distances(eval, eval, true);
    let ts = nearest_distances(train, synthetic, false);
    let st = nearest_distances(synthetic, train, false);
    let tt = nearest_distances(train, train, true);
    let dist_eval_synth = 0.5 * (indicator_mean(&es, &ee) + indicator_mean(&se, &ss));
    let dist_train_synth = 0.5 * (indicator_mean(&ts, &tt) + indicator_mean(&st, &ss));
    Ok(NnaaReport { nnaa: dist_eval_synth - dist_train_synth, dist_eval_synth, dist_train_synth, n })
}
