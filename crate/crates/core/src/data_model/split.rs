use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use thiserror::Error;

use super::sequential::SequentialDataset;
use super::tabular::{Cell, TabularDataset, TargetKind};
use crate::math;
use crate::rng;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SplitError {
    #[error("test fraction must lie strictly between 0 and 1")]
    InvalidFraction,
    #[error("class {class} has {count} member(s); stratification needs at least 2 (use a plain random split)")]
    ClassTooSmall { class: usize, count: usize },
}

/// Datasets that can be split into row subsets.
pub trait Partition: Sized {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Class index per row when the data carries a classification target.
    fn strata(&self) -> Option<Vec<usize>>;

    fn select(&self, indices: &[usize]) -> Self;
}

impl Partition for TabularDataset {
    fn len(&self) -> usize {
        self.n_rows()
    }

    fn strata(&self) -> Option<Vec<usize>> {
        let target = self.target.as_ref()?;
        let idx = self.target_index()?;
        match target.kind {
            TargetKind::Regression => None,
            TargetKind::Binary => self.binary_labels().ok().map(|l| l.into_iter().map(usize::from).collect()),
            TargetKind::Multiclass => {
                let spec = &self.schema[idx];
                self.rows
                    .iter()
                    .map(|r| match &r[idx] {
                        Cell::Missing => Some(0),
                        Cell::Str(s) => spec.category_index(s).map(|c| c + 1),
                        Cell::Num(_) => None,
                    })
                    .collect()
            }
        }
    }

    fn select(&self, indices: &[usize]) -> Self {
        self.select_rows(indices)
    }
}

impl Partition for SequentialDataset {
    fn len(&self) -> usize {
        self.n_records()
    }

    fn strata(&self) -> Option<Vec<usize>> {
        self.labels().map(|l| l.into_iter().map(usize::from).collect())
    }

    fn select(&self, indices: &[usize]) -> Self {
        self.select_records(indices)
    }
}

/// Splits into `(train, test)`, stratified on the classification target when
/// there is one.
///
/// `|test| = round(test_fraction * n)`; per-class test counts are within one
/// of proportional. Rows keep their original relative order in both parts.
pub fn stratified_split<D: Partition>(data: &D, test_fraction: f64, seed: u64) -> Result<(D, D), SplitError> {
    let strata = data.strata();
    let (train, test) = split_indices(data.len(), strata.as_deref(), test_fraction, seed)?;
    Ok((data.select(&train), data.select(&test)))
}

/// Index-level split behind [`stratified_split`].
pub fn split_indices(
    n: usize,
    strata: Option<&[usize]>,
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>), SplitError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(SplitError::InvalidFraction);
    }
    let mut rng = rng::substream(seed, "split");
    let n_test = math::round(test_fraction * n as f64) as usize;

    let mut test = match strata {
        None => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            order.truncate(n_test);
            order
        }
        Some(labels) => {
            let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for (i, &c) in labels.iter().enumerate() {
                classes.entry(c).or_default().push(i);
            }
            for (&class, members) in &classes {
                if members.len() < 2 {
                    return Err(SplitError::ClassTooSmall { class, count: members.len() });
                }
            }
            let quotas =
                proportional_quotas(&classes.values().map(Vec::len).collect::<Vec<_>>(), test_fraction, n_test);
            let mut test = Vec::with_capacity(n_test);
            for (members, quota) in classes.into_values().zip(quotas) {
                let mut members = members;
                members.shuffle(&mut rng);
                test.extend_from_slice(&members[..quota]);
            }
            test
        }
    };
    test.sort_unstable();
    let mut in_test = alloc::vec![false; n];
    for &i in &test {
        in_test[i] = true;
    }
    let train = (0..n).filter(|&i| !in_test[i]).collect();
    Ok((train, test))
}

/// Largest-remainder allocation of `total` test rows across classes.
fn proportional_quotas(sizes: &[usize], fraction: f64, total: usize) -> Vec<usize> {
    let exact: Vec<f64> = sizes.iter().map(|&s| fraction * s as f64).collect();
    let mut quotas: Vec<usize> = exact.iter().map(|&e| math::floor(e) as usize).collect();
    let assigned: usize = quotas.iter().sum();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - quotas[a] as f64;
        let rb = exact[b] - quotas[b] as f64;
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut remaining = total.saturating_sub(assigned);
    for &c in order.iter().cycle().take(sizes.len() * 2) {
        if remaining == 0 {
            break;
        }
        if quotas[c] < sizes[c] {
            quotas[c] += 1;
            remaining -= 1;
        }
    }
    quotas
}
