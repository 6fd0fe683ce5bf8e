use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data_model::{Cell, ColumnKind, ColumnSpec, TabularDataset, Target};
use crate::math;
use crate::rng::substream;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum CopulaError {
    #[error("column `{0}` is free text, which the copula cannot model")]
    TextColumn(String),
    #[error("at least 3 rows are needed, got {0}")]
    TooFewRows(usize),
    #[error("column `{column}` holds a value of the wrong kind at row {row}")]
    BadCell { column: String, row: usize },
    #[error("correlation matrix could not be factorized")]
    NotPositiveDefinite,
}

/// Eigenvalue floor used to repair the latent correlation matrix.
pub const EIGEN_FLOOR: f64 = 1e-6;

/// Largest latent correlation magnitude the calibration will return.
const RHO_LIMIT: f64 = 0.995;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CopulaConfig {
    /// Correct pairs involving discrete columns so that the latent
    /// correlation reproduces the observed normal-score correlation after
    /// discretization. Without it the plain score correlation is used, which
    /// shrinks toward zero for coarse columns.
    pub calibrate_discrete: bool,
}

impl Default for CopulaConfig {
    fn default() -> Self {
        Self { calibrate_discrete: true }
    }
}

/// Per-column marginal distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Marginal {
    /// Empirical distribution of the observed values. Value `i` of `sorted`
    /// sits at plotting position `(i + 0.5) / m`; the inverse interpolates
    /// linearly between neighbors and clamps to the observed range.
    Empirical { sorted: Vec<f64>, missing_rate: f64 },
    /// Frequency table over ordered levels. Level `i` covers the cumulative
    /// probability interval `[cumulative[i-1], cumulative[i])`.
    Discrete { levels: Vec<Cell>, cumulative: Vec<f64> },
}

impl Marginal {
    /// Value at probability `u ∈ [0, 1)`.
    pub fn inverse(&self, u: f64) -> Cell {
        match self {
            Marginal::Empirical { sorted, .. } => {
                if sorted.is_empty() {
                    return Cell::Missing;
                }
                let m = sorted.len();
                let t = (u * m as f64 - 0.5).clamp(0.0, (m - 1) as f64);
                let lo = math::floor(t) as usize;
                let hi = (lo + 1).min(m - 1);
                let w = t - lo as f64;
                let v = if w == 0.0 { sorted[lo] } else { sorted[lo] + w * (sorted[hi] - sorted[lo]) };
                Cell::Num(v.clamp(sorted[0], sorted[m - 1]))
            }
            Marginal::Discrete { levels, cumulative } => {
                let i = cumulative.iter().position(|&c| u < c).unwrap_or(levels.len() - 1);
                levels[i].clone()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CopulaModel {
    pub schema: Vec<ColumnSpec>,
    pub target: Option<Target>,
    pub marginals: Vec<Marginal>,
    /// Repaired latent correlation, row-major.
    pub correlation: Vec<f64>,
    /// Lower Cholesky factor of `correlation`, row-major.
    pub cholesky: Vec<f64>,
    pub n_fit: usize,
}

impl CopulaModel {
    pub fn dim(&self) -> usize {
        self.marginals.len()
    }

    pub fn correlation_at(&self, i: usize, j: usize) -> f64 {
        self.correlation[i * self.dim() + j]
    }
}

/// Latent normal scores and the marginal of one discrete column. Levels are
/// missing first, then binary 0/1 or categories in declared order.
fn fit_discrete(spec: &ColumnSpec, cells: &[&Cell]) -> Result<(Vec<f64>, Marginal), CopulaError> {
    let mut levels: Vec<Cell> = vec![Cell::Missing];
    match spec.kind {
        ColumnKind::Binary => levels.extend([Cell::Num(0.0), Cell::Num(1.0)]),
        _ => levels.extend(spec.categories.iter().map(|c| Cell::Str(c.clone()))),
    }
    let mut idx = Vec::with_capacity(cells.len());
    for (row, cell) in cells.iter().enumerate() {
        let i = levels
            .iter()
            .position(|l| l == *cell)
            .ok_or_else(|| CopulaError::BadCell { column: spec.name.clone(), row })?;
        idx.push(i);
    }
    let n = cells.len() as f64;
    let mut counts = vec![0usize; levels.len()];
    for &i in &idx {
        counts[i] += 1;
    }
    let mut cumulative = Vec::with_capacity(levels.len());
    let mut mid = Vec::with_capacity(levels.len());
    let mut acc = 0usize;
    for &c in &counts {
        mid.push(math::normal_quantile((acc as f64 + 0.5 * c as f64) / n));
        acc += c;
        cumulative.push(acc as f64 / n);
    }
    let keep: Vec<usize> = (0..levels.len()).filter(|&i| counts[i] > 0).collect();
    let latent = idx.iter().map(|&i| mid[i]).collect();
    let marginal = Marginal::Discrete {
        levels: keep.iter().map(|&i| levels[i].clone()).collect(),
        cumulative: keep.iter().map(|&i| cumulative[i]).collect(),
    };
    Ok((latent, marginal))
}

fn fit_numerical(spec: &ColumnSpec, cells: &[&Cell]) -> Result<(Vec<f64>, Marginal), CopulaError> {
    let mut observed = Vec::new();
    for (row, cell) in cells.iter().enumerate() {
        match cell {
            Cell::Num(v) => observed.push(*v),
            Cell::Missing => {}
            Cell::Str(_) => return Err(CopulaError::BadCell { column: spec.name.clone(), row }),
        }
    }
    let m = observed.len() as f64;
    let ranks = math::midranks(&observed);
    let mut latent = Vec::with_capacity(cells.len());
    let mut r = ranks.iter();
    for cell in cells {
        latent.push(match cell {
            Cell::Num(_) => math::normal_quantile((r.next().copied().unwrap_or(0.5) - 0.5) / m),
            _ => 0.0,
        });
    }
    let missing_rate = (cells.len() - observed.len()) as f64 / cells.len() as f64;
    observed.sort_by(f64::total_cmp);
    Ok((latent, Marginal::Empirical { sorted: observed, missing_rate }))
}

/// How a column's normal score depends on its latent normal `Z`.
enum ScoreProfile {
    /// Score is `Z` itself.
    Continuous,
    /// Step function: the score jumps by `jumps[i]` as `Z` crosses
    /// `thresholds[i]`; `sd` is the score's standard deviation.
    Steps { thresholds: Vec<f64>, jumps: Vec<f64>, sd: f64 },
}

fn profile(marginal: &Marginal) -> ScoreProfile {
    let Marginal::Discrete { cumulative, .. } = marginal else { return ScoreProfile::Continuous };
    let mut scores = Vec::with_capacity(cumulative.len());
    let mut probs = Vec::with_capacity(cumulative.len());
    let mut prev = 0.0;
    for &c in cumulative {
        scores.push(math::normal_quantile(0.5 * (prev + c)));
        probs.push(c - prev);
        prev = c;
    }
    let mean: f64 = scores.iter().zip(&probs).map(|(s, p)| s * p).sum();
    let var: f64 = scores.iter().zip(&probs).map(|(s, p)| p * (s - mean) * (s - mean)).sum();
    let k = cumulative.len().saturating_sub(1);
    ScoreProfile::Steps {
        thresholds: cumulative[..k].iter().map(|&c| math::normal_quantile(c)).collect(),
        jumps: scores.windows(2).map(|w| w[1] - w[0]).collect(),
        sd: math::sqrt(var),
    }
}

fn bivariate_density(a: f64, b: f64, r: f64) -> f64 {
    let q = 1.0 - r * r;
    math::exp(-(a * a - 2.0 * r * a * b + b * b) / (2.0 * q)) / (2.0 * core::f64::consts::PI * math::sqrt(q))
}

/// Derivative in `r` of the covariance of two step-function scores, which
/// for a standard bivariate normal is the jump-weighted density at every
/// pair of thresholds.
fn covariance_slope(ta: &[f64], ja: &[f64], tb: &[f64], jb: &[f64], r: f64) -> f64 {
    let mut s = 0.0;
    for (a, da) in ta.iter().zip(ja) {
        for (b, db) in tb.iter().zip(jb) {
            s += da * db * bivariate_density(*a, *b, r);
        }
    }
    s
}

/// Latent correlation whose implied score covariance equals `target`;
/// the covariance is integrated from 0 with Simpson steps and inverted by
/// linear interpolation.
fn invert_step_covariance(ta: &[f64], ja: &[f64], tb: &[f64], jb: &[f64], target: f64) -> f64 {
    const STEP: f64 = 0.005;
    let sign = if target < 0.0 { -1.0 } else { 1.0 };
    let goal = target.abs();
    let (mut r, mut c) = (0.0f64, 0.0f64);
    let f = |x: f64| covariance_slope(ta, ja, tb, jb, sign * x);
    let mut fr = f(0.0);
    while r < RHO_LIMIT {
        let h = STEP.min(RHO_LIMIT - r);
        let fm = f(r + 0.5 * h);
        let fe = f(r + h);
        let next = c + h / 6.0 * (fr + 4.0 * fm + fe);
        if next >= goal {
            let w = if next > c { (goal - c) / (next - c) } else { 0.0 };
            return sign * (r + w * h);
        }
        r += h;
        c = next;
        fr = fe;
    }
    sign * RHO_LIMIT
}

/// Latent correlation for one column pair given the observed normal-score
/// correlation.
fn calibrated(observed: f64, a: &ScoreProfile, b: &ScoreProfile) -> f64 {
    use ScoreProfile::*;
    let rho = match (a, b) {
        (Continuous, Continuous) => observed,
        (Continuous, Steps { thresholds, jumps, sd }) | (Steps { thresholds, jumps, sd }, Continuous) => {
            let slope: f64 = thresholds.iter().zip(jumps).map(|(t, j)| j * math::exp(-0.5 * t * t)).sum::<f64>()
                / math::sqrt(2.0 * core::f64::consts::PI);
            if slope > 0.0 {
                observed * sd / slope
            } else {
                0.0
            }
        }
        (Steps { thresholds: ta, jumps: ja, sd: sa }, Steps { thresholds: tb, jumps: jb, sd: sb }) => {
            if ta.is_empty() || tb.is_empty() {
                0.0
            } else {
                invert_step_covariance(ta, ja, tb, jb, observed * sa * sb)
            }
        }
    };
    rho.clamp(-RHO_LIMIT, RHO_LIMIT)
}

/// Nearest correlation matrix with eigenvalues at least [`EIGEN_FLOOR`],
/// rescaled to a unit diagonal. Returned unchanged when already above the
/// floor.
pub fn repair_correlation(c: DMatrix<f64>) -> DMatrix<f64> {
    let d = c.nrows();
    let eig = SymmetricEigen::new(c.clone());
    if eig.eigenvalues.iter().all(|&l| l >= EIGEN_FLOOR) {
        return c;
    }
    let clipped = eig.eigenvalues.map(|l| l.max(EIGEN_FLOOR));
    let v = &eig.eigenvectors;
    let mut r = v * DMatrix::from_diagonal(&clipped) * v.transpose();
    let scale: Vec<f64> = (0..d).map(|i| 1.0 / math::sqrt(r[(i, i)])).collect();
    for i in 0..d {
        for j in 0..d {
            r[(i, j)] *= scale[i] * scale[j];
        }
    }
    for i in 0..d {
        r[(i, i)] = 1.0;
        for j in 0..i {
            let s = 0.5 * (r[(i, j)] + r[(j, i)]);
            r[(i, j)] = s;
            r[(j, i)] = s;
        }
    }
    r
}

pub fn fit_gaussian_copula(data: &TabularDataset) -> Result<CopulaModel, CopulaError> {
    fit_gaussian_copula_with(data, CopulaConfig::default())
}

pub fn fit_gaussian_copula_with(data: &TabularDataset, config: CopulaConfig) -> Result<CopulaModel, CopulaError> {
    if let Some(c) = data.schema.iter().find(|c| c.kind == ColumnKind::Text) {
        return Err(CopulaError::TextColumn(c.name.clone()));
    }
    let n = data.n_rows();
    if n < 3 {
        return Err(CopulaError::TooFewRows(n));
    }
    let d = data.schema.len();
    let mut latents = Vec::with_capacity(d);
    let mut marginals = Vec::with_capacity(d);
    for (j, spec) in data.schema.iter().enumerate() {
        let cells: Vec<&Cell> = data.rows.iter().map(|r| &r[j]).collect();
        let (latent, marginal) = match spec.kind {
            ColumnKind::Numerical => fit_numerical(spec, &cells)?,
            _ => fit_discrete(spec, &cells)?,
        };
        latents.push(latent);
        marginals.push(marginal);
    }
    let profiles: Vec<ScoreProfile> = marginals.iter().map(profile).collect();
    let mut c = DMatrix::<f64>::identity(d, d);
    for i in 0..d {
        for j in 0..i {
            let mut r = math::pearson(&latents[i], &latents[j]).unwrap_or(0.0);
            if config.calibrate_discrete {
                r = calibrated(r, &profiles[i], &profiles[j]);
            }
            c[(i, j)] = r;
            c[(j, i)] = r;
        }
    }
    let c = repair_correlation(c);
    let l = Cholesky::new(c.clone()).ok_or(CopulaError::NotPositiveDefinite)?.l();
    let row_major =
        |m: &DMatrix<f64>| (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).map(|(i, j)| m[(i, j)]).collect();
    Ok(CopulaModel {
        schema: data.schema.clone(),
        target: data.target.clone(),
        marginals,
        correlation: row_major(&c),
        cholesky: row_major(&l),
        n_fit: n,
    })
}

/// `n` synthetic rows. Each row draws a correlated latent normal vector,
/// then for every column a separate uniform decides missingness of
/// numerical columns before the inverse marginal is applied.
pub fn sample_copula(model: &CopulaModel, n: usize, seed: u64) -> TabularDataset {
    let mut rng = substream(seed, "copula/sample");
    let d = model.dim();
    let mut rows = Vec::with_capacity(n);
    let mut eps = vec![0.0; d];
    for _ in 0..n {
        for e in eps.iter_mut() {
            *e = StandardNormal.sample(&mut rng);
        }
        let mut row = Vec::with_capacity(d);
        for (i, marginal) in model.marginals.iter().enumerate() {
            let z: f64 = (0..=i).map(|k| model.cholesky[i * d + k] * eps[k]).sum();
            let missing_draw: f64 = rng.random();
            let cell = match marginal {
                Marginal::Empirical { missing_rate, .. } if missing_draw < *missing_rate => Cell::Missing,
                _ => marginal.inverse(math::normal_cdf(z).min(1.0 - f64::EPSILON)),
            };
            row.push(cell);
        }
        rows.push(row);
    }
    TabularDataset::new(model.schema.clone(), rows, model.target.clone())
}
