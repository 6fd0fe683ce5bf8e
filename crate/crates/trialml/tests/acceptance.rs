//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. Every oracle here is written independently of the
//! production code it checks.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use trialml::io;
use trialml::persist::{load_model, save_model, SavedModel};
use trialml::pipeline::{run_task, REPORT_FILE};
use trialml_core::audit::{
    attribute_disclosure, audit_sequential, fidelity_sequential, nnaa, presence_disclosure, AuditConfig,
    DisclosureQuery, PatientVectors, DEFAULT_FIDELITY_EVENTS,
};
use trialml_core::baselines::{fit_logistic_regression, loss_and_gradient, predict_proba, LogRegConfig};
use trialml_core::data_model::{
    stratified_split, Cell, FeatureMatrix, SequentialDataset, TabularDataset, TabularEncoder,
};
use trialml_core::demo_data::{
    generate_demo_search, generate_demo_sequential, generate_demo_tabular, SearchDemoSpec, SequentialDemoSpec,
    TabularDemoSpec,
};
use trialml_core::metrics::{
    auroc, average_precision, binary_classification_metrics, mse, multilabel_metrics, ranking_metrics, relative_error,
    GroupDistribution, MetricValue, RankedList,
};
use trialml_core::rng::{seeded, StreamRng};
use trialml_core::search::{
    build_index, build_index_from_texts, evaluate_rankings, evaluate_search, Bm25Params, FieldWeights, Query,
};
use trialml_core::simulation::{
    fit_gaussian_copula, plan_simulants, sample_copula, simulants_generate, uniform_random_generate,
};

type Check = Result<String, String>;

struct Criterion {
    id: u8,
    name: &'static str,
    budget: Option<Duration>,
    run: fn() -> Check,
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn main() {
    let criteria = [
        Criterion {
            id: 1,
            name: "metric oracle equivalence",
            budget: Some(Duration::from_secs(10)),
            run: metric_oracles,
        },
        Criterion { id: 2, name: "NNAA identities", budget: Some(Duration::from_secs(30)), run: nnaa_identities },
        Criterion {
            id: 3,
            name: "privacy/fidelity trade-off",
            budget: Some(Duration::from_secs(60)),
            run: privacy_tradeoff,
        },
        Criterion { id: 4, name: "fidelity discrimination", budget: None, run: fidelity_discrimination },
        Criterion { id: 5, name: "copula statistical fit", budget: None, run: copula_fit },
        Criterion { id: 6, name: "baseline learnability", budget: None, run: baseline_learnability },
        Criterion { id: 7, name: "search harness", budget: None, run: search_harness },
        Criterion { id: 8, name: "determinism and persistence", budget: None, run: determinism_persistence },
        Criterion { id: 9, name: "spot values", budget: None, run: spot_values },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let elapsed = start.elapsed();
        let result = match (result, c.budget) {
            (Ok(_), Some(b)) if elapsed > b => {
                Err(format!("took {:.1}s, budget {}s", elapsed.as_secs_f64(), b.as_secs()))
            }
            (r, _) => r,
        };
        let (status, detail) = match &result {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {} {status} [{:.2}s] {}: {detail}", c.id, elapsed.as_secs_f64(), c.name);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------------------
// 1. Metrics against brute force

fn oracle_auroc(scores: &[f64], labels: &[u8]) -> f64 {
    let mut wins = 0.0;
    let (mut pos, mut neg) = (0usize, 0usize);
    for (i, &yi) in labels.iter().enumerate() {
        if yi == 1 {
            pos += 1;
        } else {
            neg += 1;
        }
        for (j, &yj) in labels.iter().enumerate() {
            if yi == 1 && yj == 0 {
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
    }
    wins / (pos as f64 * neg as f64)
}

/// Σ over distinct thresholds (high to low) of recall gain × precision.
fn oracle_average_precision(scores: &[f64], labels: &[u8]) -> f64 {
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds.dedup();
    let total_pos = labels.iter().filter(|&&y| y == 1).count() as f64;
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for t in thresholds {
        let selected = scores.iter().filter(|&&s| s >= t).count() as f64;
        let tp = scores.iter().zip(labels).filter(|(&s, &y)| s >= t && y == 1).count() as f64;
        let recall = tp / total_pos;
        ap += (recall - prev_recall) * (tp / selected);
        prev_recall = recall;
    }
    ap
}

/// Sample-averaged F1 and Jaccard from confusion counts.
fn oracle_multilabel(pred: &[BTreeSet<u8>], truth: &[BTreeSet<u8>]) -> (f64, f64) {
    let (mut f1, mut jac) = (0.0, 0.0);
    for (p, t) in pred.iter().zip(truth) {
        let tp = (0..8u8).filter(|x| p.contains(x) && t.contains(x)).count() as f64;
        let fp = (0..8u8).filter(|x| p.contains(x) && !t.contains(x)).count() as f64;
        let fn_ = (0..8u8).filter(|x| !p.contains(x) && t.contains(x)).count() as f64;
        if tp + fp + fn_ == 0.0 {
            f1 += 1.0;
            jac += 1.0;
        } else {
            f1 += 2.0 * tp / (2.0 * tp + fp + fn_);
            jac += tp / (tp + fp + fn_);
        }
    }
    (f1 / pred.len() as f64, jac / pred.len() as f64)
}

fn oracle_dcg(rels: &[bool]) -> f64 {
    rels.iter().enumerate().map(|(i, &r)| if r { 1.0 / ((i + 2) as f64).log2() } else { 0.0 }).sum()
}

fn metric_oracles() -> Check {
    let mut rng = seeded(20_231);
    let (mut exact_checks, mut tol_checks) = (0usize, 0usize);
    let mut worst = 0.0f64;
    let close = |a: f64, b: f64, what: &str, inst: usize, worst: &mut f64| -> Result<(), String> {
        let d = (a - b).abs();
        *worst = worst.max(d);
        ensure(d <= 1e-12, || format!("instance {inst}: {what} {a} vs oracle {b}"))
    };
    for inst in 0..1000 {
        let n = rng.random_range(2..=50usize);
        // Even instances use a coarse grid so ties are common.
        let scores: Vec<f64> = (0..n)
            .map(|_| if inst % 2 == 0 { f64::from(rng.random_range(0..6u8)) / 5.0 } else { rng.random() })
            .collect();
        let mut labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2u8)).collect();
        labels[0] = 0;
        labels[1] = 1;

        let a = auroc(&scores, &labels).unwrap().expect_defined("auroc");
        ensure(a.to_bits() == oracle_auroc(&scores, &labels).to_bits(), || format!("instance {inst}: auroc {a}"))?;
        let bm = binary_classification_metrics(&scores, &labels).unwrap();
        let acc = scores.iter().zip(&labels).filter(|(&s, &y)| (s >= 0.5) == (y == 1)).count() as f64 / n as f64;
        ensure(bm.accuracy.to_bits() == acc.to_bits(), || format!("instance {inst}: accuracy"))?;
        exact_checks += 2;
        let ap = average_precision(&scores, &labels).unwrap().expect_defined("ap");
        close(ap, oracle_average_precision(&scores, &labels), "average precision", inst, &mut worst)?;

        let universe = 0..8u8;
        let set =
            |rng: &mut StreamRng| -> BTreeSet<u8> { universe.clone().filter(|_| rng.random_bool(0.35)).collect() };
        let pred: Vec<BTreeSet<u8>> = (0..n).map(|_| set(&mut rng)).collect();
        let truth: Vec<BTreeSet<u8>> = (0..n).map(|_| set(&mut rng)).collect();
        let ml = multilabel_metrics(&pred, &truth).unwrap();
        let (f1, jac) = oracle_multilabel(&pred, &truth);
        close(ml.f1, f1, "f1", inst, &mut worst)?;
        close(ml.jaccard, jac, "jaccard", inst, &mut worst)?;

        let targets: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let m = mse(&scores, &targets).unwrap();
        let oracle_mse = scores.iter().zip(&targets).map(|(p, t)| (p - t).powi(2)).rev().sum::<f64>() / n as f64;
        close(m, oracle_mse, "mse", inst, &mut worst)?;
        tol_checks += 4;

        let mut ids: Vec<String> = (0..n).map(|i| format!("c{i}")).collect();
        ids.shuffle(&mut rng);
        let relevant: BTreeSet<String> = ids.iter().filter(|_| rng.random_bool(0.3)).cloned().collect();
        let list = RankedList { ranked: ids.clone(), relevant: relevant.clone(), pool_size: n };
        let ks: Vec<usize> = (1..=n).collect();
        let got = ranking_metrics(&list, &ks).unwrap();
        for (k, r) in ks.iter().zip(&got) {
            let top = &ids[..*k];
            let hits = top.iter().filter(|id| relevant.contains(*id)).count();
            ensure(r.precision.to_bits() == (hits as f64 / *k as f64).to_bits(), || {
                format!("instance {inst}: precision@{k}")
            })?;
            if relevant.is_empty() {
                ensure(r.recall == MetricValue::Undefined && r.ndcg == MetricValue::Undefined, || {
                    format!("instance {inst}: recall/ndcg should be undefined")
                })?;
                continue;
            }
            let rec = r.recall.expect_defined("recall");
            ensure(rec.to_bits() == (hits as f64 / relevant.len() as f64).to_bits(), || {
                format!("instance {inst}: recall@{k}")
            })?;
            let rels: Vec<bool> = top.iter().map(|id| relevant.contains(id)).collect();
            let mut ideal: Vec<bool> = ids.iter().map(|id| relevant.contains(id)).collect();
            ideal.sort_by(|a, b| b.cmp(a));
            let ndcg = oracle_dcg(&rels) / oracle_dcg(&ideal[..*k]);
            close(r.ndcg.expect_defined("ndcg"), ndcg, "ndcg", inst, &mut worst)?;
            exact_checks += 2;
            tol_checks += 1;
        }
    }
    Ok(format!("1000 instances, {exact_checks} exact checks, {tol_checks} tolerance checks, max deviation {worst:.1e}"))
}

// ---------------------------------------------------------------------------
// 2. NNAA

fn vectors(rows: &[Vec<f64>]) -> PatientVectors {
    let width = rows[0].len();
    PatientVectors {
        source: "test".into(),
        width,
        values: rows.iter().flatten().copied().collect(),
        indicator: vec![false; width],
    }
}

fn gaussian_rows(rng: &mut impl Rng, n: usize, width: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..width).map(|_| rng.sample(StandardNormal)).collect()).collect()
}

/// Eqs. of the adversarial accuracy from a full pairwise distance table.
fn oracle_nnaa(t: &[Vec<f64>], e: &[Vec<f64>], s: &[Vec<f64>]) -> (f64, f64, f64) {
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let table = |a: &[Vec<f64>], b: &[Vec<f64>]| -> Vec<Vec<f64>> {
        a.iter().map(|x| b.iter().map(|y| dist(x, y)).collect()).collect()
    };
    let nearest = |tab: &Vec<Vec<f64>>, skip_diag: bool| -> Vec<f64> {
        tab.iter()
            .enumerate()
            .map(|(i, row)| {
                let mut best = f64::INFINITY;
                for (j, &d) in row.iter().enumerate() {
                    if !(skip_diag && i == j) && d < best {
                        best = d;
                    }
                }
                best
            })
            .collect()
    };
    let n = t.len() as f64;
    let frac = |cross: &[f64], within: &[f64]| cross.iter().zip(within).filter(|(c, w)| c > w).count() as f64 / n;
    let ss = nearest(&table(s, s), true);
    let es = nearest(&table(e, s), false);
    let se = nearest(&table(s, e), false);
    let ee = nearest(&table(e, e), true);
    let ts = nearest(&table(t, s), false);
    let st = nearest(&table(s, t), false);
    let tt = nearest(&table(t, t), true);
    let d_es = 0.5 * (frac(&es, &ee) + frac(&se, &ss));
    let d_ts = 0.5 * (frac(&ts, &tt) + frac(&st, &ss));
    (d_es - d_ts, d_es, d_ts)
}

fn nnaa_identities() -> Check {
    let mut rng = seeded(9);
    // Synthetic identical to train.
    for _ in 0..5 {
        let train = gaussian_rows(&mut rng, 200, 8);
        let eval = gaussian_rows(&mut rng, 200, 8);
        let r = nnaa(&vectors(&train), &vectors(&eval), &vectors(&train)).map_err(|e| e.to_string())?;
        ensure(r.dist_train_synth == 0.0, || {
            format!("synthetic = train gave dist_train_synth {}", r.dist_train_synth)
        })?;
        ensure(r.nnaa == r.dist_eval_synth, || "nnaa should equal dist_eval_synth".into())?;
    }
    // Three iid samples.
    let mut sum = 0.0;
    for _ in 0..20 {
        let sets: Vec<PatientVectors> = (0..3).map(|_| vectors(&gaussian_rows(&mut rng, 1000, 8))).collect();
        sum += nnaa(&sets[0], &sets[1], &sets[2]).map_err(|e| e.to_string())?.nnaa;
    }
    let mean = sum / 20.0;
    ensure(mean.abs() <= 0.05, || format!("iid mean nnaa {mean:.4} exceeds 0.05"))?;
    // Small sets against the exhaustive table, with ties from an integer grid.
    for inst in 0..300 {
        let n = rng.random_range(2..=30usize);
        let width = rng.random_range(1..=6usize);
        let grid = inst % 3 == 0;
        let mut draw = || -> Vec<Vec<f64>> {
            (0..n)
                .map(|_| {
                    (0..width)
                        .map(|_| if grid { f64::from(rng.random_range(0..3u8)) } else { rng.sample(StandardNormal) })
                        .collect()
                })
                .collect()
        };
        let (t, e, s) = (draw(), draw(), draw());
        let r = nnaa(&vectors(&t), &vectors(&e), &vectors(&s)).map_err(|e| e.to_string())?;
        let (o, oe, ot) = oracle_nnaa(&t, &e, &s);
        let same = r.nnaa.to_bits() == o.to_bits()
            && r.dist_eval_synth.to_bits() == oe.to_bits()
            && r.dist_train_synth.to_bits() == ot.to_bits();
        ensure(same, || format!("instance {inst} (n={n}): {r:?} vs oracle ({o}, {oe}, {ot})"))?;
    }
    Ok(format!(
        "identity exact over 5 sets; iid mean nnaa {mean:+.4} over 20 trials; 300 small instances bitwise equal"
    ))
}

// ---------------------------------------------------------------------------
// 3, 4. Simulants privacy and fidelity

const SEQ_PRESET: &str = "nct00174655";

fn preset_split(seed: u64) -> (SequentialDataset, SequentialDataset) {
    let data = generate_demo_sequential(&SequentialDemoSpec::preset(SEQ_PRESET, seed).unwrap()).unwrap();
    stratified_split(&data, 0.2, seed).unwrap()
}

fn privacy_tradeoff() -> Check {
    let config = AuditConfig::default();
    let mut lines = Vec::new();
    for seed in 0..5u64 {
        let (train, eval) = preset_split(seed);
        let at = |p: f64| -> Result<(f64, f64), String> {
            let plan = plan_simulants(&train, 5, p, seed).map_err(|e| e.to_string())?;
            let synthetic = simulants_generate(&train, &plan).map_err(|e| e.to_string())?;
            let (report, _) = audit_sequential(&train, &eval, &synthetic, &config, seed).map_err(|e| e.to_string())?;
            Ok((report.presence[&0], report.fidelity.r.expect_defined("fidelity r")))
        };
        let (pres0, r0) = at(0.0)?;
        let (pres9, r9) = at(0.9)?;
        ensure(pres0 == 1.0, || format!("seed {seed}: p=0 presence {pres0}"))?;
        ensure((r0 - 1.0).abs() <= 1e-12, || format!("seed {seed}: p=0 fidelity r {r0}"))?;
        ensure(pres9 < 0.5, || format!("seed {seed}: p=0.9 presence {pres9}"))?;
        ensure(r9 < r0, || format!("seed {seed}: p=0.9 r {r9} not below {r0}"))?;
        lines.push(format!("{pres9:.3}/{r9:.3}"));
    }
    Ok(format!("p=0 presence 1.0, r 1.0 on 5 seeds; p=0.9 presence/r = {}", lines.join(", ")))
}

fn fidelity_discrimination() -> Check {
    let (mut sim, mut uni) = (Vec::new(), Vec::new());
    for seed in 0..5u64 {
        let (train, _) = preset_split(seed);
        let plan = plan_simulants(&train, 5, 0.5, seed).map_err(|e| e.to_string())?;
        let s = simulants_generate(&train, &plan).map_err(|e| e.to_string())?;
        let u = uniform_random_generate(&train, seed);
        let rs = fidelity_sequential(&train, &s, &DEFAULT_FIDELITY_EVENTS).map_err(|e| e.to_string())?;
        let ru = fidelity_sequential(&train, &u, &DEFAULT_FIDELITY_EVENTS).map_err(|e| e.to_string())?;
        let (rs, ru) = (rs.pearson_r.expect_defined("r"), ru.pearson_r.expect_defined("r"));
        ensure(rs >= 0.9, || format!("seed {seed}: simulants r {rs}"))?;
        ensure(ru <= 0.5, || format!("seed {seed}: uniform r {ru}"))?;
        sim.push(rs);
        uni.push(ru);
    }
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ");
    Ok(format!("simulants r [{}], uniform r [{}]", fmt(&sim), fmt(&uni)))
}

// ---------------------------------------------------------------------------
// 5. Copula

/// Ordinal code of a cell: declared category index, binary value, or the
/// number itself; missing sorts first.
fn column_codes(data: &TabularDataset, j: usize) -> Vec<f64> {
    let spec = &data.schema[j];
    data.rows
        .iter()
        .map(|r| match &r[j] {
            Cell::Missing => f64::NEG_INFINITY,
            Cell::Num(v) => *v,
            Cell::Str(s) => spec.categories.iter().position(|c| c == s).map_or(f64::MAX, |i| i as f64),
        })
        .collect()
}

fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(&p), Some(&q)) => p.min(q),
            (Some(&p), None) => p,
            (None, Some(&q)) => q,
            (None, None) => break,
        };
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

fn ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

fn copula_fit() -> Check {
    let spec = TabularDemoSpec {
        n_rows: 20_000,
        n_categorical: 1,
        n_binary: 2,
        n_numerical: 2,
        positive_ratio: 0.3,
        signal_strength: 1.0,
        seed: 5,
    };
    let real = generate_demo_tabular(&spec).unwrap();
    ensure(real.schema.len() == 6, || format!("demo table has {} columns", real.schema.len()))?;
    let model = fit_gaussian_copula(&real).map_err(|e| e.to_string())?;
    let synth = sample_copula(&model, 10_000, 17);
    let real_cols: Vec<Vec<f64>> = (0..6).map(|j| column_codes(&real, j)).collect();
    let synth_cols: Vec<Vec<f64>> = (0..6).map(|j| column_codes(&synth, j)).collect();
    let mut max_ks = 0.0f64;
    for j in 0..6 {
        let ks = ks_statistic(&real_cols[j], &synth_cols[j]);
        ensure(ks <= 0.03, || format!("column {} KS {ks:.4}", real.schema[j].name))?;
        max_ks = max_ks.max(ks);
    }
    let mut max_rho = 0.0f64;
    for i in 0..6 {
        for j in 0..i {
            let err = (spearman(&real_cols[i], &real_cols[j]) - spearman(&synth_cols[i], &synth_cols[j])).abs();
            ensure(err <= 0.08, || {
                format!("pair ({}, {}) Spearman error {err:.4}", real.schema[i].name, real.schema[j].name)
            })?;
            max_rho = max_rho.max(err);
        }
    }
    let kinds: Vec<&str> = real.schema.iter().map(|c| c.kind.as_str()).collect();
    Ok(format!("columns {kinds:?}: max KS {max_ks:.4}, max Spearman error {max_rho:.4}"))
}

// ---------------------------------------------------------------------------
// 6. Logistic regression

fn encoded(train: &TabularDataset, test: &TabularDataset) -> (FeatureMatrix, FeatureMatrix) {
    let enc = TabularEncoder::fit(train).unwrap();
    (enc.transform(train).unwrap(), enc.transform(test).unwrap())
}

fn baseline_learnability() -> Check {
    let mut min_sep = 1.0f64;
    for seed in 0..10u64 {
        let data = generate_demo_tabular(&TabularDemoSpec::separable(500, seed)).unwrap();
        let (x, _) = encoded(&data, &data);
        let y = data.binary_labels().unwrap();
        let model = fit_logistic_regression(&x, &y, LogRegConfig::default()).map_err(|e| e.to_string())?;
        let a = auroc(&predict_proba(&model, &x).unwrap(), &y).unwrap().expect_defined("auroc");
        ensure(a >= 0.99, || format!("separable seed {seed}: training AUROC {a:.4}"))?;
        min_sep = min_sep.min(a);
    }

    let mut planted = Vec::new();
    for seed in 0..10u64 {
        let data = generate_demo_tabular(&TabularDemoSpec::preset("nct00041119", seed).unwrap()).unwrap();
        let (train, test) = stratified_split(&data, 0.2, seed).unwrap();
        let (xtr, xte) = encoded(&train, &test);
        let model = fit_logistic_regression(&xtr, &train.binary_labels().unwrap(), LogRegConfig::default())
            .map_err(|e| e.to_string())?;
        let scores = predict_proba(&model, &xte).unwrap();
        planted.push(auroc(&scores, &test.binary_labels().unwrap()).unwrap().expect_defined("auroc"));
    }
    let mean_planted = planted.iter().sum::<f64>() / planted.len() as f64;
    ensure(mean_planted > 0.6, || format!("planted-signal mean test AUROC {mean_planted:.4}"))?;

    let mut rng = seeded(77);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let (n, d) = (40, 6);
        let rows = gaussian_rows(&mut rng, n, d);
        let x = FeatureMatrix::from_rows(&rows, (0..d).map(|j| format!("x{j}")).collect());
        let y: Vec<u8> = (0..n).map(|_| rng.random_range(0..2u8)).collect();
        let w: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let b: f64 = rng.sample(StandardNormal);
        let l2 = 0.05;
        let (_, gw, gb) = loss_and_gradient(&x, &y, &w, b, l2);
        let h = 1e-5;
        let mut numeric = Vec::with_capacity(d + 1);
        for j in 0..=d {
            let shifted = |delta: f64| {
                let mut w2 = w.clone();
                let mut b2 = b;
                if j < d {
                    w2[j] += delta;
                } else {
                    b2 += delta;
                }
                loss_and_gradient(&x, &y, &w2, b2, l2).0
            };
            numeric.push((shifted(h) - shifted(-h)) / (2.0 * h));
        }
        let analytic: Vec<f64> = gw.iter().copied().chain([gb]).collect();
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, b)| a - b).collect();
        let rel = norm(&diff) / norm(&analytic).max(norm(&numeric)).max(1e-12);
        worst = worst.max(rel);
    }
    ensure(worst <= 1e-6, || format!("gradient relative error {worst:.2e}"))?;
    let min_planted = planted.iter().copied().fold(1.0, f64::min);
    Ok(format!(
        "separable training AUROC min {min_sep:.4} over 10 seeds; planted test AUROC mean {mean_planted:.4} (min {min_planted:.4}); gradient relative error max {worst:.1e}"
    ))
}

// ---------------------------------------------------------------------------
// 7. Search

fn search_harness() -> Check {
    let (corpus, qrels) = generate_demo_search(&SearchDemoSpec::default()).unwrap();
    let index = build_index(&corpus, &FieldWeights::default(), Bm25Params::default()).map_err(|e| e.to_string())?;
    let report = evaluate_search(&index, &qrels).map_err(|e| e.to_string())?;
    let p1 = report.prec_at_1.expect_defined("prec@1");
    let n5 = report.ndcg_at_5.expect_defined("ndcg@5");
    ensure(p1 == 1.0, || format!("prec@1 {p1}"))?;
    ensure(n5 >= 0.9, || format!("ndcg@5 {n5}"))?;

    let docs =
        [("doc1".to_string(), "cancer trial cancer".to_string()), ("doc2".to_string(), "diabetes trial".to_string())];
    let params = Bm25Params { k1: 1.5, b: 0.75, ..Bm25Params::default() };
    let two = build_index_from_texts(&docs, params).map_err(|e| e.to_string())?;
    let got = two.scores(&Query::Text("cancer"));
    let (n_docs, df, tf, len, avg) = (2.0f64, 1.0f64, 2.0f64, 3.0f64, 2.5f64);
    let idf = (1.0 + (n_docs - df + 0.5) / (df + 0.5)).ln();
    let hand = idf * tf * (params.k1 + 1.0) / (tf + params.k1 * (1.0 - params.b + params.b * len / avg));
    let err = (got[0] - hand).abs();
    ensure(err <= 1e-12 && got[1] == 0.0, || format!("two-document BM25 {got:?} vs hand {hand}"))?;

    let spec = SearchDemoSpec { n_queries: 200, candidates_per_query: 10, relevant_per_query: 5, seed: 3 };
    let (_, judgments) = generate_demo_search(&spec).unwrap();
    let mut rng = seeded(4);
    let random = evaluate_rankings(&judgments, |j| {
        let mut ids: Vec<String> = j.candidates.iter().map(|c| c.id.clone()).collect();
        ids.shuffle(&mut rng);
        Ok(ids)
    })
    .map_err(|e| e.to_string())?;
    let rp5 = random.prec_at_5.expect_defined("prec@5");
    ensure((rp5 - 0.5).abs() <= 0.05, || format!("random control prec@5 {rp5}"))?;
    Ok(format!(
        "prec@1 {p1}, ndcg@5 {n5:.4}; two-document BM25 error {err:.1e}; random prec@5 {rp5:.4} over 200 queries"
    ))
}

// ---------------------------------------------------------------------------
// 8. Determinism and persistence

fn determinism_persistence() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let files = common::write_demo_files(dir.path(), 21);
    let configs = common::all_configs(&files, 21, &dir.path().join("runs"));
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    for cfg in &configs {
        let a = run_task(cfg).map_err(|e| e.to_string())?;
        let b = single.install(|| run_task(cfg)).map_err(|e| e.to_string())?;
        let what = format!("{}/{}", cfg.task.as_str(), cfg.model);
        ensure(a.report.canonical_json() == b.report.canonical_json(), || format!("{what}: report differs"))?;
        let strip = |o: &trialml::outputs::Outputs| -> Vec<(std::path::PathBuf, Vec<u8>)> {
            o.iter()
                .filter(|(p, _)| *p != std::path::Path::new(REPORT_FILE))
                .map(|(p, b)| (p.to_path_buf(), b.to_vec()))
                .collect()
        };
        ensure(strip(&a.outputs) == strip(&b.outputs), || format!("{what}: output files differ"))?;
    }

    // Model round trips.
    let hyper = Default::default();
    let data = generate_demo_tabular(&TabularDemoSpec::preset("nct00312208", 2).unwrap()).unwrap();
    let (train, test) = stratified_split(&data, 0.2, 2).unwrap();
    let (xtr, xte) = encoded(&train, &test);
    let lr = fit_logistic_regression(&xtr, &train.binary_labels().unwrap(), LogRegConfig::default()).unwrap();
    let lr = lr.with_encoder(TabularEncoder::fit(&train).unwrap());
    let copula = fit_gaussian_copula(&train).unwrap();
    let (corpus, _) = generate_demo_search(&SearchDemoSpec::default()).unwrap();
    let index = build_index(&corpus, &FieldWeights::default(), Bm25Params::default()).unwrap();
    let (seq_train, _) = preset_split(1);
    let plan = plan_simulants(&seq_train, 5, 0.5, 1).unwrap();
    let models = [
        SavedModel::LogisticRegression(lr.clone()),
        SavedModel::GaussianCopula(copula.clone()),
        SavedModel::Bm25(index.clone()),
        SavedModel::Simulants(plan.clone()),
    ];
    for m in &models {
        let d = dir.path().join("models").join(m.name());
        save_model(m, &hyper, &d).map_err(|e| e.to_string())?;
        let (_, back) = load_model(&d).map_err(|e| e.to_string())?;
        let ok = match (m, &back) {
            (SavedModel::LogisticRegression(a), SavedModel::LogisticRegression(b)) => {
                let pa = predict_proba(a, &xte).unwrap();
                let pb = predict_proba(b, &xte).unwrap();
                pa.iter().zip(&pb).all(|(x, y)| x.to_bits() == y.to_bits())
                    && b.encoder.as_ref().unwrap().transform(&test).unwrap() == xte
            }
            (SavedModel::GaussianCopula(a), SavedModel::GaussianCopula(b)) => {
                cells_identical(&sample_copula(a, 500, 9), &sample_copula(b, 500, 9))
            }
            (SavedModel::Bm25(a), SavedModel::Bm25(b)) => {
                let q = Query::Text("randomized placebo survival therapy");
                a.scores(&q).iter().zip(b.scores(&q)).all(|(x, y)| x.to_bits() == y.to_bits())
            }
            (SavedModel::Simulants(a), SavedModel::Simulants(b)) => {
                simulants_generate(&seq_train, a).unwrap() == simulants_generate(&seq_train, b).unwrap()
            }
            _ => false,
        };
        ensure(ok, || format!("{}: loaded model predicts differently", m.name()))?;
    }

    // Dataset load -> write -> load.
    let (csv, sidecar) = io::tabular_files(&io::load_tabular(&files.table, &Default::default()).unwrap());
    ensure(csv == std::fs::read(&files.table).unwrap(), || "table CSV bytes changed".into())?;
    ensure(sidecar == std::fs::read(io::sidecar_path(&files.table)).unwrap(), || {
        "schema sidecar bytes changed".into()
    })?;
    let full = generate_demo_sequential(&SequentialDemoSpec::preset(SEQ_PRESET, 0).unwrap()).unwrap();
    let seq_path = dir.path().join("full.jsonl");
    io::write_sequential(&seq_path, &full).unwrap();
    let reloaded = io::load_sequential(&seq_path).unwrap();
    ensure(reloaded == full, || "sequential dataset changed".into())?;
    ensure(io::sequential_to_jsonl(&reloaded) == std::fs::read(&seq_path).unwrap(), || {
        "sequential bytes changed".into()
    })?;
    ensure(
        io::corpus_to_jsonl(&io::load_corpus(&files.corpus).unwrap()) == std::fs::read(&files.corpus).unwrap(),
        || "corpus bytes changed".into(),
    )?;
    ensure(io::qrels_to_jsonl(&io::load_qrels(&files.qrels).unwrap()) == std::fs::read(&files.qrels).unwrap(), || {
        "qrels bytes changed".into()
    })?;
    ensure(io::sites_to_csv(&io::load_sites(&files.sites).unwrap()) == std::fs::read(&files.sites).unwrap(), || {
        "sites bytes changed".into()
    })?;
    Ok(format!(
        "{} registry pairs repeat byte-identically (1 thread vs pool); 4 model kinds round trip bitwise; 5 file formats byte-identical",
        configs.len()
    ))
}

fn cells_identical(a: &TabularDataset, b: &TabularDataset) -> bool {
    a.schema == b.schema
        && a.rows.len() == b.rows.len()
        && a.rows.iter().zip(&b.rows).all(|(ra, rb)| {
            ra.iter().zip(rb).all(|(x, y)| match (x, y) {
                (Cell::Num(p), Cell::Num(q)) => p.to_bits() == q.to_bits(),
                _ => x == y,
            })
        })
}

// ---------------------------------------------------------------------------
// 9. Spot values

fn spot_values() -> Check {
    let h = GroupDistribution::uniform().entropy();
    ensure((h - 6f64.ln()).abs() <= 1e-12, || format!("uniform entropy {h}"))?;
    let re = relative_error(100.0, 40.0).map_err(|e| e.to_string())?;
    ensure(re == 0.6, || format!("relative_error(100, 40) = {re}"))?;

    let one_d = |xs: &[f64]| vectors(&xs.iter().map(|&x| vec![x]).collect::<Vec<_>>());
    let r = nnaa(&one_d(&[0.0, 10.0]), &one_d(&[1.0, 11.0]), &one_d(&[0.1, 9.9])).map_err(|e| e.to_string())?;
    ensure(r.nnaa == 0.0 && r.dist_eval_synth == 0.0 && r.dist_train_synth == 0.0, || format!("1-D NNAA case {r:?}"))?;

    // Ten distinct binary records; four of them copied into the synthetic set.
    let known: Vec<Vec<f64>> = (0..10u32).map(|i| (0..4).map(|b| f64::from((i >> b) & 1)).collect()).collect();
    let mut synthetic: Vec<Vec<f64>> = known[..4].to_vec();
    synthetic.push(vec![1.0, 1.0, 1.0, 1.0]);
    let presence = presence_disclosure(&vectors(&synthetic), &vectors(&known), 0).map_err(|e| e.to_string())?;
    ensure(presence == 0.4, || format!("presence {presence}"))?;

    // Query A recovers both hidden features, query B one of two.
    let synth = vectors(&[vec![1.0, 0.0, 1.0, 1.0], vec![0.0, 1.0, 0.0, 1.0]]);
    let queries = [
        DisclosureQuery { known: vec![(0, 1.0), (1, 0.0)], unknown: vec![(2, 1.0), (3, 1.0)] },
        DisclosureQuery { known: vec![(0, 0.0), (1, 1.0)], unknown: vec![(2, 1.0), (3, 1.0)] },
    ];
    let attr = attribute_disclosure(&synth, &queries, 1).map_err(|e| e.to_string())?;
    ensure(attr == 0.75, || format!("attribute {attr}"))?;
    Ok(format!(
        "entropy error {:.1e}; relative_error 0.6; NNAA 1-D all zero; presence 0.4; attribute 0.75",
        (h - 6f64.ln()).abs()
    ))
}
