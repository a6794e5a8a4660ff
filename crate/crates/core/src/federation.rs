//! Cross-silo inference, evaluation, and the two naive baselines.
//!
//! The prediction universe is every unordered pair of columns drawn from
//! two different silos; every function here counts against that universe
//! so the confusion matrix is well-defined. Pairs are canonically ordered
//! (left < right) and scoring is read-only over the model, so distinct
//! pairs are scored in parallel.

use crate::error::Error;
use crate::exec;
use crate::graph::RelatednessGraph;
use crate::neural::{self, ModelParams};
use crate::profiling::SiloProfiles;
use crate::silo::{ColumnRef, Silo};
use crate::training::{self, TrainConfig, TrainedModel};
use crate::Result;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// "greater than 0.5" — strictly.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchPrediction {
    pub left: ColumnRef,
    pub right: ColumnRef,
    pub score: f64,
    pub predicted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub true_negatives: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl EvalReport {
    /// Zero denominators yield zero metrics, never NaN.
    pub fn from_counts(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        let precision = if tp + fp == 0 {
            0.0
        } else {
            tp as f64 / (tp + fp) as f64
        };
        let recall = if tp + fn_ == 0 {
            0.0
        } else {
            tp as f64 / (tp + fn_) as f64
        };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        EvalReport {
            true_positives: tp,
            false_positives: fp,
            false_negatives: fn_,
            true_negatives: tn,
            precision,
            recall,
            f1,
        }
    }
}

fn canonical(a: &ColumnRef, b: &ColumnRef) -> (ColumnRef, ColumnRef) {
    if a < b {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    }
}

/// Every unordered cross-silo column pair, canonically ordered.
pub fn cross_silo_universe(silos: &[Silo]) -> BTreeSet<(ColumnRef, ColumnRef)> {
    let refs: Vec<Vec<ColumnRef>> = silos.iter().map(|s| s.column_refs()).collect();
    let mut universe = BTreeSet::new();
    for i in 0..refs.len() {
        for j in (i + 1)..refs.len() {
            for a in &refs[i] {
                for b in &refs[j] {
                    universe.insert(canonical(a, b));
                }
            }
        }
    }
    universe
}

/// Scores every cross-silo pair with an explicit decision threshold.
/// Output is sorted by (left, right), so it does not depend on the order
/// the silos were passed in.
pub fn predict_with_threshold(
    params: &ModelParams,
    silos: &[Silo],
    threshold: f64,
) -> Result<Vec<MatchPrediction>> {
    let maps = training::silo_feature_maps(silos, &params.standardizer)?;
    let graphs = training::build_graphs(silos, &maps)?;
    let graph_refs: Vec<&RelatednessGraph> = graphs.iter().collect();
    let emb = neural::sage_forward(&graph_refs, params)?;

    let mut pairs = Vec::new();
    for i in 0..graphs.len() {
        for j in (i + 1)..graphs.len() {
            for u in 0..graphs[i].n_nodes() {
                for v in 0..graphs[j].n_nodes() {
                    pairs.push((i, u, j, v));
                }
            }
        }
    }
    let mut preds = exec::map_collect(&pairs, |_, &(i, u, j, v)| {
        let score = neural::pair_score(emb.node(i, u), emb.node(j, v), params);
        let (left, right) = canonical(graphs[i].node(u), graphs[j].node(v));
        MatchPrediction {
            left,
            right,
            score,
            predicted: score > threshold,
        }
    });
    preds.sort_by(|x, y| (&x.left, &x.right).cmp(&(&y.left, &y.right)));
    Ok(preds)
}

/// One prediction per unordered cross-silo column pair, thresholded at
/// the standard 0.5. Unseen silos embed inductively: their own
/// intra-matches (possibly none) form the graph.
pub fn predict_cross_silo(model: &TrainedModel, silos: &[Silo]) -> Result<Vec<MatchPrediction>> {
    predict_with_threshold(&model.params, silos, DEFAULT_THRESHOLD)
}

/// Confusion matrix over the explicit universe. Universe pairs absent
/// from `predictions` count as not predicted.
pub fn evaluate(
    predictions: &[MatchPrediction],
    ground_truth: &BTreeSet<(ColumnRef, ColumnRef)>,
    universe: &BTreeSet<(ColumnRef, ColumnRef)>,
) -> Result<EvalReport> {
    for pair in ground_truth {
        if !universe.contains(pair) {
            return Err(Error::TruthOutsideUniverse {
                left: pair.0.clone(),
                right: pair.1.clone(),
            });
        }
    }
    let mut by_pair: BTreeMap<(ColumnRef, ColumnRef), bool> = BTreeMap::new();
    for p in predictions {
        let key = (p.left.clone(), p.right.clone());
        if !universe.contains(&key) {
            return Err(Error::PredictionOutsideUniverse {
                left: p.left.clone(),
                right: p.right.clone(),
            });
        }
        if by_pair.insert(key, p.predicted).is_some() {
            return Err(Error::Other(format!(
                "duplicate prediction for pair {} / {}",
                p.left, p.right
            )));
        }
    }
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (pair, &pred) in &by_pair {
        match (pred, ground_truth.contains(pair)) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    for pair in ground_truth {
        if !by_pair.contains_key(pair) {
            fn_ += 1;
        }
    }
    let tn = universe.len() - tp - fp - fn_;
    Ok(EvalReport::from_counts(tp, fp, fn_, tn))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub prefix_size: usize,
    /// Fraction of all ground-truth domains present in the training prefix.
    pub domain_coverage: f64,
    pub f1: f64,
}

/// Trains a fresh model on each prefix of `silos` and evaluates it over
/// the cross-silo pairs of ALL silos — columns outside the prefix are
/// unseen at training time.
pub fn generalizability_curve(
    silos: &[Silo],
    config: &TrainConfig,
    domain_of: &BTreeMap<ColumnRef, usize>,
    ground_truth: &BTreeSet<(ColumnRef, ColumnRef)>,
) -> Result<Vec<CurvePoint>> {
    if silos.len() < 2 {
        return Err(Error::InvalidConfig(
            "generalizability curve needs at least 2 silos".into(),
        ));
    }
    let universe = cross_silo_universe(silos);
    let all_domains: BTreeSet<usize> = domain_of.values().copied().collect();
    let denom = all_domains.len().max(1) as f64;
    let mut points = Vec::with_capacity(silos.len());
    for p in 1..=silos.len() {
        let model = training::run_pipeline(&silos[..p], config)?;
        let preds = predict_cross_silo(&model, silos)?;
        let report = evaluate(&preds, ground_truth, &universe)?;
        let covered: BTreeSet<usize> = silos[..p]
            .iter()
            .flat_map(|s| s.column_refs())
            .filter_map(|r| domain_of.get(&r).copied())
            .collect();
        points.push(CurvePoint {
            prefix_size: p,
            domain_coverage: covered.len() as f64 / denom,
            f1: report.f1,
        });
    }
    Ok(points)
}

/// Classic two-row edit-distance DP over chars.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Edit distance over the longer length; two empty strings are equal.
pub fn normalized_levenshtein(a: &str, b: &str) -> f64 {
    let m = a.chars().count().max(b.chars().count());
    if m == 0 {
        return 0.0;
    }
    levenshtein(a, b) as f64 / m as f64
}

/// Fuzzy Jaccard over distinct values: values match when their
/// normalized edit distance is ≤ `edit_threshold`; the intersection is
/// matched greedily over the sorted sets. Two empty sets score 0.
fn fuzzy_jaccard(a: &[String], b: &[String], edit_threshold: f64) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    let b_lens: Vec<usize> = b.iter().map(|v| v.chars().count()).collect();
    let mut matched = vec![false; b.len()];
    let mut inter = 0usize;
    for va in a {
        let la = va.chars().count();
        for (j, vb) in b.iter().enumerate() {
            if matched[j] {
                continue;
            }
            let m = la.max(b_lens[j]);
            // a length gap alone already exceeds the threshold
            if m > 0 && la.abs_diff(b_lens[j]) as f64 / m as f64 > edit_threshold {
                continue;
            }
            if normalized_levenshtein(va, vb) <= edit_threshold {
                matched[j] = true;
                inter += 1;
                break;
            }
        }
    }
    let union = a.len() + b.len() - inter;
    inter as f64 / union as f64
}

fn distinct_values(silo: &Silo, r: &ColumnRef) -> Vec<String> {
    let set: BTreeSet<String> = silo
        .column(r)
        .map(|col| col.values.iter().flatten().cloned().collect())
        .unwrap_or_default();
    set.into_iter().collect()
}

/// Instance-based baseline: fuzzy Jaccard similarity of the distinct
/// value sets of every cross-silo pair.
pub fn baseline_jaccard_levenshtein(
    silos: &[Silo],
    edit_threshold: f64,
    match_threshold: f64,
) -> Vec<MatchPrediction> {
    let columns: Vec<Vec<(ColumnRef, Vec<String>)>> = silos
        .iter()
        .map(|s| {
            s.column_refs()
                .into_iter()
                .map(|r| {
                    let vals = distinct_values(s, &r);
                    (r, vals)
                })
                .collect()
        })
        .collect();
    let mut pairs = Vec::new();
    for i in 0..columns.len() {
        for j in (i + 1)..columns.len() {
            for a in 0..columns[i].len() {
                for b in 0..columns[j].len() {
                    pairs.push((i, a, j, b));
                }
            }
        }
    }
    let mut preds = exec::map_collect(&pairs, |_, &(i, a, j, b)| {
        let (ra, va) = &columns[i][a];
        let (rb, vb) = &columns[j][b];
        let score = fuzzy_jaccard(va, vb, edit_threshold);
        let (left, right) = canonical(ra, rb);
        MatchPrediction {
            left,
            right,
            score,
            predicted: score > match_threshold,
        }
    });
    preds.sort_by(|x, y| (&x.left, &x.right).cmp(&(&y.left, &y.right)));
    preds
}

fn cosine(x: &[f64], y: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut nx = 0.0;
    let mut ny = 0.0;
    for (a, b) in x.iter().zip(y) {
        dot += a * b;
        nx += a * a;
        ny += b * b;
    }
    if nx == 0.0 || ny == 0.0 {
        0.0
    } else {
        dot / (nx.sqrt() * ny.sqrt())
    }
}

/// Profile-based baseline: cosine similarity of the raw (unstandardized)
/// profiles for every cross-silo pair, min-max normalized globally over
/// all pairs. A degenerate scenario where every pair ties normalizes to 0.
pub fn baseline_profile_cosine(
    profiles: &[SiloProfiles],
    match_threshold: f64,
) -> Vec<MatchPrediction> {
    let cols: Vec<Vec<(&ColumnRef, &[f64])>> = profiles
        .iter()
        .map(|sp| {
            sp.profiles
                .iter()
                .map(|(r, fv)| (r, fv.as_slice()))
                .collect()
        })
        .collect();
    let mut pairs = Vec::new();
    for i in 0..cols.len() {
        for j in (i + 1)..cols.len() {
            for a in 0..cols[i].len() {
                for b in 0..cols[j].len() {
                    pairs.push((i, a, j, b));
                }
            }
        }
    }
    let sims = exec::map_collect(&pairs, |_, &(i, a, j, b)| {
        cosine(cols[i][a].1, cols[j][b].1)
    });
    let lo = sims.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = sims.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let norm = |s: f64| {
        if hi > lo {
            (s - lo) / (hi - lo)
        } else {
            0.0
        }
    };
    let mut preds: Vec<MatchPrediction> = pairs
        .iter()
        .zip(&sims)
        .map(|(&(i, a, j, b), &s)| {
            let score = norm(s);
            let (left, right) = canonical(cols[i][a].0, cols[j][b].0);
            MatchPrediction {
                left,
                right,
                score,
                predicted: score > match_threshold,
            }
        })
        .collect();
    preds.sort_by(|x, y| (&x.left, &x.right).cmp(&(&y.left, &y.right)));
    preds
}
