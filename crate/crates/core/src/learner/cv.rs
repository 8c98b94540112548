use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit, HyperParams, TrainSet};
use crate::error::{Error, Result};
use crate::evalcal::f1_macro_labels;
use crate::rng;

/// Candidate grid; candidates enumerate depth, then learning rate, then
/// rounds, then L2 (last varies fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HyperGrid {
    pub max_depth: Vec<usize>,
    pub learning_rate: Vec<f64>,
    pub n_estimators: Vec<usize>,
    pub l2_reg: Vec<f64>,
    pub min_child_weight: f64,
    pub subsample: f64,
}

impl Default for HyperGrid {
    fn default() -> Self {
        Self {
            max_depth: vec![2, 3, 4],
            learning_rate: vec![0.1, 0.3],
            n_estimators: vec![50, 100],
            l2_reg: vec![0.0, 1.0],
            min_child_weight: 1.0,
            subsample: 1.0,
        }
    }
}

impl HyperGrid {
    pub fn single(hp: HyperParams) -> Self {
        Self {
            max_depth: vec![hp.max_depth],
            learning_rate: vec![hp.learning_rate],
            n_estimators: vec![hp.n_estimators],
            l2_reg: vec![hp.l2_reg],
            min_child_weight: hp.min_child_weight,
            subsample: hp.subsample,
        }
    }

    pub fn candidates(&self) -> Vec<HyperParams> {
        let mut out = Vec::new();
        for &max_depth in &self.max_depth {
            for &learning_rate in &self.learning_rate {
                for &n_estimators in &self.n_estimators {
                    for &l2_reg in &self.l2_reg {
                        out.push(HyperParams {
                            max_depth,
                            learning_rate,
                            n_estimators,
                            l2_reg,
                            min_child_weight: self.min_child_weight,
                            subsample: self.subsample,
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassWeighting {
    None,
    #[default]
    Balanced,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvScore {
    pub params: HyperParams,
    pub mean_f1: f64,
    pub std_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub best: HyperParams,
    pub cv_scores: Vec<CvScore>,
    /// Folds actually used (reduced when a class is too small).
    pub folds: usize,
    pub seed: u64,
}

/// `weight_c = n / (K * n_c)` over the K classes present; absent classes get 0.
pub fn class_weights_balanced(labels: &[usize]) -> Vec<f64> {
    let k_max = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut counts = vec![0usize; k_max];
    for &c in labels {
        counts[c] += 1;
    }
    let present = counts.iter().filter(|&&c| c > 0).count() as f64;
    let n = labels.len() as f64;
    counts
        .iter()
        .map(|&c| if c == 0 { 0.0 } else { n / (present * c as f64) })
        .collect()
}

/// Fold index per row. Each class is shuffled with its own seeded stream and
/// dealt round-robin. Returns the folds actually used.
pub fn stratified_folds(y: &[usize], folds: usize, seed: u64) -> Result<(Vec<usize>, usize)> {
    if folds < 2 {
        return Err(Error::InvalidArgument("at least 2 folds are required".into()));
    }
    let k_max = y.iter().copied().max().map_or(0, |m| m + 1);
    let mut members = vec![Vec::new(); k_max];
    for (i, &c) in y.iter().enumerate() {
        members[c].push(i);
    }
    let smallest = members.iter().filter(|m| !m.is_empty()).map(Vec::len).min().unwrap_or(0);
    let used = folds.min(smallest);
    if used < 2 {
        return Err(Error::Training(format!(
            "smallest class has {smallest} rows; cross-validation needs 2"
        )));
    }
    if used < folds {
        log::warn!("reducing cross-validation from {folds} to {used} folds (smallest class has {smallest} rows)");
    }
    let mut fold_of = vec![0usize; y.len()];
    for (c, m) in members.iter_mut().enumerate() {
        let mut r = rng::rng(rng::derive(seed, &format!("folds/{c}")));
        m.shuffle(&mut r);
        for (pos, &i) in m.iter().enumerate() {
            fold_of[i] = pos % used;
        }
    }
    Ok((fold_of, used))
}

/// Stratified k-fold grid search on mean macro-F1. Candidates that differ
/// only in `n_estimators` share one fit per fold.
pub fn grid_search_cv(
    data: &TrainSet,
    feature_names: &[String],
    n_classes: usize,
    grid: &HyperGrid,
    folds: usize,
    weighting: ClassWeighting,
    seed: u64,
) -> Result<GridSearchResult> {
    let candidates = grid.candidates();
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("empty hyper-parameter grid".into()));
    }
    for c in &candidates {
        c.validate()?;
    }
    let (fold_of, used) = stratified_folds(data.y, folds, seed)?;
    let max_rounds = *grid.n_estimators.iter().max().expect("nonempty");

    // Groups keyed by (depth, eta, lambda) in canonical order.
    let mut groups: Vec<HyperParams> = Vec::new();
    for c in &candidates {
        let key = HyperParams {
            n_estimators: max_rounds,
            ..*c
        };
        if !groups.contains(&key) {
            groups.push(key);
        }
    }

    let fold_scores: Vec<Vec<Vec<f64>>> = groups
        .par_iter()
        .map(|g| -> Result<Vec<Vec<f64>>> {
            let mut per_rounds = vec![Vec::with_capacity(used); grid.n_estimators.len()];
            for f in 0..used {
                let tr: Vec<usize> = (0..data.y.len()).filter(|&i| fold_of[i] != f).collect();
                let te: Vec<usize> = (0..data.y.len()).filter(|&i| fold_of[i] == f).collect();
                let x: Vec<Vec<f64>> = tr.iter().map(|&i| data.x[i].clone()).collect();
                let y: Vec<usize> = tr.iter().map(|&i| data.y[i]).collect();
                let w: Option<Vec<f64>> = data
                    .sample_weight
                    .map(|sw| tr.iter().map(|&i| sw[i]).collect());
                let cw = match weighting {
                    ClassWeighting::None => None,
                    ClassWeighting::Balanced => {
                        let mut cw = class_weights_balanced(&y);
                        cw.resize(n_classes, 0.0);
                        Some(cw)
                    }
                };
                let set = TrainSet {
                    x: &x,
                    y: &y,
                    sample_weight: w.as_deref(),
                };
                let model = fit(&set, feature_names, n_classes, g, cw.as_deref(), seed)?;
                let truth: Vec<usize> = te.iter().map(|&i| data.y[i]).collect();
                for (slot, &rounds) in grid.n_estimators.iter().enumerate() {
                    let pred = te
                        .iter()
                        .map(|&i| {
                            model
                                .predict_proba_rounds(&data.x[i], rounds)
                                .map(|p| super::argmax(&p))
                        })
                        .collect::<Result<Vec<usize>>>()?;
                    per_rounds[slot].push(f1_macro_labels(&truth, &pred, n_classes));
                }
            }
            Ok(per_rounds)
        })
        .collect::<Result<_>>()?;

    let mut cv_scores = Vec::with_capacity(candidates.len());
    for c in &candidates {
        let gi = groups
            .iter()
            .position(|g| g.max_depth == c.max_depth && g.learning_rate == c.learning_rate && g.l2_reg == c.l2_reg)
            .expect("group exists");
        let ri = grid
            .n_estimators
            .iter()
            .position(|&r| r == c.n_estimators)
            .expect("rounds listed");
        let s = &fold_scores[gi][ri];
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        let var = s.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / s.len() as f64;
        cv_scores.push(CvScore {
            params: *c,
            mean_f1: mean,
            std_f1: var.sqrt(),
        });
    }
    let mut best = 0;
    for (i, s) in cv_scores.iter().enumerate() {
        if s.mean_f1 > cv_scores[best].mean_f1 {
            best = i;
        }
    }
    Ok(GridSearchResult {
        best: cv_scores[best].params,
        cv_scores,
        folds: used,
        seed,
    })
}
