//! Gradient-boosted decision trees with a softmax objective, grid-search
//! cross-validation and balanced class weights.

mod cv;
mod dump;
pub mod tree;

pub use cv::{
    class_weights_balanced, grid_search_cv, stratified_folds, ClassWeighting, CvScore,
    GridSearchResult, HyperGrid,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::mix64;
use tree::{grow, Columns, Tree, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperParams {
    pub max_depth: usize,
    pub learning_rate: f64,
    pub n_estimators: usize,
    pub l2_reg: f64,
    pub min_child_weight: f64,
    pub subsample: f64,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            max_depth: 3,
            learning_rate: 0.3,
            n_estimators: 100,
            l2_reg: 1.0,
            min_child_weight: 1.0,
            subsample: 1.0,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_depth >= 1
            && self.learning_rate > 0.0
            && self.learning_rate <= 1.0
            && self.n_estimators >= 1
            && self.l2_reg >= 0.0
            && self.l2_reg.is_finite()
            && self.min_child_weight >= 0.0
            && self.min_child_weight.is_finite()
            && self.subsample > 0.0
            && self.subsample <= 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid hyper-parameters {self:?}")))
        }
    }
}

/// Training rows. `x[i]` holds one value per feature.
#[derive(Debug, Clone, Copy)]
pub struct TrainSet<'a> {
    pub x: &'a [Vec<f64>],
    pub y: &'a [usize],
    pub sample_weight: Option<&'a [f64]>,
}

impl<'a> TrainSet<'a> {
    pub fn new(x: &'a [Vec<f64>], y: &'a [usize]) -> Self {
        Self {
            x,
            y,
            sample_weight: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoostedEnsemble {
    pub n_classes: usize,
    pub feature_names: Vec<String>,
    pub base_score: Vec<f64>,
    /// `trees[round][class]`.
    pub trees: Vec<Vec<Tree>>,
    pub hyper_params: HyperParams,
    pub seed: u64,
    /// Weighted mean cross-entropy before the first round and after each round.
    pub training_loss: Vec<f64>,
}

/// Softmax in place, max-shifted.
pub fn softmax(z: &mut [f64]) {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for v in z.iter_mut() {
        *v = (*v - m).exp();
        s += *v;
    }
    for v in z.iter_mut() {
        *v /= s;
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn validate_rows(data: &TrainSet, names: &[String], n_classes: usize) -> Result<Vec<f64>> {
    let n = data.x.len();
    if n == 0 || data.y.len() != n {
        return Err(Error::Training("empty training set or label count mismatch".into()));
    }
    if n_classes < 2 {
        return Err(Error::Training("at least two classes are required".into()));
    }
    for (i, row) in data.x.iter().enumerate() {
        if row.len() != names.len() {
            return Err(Error::Training(format!(
                "row {i} has {} values for {} features",
                row.len(),
                names.len()
            )));
        }
        if let Some(f) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "feature column {} (row {i})",
                names[f]
            )));
        }
    }
    if let Some(&bad) = data.y.iter().find(|&&c| c >= n_classes) {
        return Err(Error::Training(format!("label {bad} outside 0..{n_classes}")));
    }
    let first = data.y[0];
    if data.y.iter().all(|&c| c == first) {
        return Err(Error::Training(format!("only class {first} present in training data")));
    }
    let w: Vec<f64> = match data.sample_weight {
        Some(w) if w.len() != n => {
            return Err(Error::Training("sample weight count mismatch".into()));
        }
        Some(w) => w.to_vec(),
        None => vec![1.0; n],
    };
    if w.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::Training("sample weights must be positive".into()));
    }
    Ok(w)
}

fn row_key(row: &[f64], y: usize, w: f64) -> u64 {
    let mut h = mix64(y as u64 ^ w.to_bits());
    for v in row {
        h = mix64(h ^ v.to_bits());
    }
    h
}

fn mean_loss(margins: &[Vec<f64>], y: &[usize], w: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    let mut p = Vec::new();
    for ((m, &c), &wi) in margins.iter().zip(y).zip(w) {
        p.clear();
        p.extend_from_slice(m);
        softmax(&mut p);
        num -= wi * p[c].max(f64::MIN_POSITIVE).ln();
        den += wi;
    }
    num / den
}

/// Fits one tree per class and round to the weighted softmax cross-entropy.
/// Each round's leaves are halved until the training loss does not rise.
pub fn fit(
    data: &TrainSet,
    feature_names: &[String],
    n_classes: usize,
    hp: &HyperParams,
    class_weights: Option<&[f64]>,
    seed: u64,
) -> Result<BoostedEnsemble> {
    hp.validate()?;
    let mut w = validate_rows(data, feature_names, n_classes)?;
    if let Some(cw) = class_weights {
        if cw.len() < n_classes {
            return Err(Error::Training("class weight per class required".into()));
        }
        for (wi, &c) in w.iter_mut().zip(data.y) {
            *wi *= cw[c];
        }
        if w.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::Training("a present class has zero weight".into()));
        }
    }
    let n = data.x.len();
    let k = n_classes;
    let y = data.y;
    let total_w: f64 = w.iter().sum();
    let mut prior = vec![0.0; k];
    for (&c, &wi) in y.iter().zip(&w) {
        prior[c] += wi;
    }
    let base_score: Vec<f64> = prior.iter().map(|p| (p / total_w).max(1e-12).ln()).collect();

    let cols = Columns::new(data.x, feature_names.len());
    let tp = TreeParams {
        max_depth: hp.max_depth,
        learning_rate: hp.learning_rate,
        l2_reg: hp.l2_reg,
        min_child_weight: hp.min_child_weight,
    };
    let keys: Vec<u64> = (0..n).map(|i| row_key(&data.x[i], y[i], w[i])).collect();
    let mut margins: Vec<Vec<f64>> = vec![base_score.clone(); n];
    let mut loss = mean_loss(&margins, y, &w);
    let mut training_loss = vec![loss];
    let mut trees = Vec::with_capacity(hp.n_estimators);
    let mut probs = vec![vec![0.0; k]; n];
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];

    for round in 0..hp.n_estimators {
        let in_sample: Vec<bool> = if hp.subsample < 1.0 {
            let salt = mix64(seed ^ mix64(round as u64 + 1));
            keys.iter()
                .map(|&key| ((mix64(key ^ salt) >> 11) as f64 / (1u64 << 53) as f64) < hp.subsample)
                .collect()
        } else {
            vec![true; n]
        };
        for (p, m) in probs.iter_mut().zip(&margins) {
            p.copy_from_slice(m);
            softmax(p);
        }
        let mut round_trees = Vec::with_capacity(k);
        let mut leaves = Vec::with_capacity(k);
        for c in 0..k {
            for i in 0..n {
                if !in_sample[i] {
                    grad[i] = 0.0;
                    hess[i] = 0.0;
                    continue;
                }
                let p = probs[i][c];
                let target = if y[i] == c { 1.0 } else { 0.0 };
                grad[i] = (p - target) * w[i];
                hess[i] = (2.0 * p * (1.0 - p)).max(1e-16) * w[i];
            }
            let (t, leaf_of) = grow(&cols, &grad, &hess, &tp);
            round_trees.push(t);
            leaves.push(leaf_of);
        }
        let mut factor = 1.0;
        let mut candidate = margins.clone();
        let mut accepted = false;
        for _ in 0..60 {
            for i in 0..n {
                for c in 0..k {
                    candidate[i][c] = margins[i][c] + factor * round_trees[c].leaf_value(leaves[c][i]);
                }
            }
            let new_loss = mean_loss(&candidate, y, &w);
            if new_loss <= loss {
                loss = new_loss;
                accepted = true;
                break;
            }
            factor *= 0.5;
        }
        if !accepted {
            factor = 0.0;
        } else {
            margins = candidate;
        }
        if factor != 1.0 {
            for t in &mut round_trees {
                t.scale_leaves(factor);
            }
        }
        training_loss.push(loss);
        trees.push(round_trees);
    }

    Ok(BoostedEnsemble {
        n_classes: k,
        feature_names: feature_names.to_vec(),
        base_score,
        trees,
        hyper_params: *hp,
        seed,
        training_loss,
    })
}


impl BoostedEnsemble {
    /// A model with no trees.
    pub fn constant(feature_names: Vec<String>, base_score: Vec<f64>) -> Self {
        Self {
            n_classes: base_score.len(),
            feature_names,
            base_score,
            trees: Vec::new(),
            hyper_params: HyperParams::default(),
            seed: 0,
            training_loss: Vec::new(),
        }
    }

    pub fn n_rounds(&self) -> usize {
        self.trees.len()
    }

    /// Class probabilities using the first `rounds` rounds.
    pub fn predict_proba_rounds(&self, row: &[f64], rounds: usize) -> Result<Vec<f64>> {
        if row.len() != self.feature_names.len() {
            return Err(Error::MissingFeature(format!(
                "expected {} feature values, got {}",
                self.feature_names.len(),
                row.len()
            )));
        }
        let mut m = self.base_score.clone();
        for round in self.trees.iter().take(rounds) {
            for (c, t) in round.iter().enumerate() {
                m[c] += t.predict(row);
            }
        }
        softmax(&mut m);
        Ok(m)
    }

    pub fn predict_proba(&self, row: &[f64]) -> Result<Vec<f64>> {
        self.predict_proba_rounds(row, self.trees.len())
    }

    /// Probabilities for a row given as (name, value) pairs.
    pub fn predict_proba_named(&self, names: &[String], values: &[f64]) -> Result<Vec<f64>> {
        let row = self
            .feature_names
            .iter()
            .map(|f| {
                names
                    .iter()
                    .position(|n| n == f)
                    .map(|i| values[i])
                    .ok_or_else(|| Error::MissingFeature(f.clone()))
            })
            .collect::<Result<Vec<f64>>>()?;
        self.predict_proba(&row)
    }

    pub fn predict(&self, row: &[f64]) -> Result<usize> {
        Ok(argmax(&self.predict_proba(row)?))
    }

    pub fn predict_proba_batch(&self, x: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        x.iter().map(|r| self.predict_proba(r)).collect()
    }
}
