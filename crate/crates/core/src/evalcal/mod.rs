//! Classification metrics, expected calibration error and post-hoc
//! calibration (temperature scaling and ensemble temperature scaling).

mod calibrate;

pub use calibrate::{
    apply_calibration, fit_calibration, fit_ets, fit_temperature, nll, CalibrationMethod,
    CalibrationParams,
};

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::learner::argmax;

/// Default number of ECE bins.
pub const ECE_BINS: usize = 10;

/// True labels with one probability row each.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    pub k: usize,
    pub labels: Vec<usize>,
    pub probs: Vec<Vec<f64>>,
}

impl PredictionSet {
    pub fn new(k: usize, labels: Vec<usize>, probs: Vec<Vec<f64>>) -> Result<Self> {
        if labels.len() != probs.len() {
            return Err(Error::InvalidArgument("label and probability counts differ".into()));
        }
        for (i, (row, &y)) in probs.iter().zip(&labels).enumerate() {
            if row.len() != k || y >= k {
                return Err(Error::InvalidArgument(format!("row {i} has the wrong shape")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-6 || row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::InvalidArgument(format!("row {i} is not a distribution")));
            }
        }
        Ok(Self { k, labels, probs })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn predicted(&self) -> Vec<usize> {
        self.probs.iter().map(|p| argmax(p)).collect()
    }

    pub fn confidences(&self) -> Vec<f64> {
        self.probs
            .iter()
            .map(|p| p.iter().copied().fold(0.0, f64::max))
            .collect()
    }

    /// Concatenation of several sets with the same class count.
    pub fn concat(sets: &[&PredictionSet]) -> Result<Self> {
        let k = sets.first().map_or(0, |s| s.k);
        if sets.iter().any(|s| s.k != k) {
            return Err(Error::InvalidArgument("class counts differ".into()));
        }
        Ok(Self {
            k,
            labels: sets.iter().flat_map(|s| s.labels.iter().copied()).collect(),
            probs: sets.iter().flat_map(|s| s.probs.iter().cloned()).collect(),
        })
    }
}

/// One-vs-rest F1 of every class (0 when the class has no TP, FP or FN).
pub fn f1_per_class(truth: &[usize], pred: &[usize], k: usize) -> Vec<f64> {
    let mut tp = vec![0usize; k];
    let mut fp = vec![0usize; k];
    let mut fneg = vec![0usize; k];
    for (&t, &p) in truth.iter().zip(pred) {
        if t == p {
            tp[t] += 1;
        } else {
            fp[p] += 1;
            fneg[t] += 1;
        }
    }
    (0..k)
        .map(|c| {
            let den = 2 * tp[c] + fp[c] + fneg[c];
            if den == 0 {
                0.0
            } else {
                2.0 * tp[c] as f64 / den as f64
            }
        })
        .collect()
}

/// Macro F1 over the classes present in `truth`.
pub fn f1_macro_labels(truth: &[usize], pred: &[usize], k: usize) -> f64 {
    let f1 = f1_per_class(truth, pred, k);
    let mut present = vec![false; k];
    for &t in truth {
        present[t] = true;
    }
    let (sum, n) = (0..k)
        .filter(|&c| present[c])
        .fold((0.0, 0usize), |(s, n), c| (s + f1[c], n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

pub fn f1_macro(p: &PredictionSet) -> f64 {
    f1_macro_labels(&p.labels, &p.predicted(), p.k)
}

pub fn accuracy(p: &PredictionSet) -> f64 {
    if p.is_empty() {
        return 0.0;
    }
    let hits = p.predicted().iter().zip(&p.labels).filter(|(a, b)| a == b).count();
    hits as f64 / p.len() as f64
}

/// Bin of a confidence in `1..=m`: `(b - 1) / m < conf <= b / m`.
pub fn ece_bin(conf: f64, m: usize) -> usize {
    let mf = m as f64;
    let mut b = ((conf * mf).ceil() as usize).clamp(1, m);
    while b > 1 && conf <= (b - 1) as f64 / mf {
        b -= 1;
    }
    while b < m && conf > b as f64 / mf {
        b += 1;
    }
    b
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReliabilityBin {
    pub bin_low: f64,
    pub bin_high: f64,
    pub count: usize,
    pub mean_conf: f64,
    pub mean_acc: f64,
}

/// Per-bin counts, mean confidence and accuracy (empty bins report zeros).
pub fn reliability(p: &PredictionSet, m: usize) -> Vec<ReliabilityBin> {
    let m = m.max(1);
    let mut count = vec![0usize; m];
    let mut conf = vec![0.0; m];
    let mut correct = vec![0usize; m];
    for ((row, &y), c) in p.probs.iter().zip(&p.labels).zip(p.confidences()) {
        let b = ece_bin(c, m) - 1;
        count[b] += 1;
        conf[b] += c;
        correct[b] += (argmax(row) == y) as usize;
    }
    (0..m)
        .map(|b| ReliabilityBin {
            bin_low: b as f64 / m as f64,
            bin_high: (b + 1) as f64 / m as f64,
            count: count[b],
            mean_conf: if count[b] > 0 { conf[b] / count[b] as f64 } else { 0.0 },
            mean_acc: if count[b] > 0 {
                correct[b] as f64 / count[b] as f64
            } else {
                0.0
            },
        })
        .collect()
}

/// Expected calibration error with `m` equal-width bins on (0, 1].
pub fn ece(p: &PredictionSet, m: usize) -> f64 {
    if p.is_empty() {
        return 0.0;
    }
    let n = p.len() as f64;
    reliability(p, m)
        .iter()
        .filter(|b| b.count > 0)
        .map(|b| b.count as f64 / n * (b.mean_acc - b.mean_conf).abs())
        .sum()
}

pub fn write_reliability_csv(path: &Path, bins: &[ReliabilityBin]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut w = csv::Writer::from_path(path)?;
    for b in bins {
        w.serialize(b)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
