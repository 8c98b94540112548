use serde::{Deserialize, Serialize};

use super::PredictionSet;
use crate::error::Result;
use crate::learner::softmax;

pub const T_MIN: f64 = 0.05;
pub const T_MAX: f64 = 20.0;
pub const T_TOL: f64 = 1e-4;
/// Simplex grid step of the ETS weight search.
pub const ETS_STEP: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CalibrationMethod {
    #[default]
    None,
    Ts,
    Ets,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum CalibrationParams {
    None,
    Ts { temperature: f64 },
    Ets { temperature: f64, weights: [f64; 3] },
}

fn logits(row: &[f64]) -> Vec<f64> {
    row.iter().map(|&p| p.max(f64::MIN_POSITIVE).ln()).collect()
}

fn tempered(z: &[f64], t: f64) -> Vec<f64> {
    let mut s: Vec<f64> = z.iter().map(|v| v / t).collect();
    softmax(&mut s);
    s
}

/// Mean negative log-likelihood of the true labels.
pub fn nll(p: &PredictionSet) -> f64 {
    let n = p.len().max(1) as f64;
    p.probs
        .iter()
        .zip(&p.labels)
        .map(|(r, &y)| -r[y].max(f64::MIN_POSITIVE).ln())
        .sum::<f64>()
        / n
}

fn ts_nll(z: &[Vec<f64>], labels: &[usize], t: f64) -> f64 {
    let n = labels.len().max(1) as f64;
    z.iter()
        .zip(labels)
        .map(|(r, &y)| -tempered(r, t)[y].max(f64::MIN_POSITIVE).ln())
        .sum::<f64>()
        / n
}

/// Temperature minimizing validation NLL of `softmax(log p / T)`, found by
/// golden-section search on `[0.05, 20]`; T = 1 is kept when it scores at
/// least as well.
pub fn fit_temperature(val: &PredictionSet) -> CalibrationParams {
    if val.is_empty() || val.probs.iter().all(|r| r.iter().any(|&p| p == 1.0)) {
        log::warn!("degenerate validation set for temperature scaling; using T = 1");
        return CalibrationParams::Ts { temperature: 1.0 };
    }
    let z: Vec<Vec<f64>> = val.probs.iter().map(|r| logits(r)).collect();
    let f = |t: f64| ts_nll(&z, &val.labels, t);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (T_MIN, T_MAX);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > T_TOL {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    let t = (a + b) / 2.0;
    let temperature = if f(1.0) <= f(t) { 1.0 } else { t };
    CalibrationParams::Ts { temperature }
}

fn ets_rows(z: &[Vec<f64>], t: f64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let a = z.iter().map(|r| tempered(r, t)).collect();
    let b = z.iter().map(|r| tempered(r, 1.0)).collect();
    (a, b)
}

fn mix_nll(a: &[Vec<f64>], b: &[Vec<f64>], labels: &[usize], k: usize, w: [f64; 3]) -> f64 {
    let n = labels.len().max(1) as f64;
    let u = 1.0 / k as f64;
    a.iter()
        .zip(b)
        .zip(labels)
        .map(|((ra, rb), &y)| -(w[0] * ra[y] + w[1] * rb[y] + w[2] * u).max(f64::MIN_POSITIVE).ln())
        .sum::<f64>()
        / n
}

/// Ensemble temperature scaling: `w1 softmax(z/T) + w2 softmax(z) + w3 / K`
/// with T from temperature scaling and weights from a simplex grid search
/// followed by pattern-search refinement.
pub fn fit_ets(val: &PredictionSet) -> CalibrationParams {
    let t = match fit_temperature(val) {
        CalibrationParams::Ts { temperature } => temperature,
        _ => 1.0,
    };
    let z: Vec<Vec<f64>> = val.probs.iter().map(|r| logits(r)).collect();
    let (a, b) = ets_rows(&z, t);
    let f = |w: [f64; 3]| mix_nll(&a, &b, &val.labels, val.k, w);
    let steps = (1.0 / ETS_STEP).round() as usize;
    let mut best_w = [1.0, 0.0, 0.0];
    let mut best = f64::INFINITY;
    for i in (0..=steps).rev() {
        for j in 0..=(steps - i) {
            let w1 = i as f64 / steps as f64;
            let w2 = j as f64 / steps as f64;
            let w = [w1, w2, (1.0 - w1 - w2).max(0.0)];
            let v = f(w);
            if v < best {
                best = v;
                best_w = w;
            }
        }
    }
    let dirs = [
        [1.0, -1.0, 0.0],
        [-1.0, 1.0, 0.0],
        [1.0, 0.0, -1.0],
        [-1.0, 0.0, 1.0],
        [0.0, 1.0, -1.0],
        [0.0, -1.0, 1.0],
    ];
    let mut step = ETS_STEP / 2.0;
    while step > 1e-4 {
        let mut improved = true;
        while improved {
            improved = false;
            for d in &dirs {
                let w = [
                    best_w[0] + step * d[0],
                    best_w[1] + step * d[1],
                    best_w[2] + step * d[2],
                ];
                if w.iter().any(|&x| x < 0.0) {
                    continue;
                }
                let v = f(w);
                if v < best {
                    best = v;
                    best_w = w;
                    improved = true;
                }
            }
        }
        step /= 2.0;
    }
    CalibrationParams::Ets {
        temperature: t,
        weights: best_w,
    }
}

pub fn fit_calibration(method: CalibrationMethod, val: &PredictionSet) -> CalibrationParams {
    match method {
        CalibrationMethod::None => CalibrationParams::None,
        CalibrationMethod::Ts => fit_temperature(val),
        CalibrationMethod::Ets => fit_ets(val),
    }
}

pub fn apply_calibration(p: &PredictionSet, params: &CalibrationParams) -> Result<PredictionSet> {
    let probs = match *params {
        CalibrationParams::None => p.probs.clone(),
        CalibrationParams::Ts { temperature } => p
            .probs
            .iter()
            .map(|r| tempered(&logits(r), temperature))
            .collect(),
        CalibrationParams::Ets {
            temperature,
            weights,
        } => {
            let u = 1.0 / p.k as f64;
            p.probs
                .iter()
                .map(|r| {
                    let z = logits(r);
                    let a = tempered(&z, temperature);
                    let b = tempered(&z, 1.0);
                    let mut out: Vec<f64> = (0..p.k)
                        .map(|c| weights[0] * a[c] + weights[1] * b[c] + weights[2] * u)
                        .collect();
                    let s: f64 = out.iter().sum();
                    out.iter_mut().for_each(|v| *v /= s);
                    out
                })
                .collect()
        }
    };
    PredictionSet::new(p.k, p.labels.clone(), probs)
}
