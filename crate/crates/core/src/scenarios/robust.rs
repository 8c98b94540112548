//! Test-retest robust feature screening by concordance correlation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::dataset::{CellKey, Dataset};
use crate::error::{Error, Result};
use crate::phantom::{ScanId, Sequence};
use crate::segmentation::{Observer, SegType};

pub const DEFAULT_CCC_THRESHOLD: f64 = 0.9;

/// Reference robust-set sizes, reported next to the achieved sizes.
pub const REFERENCE_COUNTS: [(Sequence, usize); 5] = [
    (Sequence::T2Map, 84),
    (Sequence::T2Flair, 59),
    (Sequence::T1Tse, 33),
    (Sequence::T2Tse, 31),
    (Sequence::T2Haste, 27),
];
pub const REFERENCE_CONSISTENT: usize = 8;

/// Segmentations treated as repeat measurements of one fruit.
pub const MEASUREMENT_SEG_TYPES: [SegType; 2] = [SegType::FullA, SegType::FullB];
pub const MEASUREMENT_SCANS: [ScanId; 2] = [ScanId::S1, ScanId::S2];

/// Lin's concordance correlation coefficient with population moments.
/// `None` when both series are the same constant (CCC undefined).
pub fn ccc(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len(), "paired series differ in length");
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
        sxy += (a - mx) * (b - my);
    }
    let den = sxx / n + syy / n + (mx - my) * (mx - my);
    if den == 0.0 {
        None
    } else {
        Some(2.0 * sxy / n / den)
    }
}

/// Minimum CCC over every pair of measurements. `measurements[m][i]` is the
/// value of sample `i` in measurement `m`. An undefined pair counts as 1 only
/// when the two series are identical.
pub fn min_pairwise_ccc(measurements: &[Vec<f64>]) -> f64 {
    let mut worst = f64::INFINITY;
    for a in 0..measurements.len() {
        for b in a + 1..measurements.len() {
            let c = match ccc(&measurements[a], &measurements[b]) {
                Some(c) => c,
                None if measurements[a] == measurements[b] => 1.0,
                None => 0.0,
            };
            worst = worst.min(c);
        }
    }
    worst
}

/// Robust feature sets per sequence plus their intersection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustFeatures {
    pub threshold: f64,
    pub per_sequence: BTreeMap<Sequence, Vec<String>>,
    /// Intersection over all sequences, in manifest order.
    pub consistent: Vec<String>,
}

impl RobustFeatures {
    pub fn for_sequence(&self, s: Sequence) -> Result<&[String]> {
        self.per_sequence
            .get(&s)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Assembly(format!("no robust set for {s}")))
    }

    /// Features robust in every listed sequence, in manifest order.
    pub fn common(&self, manifest: &[String], sequences: &[Sequence]) -> Result<Vec<String>> {
        let sets = sequences
            .iter()
            .map(|&s| self.for_sequence(s))
            .collect::<Result<Vec<_>>>()?;
        Ok(manifest
            .iter()
            .filter(|n| sets.iter().all(|set| set.contains(n)))
            .cloned()
            .collect())
    }

    pub fn counts(&self) -> BTreeMap<String, usize> {
        let mut m: BTreeMap<String, usize> = self
            .per_sequence
            .iter()
            .map(|(s, v)| (s.to_string(), v.len()))
            .collect();
        m.insert("consistent".into(), self.consistent.len());
        m
    }
}

/// The measurement matrix of one sequence: per measurement, per instance,
/// the full feature vector. Instances are aligned by id.
fn measurements(data: &Dataset, sequence: Sequence) -> Result<Vec<Vec<&[f64]>>> {
    let mut out = Vec::new();
    for &scan_id in &MEASUREMENT_SCANS {
        for &observer in &Observer::ALL {
            for &seg_type in &MEASUREMENT_SEG_TYPES {
                let key = CellKey {
                    sequence,
                    scan_id,
                    observer,
                    seg_type,
                };
                let mut rows = data.cell(key)?;
                rows.sort_by_key(|r| r.provenance.instance_id);
                out.push(rows);
            }
        }
    }
    let ids: Vec<u16> = out[0].iter().map(|r| r.provenance.instance_id).collect();
    for m in &out {
        let other: Vec<u16> = m.iter().map(|r| r.provenance.instance_id).collect();
        if other != ids {
            return Err(Error::Assembly(format!(
                "repeat measurements of {sequence} cover different instances"
            )));
        }
    }
    Ok(out
        .into_iter()
        .map(|m| m.into_iter().map(|r| r.values.as_slice()).collect())
        .collect())
}

/// Per-feature minimum pairwise CCC of one sequence, in manifest order.
pub fn feature_ccc(data: &Dataset, sequence: Sequence) -> Result<Vec<f64>> {
    let ms = measurements(data, sequence)?;
    Ok((0..data.feature_names.len())
        .map(|f| {
            let series: Vec<Vec<f64>> = ms
                .iter()
                .map(|m| m.iter().map(|v| v[f]).collect())
                .collect();
            min_pairwise_ccc(&series)
        })
        .collect())
}

/// Screens every sequence in `data` at `threshold`.
pub fn identify_robust_features(data: &Dataset, threshold: f64) -> Result<RobustFeatures> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidArgument(format!(
            "CCC threshold must lie in [0, 1], got {threshold}"
        )));
    }
    let sequences = data.sequences();
    if sequences.is_empty() {
        return Err(Error::Assembly("dataset is empty".into()));
    }
    let mut per_sequence = BTreeMap::new();
    for &s in &sequences {
        let c = feature_ccc(data, s)?;
        let kept: Vec<String> = data
            .feature_names
            .iter()
            .zip(&c)
            .filter(|(_, &v)| v >= threshold)
            .map(|(n, _)| n.clone())
            .collect();
        per_sequence.insert(s, kept);
    }
    let mut rf = RobustFeatures {
        threshold,
        per_sequence,
        consistent: Vec::new(),
    };
    rf.consistent = rf.common(&data.feature_names, &sequences)?;
    Ok(rf)
}
