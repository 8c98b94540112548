//! Segmentation variants derived from a ground-truth mask: two full
//! edge-threshold variants, axial partial slabs, rotated-scan full
//! segmentation and seeded inter-observer boundary perturbation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phantom::{ScanInstance, ScanMeta};
use crate::rng;
use crate::volume::{LabelMask, VoxelVolume, FACE_OFFSETS};
use rand::Rng as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SegType {
    #[serde(rename = "full_A")]
    FullA,
    #[serde(rename = "full_B")]
    FullB,
    #[serde(rename = "partial")]
    Partial,
    #[serde(rename = "rotated_full")]
    RotatedFull,
}

impl SegType {
    pub const ALL: [SegType; 4] = [
        SegType::FullA,
        SegType::FullB,
        SegType::Partial,
        SegType::RotatedFull,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SegType::FullA => "full_A",
            SegType::FullB => "full_B",
            SegType::Partial => "partial",
            SegType::RotatedFull => "rotated_full",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.name() == s)
    }
}

impl std::fmt::Display for SegType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Observer {
    Obs1,
    Obs2,
}

impl Observer {
    pub const ALL: [Observer; 2] = [Observer::Obs1, Observer::Obs2];

    pub fn name(self) -> &'static str {
        match self {
            Observer::Obs1 => "obs1",
            Observer::Obs2 => "obs2",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|o| o.name() == s)
    }
}

impl std::fmt::Display for Observer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    A,
    B,
}

/// Segmentation tunables. Thresholds are gradient percentiles over each
/// label's boundary shell; shell voxels below the cutoff are dropped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SegParams {
    pub p_obs: f64,
    pub threshold_a: f64,
    pub threshold_b: f64,
    pub fraction: f64,
}

impl Default for SegParams {
    fn default() -> Self {
        Self {
            p_obs: 0.25,
            threshold_a: 80.0,
            threshold_b: 60.0,
            fraction: 0.5,
        }
    }
}

impl SegParams {
    pub fn threshold(&self, variant: Variant) -> f64 {
        match variant {
            Variant::A => self.threshold_a,
            Variant::B => self.threshold_b,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_obs) {
            return Err(Error::InvalidArgument(format!("p_obs {} not in [0, 1]", self.p_obs)));
        }
        for t in [self.threshold_a, self.threshold_b] {
            if !(0.0..=100.0).contains(&t) {
                return Err(Error::InvalidArgument(format!("threshold {t} not in [0, 100]")));
            }
        }
        if !(self.fraction > 0.0 && self.fraction <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "fraction {} not in (0, 1]",
                self.fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    pub mask: LabelMask,
    pub seg_type: SegType,
    pub observer: Option<Observer>,
    pub source_scan: ScanMeta,
    /// Labels a partial cut kept whole because they span a single slice.
    pub whole_labels: Vec<u16>,
}

/// Gradient magnitude (per mm) by central differences, one-sided at edges.
fn gradient_magnitude(v: &VoxelVolume, i: usize) -> f64 {
    let g = &v.grid;
    let mut sum = 0.0;
    for axis in 0..3 {
        let mut plus = [0i64; 3];
        plus[axis] = 1;
        let mut minus = [0i64; 3];
        minus[axis] = -1;
        let (hi, lo, span) = match (g.offset(i, plus), g.offset(i, minus)) {
            (Some(p), Some(m)) => (p, m, 2.0),
            (Some(p), None) => (p, i, 1.0),
            (None, Some(m)) => (i, m, 1.0),
            (None, None) => continue,
        };
        let d = (v.data[hi] as f64 - v.data[lo] as f64) / (span * g.spacing[axis]);
        sum += d * d;
    }
    sum.sqrt()
}

/// Linear-interpolated percentile of `values` (`q` in [0, 100]).
pub fn percentile(values: &[f64], q: f64) -> f64 {
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    percentile_sorted(&s, q)
}

pub(crate) fn percentile_sorted(s: &[f64], q: f64) -> f64 {
    if s.is_empty() {
        return f64::NAN;
    }
    let pos = q / 100.0 * (s.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    s[lo] + (s[hi] - s[lo]) * (pos - lo as f64)
}

fn check_pair(gt: &LabelMask, volume: &VoxelVolume) -> Result<()> {
    if gt.grid.dims != volume.grid.dims {
        return Err(Error::Segmentation(format!(
            "mask dims {:?} differ from volume dims {:?}",
            gt.grid.dims, volume.grid.dims
        )));
    }
    Ok(())
}

fn ensure_nonempty(out: &LabelMask, reference: &LabelMask) -> Result<()> {
    let counts = out.counts();
    for l in reference.present_labels() {
        if counts.get(l as usize).copied().unwrap_or(0) == 0 {
            return Err(Error::EmptyRoi(l));
        }
    }
    Ok(())
}

/// Edge-threshold segmentation: interior voxels are kept; a boundary-shell
/// voxel is dropped when its gradient magnitude falls below the
/// `percentile`-th percentile of its label's shell gradients.
pub fn edge_threshold(gt: &LabelMask, volume: &VoxelVolume, percentile_q: f64) -> Result<LabelMask> {
    check_pair(gt, volume)?;
    let mut out = gt.clone();
    if percentile_q <= 0.0 {
        return Ok(out);
    }
    for l in gt.present_labels() {
        let shell = gt.inner_shell(l);
        let grads: Vec<f64> = shell.iter().map(|&i| gradient_magnitude(volume, i)).collect();
        let cut = percentile(&grads, percentile_q);
        for (&i, &g) in shell.iter().zip(&grads) {
            if g < cut {
                out.labels[i] = 0;
            }
        }
    }
    ensure_nonempty(&out, gt)?;
    Ok(out)
}

/// Seeded inter-observer perturbation: every voxel on a label's inner
/// 6-connected shell leaves the label with probability `p_obs`. Shell
/// membership is taken from the input; voxels are visited in index order
/// with one stream.
pub fn perturb_mask(mask: &LabelMask, p_obs: f64, seed: u64) -> Result<LabelMask> {
    if p_obs == 0.0 {
        return Ok(mask.clone());
    }
    let g = &mask.grid;
    let mut out = mask.clone();
    let mut r = rng::rng(seed);
    for (i, &l) in mask.labels.iter().enumerate() {
        if l == 0 {
            continue;
        }
        let on_shell = FACE_OFFSETS.iter().any(|&d| match g.offset(i, d) {
            Some(j) => mask.labels[j] != l,
            None => true,
        });
        if on_shell && r.random::<f64>() < p_obs {
            out.labels[i] = 0;
        }
    }
    ensure_nonempty(&out, mask)?;
    Ok(out)
}

fn observer_seed(meta: &ScanMeta, observer: Observer) -> u64 {
    let seq = meta.sequence.map(|s| s.name()).unwrap_or("base");
    rng::derive(
        meta.seed,
        &format!("observer/{}/{}/{}", seq, meta.scan_id, observer.name()),
    )
}

/// Full segmentation of a scan for one observer.
pub fn full_segmentation(
    scan: &ScanInstance,
    variant: Variant,
    observer: Observer,
    params: &SegParams,
) -> Result<Segmentation> {
    params.validate()?;
    let gt = &scan.ground_truth_mask;
    let edge = edge_threshold(gt, &scan.volume, params.threshold(variant))?;
    let mask = perturb_mask(&edge, params.p_obs, observer_seed(&scan.meta, observer))?;
    Ok(Segmentation {
        mask,
        seg_type: match variant {
            Variant::A => SegType::FullA,
            Variant::B => SegType::FullB,
        },
        observer: Some(observer),
        source_scan: scan.meta.clone(),
        whole_labels: Vec::new(),
    })
}

/// Full segmentation of a rotated acquisition.
pub fn rotated_segmentation(
    rotated_scan: &ScanInstance,
    variant: Variant,
    observer: Observer,
    params: &SegParams,
) -> Result<Segmentation> {
    if !rotated_scan.meta.rotated {
        return Err(Error::Segmentation(
            "rotated segmentation requires a rotated scan".into(),
        ));
    }
    let mut seg = full_segmentation(rotated_scan, variant, observer, params)?;
    seg.seg_type = SegType::RotatedFull;
    Ok(seg)
}

/// Re-draws the observer perturbation on top of an existing segmentation.
pub fn observer_variant(
    seg: &Segmentation,
    observer: Observer,
    p_obs: f64,
    observer_seed: u64,
) -> Result<Segmentation> {
    Ok(Segmentation {
        mask: perturb_mask(&seg.mask, p_obs, observer_seed)?,
        observer: Some(observer),
        ..seg.clone()
    })
}

/// Contiguous axial slab `[lo, hi]` grown outward from the slice nearest the
/// z-centroid, keeping the slab midpoint as close to the centroid as
/// possible, and stopped where the kept count is nearest `fraction * total`.
pub fn central_slab(slice_counts: &[usize], fraction: f64) -> (usize, usize) {
    let total: usize = slice_counts.iter().sum();
    let first = slice_counts.iter().position(|&c| c > 0).unwrap_or(0);
    let last = slice_counts.iter().rposition(|&c| c > 0).unwrap_or(0);
    if total == 0 || first == last {
        return (first, last);
    }
    let centroid = slice_counts
        .iter()
        .enumerate()
        .map(|(z, &c)| z as f64 * c as f64)
        .sum::<f64>()
        / total as f64;
    let target = fraction * total as f64;
    let start = (first..=last)
        .min_by(|&a, &b| (a as f64 - centroid).abs().total_cmp(&(b as f64 - centroid).abs()))
        .unwrap_or(first);
    let (mut lo, mut hi) = (start, start);
    let mut kept = slice_counts[start];
    let mut best = ((kept as f64 - target).abs(), lo, hi);
    while lo > first || hi < last {
        let down = (lo > first).then(|| ((lo - 1 + hi) as f64 / 2.0 - centroid).abs());
        let up = (hi < last).then(|| ((lo + hi + 1) as f64 / 2.0 - centroid).abs());
        let go_down = match (down, up) {
            (Some(d), Some(u)) => d <= u,
            (Some(_), None) => true,
            _ => false,
        };
        if go_down {
            lo -= 1;
            kept += slice_counts[lo];
        } else {
            hi += 1;
            kept += slice_counts[hi];
        }
        let err = (kept as f64 - target).abs();
        if err < best.0 {
            best = (err, lo, hi);
        }
    }
    (best.1, best.2)
}

/// Middle axial section of every label.
pub fn partial_segmentation(full: &Segmentation, fraction: f64) -> Result<Segmentation> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!("fraction {fraction} not in (0, 1)")));
    }
    let m = &full.mask;
    let [nx, ny, nz] = m.grid.dims;
    let labels = m.present_labels();
    let max_label = labels.last().copied().unwrap_or(0) as usize;
    let mut per_slice = vec![vec![0usize; nz]; max_label + 1];
    for (i, &l) in m.labels.iter().enumerate() {
        if l != 0 {
            per_slice[l as usize][i / (nx * ny)] += 1;
        }
    }
    let mut slabs = vec![(0usize, usize::MAX); max_label + 1];
    let mut whole = Vec::new();
    for &l in &labels {
        let counts = &per_slice[l as usize];
        if counts.iter().filter(|&&c| c > 0).count() == 1 {
            whole.push(l);
            log::warn!("label {l} spans a single slice; kept whole in partial segmentation");
        } else if fraction < 1.0 {
            slabs[l as usize] = central_slab(counts, fraction);
        }
    }
    let mut out = m.clone();
    for (i, l) in out.labels.iter_mut().enumerate() {
        if *l != 0 {
            let z = i / (nx * ny);
            let (lo, hi) = slabs[*l as usize];
            if z < lo || z > hi {
                *l = 0;
            }
        }
    }
    ensure_nonempty(&out, m)?;
    Ok(Segmentation {
        mask: out,
        seg_type: SegType::Partial,
        whole_labels: whole,
        ..full.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slab_of_ten_equal_slices_is_middle_five() {
        let counts = vec![10; 10];
        let (lo, hi) = central_slab(&counts, 0.5);
        assert_eq!(hi - lo + 1, 5);
        assert!(lo == 2 || lo == 3);
    }

    #[test]
    fn slab_with_unit_fraction_is_everything() {
        let counts = vec![0, 3, 9, 4, 1, 0];
        assert_eq!(central_slab(&counts, 1.0), (1, 4));
    }

    #[test]
    fn single_slice_is_whole() {
        assert_eq!(central_slab(&[0, 0, 7, 0], 0.5), (2, 2));
    }

    #[test]
    fn percentile_matches_linear_rule() {
        let v = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(percentile(&v, 0.0), 1.0);
        assert_eq!(percentile(&v, 100.0), 4.0);
        assert!((percentile(&v, 50.0) - 2.5).abs() < 1e-15);
        assert!((percentile(&v, 80.0) - 3.4).abs() < 1e-12);
    }
}
