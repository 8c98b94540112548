use super::discretize::DiscretizedRoi;
use super::NEIGHBORS_26;

pub const NAMES: [&str; 5] = ["Busyness", "Coarseness", "Complexity", "Contrast", "Strength"];

/// Coarseness reported when the tone-difference sum is zero.
pub const COARSENESS_CAP: f64 = 1e6;

/// Per level: `n[i]` voxels with at least one ROI neighbor, and
/// `s[i] = sum |i - mean neighbor level|` over those voxels.
#[derive(Debug, Clone, PartialEq)]
pub struct Ngtdm {
    pub ng: usize,
    pub n: Vec<u64>,
    pub s: Vec<f64>,
}

pub fn build(roi: &DiscretizedRoi) -> Ngtdm {
    let ng = roi.ng;
    // |i*W - S| summed per (level, neighbor count W) is an exact integer, so
    // the result does not depend on voxel order.
    let mut acc = vec![[0u64; 27]; ng];
    let mut n = vec![0u64; ng];
    for (c, l) in roi.voxels() {
        let (mut w, mut sum) = (0u64, 0u64);
        for &d in &NEIGHBORS_26 {
            let b = roi.level_at(c, d);
            if b != 0 {
                w += 1;
                sum += b as u64;
            }
        }
        if w == 0 {
            continue;
        }
        let i = l as usize - 1;
        n[i] += 1;
        acc[i][w as usize] += (l as u64 * w).abs_diff(sum);
    }
    let s = acc
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .skip(1)
                .map(|(w, &v)| v as f64 / w as f64)
                .sum()
        })
        .collect();
    Ngtdm { ng, n, s }
}

pub fn features(m: &Ngtdm) -> [f64; 5] {
    let nvp: u64 = m.n.iter().sum();
    if nvp == 0 {
        return [0.0, COARSENESS_CAP, 0.0, 0.0, 0.0];
    }
    let nvp = nvp as f64;
    let p: Vec<f64> = m.n.iter().map(|&c| c as f64 / nvp).collect();
    let present: Vec<usize> = (0..m.ng).filter(|&i| m.n[i] > 0).collect();
    let ngp = present.len() as f64;
    let lv = |i: usize| (i + 1) as f64;
    let ps: f64 = present.iter().map(|&i| p[i] * m.s[i]).sum();
    let s_sum: f64 = present.iter().map(|&i| m.s[i]).sum();

    let coarseness = if ps > 0.0 { (1.0 / ps).min(COARSENESS_CAP) } else { COARSENESS_CAP };
    let (mut pair_contrast, mut busy_den, mut complexity, mut strength_num) = (0.0, 0.0, 0.0, 0.0);
    for &i in &present {
        for &j in &present {
            let d = lv(i) - lv(j);
            pair_contrast += p[i] * p[j] * d * d;
            busy_den += (lv(i) * p[i] - lv(j) * p[j]).abs();
            complexity += d.abs() * (p[i] * m.s[i] + p[j] * m.s[j]) / (p[i] + p[j]);
            strength_num += (p[i] + p[j]) * d * d;
        }
    }
    let contrast = if ngp > 1.0 {
        pair_contrast / (ngp * (ngp - 1.0)) * s_sum / nvp
    } else {
        0.0
    };
    let busyness = if busy_den > 0.0 { ps / busy_den } else { 0.0 };
    let strength = if s_sum > 0.0 { strength_num / s_sum } else { 0.0 };
    [busyness, coarseness, complexity / nvp, contrast, strength]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_roi_hits_cap() {
        let roi = DiscretizedRoi::from_levels([2, 2, 2], [1.0; 3], vec![1; 8], 1);
        let f = features(&build(&roi));
        assert_eq!(f, [0.0, COARSENESS_CAP, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn two_voxel_tone_difference() {
        let roi = DiscretizedRoi::from_levels([2, 1, 1], [1.0; 3], vec![1, 3], 3);
        let m = build(&roi);
        assert_eq!(m.n, vec![1, 0, 1]);
        assert_eq!(m.s, vec![2.0, 0.0, 2.0]);
    }
}
