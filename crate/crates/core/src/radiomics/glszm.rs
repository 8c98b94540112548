use super::discretize::DiscretizedRoi;
use super::runs::run_stats;
use super::NEIGHBORS_26;

pub const NAMES: [&str; 16] = [
    "GrayLevelNonUniformity",
    "GrayLevelNonUniformityNormalized",
    "GrayLevelVariance",
    "HighGrayLevelZoneEmphasis",
    "LargeAreaEmphasis",
    "LargeAreaHighGrayLevelEmphasis",
    "LargeAreaLowGrayLevelEmphasis",
    "LowGrayLevelZoneEmphasis",
    "SizeZoneNonUniformity",
    "SizeZoneNonUniformityNormalized",
    "SmallAreaEmphasis",
    "SmallAreaHighGrayLevelEmphasis",
    "SmallAreaLowGrayLevelEmphasis",
    "ZoneEntropy",
    "ZonePercentage",
    "ZoneVariance",
];

/// Zone counts of 26-connected equal-level regions: `ng x max_zone`,
/// column `j` = zone size `j + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Glszm {
    pub ng: usize,
    pub max_zone: usize,
    pub counts: Vec<u64>,
}

pub fn build(roi: &DiscretizedRoi) -> Glszm {
    let ng = roi.ng;
    let max_zone = roi.voxel_count().max(1);
    let mut counts = vec![0u64; ng * max_zone];
    let mut seen = vec![false; roi.levels.len()];
    let mut stack = Vec::new();
    for start in 0..roi.levels.len() {
        let l = roi.levels[start];
        if l == 0 || seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let mut size = 0usize;
        while let Some(i) = stack.pop() {
            size += 1;
            let c = roi.coords(i);
            for &d in &NEIGHBORS_26 {
                if roi.level_at(c, d) != l {
                    continue;
                }
                let j = roi.index(
                    (c[0] as i64 + d[0]) as usize,
                    (c[1] as i64 + d[1]) as usize,
                    (c[2] as i64 + d[2]) as usize,
                );
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        counts[(l as usize - 1) * max_zone + size - 1] += 1;
    }
    Glszm {
        ng,
        max_zone,
        counts,
    }
}

pub fn features(m: &Glszm, n_voxels: usize) -> [f64; 16] {
    let s = run_stats(&m.counts, m.ng, m.max_zone, n_voxels);
    [
        s.gln,
        s.glnn,
        s.glv,
        s.high_gl,
        s.long,
        s.long_high,
        s.long_low,
        s.low_gl,
        s.len_nu,
        s.len_nun,
        s.short,
        s.short_high,
        s.short_low,
        s.entropy,
        s.percentage,
        s.len_var,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_sorted() {
        assert!(NAMES.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn constant_roi_is_one_zone() {
        let roi = DiscretizedRoi::from_levels([2, 2, 2], [1.0; 3], vec![1; 8], 1);
        let m = build(&roi);
        assert_eq!(m.counts.iter().sum::<u64>(), 1);
        assert_eq!(m.counts[7], 1);
    }

    #[test]
    fn diagonal_neighbors_join_zones() {
        let roi = DiscretizedRoi::from_levels([2, 2, 1], [1.0; 3], vec![1, 2, 2, 1], 2);
        let m = build(&roi);
        assert_eq!(m.counts, vec![0, 1, 0, 0, 0, 1, 0, 0]);
    }
}
