use super::discretize::DiscretizedRoi;
use super::runs::run_stats;
use super::{average_sorted, DIRECTIONS};

pub const NAMES: [&str; 16] = [
    "GrayLevelNonUniformity",
    "GrayLevelNonUniformityNormalized",
    "GrayLevelVariance",
    "HighGrayLevelRunEmphasis",
    "LongRunEmphasis",
    "LongRunHighGrayLevelEmphasis",
    "LongRunLowGrayLevelEmphasis",
    "LowGrayLevelRunEmphasis",
    "RunEntropy",
    "RunLengthNonUniformity",
    "RunLengthNonUniformityNormalized",
    "RunPercentage",
    "RunVariance",
    "ShortRunEmphasis",
    "ShortRunHighGrayLevelEmphasis",
    "ShortRunLowGrayLevelEmphasis",
];

/// Run-length counts per direction: `ng x max_run`, column `j` = length `j + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Glrlm {
    pub ng: usize,
    pub max_run: usize,
    pub per_direction: Vec<Vec<u64>>,
}

pub fn build(roi: &DiscretizedRoi) -> Glrlm {
    let ng = roi.ng;
    let max_run = roi.dims.iter().copied().max().unwrap_or(1);
    let per_direction = DIRECTIONS
        .iter()
        .map(|&d| {
            let back = [-d[0], -d[1], -d[2]];
            let mut m = vec![0u64; ng * max_run];
            for (c, l) in roi.voxels() {
                if roi.level_at(c, back) == l {
                    continue;
                }
                let mut len = 1usize;
                let mut step = d;
                while roi.level_at(c, step) == l {
                    len += 1;
                    step = [step[0] + d[0], step[1] + d[1], step[2] + d[2]];
                }
                m[(l as usize - 1) * max_run + len - 1] += 1;
            }
            m
        })
        .collect();
    Glrlm {
        ng,
        max_run,
        per_direction,
    }
}

pub fn matrix_features(counts: &[u64], ng: usize, max_run: usize, n_voxels: usize) -> [f64; 16] {
    let s = run_stats(counts, ng, max_run, n_voxels);
    [
        s.gln,
        s.glnn,
        s.glv,
        s.high_gl,
        s.long,
        s.long_high,
        s.long_low,
        s.low_gl,
        s.entropy,
        s.len_nu,
        s.len_nun,
        s.percentage,
        s.len_var,
        s.short,
        s.short_high,
        s.short_low,
    ]
}

/// Direction-averaged features. Every direction of a nonempty ROI has runs.
pub fn features(m: &Glrlm, n_voxels: usize) -> [f64; 16] {
    let rows: Vec<[f64; 16]> = m
        .per_direction
        .iter()
        .map(|t| matrix_features(t, m.ng, m.max_run, n_voxels))
        .collect();
    average_sorted(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_sorted() {
        assert!(NAMES.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn uniform_row_is_one_run() {
        let roi = DiscretizedRoi::from_levels([4, 1, 1], [1.0; 3], vec![1; 4], 1);
        let m = build(&roi);
        assert_eq!(m.per_direction[0], vec![0, 0, 0, 1]);
        assert_eq!(m.per_direction[1], vec![4, 0, 0, 0]);
    }
}
