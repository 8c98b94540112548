use super::discretize::DiscretizedRoi;
use super::first_order::entropy2;
use super::NEIGHBORS_26;

pub const NAMES: [&str; 14] = [
    "DependenceEntropy",
    "DependenceNonUniformity",
    "DependenceNonUniformityNormalized",
    "DependenceVariance",
    "GrayLevelNonUniformity",
    "GrayLevelVariance",
    "HighGrayLevelEmphasis",
    "LargeDependenceEmphasis",
    "LargeDependenceHighGrayLevelEmphasis",
    "LargeDependenceLowGrayLevelEmphasis",
    "LowGrayLevelEmphasis",
    "SmallDependenceEmphasis",
    "SmallDependenceHighGrayLevelEmphasis",
    "SmallDependenceLowGrayLevelEmphasis",
];

/// Number of dependence columns: 0..=26 equal-level neighbors.
pub const DEP_COLS: usize = 27;

/// Dependence counts with zero gray-level tolerance: `ng x 27`, column `k`
/// holds voxels with exactly `k` equal-level 26-neighbors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gldm {
    pub ng: usize,
    pub counts: Vec<u64>,
}

pub fn build(roi: &DiscretizedRoi) -> Gldm {
    let mut counts = vec![0u64; roi.ng * DEP_COLS];
    for (c, l) in roi.voxels() {
        let k = NEIGHBORS_26.iter().filter(|&&d| roi.level_at(c, d) == l).count();
        counts[(l as usize - 1) * DEP_COLS + k] += 1;
    }
    Gldm { ng: roi.ng, counts }
}

/// Dependence size `j = k + 1`.
pub fn features(m: &Gldm) -> [f64; 14] {
    let ng = m.ng;
    let nz: u64 = m.counts.iter().sum();
    assert!(nz > 0);
    let nz = nz as f64;
    let mut row = vec![0.0; ng];
    let mut col = [0.0; DEP_COLS];
    let (mut mu_i, mut mu_j) = (0.0, 0.0);
    let mut f = [0.0; 14];
    for i in 0..ng {
        for k in 0..DEP_COLS {
            let c = m.counts[i * DEP_COLS + k];
            if c == 0 {
                continue;
            }
            let p = c as f64 / nz;
            let a = (i + 1) as f64;
            let b = (k + 1) as f64;
            let (a2, b2) = (a * a, b * b);
            row[i] += c as f64;
            col[k] += c as f64;
            mu_i += p * a;
            mu_j += p * b;
            f[6] += p * a2;
            f[7] += p * b2;
            f[8] += p * a2 * b2;
            f[9] += p * b2 / a2;
            f[10] += p / a2;
            f[11] += p / b2;
            f[12] += p * a2 / b2;
            f[13] += p / (a2 * b2);
        }
    }
    for i in 0..ng {
        for k in 0..DEP_COLS {
            let c = m.counts[i * DEP_COLS + k];
            if c == 0 {
                continue;
            }
            let p = c as f64 / nz;
            f[3] += p * ((k + 1) as f64 - mu_j).powi(2);
            f[5] += p * ((i + 1) as f64 - mu_i).powi(2);
        }
    }
    f[0] = entropy2(m.counts.iter().map(|&c| c as f64 / nz));
    let sq: f64 = col.iter().map(|v| v * v).sum();
    f[1] = sq / nz;
    f[2] = sq / (nz * nz);
    f[4] = row.iter().map(|v| v * v).sum::<f64>() / nz;
    f
}
