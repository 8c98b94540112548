//! Statistics shared by the run-length and size-zone matrices: both are
//! gray level (rows) by length or size (columns) count tables.

use super::first_order::entropy2;

#[derive(Debug, Clone, Copy)]
pub(crate) struct RunStats {
    pub gln: f64,
    pub glnn: f64,
    pub glv: f64,
    pub high_gl: f64,
    pub long: f64,
    pub long_high: f64,
    pub long_low: f64,
    pub low_gl: f64,
    pub entropy: f64,
    pub len_nu: f64,
    pub len_nun: f64,
    pub percentage: f64,
    pub len_var: f64,
    pub short: f64,
    pub short_high: f64,
    pub short_low: f64,
}

/// `counts` is `ng x cols` row-major; column `j` holds length `j + 1`.
pub(crate) fn run_stats(counts: &[u64], ng: usize, cols: usize, n_voxels: usize) -> RunStats {
    let total: u64 = counts.iter().sum();
    assert!(total > 0);
    let nr = total as f64;
    let mut row = vec![0.0; ng];
    let mut col = vec![0.0; cols];
    let mut s = RunStats {
        gln: 0.0,
        glnn: 0.0,
        glv: 0.0,
        high_gl: 0.0,
        long: 0.0,
        long_high: 0.0,
        long_low: 0.0,
        low_gl: 0.0,
        entropy: 0.0,
        len_nu: 0.0,
        len_nun: 0.0,
        percentage: nr / n_voxels as f64,
        len_var: 0.0,
        short: 0.0,
        short_high: 0.0,
        short_low: 0.0,
    };
    let (mut mu_i, mut mu_j) = (0.0, 0.0);
    for i in 0..ng {
        for j in 0..cols {
            let c = counts[i * cols + j];
            if c == 0 {
                continue;
            }
            let p = c as f64 / nr;
            let a = (i + 1) as f64;
            let b = (j + 1) as f64;
            let (a2, b2) = (a * a, b * b);
            row[i] += c as f64;
            col[j] += c as f64;
            mu_i += p * a;
            mu_j += p * b;
            s.high_gl += p * a2;
            s.low_gl += p / a2;
            s.long += p * b2;
            s.short += p / b2;
            s.long_high += p * a2 * b2;
            s.long_low += p * b2 / a2;
            s.short_high += p * a2 / b2;
            s.short_low += p / (a2 * b2);
        }
    }
    for i in 0..ng {
        for j in 0..cols {
            let c = counts[i * cols + j];
            if c == 0 {
                continue;
            }
            let p = c as f64 / nr;
            s.glv += p * ((i + 1) as f64 - mu_i).powi(2);
            s.len_var += p * ((j + 1) as f64 - mu_j).powi(2);
        }
    }
    s.entropy = entropy2(counts.iter().map(|&c| c as f64 / nr));
    let sq: f64 = row.iter().map(|r| r * r).sum();
    s.gln = sq / nr;
    s.glnn = sq / (nr * nr);
    let sq: f64 = col.iter().map(|r| r * r).sum();
    s.len_nu = sq / nr;
    s.len_nun = sq / (nr * nr);
    s
}
