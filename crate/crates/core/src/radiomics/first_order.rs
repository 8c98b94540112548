use crate::segmentation::percentile_sorted;

pub const NAMES: [&str; 18] = [
    "10Percentile",
    "90Percentile",
    "Energy",
    "Entropy",
    "InterquartileRange",
    "Kurtosis",
    "Maximum",
    "Mean",
    "MeanAbsoluteDeviation",
    "Median",
    "Minimum",
    "Range",
    "RobustMeanAbsoluteDeviation",
    "RootMeanSquared",
    "Skewness",
    "TotalEnergy",
    "Uniformity",
    "Variance",
];

/// Entropy (base 2) of a probability vector, skipping zero terms.
pub(crate) fn entropy2(p: impl Iterator<Item = f64>) -> f64 {
    -p.filter(|&q| q > 0.0).map(|q| q * q.log2()).sum::<f64>()
}

fn mean_abs_dev(sorted: &[f64]) -> f64 {
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    sorted.iter().map(|x| (x - mean).abs()).sum::<f64>() / n
}

/// First-order statistics. Sums run over sorted values so the result does
/// not depend on voxel order. `levels` holds the discretized gray levels of
/// the same voxels in any order, 0 entries ignored (Entropy, Uniformity).
pub fn first_order(values: &[f64], levels: &[u16], ng: usize, voxel_volume: f64) -> [f64; 18] {
    assert!(!values.is_empty());
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mean = s.iter().sum::<f64>() / n;
    let energy: f64 = s.iter().map(|x| x * x).sum();
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in &s {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let (skew, kurt) = if m2 > 0.0 {
        (m3 / m2.powf(1.5), m4 / (m2 * m2))
    } else {
        (0.0, 0.0)
    };
    let p10 = percentile_sorted(&s, 10.0);
    let p90 = percentile_sorted(&s, 90.0);
    let robust: Vec<f64> = s.iter().copied().filter(|&x| x >= p10 && x <= p90).collect();
    let mut hist = vec![0usize; ng + 1];
    for &l in levels {
        hist[l as usize] += 1;
    }
    let probs = || hist.iter().skip(1).map(|&c| c as f64 / n);
    let min = s[0];
    let max = s[s.len() - 1];
    [
        p10,
        p90,
        energy,
        entropy2(probs()),
        percentile_sorted(&s, 75.0) - percentile_sorted(&s, 25.0),
        kurt,
        max,
        mean,
        mean_abs_dev(&s),
        percentile_sorted(&s, 50.0),
        min,
        max - min,
        if robust.is_empty() { 0.0 } else { mean_abs_dev(&robust) },
        (energy / n).sqrt(),
        skew,
        energy * voxel_volume,
        probs().map(|p| p * p).sum(),
        m2,
    ]
}
