use super::discretize::DiscretizedRoi;
use super::first_order::entropy2;
use super::{average_sorted, DIRECTIONS};

pub const NAMES: [&str; 24] = [
    "Autocorrelation",
    "ClusterProminence",
    "ClusterShade",
    "ClusterTendency",
    "Contrast",
    "Correlation",
    "DifferenceAverage",
    "DifferenceEntropy",
    "DifferenceVariance",
    "Id",
    "Idm",
    "Idmn",
    "Idn",
    "Imc1",
    "Imc2",
    "InverseVariance",
    "JointAverage",
    "JointEnergy",
    "JointEntropy",
    "MaximumProbability",
    "SumAverage",
    "SumEntropy",
    "SumSquares",
    "SumVariance",
];

/// Symmetric co-occurrence counts at distance 1, one `ng x ng` table
/// (row-major, level `i` at row `i - 1`) per direction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Glcm {
    pub ng: usize,
    pub per_direction: Vec<Vec<u64>>,
}

pub fn build(roi: &DiscretizedRoi) -> Glcm {
    let ng = roi.ng;
    let per_direction = DIRECTIONS
        .iter()
        .map(|&d| {
            let mut m = vec![0u64; ng * ng];
            for (c, a) in roi.voxels() {
                let b = roi.level_at(c, d);
                if b != 0 {
                    let (a, b) = (a as usize - 1, b as usize - 1);
                    m[a * ng + b] += 1;
                    m[b * ng + a] += 1;
                }
            }
            m
        })
        .collect();
    Glcm { ng, per_direction }
}

/// Features of one normalized symmetric matrix.
pub fn matrix_features(counts: &[u64], ng: usize) -> [f64; 24] {
    let total: u64 = counts.iter().sum();
    assert!(total > 0);
    let p: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64).collect();
    let lv = |k: usize| (k + 1) as f64;
    let mut px = vec![0.0; ng];
    let mut pxy_sum = vec![0.0; 2 * ng + 1];
    let mut pxy_diff = vec![0.0; ng];
    for i in 0..ng {
        for j in 0..ng {
            let q = p[i * ng + j];
            px[i] += q;
            pxy_sum[i + j + 2] += q;
            pxy_diff[i.abs_diff(j)] += q;
        }
    }
    let mu: f64 = (0..ng).map(|i| lv(i) * px[i]).sum();
    let var: f64 = (0..ng).map(|i| (lv(i) - mu).powi(2) * px[i]).sum();

    let (mut autocorr, mut prom, mut shade, mut tend, mut contrast) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut energy, mut hxy, mut hxy1, mut hxy2, mut maxp) = (0.0, 0.0, 0.0, 0.0, 0.0f64);
    for i in 0..ng {
        for j in 0..ng {
            let q = p[i * ng + j];
            let pp = px[i] * px[j];
            if pp > 0.0 {
                hxy2 -= pp * pp.log2();
            }
            if q == 0.0 {
                continue;
            }
            let (a, b) = (lv(i), lv(j));
            let t = a + b - 2.0 * mu;
            autocorr += q * a * b;
            prom += q * t.powi(4);
            shade += q * t.powi(3);
            tend += q * t * t;
            contrast += q * (a - b) * (a - b);
            energy += q * q;
            hxy -= q * q.log2();
            hxy1 -= q * pp.log2();
            maxp = maxp.max(q);
        }
    }
    let correlation = if var > 0.0 {
        (autocorr - mu * mu) / var
    } else {
        1.0
    };
    let hx = entropy2(px.iter().copied());
    let imc1 = if hx > 0.0 { (hxy - hxy1) / hx } else { 0.0 };
    let imc2 = if hxy2 > hxy {
        (1.0 - (-2.0 * (hxy2 - hxy)).exp()).sqrt()
    } else {
        0.0
    };

    let ngf = ng as f64;
    let (mut da, mut id, mut idm, mut idmn, mut idn, mut inv) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for (k, &q) in pxy_diff.iter().enumerate() {
        let kf = k as f64;
        da += kf * q;
        id += q / (1.0 + kf);
        idm += q / (1.0 + kf * kf);
        idmn += q / (1.0 + kf * kf / (ngf * ngf));
        idn += q / (1.0 + kf / ngf);
        if k > 0 {
            inv += q / (kf * kf);
        }
    }
    let dv: f64 = pxy_diff
        .iter()
        .enumerate()
        .map(|(k, &q)| (k as f64 - da).powi(2) * q)
        .sum();
    let sa: f64 = pxy_sum.iter().enumerate().map(|(k, &q)| k as f64 * q).sum();
    let sv: f64 = pxy_sum
        .iter()
        .enumerate()
        .map(|(k, &q)| (k as f64 - sa).powi(2) * q)
        .sum();

    [
        autocorr,
        prom,
        shade,
        tend,
        contrast,
        correlation,
        da,
        entropy2(pxy_diff.iter().copied()),
        dv,
        id,
        idm,
        idmn,
        idn,
        imc1,
        imc2,
        inv,
        mu,
        energy,
        hxy,
        maxp,
        sa,
        entropy2(pxy_sum.iter().copied()),
        var,
        sv,
    ]
}

/// Direction-averaged features over non-empty directions. An ROI without
/// any neighboring pair is scored as a single constant patch.
pub fn features(m: &Glcm) -> [f64; 24] {
    let rows: Vec<[f64; 24]> = m
        .per_direction
        .iter()
        .filter(|t| t.iter().any(|&c| c > 0))
        .map(|t| matrix_features(t, m.ng))
        .collect();
    if rows.is_empty() {
        let mut t = vec![0u64; m.ng * m.ng];
        t[0] = 1;
        return matrix_features(&t, m.ng);
    }
    average_sorted(&rows)
}
