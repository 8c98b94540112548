//! Brute-force oracles shared by the integration tests. Each one follows the
//! textbook definition over explicit voxel pairs, with none of the
//! production code's bookkeeping.

#![allow(dead_code)]

use radiomics_oracle::*;

pub mod radiomics_oracle {
    use radshift::radiomics::DiscretizedRoi;

    pub type Voxel = ([i64; 3], u16);

    pub fn roi_voxels(roi: &DiscretizedRoi) -> Vec<Voxel> {
        roi.voxels()
            .map(|(c, l)| ([c[0] as i64, c[1] as i64, c[2] as i64], l))
            .collect()
    }

    fn sub(a: [i64; 3], b: [i64; 3]) -> [i64; 3] {
        [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
    }

    fn chebyshev(a: [i64; 3], b: [i64; 3]) -> i64 {
        let d = sub(a, b);
        d[0].abs().max(d[1].abs()).max(d[2].abs())
    }

    /// Symmetric co-occurrence counts along `d`: every ordered pair of ROI
    /// voxels whose displacement is `+d` or `-d`.
    pub fn glcm(roi: &DiscretizedRoi, d: [i64; 3]) -> Vec<u64> {
        let ng = roi.ng;
        let v = roi_voxels(roi);
        let neg = [-d[0], -d[1], -d[2]];
        let mut m = vec![0u64; ng * ng];
        for &(p, a) in &v {
            for &(q, b) in &v {
                let delta = sub(q, p);
                if delta == d || delta == neg {
                    m[(a as usize - 1) * ng + b as usize - 1] += 1;
                }
            }
        }
        m
    }

    /// Maximal runs along `d`: a run starts at `p` with length `len` when
    /// `p, p+d, ..` share a level and neither end extends.
    pub fn glrlm(roi: &DiscretizedRoi, d: [i64; 3], max_run: usize) -> Vec<u64> {
        let ng = roi.ng;
        let v = roi_voxels(roi);
        let level = |p: [i64; 3]| v.iter().find(|(q, _)| *q == p).map(|&(_, l)| l);
        let at = |p: [i64; 3], k: i64| [p[0] + k * d[0], p[1] + k * d[1], p[2] + k * d[2]];
        let mut m = vec![0u64; ng * max_run];
        for &(p, l) in &v {
            for len in 1..=max_run as i64 {
                let inside = (0..len).all(|k| level(at(p, k)) == Some(l));
                let closed = level(at(p, -1)) != Some(l) && level(at(p, len)) != Some(l);
                if inside && closed {
                    m[(l as usize - 1) * max_run + len as usize - 1] += 1;
                }
            }
        }
        m
    }

    /// Zones of equal level under 26-adjacency, via union-find over all
    /// voxel pairs.
    pub fn glszm(roi: &DiscretizedRoi, max_zone: usize) -> Vec<u64> {
        let ng = roi.ng;
        let v = roi_voxels(roi);
        let mut parent: Vec<usize> = (0..v.len()).collect();
        fn find(p: &mut [usize], i: usize) -> usize {
            let mut r = i;
            while p[r] != r {
                r = p[r];
            }
            r
        }
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                if v[i].1 == v[j].1 && chebyshev(v[i].0, v[j].0) == 1 {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    parent[a] = b;
                }
            }
        }
        let mut size = vec![0usize; v.len()];
        for i in 0..v.len() {
            let r = find(&mut parent, i);
            size[r] += 1;
        }
        let mut m = vec![0u64; ng * max_zone];
        for i in 0..v.len() {
            if find(&mut parent, i) == i {
                m[(v[i].1 as usize - 1) * max_zone + size[i] - 1] += 1;
            }
        }
        m
    }

    /// Per voxel, the number of other ROI voxels at Chebyshev distance one
    /// with the same level.
    pub fn gldm(roi: &DiscretizedRoi) -> Vec<u64> {
        let v = roi_voxels(roi);
        let mut m = vec![0u64; roi.ng * 27];
        for &(p, l) in &v {
            let k = v
                .iter()
                .filter(|&&(q, b)| b == l && chebyshev(p, q) == 1)
                .count();
            m[(l as usize - 1) * 27 + k] += 1;
        }
        m
    }

    /// Least common multiple of 1..=26: every neighborhood mean is an exact
    /// multiple of `1 / NGTDM_DENOM`.
    pub const NGTDM_DENOM: u128 = 26_771_144_400;

    /// Per level: voxels with at least one ROI neighbor, and the tone
    /// difference sum scaled by `NGTDM_DENOM` (an exact integer).
    pub fn ngtdm(roi: &DiscretizedRoi) -> (Vec<u64>, Vec<u128>) {
        let v = roi_voxels(roi);
        let mut n = vec![0u64; roi.ng];
        let mut s = vec![0u128; roi.ng];
        for &(p, l) in &v {
            let nb: Vec<u16> = v
                .iter()
                .filter(|&&(q, _)| chebyshev(p, q) == 1)
                .map(|&(_, b)| b)
                .collect();
            if nb.is_empty() {
                continue;
            }
            let w = nb.len() as u128;
            let sum: u128 = nb.iter().map(|&b| b as u128).sum();
            let i = l as usize - 1;
            n[i] += 1;
            s[i] += (l as u128 * w).abs_diff(sum) * (NGTDM_DENOM / w);
        }
        (n, s)
    }
}

pub mod calibration_oracle {
    use radshift::evalcal::PredictionSet;

    /// ECE by explicit per-row bin search: bin `b` holds confidences in
    /// `(b/m, (b+1)/m]`, the first bin also holds 0.
    pub fn ece(p: &PredictionSet, m: usize) -> f64 {
        let n = p.len();
        if n == 0 {
            return 0.0;
        }
        let mut count = vec![0usize; m];
        let mut conf = vec![0.0f64; m];
        let mut hit = vec![0usize; m];
        for (row, &y) in p.probs.iter().zip(&p.labels) {
            let c = row.iter().copied().fold(0.0, f64::max);
            let mut pred = 0;
            for k in 1..row.len() {
                if row[k] > row[pred] {
                    pred = k;
                }
            }
            let mut b = 0;
            for cand in 0..m {
                let lo = cand as f64 / m as f64;
                let hi = (cand + 1) as f64 / m as f64;
                if (c > lo || cand == 0) && (c <= hi || cand == m - 1) {
                    b = cand;
                    break;
                }
            }
            count[b] += 1;
            conf[b] += c;
            hit[b] += (pred == y) as usize;
        }
        let mut total = 0.0;
        for b in 0..m {
            if count[b] > 0 {
                let k = count[b] as f64;
                total += k / n as f64 * (hit[b] as f64 / k - conf[b] / k).abs();
            }
        }
        total
    }
}

pub mod data {
    use rand::Rng as _;
    use radshift::rng;

    /// Four quadrants of jittered points; label is the quadrant parity.
    pub fn xor(per_cell: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut r = rng::rng(seed);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for cell in 0..4usize {
            let (cx, cy) = ((cell & 1) as f64, (cell >> 1) as f64);
            for _ in 0..per_cell {
                x.push(vec![cx + r.random_range(0.0..0.4), cy + r.random_range(0.0..0.4)]);
                y.push((cell & 1) ^ (cell >> 1));
            }
        }
        (x, y)
    }

    /// Four well separated Gaussian blobs, one per class, in three
    /// dimensions (the third is noise).
    pub fn blobs(per_class: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
        use rand_distr::{Distribution, StandardNormal};
        let centers = [[0.0, 0.0], [6.0, 0.0], [0.0, 6.0], [6.0, 6.0]];
        let mut r = rng::rng(seed);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (c, m) in centers.iter().enumerate() {
            for _ in 0..per_class {
                let a: f64 = StandardNormal.sample(&mut r);
                let b: f64 = StandardNormal.sample(&mut r);
                let n: f64 = StandardNormal.sample(&mut r);
                x.push(vec![m[0] + a, m[1] + b, n]);
                y.push(c);
            }
        }
        (x, y)
    }
}

/// Asserts every texture matrix of `roi` equals its oracle.
pub fn check_texture_matrices(roi: &radshift::radiomics::DiscretizedRoi) {
    use radshift::radiomics::{glcm, gldm, glrlm, glszm, ngtdm, DIRECTIONS};
    let g = glcm::build(roi);
    let r = glrlm::build(roi);
    for (k, &d) in DIRECTIONS.iter().enumerate() {
        assert_eq!(g.per_direction[k], radiomics_oracle::glcm(roi, d), "GLCM {d:?}");
        assert_eq!(r.per_direction[k], radiomics_oracle::glrlm(roi, d, r.max_run), "GLRLM {d:?}");
    }
    let z = glszm::build(roi);
    assert_eq!(z.counts, radiomics_oracle::glszm(roi, z.max_zone), "GLSZM");
    assert_eq!(gldm::build(roi).counts, radiomics_oracle::gldm(roi), "GLDM");
    let t = ngtdm::build(roi);
    let (n, s) = radiomics_oracle::ngtdm(roi);
    assert_eq!(t.n, n, "NGTDM n");
    for (i, (&got, &want)) in t.s.iter().zip(&s).enumerate() {
        // The scaled sum stays below 2^53 here, so rounding recovers the
        // exact numerator.
        let scaled = (got * NGTDM_DENOM as f64).round() as u128;
        assert_eq!(scaled, want, "NGTDM s[{i}]");
    }
}
