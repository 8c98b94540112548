use nalgebra::{Matrix3, SymmetricEigen};

use super::discretize::DiscretizedRoi;
use crate::volume::FACE_OFFSETS;

pub const NAMES: [&str; 14] = [
    "Elongation",
    "Flatness",
    "LeastAxisLength",
    "MajorAxisLength",
    "Maximum2DDiameterHigh",
    "Maximum2DDiameterLow",
    "Maximum2DDiameterMid",
    "Maximum3DDiameter",
    "MeshVolume",
    "MinorAxisLength",
    "Sphericity",
    "SurfaceArea",
    "SurfaceVolumeRatio",
    "VoxelVolume",
];

/// Voxels that end their row along every axis in `axes`. Extreme points of
/// the voxel set (and so every farthest pair) are among them.
fn row_extremes(roi: &DiscretizedRoi, axes: &[usize]) -> Vec<bool> {
    let mut keep = vec![true; roi.levels.len()];
    for (i, &l) in roi.levels.iter().enumerate() {
        if l == 0 {
            keep[i] = false;
            continue;
        }
        let c = roi.coords(i);
        for &a in axes {
            let mut back = [0i64; 3];
            back[a] = -1;
            let mut fwd = [0i64; 3];
            fwd[a] = 1;
            if roi.level_at(c, back) != 0 && roi.level_at(c, fwd) != 0 {
                keep[i] = false;
                break;
            }
        }
    }
    keep
}

fn max_sq_distance(points: &[[usize; 3]], spacing: [f64; 3]) -> f64 {
    let mut best = 0.0f64;
    for (k, p) in points.iter().enumerate() {
        for q in &points[k + 1..] {
            let mut d2 = 0.0;
            for a in 0..3 {
                let d = (p[a] as f64 - q[a] as f64) * spacing[a];
                d2 += d * d;
            }
            best = best.max(d2);
        }
    }
    best
}

/// Shape descriptors from voxel counting and exposed-face surface area.
pub fn shape_features(roi: &DiscretizedRoi) -> [f64; 14] {
    let [sx, sy, sz] = roi.spacing;
    let face_area = [sy * sz, sx * sz, sx * sy];
    let mut n: i128 = 0;
    let mut sum = [0i128; 3];
    let mut prod = [[0i128; 3]; 3];
    let mut faces = [0u64; 3];
    for (c, _) in roi.voxels() {
        n += 1;
        for a in 0..3 {
            sum[a] += c[a] as i128;
            for b in 0..3 {
                prod[a][b] += (c[a] * c[b]) as i128;
            }
        }
        for (k, &d) in FACE_OFFSETS.iter().enumerate() {
            if roi.level_at(c, d) == 0 {
                faces[k / 2] += 1;
            }
        }
    }
    let nf = n as f64;
    let volume = nf * sx * sy * sz;
    let area: f64 = (0..3).map(|a| faces[a] as f64 * face_area[a]).sum();

    let spacing = roi.spacing;
    let cov = Matrix3::from_fn(|a, b| {
        let centered = n * prod[a][b] - sum[a] * sum[b];
        centered as f64 / (nf * nf) * spacing[a] * spacing[b]
    });
    let mut eig: Vec<f64> = SymmetricEigen::new(cov)
        .eigenvalues
        .iter()
        .map(|&l| l.max(0.0))
        .collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    let (major, minor, least) = (eig[0], eig[1], eig[2]);
    let ratio = |x: f64| if major > 0.0 { (x / major).sqrt() } else { 0.0 };

    let extremes3 = row_extremes(roi, &[0, 1, 2]);
    let pts: Vec<[usize; 3]> = extremes3
        .iter()
        .enumerate()
        .filter(|(_, &k)| k)
        .map(|(i, _)| roi.coords(i))
        .collect();
    let d3 = max_sq_distance(&pts, spacing).sqrt();

    let mut d2 = [0.0f64; 3];
    for (normal, slot) in d2.iter_mut().enumerate() {
        let in_plane: Vec<usize> = (0..3).filter(|&a| a != normal).collect();
        let keep = row_extremes(roi, &in_plane);
        let mut by_slice: std::collections::BTreeMap<usize, Vec<[usize; 3]>> = Default::default();
        for (i, &k) in keep.iter().enumerate() {
            if k {
                let c = roi.coords(i);
                by_slice.entry(c[normal]).or_default().push(c);
            }
        }
        *slot = by_slice
            .values()
            .map(|p| max_sq_distance(p, spacing))
            .fold(0.0, f64::max)
            .sqrt();
    }
    d2.sort_by(f64::total_cmp);

    let sphericity = std::f64::consts::PI.cbrt() * (6.0 * volume).powf(2.0 / 3.0) / area;
    [
        ratio(minor),
        ratio(least),
        4.0 * least.sqrt(),
        4.0 * major.sqrt(),
        d2[2],
        d2[0],
        d2[1],
        d3,
        volume,
        4.0 * minor.sqrt(),
        sphericity,
        area,
        area / volume,
        volume,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn get(f: &[f64; 14], name: &str) -> f64 {
        f[NAMES.iter().position(|n| *n == name).unwrap()]
    }

    #[test]
    fn names_are_sorted() {
        assert!(NAMES.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn single_voxel() {
        let roi = DiscretizedRoi::from_levels([1, 1, 1], [1.0; 3], vec![1], 1);
        let f = shape_features(&roi);
        assert_eq!(get(&f, "VoxelVolume"), 1.0);
        assert_eq!(get(&f, "SurfaceArea"), 6.0);
        assert!(f.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn anisotropic_single_voxel_area() {
        let roi = DiscretizedRoi::from_levels([1, 1, 1], [1.0, 2.0, 3.0], vec![1], 1);
        let f = shape_features(&roi);
        assert_eq!(get(&f, "VoxelVolume"), 6.0);
        assert_eq!(get(&f, "SurfaceArea"), 2.0 * (6.0 + 3.0 + 2.0));
    }

    #[test]
    fn digital_ball_is_round() {
        let r = 8i64;
        let n = (2 * r + 1) as usize;
        let mut levels = vec![0u16; n * n * n];
        for z in 0..n {
            for y in 0..n {
                for x in 0..n {
                    let d = [x as i64 - r, y as i64 - r, z as i64 - r];
                    if d.iter().map(|v| v * v).sum::<i64>() <= r * r {
                        levels[x + n * (y + n * z)] = 1;
                    }
                }
            }
        }
        let f = shape_features(&DiscretizedRoi::from_levels([n, n, n], [1.0; 3], levels, 1));
        assert!((get(&f, "Elongation") - 1.0).abs() < 0.05);
        assert!((get(&f, "Flatness") - 1.0).abs() < 0.05);
        assert_eq!(get(&f, "Maximum3DDiameter"), 16.0);
    }

    #[test]
    fn planar_region_is_flat() {
        let roi = DiscretizedRoi::from_levels([3, 3, 1], [1.0; 3], vec![1; 9], 1);
        let f = shape_features(&roi);
        assert_eq!(get(&f, "LeastAxisLength"), 0.0);
        assert_eq!(get(&f, "Flatness"), 0.0);
        assert!((get(&f, "Maximum3DDiameter") - 8f64.sqrt()).abs() < 1e-12);
    }
}
