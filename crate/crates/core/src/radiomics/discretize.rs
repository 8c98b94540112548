use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{LabelMask, VoxelVolume};

/// Gray-level discretization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Binning {
    /// `k` equal-width bins over `[min, max]`; `max` maps to level `k`.
    FixedBinCount { bins: u32 },
    /// `level = floor((x - min) / width) + 1`.
    FixedBinWidth { width: f64 },
}

impl Default for Binning {
    fn default() -> Self {
        Binning::FixedBinCount { bins: 32 }
    }
}

impl Binning {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Binning::FixedBinCount { bins } if bins >= 1 => Ok(()),
            Binning::FixedBinWidth { width } if width > 0.0 && width.is_finite() => Ok(()),
            other => Err(Error::InvalidArgument(format!("invalid binning {other:?}"))),
        }
    }
}

/// Largest gray-level count accepted from fixed-width binning.
pub const MAX_LEVELS: usize = 4096;

/// ROI cropped to its bounding box. Level 0 marks voxels outside the ROI;
/// ROI levels are `1..=ng`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedRoi {
    pub dims: [usize; 3],
    /// Bounding-box corner in the source grid.
    pub origin: [usize; 3],
    pub spacing: [f64; 3],
    pub levels: Vec<u16>,
    pub ng: usize,
    pub bin_edges: Vec<f64>,
}

impl DiscretizedRoi {
    /// Builds an ROI directly from a level array (tests, oracles).
    pub fn from_levels(dims: [usize; 3], spacing: [f64; 3], levels: Vec<u16>, ng: usize) -> Self {
        assert_eq!(levels.len(), dims[0] * dims[1] * dims[2]);
        assert!(levels.iter().all(|&l| (l as usize) <= ng));
        Self {
            dims,
            origin: [0; 3],
            spacing,
            levels,
            ng,
            bin_edges: (0..=ng).map(|e| e as f64).collect(),
        }
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    #[inline]
    pub fn coords(&self, i: usize) -> [usize; 3] {
        let nx = self.dims[0];
        let ny = self.dims[1];
        [i % nx, (i / nx) % ny, i / (nx * ny)]
    }

    /// Level at `c + d`, 0 when outside the box or the ROI.
    #[inline]
    pub fn level_at(&self, c: [usize; 3], d: [i64; 3]) -> u16 {
        let x = c[0] as i64 + d[0];
        let y = c[1] as i64 + d[1];
        let z = c[2] as i64 + d[2];
        if x < 0
            || y < 0
            || z < 0
            || x >= self.dims[0] as i64
            || y >= self.dims[1] as i64
            || z >= self.dims[2] as i64
        {
            return 0;
        }
        self.levels[self.index(x as usize, y as usize, z as usize)]
    }

    pub fn voxel_count(&self) -> usize {
        self.levels.iter().filter(|&&l| l != 0).count()
    }

    /// ROI voxels as (box coordinates, level) in index order.
    pub fn voxels(&self) -> impl Iterator<Item = ([usize; 3], u16)> + '_ {
        self.levels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l != 0)
            .map(|(i, &l)| (self.coords(i), l))
    }
}

/// ROI intensities in index order.
pub fn roi_values(volume: &VoxelVolume, mask: &LabelMask, label: u16) -> Result<Vec<f64>> {
    if volume.grid.dims != mask.grid.dims {
        return Err(Error::InvalidVolume("volume and mask dims differ".into()));
    }
    let v: Vec<f64> = mask
        .labels
        .iter()
        .zip(&volume.data)
        .filter(|(&l, _)| l == label)
        .map(|(_, &x)| x as f64)
        .collect();
    if v.is_empty() {
        return Err(Error::EmptyRoi(label));
    }
    Ok(v)
}

/// Gray level of each value plus (ng, bin edges).
pub fn discretize_values(values: &[f64], binning: Binning) -> Result<(Vec<u16>, usize, Vec<f64>)> {
    binning.validate()?;
    if values.is_empty() {
        return Err(Error::InvalidArgument("cannot discretize an empty ROI".into()));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        return Ok((vec![1; values.len()], 1, vec![min, max]));
    }
    match binning {
        Binning::FixedBinCount { bins } => {
            let k = bins as usize;
            let range = max - min;
            let levels = values
                .iter()
                .map(|&x| (((x - min) * k as f64 / range).floor() as usize + 1).min(k) as u16)
                .collect();
            let edges = (0..=k).map(|m| min + range * m as f64 / k as f64).collect();
            Ok((levels, k, edges))
        }
        Binning::FixedBinWidth { width } => {
            let ng = ((max - min) / width).floor() as usize + 1;
            if ng > MAX_LEVELS {
                return Err(Error::InvalidArgument(format!(
                    "bin width {width} yields {ng} levels (limit {MAX_LEVELS})"
                )));
            }
            let levels = values
                .iter()
                .map(|&x| (((x - min) / width).floor() as usize + 1).min(ng) as u16)
                .collect();
            let edges = (0..=ng).map(|m| min + width * m as f64).collect();
            Ok((levels, ng, edges))
        }
    }
}

pub fn discretize(
    volume: &VoxelVolume,
    mask: &LabelMask,
    label: u16,
    binning: Binning,
) -> Result<DiscretizedRoi> {
    if volume.grid.dims != mask.grid.dims {
        return Err(Error::InvalidVolume("volume and mask dims differ".into()));
    }
    let indices = mask.voxels_of(label);
    if indices.is_empty() {
        return Err(Error::EmptyRoi(label));
    }
    let values: Vec<f64> = indices.iter().map(|&i| volume.data[i] as f64).collect();
    discretize_indices(mask, &indices, &values, binning)
}

/// Discretizes the ROI made of `indices` (ascending) with intensities `values`.
pub(crate) fn discretize_indices(
    mask: &LabelMask,
    indices: &[usize],
    values: &[f64],
    binning: Binning,
) -> Result<DiscretizedRoi> {
    let (levels, ng, bin_edges) = discretize_values(values, binning)?;
    let g = &mask.grid;
    let mut lo = [usize::MAX; 3];
    let mut hi = [0usize; 3];
    for &i in indices {
        let c = g.coords(i);
        for a in 0..3 {
            lo[a] = lo[a].min(c[a]);
            hi[a] = hi[a].max(c[a]);
        }
    }
    let dims = [hi[0] - lo[0] + 1, hi[1] - lo[1] + 1, hi[2] - lo[2] + 1];
    let mut boxed = vec![0u16; dims[0] * dims[1] * dims[2]];
    for (&i, &l) in indices.iter().zip(&levels) {
        let c = g.coords(i);
        let j = (c[0] - lo[0]) + dims[0] * ((c[1] - lo[1]) + dims[1] * (c[2] - lo[2]));
        boxed[j] = l;
    }
    Ok(DiscretizedRoi {
        dims,
        origin: lo,
        spacing: g.spacing,
        levels: boxed,
        ng,
        bin_edges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_width_example() {
        let v: Vec<f64> = (0..8).map(|x| x as f64).collect();
        let (l, ng, _) = discretize_values(&v, Binning::FixedBinWidth { width: 2.0 }).unwrap();
        assert_eq!(l, vec![1, 1, 2, 2, 3, 3, 4, 4]);
        assert_eq!(ng, 4);
    }

    #[test]
    fn fixed_count_example() {
        let v = [0.0, 1.0, 2.0, 3.0];
        let (l, ng, edges) = discretize_values(&v, Binning::FixedBinCount { bins: 2 }).unwrap();
        assert_eq!(l, vec![1, 1, 2, 2]);
        assert_eq!(ng, 2);
        assert_eq!(edges, vec![0.0, 1.5, 3.0]);
    }

    #[test]
    fn constant_roi_has_one_level() {
        for b in [Binning::FixedBinCount { bins: 32 }, Binning::FixedBinWidth { width: 0.5 }] {
            let (l, ng, _) = discretize_values(&[4.0; 9], b).unwrap();
            assert_eq!(ng, 1);
            assert!(l.iter().all(|&x| x == 1));
        }
    }

    #[test]
    fn bad_binning_is_rejected() {
        assert!(discretize_values(&[1.0], Binning::FixedBinCount { bins: 0 }).is_err());
        assert!(discretize_values(&[1.0], Binning::FixedBinWidth { width: -1.0 }).is_err());
    }
}
