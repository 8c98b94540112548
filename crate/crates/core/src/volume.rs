//! Voxel grids: intensity volumes and integer label masks.
//!
//! Storage is x-fastest: `index = x + nx * (y + ny * z)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Dims = [usize; 3];
pub type Spacing = [f64; 3];

/// The six face neighbors.
pub const FACE_OFFSETS: [[i64; 3]; 6] = [
    [-1, 0, 0],
    [1, 0, 0],
    [0, -1, 0],
    [0, 1, 0],
    [0, 0, -1],
    [0, 0, 1],
];

/// Grid geometry shared by volumes and masks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dims: Dims,
    pub spacing: Spacing,
}

impl Grid {
    pub fn new(dims: Dims, spacing: Spacing) -> Result<Self> {
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidVolume(format!("dims must be >= 1, got {dims:?}")));
        }
        if spacing.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidVolume(format!(
                "spacing must be positive, got {spacing:?}"
            )));
        }
        Ok(Self { dims, spacing })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
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

    /// Index of `i + offset`, or `None` when it leaves the grid.
    #[inline]
    pub fn offset(&self, i: usize, d: [i64; 3]) -> Option<usize> {
        let c = self.coords(i);
        let mut out = [0usize; 3];
        for a in 0..3 {
            let v = c[a] as i64 + d[a];
            if v < 0 || v >= self.dims[a] as i64 {
                return None;
            }
            out[a] = v as usize;
        }
        Some(self.index(out[0], out[1], out[2]))
    }

    /// Physical position (mm) of a voxel center.
    #[inline]
    pub fn position(&self, i: usize) -> [f64; 3] {
        let c = self.coords(i);
        [
            c[0] as f64 * self.spacing[0],
            c[1] as f64 * self.spacing[1],
            c[2] as f64 * self.spacing[2],
        ]
    }

    pub fn voxel_volume(&self) -> f64 {
        self.spacing[0] * self.spacing[1] * self.spacing[2]
    }
}

/// 3D scalar image with physical spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelVolume {
    pub grid: Grid,
    pub data: Vec<f32>,
}

impl VoxelVolume {
    pub fn new(grid: Grid, data: Vec<f32>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::InvalidVolume(format!(
                "data length {} does not match dims {:?}",
                data.len(),
                grid.dims
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidVolume(format!("non-finite intensity at voxel {i}")));
        }
        Ok(Self { grid, data })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            data: vec![0.0; grid.len()],
            grid,
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> f32 {
        self.data[self.grid.index(x, y, z)]
    }
}

/// Integer instance labels; 0 is background.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMask {
    pub grid: Grid,
    pub labels: Vec<u16>,
}

impl LabelMask {
    pub fn new(grid: Grid, labels: Vec<u16>) -> Result<Self> {
        if labels.len() != grid.len() {
            return Err(Error::InvalidVolume(format!(
                "label length {} does not match dims {:?}",
                labels.len(),
                grid.dims
            )));
        }
        Ok(Self { grid, labels })
    }

    pub fn empty(grid: Grid) -> Self {
        Self {
            labels: vec![0; grid.len()],
            grid,
        }
    }

    /// Sorted distinct nonzero labels.
    pub fn present_labels(&self) -> Vec<u16> {
        let mut seen = [false; 1 << 16];
        for &l in &self.labels {
            seen[l as usize] = true;
        }
        (1..=u16::MAX).filter(|&l| seen[l as usize]).collect()
    }

    pub fn count(&self, label: u16) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// Voxel counts indexed by label value.
    pub fn counts(&self) -> Vec<usize> {
        let max = self.labels.iter().copied().max().unwrap_or(0) as usize;
        let mut c = vec![0usize; max + 1];
        for &l in &self.labels {
            c[l as usize] += 1;
        }
        c
    }

    pub fn voxels_of(&self, label: u16) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == label)
            .map(|(i, _)| i)
            .collect()
    }

    /// Label voxels with at least one face neighbor outside the label
    /// (grid edges count as outside).
    pub fn inner_shell(&self, label: u16) -> Vec<usize> {
        self.voxels_of(label)
            .into_iter()
            .filter(|&i| {
                FACE_OFFSETS.iter().any(|&d| match self.grid.offset(i, d) {
                    Some(j) => self.labels[j] != label,
                    None => true,
                })
            })
            .collect()
    }

    /// Non-label voxels with at least one face neighbor inside the label.
    pub fn outer_shell(&self, label: u16) -> Vec<usize> {
        let mut mark = vec![false; self.labels.len()];
        for i in self.voxels_of(label) {
            for &d in &FACE_OFFSETS {
                if let Some(j) = self.grid.offset(i, d) {
                    if self.labels[j] != label {
                        mark[j] = true;
                    }
                }
            }
        }
        mark.iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| i)
            .collect()
    }

    /// Number of 6-connected components formed by `label`.
    pub fn component_count(&self, label: u16) -> usize {
        let mut seen = vec![false; self.labels.len()];
        let mut components = 0;
        let mut stack = Vec::new();
        for start in 0..self.labels.len() {
            if self.labels[start] != label || seen[start] {
                continue;
            }
            components += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(i) = stack.pop() {
                for &d in &FACE_OFFSETS {
                    if let Some(j) = self.grid.offset(i, d) {
                        if self.labels[j] == label && !seen[j] {
                            seen[j] = true;
                            stack.push(j);
                        }
                    }
                }
            }
        }
        components
    }
}

/// Dice overlap of one label between two masks; 1.0 when both are empty.
pub fn dice(a: &LabelMask, b: &LabelMask, label: u16) -> f64 {
    let mut na = 0usize;
    let mut nb = 0usize;
    let mut both = 0usize;
    for (&x, &y) in a.labels.iter().zip(&b.labels) {
        let ia = x == label;
        let ib = y == label;
        na += ia as usize;
        nb += ib as usize;
        both += (ia && ib) as usize;
    }
    if na + nb == 0 {
        1.0
    } else {
        2.0 * both as f64 / (na + nb) as f64
    }
}
