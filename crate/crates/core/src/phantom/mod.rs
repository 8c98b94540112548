//! Synthetic 16-fruit phantom: layout, tissue texture, repositioning,
//! exact 90 degree rotation and sequence contrast.

mod layout;
mod sequence;
pub mod texture;

pub use layout::{Fruit, FruitClass, PhantomLayout, Structure, TextureParams};
pub use sequence::{gaussian_blur, ClassContrast, Sequence, SequenceProfile};

use std::collections::BTreeMap;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::volume::{Grid, LabelMask, VoxelVolume};

/// Background tissue-signal noise level of the base phantom.
pub const BACKGROUND_SIGMA: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ScanId {
    #[serde(rename = "1")]
    S1,
    #[serde(rename = "2")]
    S2,
    R1,
    R2,
}

impl ScanId {
    pub const ALL: [ScanId; 4] = [ScanId::S1, ScanId::S2, ScanId::R1, ScanId::R2];

    pub fn name(self) -> &'static str {
        match self {
            ScanId::S1 => "1",
            ScanId::S2 => "2",
            ScanId::R1 => "R1",
            ScanId::R2 => "R2",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|id| id.name() == s)
    }

    pub fn is_rotated(self) -> bool {
        matches!(self, ScanId::R1 | ScanId::R2)
    }
}

impl std::fmt::Display for ScanId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanMeta {
    pub sequence: Option<Sequence>,
    pub scan_id: ScanId,
    pub rotated: bool,
    /// Phantom (texture) seed.
    pub seed: u64,
    /// Repositioning seed; `None` for the nominal layout.
    pub pose_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanInstance {
    pub volume: VoxelVolume,
    pub ground_truth_mask: LabelMask,
    pub meta: ScanMeta,
    /// Fruit class of every label present in the mask.
    pub classes: BTreeMap<u16, FruitClass>,
}

impl ScanInstance {
    pub fn class_of(&self, label: u16) -> Option<FruitClass> {
        self.classes.get(&label).copied()
    }

    pub fn with_scan_id(mut self, scan_id: ScanId) -> Self {
        self.meta.scan_id = scan_id;
        self
    }
}

/// Repositioning bounds: uniform center shift per axis and yaw about z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Jitter {
    pub center_mm: f64,
    pub rotation_deg: f64,
    pub max_attempts: u32,
}

impl Default for Jitter {
    fn default() -> Self {
        Self {
            center_mm: 5.0,
            rotation_deg: 10.0,
            max_attempts: 64,
        }
    }
}

impl Jitter {
    pub const NONE: Jitter = Jitter {
        center_mm: 0.0,
        rotation_deg: 0.0,
        max_attempts: 1,
    };
}

fn build(layout: &PhantomLayout, seed: u64) -> Result<(VoxelVolume, LabelMask)> {
    let mask = layout.voxelize()?;
    let g = layout.grid;
    let by_id: BTreeMap<u16, &Fruit> = layout.fruits.iter().map(|f| (f.instance_id, f)).collect();
    let tex_seeds: BTreeMap<u16, u64> = by_id
        .keys()
        .map(|&id| (id, rng::derive(seed, &format!("texture/{id}"))))
        .collect();
    let mut bg = rng::rng(rng::derive(seed, "background"));
    let mut data = Vec::with_capacity(g.len());
    for (i, &l) in mask.labels.iter().enumerate() {
        let z: f64 = StandardNormal.sample(&mut bg);
        let v = if l == 0 {
            BACKGROUND_SIGMA * z
        } else {
            let f = by_id[&l];
            texture::tissue_signal(f, f.to_local(g.position(i)), tex_seeds[&l])
        };
        data.push(v as f32);
    }
    Ok((VoxelVolume::new(g, data)?, mask))
}

fn classes_of(layout: &PhantomLayout) -> BTreeMap<u16, FruitClass> {
    layout.fruits.iter().map(|f| (f.instance_id, f.class)).collect()
}

/// Base phantom (tissue signal, no sequence contrast) in the nominal pose.
pub fn generate_phantom(layout: &PhantomLayout, seed: u64) -> Result<ScanInstance> {
    let (volume, mask) = build(layout, seed)?;
    Ok(ScanInstance {
        volume,
        ground_truth_mask: mask,
        meta: ScanMeta {
            sequence: None,
            scan_id: ScanId::S1,
            rotated: false,
            seed,
            pose_seed: None,
        },
        classes: classes_of(layout),
    })
}

/// Layout with every fruit shifted and yawed within `jitter`.
pub fn jittered_layout(layout: &PhantomLayout, pose_seed: u64, jitter: &Jitter) -> Result<PhantomLayout> {
    let attempts = jitter.max_attempts.max(1);
    let mut last = None;
    for attempt in 0..attempts {
        let mut r = rng::rng(rng::derive(pose_seed, &format!("pose/{attempt}")));
        let mut moved = layout.clone();
        for f in &mut moved.fruits {
            for c in &mut f.center {
                if jitter.center_mm > 0.0 {
                    *c += r.random_range(-jitter.center_mm..=jitter.center_mm);
                }
            }
            if jitter.rotation_deg > 0.0 {
                f.yaw_deg += r.random_range(-jitter.rotation_deg..=jitter.rotation_deg);
            }
        }
        match moved.voxelize() {
            Ok(_) => return Ok(moved),
            Err(e @ Error::Layout(_)) => {
                log::debug!("repositioning attempt {attempt} rejected: {e}");
                last = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::Layout(format!(
        "no overlap-free repositioning after {attempts} attempts: {}",
        last.map(|e| e.to_string()).unwrap_or_default()
    )))
}

/// Repositioned acquisition of the same physical phantom: texture follows
/// `seed`, pose follows `pose_seed`.
pub fn rescan(
    layout: &PhantomLayout,
    seed: u64,
    pose_seed: u64,
    jitter: &Jitter,
) -> Result<ScanInstance> {
    let moved = jittered_layout(layout, pose_seed, jitter)?;
    let mut inst = generate_phantom(&moved, seed)?;
    inst.meta.pose_seed = Some(pose_seed);
    Ok(inst)
}

/// Index map of a 90 degree rotation: returns new dims and a function from
/// old coordinates to new coordinates.
fn rotation(dims: [usize; 3], axis: Axis) -> ([usize; 3], [usize; 3]) {
    // Returned permutation gives, for each new axis, the old axis it came from.
    match axis {
        Axis::X => ([dims[0], dims[2], dims[1]], [0, 2, 1]),
        Axis::Y => ([dims[2], dims[1], dims[0]], [2, 1, 0]),
        Axis::Z => ([dims[1], dims[0], dims[2]], [1, 0, 2]),
    }
}

fn rotate_coords(c: [usize; 3], dims: [usize; 3], axis: Axis) -> [usize; 3] {
    let [x, y, z] = c;
    let [nx, ny, nz] = dims;
    match axis {
        Axis::X => [x, nz - 1 - z, y],
        Axis::Y => [z, y, nx - 1 - x],
        Axis::Z => [ny - 1 - y, x, z],
    }
}

fn rotate_grid(grid: &Grid, axis: Axis) -> Grid {
    let (dims, perm) = rotation(grid.dims, axis);
    let spacing = [
        grid.spacing[perm[0]],
        grid.spacing[perm[1]],
        grid.spacing[perm[2]],
    ];
    Grid::new(dims, spacing).expect("permuted grid stays valid")
}

fn rotate_data<T: Copy + Default>(grid: &Grid, data: &[T], axis: Axis) -> (Grid, Vec<T>) {
    let ng = rotate_grid(grid, axis);
    let mut out = vec![T::default(); data.len()];
    for (i, &v) in data.iter().enumerate() {
        let [x, y, z] = rotate_coords(grid.coords(i), grid.dims, axis);
        out[ng.index(x, y, z)] = v;
    }
    (ng, out)
}

/// Exact 90 degree rotation of an intensity volume.
pub fn rotate_volume(v: &VoxelVolume, axis: Axis) -> VoxelVolume {
    let (grid, data) = rotate_data(&v.grid, &v.data, axis);
    VoxelVolume { grid, data }
}

/// Exact 90 degree rotation of a label mask.
pub fn rotate_mask(m: &LabelMask, axis: Axis) -> LabelMask {
    let (grid, labels) = rotate_data(&m.grid, &m.labels, axis);
    LabelMask { grid, labels }
}

pub fn rotate90(instance: &ScanInstance, axis: Axis) -> ScanInstance {
    ScanInstance {
        volume: rotate_volume(&instance.volume, axis),
        ground_truth_mask: rotate_mask(&instance.ground_truth_mask, axis),
        meta: ScanMeta {
            rotated: true,
            ..instance.meta.clone()
        },
        classes: instance.classes.clone(),
    }
}

/// Applies the sequence contrast inside ROIs, a smooth receive-sensitivity
/// field, Gaussian blur and additive Gaussian noise.
pub fn apply_sequence(base: &ScanInstance, profile: &SequenceProfile, seed: u64) -> Result<ScanInstance> {
    let volume = sequence::render(
        &base.volume,
        &base.ground_truth_mask.labels,
        &|l| base.class_of(l),
        profile,
        seed,
    )?;
    Ok(ScanInstance {
        volume,
        ground_truth_mask: base.ground_truth_mask.clone(),
        meta: ScanMeta {
            sequence: Some(profile.name),
            ..base.meta.clone()
        },
        classes: base.classes.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_instance() -> ScanInstance {
        let g = Grid::new([4, 3, 2], [1.0, 2.0, 3.0]).unwrap();
        let data: Vec<f32> = (0..g.len()).map(|i| i as f32).collect();
        let labels: Vec<u16> = (0..g.len()).map(|i| (i % 3) as u16).collect();
        ScanInstance {
            volume: VoxelVolume::new(g, data).unwrap(),
            ground_truth_mask: LabelMask::new(g, labels).unwrap(),
            meta: ScanMeta {
                sequence: None,
                scan_id: ScanId::S1,
                rotated: false,
                seed: 0,
                pose_seed: None,
            },
            classes: [(1, FruitClass::Kiwi), (2, FruitClass::Onion)].into(),
        }
    }

    #[test]
    fn four_rotations_are_identity() {
        let inst = small_instance();
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            let mut r = inst.clone();
            for _ in 0..4 {
                r = rotate90(&r, axis);
            }
            assert_eq!(r.volume, inst.volume);
            assert_eq!(r.ground_truth_mask, inst.ground_truth_mask);
            assert!(r.meta.rotated);
        }
    }

    #[test]
    fn rotation_permutes_spacing() {
        let inst = small_instance();
        let r = rotate90(&inst, Axis::X);
        assert_eq!(r.volume.grid.dims, [4, 2, 3]);
        assert_eq!(r.volume.grid.spacing, [1.0, 3.0, 2.0]);
        assert_eq!(r.ground_truth_mask.counts(), inst.ground_truth_mask.counts());
    }

    #[test]
    fn identity_profile_is_exact() {
        let inst = small_instance();
        let out = apply_sequence(&inst, &SequenceProfile::identity(Sequence::T2Map), 9).unwrap();
        assert_eq!(out.volume, inst.volume);
        assert_eq!(out.meta.sequence, Some(Sequence::T2Map));
    }

    #[test]
    fn scan_ids_parse() {
        for id in ScanId::ALL {
            assert_eq!(ScanId::parse(id.name()), Some(id));
        }
        assert!(ScanId::R2.is_rotated() && !ScanId::S2.is_rotated());
    }
}
