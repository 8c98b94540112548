use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{Grid, LabelMask};

/// Fruit classes in label-index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FruitClass {
    Kiwi,
    Lime,
    Apple,
    Onion,
}

impl FruitClass {
    pub const ALL: [FruitClass; 4] = [
        FruitClass::Kiwi,
        FruitClass::Lime,
        FruitClass::Apple,
        FruitClass::Onion,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            FruitClass::Kiwi => "kiwi",
            FruitClass::Lime => "lime",
            FruitClass::Apple => "apple",
            FruitClass::Onion => "onion",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }
}

/// Internal anatomy used by the procedural texture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Structure {
    /// Onion: concentric shells.
    ConcentricShells,
    /// Kiwi: bright core, ring of dark seeds around the long axis.
    RadialSeeds,
    /// Lime: juice segments separated by thin dark septa.
    WedgeSepta,
    /// Apple: smooth flesh with a faint core.
    HomogeneousCore,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TextureParams {
    /// Tissue signal level before any sequence contrast (around 1).
    pub base_intensity: f64,
    /// Relative modulation depth of the internal texture.
    pub texture_amplitude: f64,
    /// Characteristic texture length in mm.
    pub texture_scale: f64,
    pub structure: Structure,
}

impl TextureParams {
    pub fn default_for(class: FruitClass) -> Self {
        match class {
            FruitClass::Kiwi => Self {
                base_intensity: 0.80,
                texture_amplitude: 0.25,
                texture_scale: 3.0,
                structure: Structure::RadialSeeds,
            },
            FruitClass::Lime => Self {
                base_intensity: 0.65,
                texture_amplitude: 0.20,
                texture_scale: 2.5,
                structure: Structure::WedgeSepta,
            },
            FruitClass::Apple => Self {
                base_intensity: 0.55,
                texture_amplitude: 0.08,
                texture_scale: 6.0,
                structure: Structure::HomogeneousCore,
            },
            FruitClass::Onion => Self {
                base_intensity: 0.90,
                texture_amplitude: 0.30,
                texture_scale: 2.0,
                structure: Structure::ConcentricShells,
            },
        }
    }
}

/// One fruit: an ellipsoid rotated by `yaw_deg` about the z axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fruit {
    pub instance_id: u16,
    pub class: FruitClass,
    /// Center in mm, measured from the center of voxel (0, 0, 0).
    pub center: [f64; 3],
    pub semi_axes: [f64; 3],
    #[serde(default)]
    pub yaw_deg: f64,
    pub texture: TextureParams,
}

impl Fruit {
    /// World position (mm) to fruit-local coordinates (mm).
    #[inline]
    pub fn to_local(&self, p: [f64; 3]) -> [f64; 3] {
        let (s, c) = self.yaw_deg.to_radians().sin_cos();
        let dx = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        [c * dx + s * dy, -s * dx + c * dy, p[2] - self.center[2]]
    }

    #[inline]
    pub fn contains_local(&self, l: [f64; 3]) -> bool {
        let u = [
            l[0] / self.semi_axes[0],
            l[1] / self.semi_axes[1],
            l[2] / self.semi_axes[2],
        ];
        u[0] * u[0] + u[1] * u[1] + u[2] * u[2] <= 1.0
    }

    /// Half-extents of the axis-aligned bounding box in mm.
    pub fn half_extent(&self) -> [f64; 3] {
        let (s, c) = self.yaw_deg.to_radians().sin_cos();
        let [a, b, h] = self.semi_axes;
        [
            ((a * c).powi(2) + (b * s).powi(2)).sqrt(),
            ((a * s).powi(2) + (b * c).powi(2)).sqrt(),
            h,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhantomLayout {
    pub grid: Grid,
    pub fruits: Vec<Fruit>,
}

/// Default grid: 144 x 144 x 40 voxels, 1 mm isotropic.
pub const DEFAULT_DIMS: [usize; 3] = [144, 144, 40];
pub const DEFAULT_SPACING: [f64; 3] = [1.0, 1.0, 1.0];
const PITCH_MM: f64 = 36.0;

fn base_semi_axes(class: FruitClass) -> [f64; 3] {
    match class {
        FruitClass::Kiwi => [13.0, 8.5, 10.0],
        FruitClass::Lime => [9.5, 9.5, 11.5],
        FruitClass::Apple => [12.0, 12.0, 9.5],
        FruitClass::Onion => [12.0, 12.0, 5.5],
    }
}

// Per-instance size factors; instances of one class overlap in volume
// with neighboring classes.
const SIZE_FACTORS: [[f64; 4]; 4] = [
    [0.97, 1.10, 0.90, 1.03],
    [1.03, 0.90, 1.10, 0.97],
    [0.90, 1.03, 0.97, 1.10],
    [1.10, 0.97, 1.03, 0.90],
];

// Per-instance aspect perturbation (x, y, z multipliers).
const ASPECT: [[f64; 3]; 4] = [
    [1.00, 1.04, 0.97],
    [0.96, 1.00, 1.03],
    [1.04, 0.97, 1.00],
    [1.00, 0.98, 1.04],
];

impl PhantomLayout {
    /// Four kiwis, limes, apples and onions on a 4 x 4 grid, classes
    /// arranged as a Latin square.
    pub fn default_layout() -> Self {
        let grid = Grid::new(DEFAULT_DIMS, DEFAULT_SPACING).expect("static grid is valid");
        let z_center = (DEFAULT_DIMS[2] - 1) as f64 * DEFAULT_SPACING[2] / 2.0;
        let mut seen = [0usize; 4];
        let mut fruits = Vec::with_capacity(16);
        for row in 0..4 {
            for col in 0..4 {
                let class = FruitClass::ALL[(row + col) % 4];
                let k = seen[class.index()];
                seen[class.index()] += 1;
                let scale = SIZE_FACTORS[class.index()][k];
                let aspect = ASPECT[k];
                let base = base_semi_axes(class);
                let semi_axes = [
                    base[0] * scale * aspect[0],
                    base[1] * scale * aspect[1],
                    base[2] * scale * aspect[2],
                ];
                fruits.push(Fruit {
                    instance_id: (row * 4 + col + 1) as u16,
                    class,
                    center: [
                        PITCH_MM / 2.0 + col as f64 * PITCH_MM,
                        PITCH_MM / 2.0 + row as f64 * PITCH_MM,
                        z_center,
                    ],
                    semi_axes,
                    yaw_deg: 30.0 * ((row + 2 * col) % 6) as f64,
                    texture: TextureParams::default_for(class),
                });
            }
        }
        Self { grid, fruits }
    }

    pub fn class_of(&self, label: u16) -> Option<FruitClass> {
        self.fruits
            .iter()
            .find(|f| f.instance_id == label)
            .map(|f| f.class)
    }

    /// Checks counts, ids, bounds and semi-axes. Overlap is detected during
    /// voxelization.
    pub fn validate(&self) -> Result<()> {
        if self.fruits.len() != 16 {
            return Err(Error::Layout(format!(
                "expected 16 fruits, found {}",
                self.fruits.len()
            )));
        }
        let mut ids: Vec<u16> = self.fruits.iter().map(|f| f.instance_id).collect();
        ids.sort_unstable();
        if ids != (1..=16).collect::<Vec<u16>>() {
            return Err(Error::Layout(format!("instance ids must be 1..=16, got {ids:?}")));
        }
        for class in FruitClass::ALL {
            let n = self.fruits.iter().filter(|f| f.class == class).count();
            if n != 4 {
                return Err(Error::Layout(format!(
                    "expected 4 instances of {}, found {n}",
                    class.name()
                )));
            }
        }
        for f in &self.fruits {
            if f.semi_axes.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
                return Err(Error::Layout(format!(
                    "fruit {} has invalid semi-axes {:?}",
                    f.instance_id, f.semi_axes
                )));
            }
            let ext = f.half_extent();
            for a in 0..3 {
                let lo = self.grid.spacing[a];
                let hi = (self.grid.dims[a] as f64 - 2.0) * self.grid.spacing[a];
                if f.center[a] - ext[a] < lo || f.center[a] + ext[a] > hi {
                    return Err(Error::Layout(format!(
                        "fruit {} leaves the volume along axis {a}",
                        f.instance_id
                    )));
                }
            }
        }
        Ok(())
    }

    /// Ground-truth label mask. Fails when two fruits claim the same voxel.
    pub fn voxelize(&self) -> Result<LabelMask> {
        self.validate()?;
        let g = self.grid;
        let mut mask = LabelMask::empty(g);
        for f in &self.fruits {
            let ext = f.half_extent();
            let lo: Vec<usize> = (0..3)
                .map(|a| ((f.center[a] - ext[a]) / g.spacing[a]).floor().max(0.0) as usize)
                .collect();
            let hi: Vec<usize> = (0..3)
                .map(|a| {
                    (((f.center[a] + ext[a]) / g.spacing[a]).ceil() as usize).min(g.dims[a] - 1)
                })
                .collect();
            for z in lo[2]..=hi[2] {
                for y in lo[1]..=hi[1] {
                    for x in lo[0]..=hi[0] {
                        let i = g.index(x, y, z);
                        if !f.contains_local(f.to_local(g.position(i))) {
                            continue;
                        }
                        let prev = mask.labels[i];
                        if prev != 0 {
                            return Err(Error::Layout(format!(
                                "fruits {prev} and {} overlap",
                                f.instance_id
                            )));
                        }
                        mask.labels[i] = f.instance_id;
                    }
                }
            }
        }
        for f in &self.fruits {
            if mask.count(f.instance_id) == 0 {
                return Err(Error::Layout(format!(
                    "fruit {} covers no voxel centers",
                    f.instance_id
                )));
            }
        }
        Ok(mask)
    }
}
