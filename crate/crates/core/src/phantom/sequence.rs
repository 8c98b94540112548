use serde::{Deserialize, Serialize};

use super::layout::{FruitClass, TextureParams};
use super::texture::ValueNoise;
use crate::error::{Error, Result};
use crate::rng;
use crate::volume::{Grid, VoxelVolume};
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sequence {
    #[serde(rename = "T2-HASTE")]
    T2Haste,
    #[serde(rename = "T2-TSE")]
    T2Tse,
    #[serde(rename = "T2-MAP")]
    T2Map,
    #[serde(rename = "T1-TSE")]
    T1Tse,
    #[serde(rename = "T2-FLAIR")]
    T2Flair,
}

impl Sequence {
    pub const ALL: [Sequence; 5] = [
        Sequence::T2Haste,
        Sequence::T2Tse,
        Sequence::T2Map,
        Sequence::T1Tse,
        Sequence::T2Flair,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Sequence::T2Haste => "T2-HASTE",
            Sequence::T2Tse => "T2-TSE",
            Sequence::T2Map => "T2-MAP",
            Sequence::T1Tse => "T1-TSE",
            Sequence::T2Flair => "T2-FLAIR",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|q| q.name().eq_ignore_ascii_case(s))
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl std::fmt::Display for Sequence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Monotone contrast `gain * s^gamma + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassContrast {
    pub gain: f64,
    pub offset: f64,
    pub gamma: f64,
}

impl ClassContrast {
    pub const IDENTITY: ClassContrast = ClassContrast {
        gain: 1.0,
        offset: 0.0,
        gamma: 1.0,
    };

    /// Contrast that maps the class base intensity to `target`.
    pub fn for_target(base: f64, target: f64, gamma: f64, offset: f64) -> Self {
        Self {
            gain: (target - offset) / base.powf(gamma),
            offset,
            gamma,
        }
    }

    #[inline]
    pub fn apply(&self, s: f64) -> f64 {
        let p = if self.gamma == 1.0 {
            s
        } else {
            s.max(0.0).powf(self.gamma)
        };
        self.gain * p + self.offset
    }
}

/// Lattice spacing of the sensitivity field. Incommensurate with the 36 mm
/// fruit pitch, so fruit centers do not sit on a fixed lattice phase and
/// neighboring fruits see different gains.
pub const BIAS_SCALE_MM: f64 = 29.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceProfile {
    pub name: Sequence,
    /// Indexed by `FruitClass::index()`.
    pub contrast_map: [ClassContrast; 4],
    pub noise_sigma: f64,
    pub blur_fwhm: f64,
    /// Amplitude of the smooth multiplicative receive-sensitivity field
    /// `1 + bias_field * noise(x / BIAS_SCALE_MM)`, redrawn per acquisition.
    #[serde(default)]
    pub bias_field: f64,
}

impl SequenceProfile {
    pub fn identity(name: Sequence) -> Self {
        Self {
            name,
            contrast_map: [ClassContrast::IDENTITY; 4],
            noise_sigma: 0.0,
            blur_fwhm: 0.0,
            bias_field: 0.0,
        }
    }

    /// Built-in table. Class brightness ordering differs between sequences.
    pub fn builtin(name: Sequence) -> Self {
        // (target mean, gamma) per class in kiwi, lime, apple, onion order.
        let (targets, noise_sigma, blur_fwhm, bias_field): ([(f64, f64); 4], f64, f64, f64) =
            match name {
                Sequence::T2Haste => (
                    [(300.0, 1.0), (220.0, 1.2), (140.0, 0.8), (380.0, 1.1)],
                    30.0,
                    2.5,
                    0.40,
                ),
                Sequence::T2Tse => (
                    [(150.0, 0.9), (330.0, 1.0), (400.0, 1.3), (240.0, 0.8)],
                    14.0,
                    1.2,
                    0.40,
                ),
                Sequence::T2Map => (
                    [(420.0, 1.0), (120.0, 1.0), (300.0, 1.0), (200.0, 1.0)],
                    6.0,
                    0.6,
                    0.05,
                ),
                Sequence::T1Tse => (
                    [(180.0, 1.2), (400.0, 0.9), (260.0, 1.0), (110.0, 1.1)],
                    12.0,
                    1.0,
                    0.40,
                ),
                Sequence::T2Flair => (
                    [(330.0, 1.1), (90.0, 1.0), (200.0, 0.9), (260.0, 1.2)],
                    10.0,
                    0.9,
                    0.35,
                ),
            };
        let contrast_map = std::array::from_fn(|c| {
            let base = TextureParams::default_for(FruitClass::ALL[c]).base_intensity;
            let (target, gamma) = targets[c];
            ClassContrast::for_target(base, target, gamma, 0.0)
        });
        Self {
            name,
            contrast_map,
            noise_sigma,
            blur_fwhm,
            bias_field,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| {
            Err(Error::InvalidArgument(format!(
                "profile {}: {what}",
                self.name
            )))
        };
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return bad("noise_sigma must be finite and >= 0");
        }
        if !(self.blur_fwhm >= 0.0) || !self.blur_fwhm.is_finite() {
            return bad("blur_fwhm must be finite and >= 0");
        }
        if !(0.0..1.0).contains(&self.bias_field) {
            return bad("bias_field must lie in [0, 1)");
        }
        for c in &self.contrast_map {
            if !(c.gain > 0.0 && c.gamma > 0.0) || !c.offset.is_finite() || !c.gain.is_finite() {
                return bad("contrast must be monotone increasing (gain > 0, gamma > 0)");
            }
        }
        Ok(())
    }
}

/// Separable Gaussian blur with clamped borders. `fwhm` in mm.
pub fn gaussian_blur(grid: &Grid, data: &mut [f64], fwhm: f64) {
    if fwhm <= 0.0 {
        return;
    }
    let sigma_mm = fwhm / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt());
    let [nx, ny, nz] = grid.dims;
    let strides = [1usize, nx, nx * ny];
    let mut line = Vec::new();
    for axis in 0..3 {
        let sigma = sigma_mm / grid.spacing[axis];
        let radius = (3.0 * sigma).ceil() as i64;
        if radius == 0 {
            continue;
        }
        let mut kernel: Vec<f64> = (-radius..=radius)
            .map(|k| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp())
            .collect();
        let norm: f64 = kernel.iter().sum();
        kernel.iter_mut().for_each(|w| *w /= norm);
        let n = grid.dims[axis];
        let stride = strides[axis];
        let (outer_a, outer_b) = match axis {
            0 => (ny, nz),
            1 => (nx, nz),
            _ => (nx, ny),
        };
        for b in 0..outer_b {
            for a in 0..outer_a {
                let start = match axis {
                    0 => a * nx + b * nx * ny,
                    1 => a + b * nx * ny,
                    _ => a + b * nx,
                };
                line.clear();
                line.extend((0..n).map(|k| data[start + k * stride]));
                for k in 0..n {
                    let mut acc = 0.0;
                    for (j, w) in kernel.iter().enumerate() {
                        let src = (k as i64 + j as i64 - radius).clamp(0, n as i64 - 1) as usize;
                        acc += w * line[src];
                    }
                    data[start + k * stride] = acc;
                }
            }
        }
    }
}

/// Contrast, sensitivity field, blur and noise applied to a tissue-signal volume.
pub(crate) fn render(
    base: &VoxelVolume,
    labels: &[u16],
    class_of_label: &dyn Fn(u16) -> Option<FruitClass>,
    profile: &SequenceProfile,
    seed: u64,
) -> Result<VoxelVolume> {
    profile.validate()?;
    let mut classes = [None; 65536];
    let mut data: Vec<f64> = Vec::with_capacity(base.data.len());
    for (&s, &l) in base.data.iter().zip(labels) {
        let s = s as f64;
        if l == 0 {
            data.push(s);
            continue;
        }
        let class = match classes[l as usize] {
            Some(c) => c,
            None => {
                let c = class_of_label(l).ok_or_else(|| {
                    Error::InvalidVolume(format!("label {l} has no class in the layout"))
                })?;
                classes[l as usize] = Some(c);
                c
            }
        };
        data.push(profile.contrast_map[class.index()].apply(s));
    }
    if profile.bias_field > 0.0 {
        let field = ValueNoise::new(rng::derive(seed, "bias"), BIAS_SCALE_MM);
        for (i, v) in data.iter_mut().enumerate() {
            *v *= 1.0 + profile.bias_field * field.sample(base.grid.position(i));
        }
    }
    let mut r = rng::rng(seed);
    gaussian_blur(&base.grid, &mut data, profile.blur_fwhm);
    if profile.noise_sigma > 0.0 {
        for v in data.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut r);
            *v += profile.noise_sigma * z;
        }
    }
    VoxelVolume::new(base.grid, data.into_iter().map(|v| v as f32).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_profiles_are_distinct_and_valid() {
        let profiles: Vec<_> = Sequence::ALL.iter().map(|&s| SequenceProfile::builtin(s)).collect();
        for p in &profiles {
            p.validate().unwrap();
        }
        for i in 0..5 {
            for j in i + 1..5 {
                assert_ne!(profiles[i].contrast_map, profiles[j].contrast_map);
            }
        }
    }

    #[test]
    fn class_orderings_differ_across_sequences() {
        let order = |seq| {
            let p = SequenceProfile::builtin(seq);
            let mut idx: Vec<usize> = (0..4).collect();
            idx.sort_by(|&a, &b| {
                let ma = p.contrast_map[a]
                    .apply(TextureParams::default_for(FruitClass::ALL[a]).base_intensity);
                let mb = p.contrast_map[b]
                    .apply(TextureParams::default_for(FruitClass::ALL[b]).base_intensity);
                ma.total_cmp(&mb)
            });
            idx
        };
        let orders: Vec<_> = Sequence::ALL.iter().map(|&s| order(s)).collect();
        for i in 0..5 {
            for j in i + 1..5 {
                assert_ne!(orders[i], orders[j], "{i} vs {j}");
            }
        }
    }

    #[test]
    fn blur_preserves_constant_field() {
        let g = Grid::new([7, 5, 4], [1.0, 1.0, 2.0]).unwrap();
        let mut d = vec![3.5; g.len()];
        gaussian_blur(&g, &mut d, 2.0);
        assert!(d.iter().all(|v| (v - 3.5).abs() < 1e-12));
    }

    #[test]
    fn blur_preserves_mass_in_interior() {
        let g = Grid::new([21, 21, 21], [1.0; 3]).unwrap();
        let mut d = vec![0.0; g.len()];
        d[g.index(10, 10, 10)] = 1.0;
        gaussian_blur(&g, &mut d, 2.0);
        let total: f64 = d.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(d[g.index(10, 10, 10)] > d[g.index(11, 10, 10)]);
    }

    #[test]
    fn sequence_names_round_trip() {
        for s in Sequence::ALL {
            assert_eq!(Sequence::parse(s.name()), Some(s));
            let json = serde_json::to_string(&s).unwrap();
            assert_eq!(json, format!("\"{}\"", s.name()));
        }
    }
}
