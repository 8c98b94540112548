//! Procedural fruit texture, evaluated in fruit-local millimetres so that a
//! repositioned fruit carries its texture with it.

use super::layout::{Fruit, Structure};
use crate::rng::mix64;

/// Lattice value noise in [-1, 1] with smoothstep trilinear interpolation.
#[derive(Debug, Clone, Copy)]
pub struct ValueNoise {
    seed: u64,
    scale: f64,
}

impl ValueNoise {
    pub fn new(seed: u64, scale_mm: f64) -> Self {
        Self {
            seed,
            scale: scale_mm.max(1e-6),
        }
    }

    fn lattice(&self, x: i64, y: i64, z: i64) -> f64 {
        let h = mix64(
            self.seed
                ^ (x as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
                ^ (y as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
                ^ (z as u64).wrapping_mul(0x1656_67B1_9E37_79F9),
        );
        (h >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    }

    pub fn sample(&self, p: [f64; 3]) -> f64 {
        let q = [p[0] / self.scale, p[1] / self.scale, p[2] / self.scale];
        let f = [q[0].floor(), q[1].floor(), q[2].floor()];
        let t: Vec<f64> = (0..3)
            .map(|a| {
                let u = q[a] - f[a];
                u * u * (3.0 - 2.0 * u)
            })
            .collect();
        let b = [f[0] as i64, f[1] as i64, f[2] as i64];
        let mut acc = 0.0;
        for corner in 0..8 {
            let d = [corner & 1, (corner >> 1) & 1, (corner >> 2) & 1];
            let mut w = 1.0;
            for a in 0..3 {
                w *= if d[a] == 1 { t[a] } else { 1.0 - t[a] };
            }
            acc += w * self.lattice(b[0] + d[0] as i64, b[1] + d[1] as i64, b[2] + d[2] as i64);
        }
        acc
    }
}

/// Tissue signal for a point inside `fruit`, given in local coordinates.
///
/// Returns `base * (1 + amplitude * (structure + 0.5 * noise))`; the
/// structural term lies in [-1, 1].
pub fn tissue_signal(fruit: &Fruit, local: [f64; 3], seed: u64) -> f64 {
    let tp = &fruit.texture;
    if tp.texture_amplitude == 0.0 {
        return tp.base_intensity;
    }
    let noise = ValueNoise::new(seed, tp.texture_scale).sample(local);
    let u = [
        local[0] / fruit.semi_axes[0],
        local[1] / fruit.semi_axes[1],
        local[2] / fruit.semi_axes[2],
    ];
    let structure = match tp.structure {
        Structure::ConcentricShells => {
            let mean_axis = (fruit.semi_axes[0] + fruit.semi_axes[1] + fruit.semi_axes[2]) / 3.0;
            let r_mm = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt() * mean_axis;
            (2.0 * std::f64::consts::PI * r_mm / (2.0 * tp.texture_scale)).cos()
        }
        Structure::RadialSeeds => {
            // Long axis is local x.
            let rho = (u[1] * u[1] + u[2] * u[2]).sqrt();
            if rho < 0.22 {
                0.8
            } else if rho < 0.5 {
                let spots = ValueNoise::new(seed ^ 0x5EED, tp.texture_scale * 0.6).sample(local);
                if spots > 0.15 {
                    -1.0
                } else {
                    0.2
                }
            } else {
                0.1
            }
        }
        Structure::WedgeSepta => {
            let phi = u[2].atan2(u[1]);
            let r = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
            if r < 0.15 || (5.0 * phi).sin().abs() < 0.18 || r > 0.88 {
                -0.9
            } else {
                0.3
            }
        }
        Structure::HomogeneousCore => {
            let r = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
            if r < 0.3 {
                -0.5
            } else {
                0.0
            }
        }
    };
    tp.base_intensity * (1.0 + tp.texture_amplitude * (structure + 0.5 * noise))
}
