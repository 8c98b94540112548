//! Volume / mask file pairs.
//!
//! Each image is stored as `<base>.vol.json` (sidecar) plus `<base>.vol.raw`
//! (little-endian raw samples, x-fastest). Intensities are `f32`, labels
//! `u16`. Reading back what was written is bit-exact.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::volume::{Grid, LabelMask, VoxelVolume};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DType {
    F32,
    U16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Intensity,
    Labels,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sidecar {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub dtype: DType,
    pub byte_order: String,
    pub kind: Kind,
    #[serde(default)]
    pub meta: Value,
}

pub fn sidecar_path(base: &Path) -> PathBuf {
    with_suffix(base, ".vol.json")
}

pub fn raw_path(base: &Path) -> PathBuf {
    with_suffix(base, ".vol.raw")
}

fn with_suffix(base: &Path, suffix: &str) -> PathBuf {
    let mut s = base.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_pair(base: &Path, sidecar: &Sidecar, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = base.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    let json_path = sidecar_path(base);
    let mut text = serde_json::to_string_pretty(sidecar)?;
    text.push('\n');
    fs::write(&json_path, text).map_err(|e| Error::io(&json_path, e))?;
    let raw = raw_path(base);
    fs::write(&raw, bytes).map_err(|e| Error::io(&raw, e))
}

fn read_pair(base: &Path, kind: Kind) -> Result<(Sidecar, Grid, Vec<u8>)> {
    let json_path = sidecar_path(base);
    let text = fs::read_to_string(&json_path).map_err(|e| Error::io(&json_path, e))?;
    let sidecar: Sidecar = serde_json::from_str(&text).map_err(|e| Error::Format {
        path: json_path.clone(),
        reason: e.to_string(),
    })?;
    let bad = |reason: String| Error::Format {
        path: json_path.clone(),
        reason,
    };
    if sidecar.byte_order != "little" {
        return Err(bad(format!("unsupported byte order `{}`", sidecar.byte_order)));
    }
    if sidecar.kind != kind {
        return Err(bad(format!("expected kind {kind:?}, found {:?}", sidecar.kind)));
    }
    let expected_dtype = match kind {
        Kind::Intensity => DType::F32,
        Kind::Labels => DType::U16,
    };
    if sidecar.dtype != expected_dtype {
        return Err(bad(format!("dtype {:?} does not match kind {kind:?}", sidecar.dtype)));
    }
    let grid = Grid::new(sidecar.dims, sidecar.spacing).map_err(|e| bad(e.to_string()))?;
    let raw = raw_path(base);
    let bytes = fs::read(&raw).map_err(|e| Error::io(&raw, e))?;
    let width = match sidecar.dtype {
        DType::F32 => 4,
        DType::U16 => 2,
    };
    if bytes.len() != grid.len() * width {
        return Err(Error::Format {
            path: raw,
            reason: format!("expected {} bytes, found {}", grid.len() * width, bytes.len()),
        });
    }
    Ok((sidecar, grid, bytes))
}

pub fn write_volume(base: &Path, volume: &VoxelVolume, meta: Value) -> Result<()> {
    let sidecar = Sidecar {
        dims: volume.grid.dims,
        spacing: volume.grid.spacing,
        dtype: DType::F32,
        byte_order: "little".into(),
        kind: Kind::Intensity,
        meta,
    };
    let bytes: Vec<u8> = volume.data.iter().flat_map(|v| v.to_le_bytes()).collect();
    write_pair(base, &sidecar, &bytes)
}

pub fn read_volume(base: &Path) -> Result<(VoxelVolume, Value)> {
    let (sidecar, grid, bytes) = read_pair(base, Kind::Intensity)?;
    let data = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    let volume = VoxelVolume::new(grid, data).map_err(|e| Error::Format {
        path: raw_path(base),
        reason: e.to_string(),
    })?;
    Ok((volume, sidecar.meta))
}

pub fn write_mask(base: &Path, mask: &LabelMask, meta: Value) -> Result<()> {
    let sidecar = Sidecar {
        dims: mask.grid.dims,
        spacing: mask.grid.spacing,
        dtype: DType::U16,
        byte_order: "little".into(),
        kind: Kind::Labels,
        meta,
    };
    let bytes: Vec<u8> = mask.labels.iter().flat_map(|v| v.to_le_bytes()).collect();
    write_pair(base, &sidecar, &bytes)
}

pub fn read_mask(base: &Path) -> Result<(LabelMask, Value)> {
    let (sidecar, grid, bytes) = read_pair(base, Kind::Labels)?;
    let labels = bytes
        .chunks_exact(2)
        .map(|c| u16::from_le_bytes([c[0], c[1]]))
        .collect();
    Ok((LabelMask::new(grid, labels)?, sidecar.meta))
}
