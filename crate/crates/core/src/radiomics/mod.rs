//! Radiomic feature extraction: 107 features in seven classes computed from
//! a discretized ROI, with texture matrices built by direct enumeration.

mod discretize;
pub mod first_order;
pub mod gldm;
pub mod glcm;
pub mod glrlm;
pub mod glszm;
pub mod ngtdm;
mod runs;
pub mod shape;
mod table;

pub use discretize::{discretize, discretize_values, roi_values, Binning, DiscretizedRoi, MAX_LEVELS};
pub use table::{read_feature_table, write_feature_table};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phantom::{FruitClass, ScanId, Sequence};
use crate::segmentation::{Observer, SegType};
use crate::volume::{LabelMask, VoxelVolume};

/// The 13 unique offsets of the 26-neighborhood (one of each +-d pair).
pub const DIRECTIONS: [[i64; 3]; 13] = [
    [1, 0, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 1, 0],
    [1, -1, 0],
    [1, 0, 1],
    [1, 0, -1],
    [0, 1, 1],
    [0, 1, -1],
    [1, 1, 1],
    [1, 1, -1],
    [1, -1, 1],
    [1, -1, -1],
];

pub const NEIGHBORS_26: [[i64; 3]; 26] = {
    let mut out = [[0i64; 3]; 26];
    let mut k = 0;
    let mut i = 0;
    while i < 27 {
        let d = [(i % 3) as i64 - 1, ((i / 3) % 3) as i64 - 1, (i / 9) as i64 - 1];
        if !(d[0] == 0 && d[1] == 0 && d[2] == 0) {
            out[k] = d;
            k += 1;
        }
        i += 1;
    }
    out
};

/// Column-wise mean of per-direction feature rows. Each column is summed in
/// sorted order, so permuting the directions cannot change a bit.
pub(crate) fn average_sorted<const N: usize>(rows: &[[f64; N]]) -> [f64; N] {
    let mut out = [0.0; N];
    let mut col = Vec::with_capacity(rows.len());
    for (k, o) in out.iter_mut().enumerate() {
        col.clear();
        col.extend(rows.iter().map(|r| r[k]));
        col.sort_by(f64::total_cmp);
        *o = col.iter().sum::<f64>() / rows.len() as f64;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureClass {
    Shape,
    FirstOrder,
    Glcm,
    Glrlm,
    Glszm,
    Gldm,
    Ngtdm,
}

impl FeatureClass {
    pub const ALL: [FeatureClass; 7] = [
        FeatureClass::Shape,
        FeatureClass::FirstOrder,
        FeatureClass::Glcm,
        FeatureClass::Glrlm,
        FeatureClass::Glszm,
        FeatureClass::Gldm,
        FeatureClass::Ngtdm,
    ];

    pub fn prefix(self) -> &'static str {
        match self {
            FeatureClass::Shape => "shape",
            FeatureClass::FirstOrder => "firstorder",
            FeatureClass::Glcm => "glcm",
            FeatureClass::Glrlm => "glrlm",
            FeatureClass::Glszm => "glszm",
            FeatureClass::Gldm => "gldm",
            FeatureClass::Ngtdm => "ngtdm",
        }
    }

    pub fn names(self) -> &'static [&'static str] {
        match self {
            FeatureClass::Shape => &shape::NAMES,
            FeatureClass::FirstOrder => &first_order::NAMES,
            FeatureClass::Glcm => &glcm::NAMES,
            FeatureClass::Glrlm => &glrlm::NAMES,
            FeatureClass::Glszm => &glszm::NAMES,
            FeatureClass::Gldm => &gldm::NAMES,
            FeatureClass::Ngtdm => &ngtdm::NAMES,
        }
    }
}

pub const FEATURE_COUNT: usize = 107;

/// Canonical feature names (`<class>_<Name>`), class order then alphabetical.
pub fn feature_names() -> Vec<String> {
    FeatureClass::ALL
        .iter()
        .flat_map(|c| c.names().iter().map(move |n| format!("{}_{}", c.prefix(), n)))
        .collect()
}

/// Class of a canonical feature name.
pub fn feature_class(name: &str) -> Option<FeatureClass> {
    let (prefix, rest) = name.split_once('_')?;
    FeatureClass::ALL
        .into_iter()
        .find(|c| c.prefix() == prefix && c.names().contains(&rest))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TextureKind {
    Glcm,
    Glrlm,
    Glszm,
    Gldm,
    Ngtdm,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TextureMatrix {
    Glcm(glcm::Glcm),
    Glrlm(glrlm::Glrlm),
    Glszm(glszm::Glszm),
    Gldm(gldm::Gldm),
    Ngtdm(ngtdm::Ngtdm),
}

pub fn build_matrix(kind: TextureKind, roi: &DiscretizedRoi) -> TextureMatrix {
    match kind {
        TextureKind::Glcm => TextureMatrix::Glcm(glcm::build(roi)),
        TextureKind::Glrlm => TextureMatrix::Glrlm(glrlm::build(roi)),
        TextureKind::Glszm => TextureMatrix::Glszm(glszm::build(roi)),
        TextureKind::Gldm => TextureMatrix::Gldm(gldm::build(roi)),
        TextureKind::Ngtdm => TextureMatrix::Ngtdm(ngtdm::build(roi)),
    }
}

/// Features of a texture matrix; `n_voxels` is the ROI size.
pub fn texture_features(matrix: &TextureMatrix, n_voxels: usize) -> Vec<f64> {
    match matrix {
        TextureMatrix::Glcm(m) => glcm::features(m).to_vec(),
        TextureMatrix::Glrlm(m) => glrlm::features(m, n_voxels).to_vec(),
        TextureMatrix::Glszm(m) => glszm::features(m, n_voxels).to_vec(),
        TextureMatrix::Gldm(m) => gldm::features(m).to_vec(),
        TextureMatrix::Ngtdm(m) => ngtdm::features(m).to_vec(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtractionConfig {
    pub binning: Binning,
}

/// Where a feature vector came from.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub instance_id: u16,
    pub class: FruitClass,
    pub sequence: Sequence,
    pub scan_id: ScanId,
    pub observer: Observer,
    pub seg_type: SegType,
}

impl Provenance {
    pub fn sample_id(&self) -> String {
        format!(
            "s{}-{}-{}-{}-{}-f{:02}",
            self.seed,
            self.sequence,
            self.scan_id,
            self.observer,
            self.seg_type,
            self.instance_id
        )
    }

    /// Inverse of `sample_id` plus the class column.
    pub fn parse(sample_id: &str, class: FruitClass) -> Option<Self> {
        let mut it = sample_id.split('-');
        let seed = it.next()?.strip_prefix('s')?.parse().ok()?;
        // Sequence names contain one hyphen.
        let seq = format!("{}-{}", it.next()?, it.next()?);
        let scan = it.next()?;
        let obs = it.next()?;
        let seg = it.next()?;
        let inst = it.next()?.strip_prefix('f')?.parse().ok()?;
        if it.next().is_some() {
            return None;
        }
        Some(Self {
            seed,
            instance_id: inst,
            class,
            sequence: Sequence::parse(&seq)?,
            scan_id: ScanId::parse(scan)?,
            observer: Observer::parse(obs)?,
            seg_type: SegType::parse(seg)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub provenance: Provenance,
}

/// All 107 features of one discretized ROI with its raw intensities.
pub fn features_of(roi: &DiscretizedRoi, values: &[f64]) -> Result<Vec<f64>> {
    let n = values.len();
    let voxel_volume = roi.spacing.iter().product();
    let mut out = Vec::with_capacity(FEATURE_COUNT);
    out.extend(shape::shape_features(roi));
    out.extend(first_order::first_order(values, &roi.levels, roi.ng, voxel_volume));
    out.extend(glcm::features(&glcm::build(roi)));
    out.extend(glrlm::features(&glrlm::build(roi), n));
    out.extend(glszm::features(&glszm::build(roi), n));
    out.extend(gldm::features(&gldm::build(roi)));
    out.extend(ngtdm::features(&ngtdm::build(roi)));
    debug_assert_eq!(out.len(), FEATURE_COUNT);
    if let Some(k) = out.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!(
            "feature {} evaluated to {}",
            feature_names()[k],
            out[k]
        )));
    }
    Ok(out)
}

pub fn extract_all(
    volume: &VoxelVolume,
    mask: &LabelMask,
    label: u16,
    config: &ExtractionConfig,
    provenance: Provenance,
) -> Result<FeatureVector> {
    let roi = discretize(volume, mask, label, config.binning)?;
    let values = roi_values(volume, mask, label)?;
    Ok(FeatureVector {
        values: features_of(&roi, &values)?,
        provenance,
    })
}

/// Features of every label in `mask`, in label order. `provenance` maps a
/// label to its provenance.
pub fn extract_mask(
    volume: &VoxelVolume,
    mask: &LabelMask,
    config: &ExtractionConfig,
    provenance: impl Fn(u16) -> Provenance,
) -> Result<Vec<FeatureVector>> {
    if volume.grid.dims != mask.grid.dims {
        return Err(Error::InvalidVolume("volume and mask dims differ".into()));
    }
    let mut by_label: std::collections::BTreeMap<u16, Vec<usize>> = Default::default();
    for (i, &l) in mask.labels.iter().enumerate() {
        if l != 0 {
            by_label.entry(l).or_default().push(i);
        }
    }
    by_label
        .into_iter()
        .map(|(label, idx)| {
            let values: Vec<f64> = idx.iter().map(|&i| volume.data[i] as f64).collect();
            let roi = discretize::discretize_indices(mask, &idx, &values, config.binning)?;
            Ok(FeatureVector {
                values: features_of(&roi, &values)?,
                provenance: provenance(label),
            })
        })
        .collect()
}
