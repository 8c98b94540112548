//! Acquisition, segmentation and extraction of every scenario cell.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phantom::{
    apply_sequence, generate_phantom, rescan, rotate90, Axis, FruitClass, Jitter, PhantomLayout,
    ScanId, ScanInstance, Sequence, SequenceProfile,
};
use crate::radiomics::{extract_mask, feature_names, ExtractionConfig, FeatureVector, Provenance};
use crate::rng;
use crate::segmentation::{
    full_segmentation, partial_segmentation, rotated_segmentation, Observer, SegParams, SegType,
    Variant,
};

/// Axis the R1/R2 acquisitions are rotated about.
pub const ROTATION_AXIS: Axis = Axis::X;

/// Rows per (sequence, scan, observer, seg_type) cell.
pub const ROWS_PER_CELL: usize = 16;

/// Everything needed to synthesize one phantom's feature table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub layout: PhantomLayout,
    pub profiles: Vec<SequenceProfile>,
    pub jitter: Jitter,
    pub segmentation: SegParams,
    pub extraction: ExtractionConfig,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            layout: PhantomLayout::default_layout(),
            profiles: Sequence::ALL.iter().map(|&s| SequenceProfile::builtin(s)).collect(),
            jitter: Jitter::default(),
            segmentation: SegParams::default(),
            extraction: ExtractionConfig::default(),
        }
    }
}

impl DatasetConfig {
    pub fn validate(&self) -> Result<()> {
        self.layout.validate()?;
        self.segmentation.validate()?;
        for p in &self.profiles {
            p.validate()?;
        }
        let mut seen: Vec<Sequence> = self.profiles.iter().map(|p| p.name).collect();
        seen.sort();
        seen.dedup();
        if seen.len() != self.profiles.len() {
            return Err(Error::Config("duplicate sequence profile".into()));
        }
        Ok(())
    }
}

/// Seed of the acquisition noise of one (sequence, scan).
pub fn acquisition_seed(seed: u64, sequence: Sequence, scan: ScanId) -> u64 {
    rng::derive(seed, &format!("acquisition/{sequence}/{scan}"))
}

/// Pose seed of a repositioned scan.
pub fn pose_seed(seed: u64, scan: ScanId) -> u64 {
    rng::derive(seed, &format!("pose/{scan}"))
}

/// The four sequence-free acquisitions of one phantom: the nominal pose,
/// a repositioning, and two repositioned rotated poses.
pub fn base_scans(layout: &PhantomLayout, seed: u64, jitter: &Jitter) -> Result<Vec<ScanInstance>> {
    ScanId::ALL
        .iter()
        .map(|&id| {
            let inst = match id {
                ScanId::S1 => generate_phantom(layout, seed)?,
                _ => rescan(layout, seed, pose_seed(seed, id), jitter)?,
            };
            let inst = if id.is_rotated() {
                rotate90(&inst, ROTATION_AXIS)
            } else {
                inst
            };
            Ok(inst.with_scan_id(id))
        })
        .collect()
}

/// Every (sequence, scan) acquisition of one phantom seed, profile-major in
/// the order of `config.profiles`, scans in `ScanId::ALL` order.
pub fn acquisitions(config: &DatasetConfig, seed: u64) -> Result<Vec<ScanInstance>> {
    config.validate()?;
    let bases = base_scans(&config.layout, seed, &config.jitter)?;
    let jobs: Vec<(&SequenceProfile, &ScanInstance)> = config
        .profiles
        .iter()
        .flat_map(|p| bases.iter().map(move |b| (p, b)))
        .collect();
    jobs.par_iter()
        .map(|&(profile, base)| {
            apply_sequence(base, profile, acquisition_seed(seed, profile.name, base.meta.scan_id))
        })
        .collect()
}

/// Feature rows of one phantom seed, in canonical cell order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub rows: Vec<FeatureVector>,
}

/// Key of one dataset cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellKey {
    pub sequence: Sequence,
    pub scan_id: ScanId,
    pub observer: Observer,
    pub seg_type: SegType,
}

impl CellKey {
    pub fn of(p: &Provenance) -> Self {
        Self {
            sequence: p.sequence,
            scan_id: p.scan_id,
            observer: p.observer,
            seg_type: p.seg_type,
        }
    }
}

impl std::fmt::Display for CellKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}/{}/{}/{}",
            self.sequence, self.scan_id, self.observer, self.seg_type
        )
    }
}

/// Segmentation types produced for a scan.
pub fn seg_types_of(scan: ScanId) -> &'static [SegType] {
    if scan.is_rotated() {
        &[SegType::RotatedFull]
    } else {
        &[SegType::FullA, SegType::FullB, SegType::Partial]
    }
}

/// Every cell a full dataset holds for `sequences`, in canonical order.
pub fn expected_cells(sequences: &[Sequence]) -> Vec<CellKey> {
    let mut out = Vec::new();
    for &sequence in sequences {
        for &scan_id in &ScanId::ALL {
            for &observer in &Observer::ALL {
                for &seg_type in seg_types_of(scan_id) {
                    out.push(CellKey {
                        sequence,
                        scan_id,
                        observer,
                        seg_type,
                    });
                }
            }
        }
    }
    out
}

/// Segments one sequence-weighted scan every way the design asks for and
/// extracts one row per (observer, segmentation, fruit).
pub fn scan_rows(
    scan: &ScanInstance,
    seed: u64,
    params: &SegParams,
    extraction: &ExtractionConfig,
) -> Result<Vec<FeatureVector>> {
    let sequence = scan
        .meta
        .sequence
        .ok_or_else(|| Error::InvalidArgument("scan has no sequence".into()))?;
    let classes = &scan.classes;
    let mut out = Vec::new();
    for &observer in &Observer::ALL {
        let mut segs = Vec::new();
        if scan.meta.rotated {
            segs.push(rotated_segmentation(scan, Variant::A, observer, params)?);
        } else {
            let a = full_segmentation(scan, Variant::A, observer, params)?;
            let b = full_segmentation(scan, Variant::B, observer, params)?;
            let p = partial_segmentation(&a, params.fraction)?;
            segs.extend([a, b, p]);
        }
        for seg in segs {
            let prov = |label: u16| Provenance {
                seed,
                instance_id: label,
                class: classes.get(&label).copied().unwrap_or(FruitClass::Kiwi),
                sequence,
                scan_id: scan.meta.scan_id,
                observer,
                seg_type: seg.seg_type,
            };
            let rows = extract_mask(&scan.volume, &seg.mask, extraction, prov)?;
            if let Some(r) = rows
                .iter()
                .find(|r| !classes.contains_key(&r.provenance.instance_id))
            {
                return Err(Error::Segmentation(format!(
                    "label {} is not a phantom instance",
                    r.provenance.instance_id
                )));
            }
            out.extend(rows);
        }
    }
    Ok(out)
}

impl Dataset {
    /// Synthesizes, segments and extracts every cell of one phantom seed.
    pub fn build(config: &DatasetConfig, seed: u64) -> Result<Self> {
        let scans = acquisitions(config, seed)?;
        Self::from_scans(&scans, seed, config)
    }

    /// Segments and extracts already acquired scans of one phantom seed.
    pub fn from_scans(scans: &[ScanInstance], seed: u64, config: &DatasetConfig) -> Result<Self> {
        config.validate()?;
        let parts: Vec<Vec<FeatureVector>> = scans
            .par_iter()
            .map(|scan| scan_rows(scan, seed, &config.segmentation, &config.extraction))
            .collect::<Result<_>>()?;
        let mut rows: Vec<FeatureVector> = parts.into_iter().flatten().collect();
        rows.sort_by(|a, b| a.provenance.cmp(&b.provenance));
        Self::from_rows(rows)
    }

    /// Wraps rows read back from a feature table; checks the manifest width
    /// and that every present (seed, cell) holds the full phantom.
    pub fn from_rows(rows: Vec<FeatureVector>) -> Result<Self> {
        let names = feature_names();
        if let Some(r) = rows.iter().find(|r| r.values.len() != names.len()) {
            return Err(Error::InvalidArgument(format!(
                "row {} has {} features, expected {}",
                r.provenance.sample_id(),
                r.values.len(),
                names.len()
            )));
        }
        let mut counts: BTreeMap<(u64, CellKey), usize> = BTreeMap::new();
        for r in &rows {
            *counts.entry((r.provenance.seed, CellKey::of(&r.provenance))).or_insert(0) += 1;
        }
        for ((seed, key), n) in counts {
            if n != ROWS_PER_CELL {
                return Err(Error::Assembly(format!(
                    "seed {seed} cell {key} holds {n} rows, expected {ROWS_PER_CELL}"
                )));
            }
        }
        Ok(Self {
            feature_names: names,
            rows,
        })
    }

    pub fn seeds(&self) -> Vec<u64> {
        let mut s: Vec<u64> = self.rows.iter().map(|r| r.provenance.seed).collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    /// Rows of one phantom seed.
    pub fn for_seed(&self, seed: u64) -> Self {
        Self {
            feature_names: self.feature_names.clone(),
            rows: self
                .rows
                .iter()
                .filter(|r| r.provenance.seed == seed)
                .cloned()
                .collect(),
        }
    }

    pub fn sequences(&self) -> Vec<Sequence> {
        let mut s: Vec<Sequence> = self.rows.iter().map(|r| r.provenance.sequence).collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    /// Rows per cell, pooled over seeds.
    pub fn cell_counts(&self) -> BTreeMap<CellKey, usize> {
        let mut m = BTreeMap::new();
        for r in &self.rows {
            *m.entry(CellKey::of(&r.provenance)).or_insert(0) += 1;
        }
        m
    }

    /// Rows of one cell; a missing cell is an error naming it.
    pub fn cell(&self, key: CellKey) -> Result<Vec<&FeatureVector>> {
        let rows: Vec<&FeatureVector> = self
            .rows
            .iter()
            .filter(|r| CellKey::of(&r.provenance) == key)
            .collect();
        if rows.is_empty() {
            return Err(Error::Assembly(format!("missing cell {key}")));
        }
        Ok(rows)
    }

    /// Column index of each name.
    pub fn columns(&self, names: &[String]) -> Result<Vec<usize>> {
        names
            .iter()
            .map(|n| {
                self.feature_names
                    .iter()
                    .position(|m| m == n)
                    .ok_or_else(|| Error::MissingFeature(n.clone()))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expected_cells_enumerate_the_design() {
        let cells = expected_cells(&Sequence::ALL);
        // 2 plain scans x 2 observers x 3 types + 2 rotated x 2 observers
        assert_eq!(cells.len(), 5 * (12 + 4));
        let mut sorted = cells.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), cells.len());
    }

    #[test]
    fn rotated_bases_are_permuted() {
        let layout = PhantomLayout::default_layout();
        let scans = base_scans(&layout, 3, &Jitter::default()).unwrap();
        let d = layout.grid.dims;
        assert_eq!(scans[0].volume.grid.dims, d);
        assert_eq!(scans[2].volume.grid.dims, [d[0], d[2], d[1]]);
        assert!(scans[3].meta.rotated);
        assert_eq!(scans[1].meta.scan_id, ScanId::S2);
        assert_ne!(scans[0].ground_truth_mask, scans[1].ground_truth_mask);
    }
}
