//! Distribution-shift experiments.
//!
//! Three scenario families share one flow: assemble provenance-disjoint
//! train / validation / test cells from a [`Dataset`], pick a feature set,
//! grid-search and fit the boosted classifier, optionally calibrate on the
//! validation split, and score every test cell.
//!
//! * **inter_observer**: train on one measurement (scan 1, observer 1,
//!   partial) of a sequence, test on the other three measurements of that
//!   sequence. One model per listed sequence.
//! * **cross_protocol**: train on the same measurement of several sequences,
//!   test every sequence; cells of unseen sequences are held out.
//! * **compound**: train on full segmentations (variant A, scans 1 and 2),
//!   calibrate on variant B of scan 2, test partial and rotated
//!   segmentations of every sequence.
//!
//! Degradation ratio is shifted macro-F1 over in-domain macro-F1.

pub mod dataset;
pub mod robust;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use dataset::{CellKey, Dataset, DatasetConfig};
pub use robust::{identify_robust_features, RobustFeatures};

use crate::error::{Error, Result};
use crate::evalcal::{
    accuracy, apply_calibration, ece, f1_macro, fit_calibration, CalibrationMethod,
    CalibrationParams, PredictionSet, ECE_BINS,
};
use crate::learner::{fit, grid_search_cv, ClassWeighting, HyperGrid, HyperParams, TrainSet};
use crate::phantom::{FruitClass, ScanId, Sequence};
use crate::radiomics::{FeatureVector, Provenance};
use crate::rng;
use crate::segmentation::{Observer, SegType};

pub const REPORT_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    InterObserver,
    CrossProtocol,
    Compound,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::InterObserver => "inter_observer",
            Family::CrossProtocol => "cross_protocol",
            Family::Compound => "compound",
        }
    }
}

/// Which feature subset a model sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureSetKind {
    /// Robust in every sequence of the dataset.
    Consistent,
    /// Robust in one sequence; every training sequence must share them.
    SequenceSpecific { sequence: Sequence },
    /// Robust in every training sequence.
    TrainCommon,
    /// The full manifest.
    All,
}

/// Resolved feature subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSetSpec {
    pub kind: FeatureSetKind,
    pub names: Vec<String>,
}

impl FeatureSetSpec {
    pub fn resolve(
        kind: FeatureSetKind,
        robust: &RobustFeatures,
        manifest: &[String],
        train_sequences: &[Sequence],
    ) -> Result<Self> {
        let names = match kind {
            FeatureSetKind::All => manifest.to_vec(),
            FeatureSetKind::Consistent => robust.consistent.clone(),
            FeatureSetKind::TrainCommon => robust.common(manifest, train_sequences)?,
            FeatureSetKind::SequenceSpecific { sequence } => {
                let names = robust.for_sequence(sequence)?.to_vec();
                for &s in train_sequences {
                    let set = robust.for_sequence(s)?;
                    if let Some(n) = names.iter().find(|n| !set.contains(n)) {
                        return Err(Error::Assembly(format!(
                            "feature {n} robust in {sequence} is not robust in training sequence {s}"
                        )));
                    }
                }
                names
            }
        };
        if names.is_empty() {
            return Err(Error::Assembly(format!("feature set {kind:?} is empty")));
        }
        Ok(Self { kind, names })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    pub family: Family,
    pub train_sequences: Vec<Sequence>,
    /// Sequences scored at test time; empty means all five.
    #[serde(default)]
    pub test_sequences: Vec<Sequence>,
    pub features: FeatureSetKind,
    #[serde(default)]
    pub augmentation: bool,
    #[serde(default)]
    pub calibration: CalibrationMethod,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::Config(format!(
                "scenario name `{}` must be nonempty and path-safe",
                self.name
            )));
        }
        if self.train_sequences.is_empty() {
            return Err(Error::Config(format!("{}: no training sequence", self.name)));
        }
        if has_duplicates(&self.train_sequences) || has_duplicates(&self.test_sequences) {
            return Err(Error::Config(format!("{}: repeated sequence", self.name)));
        }
        if self.augmentation && self.family != Family::Compound {
            return Err(Error::Config(format!(
                "{}: augmentation applies to the compound family only",
                self.name
            )));
        }
        Ok(())
    }

    pub fn test_sequences(&self) -> Vec<Sequence> {
        if self.test_sequences.is_empty() {
            Sequence::ALL.to_vec()
        } else {
            self.test_sequences.clone()
        }
    }
}

fn has_duplicates(s: &[Sequence]) -> bool {
    let set: BTreeSet<_> = s.iter().collect();
    set.len() != s.len()
}

/// How a test cell relates to the training distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// Same sequence and segmentation protocol as training.
    InDomain,
    /// Sequence never seen in training.
    HeldOut,
    /// Training sequence, different segmentation.
    SegmentationShift,
    /// Unseen sequence and different segmentation.
    Compound,
}

impl Role {
    pub fn name(self) -> &'static str {
        match self {
            Role::InDomain => "in_domain",
            Role::HeldOut => "held_out",
            Role::SegmentationShift => "segmentation_shift",
            Role::Compound => "compound",
        }
    }

    pub fn is_shifted(self) -> bool {
        self != Role::InDomain
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellLabel {
    pub sequence: Sequence,
    pub seg_type: SegType,
    pub role: Role,
}

/// Row indices into a [`Dataset`].
#[derive(Debug, Clone, PartialEq)]
pub struct TestCell {
    pub label: CellLabel,
    pub rows: Vec<usize>,
}

/// One assembled experiment: training, optional validation and test cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train_sequences: Vec<Sequence>,
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub tests: Vec<TestCell>,
}

fn rows_of(data: &Dataset, keys: &[CellKey]) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    let mut missing = Vec::new();
    for &k in keys {
        let rows: Vec<usize> = data
            .rows
            .iter()
            .enumerate()
            .filter(|(_, r)| CellKey::of(&r.provenance) == k)
            .map(|(i, _)| i)
            .collect();
        if rows.is_empty() {
            missing.push(k.to_string());
        }
        out.extend(rows);
    }
    if !missing.is_empty() {
        return Err(Error::Assembly(format!("missing cells: {}", missing.join(", "))));
    }
    Ok(out)
}

fn key(sequence: Sequence, scan_id: ScanId, observer: Observer, seg_type: SegType) -> CellKey {
    CellKey {
        sequence,
        scan_id,
        observer,
        seg_type,
    }
}

/// The measurement every non-compound model trains on.
const TRAIN_MEASUREMENT: (ScanId, Observer) = (ScanId::S1, Observer::Obs1);

/// The three other partial measurements of a sequence.
fn partial_test_keys(s: Sequence) -> Vec<CellKey> {
    [
        (ScanId::S1, Observer::Obs2),
        (ScanId::S2, Observer::Obs1),
        (ScanId::S2, Observer::Obs2),
    ]
    .iter()
    .map(|&(scan, obs)| key(s, scan, obs, SegType::Partial))
    .collect()
}

pub fn assemble_inter_observer(data: &Dataset, sequence: Sequence) -> Result<Split> {
    let (scan, obs) = TRAIN_MEASUREMENT;
    let train = rows_of(data, &[key(sequence, scan, obs, SegType::Partial)])?;
    let test = rows_of(data, &partial_test_keys(sequence))?;
    Ok(Split {
        train_sequences: vec![sequence],
        train,
        validation: Vec::new(),
        tests: vec![TestCell {
            label: CellLabel {
                sequence,
                seg_type: SegType::Partial,
                role: Role::InDomain,
            },
            rows: test,
        }],
    })
}

pub fn assemble_cross_protocol(
    data: &Dataset,
    train_sequences: &[Sequence],
    test_sequences: &[Sequence],
) -> Result<Split> {
    if train_sequences.is_empty() {
        return Err(Error::Assembly("no training sequence".into()));
    }
    let (scan, obs) = TRAIN_MEASUREMENT;
    let train_keys: Vec<CellKey> = train_sequences
        .iter()
        .map(|&s| key(s, scan, obs, SegType::Partial))
        .collect();
    let train = rows_of(data, &train_keys)?;
    let tests = test_sequences
        .iter()
        .map(|&s| {
            Ok(TestCell {
                label: CellLabel {
                    sequence: s,
                    seg_type: SegType::Partial,
                    role: if train_sequences.contains(&s) {
                        Role::InDomain
                    } else {
                        Role::HeldOut
                    },
                },
                rows: rows_of(data, &partial_test_keys(s))?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(Split {
        train_sequences: train_sequences.to_vec(),
        train,
        validation: Vec::new(),
        tests,
    })
}

/// Compound split. Training: full_A of scans 1 and 2 (both observers);
/// validation: full_B of scan 2; tests: partial of scans 1 and 2 and
/// rotated_full of R2. Scan 1 full_B and R1 are reserved for augmentation.
pub fn assemble_compound(
    data: &Dataset,
    train_sequences: &[Sequence],
    test_sequences: &[Sequence],
) -> Result<Split> {
    if train_sequences.is_empty() {
        return Err(Error::Assembly("no training sequence".into()));
    }
    let mut train_keys = Vec::new();
    let mut val_keys = Vec::new();
    for &s in train_sequences {
        for &o in &Observer::ALL {
            train_keys.push(key(s, ScanId::S1, o, SegType::FullA));
            train_keys.push(key(s, ScanId::S2, o, SegType::FullA));
            val_keys.push(key(s, ScanId::S2, o, SegType::FullB));
        }
    }
    let mut tests = Vec::new();
    for &s in test_sequences {
        let seen = train_sequences.contains(&s);
        let role = if seen {
            Role::SegmentationShift
        } else {
            Role::Compound
        };
        let partial: Vec<CellKey> = [ScanId::S1, ScanId::S2]
            .iter()
            .flat_map(|&scan| Observer::ALL.map(|o| key(s, scan, o, SegType::Partial)))
            .collect();
        let rotated: Vec<CellKey> = Observer::ALL
            .iter()
            .map(|&o| key(s, ScanId::R2, o, SegType::RotatedFull))
            .collect();
        for (seg_type, keys) in [(SegType::Partial, partial), (SegType::RotatedFull, rotated)] {
            tests.push(TestCell {
                label: CellLabel {
                    sequence: s,
                    seg_type,
                    role,
                },
                rows: rows_of(data, &keys)?,
            });
        }
    }
    Ok(Split {
        train_sequences: train_sequences.to_vec(),
        train: rows_of(data, &train_keys)?,
        validation: rows_of(data, &val_keys)?,
        tests,
    })
}

/// Adds the alternate full variant of scan 1 and the rotated R1 rows of the
/// training sequences. Fails on any provenance overlap with validation or
/// test rows.
pub fn augment_training(split: &Split, data: &Dataset) -> Result<Split> {
    let mut keys = Vec::new();
    for &s in &split.train_sequences {
        for &o in &Observer::ALL {
            keys.push(key(s, ScanId::S1, o, SegType::FullB));
            keys.push(key(s, ScanId::R1, o, SegType::RotatedFull));
        }
    }
    let mut out = split.clone();
    out.train.extend(rows_of(data, &keys)?);
    check_leakage(&out, data)?;
    Ok(out)
}

/// Verifies that train, validation and every test cell have pairwise
/// disjoint provenance.
pub fn check_leakage(split: &Split, data: &Dataset) -> Result<()> {
    let ids = |rows: &[usize]| -> BTreeSet<&Provenance> {
        rows.iter().map(|&i| &data.rows[i].provenance).collect()
    };
    let mut groups: Vec<(String, BTreeSet<&Provenance>)> = vec![
        ("train".into(), ids(&split.train)),
        ("validation".into(), ids(&split.validation)),
    ];
    for c in &split.tests {
        groups.push((
            format!("test {}/{}", c.label.sequence, c.label.seg_type),
            ids(&c.rows),
        ));
    }
    for a in 0..groups.len() {
        for b in a + 1..groups.len() {
            if let Some(p) = groups[a].1.intersection(&groups[b].1).next() {
                return Err(Error::Leakage(format!(
                    "{} appears in both {} and {}",
                    p.sample_id(),
                    groups[a].0,
                    groups[b].0
                )));
            }
        }
    }
    Ok(())
}

/// Shifted metric over in-domain metric; `None` when the reference is zero.
pub fn degradation_ratio(in_domain: f64, shifted: f64) -> Option<f64> {
    (in_domain > 0.0).then(|| shifted / in_domain)
}

/// Learner and evaluation settings shared by every scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSettings {
    pub grid: HyperGrid,
    pub folds: usize,
    pub class_weighting: ClassWeighting,
    pub ece_bins: usize,
    pub ccc_threshold: f64,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            grid: HyperGrid::default(),
            folds: 5,
            class_weighting: ClassWeighting::Balanced,
            ece_bins: ECE_BINS,
            ccc_threshold: robust::DEFAULT_CCC_THRESHOLD,
        }
    }
}

impl RunSettings {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::Config("folds must be at least 2".into()));
        }
        if self.ece_bins == 0 {
            return Err(Error::Config("ece_bins must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.ccc_threshold) {
            return Err(Error::Config("ccc_threshold must lie in [0, 1]".into()));
        }
        for c in self.grid.candidates() {
            c.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub sequence: Sequence,
    pub seg_type: SegType,
    pub role: Role,
    pub n_test: usize,
    pub f1_macro: f64,
    pub accuracy: f64,
    pub ece: f64,
    pub ece_uncalibrated: f64,
    pub degradation_ratio: Option<f64>,
    #[serde(skip)]
    pub predictions: Option<PredictionSet>,
}

/// One trained model and its scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub train_sequences: Vec<Sequence>,
    pub features: Vec<String>,
    pub n_train: usize,
    pub n_validation: usize,
    pub best_params: HyperParams,
    pub cv_f1: f64,
    pub calibration: CalibrationParams,
    pub calibration_note: Option<String>,
    /// Reference macro-F1: validation split for compound runs, in-domain
    /// test cells otherwise.
    pub in_domain_f1: Option<f64>,
    pub shifted_f1: Option<f64>,
    pub degradation_ratio: Option<f64>,
    pub cells: Vec<CellResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub robust_counts: BTreeMap<String, usize>,
    pub fits: Vec<FitResult>,
}

/// Seed-averaged scores of one cell label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub sequence: Sequence,
    pub seg_type: SegType,
    pub role: Role,
    pub n_test: usize,
    pub f1_macro: f64,
    pub accuracy: f64,
    pub ece: f64,
    pub ece_uncalibrated: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub in_domain_f1: Option<f64>,
    pub shifted_f1: Option<f64>,
    pub degradation_ratio: Option<f64>,
    /// Pooled ECE over cells of each role.
    pub ece_by_role: BTreeMap<Role, f64>,
    pub f1_by_role: BTreeMap<Role, f64>,
    pub cells: Vec<CellSummary>,
    /// All five sequences in training leave nothing held out.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub schema: u32,
    pub scenario: ScenarioSpec,
    pub settings: RunSettings,
    pub seeds: Vec<u64>,
    pub reference_robust_counts: BTreeMap<String, usize>,
    pub results: Vec<SeedResult>,
    pub summary: Summary,
    /// Full resolved run configuration, when run from one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

impl RobustnessReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&s)?)
    }

    /// Pooled predictions of every cell with `role`, across seeds and fits.
    pub fn pooled_predictions(&self, role: Role) -> Option<PredictionSet> {
        let sets: Vec<&PredictionSet> = self
            .results
            .iter()
            .flat_map(|r| &r.fits)
            .flat_map(|f| &f.cells)
            .filter(|c| c.role == role)
            .filter_map(|c| c.predictions.as_ref())
            .collect();
        if sets.is_empty() {
            None
        } else {
            PredictionSet::concat(&sets).ok()
        }
    }
}

pub fn reference_robust_counts() -> BTreeMap<String, usize> {
    let mut m: BTreeMap<String, usize> = robust::REFERENCE_COUNTS
        .iter()
        .map(|(s, n)| (s.to_string(), *n))
        .collect();
    m.insert("consistent".into(), robust::REFERENCE_CONSISTENT);
    m
}

fn matrix(data: &Dataset, rows: &[usize], cols: &[usize]) -> (Vec<Vec<f64>>, Vec<usize>) {
    rows.iter()
        .map(|&i| {
            let r: &FeatureVector = &data.rows[i];
            (
                cols.iter().map(|&c| r.values[c]).collect(),
                r.provenance.class.index(),
            )
        })
        .unzip()
}

/// Learner seed of a phantom seed; shared by every scenario so identical
/// splits give identical models.
pub fn learner_seed(seed: u64) -> u64 {
    rng::derive(seed, "learner")
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Fits and scores one assembled split.
pub fn run_split(
    data: &Dataset,
    split: &Split,
    features: &FeatureSetSpec,
    family: Family,
    calibration: CalibrationMethod,
    settings: &RunSettings,
    seed: u64,
) -> Result<FitResult> {
    check_leakage(split, data)?;
    if split.train.is_empty() || split.tests.iter().any(|c| c.rows.is_empty()) {
        return Err(Error::Assembly("empty train or test cell".into()));
    }
    let k = FruitClass::ALL.len();
    let cols = data.columns(&features.names)?;
    let (x, y) = matrix(data, &split.train, &cols);
    let set = TrainSet::new(&x, &y);
    let lseed = learner_seed(seed);
    let gs = grid_search_cv(
        &set,
        &features.names,
        k,
        &settings.grid,
        settings.folds,
        settings.class_weighting,
        lseed,
    )?;
    let cv_f1 = gs
        .cv_scores
        .iter()
        .find(|c| c.params == gs.best)
        .map_or(0.0, |c| c.mean_f1);
    let cw = match settings.class_weighting {
        ClassWeighting::None => None,
        ClassWeighting::Balanced => {
            let mut w = crate::learner::class_weights_balanced(&y);
            w.resize(k, 0.0);
            Some(w)
        }
    };
    let model = fit(&set, &features.names, k, &gs.best, cw.as_deref(), lseed)?;
    let predict = |rows: &[usize]| -> Result<PredictionSet> {
        let (x, y) = matrix(data, rows, &cols);
        PredictionSet::new(k, y, model.predict_proba_batch(&x)?)
    };

    let val = if split.validation.is_empty() {
        None
    } else {
        Some(predict(&split.validation)?)
    };
    let (cal, note) = match (&val, calibration) {
        (_, CalibrationMethod::None) => (CalibrationParams::None, None),
        (Some(v), m) => (fit_calibration(m, v), None),
        (None, m) => (
            CalibrationParams::None,
            Some(format!(
                "{m:?} calibration skipped: {} runs have no validation split",
                family.name()
            )),
        ),
    };

    let mut cells = Vec::new();
    for c in &split.tests {
        let raw = predict(&c.rows)?;
        let p = apply_calibration(&raw, &cal)?;
        cells.push(CellResult {
            sequence: c.label.sequence,
            seg_type: c.label.seg_type,
            role: c.label.role,
            n_test: p.len(),
            f1_macro: f1_macro(&p),
            accuracy: accuracy(&p),
            ece: ece(&p, settings.ece_bins),
            ece_uncalibrated: ece(&raw, settings.ece_bins),
            degradation_ratio: None,
            predictions: Some(p),
        });
    }

    let in_domain_f1 = match &val {
        Some(v) => Some(f1_macro(v)),
        None => mean(
            &cells
                .iter()
                .filter(|c| c.role == Role::InDomain)
                .map(|c| c.f1_macro)
                .collect::<Vec<_>>(),
        ),
    };
    let shifted: Vec<f64> = cells
        .iter()
        .filter(|c| c.role.is_shifted())
        .map(|c| c.f1_macro)
        .collect();
    let shifted_f1 = mean(&shifted);
    if let Some(r) = in_domain_f1 {
        for c in cells.iter_mut().filter(|c| c.role.is_shifted()) {
            c.degradation_ratio = degradation_ratio(r, c.f1_macro);
        }
    }
    let ratio = match (in_domain_f1, shifted_f1) {
        (Some(a), Some(b)) => degradation_ratio(a, b),
        _ => None,
    };
    Ok(FitResult {
        train_sequences: split.train_sequences.clone(),
        features: features.names.clone(),
        n_train: split.train.len(),
        n_validation: split.validation.len(),
        best_params: gs.best,
        cv_f1,
        calibration: cal,
        calibration_note: note,
        in_domain_f1,
        shifted_f1,
        degradation_ratio: ratio,
        cells,
    })
}

/// Assembles the splits a scenario trains on.
pub fn assemble(spec: &ScenarioSpec, data: &Dataset) -> Result<Vec<Split>> {
    let tests = spec.test_sequences();
    Ok(match spec.family {
        Family::InterObserver => spec
            .train_sequences
            .iter()
            .map(|&s| assemble_inter_observer(data, s))
            .collect::<Result<_>>()?,
        Family::CrossProtocol => {
            vec![assemble_cross_protocol(data, &spec.train_sequences, &tests)?]
        }
        Family::Compound => {
            let s = assemble_compound(data, &spec.train_sequences, &tests)?;
            vec![if spec.augmentation {
                augment_training(&s, data)?
            } else {
                s
            }]
        }
    })
}

/// Runs a scenario on one phantom seed's rows.
pub fn run_seed(spec: &ScenarioSpec, data: &Dataset, settings: &RunSettings, seed: u64) -> Result<SeedResult> {
    let robust = identify_robust_features(data, settings.ccc_threshold)?;
    run_seed_with(spec, data, &robust, settings, seed)
}

/// As [`run_seed`] with precomputed robust sets.
pub fn run_seed_with(
    spec: &ScenarioSpec,
    data: &Dataset,
    robust: &RobustFeatures,
    settings: &RunSettings,
    seed: u64,
) -> Result<SeedResult> {
    spec.validate()?;
    let mut fits = Vec::new();
    for split in assemble(spec, data)? {
        let features =
            FeatureSetSpec::resolve(spec.features, robust, &data.feature_names, &split.train_sequences)?;
        fits.push(run_split(
            data,
            &split,
            &features,
            spec.family,
            spec.calibration,
            settings,
            seed,
        )?);
    }
    Ok(SeedResult {
        seed,
        robust_counts: robust.counts(),
        fits,
    })
}

fn summarize(spec: &ScenarioSpec, results: &[SeedResult]) -> Summary {
    let fits: Vec<&FitResult> = results.iter().flat_map(|r| &r.fits).collect();
    let collect = |f: &dyn Fn(&FitResult) -> Option<f64>| -> Option<f64> {
        let v: Vec<f64> = fits.iter().filter_map(|x| f(x)).collect();
        mean(&v)
    };
    let mut by_label: BTreeMap<CellLabel, Vec<&CellResult>> = BTreeMap::new();
    let mut by_role: BTreeMap<Role, Vec<&CellResult>> = BTreeMap::new();
    for c in fits.iter().flat_map(|f| &f.cells) {
        let label = CellLabel {
            sequence: c.sequence,
            seg_type: c.seg_type,
            role: c.role,
        };
        by_label.entry(label).or_default().push(c);
        by_role.entry(c.role).or_default().push(c);
    }
    let avg = |cs: &[&CellResult], f: fn(&CellResult) -> f64| {
        cs.iter().map(|c| f(c)).sum::<f64>() / cs.len() as f64
    };
    let cells = by_label
        .iter()
        .map(|(l, cs)| CellSummary {
            sequence: l.sequence,
            seg_type: l.seg_type,
            role: l.role,
            n_test: cs.iter().map(|c| c.n_test).sum(),
            f1_macro: avg(cs, |c| c.f1_macro),
            accuracy: avg(cs, |c| c.accuracy),
            ece: avg(cs, |c| c.ece),
            ece_uncalibrated: avg(cs, |c| c.ece_uncalibrated),
        })
        .collect();
    Summary {
        in_domain_f1: collect(&|f| f.in_domain_f1),
        shifted_f1: collect(&|f| f.shifted_f1),
        degradation_ratio: collect(&|f| f.degradation_ratio),
        ece_by_role: by_role.iter().map(|(r, cs)| (*r, avg(cs, |c| c.ece))).collect(),
        f1_by_role: by_role.iter().map(|(r, cs)| (*r, avg(cs, |c| c.f1_macro))).collect(),
        cells,
        degenerate: spec.family == Family::CrossProtocol
            && Sequence::ALL.iter().all(|s| spec.train_sequences.contains(s)),
    }
}

/// Runs a scenario on every seed present in `data`.
pub fn run_scenario(spec: &ScenarioSpec, data: &Dataset, settings: &RunSettings) -> Result<RobustnessReport> {
    settings.validate()?;
    spec.validate()?;
    let seeds = data.seeds();
    if seeds.is_empty() {
        return Err(Error::Assembly("dataset is empty".into()));
    }
    let results = seeds
        .iter()
        .map(|&seed| run_seed(spec, &data.for_seed(seed), settings, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(report_from(spec, settings, results))
}

pub fn report_from(spec: &ScenarioSpec, settings: &RunSettings, results: Vec<SeedResult>) -> RobustnessReport {
    RobustnessReport {
        schema: REPORT_SCHEMA,
        scenario: spec.clone(),
        settings: settings.clone(),
        seeds: results.iter().map(|r| r.seed).collect(),
        reference_robust_counts: reference_robust_counts(),
        summary: summarize(spec, &results),
        results,
        config: None,
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

/// One CSV line per (scenario, seed, fit, cell), fixed six-decimal floats.
pub fn write_summary_csv(path: &Path, reports: &[RobustnessReport]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "scenario",
        "family",
        "seed",
        "train_sequences",
        "features",
        "n_features",
        "sequence",
        "seg_type",
        "role",
        "n_test",
        "f1_macro",
        "accuracy",
        "ece",
        "ece_uncalibrated",
        "degradation_ratio",
    ])?;
    for rep in reports {
        for sr in &rep.results {
            for f in &sr.fits {
                let train: Vec<&str> = f.train_sequences.iter().map(|s| s.name()).collect();
                let kind = match rep.scenario.features {
                    FeatureSetKind::Consistent => "consistent".to_string(),
                    FeatureSetKind::All => "all".to_string(),
                    FeatureSetKind::TrainCommon => "train_common".to_string(),
                    FeatureSetKind::SequenceSpecific { sequence } => format!("specific:{sequence}"),
                };
                for c in &f.cells {
                    w.write_record([
                        rep.scenario.name.clone(),
                        rep.scenario.family.name().to_string(),
                        sr.seed.to_string(),
                        train.join("+"),
                        kind.clone(),
                        f.features.len().to_string(),
                        c.sequence.to_string(),
                        c.seg_type.to_string(),
                        c.role.name().to_string(),
                        c.n_test.to_string(),
                        format!("{:.6}", c.f1_macro),
                        format!("{:.6}", c.accuracy),
                        format!("{:.6}", c.ece),
                        format!("{:.6}", c.ece_uncalibrated),
                        fmt_opt(c.degradation_ratio),
                    ])?;
                }
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}
