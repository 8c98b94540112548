//! Declarative run configuration.
//!
//! A config is one JSON document. Every section is optional and falls back to
//! the built-in defaults; unknown keys anywhere are rejected. The resolved
//! config (all defaults filled in) is what reports echo.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::evalcal::{CalibrationMethod, ECE_BINS};
use crate::learner::{ClassWeighting, HyperGrid};
use crate::phantom::{ClassContrast, Jitter, PhantomLayout, Sequence, SequenceProfile};
use crate::radiomics::ExtractionConfig;
use crate::scenarios::robust::DEFAULT_CCC_THRESHOLD;
use crate::scenarios::{DatasetConfig, Family, FeatureSetKind, RunSettings, ScenarioSpec};
use crate::segmentation::SegParams;

pub const DEFAULT_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhantomConfig {
    /// Replaces the built-in sixteen-fruit layout when present.
    pub layout: Option<PhantomLayout>,
    pub seeds: Vec<u64>,
    pub jitter: Jitter,
}

impl Default for PhantomConfig {
    fn default() -> Self {
        Self {
            layout: None,
            seeds: DEFAULT_SEEDS.to_vec(),
            jitter: Jitter::default(),
        }
    }
}

/// Per-field override of a built-in sequence profile.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileOverride {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contrast_map: Option<[ClassContrast; 4]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blur_fwhm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bias_field: Option<f64>,
}

impl ProfileOverride {
    pub fn apply(&self, mut p: SequenceProfile) -> SequenceProfile {
        if let Some(c) = self.contrast_map {
            p.contrast_map = c;
        }
        if let Some(v) = self.noise_sigma {
            p.noise_sigma = v;
        }
        if let Some(v) = self.blur_fwhm {
            p.blur_fwhm = v;
        }
        if let Some(v) = self.bias_field {
            p.bias_field = v;
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearnerConfig {
    pub grid: HyperGrid,
    pub folds: usize,
    pub class_weighting: ClassWeighting,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            grid: HyperGrid::default(),
            folds: 5,
            class_weighting: ClassWeighting::Balanced,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluationConfig {
    pub ece_bins: usize,
    /// Method for scenarios that do not name one.
    pub calibration: CalibrationMethod,
    pub ccc_threshold: f64,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            ece_bins: ECE_BINS,
            calibration: CalibrationMethod::Ts,
            ccc_threshold: DEFAULT_CCC_THRESHOLD,
        }
    }
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub phantom: PhantomConfig,
    pub sequences: BTreeMap<Sequence, ProfileOverride>,
    pub segmentation: SegParams,
    pub extraction: ExtractionConfig,
    pub learner: LearnerConfig,
    pub evaluation: EvaluationConfig,
    pub scenarios: Vec<ScenarioSpec>,
    pub output: PathBuf,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    phantom: PhantomConfig,
    #[serde(default)]
    sequences: BTreeMap<Sequence, ProfileOverride>,
    #[serde(default)]
    segmentation: SegParams,
    #[serde(default)]
    extraction: ExtractionConfig,
    #[serde(default)]
    learner: LearnerConfig,
    #[serde(default)]
    evaluation: EvaluationConfig,
    /// Kept raw so a missing `calibration` can fall back to the evaluation
    /// default before the spec is typed.
    scenarios: Option<Vec<Value>>,
    output: Option<PathBuf>,
}

fn scenario(
    name: &str,
    family: Family,
    train: &[Sequence],
    features: FeatureSetKind,
    augmentation: bool,
    calibration: CalibrationMethod,
) -> ScenarioSpec {
    ScenarioSpec {
        name: name.into(),
        family,
        train_sequences: train.to_vec(),
        test_sequences: Vec::new(),
        features,
        augmentation,
        calibration,
    }
}

/// The built-in experiment list: within-protocol inter-observer, the
/// largest cross-protocol shift with both feature sets, and the compound
/// shift with and without augmentation.
pub fn default_scenarios(calibration: CalibrationMethod) -> Vec<ScenarioSpec> {
    use FeatureSetKind::*;
    let all = &Sequence::ALL;
    let map = &[Sequence::T2Map];
    vec![
        scenario("inter_observer_consistent", Family::InterObserver, all, Consistent, false, CalibrationMethod::None),
        scenario("cross_protocol_map_consistent", Family::CrossProtocol, map, Consistent, false, calibration),
        scenario("cross_protocol_map_all", Family::CrossProtocol, map, All, false, calibration),
        scenario("compound_consistent", Family::Compound, all, Consistent, false, calibration),
        scenario("compound_consistent_augmented", Family::Compound, all, Consistent, true, calibration),
    ]
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::from_raw(serde_json::from_str("{}").expect("empty config parses"))
            .expect("defaults are valid")
    }
}

impl RunConfig {
    fn from_raw(raw: RawConfig) -> Result<Self> {
        let scenarios = match raw.scenarios {
            None => default_scenarios(raw.evaluation.calibration),
            Some(list) => list
                .into_iter()
                .map(|mut v| {
                    if let Value::Object(m) = &mut v {
                        m.entry("calibration")
                            .or_insert(serde_json::to_value(raw.evaluation.calibration)?);
                    }
                    serde_json::from_value(v).map_err(|e| Error::Config(format!("scenario: {e}")))
                })
                .collect::<Result<_>>()?,
        };
        let cfg = Self {
            phantom: raw.phantom,
            sequences: raw.sequences,
            segmentation: raw.segmentation,
            extraction: raw.extraction,
            learner: raw.learner,
            evaluation: raw.evaluation,
            scenarios,
            output: raw.output.unwrap_or_else(|| PathBuf::from("radshift-out")),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_raw(raw)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |e: Error| match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        };
        if self.phantom.seeds.is_empty() {
            return Err(Error::Config("phantom.seeds is empty".into()));
        }
        let mut seeds = self.phantom.seeds.clone();
        seeds.sort_unstable();
        seeds.dedup();
        if seeds.len() != self.phantom.seeds.len() {
            return Err(Error::Config("phantom.seeds repeats a seed".into()));
        }
        self.dataset().validate().map_err(cfg)?;
        self.settings().validate().map_err(cfg)?;
        self.extraction.binning.validate().map_err(cfg)?;
        let mut names: Vec<&str> = Vec::new();
        for s in &self.scenarios {
            s.validate().map_err(cfg)?;
            if names.contains(&s.name.as_str()) {
                return Err(Error::Config(format!("scenario name `{}` repeats", s.name)));
            }
            names.push(&s.name);
        }
        Ok(())
    }

    /// Replaces the phantom seeds; nothing else changes.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.phantom.seeds = vec![seed];
        self
    }

    pub fn with_output(mut self, out: PathBuf) -> Self {
        self.output = out;
        self
    }

    pub fn dataset(&self) -> DatasetConfig {
        DatasetConfig {
            layout: self
                .phantom
                .layout
                .clone()
                .unwrap_or_else(PhantomLayout::default_layout),
            profiles: Sequence::ALL
                .iter()
                .map(|&s| {
                    let base = SequenceProfile::builtin(s);
                    match self.sequences.get(&s) {
                        Some(o) => o.apply(base),
                        None => base,
                    }
                })
                .collect(),
            jitter: self.phantom.jitter,
            segmentation: self.segmentation,
            extraction: self.extraction,
        }
    }

    pub fn settings(&self) -> RunSettings {
        RunSettings {
            grid: self.learner.grid.clone(),
            folds: self.learner.folds,
            class_weighting: self.learner.class_weighting,
            ece_bins: self.evaluation.ece_bins,
            ccc_threshold: self.evaluation.ccc_threshold,
        }
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }
}
