//! Batch stages behind the command line: `gen` writes acquisitions, `extract`
//! turns them into a feature table, `run` executes scenarios and `report`
//! tabulates saved reports.
//!
//! Output layout under `config.output`:
//!
//! ```text
//! volumes/seed<N>/<SEQ>_scan<ID>.vol.{json,raw}   sequence-weighted scans
//! volumes/seed<N>/mask_scan<ID>.vol.{json,raw}    ground-truth labels
//! features.csv
//! reports/<scenario>.json
//! reliability/<scenario>_<role>.csv
//! summary.csv
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::evalcal::{reliability, write_reliability_csv};
use crate::phantom::{FruitClass, ScanId, ScanInstance, ScanMeta, Sequence};
use crate::radiomics::{read_feature_table, write_feature_table, FeatureVector};
use crate::scenarios::dataset::{acquisitions, base_scans};
use crate::scenarios::{run_scenario, write_summary_csv, Dataset, Role, RobustnessReport};
use crate::volio;

pub fn volume_dir(out: &Path, seed: u64) -> PathBuf {
    out.join("volumes").join(format!("seed{seed}"))
}

pub fn volume_base(out: &Path, seed: u64, sequence: Sequence, scan: ScanId) -> PathBuf {
    volume_dir(out, seed).join(format!("{sequence}_scan{scan}"))
}

pub fn mask_base(out: &Path, seed: u64, scan: ScanId) -> PathBuf {
    volume_dir(out, seed).join(format!("mask_scan{scan}"))
}

pub fn features_path(out: &Path) -> PathBuf {
    out.join("features.csv")
}

pub fn report_path(out: &Path, scenario: &str) -> PathBuf {
    out.join("reports").join(format!("{scenario}.json"))
}

pub fn reliability_path(out: &Path, scenario: &str, role: Role) -> PathBuf {
    out.join("reliability").join(format!("{scenario}_{}.csv", role.name()))
}

pub fn summary_path(out: &Path) -> PathBuf {
    out.join("summary.csv")
}

/// Sidecar metadata of a written scan or mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ScanSidecar {
    scan: ScanMeta,
    classes: BTreeMap<u16, FruitClass>,
}

fn sidecar(inst: &ScanInstance) -> Value {
    json!(ScanSidecar {
        scan: inst.meta.clone(),
        classes: inst.classes.clone(),
    })
}

fn parse_sidecar(base: &Path, v: Value) -> Result<ScanSidecar> {
    serde_json::from_value(v).map_err(|e| Error::Format {
        path: volio::sidecar_path(base),
        reason: format!("scan metadata: {e}"),
    })
}

/// Writes every acquisition of every configured seed. Returns the volume
/// bases written, masks excluded.
pub fn cmd_gen(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let dataset = config.dataset();
    let out = &config.output;
    let mut written = Vec::new();
    for &seed in &config.phantom.seeds {
        info!("gen: seed {seed}");
        for base in base_scans(&dataset.layout, seed, &dataset.jitter)? {
            volio::write_mask(&mask_base(out, seed, base.meta.scan_id), &base.ground_truth_mask, sidecar(&base))?;
        }
        for scan in acquisitions(&dataset, seed)? {
            let seq = scan.meta.sequence.expect("acquisitions carry a sequence");
            let path = volume_base(out, seed, seq, scan.meta.scan_id);
            volio::write_volume(&path, &scan.volume, sidecar(&scan))?;
            written.push(path);
        }
    }
    Ok(written)
}

fn load_scan(out: &Path, seed: u64, sequence: Sequence, scan: ScanId) -> Result<ScanInstance> {
    let vbase = volume_base(out, seed, sequence, scan);
    let mbase = mask_base(out, seed, scan);
    let (volume, vmeta) = volio::read_volume(&vbase)?;
    let (mask, mmeta) = volio::read_mask(&mbase)?;
    let v = parse_sidecar(&vbase, vmeta)?;
    let m = parse_sidecar(&mbase, mmeta)?;
    let expected = (Some(sequence), scan, seed);
    if (v.scan.sequence, v.scan.scan_id, v.scan.seed) != expected || m.scan.seed != seed {
        return Err(Error::Format {
            path: volio::sidecar_path(&vbase),
            reason: format!("metadata does not describe seed {seed} {sequence} scan {scan}"),
        });
    }
    if volume.grid != mask.grid {
        return Err(Error::Format {
            path: volio::sidecar_path(&mbase),
            reason: "mask grid differs from its volume".into(),
        });
    }
    Ok(ScanInstance {
        volume,
        ground_truth_mask: mask,
        meta: v.scan,
        classes: m.classes,
    })
}

/// Reads the generated volumes, segments them and writes the feature table.
/// Returns the number of rows.
pub fn cmd_extract(config: &RunConfig) -> Result<usize> {
    let dataset = config.dataset();
    let out = &config.output;
    let mut missing = Vec::new();
    for &seed in &config.phantom.seeds {
        for &scan in &ScanId::ALL {
            let mut bases = vec![mask_base(out, seed, scan)];
            bases.extend(dataset.profiles.iter().map(|p| volume_base(out, seed, p.name, scan)));
            for b in bases {
                for f in [volio::sidecar_path(&b), volio::raw_path(&b)] {
                    if !f.is_file() {
                        missing.push(f.display().to_string());
                    }
                }
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingInputs(missing.join(", ")));
    }
    let mut rows: Vec<FeatureVector> = Vec::new();
    for &seed in &config.phantom.seeds {
        info!("extract: seed {seed}");
        let scans = dataset
            .profiles
            .iter()
            .flat_map(|p| ScanId::ALL.iter().map(move |&s| (p.name, s)))
            .map(|(seq, scan)| load_scan(out, seed, seq, scan))
            .collect::<Result<Vec<_>>>()?;
        rows.extend(Dataset::from_scans(&scans, seed, &dataset)?.rows);
    }
    write_feature_table(&features_path(out), &rows)?;
    Ok(rows.len())
}

/// Loads the feature table restricted to the configured seeds.
pub fn load_dataset(config: &RunConfig) -> Result<Dataset> {
    let path = features_path(&config.output);
    if !path.is_file() {
        return Err(Error::MissingInputs(path.display().to_string()));
    }
    let rows: Vec<FeatureVector> = read_feature_table(&path)?
        .into_iter()
        .filter(|r| config.phantom.seeds.contains(&r.provenance.seed))
        .collect();
    let data = Dataset::from_rows(rows)?;
    let absent: Vec<String> = config
        .phantom
        .seeds
        .iter()
        .filter(|s| !data.seeds().contains(s))
        .map(u64::to_string)
        .collect();
    if !absent.is_empty() {
        return Err(Error::MissingInputs(format!(
            "seeds {} in {}",
            absent.join(", "),
            path.display()
        )));
    }
    Ok(data)
}

/// Runs one scenario on loaded data and writes its report and reliability
/// tables.
pub fn run_one(config: &RunConfig, data: &Dataset, index: usize) -> Result<RobustnessReport> {
    let spec = &config.scenarios[index];
    info!("run: {}", spec.name);
    let mut report = run_scenario(spec, data, &config.settings())?;
    report.config = Some(config.to_value());
    let out = &config.output;
    let path = report_path(out, &spec.name);
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    report.save(&path)?;
    for role in [Role::InDomain, Role::HeldOut, Role::SegmentationShift, Role::Compound] {
        if let Some(p) = report.pooled_predictions(role) {
            let bins = reliability(&p, config.evaluation.ece_bins);
            write_reliability_csv(&reliability_path(out, &spec.name, role), &bins)?;
        }
    }
    Ok(report)
}

/// Runs every configured scenario. Failing scenarios do not stop the others;
/// they are listed together in the returned error.
pub fn cmd_run(config: &RunConfig) -> Result<Vec<RobustnessReport>> {
    let data = load_dataset(config)?;
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for i in 0..config.scenarios.len() {
        match run_one(config, &data, i) {
            Ok(r) => reports.push(r),
            Err(e) => failures.push(format!("{}: {e}", config.scenarios[i].name)),
        }
    }
    write_summary_csv(&summary_path(&config.output), &reports)?;
    if failures.is_empty() {
        Ok(reports)
    } else {
        Err(Error::ScenarioFailures(format!(
            "{} scenario(s) failed: {}",
            failures.len(),
            failures.join("; ")
        )))
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into())
}

/// Reloads the saved reports of the configured scenarios, rewrites the
/// summary CSV and returns a plain-text table.
pub fn cmd_report(config: &RunConfig) -> Result<String> {
    let out = &config.output;
    let mut missing = Vec::new();
    let mut reports = Vec::new();
    for s in &config.scenarios {
        let p = report_path(out, &s.name);
        if p.is_file() {
            reports.push(RobustnessReport::load(&p)?);
        } else {
            missing.push(p.display().to_string());
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingInputs(missing.join(", ")));
    }
    write_summary_csv(&summary_path(out), &reports)?;
    let mut t = String::new();
    writeln!(
        t,
        "{:<34} {:>6} {:>8} {:>8} {:>6}  ECE by role",
        "scenario", "seeds", "in-dom", "shifted", "ratio"
    )
    .unwrap();
    for r in &reports {
        let s = &r.summary;
        let ece: Vec<String> = s
            .ece_by_role
            .iter()
            .map(|(role, e)| format!("{}={e:.3}", role.name()))
            .collect();
        writeln!(
            t,
            "{:<34} {:>6} {:>8} {:>8} {:>6}  {}",
            r.scenario.name,
            r.seeds.len(),
            cell(s.in_domain_f1),
            cell(s.shifted_f1),
            cell(s.degradation_ratio),
            ece.join(" ")
        )
        .unwrap();
    }
    Ok(t)
}

/// Process exit code of a failed stage.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => 1,
        Error::ScenarioFailures(_) => 3,
        _ => 2,
    }
}
