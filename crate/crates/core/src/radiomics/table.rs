use std::path::Path;

use super::{feature_names, FeatureVector, Provenance, FEATURE_COUNT};
use crate::error::{Error, Result};
use crate::phantom::FruitClass;

const META_COLUMNS: [&str; 6] = ["sample_id", "class", "sequence", "scan_id", "observer", "seg_type"];

/// Writes a feature table. Floats use the shortest round-trip representation.
pub fn write_feature_table(path: &Path, rows: &[FeatureVector]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut w = csv::Writer::from_path(path)?;
    let header: Vec<String> = META_COLUMNS
        .iter()
        .map(|s| s.to_string())
        .chain(feature_names())
        .collect();
    w.write_record(&header)?;
    for r in rows {
        let p = &r.provenance;
        let mut rec = vec![
            p.sample_id(),
            p.class.name().to_string(),
            p.sequence.name().to_string(),
            p.scan_id.name().to_string(),
            p.observer.name().to_string(),
            p.seg_type.name().to_string(),
        ];
        rec.extend(r.values.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_feature_table(path: &Path) -> Result<Vec<FeatureVector>> {
    let bad = |reason: String| Error::Format {
        path: path.to_path_buf(),
        reason,
    };
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let expected: Vec<String> = META_COLUMNS
        .iter()
        .map(|s| s.to_string())
        .chain(feature_names())
        .collect();
    if header != expected {
        return Err(bad("header does not match the canonical feature manifest".into()));
    }
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let class = FruitClass::parse(&rec[1]).ok_or_else(|| bad(format!("row {line}: bad class")))?;
        let provenance = Provenance::parse(&rec[0], class)
            .ok_or_else(|| bad(format!("row {line}: bad sample_id {}", &rec[0])))?;
        let consistent = provenance.sequence.name() == &rec[2]
            && provenance.scan_id.name() == &rec[3]
            && provenance.observer.name() == &rec[4]
            && provenance.seg_type.name() == &rec[5];
        if !consistent {
            return Err(bad(format!("row {line}: metadata disagrees with sample_id")));
        }
        let values = rec
            .iter()
            .skip(META_COLUMNS.len())
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| bad(format!("row {line}: {e}")))?;
        if values.len() != FEATURE_COUNT {
            return Err(bad(format!("row {line}: expected {FEATURE_COUNT} values")));
        }
        out.push(FeatureVector { values, provenance });
    }
    Ok(out)
}
