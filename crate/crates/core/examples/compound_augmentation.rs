//! Compound shift (segmentation protocol and sequence) with and without
//! augmenting the training set by alternate and rotated segmentations.

use radshift::config::default_scenarios;
use radshift::evalcal::CalibrationMethod;
use radshift::scenarios::{run_scenario, Dataset, DatasetConfig, RunSettings};
use radshift::segmentation::SegType;

fn main() -> radshift::Result<()> {
    let data = Dataset::build(&DatasetConfig::default(), 1)?;
    for spec in default_scenarios(CalibrationMethod::Ts)
        .into_iter()
        .filter(|s| s.name.starts_with("compound"))
    {
        let r = run_scenario(&spec, &data, &RunSettings::default())?;
        let fit = &r.results[0].fits[0];
        println!("{} ({} training rows, {:?})", spec.name, fit.n_train, fit.calibration);
        for seg in [SegType::Partial, SegType::RotatedFull] {
            let cells: Vec<_> = fit.cells.iter().filter(|c| c.seg_type == seg).collect();
            let n = cells.len() as f64;
            println!(
                "  {seg}: F1 {:.3}, ECE {:.3} (uncalibrated {:.3})",
                cells.iter().map(|c| c.f1_macro).sum::<f64>() / n,
                cells.iter().map(|c| c.ece).sum::<f64>() / n,
                cells.iter().map(|c| c.ece_uncalibrated).sum::<f64>() / n
            );
        }
    }
    Ok(())
}
