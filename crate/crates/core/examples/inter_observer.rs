//! Within-protocol robustness: train on one observer's partial segmentation,
//! test on the other measurements of the same sequence.

use radshift::evalcal::CalibrationMethod;
use radshift::phantom::Sequence;
use radshift::scenarios::{run_scenario, Dataset, DatasetConfig, Family, FeatureSetKind, RunSettings, ScenarioSpec};

fn main() -> radshift::Result<()> {
    let data = Dataset::build(&DatasetConfig::default(), 1)?;
    for features in [FeatureSetKind::Consistent, FeatureSetKind::All] {
        let spec = ScenarioSpec {
            name: "inter_observer".into(),
            family: Family::InterObserver,
            train_sequences: Sequence::ALL.to_vec(),
            test_sequences: vec![],
            features,
            augmentation: false,
            calibration: CalibrationMethod::None,
        };
        let report = run_scenario(&spec, &data, &RunSettings::default())?;
        println!("{features:?}");
        for fit in &report.results[0].fits {
            println!(
                "  {:>9}: {} features, macro-F1 {:.3}",
                fit.train_sequences[0],
                fit.features.len(),
                fit.cells[0].f1_macro
            );
        }
    }
    Ok(())
}
