//! Train on one sequence, test on all five: concordant features against the
//! full manifest.

use radshift::evalcal::CalibrationMethod;
use radshift::phantom::Sequence;
use radshift::scenarios::{run_scenario, Dataset, DatasetConfig, Family, FeatureSetKind, RunSettings, ScenarioSpec};

fn main() -> radshift::Result<()> {
    let data = Dataset::build(&DatasetConfig::default(), 2)?;
    let train = std::env::args()
        .nth(1)
        .map(|s| serde_json::from_value(serde_json::Value::String(s)).expect("sequence name such as T2-MAP"))
        .unwrap_or(Sequence::T2Map);
    for features in [FeatureSetKind::Consistent, FeatureSetKind::All] {
        let spec = ScenarioSpec {
            name: "cross_protocol".into(),
            family: Family::CrossProtocol,
            train_sequences: vec![train],
            test_sequences: vec![],
            features,
            augmentation: false,
            calibration: CalibrationMethod::None,
        };
        let r = run_scenario(&spec, &data, &RunSettings::default())?;
        let fit = &r.results[0].fits[0];
        let cells: Vec<String> = fit.cells.iter().map(|c| format!("{} {:.2}", c.sequence, c.f1_macro)).collect();
        println!(
            "{features:?}: in-domain {:.3}, held-out {:.3}, ratio {:.3} [{}]",
            fit.in_domain_f1.unwrap_or(f64::NAN),
            fit.shifted_f1.unwrap_or(f64::NAN),
            fit.degradation_ratio.unwrap_or(f64::NAN),
            cells.join(", ")
        );
    }
    Ok(())
}
