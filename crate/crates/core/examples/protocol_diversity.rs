//! Held-out degradation as the number of training sequences grows, averaged
//! over every subset of each size.

use radshift::evalcal::CalibrationMethod;
use radshift::phantom::Sequence;
use radshift::scenarios::{
    identify_robust_features, run_seed_with, Dataset, DatasetConfig, Family, FeatureSetKind, RunSettings, ScenarioSpec,
};

fn main() -> radshift::Result<()> {
    let seed = 1;
    let data = Dataset::build(&DatasetConfig::default(), seed)?;
    let robust = identify_robust_features(&data, 0.9)?;
    let settings = RunSettings::default();
    for k in 1..=4 {
        let mut degradation = Vec::new();
        for mask in (0u32..32).filter(|m| m.count_ones() == k) {
            let train: Vec<Sequence> = (0..5).filter(|i| mask >> i & 1 == 1).map(|i| Sequence::ALL[i]).collect();
            let spec = ScenarioSpec {
                name: "diversity".into(),
                family: Family::CrossProtocol,
                train_sequences: train,
                test_sequences: vec![],
                features: FeatureSetKind::All,
                augmentation: false,
                calibration: CalibrationMethod::None,
            };
            let r = run_seed_with(&spec, &data, &robust, &settings, seed)?;
            degradation.push(1.0 - r.fits[0].degradation_ratio.unwrap_or(1.0));
        }
        let mean = degradation.iter().sum::<f64>() / degradation.len() as f64;
        println!("{k} training sequence(s): mean held-out degradation {mean:.3} over {} subsets", degradation.len());
    }
    Ok(())
}
