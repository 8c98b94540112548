//! Which features survive repeated measurement: concordance across scans,
//! observers and segmentation variants, per sequence.

use radshift::phantom::Sequence;
use radshift::scenarios::{identify_robust_features, Dataset, DatasetConfig};

fn main() -> radshift::Result<()> {
    let data = Dataset::build(&DatasetConfig::default(), 1)?;
    let robust = identify_robust_features(&data, 0.9)?;
    for s in Sequence::ALL {
        println!("{s:>9}: {} robust features", robust.for_sequence(s)?.len());
    }
    println!("robust in every sequence ({}):", robust.consistent.len());
    for n in &robust.consistent {
        println!("  {n}");
    }
    Ok(())
}
