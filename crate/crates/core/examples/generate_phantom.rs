//! Synthesizes the default phantom, applies every sequence profile and writes
//! one acquisition plus its ground truth to `phantom-example/`.

use radshift::phantom::{apply_sequence, generate_phantom, PhantomLayout, Sequence, SequenceProfile};
use radshift::volio;

fn main() -> radshift::Result<()> {
    let layout = PhantomLayout::default_layout();
    let base = generate_phantom(&layout, 1)?;
    println!("grid {:?}, {} fruits", base.volume.grid.dims, base.classes.len());
    for (label, class) in &base.classes {
        println!("  label {label:>2}: {class:?}, {} voxels", base.ground_truth_mask.count(*label));
    }
    for seq in Sequence::ALL {
        let scan = apply_sequence(&base, &SequenceProfile::builtin(seq), 7)?;
        let (lo, hi) = scan
            .volume
            .data
            .iter()
            .fold((f32::MAX, f32::MIN), |(a, b), &v| (a.min(v), b.max(v)));
        println!("{seq:>9}: intensity range [{lo:.1}, {hi:.1}]");
        if seq == Sequence::T2Map {
            let dir = std::path::Path::new("phantom-example");
            volio::write_volume(&dir.join("t2map"), &scan.volume, serde_json::json!({"sequence": "T2-MAP"}))?;
            volio::write_mask(&dir.join("mask"), &scan.ground_truth_mask, serde_json::Value::Null)?;
        }
    }
    Ok(())
}
