//! The segmentation variants of one acquisition and their overlap with the
//! ground truth.

use radshift::phantom::{apply_sequence, generate_phantom, rotate90, Axis, PhantomLayout, ScanId, Sequence, SequenceProfile};
use radshift::segmentation::{full_segmentation, partial_segmentation, rotated_segmentation, Observer, SegParams, Variant};
use radshift::volume::{dice, LabelMask};

fn mean_dice(a: &LabelMask, b: &LabelMask) -> f64 {
    let labels = b.present_labels();
    labels.iter().map(|&l| dice(a, b, l)).sum::<f64>() / labels.len() as f64
}

fn main() -> radshift::Result<()> {
    let base = generate_phantom(&PhantomLayout::default_layout(), 3)?;
    let scan = apply_sequence(&base, &SequenceProfile::builtin(Sequence::T2Tse), 11)?;
    let gt = &scan.ground_truth_mask;
    let params = SegParams::default();
    for obs in Observer::ALL {
        let a = full_segmentation(&scan, Variant::A, obs, &params)?;
        let b = full_segmentation(&scan, Variant::B, obs, &params)?;
        let p = partial_segmentation(&a, params.fraction)?;
        println!(
            "{obs:?}: dice(gt, full_A) {:.3}, dice(gt, full_B) {:.3}, partial keeps {:.0}% of full_A",
            mean_dice(gt, &a.mask),
            mean_dice(gt, &b.mask),
            100.0 * p.mask.labels.iter().filter(|&&l| l != 0).count() as f64
                / a.mask.labels.iter().filter(|&&l| l != 0).count() as f64
        );
    }
    let rotated = rotate90(&scan, Axis::X).with_scan_id(ScanId::R1);
    let r = rotated_segmentation(&rotated, Variant::A, Observer::Obs1, &params)?;
    println!("rotated scan: dice vs its ground truth {:.3}", mean_dice(&rotated.ground_truth_mask, &r.mask));
    Ok(())
}
