//! Extracts the 107-feature vector of every fruit in one acquisition and
//! prints a few of them per class.

use radshift::phantom::{apply_sequence, generate_phantom, PhantomLayout, ScanId, Sequence, SequenceProfile};
use radshift::radiomics::{extract_mask, feature_names, ExtractionConfig, Provenance};
use radshift::segmentation::{Observer, SegType};

fn main() -> radshift::Result<()> {
    let base = generate_phantom(&PhantomLayout::default_layout(), 1)?;
    let scan = apply_sequence(&base, &SequenceProfile::builtin(Sequence::T1Tse), 5)?;
    let prov = |label: u16| Provenance {
        seed: 1,
        instance_id: label,
        class: scan.classes[&label],
        sequence: Sequence::T1Tse,
        scan_id: ScanId::S1,
        observer: Observer::Obs1,
        seg_type: SegType::FullA,
    };
    let rows = extract_mask(&scan.volume, &scan.ground_truth_mask, &ExtractionConfig::default(), prov)?;
    let names = feature_names();
    let show = ["shape_VoxelVolume", "shape_Sphericity", "firstorder_Mean", "glcm_Contrast", "ngtdm_Coarseness"];
    let cols: Vec<usize> = show.iter().map(|s| names.iter().position(|n| n == s).unwrap()).collect();
    println!("{} features per row", names.len());
    println!("{:<8} {}", "fruit", show.join("  "));
    for r in &rows {
        let vals: Vec<String> = cols.iter().map(|&c| format!("{:.4}", r.values[c])).collect();
        println!("{:<8} {}", format!("{:?}", r.provenance.class), vals.join("  "));
    }
    Ok(())
}
