//! Phantom acquisition and segmentation contracts on the default layout.

use std::collections::BTreeMap;

use radshift::phantom::{
    apply_sequence, generate_phantom, rescan, rotate90, rotate_mask, Axis, ClassContrast,
    FruitClass, Jitter, PhantomLayout, ScanId, ScanInstance, Sequence, SequenceProfile,
};
use radshift::radiomics::{discretize, features_of, roi_values, Binning};
use radshift::segmentation::{
    full_segmentation, partial_segmentation, perturb_mask, rotated_segmentation, Observer,
    SegParams, Variant,
};
use radshift::volume::{dice, LabelMask};

const SEED: u64 = 42;

fn base() -> ScanInstance {
    generate_phantom(&PhantomLayout::default_layout(), SEED).unwrap()
}

fn counts(m: &LabelMask) -> BTreeMap<u16, usize> {
    m.present_labels().into_iter().map(|l| (l, m.count(l))).collect()
}

/// Distance-to-boundary layers by repeated inner-shell peeling: layer 1 is
/// the 6-connected inner shell, layer 2 the shell of what remains, ...
fn depth(gt: &LabelMask, label: u16) -> Vec<u8> {
    let mut d = vec![0u8; gt.labels.len()];
    let mut rest = gt.clone();
    for layer in 1..=3u8 {
        for i in rest.inner_shell(label) {
            d[i] = layer;
            rest.labels[i] = 0;
        }
    }
    for (i, &l) in rest.labels.iter().enumerate() {
        if l == label {
            d[i] = 4;
        }
    }
    d
}

#[test]
fn base_phantom_has_four_of_each_class() {
    let b = base();
    assert_eq!(b.ground_truth_mask.present_labels(), (1..=16).collect::<Vec<u16>>());
    for class in FruitClass::ALL {
        assert_eq!(b.classes.values().filter(|&&c| c == class).count(), 4);
    }
    for l in 1..=16 {
        assert_eq!(b.ground_truth_mask.component_count(l), 1, "label {l}");
    }
    assert_eq!(base(), b, "generation is deterministic");
}

#[test]
fn contrast_reorders_class_means() {
    let b = base();
    let mean_of = |profile: Sequence| -> Vec<f64> {
        let s = apply_sequence(&b, &SequenceProfile::builtin(profile), 7).unwrap();
        let mut sum = [0.0; 4];
        let mut n = [0usize; 4];
        for (&l, &v) in s.ground_truth_mask.labels.iter().zip(&s.volume.data) {
            if l != 0 {
                let c = s.classes[&l].index();
                sum[c] += v as f64;
                n[c] += 1;
            }
        }
        (0..4).map(|c| sum[c] / n[c] as f64).collect()
    };
    let map = mean_of(Sequence::T2Map);
    let t1 = mean_of(Sequence::T1Tse);
    assert!(map.iter().zip(&t1).any(|(a, b)| (a - b).abs() > 10.0), "{map:?} {t1:?}");
}

#[test]
fn noiseless_untextured_roi_is_the_transformed_base_level() {
    let mut layout = PhantomLayout::default_layout();
    for f in &mut layout.fruits {
        f.texture.texture_amplitude = 0.0;
    }
    let b = generate_phantom(&layout, SEED).unwrap();
    let mut p = SequenceProfile::identity(Sequence::T2Tse);
    p.contrast_map = [ClassContrast { gain: 2.0, offset: 3.0, gamma: 1.0 }; 4];
    let s = apply_sequence(&b, &p, 1).unwrap();
    for f in &layout.fruits {
        let want = (2.0 * f.texture.base_intensity + 3.0) as f32;
        let vals = roi_values(&s.volume, &s.ground_truth_mask, f.instance_id).unwrap();
        assert!(vals.iter().all(|&v| v as f32 == want));
        let roi = discretize(&s.volume, &s.ground_truth_mask, f.instance_id, Binning::default()).unwrap();
        let feats = features_of(&roi, &vals).unwrap();
        let names = radshift::radiomics::feature_names();
        let var = names.iter().position(|n| n == "firstorder_Variance").unwrap();
        assert_eq!(feats[var], 0.0);
    }
}

#[test]
fn rescans_move_fruits_but_keep_their_size() {
    let layout = PhantomLayout::default_layout();
    let b = base();
    let a = rescan(&layout, SEED, 1, &Jitter::default()).unwrap();
    let c = rescan(&layout, SEED, 2, &Jitter::default()).unwrap();
    assert_ne!(a.ground_truth_mask, c.ground_truth_mask);
    let (n0, n1) = (counts(&b.ground_truth_mask), counts(&a.ground_truth_mask));
    assert_eq!(n0.keys().collect::<Vec<_>>(), n1.keys().collect::<Vec<_>>());
    for (l, &n) in &n0 {
        let r = n1[l] as f64 / n as f64;
        assert!((0.9..=1.1).contains(&r), "label {l}: {r}");
    }
    let still = rescan(&layout, SEED, 9, &Jitter::NONE).unwrap();
    assert_eq!(still.ground_truth_mask, b.ground_truth_mask);
    assert_eq!(still.volume, b.volume);
}

#[test]
fn rotation_is_a_voxel_permutation() {
    let b = base();
    let r = rotate90(&b, Axis::Z);
    assert_eq!(counts(&r.ground_truth_mask), counts(&b.ground_truth_mask));
    let mut hist_a: Vec<u32> = b.volume.data.iter().map(|v| v.to_bits()).collect();
    let mut hist_b: Vec<u32> = r.volume.data.iter().map(|v| v.to_bits()).collect();
    hist_a.sort_unstable();
    hist_b.sort_unstable();
    assert_eq!(hist_a, hist_b);
    let mut again = r.clone();
    for _ in 0..3 {
        again = rotate90(&again, Axis::Z);
    }
    assert_eq!(again.volume, b.volume);
    assert_eq!(again.ground_truth_mask, b.ground_truth_mask);
}

#[test]
fn segmentations_stay_within_the_boundary_band() {
    let s = apply_sequence(&base(), &SequenceProfile::builtin(Sequence::T2Tse), 3).unwrap();
    let gt = &s.ground_truth_mask;
    let params = SegParams::default();
    let a = full_segmentation(&s, Variant::A, Observer::Obs1, &params).unwrap();
    let b = full_segmentation(&s, Variant::B, Observer::Obs1, &params).unwrap();
    for l in 1..=16u16 {
        let d = depth(gt, l);
        for m in [&a.mask, &b.mask] {
            for (i, &x) in m.labels.iter().enumerate() {
                if d[i] >= 3 {
                    assert_eq!(x, l, "deep voxel dropped");
                }
                if x == l {
                    assert!(d[i] > 0, "voxel outside ground truth");
                }
            }
        }
        for (i, (&x, &y)) in a.mask.labels.iter().zip(&b.mask.labels).enumerate() {
            if (x == l) != (y == l) {
                assert!(d[i] == 1 || d[i] == 2, "A/B differ off the 2-voxel shell");
            }
        }
    }
}

#[test]
fn accept_all_threshold_reproduces_ground_truth() {
    let s = apply_sequence(&base(), &SequenceProfile::builtin(Sequence::T2Map), 3).unwrap();
    let exact = SegParams {
        p_obs: 0.0,
        threshold_a: 0.0,
        threshold_b: 0.0,
        fraction: 0.5,
    };
    let a = full_segmentation(&s, Variant::A, Observer::Obs2, &exact).unwrap();
    assert_eq!(a.mask, s.ground_truth_mask);
    // Rotate then segment equals segment then rotate.
    let rs = rotate90(&s, Axis::X).with_scan_id(ScanId::R1);
    let r = rotated_segmentation(&rs, Variant::A, Observer::Obs1, &exact).unwrap();
    assert_eq!(r.mask, rotate_mask(&a.mask, Axis::X));
}

#[test]
fn observers_agree_closely() {
    let gt = base().ground_truth_mask;
    let p = SegParams::default().p_obs;
    for seed in 1..=20u64 {
        let m = perturb_mask(&gt, p, seed).unwrap();
        for l in 1..=16 {
            assert!(dice(&gt, &m, l) >= 0.93, "seed {seed} label {l}");
        }
    }
    let s = apply_sequence(&base(), &SequenceProfile::builtin(Sequence::T1Tse), 5).unwrap();
    let params = SegParams::default();
    let o1 = full_segmentation(&s, Variant::A, Observer::Obs1, &params).unwrap();
    let o2 = full_segmentation(&s, Variant::A, Observer::Obs2, &params).unwrap();
    for l in 1..=16 {
        assert!(dice(&o1.mask, &o2.mask, l) >= 0.90, "label {l}");
    }
    assert_eq!(perturb_mask(&gt, 0.0, 3).unwrap(), gt);
}

#[test]
fn partial_cut_keeps_the_middle_half() {
    let s = apply_sequence(&base(), &SequenceProfile::builtin(Sequence::T2Haste), 3).unwrap();
    let full = full_segmentation(&s, Variant::A, Observer::Obs1, &SegParams::default()).unwrap();
    let part = partial_segmentation(&full, 0.5).unwrap();
    let (nf, np) = (counts(&full.mask), counts(&part.mask));
    for (l, &n) in &nf {
        let r = np[l] as f64 / n as f64;
        assert!((0.35..=0.65).contains(&r), "label {l}: {r}");
    }
    for (&x, &y) in part.mask.labels.iter().zip(&full.mask.labels) {
        assert!(x == 0 || x == y, "partial is not a subset");
    }
    assert_eq!(partial_segmentation(&full, 1.0).unwrap().mask, full.mask);
}
