//! Boosted-tree sanity: separable data, weighting, loss monotonicity,
//! order invariance and serialization.

mod common;

use common::data;
use proptest::prelude::*;
use radshift::learner::{
    fit, grid_search_cv, BoostedEnsemble, ClassWeighting, HyperGrid, HyperParams, TrainSet,
};

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("f{i}")).collect()
}

fn hp(depth: usize, rounds: usize) -> HyperParams {
    HyperParams {
        max_depth: depth,
        learning_rate: 0.3,
        n_estimators: rounds,
        l2_reg: 1.0,
        min_child_weight: 0.0,
        subsample: 1.0,
    }
}

fn train_accuracy(m: &BoostedEnsemble, x: &[Vec<f64>], y: &[usize]) -> f64 {
    let hits = x.iter().zip(y).filter(|(r, &c)| m.predict(r).unwrap() == c).count();
    hits as f64 / y.len() as f64
}

#[test]
fn xor_reaches_full_training_accuracy() {
    for seed in 0..5 {
        let (x, y) = data::xor(10, seed);
        let m = fit(&TrainSet::new(&x, &y), &names(2), 2, &hp(2, 50), None, 1).unwrap();
        assert_eq!(train_accuracy(&m, &x, &y), 1.0, "seed {seed}");
    }
}

#[test]
fn four_blobs_reach_full_training_accuracy() {
    let (x, y) = data::blobs(25, 3);
    let m = fit(&TrainSet::new(&x, &y), &names(3), 4, &hp(3, 30), None, 1).unwrap();
    assert_eq!(train_accuracy(&m, &x, &y), 1.0);
}

#[test]
fn doubling_a_weight_equals_duplicating_the_row() {
    let (x, y) = data::blobs(10, 8);
    let dup: Vec<usize> = vec![0, 7, 13, 25, 39];
    let mut xd = x.clone();
    let mut yd = y.clone();
    let mut w = vec![1.0; x.len()];
    for &i in &dup {
        xd.push(x[i].clone());
        yd.push(y[i]);
        w[i] = 2.0;
    }
    let params = hp(3, 20);
    let a = fit(&TrainSet::new(&xd, &yd), &names(3), 4, &params, None, 4).unwrap();
    let weighted = TrainSet {
        x: &x,
        y: &y,
        sample_weight: Some(&w),
    };
    let b = fit(&weighted, &names(3), 4, &params, None, 4).unwrap();
    for row in &x {
        let (pa, pb) = (a.predict_proba(row).unwrap(), b.predict_proba(row).unwrap());
        for (u, v) in pa.iter().zip(&pb) {
            assert!((u - v).abs() <= 1e-9, "{pa:?} vs {pb:?}");
        }
    }
}

#[test]
fn training_loss_never_rises() {
    for (x, y, k) in [
        {
            let (x, y) = data::xor(12, 2);
            (x, y, 2)
        },
        {
            let (x, y) = data::blobs(20, 5);
            (x, y, 4)
        },
    ] {
        let m = fit(&TrainSet::new(&x, &y), &names(x[0].len()), k, &hp(3, 60), None, 0).unwrap();
        assert_eq!(m.training_loss.len(), 61);
        for w in m.training_loss.windows(2) {
            assert!(w[1] <= w[0], "{} -> {}", w[0], w[1]);
        }
    }
}

#[test]
fn json_dump_round_trips_bit_exactly() {
    let (x, y) = data::blobs(15, 6);
    let m = fit(&TrainSet::new(&x, &y), &names(3), 4, &hp(3, 15), None, 2).unwrap();
    let back = BoostedEnsemble::from_json(&m.to_json().unwrap()).unwrap();
    for row in &x {
        assert_eq!(m.predict_proba(row).unwrap(), back.predict_proba(row).unwrap());
    }
    assert_eq!(back.to_json().unwrap(), m.to_json().unwrap());
}

#[test]
fn grid_search_is_deterministic() {
    let (x, y) = data::blobs(12, 9);
    let grid = HyperGrid {
        max_depth: vec![1, 2],
        learning_rate: vec![0.3],
        n_estimators: vec![5, 10],
        l2_reg: vec![1.0],
        ..HyperGrid::default()
    };
    let run = || grid_search_cv(&TrainSet::new(&x, &y), &names(3), 4, &grid, 3, ClassWeighting::Balanced, 11).unwrap();
    let a = run();
    assert_eq!(a, run());
    assert_eq!(a.cv_scores.len(), 4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Trees compare only order, so a strictly increasing map of every
    /// feature, applied to train and test alike, changes no prediction.
    #[test]
    fn strictly_increasing_maps_do_not_change_predictions(seed in 0u64..500, a in 0.1f64..5.0) {
        let (x, y) = data::blobs(8, seed);
        let warp = |r: &Vec<f64>| -> Vec<f64> { r.iter().map(|v| a * v.powi(3) + v.exp()).collect() };
        let xw: Vec<Vec<f64>> = x.iter().map(warp).collect();
        let m = fit(&TrainSet::new(&x, &y), &names(3), 4, &hp(2, 10), None, seed).unwrap();
        let mw = fit(&TrainSet::new(&xw, &y), &names(3), 4, &hp(2, 10), None, seed).unwrap();
        let (probe, _) = data::blobs(5, seed + 1);
        for r in &probe {
            prop_assert_eq!(m.predict(r).unwrap(), mw.predict(&warp(r)).unwrap());
        }
    }

    #[test]
    fn probabilities_are_distributions(seed in 0u64..500) {
        let (x, y) = data::xor(6, seed);
        let m = fit(&TrainSet::new(&x, &y), &names(2), 2, &hp(2, 10), None, seed).unwrap();
        for r in &x {
            let p = m.predict_proba(r).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }
}
