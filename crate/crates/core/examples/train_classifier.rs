//! Grid-searches and fits the boosted classifier on four Gaussian blobs,
//! then round-trips the model through JSON.

use rand_distr::{Distribution, StandardNormal};
use radshift::learner::{fit, grid_search_cv, BoostedEnsemble, ClassWeighting, HyperGrid, TrainSet};
use radshift::rng;

fn main() -> radshift::Result<()> {
    let mut r = rng::rng(4);
    let centers = [[0.0, 0.0], [3.0, 0.0], [0.0, 3.0], [3.0, 3.0]];
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (c, m) in centers.iter().enumerate() {
        for _ in 0..40 {
            let a: f64 = StandardNormal.sample(&mut r);
            let b: f64 = StandardNormal.sample(&mut r);
            x.push(vec![m[0] + a, m[1] + b]);
            y.push(c);
        }
    }
    let names = vec!["u".to_string(), "v".to_string()];
    let data = TrainSet::new(&x, &y);
    let search = grid_search_cv(&data, &names, 4, &HyperGrid::default(), 5, ClassWeighting::Balanced, 9)?;
    let best = search.cv_scores.iter().map(|s| s.mean_f1).fold(0.0, f64::max);
    println!("best of {} candidates: {:?} (cv macro-F1 {best:.3})", search.cv_scores.len(), search.best);
    let model = fit(&data, &names, 4, &search.best, None, 9)?;
    println!("training loss {:.4} -> {:.4}", model.training_loss[0], model.training_loss.last().unwrap());
    let back = BoostedEnsemble::from_json(&model.to_json()?)?;
    println!("p(1.5, 1.5) = {:?}", back.predict_proba(&[1.5, 1.5])?);
    Ok(())
}
