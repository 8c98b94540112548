//! Temperature and ensemble temperature scaling on deliberately overconfident
//! predictions, with the reliability table before and after.

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use radshift::evalcal::{apply_calibration, ece, fit_ets, fit_temperature, reliability, PredictionSet, ECE_BINS};
use radshift::learner::softmax;
use radshift::rng;

/// Draws labels from each row, then squares the row: same argmax, too sure.
fn overconfident(n: usize, seed: u64) -> PredictionSet {
    let mut r = rng::rng(seed);
    let (mut labels, mut probs) = (Vec::new(), Vec::new());
    for _ in 0..n {
        let mut z: Vec<f64> = (0..4).map(|_| 1.5 * { let v: f64 = StandardNormal.sample(&mut r); v }).collect();
        softmax(&mut z);
        let u: f64 = r.random();
        let mut acc = 0.0;
        labels.push(z.iter().position(|&p| { acc += p; u < acc }).unwrap_or(3));
        let s: f64 = z.iter().map(|p| p * p).sum();
        probs.push(z.iter().map(|p| p * p / s).collect());
    }
    PredictionSet::new(4, labels, probs).unwrap()
}

fn main() -> radshift::Result<()> {
    let (val, test) = (overconfident(3000, 1), overconfident(3000, 2));
    println!("uncalibrated ECE {:.4}", ece(&test, ECE_BINS));
    for params in [fit_temperature(&val), fit_ets(&val)] {
        let cal = apply_calibration(&test, &params)?;
        println!("{params:?}: ECE {:.4}", ece(&cal, ECE_BINS));
    }
    println!("{:>12} {:>6} {:>6} {:>6}", "bin", "n", "conf", "acc");
    for b in reliability(&test, ECE_BINS) {
        println!("({:.1}, {:.1}] {:>6} {:>6.3} {:>6.3}", b.bin_low, b.bin_high, b.count, b.mean_conf, b.mean_acc);
    }
    Ok(())
}
