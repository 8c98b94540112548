//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Criteria 1-4, 9 and 10 are exact contracts; any failure among them makes
//! the process exit nonzero. Criteria 5-8 are directional reproductions on
//! the synthetic phantom; their lines report the measured values and a FAIL
//! there is reported, not fatal.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use radshift::config::{default_scenarios, RunConfig, DEFAULT_SEEDS};
use radshift::evalcal::{apply_calibration, ece, fit_temperature, CalibrationMethod, CalibrationParams, PredictionSet, ECE_BINS};
use radshift::learner::{argmax, fit, softmax, BoostedEnsemble, HyperParams, TrainSet};
use radshift::phantom::{rotate_mask, rotate_volume, Axis, Sequence};
use radshift::radiomics::{discretize, feature_names, features_of, roi_values, Binning, DiscretizedRoi, FEATURE_COUNT};
use radshift::rng;
use radshift::scenarios::{
    assemble, check_leakage, identify_robust_features, run_seed_with, Dataset, Family, FeatureSetKind,
    RobustFeatures, RunSettings, ScenarioSpec, SeedResult,
};
use radshift::segmentation::SegType;
use radshift::volume::{Grid, LabelMask, VoxelVolume};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

// ---------------------------------------------------------------- 1 to 4

fn texture_oracle() -> Outcome {
    let t = Instant::now();
    let roi = |dims, levels| DiscretizedRoi::from_levels(dims, [1.0; 3], levels, 3);
    for code in 1u32..4u32.pow(8) {
        let levels = (0..8).map(|k| ((code >> (2 * k)) & 3) as u16).collect();
        common::check_texture_matrices(&roi([2, 2, 2], levels));
    }
    let mut r = rng::rng(2024);
    let mut n = 0;
    while n < 10_000 {
        let levels: Vec<u16> = (0..27).map(|_| r.random_range(0..4u16)).collect();
        if levels.iter().any(|&l| l != 0) {
            common::check_texture_matrices(&roi([3, 3, 3], levels));
            n += 1;
        }
    }
    let secs = t.elapsed().as_secs_f64();
    ensure(secs < 60.0, format!("took {secs:.1} s"))?;
    Ok(format!("65535 2x2x2 and 10000 3x3x3 volumes exact in {secs:.1} s"))
}

fn feature(values: &[f64], name: &str) -> f64 {
    values[feature_names().iter().position(|n| n == name).unwrap()]
}

fn features(v: &VoxelVolume, m: &LabelMask) -> Vec<f64> {
    let roi = discretize(v, m, 1, Binning::default()).unwrap();
    features_of(&roi, &roi_values(v, m, 1).unwrap()).unwrap()
}

fn first_order_and_shape() -> Outcome {
    let g = Grid::new([4, 4, 4], [1.0; 3]).unwrap();
    let v = VoxelVolume::new(g, vec![7.5; g.len()]).unwrap();
    let m = LabelMask::new(g, (0..g.len()).map(|i| (i < 20) as u16).collect()).unwrap();
    let f = features(&v, &m);
    ensure(feature(&f, "firstorder_Variance") == 0.0 && feature(&f, "firstorder_Entropy") == 0.0, "constant ROI")?;

    for s in [0.5, 1.0, 2.5] {
        let g = Grid::new([3, 3, 3], [s; 3]).unwrap();
        let v = VoxelVolume::new(g, vec![1.0; g.len()]).unwrap();
        let m = LabelMask::new(g, (0..g.len()).map(|i| (i == 13) as u16).collect()).unwrap();
        let area = feature(&features(&v, &m), "shape_SurfaceArea");
        ensure((area - 6.0 * s * s).abs() < 1e-12, format!("single voxel area {area} at spacing {s}"))?;
    }

    let mut worst = 0.0f64;
    let mut r = rng::rng(5);
    let g = Grid::new([11, 9, 7], [0.8, 1.0, 1.6]).unwrap();
    let labels = (0..g.len())
        .map(|i| {
            let [x, y, z] = g.coords(i);
            let (u, v, w) = ((x as f64 - 5.0) / 4.6, (y as f64 - 4.0) / 3.7, (z as f64 - 3.0) / 2.8);
            (u * u + v * v + w * w <= 1.0) as u16
        })
        .collect();
    let m = LabelMask::new(g, labels).unwrap();
    let v = VoxelVolume::new(g, (0..g.len()).map(|_| r.random_range(0..100u16) as f32).collect()).unwrap();
    let base = features(&v, &m);
    ensure(base.len() == FEATURE_COUNT && base.iter().all(|x| x.is_finite()), "non-finite or short row")?;
    for axis in [Axis::X, Axis::Y, Axis::Z] {
        let rot = features(&rotate_volume(&v, axis), &rotate_mask(&m, axis));
        for (a, b) in base.iter().zip(&rot) {
            worst = worst.max((a - b).abs());
        }
    }
    ensure(worst <= 1e-9, format!("rotation changed a feature by {worst:e}"))?;
    Ok(format!("{FEATURE_COUNT} finite features; max rotation change {worst:.1e}"))
}

fn ece_checks() -> Outcome {
    let p = PredictionSet::new(
        2,
        vec![0, 1, 0, 0],
        vec![vec![0.95, 0.05], vec![0.95, 0.05], vec![0.65, 0.35], vec![0.65, 0.35]],
    )
    .unwrap();
    let e = ece(&p, 10);
    ensure((e - 0.40).abs() < 1e-12, format!("hand example {e}"))?;
    let mut r = rng::rng(77);
    for t in 0..100 {
        let k = r.random_range(2..6);
        let n = r.random_range(1..200);
        let mut probs = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..n {
            let mut z: Vec<f64> = (0..k).map(|_| 3.0 * normal(&mut r)).collect();
            softmax(&mut z);
            probs.push(z);
            labels.push(r.random_range(0..k));
        }
        let p = PredictionSet::new(k, labels, probs).unwrap();
        ensure(ece(&p, 10) == common::calibration_oracle::ece(&p, 10), format!("random set {t}"))?;
    }
    Ok(format!("hand example {e}; 100 random sets equal the oracle"))
}

fn normal(r: &mut impl rand::Rng) -> f64 {
    StandardNormal.sample(r)
}

/// Labels drawn from each row's own distribution: calibrated by construction.
fn calibrated(n: usize, seed: u64) -> PredictionSet {
    let mut r = rng::rng(seed);
    let (mut labels, mut probs) = (Vec::new(), Vec::new());
    for _ in 0..n {
        let mut z: Vec<f64> = (0..4).map(|_| 1.5 * normal(&mut r)).collect();
        softmax(&mut z);
        let u: f64 = r.random();
        let mut acc = 0.0;
        let y = z.iter().position(|&p| {
            acc += p;
            u < acc
        });
        labels.push(y.unwrap_or(3));
        probs.push(z);
    }
    PredictionSet::new(4, labels, probs).unwrap()
}

fn sharpened(p: &PredictionSet) -> PredictionSet {
    let probs = p
        .probs
        .iter()
        .map(|row| {
            let s: f64 = row.iter().map(|v| v * v).sum();
            row.iter().map(|v| v * v / s).collect()
        })
        .collect();
    PredictionSet::new(p.k, p.labels.clone(), probs).unwrap()
}

fn temperature_scaling() -> Outcome {
    let mut r = rng::rng(31);
    for i in 0..1000 {
        let k = r.random_range(2..7);
        let mut row: Vec<f64> = (0..k).map(|_| r.random_range(-8.0..8.0)).collect();
        softmax(&mut row);
        let t = r.random_range(0.05..20.0);
        let p = PredictionSet::new(k, vec![0], vec![row.clone()]).unwrap();
        let q = apply_calibration(&p, &CalibrationParams::Ts { temperature: t }).unwrap();
        ensure(argmax(&q.probs[0]) == argmax(&row), format!("argmax moved on row {i}"))?;
    }
    let temp = |c: CalibrationParams| match c {
        CalibrationParams::Ts { temperature } => temperature,
        _ => f64::NAN,
    };
    let (val, test) = (sharpened(&calibrated(4000, 1)), sharpened(&calibrated(4000, 2)));
    let c = fit_temperature(&val);
    let (before, after) = (ece(&test, ECE_BINS), ece(&apply_calibration(&test, &c).unwrap(), ECE_BINS));
    let t_over = temp(c);
    ensure(t_over > 1.0 && after <= 0.5 * before, format!("overconfident: T {t_over:.3}, ECE {before:.4} -> {after:.4}"))?;
    let (val, test) = (calibrated(4000, 3), calibrated(4000, 4));
    let c = fit_temperature(&val);
    let (b2, a2) = (ece(&test, ECE_BINS), ece(&apply_calibration(&test, &c).unwrap(), ECE_BINS));
    ensure((a2 - b2).abs() <= 0.02, format!("calibrated: ECE {b2:.4} -> {a2:.4}"))?;
    Ok(format!(
        "argmax kept on 1000 rows; overconfident T {t_over:.3}, ECE {before:.4} -> {after:.4}; calibrated T {:.3}, dECE {:+.4}",
        temp(c),
        a2 - b2
    ))
}

// ---------------------------------------------------------------- 5 to 8

struct Seeded {
    seed: u64,
    data: Dataset,
    robust: RobustFeatures,
}

fn spec(name: &str, family: Family, train: &[Sequence], features: FeatureSetKind) -> ScenarioSpec {
    ScenarioSpec {
        name: name.into(),
        family,
        train_sequences: train.to_vec(),
        test_sequences: Vec::new(),
        features,
        augmentation: false,
        calibration: CalibrationMethod::None,
    }
}

fn default_spec(name: &str) -> ScenarioSpec {
    default_scenarios(RunConfig::default().evaluation.calibration)
        .into_iter()
        .find(|s| s.name == name)
        .unwrap()
}

fn run(s: &ScenarioSpec, d: &Seeded, settings: &RunSettings) -> SeedResult {
    run_seed_with(s, &d.data, &d.robust, settings, d.seed).unwrap()
}

fn inter_observer(sets: &[Seeded], settings: &RunSettings, build_secs: f64) -> Outcome {
    let t = Instant::now();
    let s = default_spec("inter_observer_consistent");
    let mut per_seq = vec![Vec::new(); Sequence::ALL.len()];
    for d in sets {
        for f in run(&s, d, settings).fits {
            let i = Sequence::ALL.iter().position(|&q| q == f.train_sequences[0]).unwrap();
            per_seq[i].push(f.cells[0].f1_macro);
        }
    }
    let secs = build_secs + t.elapsed().as_secs_f64();
    let means: Vec<f64> = per_seq.iter().map(|v| mean(v)).collect();
    let worst_single = per_seq.iter().flatten().copied().fold(1.0, f64::min);
    let detail = format!(
        "seed-mean F1 {}; lowest single-seed F1 {worst_single:.3}; {secs:.0} s",
        Sequence::ALL
            .iter()
            .zip(&means)
            .map(|(s, m)| format!("{s} {m:.3}"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    ensure(means.iter().all(|&m| m >= 0.90) && secs < 120.0, detail.clone())?;
    Ok(detail)
}

/// Held-out mean F1 and degradation ratio, averaged over single-sequence
/// models of every seed.
fn single_sequence(sets: &[Seeded], settings: &RunSettings, kind: FeatureSetKind) -> (f64, f64, Vec<Vec<f64>>) {
    let (mut f1, mut ratio) = (Vec::new(), Vec::new());
    let mut degr = Vec::new();
    for d in sets {
        let mut per_seed = Vec::new();
        for s in Sequence::ALL {
            let r = run(&spec("cp", Family::CrossProtocol, &[s], kind), d, settings);
            let fit = &r.fits[0];
            f1.push(fit.shifted_f1.unwrap());
            let q = fit.degradation_ratio.unwrap();
            ratio.push(q);
            per_seed.push(1.0 - q);
        }
        degr.push(per_seed);
    }
    (mean(&f1), mean(&ratio), degr)
}

fn cross_protocol(consistent: (f64, f64), all: (f64, f64)) -> Outcome {
    let (df1, dratio) = (consistent.0 - all.0, consistent.1 - all.1);
    let detail = format!(
        "held-out F1 consistent {:.3} vs all {:.3} (gap {df1:.3}); ratio {:.3} vs {:.3} (gap {dratio:.3})",
        consistent.0, all.0, consistent.1, all.1
    );
    ensure(df1 >= 0.10 && dratio >= 0.15, detail.clone())?;
    Ok(detail)
}

fn subsets(k: usize) -> Vec<Vec<Sequence>> {
    (0u32..32)
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| (0..5).filter(|i| m >> i & 1 == 1).map(|i| Sequence::ALL[i]).collect())
        .collect()
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        // Ties share the mean of their positions.
        for &k in &idx[i..=j] {
            r[k] = (i + j) as f64 / 2.0 + 1.0;
        }
        i = j + 1;
    }
    r
}

fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let (mx, my) = (mean(&rx), mean(&ry));
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

fn diversity(sets: &[Seeded], settings: &RunSettings, k1: &[Vec<f64>]) -> Outcome {
    let (mut ks, mut ys) = (Vec::new(), Vec::new());
    let mut by_k = vec![Vec::new(); 4];
    for (d, single) in sets.iter().zip(k1) {
        for k in 1..=4 {
            let vals: Vec<f64> = if k == 1 {
                single.clone()
            } else {
                subsets(k)
                    .iter()
                    .map(|train| {
                        let r = run(&spec("cp", Family::CrossProtocol, train, FeatureSetKind::All), d, settings);
                        1.0 - r.fits[0].degradation_ratio.unwrap()
                    })
                    .collect()
            };
            let m = mean(&vals);
            ks.push(k as f64);
            ys.push(m);
            by_k[k - 1].push(m);
        }
    }
    let curve: Vec<f64> = by_k.iter().map(|v| mean(v)).collect();
    let monotone = curve.windows(2).all(|w| w[1] <= w[0]);
    let rho = spearman(&ks, &ys);
    let per_seed: Vec<String> = ys
        .chunks(4)
        .map(|c| format!("{:.2}", spearman(&[1.0, 2.0, 3.0, 4.0], c)))
        .collect();
    let detail = format!(
        "mean held-out degradation k=1..4: {}; pooled Spearman {rho:.3} over {} points (per seed {})",
        curve.iter().map(|c| format!("{c:.3}")).collect::<Vec<_>>().join(", "),
        ys.len(),
        per_seed.join(" ")
    );
    ensure(monotone && rho <= -0.8, detail.clone())?;
    Ok(detail)
}

fn augmentation(sets: &[Seeded], settings: &RunSettings) -> Outcome {
    let partial = |s: &ScenarioSpec| {
        let (mut e, mut f) = (Vec::new(), Vec::new());
        for d in sets {
            for fit in run(s, d, settings).fits {
                for c in fit.cells.iter().filter(|c| c.seg_type == SegType::Partial) {
                    e.push(c.ece);
                    f.push(c.f1_macro);
                }
            }
        }
        (mean(&e), mean(&f))
    };
    let plain = partial(&default_spec("compound_consistent"));
    let aug = partial(&default_spec("compound_consistent_augmented"));
    let reduction = 1.0 - aug.0 / plain.0;
    let detail = format!(
        "partial-cell ECE {:.3} -> {:.3} ({:.0}% reduction); F1 {:.3} -> {:.3}",
        plain.0,
        aug.0,
        100.0 * reduction,
        plain.1,
        aug.1
    );
    ensure(reduction >= 0.20 && aug.1 >= plain.1 - 0.02, detail.clone())?;
    Ok(detail)
}

// ---------------------------------------------------------------- 9, 10

fn leakage(sets: &[Seeded]) -> Result<usize, String> {
    let mut specs = default_scenarios(CalibrationMethod::Ts);
    for k in 1..=5 {
        for train in subsets(k) {
            specs.push(spec("cp", Family::CrossProtocol, &train, FeatureSetKind::All));
            for aug in [false, true] {
                let mut c = spec("cmp", Family::Compound, &train, FeatureSetKind::All);
                c.augmentation = aug;
                specs.push(c);
            }
        }
    }
    let mut n = 0;
    for d in sets {
        for s in &specs {
            for split in assemble(s, &d.data).map_err(|e| e.to_string())? {
                check_leakage(&split, &d.data).map_err(|e| format!("{}: {e}", s.name))?;
                n += 1;
            }
        }
    }
    Ok(n)
}

fn pipeline_bytes(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let out = dir.join("out");
    let cfg = dir.join("run.json");
    let mut c = RunConfig::default().with_output(out.clone());
    c.phantom.seeds = vec![1, 2];
    std::fs::write(&cfg, serde_json::to_string_pretty(&c.to_value()).unwrap()).map_err(|e| e.to_string())?;
    for stage in ["gen", "extract", "run"] {
        let o = Command::new(env!("CARGO_BIN_EXE_radshift"))
            .args([stage, "--config", cfg.to_str().unwrap()])
            .env("RUST_LOG", "warn")
            .output()
            .map_err(|e| e.to_string())?;
        ensure(o.status.success(), format!("{stage}: {}", String::from_utf8_lossy(&o.stderr)))?;
    }
    let mut files = vec![out.join("features.csv"), out.join("summary.csv")];
    for s in &c.scenarios {
        files.push(radshift::pipeline::report_path(&out, &s.name));
    }
    let bytes = files
        .iter()
        .map(|f| Ok((f.display().to_string(), std::fs::read(f).map_err(|e| e.to_string())?)))
        .collect::<Result<Vec<_>, String>>()?;
    // Volumes are large; drop them before the second run.
    std::fs::remove_dir_all(out.join("volumes")).map_err(|e| e.to_string())?;
    Ok(bytes)
}

fn no_leakage_and_determinism(sets: &[Seeded]) -> Outcome {
    let n = leakage(sets)?;
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let first = pipeline_bytes(tmp.path())?;
    std::fs::remove_dir_all(tmp.path().join("out")).map_err(|e| e.to_string())?;
    let second = pipeline_bytes(tmp.path())?;
    for ((name, a), (_, b)) in first.iter().zip(&second) {
        ensure(a == b, format!("{name} differs between runs"))?;
    }
    Ok(format!("{n} splits provenance-disjoint; {} output files byte-identical across two runs", first.len()))
}

fn learner_sanity() -> Outcome {
    let names = |n: usize| (0..n).map(|i| format!("f{i}")).collect::<Vec<_>>();
    let hp = |depth, rounds| HyperParams {
        max_depth: depth,
        learning_rate: 0.3,
        n_estimators: rounds,
        l2_reg: 1.0,
        min_child_weight: 0.0,
        subsample: 1.0,
    };
    let acc = |m: &BoostedEnsemble, x: &[Vec<f64>], y: &[usize]| {
        x.iter().zip(y).filter(|(r, &c)| m.predict(r).unwrap() == c).count() as f64 / y.len() as f64
    };
    let (x, y) = common::data::xor(10, 0);
    let m = fit(&TrainSet::new(&x, &y), &names(2), 2, &hp(2, 50), None, 1).unwrap();
    ensure(acc(&m, &x, &y) == 1.0, "XOR")?;
    ensure(m.training_loss.windows(2).all(|w| w[1] <= w[0]), "XOR loss rose")?;
    let (x, y) = common::data::blobs(25, 3);
    let m = fit(&TrainSet::new(&x, &y), &names(3), 4, &hp(3, 30), None, 1).unwrap();
    ensure(acc(&m, &x, &y) == 1.0, "blobs")?;
    ensure(m.training_loss.windows(2).all(|w| w[1] <= w[0]), "blob loss rose")?;

    let (x, y) = common::data::blobs(10, 8);
    let (mut xd, mut yd, mut w) = (x.clone(), y.clone(), vec![1.0; x.len()]);
    for i in [0, 7, 13, 25, 39] {
        xd.push(x[i].clone());
        yd.push(y[i]);
        w[i] = 2.0;
    }
    let a = fit(&TrainSet::new(&xd, &yd), &names(3), 4, &hp(3, 20), None, 4).unwrap();
    let weighted = TrainSet { x: &x, y: &y, sample_weight: Some(&w) };
    let b = fit(&weighted, &names(3), 4, &hp(3, 20), None, 4).unwrap();
    let mut gap = 0.0f64;
    for row in &x {
        for (u, v) in a.predict_proba(row).unwrap().iter().zip(b.predict_proba(row).unwrap()) {
            gap = gap.max((u - v).abs());
        }
    }
    ensure(gap <= 1e-9, format!("duplication gap {gap:e}"))?;
    Ok(format!("XOR and blobs at accuracy 1.0; losses non-increasing; duplication gap {gap:.1e}"))
}

fn report(n: usize, what: &str, hard: bool, f: impl FnOnce() -> Outcome) -> bool {
    let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        Err(e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into()))
    });
    let kind = if hard { "" } else { " (directional)" };
    match r {
        Ok(d) => {
            println!("criterion {n:>2} PASS{kind}: {what}: {d}");
            true
        }
        Err(d) => {
            println!("criterion {n:>2} FAIL{kind}: {what}: {d}");
            !hard
        }
    }
}

fn main() -> ExitCode {
    // `cargo test -- --list` and filters pass arguments; only run in full.
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let mut ok = true;
    ok &= report(1, "texture-matrix oracle", true, texture_oracle);
    ok &= report(2, "first-order and shape analytics", true, first_order_and_shape);
    ok &= report(3, "ECE hand example and oracle", true, ece_checks);
    ok &= report(4, "temperature scaling", true, temperature_scaling);

    let t = Instant::now();
    let config = RunConfig::default();
    let settings = config.settings();
    let sets: Vec<Seeded> = DEFAULT_SEEDS
        .iter()
        .map(|&seed| {
            let data = Dataset::build(&config.dataset(), seed).unwrap();
            let robust = identify_robust_features(&data, settings.ccc_threshold).unwrap();
            Seeded { seed, data, robust }
        })
        .collect();
    let build_secs = t.elapsed().as_secs_f64();

    ok &= report(5, "inter-observer consistent F1 >= 0.90 per sequence", false, || {
        inter_observer(&sets, &settings, build_secs)
    });
    let consistent = single_sequence(&sets, &settings, FeatureSetKind::Consistent);
    let all = single_sequence(&sets, &settings, FeatureSetKind::All);
    ok &= report(6, "consistent vs all features across protocols", false, || {
        cross_protocol((consistent.0, consistent.1), (all.0, all.1))
    });
    ok &= report(7, "protocol-diversity trend", false, || diversity(&sets, &settings, &all.2));
    ok &= report(8, "augmentation calibration gain", false, || augmentation(&sets, &settings));
    ok &= report(9, "no leakage and byte-identical reruns", true, || no_leakage_and_determinism(&sets));
    ok &= report(10, "learner sanity", true, learner_sanity);
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
