//! End-to-end acceptance checks. Each test writes one `criterion N: PASS`
//! or `criterion N: FAIL` line to stderr (bypassing output capture) before
//! asserting.

#[path = "../../core/tests/oracles/mod.rs"]
mod oracles;

use std::io::Write;
use std::time::Instant;

use hdadbin_core::classical::{mlt, niblack, otsu_threshold_from_histogram, sauvola, ThresholdParams};
use hdadbin_core::eval::{
    confusion, evaluate_dataset, metrics, psnr, render_comparison, Aggregation, Binarizer, EvalReport, EvalRow,
};
use hdadbin_core::ihegt::{ihegt_binarize, ihegt_with, IhegtConfig, Termination};
use hdadbin_core::labeling::{
    cwmf_denoise, fuse, refined_truth, weighted_median_is_foreground, CwmfParams, HdadPair, LabelingConfig,
    Provenance, SourceImage,
};
use hdadbin_core::method::{ClassicalMethod, MethodKind};
use hdadbin_core::synth::{generate, SynthConfig};
use hdadbin_core::{BinaryMap, GrayImage, Label};
use hdadbin_nn::gradcheck::check_gradients;
use hdadbin_nn::serialize::encode_model;
use hdadbin_nn::{build_model, train_with, ArchConfig, CnnBinarizer, Precision, Tensor, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn verdict(n: u32, pass: bool, detail: &str) {
    let status = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {n}: {status} ({detail})");
    assert!(pass, "criterion {n}: {detail}");
}

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap()
}

fn synthetic_pair(seed: u64, side: usize) -> HdadPair {
    let s = generate(&SynthConfig::new(side, side, seed));
    HdadPair::new(format!("s{seed}"), SourceImage::Color(s.image), s.mask, Provenance::Corrected).unwrap()
}

#[test]
fn criterion_01_local_methods_match_brute_force() {
    let start = Instant::now();
    let mut mismatches = Vec::new();
    let cwmf = CwmfParams::default();
    for seed in 0..50 {
        let img = oracles::random_image(seed, 64, 64);
        let (nb, sv, ml) = (ThresholdParams::niblack(), ThresholdParams::sauvola(), ThresholdParams::mlt());
        if niblack(&img, &nb).unwrap() != oracles::niblack(&img, nb.k, nb.w) {
            mismatches.push(format!("niblack {seed}"));
        }
        if sauvola(&img, &sv).unwrap() != oracles::sauvola(&img, sv.k, sv.w, sv.r) {
            mismatches.push(format!("sauvola {seed}"));
        }
        if mlt(&img, &ml).unwrap() != oracles::mlt(&img, ml.k, ml.w) {
            mismatches.push(format!("mlt {seed}"));
        }
        let map = oracles::random_map(seed, 64, 64);
        if cwmf_denoise(&map, &cwmf).unwrap() != oracles::cwmf(&map, cwmf.window, cwmf.center_weight) {
            mismatches.push(format!("cwmf {seed}"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        1,
        mismatches.is_empty() && secs < 10.0,
        &format!("{} mismatches {:?}, {secs:.2} s", mismatches.len(), mismatches),
    );
}

#[test]
fn criterion_02_otsu_minimizes_within_class_variance() {
    let start = Instant::now();
    let wrong: Vec<u64> = (0..100)
        .filter(|&seed| {
            let h = oracles::random_histogram(seed);
            otsu_threshold_from_histogram(&h) != oracles::otsu_threshold(&h)
        })
        .collect();
    let secs = start.elapsed().as_secs_f64();
    verdict(2, wrong.is_empty() && secs < 1.0, &format!("wrong on {wrong:?}, {secs:.3} s"));
}

#[test]
fn criterion_03_ihegt_terminates_and_matches_hand_trace() {
    let start = Instant::now();
    let mut worst = 0;
    for seed in 0..100 {
        let img = oracles::random_image(1000 + seed, 48, 40);
        let (map, trace) = ihegt_with(&img, &IhegtConfig { max_iterations: 100, ..Default::default() }).unwrap();
        assert_eq!(map.dimensions(), img.dimensions());
        worst = worst.max(trace.iterations);
    }
    let mut img = GrayImage::filled(10, 10, 255).unwrap();
    img.set(7, 1, 0);
    let map = ihegt_binarize(&img, 100).unwrap();
    let expected = BinaryMap::from_fn(10, 10, |x, y| Label::from_foreground((x, y) == (7, 1))).unwrap();
    let (_, trace) = ihegt_with(&img, &IhegtConfig::default()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    verdict(
        3,
        worst <= 100 && map == expected && trace.termination == Termination::MeanConverged && secs < 1.0,
        &format!("max iterations {worst}, fixture {}, {secs:.3} s", if map == expected { "exact" } else { "differs" }),
    );
}

#[test]
fn criterion_04_fusion_algebra() {
    let mut failures = 0;
    let empty = BinaryMap::filled(37, 29, Label::Background).unwrap();
    for seed in 0..100 {
        let a = oracles::random_map(2 * seed, 37, 29);
        let b = oracles::random_map(2 * seed + 1, 37, 29);
        let c = oracles::random_map(seed + 500, 37, 29);
        let f = |x: &BinaryMap, y: &BinaryMap| fuse(x, y).unwrap();
        let ok = f(&a, &b) == f(&b, &a)
            && f(&f(&a, &b), &c) == f(&a, &f(&b, &c))
            && f(&a, &a) == a
            && f(&a, &empty) == a
            && f(&a, &b) == oracles::fuse(&a, &b);
        failures += usize::from(!ok);
    }
    verdict(4, failures == 0, &format!("{failures} of 100 pairs violate a law"));
}

#[test]
fn criterion_05_cwmf_removes_speckle_and_keeps_lines() {
    let p = CwmfParams::default();
    let size = p.window * p.window - 1 + p.center_weight;
    let rank = (size + 1).div_ceil(2);
    let speckle_fg = p.center_weight;
    let line_fg = p.center_weight + p.window - 1;
    let rule = !weighted_median_is_foreground(speckle_fg, size) && weighted_median_is_foreground(line_fg, size);

    let mut speckles = BinaryMap::filled(40, 40, Label::Background).unwrap();
    for (x, y) in [(5, 5), (20, 12), (33, 30), (3, 3), (36, 17)] {
        speckles.set(x, y, Label::Foreground);
    }
    let cleaned = cwmf_denoise(&speckles, &p).unwrap();
    let lines = BinaryMap::from_fn(40, 40, |x, y| Label::from_foreground(x == 13 || y == 27 || x == y)).unwrap();
    let kept = cwmf_denoise(&lines, &p).unwrap();
    let lines_ok = (0..40).all(|y| {
        (0..40).all(|x| {
            let border = x < 3 || y < 3 || x > 36 || y > 36;
            border || kept.get(x, y) == lines.get(x, y)
        })
    });
    verdict(
        5,
        (speckle_fg, rank, line_fg) == (37, 43, 43) && rule && cleaned.foreground_count() == 0 && lines_ok,
        &format!("{speckle_fg} < {rank} <= {line_fg}; speckles left {}", cleaned.foreground_count()),
    );
}

#[test]
fn criterion_06_shape_chain_and_parameter_count() {
    let table: [(&str, usize, usize); 15] = [
        ("CONV1_1", 224, 32),
        ("CONV1_2", 112, 32),
        ("CONV2_1", 112, 32),
        ("CONV2_2", 56, 32),
        ("CONV3_1", 56, 32),
        ("CONV3_2", 28, 32),
        ("CONV4_1", 28, 32),
        ("CONV4_2", 14, 32),
        ("CONV5_1", 14, 32),
        ("CONV5_2", 7, 32),
        ("DECONV1", 14, 2),
        ("DECONV2", 28, 2),
        ("DECONV3", 56, 2),
        ("DECONV4", 112, 2),
        ("DECONV5", 224, 2),
    ];
    let model = build_model(ArchConfig::default(), 1).unwrap();
    let trace = model.forward_trace(&Tensor::zeros(1, 224, 224).unwrap()).unwrap();
    let actual: Vec<[usize; 3]> =
        trace.encoder.iter().chain(&trace.decoder).map(|t| [t.height(), t.width(), t.channels()]).collect();
    let expected: Vec<[usize; 3]> = table.iter().map(|&(_, s, c)| [s, s, c]).collect();
    let names_ok = ArchConfig::default().shape_chain().iter().map(|(n, _)| n.as_str()).eq(table.iter().map(|t| t.0));
    let chain_ok = actual == expected && names_ok;
    let count = model.parameter_count();
    let within = (count as f64 - 84_654.0).abs() / 84_654.0 <= 0.02;
    let exact = count == 84_540;
    verdict(
        6,
        chain_ok && within && exact,
        &format!("shape chain {}; {count} parameters, within 2% of 84654: {within}, exactly 84540: {exact}", if chain_ok { "matches" } else { "differs" }),
    );
}

#[test]
fn criterion_07_gradients_match_finite_differences() {
    let start = Instant::now();
    let arch = ArchConfig { input_channels: 1, width: 4, levels: 3, block: 16 };
    let model = build_model(arch, 11).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let input = Tensor::from_vec(1, 16, 16, (0..256).map(|_| rng.random::<f64>()).collect()).unwrap();
    let target: Vec<u8> = (0..256).map(|_| rng.random_range(0..2u8)).collect();
    let r = check_gradients(&model, &input, &target, 1e-5).unwrap();
    let secs = start.elapsed().as_secs_f64();
    verdict(
        7,
        r.parameters == model.parameter_count() && r.worst_relative_error < 1e-4 && secs < 60.0,
        &format!(
            "{} parameters, worst relative error {:.2e}, {} one-sided at kinks, {secs:.1} s",
            r.parameters, r.worst_relative_error, r.one_sided
        ),
    );
}

#[test]
fn criterion_08_overfits_four_blocks() {
    let start = Instant::now();
    let pairs: Vec<HdadPair> = (100..104).map(|seed| synthetic_pair(seed, 224)).collect();
    let cfg = TrainConfig { epochs: 50, batch_size: 1, learning_rate: 3e-3, ..Default::default() };
    let outcome = train_with(&pairs, &cfg, |_, _| {}).unwrap();
    let last = *outcome.history.last().unwrap();
    let secs = start.elapsed().as_secs_f64();
    verdict(
        8,
        outcome.history.len() <= 50 && last < 0.03 && secs < 600.0,
        &format!("final mean loss {last:.4} after {} epochs, {secs:.0} s", outcome.history.len()),
    );
}

#[test]
fn criterion_09_synthetic_benchmark() {
    let start = Instant::now();
    let train: Vec<HdadPair> = (1000..1020).map(|seed| synthetic_pair(seed, 224)).collect();
    let test: Vec<HdadPair> = (2000..2012).map(|seed| synthetic_pair(seed, 320)).collect();

    let labeling = LabelingConfig::default();
    let pipeline_f = test
        .iter()
        .map(|p| {
            let truth = refined_truth(&p.source().to_gray(), &labeling).unwrap();
            metrics(&confusion(&truth, p.truth()).unwrap()).f_measure
        })
        .sum::<f64>()
        / test.len() as f64;

    let macro_f = |m: &dyn Binarizer| evaluate_dataset(m, &test, Aggregation::Macro).unwrap().aggregate.f_measure;
    let niblack_f = macro_f(&ClassicalMethod::new(MethodKind::Niblack));
    let sauvola_f = macro_f(&ClassicalMethod::new(MethodKind::Sauvola));

    let cfg = TrainConfig { epochs: 50, batch_size: 1, learning_rate: 3e-3, ..Default::default() };
    let model = train_with(&train, &cfg, |_, _| {}).unwrap().model;
    let cnn_f = macro_f(&CnnBinarizer::new(model, Precision::Double));
    let secs = start.elapsed().as_secs_f64();
    verdict(
        9,
        cnn_f > niblack_f && cnn_f > sauvola_f && pipeline_f >= 0.9 && secs < 1800.0,
        &format!(
            "CNN F {cnn_f:.4}, Niblack {niblack_f:.4}, Sauvola {sauvola_f:.4}, labeling vs masks {pipeline_f:.4}, {secs:.0} s"
        ),
    );
}

#[test]
fn criterion_10_metric_fixtures_and_report_columns() {
    let truth = BinaryMap::from_fn(8, 8, |x, y| Label::from_foreground(y * 8 + x < 10)).unwrap();
    let mut pred = truth.clone();
    pred.set(1, 1, Label::Background);
    pred.set(0, 7, Label::Foreground);
    pred.set(7, 7, Label::Foreground);
    let c = confusion(&pred, &truth).unwrap();
    let m = metrics(&c);
    let close = |a: f64, b: f64, tol: f64| (a - b).abs() <= tol;
    let counts_ok = (c.tp, c.fn_, c.fp) == (9, 1, 2);
    let metrics_ok = close(m.recall, 0.9, 1e-4) && close(m.precision, 0.8182, 1e-4) && close(m.f_measure, 0.8571, 1e-4);

    let clean = BinaryMap::filled(224, 224, Label::Background).unwrap();
    let mut one_off = clean.clone();
    one_off.set(100, 50, Label::Foreground);
    let db = psnr(&one_off, &clean).unwrap();

    let row = EvalRow {
        id: "fixture".into(),
        confusion: c,
        metrics: m,
        psnr: db,
        seconds: 0.5,
    };
    let report = EvalReport::from_rows("CNN".into(), vec![row], Aggregation::Macro, Some(84_216));
    let table = render_comparison(&[report]);
    let header = table.lines().next().unwrap_or_default();
    let columns_ok = ["Method", "Re", "Sp", "Pr", "F-m", "PSNR", "#(parameters)", "time (s)"]
        .iter()
        .all(|c| header.contains(c))
        && table.contains("84,216")
        && table.contains("0.500");
    verdict(
        10,
        counts_ok && metrics_ok && close(db, 47.0055, 1e-3) && columns_ok,
        &format!(
            "Re {:.4} Pr {:.4} F {:.4}, PSNR {db:.4} dB, report columns {}",
            m.recall,
            m.precision,
            m.f_measure,
            if columns_ok { "present" } else { "missing" }
        ),
    );
}

#[test]
fn criterion_11_determinism_across_runs_and_threads() {
    let pairs: Vec<HdadPair> = (300..302).map(|seed| synthetic_pair(seed, 224)).collect();
    let cfg = TrainConfig { epochs: 2, batch_size: 2, seed: 9, ..Default::default() };
    let models: Vec<Vec<u8>> = [1, 1, 3]
        .iter()
        .map(|&t| pool(t).install(|| encode_model(&train_with(&pairs, &cfg, |_, _| {}).unwrap().model)))
        .collect();
    let training_ok = models[0] == models[1] && models[0] == models[2];

    let model = hdadbin_nn::serialize::decode_model(&models[0], std::path::Path::new("memory")).unwrap();
    let mut methods: Vec<Box<dyn Binarizer>> =
        MethodKind::ALL.into_iter().map(|k| Box::new(ClassicalMethod::new(k)) as Box<dyn Binarizer>).collect();
    methods.push(Box::new(CnnBinarizer::new(model.clone(), Precision::Double)));
    methods.push(Box::new(CnnBinarizer::new(model, Precision::Single)));
    let img = synthetic_pair(301, 300).source().to_gray();
    let mut differing = Vec::new();
    for m in &methods {
        let runs: Vec<BinaryMap> = [1, 1, 2, 4].iter().map(|&t| pool(t).install(|| m.binarize(&img).unwrap())).collect();
        if runs.windows(2).any(|w| w[0] != w[1]) {
            differing.push(m.name());
        }
    }
    verdict(
        11,
        training_ok && differing.is_empty(),
        &format!(
            "training {}, binarizers differing: {differing:?}",
            if training_ok { "bit-identical" } else { "differs" }
        ),
    );
}
