//! Monte Carlo checks on the plant, the detector and the key noise.

use ii_detect::coding::{KeyDims, KeyGenParams, KeySet};
use ii_detect::experiment::{self, ExperimentConfig};
use ii_detect::numerics::{Mat, Vector};
use ii_detect::rng::{self, StreamId};
use ii_detect::{reactor, AnomalyProfile, NoiseMode, Plant};

#[test]
fn initial_state_mean() {
    let model = reactor::model();
    let n = 100_000;
    let mut sum = Vector::zeros(4);
    for seed in 0..n {
        sum += Plant::new(&model, seed, NoiseMode::Stochastic).unwrap().state();
    }
    let mean = sum / n as f64;
    for i in 0..4 {
        let bound = 3.0 * (model.sigma1[(i, i)] / n as f64).sqrt();
        assert!((mean[i] - model.mu1[i]).abs() <= bound, "component {i}: {} vs {}", mean[i], model.mu1[i]);
    }
}

#[test]
fn measurement_noise_covariance() {
    let mut model = reactor::model();
    model.sigma_w = Mat::from_row_slice(3, 3, &[0.02, 0.005, 0.0, 0.005, 0.01, 0.002, 0.0, 0.002, 0.03]);
    let mut plant = Plant::new(&model, 17, NoiseMode::Stochastic).unwrap();
    let n = 100_000;
    let mut cov = Mat::zeros(3, 3);
    let zero_u = Vector::zeros(3);
    let zero_d = Vector::zeros(1);
    for _ in 0..n {
        let x = plant.state().clone();
        let w = plant.step(&zero_u, &zero_d).unwrap() - &model.c * x;
        cov += &w * w.transpose();
    }
    cov /= n as f64;
    let rel = (&cov - &model.sigma_w).norm() / model.sigma_w.norm();
    assert!(rel <= 0.05, "relative Frobenius error {rel}");
}

fn noiseless_outputs(inputs: impl Fn(u64) -> Vector) -> Vec<Vector> {
    let model = reactor::model();
    let mut plant = Plant::new(&model, 0, NoiseMode::Deterministic).unwrap();
    (1..=200).map(|k| plant.step(&inputs(k), &Vector::zeros(1)).unwrap()).collect()
}

#[test]
fn superposition() {
    let u1 = |k: u64| reactor::reference_input(k, 3);
    let u2 = |k: u64| Vector::from_fn(3, |i, _| ((k as f64) * 0.1 + i as f64).sin() * 7.0);
    let a = noiseless_outputs(u1);
    let b = noiseless_outputs(u2);
    let zero = noiseless_outputs(|_| Vector::zeros(3));
    let sum = noiseless_outputs(|k| u1(k) + u2(k));
    for k in 0..sum.len() {
        let expect = &a[k] + &b[k] - &zero[k];
        assert!((&sum[k] - expect).amax() <= 1e-9, "k = {}", k + 1);
    }
}

#[test]
fn seed_determinism() {
    let cfg = ExperimentConfig::case_study(31, 500);
    let a = experiment::simulate(&cfg).unwrap();
    let b = experiment::simulate(&cfg).unwrap();
    assert_eq!(a.records, b.records);
    let mut other = cfg.clone();
    other.seed = 32;
    assert_ne!(experiment::simulate(&other).unwrap().records, a.records);
}

#[test]
fn far_at_one_percent() {
    let seeds: Vec<u64> = (100..110).collect();
    let far = experiment::false_alarm_rate(&reactor::model(), 0.01, 50_000, &seeds, None).unwrap();
    assert!((0.007..=0.013).contains(&far.mean), "{far:?}");
}

#[test]
fn zero_threshold_always_alarms() {
    let far = experiment::false_alarm_rate(&reactor::model(), 0.1, 5_000, &[1, 2], Some(0.0)).unwrap();
    assert!(far.mean > 0.999, "{far:?}");
    assert_eq!(far.alpha, 0.0);
}

#[test]
fn fault_is_detected() {
    let out = experiment::simulate(&ExperimentConfig::case_study(2, 500)).unwrap();
    assert!(out.summary.detection_rate_post_fault.unwrap() > 0.5);
    assert!(out.summary.far_pre_fault.is_some());
}

#[test]
fn one_time_randomness_spans_kernel() {
    let params = KeyGenParams::default();
    let key = KeySet::generate(KeyDims::CASE_STUDY, (4, 3, 3), 8, &params).unwrap();
    let y = Vector::from_vec(vec![1.0, -2.0, 3.0]);
    let mut rng = rng::stream(8, StreamId::Encoding);
    let n = 10_000;
    let samples: Vec<Vector> = (0..n).map(|_| key.encode_y(&y, &mut rng).unwrap().value).collect();
    let mean = samples.iter().fold(Vector::zeros(4), |acc, s| acc + s) / n as f64;
    let cov = samples
        .iter()
        .fold(Mat::zeros(4, 4), |acc, s| acc + (s - &mean) * (s - &mean).transpose())
        / (n as f64 - 1.0);
    // Sample covariance restricted to range(N1) should be about std^2 N1 N1^T.
    let basis = &key.n1;
    let projected = basis.transpose() * &cov * basis;
    let gram = basis.transpose() * basis;
    let sigma_min = gram.symmetric_eigenvalues().min();
    let bound = 0.5 * params.noise_y.std.powi(2) * sigma_min;
    let smallest = projected.symmetric_eigenvalues().min();
    assert!(smallest >= bound, "{smallest} < {bound}");
    // Distinct encodings of the same y.
    assert!(samples.windows(2).all(|w| w[0] != w[1]));
}

#[test]
fn encoded_outputs_decorrelate_from_plaintext() {
    let mut cfg = ExperimentConfig::case_study(13, 10_000);
    cfg.fault = AnomalyProfile::None;
    let out = experiment::simulate(&cfg).unwrap();
    let corr = experiment::output_correlations(&out.records);
    assert_eq!(corr.shape(), (3, 4));
    assert!(corr.amax() < 0.05, "{corr}");
}
