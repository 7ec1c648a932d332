//! End-to-end runs: plant, plaintext detector and the encoded pipeline in
//! lockstep, plus the Monte Carlo and case-study drivers built on top.

use std::net::SocketAddr;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::coding::{build_encoded_config, KeyDims, KeyGenParams, KeySet};
use crate::detector::{DetectorDesign, StandardDetector};
use crate::error::{Error, Result};
use crate::numerics::{Mat, Vector};
use crate::plant::{AnomalyProfile, NoiseMode, Plant, SystemModel};
use crate::reactor;
use crate::rng::{self, Stream, StreamId};
use crate::target::{EncodedConfig, TargetDetector};
use crate::trace::{write_trace, TraceRecord};
use crate::wire::{Loopback, Server, TcpTransport, Transport, UserSession};

/// Steps discarded before collecting steady-state statistics.
pub const BURN_IN: u64 = 100;

/// Input sequence fed to the plant and the detectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InputSignal {
    /// `u_k = 50 cos(0.5 k)^2` on every channel.
    #[default]
    Reference,
    Zero,
}

impl InputSignal {
    pub fn at(&self, k: u64, nu: usize) -> Vector {
        match self {
            InputSignal::Reference => reactor::reference_input(k, nu),
            InputSignal::Zero => Vector::zeros(nu),
        }
    }
}

/// Where the target detector runs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Mode {
    /// In-process target detector, no framing.
    #[default]
    Local,
    /// In-process session reached through the frame codec.
    Loopback,
    /// Remote server over TCP. `None` spawns a server on an ephemeral local port.
    Networked(Option<SocketAddr>),
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub model: SystemModel,
    pub false_alarm_rate: f64,
    pub horizon: u64,
    pub seed: u64,
    pub fault: AnomalyProfile,
    pub key_dims: KeyDims,
    pub keygen: KeyGenParams,
    pub noise: NoiseMode,
    pub input: InputSignal,
    pub mode: Mode,
}

impl ExperimentConfig {
    /// Reactor case-study settings: fault 0.9 from `k = 20`, case-study key dims.
    pub fn case_study(seed: u64, horizon: u64) -> Self {
        ExperimentConfig {
            model: reactor::model(),
            false_alarm_rate: reactor::FALSE_ALARM_RATE,
            horizon,
            seed,
            fault: reactor::fault_profile(),
            key_dims: KeyDims::CASE_STUDY,
            keygen: KeyGenParams::default(),
            noise: NoiseMode::Stochastic,
            input: InputSignal::Reference,
            mode: Mode::Local,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(Error::Usage("horizon must be at least 1".into()));
        }
        self.model.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub horizon: u64,
    pub alpha: f64,
    /// Alarm rate over steps before the fault becomes active.
    pub far_pre_fault: Option<f64>,
    /// Alarm rate over steps with the fault active.
    pub detection_rate_post_fault: Option<f64>,
    /// Decoded alarms differing from the plaintext alarm, outside the boundary band.
    pub alarm_mismatches: u64,
    /// Steps with `|z - alpha| <= 1e-9 max(1, alpha)`, excluded from the mismatch count.
    pub boundary_steps: u64,
    /// `max_k |x'_k - Pi3 xhat_k| / (1 + |Pi3 xhat_k|)`.
    pub max_manifold_error: f64,
    /// `max_k |zeta_k - z_k| / (1 + z_k)`.
    pub max_distance_error: f64,
    /// `max_k |r~_k - Pi7 (Pi1 r_k + b1_k)| / (1 + |r~_k|)`.
    pub max_residual_relation_error: f64,
    /// Steps where the remote encoded alarm differed from the local audit copy.
    pub remote_audit_mismatches: u64,
    pub input_broadcast: bool,
}

#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub records: Vec<TraceRecord>,
    pub summary: Summary,
    pub design: DetectorDesign,
    pub key: KeySet,
    pub config: EncodedConfig,
}

impl SimulationOutput {
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_trace(std::fs::File::create(path)?, &self.records)
    }
}

pub fn boundary_band(alpha: f64) -> f64 {
    1e-9 * alpha.max(1.0)
}

enum Remote {
    Local,
    Session(UserSession<Box<dyn Transport>>),
}

impl Transport for Box<dyn Transport> {
    fn send(&mut self, frame: &crate::wire::Frame) -> Result<()> {
        (**self).send(frame)
    }
    fn recv(&mut self) -> Result<crate::wire::Frame> {
        (**self).recv()
    }
}

/// Designs the detector, samples a key from the config seed and runs the pipeline.
pub fn simulate(cfg: &ExperimentConfig) -> Result<SimulationOutput> {
    cfg.validate()?;
    let design = DetectorDesign::new(&cfg.model, cfg.false_alarm_rate)?;
    let m = &cfg.model;
    let key = KeySet::generate(cfg.key_dims, (m.nx(), m.ny(), m.nu()), cfg.seed, &cfg.keygen)?;
    simulate_with(cfg, &design, key)
}

/// Runs the plant, the plaintext detector and the encoded pipeline in lockstep.
pub fn simulate_with(cfg: &ExperimentConfig, design: &DetectorDesign, key: KeySet) -> Result<SimulationOutput> {
    cfg.validate()?;
    let model = &cfg.model;
    let config = build_encoded_config(&key, model, design)?;
    let mut plant = Plant::new(model, cfg.seed, cfg.noise)?;
    let mut detector = StandardDetector::new(model, design);
    let mut audit = TargetDetector::new(config.clone());
    let mut enc_rng: Stream = rng::stream(cfg.seed, StreamId::Encoding);

    let mut _server = None;
    let mut remote = match &cfg.mode {
        Mode::Local => Remote::Local,
        Mode::Loopback => {
            let t: Box<dyn Transport> = Box::new(Loopback::new());
            Remote::Session(UserSession::open(t, key.clone(), &config, cfg.seed)?)
        }
        Mode::Networked(addr) => {
            let addr = match addr {
                Some(a) => *a,
                None => {
                    let handle = Server::bind("127.0.0.1:0")?.spawn()?;
                    let a = handle.addr();
                    _server = Some(handle);
                    a
                }
            };
            let t: Box<dyn Transport> = Box::new(TcpTransport::connect(addr)?);
            Remote::Session(UserSession::open(t, key.clone(), &config, cfg.seed)?)
        }
    };

    let band = boundary_band(design.alpha);
    let mut records = Vec::with_capacity(cfg.horizon as usize);
    let mut summary = Summary {
        horizon: cfg.horizon,
        alpha: design.alpha,
        far_pre_fault: None,
        detection_rate_post_fault: None,
        alarm_mismatches: 0,
        boundary_steps: 0,
        max_manifold_error: 0.0,
        max_distance_error: 0.0,
        max_residual_relation_error: 0.0,
        remote_audit_mismatches: 0,
        input_broadcast: matches!(cfg.input, InputSignal::Reference) && model.nu() > 1,
    };
    let (mut pre, mut pre_alarms, mut post, mut post_alarms) = (0u64, 0u64, 0u64, 0u64);

    for k in 1..=cfg.horizon {
        let u = cfg.input.at(k, model.nu());
        let delta = cfg.fault.at(k, model.ndelta());
        let fault_active = cfg.fault.is_active(k);
        let y = plant.step(&u, &delta)?;

        let immersed = &key.pi3 * detector.xhat();
        let manifold = (audit.state() - &immersed).norm() / (1.0 + immersed.norm());
        summary.max_manifold_error = summary.max_manifold_error.max(manifold);

        let plain = detector.step(&u, &y)?;

        let (ytilde, utilde, atilde, ahat, tdiag) = match &mut remote {
            Remote::Local => {
                let ytilde = key.encode_y(&y, &mut enc_rng)?;
                let utilde = key.encode_u(&u, &mut enc_rng)?;
                let tdiag = audit.step(&utilde.value, &ytilde.value)?;
                let ahat = key.decode_alarm(&tdiag.atil, &ytilde.value)?;
                (ytilde, utilde, tdiag.atil.clone(), ahat, tdiag)
            }
            Remote::Session(session) => {
                let step = session.step(&u, &y)?;
                let tdiag = audit.step(&step.utilde.value, &step.ytilde.value)?;
                if tdiag.atil != step.atilde {
                    summary.remote_audit_mismatches += 1;
                }
                (step.ytilde, step.utilde, step.atilde, step.alarm, tdiag)
            }
        };

        if (plain.z - design.alpha).abs() > band {
            if ahat != plain.alarm {
                summary.alarm_mismatches += 1;
            }
        } else {
            summary.boundary_steps += 1;
        }
        let zeta_err = (tdiag.zeta - plain.z).abs() / (1.0 + plain.z);
        summary.max_distance_error = summary.max_distance_error.max(zeta_err);
        let expected_rtil = &key.pi7 * (&key.pi1 * &plain.r + &ytilde.key_term);
        let rel = (&tdiag.rtil - expected_rtil).norm() / (1.0 + tdiag.rtil.norm());
        summary.max_residual_relation_error = summary.max_residual_relation_error.max(rel);

        if fault_active {
            post += 1;
            post_alarms += plain.alarm as u64;
        } else {
            pre += 1;
            pre_alarms += plain.alarm as u64;
        }

        records.push(TraceRecord {
            k,
            y,
            ytilde: ytilde.value,
            u,
            utilde: utilde.value,
            z: plain.z,
            zeta: tdiag.zeta,
            a: plain.alarm,
            atilde,
            ahat,
            fault_active,
        });
    }

    if let Remote::Session(session) = remote {
        session.close()?;
    }
    summary.far_pre_fault = (pre > 0).then(|| pre_alarms as f64 / pre as f64);
    summary.detection_rate_post_fault = (post > 0).then(|| post_alarms as f64 / post as f64);

    Ok(SimulationOutput {
        records,
        summary,
        design: design.clone(),
        key,
        config,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualStats {
    pub steps: u64,
    pub mean_z: f64,
    pub var_z: f64,
    pub alarm_rate: f64,
    /// Lag-1 sample autocorrelation of each residual component.
    pub lag1_autocorr: Vec<f64>,
}

/// Plaintext detector statistics over `steps` anomaly-free steps after [`BURN_IN`].
pub fn residual_statistics(
    model: &SystemModel,
    design: &DetectorDesign,
    steps: u64,
    seed: u64,
    alpha_override: Option<f64>,
) -> Result<ResidualStats> {
    if steps < 2 {
        return Err(Error::Usage("need at least two steps".into()));
    }
    let mut plant = Plant::new(model, seed, NoiseMode::Stochastic)?;
    let mut det = StandardDetector::new(model, design);
    if let Some(alpha) = alpha_override {
        det = det.with_threshold(alpha);
    }
    let zero_fault = Vector::zeros(model.ndelta());
    let ny = model.ny();
    let mut zs = Vec::with_capacity(steps as usize);
    let mut residuals = Vec::with_capacity(steps as usize);
    let mut alarms = 0u64;
    for k in 1..=(BURN_IN + steps) {
        let u = reactor::reference_input(k, model.nu());
        let y = plant.step(&u, &zero_fault)?;
        let d = det.step(&u, &y)?;
        if k > BURN_IN {
            zs.push(d.z);
            alarms += d.alarm as u64;
            residuals.push(d.r);
        }
    }
    let n = zs.len() as f64;
    let mean_z = zs.iter().sum::<f64>() / n;
    let var_z = zs.iter().map(|z| (z - mean_z).powi(2)).sum::<f64>() / (n - 1.0);
    let lag1_autocorr = (0..ny)
        .map(|i| {
            let series: Vec<f64> = residuals.iter().map(|r| r[i]).collect();
            lag1(&series)
        })
        .collect();
    Ok(ResidualStats {
        steps,
        mean_z,
        var_z,
        alarm_rate: alarms as f64 / n,
        lag1_autocorr,
    })
}

fn lag1(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    let cov: f64 = x.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
    cov / var
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarReport {
    pub alpha: f64,
    pub steps_per_seed: u64,
    pub seeds: Vec<u64>,
    pub per_seed: Vec<f64>,
    pub mean: f64,
    pub stderr: f64,
}

/// Empirical false alarm rate of the plaintext detector over independent seeds,
/// each run on its own thread.
pub fn false_alarm_rate(
    model: &SystemModel,
    false_alarm_rate: f64,
    steps: u64,
    seeds: &[u64],
    alpha_override: Option<f64>,
) -> Result<FarReport> {
    if seeds.is_empty() {
        return Err(Error::Usage("need at least one seed".into()));
    }
    let design = DetectorDesign::new(model, false_alarm_rate)?;
    let per_seed: Vec<f64> = std::thread::scope(|scope| {
        let handles: Vec<_> = seeds
            .iter()
            .map(|&seed| {
                let design = &design;
                scope.spawn(move || residual_statistics(model, design, steps, seed, alpha_override))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("FAR worker panicked").map(|s| s.alarm_rate))
            .collect::<Result<Vec<f64>>>()
    })?;
    let n = per_seed.len() as f64;
    let mean = per_seed.iter().sum::<f64>() / n;
    let stderr = if per_seed.len() > 1 {
        (per_seed.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
    } else {
        0.0
    };
    Ok(FarReport {
        alpha: alpha_override.unwrap_or(design.alpha),
        steps_per_seed: steps,
        seeds: seeds.to_vec(),
        per_seed,
        mean,
        stderr,
    })
}

/// Absolute Pearson correlation between every `y_i` and every `y~_j` over a trace (`ny x ny~`).
pub fn output_correlations(records: &[TraceRecord]) -> Mat {
    let Some(first) = records.first() else {
        return Mat::zeros(0, 0);
    };
    let (ny, nyt) = (first.y.len(), first.ytilde.len());
    let col = |f: &dyn Fn(&TraceRecord) -> f64| records.iter().map(f).collect::<Vec<f64>>();
    Mat::from_fn(ny, nyt, |i, j| {
        pearson(&col(&|r| r.y[i]), &col(&|r| r.ytilde[j])).abs()
    })
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

/// Detector designs for the reactor under both covariance settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaseStudyDesigns {
    /// `Sigma_t = I`, `Sigma_w = 0.01 I`; reproduces the published gain.
    pub matching_printed_gain: DetectorDesign,
    /// `Sigma_t = Sigma_w = 0.001 I` as stated alongside the published matrices.
    pub stated_noise: DetectorDesign,
    /// Largest elementwise gap between the computed and the published gain.
    pub gain_max_abs_diff: f64,
    pub gain_max_abs_diff_at: (usize, usize),
}

pub fn case_study_designs() -> Result<CaseStudyDesigns> {
    let matching = DetectorDesign::new(&reactor::model(), reactor::FALSE_ALARM_RATE)?;
    let stated = DetectorDesign::new(&reactor::model_stated_noise(), reactor::FALSE_ALARM_RATE)?;
    let diff = (&matching.gain - reactor::printed_gain()).abs();
    let (idx, max) = diff
        .iter()
        .enumerate()
        .fold((0, 0.0), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    let rows = diff.nrows();
    Ok(CaseStudyDesigns {
        matching_printed_gain: matching,
        stated_noise: stated,
        gain_max_abs_diff: max,
        gain_max_abs_diff_at: (idx % rows, idx / rows),
    })
}

#[derive(Debug, Clone)]
pub struct CaseStudy {
    pub designs: CaseStudyDesigns,
    pub run: SimulationOutput,
}

pub fn case_study(seed: u64, horizon: u64, mode: Mode) -> Result<CaseStudy> {
    let designs = case_study_designs()?;
    let mut cfg = ExperimentConfig::case_study(seed, horizon);
    cfg.mode = mode;
    let key = KeySet::generate(cfg.key_dims, (4, 3, 3), seed, &cfg.keygen)?;
    let run = simulate_with(&cfg, &designs.matching_printed_gain, key)?;
    Ok(CaseStudy { designs, run })
}

impl CaseStudy {
    /// Writes `trace.csv`, `summary.json` and `designs.json` into `dir`.
    pub fn write_artifacts(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        self.run.write_csv(dir.join("trace.csv"))?;
        std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&self.run.summary)?)?;
        std::fs::write(dir.join("designs.json"), serde_json::to_string_pretty(&self.designs)?)?;
        Ok(())
    }
}
