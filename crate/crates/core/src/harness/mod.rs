//! Monte Carlo experiment runner: seeded trials, paired-method
//! estimation, RMSE aggregation, and CSV persistence.

pub mod cli;
pub mod config;
pub mod presets;

use nalgebra::Vector3;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use crate::analytics::{loe_db, LoeMode};
use crate::constellation::{ReceiverState, Scenario};
use crate::error::{Error, Result};
use crate::estimators::{dpe_estimate, twostep_estimate, TwoStepConfig};
use crate::interference::{gen_cw, gen_dme, scale_to_jn, CwSpec, JnSpec};
use crate::rim::{apply_rim, RimConfig, RimScheme};
use crate::synth::{lowpass_frontend, synthesize_with_rng, ComplexSignal};

pub use config::{ExperimentConfig, ExperimentKind, MethodKind};

const TAG_NOISE: u64 = 0xA1;
const TAG_SCENARIO: u64 = 0xB2;
const TAG_INTERFERENCE: u64 = 0xC3;
const TAG_ARS: u64 = 0xD4;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic per-trial seed from (base_seed, sweep_index, trial_index).
pub fn derive_trial_seed(base_seed: u64, sweep_index: usize, trial_index: usize) -> u64 {
    let a = splitmix64(base_seed ^ 0xD6E8_FEB8_6659_FD93);
    let b = splitmix64(a ^ (sweep_index as u64).wrapping_mul(0xA24B_AED4_963E_E407));
    splitmix64(b ^ (trial_index as u64).wrapping_mul(0x9E6C_63D0_876A_46C3))
}

fn substream(trial_seed: u64, tag: u64) -> u64 {
    splitmix64(trial_seed ^ tag.wrapping_mul(0xC2B2_AE3D_27D4_EB4F))
}

/// One estimate produced inside one Monte Carlo trial.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub sweep_value: f64,
    /// "method/scheme" label, e.g. `dpe/dd_tf`.
    pub method: String,
    pub trial: usize,
    pub seed: u64,
    pub position_error_m: f64,
    pub kappa_hat: ReceiverState,
    pub elapsed_s: f64,
}

/// RMSE summary per (sweep value, method).
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub sweep_value: f64,
    pub method: String,
    pub trials: usize,
    pub rmse_m: f64,
    pub stderr_m: f64,
}

/// Empirical and closed-form LoE per (axis point, method, scheme).
#[derive(Debug, Clone)]
pub struct LoeRow {
    pub th_over_sigma: f64,
    pub method: String,
    pub scheme: RimScheme,
    pub loe_db_empirical: f64,
    pub loe_db_theory: f64,
}

/// Full output of a Monte Carlo run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<TrialRecord>,
    pub aggregates: Vec<AggregateRow>,
}

impl RunOutput {
    pub fn rmse(&self, sweep_value: f64, method: &str) -> Option<f64> {
        self.aggregates
            .iter()
            .find(|r| r.method == method && (r.sweep_value - sweep_value).abs() < 1e-9)
            .map(|r| r.rmse_m)
    }

    /// Per-trial squared errors for a (sweep, method) cell, ordered by
    /// trial index.
    pub fn errors(&self, sweep_value: f64, method: &str) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.method == method && (r.sweep_value - sweep_value).abs() < 1e-9)
            .map(|r| r.position_error_m)
            .collect()
    }
}

struct TrialContext {
    scenario: Scenario,
    truth: ReceiverState,
    init: ReceiverState,
    /// Clean signal plus noise, before interference and front-end.
    signal: ComplexSignal,
}

fn build_trial(config: &ExperimentConfig, base: &Scenario, trial_seed: u64) -> Result<TrialContext> {
    let mut rng = ChaCha8Rng::seed_from_u64(substream(trial_seed, TAG_SCENARIO));
    let mut scenario = base.clone();

    // dither the truth so per-satellite sub-sample code phases decorrelate
    // across trials, and randomize carrier phases
    let mut truth = scenario.receiver;
    truth.position_m += Vector3::new(
        rng.gen_range(-50.0..50.0),
        rng.gen_range(-50.0..50.0),
        rng.gen_range(-50.0..50.0),
    );
    truth.clock_bias_s = rng.gen_range(0.0..1.0e-6);
    scenario.receiver = truth;
    for sat in scenario.satellites.iter_mut() {
        sat.carrier_phase_rad = rng.gen_range(0.0..std::f64::consts::TAU);
    }

    // search initialization at a fixed distance from truth, random direction
    let dir = loop {
        let v = Vector3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        if v.norm() > 1e-3 {
            break v.normalize();
        }
    };
    let mut init = truth;
    init.position_m += dir * config.estimator.init_distance_m;
    init.clock_bias_s = 0.0;

    let mut noise_rng = ChaCha8Rng::seed_from_u64(substream(trial_seed, TAG_NOISE));
    let signal = synthesize_with_rng(&scenario, &mut noise_rng)?;
    Ok(TrialContext {
        scenario,
        truth,
        init,
        signal,
    })
}

/// Unit-amplitude interference waveform for one trial, before JN scaling.
fn build_interference(
    config: &ExperimentConfig,
    n_samples: usize,
    sample_rate_hz: f64,
    trial_seed: u64,
) -> Result<Option<ComplexSignal>> {
    let mut rng = ChaCha8Rng::seed_from_u64(substream(trial_seed, TAG_INTERFERENCE));
    match config.kind {
        ExperimentKind::Loe => Ok(None),
        ExperimentKind::Cw => {
            let spec = CwSpec {
                freq_offset_hz: config.interference.cw_freq_offset_hz,
                phase_rad: rng.gen_range(0.0..std::f64::consts::TAU),
                amplitude: 1.0,
            };
            Ok(Some(gen_cw(&spec, n_samples, sample_rate_hz)?))
        }
        ExperimentKind::Dme => {
            let mut sum = vec![num_complex::Complex64::new(0.0, 0.0); n_samples];
            for emitter in &config.interference.dme_emitters {
                let wave = gen_dme(&emitter.to_spec(), n_samples, sample_rate_hz, &mut rng)?;
                for (acc, v) in sum.iter_mut().zip(&wave.samples) {
                    *acc += v;
                }
            }
            Ok(Some(ComplexSignal::new(sum, sample_rate_hz)))
        }
    }
}

/// Interference waveform for the `synth` CLI dump, drawn from the same
/// substream family the experiments use.
pub fn build_interference_for_cli(
    config: &ExperimentConfig,
    n_samples: usize,
    seed: u64,
) -> Result<Option<ComplexSignal>> {
    build_interference(config, n_samples, config.scenario.sample_rate_hz, seed)
}

fn received_signal(
    ctx: &TrialContext,
    interference: Option<&ComplexSignal>,
    jn_db: f64,
) -> Result<ComplexSignal> {
    let mut received = ctx.signal.clone();
    if let Some(i) = interference {
        let scaled = scale_to_jn(i, &JnSpec::new(jn_db)?, ctx.scenario.noise_variance)?;
        for (a, b) in received.samples.iter_mut().zip(&scaled.samples) {
            *a += b;
        }
    }
    match ctx.scenario.frontend_bandwidth_hz {
        Some(bw) => lowpass_frontend(&received, bw),
        None => Ok(received),
    }
}

fn estimate_one(
    config: &ExperimentConfig,
    ctx: &TrialContext,
    cleaned: &ComplexSignal,
    method: MethodKind,
    method_idx: usize,
    trial_seed: u64,
) -> Result<ReceiverState> {
    // the cleaning already happened; both methods consume the identical
    // cleaned signal through a passthrough chain
    let passthrough = RimConfig::none(config.block_samples());
    match method {
        MethodKind::Dpe => {
            let ars = config.ars_params(substream(trial_seed, TAG_ARS ^ (method_idx as u64) << 8));
            let result = dpe_estimate(cleaned, &ctx.scenario, &passthrough, &ars, &ctx.init)?;
            Ok(result.kappa_hat)
        }
        MethodKind::TwoStep => {
            let ts = TwoStepConfig {
                doppler_bins: config.estimator.doppler_bins_2sp,
                doppler_step_hz: config.estimator.doppler_step_hz_2sp,
                anchor: ctx.init,
            };
            let result = twostep_estimate(cleaned, &ctx.scenario, &passthrough, &ts)?;
            Ok(result.kappa_hat)
        }
    }
}

fn run_trial(
    config: &ExperimentConfig,
    base: &Scenario,
    sweep_index: usize,
    sweep_value: f64,
    trial: usize,
) -> Result<Vec<TrialRecord>> {
    let trial_seed = derive_trial_seed(config.sweep.base_seed, sweep_index, trial);
    let ctx = build_trial(config, base, trial_seed)?;
    let interference = build_interference(
        config,
        ctx.signal.len(),
        ctx.signal.sample_rate_hz,
        trial_seed,
    )?;
    let received = received_signal(&ctx, interference.as_ref(), sweep_value)?;

    let block = config.block_samples();
    let huber_scale = match config.kind {
        ExperimentKind::Loe => sweep_value,
        _ => config.estimator.huber_mad_scale,
    };

    let methods = config.methods();
    let mut records = Vec::with_capacity(config.schemes().len() * methods.len());
    for scheme in config.schemes() {
        let rim = scheme
            .config(huber_scale, block)
            .with_frontend_bandwidth(ctx.scenario.frontend_bandwidth_hz);
        let cleaned = apply_rim(&received, &rim);
        for (method_idx, &method) in methods.iter().enumerate() {
            let started = Instant::now();
            let kappa_hat = estimate_one(config, &ctx, &cleaned, method, method_idx, trial_seed)?;
            let elapsed_s = started.elapsed().as_secs_f64();
            records.push(TrialRecord {
                sweep_value,
                method: format!("{}/{}", method.label(), scheme.label()),
                trial,
                seed: trial_seed,
                position_error_m: (kappa_hat.position_m - ctx.truth.position_m).norm(),
                kappa_hat,
                elapsed_s,
            });
        }
    }
    Ok(records)
}

fn aggregate(records: &[TrialRecord]) -> Vec<AggregateRow> {
    // group by (sweep_value, method) in first-seen order
    let mut keys: Vec<(f64, String)> = Vec::new();
    for r in records {
        if !keys
            .iter()
            .any(|(s, m)| (*s - r.sweep_value).abs() < 1e-12 && *m == r.method)
        {
            keys.push((r.sweep_value, r.method.clone()));
        }
    }
    keys.iter()
        .map(|(sweep, method)| {
            let sq: Vec<f64> = records
                .iter()
                .filter(|r| (r.sweep_value - sweep).abs() < 1e-12 && r.method == *method)
                .map(|r| r.position_error_m * r.position_error_m)
                .collect();
            let n = sq.len();
            let mean_sq = sq.iter().sum::<f64>() / n as f64;
            let rmse = mean_sq.sqrt();
            let var_sq = if n > 1 {
                sq.iter().map(|&s| (s - mean_sq).powi(2)).sum::<f64>() / (n as f64 - 1.0)
            } else {
                0.0
            };
            // delta method: Var(RMSE) ≈ Var(e²)/(4·n·RMSE²)
            let stderr = if rmse > 0.0 {
                (var_sq / (4.0 * n as f64 * rmse * rmse)).sqrt()
            } else {
                0.0
            };
            AggregateRow {
                sweep_value: *sweep,
                method: method.clone(),
                trials: n,
                rmse_m: rmse,
                stderr_m: stderr,
            }
        })
        .collect()
}

/// Generic seeded sweep engine: every (sweep value, trial) pair is
/// independent, trials run in parallel, and aggregation is order-stable so
/// reruns and different worker counts produce identical tables.
pub fn run_monte_carlo(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    let base = config.build_scenario();
    let sweep_values: Vec<f64> = match config.kind {
        ExperimentKind::Loe => config.sweep.threshold_axis.clone(),
        _ => config.sweep.jn_axis_db.clone(),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;

    let mut records = Vec::new();
    for (sweep_index, &sweep_value) in sweep_values.iter().enumerate() {
        let started = Instant::now();
        let per_trial: Vec<Vec<TrialRecord>> = pool.install(|| {
            (0..config.sweep.trials)
                .into_par_iter()
                .map(|trial| run_trial(config, &base, sweep_index, sweep_value, trial))
                .collect::<Result<Vec<_>>>()
        })?;
        for mut batch in per_trial {
            records.append(&mut batch);
        }
        eprintln!(
            "sweep {}/{} (value {:.4}): {} trials in {:.1} s",
            sweep_index + 1,
            sweep_values.len(),
            sweep_value,
            config.sweep.trials,
            started.elapsed().as_secs_f64()
        );
    }
    let aggregates = aggregate(&records);
    Ok(RunOutput {
        records,
        aggregates,
    })
}

/// Closed-form LoE prediction for a scheme at a normalized threshold.
pub fn scheme_loe_theory_db(scheme: RimScheme, th_over_sigma: f64) -> f64 {
    match scheme {
        RimScheme::None => 0.0,
        RimScheme::TimeDomain | RimScheme::FrequencyDomain => {
            loe_db(th_over_sigma, 1.0, LoeMode::SingleDomain)
        }
        RimScheme::DualTimeFreq | RimScheme::DualFreqTime => {
            loe_db(th_over_sigma, 1.0, LoeMode::DualDomain)
        }
    }
}

/// Loss-of-efficiency experiment: interference-free threshold sweep with
/// paired seeds, reporting empirical LoE = 20·log10(RMSE_scheme/RMSE_none)
/// next to the closed-form curve.
pub fn run_loe_experiment(config: &ExperimentConfig) -> Result<(RunOutput, Vec<LoeRow>)> {
    if config.kind != ExperimentKind::Loe {
        return Err(Error::InvalidArgument(
            "LoE experiment requires an interference-free (loe) configuration".into(),
        ));
    }
    if !config.schemes().contains(&RimScheme::None) {
        return Err(Error::Config(
            "LoE experiment needs the 'none' scheme as its baseline".into(),
        ));
    }
    let output = run_monte_carlo(config)?;
    let mut rows = Vec::new();
    for &th in &config.sweep.threshold_axis {
        for method in config.methods() {
            let baseline = output
                .rmse(th, &format!("{}/none", method.label()))
                .ok_or_else(|| Error::Config("missing baseline aggregate".into()))?;
            for scheme in config.schemes() {
                if scheme == RimScheme::None {
                    continue;
                }
                let rmse = output
                    .rmse(th, &format!("{}/{}", method.label(), scheme.label()))
                    .ok_or_else(|| Error::Config("missing scheme aggregate".into()))?;
                rows.push(LoeRow {
                    th_over_sigma: th,
                    method: method.label().to_string(),
                    scheme,
                    loe_db_empirical: 20.0 * (rmse / baseline).log10(),
                    loe_db_theory: scheme_loe_theory_db(scheme, th),
                });
            }
        }
    }
    Ok((output, rows))
}

/// Interference robustness sweep (CW or DME) over jamming-to-noise ratios.
pub fn run_interference_sweep(config: &ExperimentConfig) -> Result<RunOutput> {
    if config.kind == ExperimentKind::Loe {
        return Err(Error::InvalidArgument(
            "interference sweep requires a cw or dme configuration".into(),
        ));
    }
    run_monte_carlo(config)
}

/// Writes the aggregate table with the stable header
/// `sweep_value,method,trials,rmse_m,stderr_m`.
pub fn write_results_csv(path: &Path, rows: &[AggregateRow]) -> Result<()> {
    let mut out = String::from("sweep_value,method,trials,rmse_m,stderr_m\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.sweep_value, r.method, r.trials, r.rmse_m, r.stderr_m
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Writes the LoE comparison table
/// (`sweep_value,method,scheme,loe_db,loe_theory_db`).
pub fn write_loe_csv(path: &Path, rows: &[LoeRow]) -> Result<()> {
    let mut out = String::from("sweep_value,method,scheme,loe_db,loe_theory_db\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.th_over_sigma,
            r.method,
            r.scheme.label(),
            r.loe_db_empirical,
            r.loe_db_theory
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Dumps a signal as little-endian interleaved f64 I/Q pairs.
pub fn write_iq_f64le(path: &Path, signal: &ComplexSignal) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = std::io::BufWriter::new(file);
    for s in &signal.samples {
        w.write_all(&s.re.to_le_bytes())
            .and_then(|_| w.write_all(&s.im.to_le_bytes()))
            .map_err(|e| Error::io(path.display().to_string(), e))?;
    }
    w.flush().map_err(|e| Error::io(path.display().to_string(), e))
}
