//! Experiment configuration: TOML schema, defaults, and conversion into
//! runtime scenario/estimator settings.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::constellation::Scenario;
use crate::error::{Error, Result};
use crate::estimators::ArsParams;
use crate::harness::presets;
use crate::interference::DmeSpec;
use crate::rim::{RimScheme, HUBER_MAD_SCALE};
use crate::synth::CODE_PERIOD_S;

/// Which of the three experiments a config drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    /// Interference-free loss-of-efficiency sweep over normalized
    /// thresholds.
    Loe,
    /// CW jammer sweep over JN.
    Cw,
    /// DME pulse-pair sweep over JN.
    Dme,
}

/// Estimator families selectable per experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MethodKind {
    #[serde(rename = "dpe")]
    Dpe,
    #[serde(rename = "2sp")]
    TwoStep,
}

impl MethodKind {
    pub fn label(&self) -> &'static str {
        match self {
            MethodKind::Dpe => "dpe",
            MethodKind::TwoStep => "2sp",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub sample_rate_hz: f64,
    pub carrier_freq_hz: f64,
    pub cn0_dbhz: f64,
    pub noise_variance: f64,
    /// Coherent 1 ms blocks accumulated noncoherently per fix.
    pub blocks_per_fix: usize,
    /// One-sided front-end bandwidth; 0 disables the filter.
    pub frontend_bandwidth_hz: f64,
    pub receiver_position_m: Option<[f64; 3]>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            sample_rate_hz: 5e6,
            carrier_freq_hz: 1575.42e6,
            cn0_dbhz: 44.0,
            noise_variance: 2.0,
            blocks_per_fix: 5,
            frontend_bandwidth_hz: 0.0,
            receiver_position_m: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatorConfig {
    /// RIM scheme labels: none, td, fd, dd_tf, dd_ft.
    pub schemes: Vec<String>,
    /// Method labels: dpe, 2sp.
    pub methods: Vec<String>,
    /// Huber threshold scale for interference sweeps (the LoE experiment
    /// sweeps this instead).
    pub huber_mad_scale: f64,
    pub ars_initial_radius_m: f64,
    pub ars_min_radius_m: f64,
    pub ars_contraction: f64,
    pub ars_iterations: usize,
    /// Search domain half-widths around the init point.
    pub ars_max_position_offset_m: f64,
    pub ars_max_clock_offset_m: f64,
    /// Distance from truth at which each trial's search is initialized.
    pub init_distance_m: f64,
    /// Doppler bins for two-step acquisition (odd; 1 = predicted only).
    pub doppler_bins_2sp: usize,
    pub doppler_step_hz_2sp: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            schemes: RimScheme::ALL.iter().map(|s| s.label().to_string()).collect(),
            methods: vec!["dpe".into()],
            huber_mad_scale: HUBER_MAD_SCALE,
            ars_initial_radius_m: 2000.0,
            ars_min_radius_m: 0.1,
            ars_contraction: 2.0,
            ars_iterations: 1400,
            ars_max_position_offset_m: 4000.0,
            ars_max_clock_offset_m: 600.0,
            init_distance_m: 1500.0,
            doppler_bins_2sp: 1,
            doppler_step_hz_2sp: 250.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub trials: usize,
    pub base_seed: u64,
    /// Normalized-threshold axis for the LoE experiment.
    pub threshold_axis: Vec<f64>,
    /// JN axis (dB) for interference sweeps.
    pub jn_axis_db: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            trials: 500,
            base_seed: 1,
            threshold_axis: vec![0.8, HUBER_MAD_SCALE, 2.0, 10.0],
            jn_axis_db: vec![-20.0, 0.0, 24.0, 48.0],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DmeEmitterConfig {
    pub pulse_width_param: f64,
    pub pair_spacing_s: f64,
    pub pair_rate_pps: f64,
    pub freq_offset_hz: f64,
}

impl Default for DmeEmitterConfig {
    fn default() -> Self {
        DmeEmitterConfig {
            pulse_width_param: 4.5e11,
            pair_spacing_s: 12e-6,
            pair_rate_pps: 2700.0,
            freq_offset_hz: 0.0,
        }
    }
}

impl DmeEmitterConfig {
    pub fn to_spec(&self) -> DmeSpec {
        DmeSpec {
            pulse_width_param: self.pulse_width_param,
            pair_spacing_s: self.pair_spacing_s,
            pair_rate_pps: self.pair_rate_pps,
            amplitude: 1.0,
            freq_offset_hz: self.freq_offset_hz,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InterferenceConfig {
    pub cw_freq_offset_hz: f64,
    pub dme_emitters: Vec<DmeEmitterConfig>,
}

impl Default for InterferenceConfig {
    fn default() -> Self {
        InterferenceConfig {
            cw_freq_offset_hz: 250e3,
            dme_emitters: vec![DmeEmitterConfig::default()],
        }
    }
}

/// Full experiment description as read from TOML.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub scenario: ScenarioConfig,
    pub estimator: EstimatorConfig,
    pub sweep: SweepConfig,
    pub interference: InterferenceConfig,
    /// Worker threads for trial-level parallelism; 0 = all cores.
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kind: ExperimentKind::Loe,
            scenario: ScenarioConfig::default(),
            estimator: EstimatorConfig::default(),
            sweep: SweepConfig::default(),
            interference: InterferenceConfig::default(),
            workers: 0,
        }
    }
}

impl ExperimentConfig {
    /// Interference-free LoE sweep defaults.
    pub fn default_loe() -> Self {
        ExperimentConfig {
            kind: ExperimentKind::Loe,
            estimator: EstimatorConfig {
                methods: vec!["dpe".into(), "2sp".into()],
                ..EstimatorConfig::default()
            },
            sweep: SweepConfig {
                trials: 2000,
                ..SweepConfig::default()
            },
            ..ExperimentConfig::default()
        }
    }

    /// CW jammer sweep defaults.
    pub fn default_cw() -> Self {
        ExperimentConfig {
            kind: ExperimentKind::Cw,
            sweep: SweepConfig {
                trials: 500,
                jn_axis_db: vec![-20.0, 0.0, 24.0, 48.0],
                ..SweepConfig::default()
            },
            ..ExperimentConfig::default()
        }
    }

    /// DME sweep defaults: a composite of X-mode emitters across the band,
    /// sampled at 20 MHz.
    pub fn default_dme() -> Self {
        let offsets_mhz = [-7.5, -5.5, -3.5, -1.5, 0.5, 2.5, 4.5, 6.5];
        ExperimentConfig {
            kind: ExperimentKind::Dme,
            scenario: ScenarioConfig {
                sample_rate_hz: 20e6,
                ..ScenarioConfig::default()
            },
            sweep: SweepConfig {
                trials: 500,
                jn_axis_db: vec![40.0, 56.0],
                ..SweepConfig::default()
            },
            interference: InterferenceConfig {
                dme_emitters: offsets_mhz
                    .iter()
                    .map(|&mhz| DmeEmitterConfig {
                        freq_offset_hz: mhz * 1e6,
                        ..DmeEmitterConfig::default()
                    })
                    .collect(),
                ..InterferenceConfig::default()
            },
            ..ExperimentConfig::default()
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        let config: ExperimentConfig = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sweep.trials < 1 {
            return Err(Error::Config("trials must be ≥ 1".into()));
        }
        let axis_len = match self.kind {
            ExperimentKind::Loe => self.sweep.threshold_axis.len(),
            _ => self.sweep.jn_axis_db.len(),
        };
        if axis_len == 0 {
            return Err(Error::Config("sweep axis is empty".into()));
        }
        if self.kind == ExperimentKind::Loe
            && self.sweep.threshold_axis.iter().any(|&t| !(t > 0.0))
        {
            return Err(Error::Config("threshold axis must be positive".into()));
        }
        if self.scenario.blocks_per_fix == 0 {
            return Err(Error::Config("blocks_per_fix must be ≥ 1".into()));
        }
        for s in &self.estimator.schemes {
            RimScheme::from_label(s)?;
        }
        for m in &self.estimator.methods {
            self.parse_method(m)?;
        }
        if self.estimator.methods.is_empty() || self.estimator.schemes.is_empty() {
            return Err(Error::Config("need at least one method and scheme".into()));
        }
        if !(1000.0..=10_000.0).contains(&self.estimator.init_distance_m) {
            return Err(Error::Config(
                "init_distance_m must lie in [1000, 10000] m".into(),
            ));
        }
        if self.kind == ExperimentKind::Dme && self.interference.dme_emitters.is_empty() {
            return Err(Error::Config("DME sweep needs at least one emitter".into()));
        }
        self.build_scenario().validate()?;
        Ok(())
    }

    fn parse_method(&self, label: &str) -> Result<MethodKind> {
        match label {
            "dpe" => Ok(MethodKind::Dpe),
            "2sp" => Ok(MethodKind::TwoStep),
            other => Err(Error::Config(format!("unknown method '{other}'"))),
        }
    }

    pub fn methods(&self) -> Vec<MethodKind> {
        self.estimator
            .methods
            .iter()
            .map(|m| self.parse_method(m).expect("validated"))
            .collect()
    }

    pub fn schemes(&self) -> Vec<RimScheme> {
        self.estimator
            .schemes
            .iter()
            .map(|s| RimScheme::from_label(s).expect("validated"))
            .collect()
    }

    /// Samples per coherent block (one code period).
    pub fn block_samples(&self) -> usize {
        (CODE_PERIOD_S * self.scenario.sample_rate_hz).round() as usize
    }

    /// The scenario template; per-trial randomization (phases, truth
    /// dither, init draw) happens in the runner.
    pub fn build_scenario(&self) -> Scenario {
        let pos = self
            .scenario
            .receiver_position_m
            .map(|p| Vector3::new(p[0], p[1], p[2]))
            .unwrap_or_else(presets::default_receiver_position);
        let bandwidth = if self.scenario.frontend_bandwidth_hz > 0.0 {
            Some(self.scenario.frontend_bandwidth_hz)
        } else {
            None
        };
        presets::seven_satellite_scenario(
            pos,
            self.scenario.cn0_dbhz,
            self.scenario.sample_rate_hz,
            self.scenario.blocks_per_fix as f64 * CODE_PERIOD_S,
            self.scenario.noise_variance,
            bandwidth,
        )
    }

    pub fn ars_params(&self, seed: u64) -> ArsParams {
        ArsParams {
            initial_radius_m: self.estimator.ars_initial_radius_m,
            min_radius_m: self.estimator.ars_min_radius_m,
            contraction: self.estimator.ars_contraction,
            max_iterations: self.estimator.ars_iterations,
            seed,
            max_position_offset_m: self.estimator.ars_max_position_offset_m,
            max_clock_offset_m: self.estimator.ars_max_clock_offset_m,
            ..ArsParams::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ExperimentConfig::default_loe().validate().unwrap();
        ExperimentConfig::default_cw().validate().unwrap();
        ExperimentConfig::default_dme().validate().unwrap();
    }

    #[test]
    fn toml_roundtrip() {
        let config = ExperimentConfig::default_dme();
        let text = toml::to_string(&config).unwrap();
        let back: ExperimentConfig = toml::from_str(&text).unwrap();
        assert_eq!(back.scenario.sample_rate_hz, 20e6);
        assert_eq!(back.interference.dme_emitters.len(), 8);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut config = ExperimentConfig::default_loe();
        config.sweep.trials = 0;
        assert!(config.validate().is_err());

        let mut config = ExperimentConfig::default_loe();
        config.sweep.threshold_axis.clear();
        assert!(config.validate().is_err());

        let mut config = ExperimentConfig::default_loe();
        config.estimator.schemes = vec!["sideways".into()];
        assert!(config.validate().is_err());

        let mut config = ExperimentConfig::default_loe();
        config.estimator.init_distance_m = 50.0;
        assert!(config.validate().is_err());
    }

    #[test]
    fn missing_config_file_reports_path() {
        let err = ExperimentConfig::load(Path::new("/no/such/config.toml")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("/no/such/config.toml"), "{msg}");
    }
}
