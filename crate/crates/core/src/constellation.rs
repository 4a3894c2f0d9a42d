//! Receiver/satellite geometry: pseudoranges, Doppler shifts, and the
//! delay Jacobian that links the position search space to per-satellite
//! observables.

use nalgebra::{DMatrix, Vector3};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::SPEED_OF_LIGHT;

/// Positions closer than this are treated as coincident.
const MIN_RANGE_M: f64 = 1.0;

/// Receiver parameter vector: position, velocity, clock bias, clock drift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiverState {
    /// ECEF position, meters.
    pub position_m: Vector3<f64>,
    /// ECEF velocity, m/s.
    pub velocity_mps: Vector3<f64>,
    /// Receiver clock bias, seconds.
    pub clock_bias_s: f64,
    /// Receiver clock drift, s/s.
    pub clock_drift: f64,
}

impl ReceiverState {
    /// Static receiver at `position_m` with zero clock terms.
    pub fn static_at(position_m: Vector3<f64>) -> Self {
        ReceiverState {
            position_m,
            velocity_mps: Vector3::zeros(),
            clock_bias_s: 0.0,
            clock_drift: 0.0,
        }
    }

    /// All components finite.
    pub fn validate(&self) -> Result<()> {
        let finite = self.position_m.iter().all(|v| v.is_finite())
            && self.velocity_mps.iter().all(|v| v.is_finite())
            && self.clock_bias_s.is_finite()
            && self.clock_drift.is_finite();
        if !finite {
            return Err(Error::InvalidArgument(
                "receiver state has non-finite components".into(),
            ));
        }
        Ok(())
    }

    /// Additional check for terrestrial scenarios: the position must sit
    /// within a plausible band around the Earth's surface.
    pub fn validate_terrestrial(&self) -> Result<()> {
        self.validate()?;
        let r = self.position_m.norm();
        if !(6.2e6..=7.5e6).contains(&r) {
            return Err(Error::InvalidArgument(format!(
                "terrestrial receiver radius {r:.3e} m outside [6.2e6, 7.5e6]"
            )));
        }
        Ok(())
    }
}

/// Per-satellite state entering the signal model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SatelliteState {
    /// ECEF position, meters.
    pub position_m: Vector3<f64>,
    /// ECEF velocity, m/s.
    pub velocity_mps: Vector3<f64>,
    /// Satellite clock bias, seconds.
    pub clock_bias_s: f64,
    /// Complex amplitude of the received signal (linear units).
    pub amplitude: Complex64,
    /// Carrier phase offset, radians.
    pub carrier_phase_rad: f64,
    /// PRN identifier, 1..=37.
    pub prn_id: u8,
}

impl SatelliteState {
    pub fn validate(&self) -> Result<()> {
        if !(1..=37).contains(&self.prn_id) {
            return Err(Error::InvalidArgument(format!(
                "prn_id {} outside 1..=37",
                self.prn_id
            )));
        }
        if self.amplitude.norm() <= 0.0 {
            return Err(Error::InvalidArgument(
                "satellite amplitude magnitude must be > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Simulation scenario: receiver truth, constellation, and sampling setup.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub receiver: ReceiverState,
    pub satellites: Vec<SatelliteState>,
    /// Carrier frequency f_c, Hz.
    pub carrier_freq_hz: f64,
    /// Sampling rate f_s, Hz.
    pub sample_rate_hz: f64,
    /// Observation length, seconds.
    pub duration_s: f64,
    /// Per-satellite carrier-to-noise-density ratios, dB-Hz. When set, the
    /// synthesizer derives amplitude magnitudes from these instead of the
    /// satellites' `amplitude` fields (phases are kept).
    pub cn0_dbhz: Option<Vec<f64>>,
    /// Complex noise variance σ_n² (per-component variance σ_n²/2).
    pub noise_variance: f64,
    /// Optional one-sided brick-wall front-end bandwidth, Hz.
    pub frontend_bandwidth_hz: Option<f64>,
}

impl Scenario {
    /// Number of samples N implied by duration and sampling rate.
    pub fn n_samples(&self) -> usize {
        (self.duration_s * self.sample_rate_hz).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        self.receiver.validate()?;
        if self.satellites.is_empty() {
            return Err(Error::InvalidArgument("scenario has no satellites".into()));
        }
        for sat in &self.satellites {
            sat.validate()?;
        }
        if let Some(cn0) = &self.cn0_dbhz {
            if cn0.len() != self.satellites.len() {
                return Err(Error::InvalidArgument(format!(
                    "cn0 list length {} != satellite count {}",
                    cn0.len(),
                    self.satellites.len()
                )));
            }
        }
        if self.sample_rate_hz <= 0.0 || self.noise_variance < 0.0 {
            return Err(Error::InvalidArgument(
                "sample rate must be positive and noise variance nonnegative".into(),
            ));
        }
        if let Some(bw) = self.frontend_bandwidth_hz {
            if self.sample_rate_hz <= 2.0 * bw {
                return Err(Error::InvalidArgument(format!(
                    "sample rate {} must exceed twice the front-end bandwidth {}",
                    self.sample_rate_hz, bw
                )));
            }
        }
        let n = self.duration_s * self.sample_rate_hz;
        if n < 1.0 || (n - n.round()).abs() > 1e-6 {
            return Err(Error::InvalidArgument(format!(
                "duration × sample rate = {n} is not a positive integer sample count"
            )));
        }
        Ok(())
    }
}

/// Pseudorange ‖p − p_i‖ + c(δt − δt_i), meters. The random error term of
/// the observation model is not added here; see [`pseudorange_biased`] for
/// the extension hook.
pub fn pseudorange(rx: &ReceiverState, sat: &SatelliteState) -> Result<f64> {
    pseudorange_biased(rx, sat, 0.0)
}

/// Pseudorange with an explicit per-satellite extra bias (atmospheric or
/// ephemeris error models can feed this), meters.
pub fn pseudorange_biased(rx: &ReceiverState, sat: &SatelliteState, bias_m: f64) -> Result<f64> {
    let range = (rx.position_m - sat.position_m).norm();
    if range < MIN_RANGE_M {
        return Err(Error::Degenerate(format!(
            "receiver and satellite prn {} are coincident",
            sat.prn_id
        )));
    }
    Ok(range + SPEED_OF_LIGHT * (rx.clock_bias_s - sat.clock_bias_s) + bias_m)
}

/// Signal propagation delay τ_i = ρ_i / c, seconds.
pub fn delay(rx: &ReceiverState, sat: &SatelliteState) -> Result<f64> {
    Ok(pseudorange(rx, sat)? / SPEED_OF_LIGHT)
}

/// Doppler shift −(v_i − v)ᵀ u_i (1 + δṫ) f_c / c, Hz, with u_i the unit
/// vector from receiver to satellite.
pub fn doppler(rx: &ReceiverState, sat: &SatelliteState, carrier_freq_hz: f64) -> Result<f64> {
    let los = sat.position_m - rx.position_m;
    let range = los.norm();
    if range < MIN_RANGE_M {
        return Err(Error::Degenerate(format!(
            "receiver and satellite prn {} are coincident",
            sat.prn_id
        )));
    }
    let unit = los / range;
    let radial = (sat.velocity_mps - rx.velocity_mps).dot(&unit);
    Ok(-radial * (1.0 + rx.clock_drift) * carrier_freq_hz / SPEED_OF_LIGHT)
}

/// M×3 delay Jacobian: row i is (1/c)·(p − p_i)ᵀ/‖p − p_i‖, the gradient
/// of τ_i with respect to receiver position.
pub fn geometry_jacobian(rx: &ReceiverState, satellites: &[SatelliteState]) -> Result<DMatrix<f64>> {
    let mut jac = DMatrix::zeros(satellites.len(), 3);
    for (i, sat) in satellites.iter().enumerate() {
        let los = rx.position_m - sat.position_m;
        let range = los.norm();
        if range < MIN_RANGE_M {
            return Err(Error::Degenerate(format!(
                "receiver and satellite prn {} are coincident",
                sat.prn_id
            )));
        }
        let row = los / (range * SPEED_OF_LIGHT);
        for (j, v) in row.iter().enumerate() {
            jac[(i, j)] = *v;
        }
    }
    Ok(jac)
}

/// Delay Jacobian augmented with a clock column: the receiver clock is
/// parameterized as c·δt (meters), so every satellite sees ∂τ/∂(cδt) = 1/c.
pub fn geometry_jacobian_with_clock(
    rx: &ReceiverState,
    satellites: &[SatelliteState],
) -> Result<DMatrix<f64>> {
    let pos = geometry_jacobian(rx, satellites)?;
    let m = satellites.len();
    let mut jac = DMatrix::zeros(m, 4);
    jac.view_mut((0, 0), (m, 3)).copy_from(&pos);
    for i in 0..m {
        jac[(i, 3)] = 1.0 / SPEED_OF_LIGHT;
    }
    Ok(jac)
}
