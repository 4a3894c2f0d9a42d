//! Standard and robust cross-ambiguity functions, acquisition grids, and
//! the direct-position cost surface.

use nalgebra::Vector3;
use num_complex::Complex64;

use crate::constellation::{delay, doppler, ReceiverState, Scenario};
use crate::error::{Error, Result};
use crate::fft::{fft_forward, fft_inverse};
use crate::rim::{apply_rim, RimConfig};
use crate::synth::{gen_ca_code, ComplexSignal, PrnCode, CODE_PERIOD_S};
use crate::SPEED_OF_LIGHT;

/// One cross-ambiguity evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CafValue {
    pub value: Complex64,
    pub tau_s: f64,
    pub doppler_hz: f64,
    pub prn_id: u8,
}

/// Dense CAF evaluation over a delay/Doppler grid.
#[derive(Debug, Clone)]
pub struct CafGrid {
    pub tau_axis: Vec<f64>,
    pub doppler_axis: Vec<f64>,
    /// values[d][t] corresponds to (doppler_axis[d], tau_axis[t]).
    pub values: Vec<Vec<Complex64>>,
    pub prn_id: u8,
}

impl CafGrid {
    /// Indices (doppler, tau) of the largest |value|².
    pub fn peak_indices(&self) -> (usize, usize) {
        let mut best = (0, 0);
        let mut best_mag = f64::NEG_INFINITY;
        for (d, row) in self.values.iter().enumerate() {
            for (t, v) in row.iter().enumerate() {
                let m = v.norm_sqr();
                if m > best_mag {
                    best_mag = m;
                    best = (d, t);
                }
            }
        }
        best
    }

    /// The natural all-lags delay axis for a block: τ = k/f_s, k = 0..N-1.
    pub fn full_lag_axis(n: usize, sample_rate_hz: f64) -> Vec<f64> {
        (0..n).map(|k| k as f64 / sample_rate_hz).collect()
    }
}

#[inline]
fn chip_floor(n: i64, tau_s: f64, sample_rate_hz: f64, chip_rate_hz: f64) -> i64 {
    ((n as f64 / sample_rate_hz - tau_s) * chip_rate_hz).floor() as i64
}

/// Exact CAF of a Doppler-wiped block against the zero-order-hold code,
/// computed from prefix sums by walking chip segments. `prefix[n]` holds
/// Σ_{m<n} y[m].
fn caf_prefix_walk(
    prefix: &[Complex64],
    chips: &[i8],
    tau_s: f64,
    sample_rate_hz: f64,
    chip_rate_hz: f64,
) -> Complex64 {
    let n_total = (prefix.len() - 1) as i64;
    let code_len = chips.len() as i64;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut n_cur: i64 = 0;
    let mut s_cur = prefix[0];
    let mut j = chip_floor(0, tau_s, sample_rate_hz, chip_rate_hz);
    loop {
        // first sample belonging to chip j+1
        let b = ((j + 1) as f64 / chip_rate_hz + tau_s) * sample_rate_hz;
        let mut n_next = b.ceil() as i64;
        if (b - b.round()).abs() < 1e-6 {
            // boundary within rounding of a sample instant: defer to the
            // canonical chip map so all evaluation paths agree
            n_next = (b.round() as i64).max(n_cur);
            while n_next > n_cur && chip_floor(n_next - 1, tau_s, sample_rate_hz, chip_rate_hz) > j
            {
                n_next -= 1;
            }
            while n_next < n_total && chip_floor(n_next, tau_s, sample_rate_hz, chip_rate_hz) <= j {
                n_next += 1;
            }
        }
        let end = n_next.min(n_total);
        if end > n_cur {
            let s_next = prefix[end as usize];
            let c = chips[j.rem_euclid(code_len) as usize] as f64;
            acc.re += c * (s_next.re - s_cur.re);
            acc.im += c * (s_next.im - s_cur.im);
            s_cur = s_next;
            n_cur = end;
        }
        if n_next >= n_total {
            return acc;
        }
        j += 1;
    }
}

fn wipe_doppler(samples: &[Complex64], doppler_hz: f64, sample_rate_hz: f64) -> Vec<Complex64> {
    let step = Complex64::from_polar(
        1.0,
        -2.0 * std::f64::consts::PI * doppler_hz / sample_rate_hz,
    );
    let mut rot = Complex64::new(1.0, 0.0);
    let mut out = Vec::with_capacity(samples.len());
    for (n, s) in samples.iter().enumerate() {
        if n % 4096 == 0 {
            rot = Complex64::from_polar(
                1.0,
                -2.0 * std::f64::consts::PI * doppler_hz * n as f64 / sample_rate_hz,
            );
        }
        out.push(s * rot);
        rot *= step;
    }
    out
}

fn prefix_sums(y: &[Complex64]) -> Vec<Complex64> {
    let mut prefix = Vec::with_capacity(y.len() + 1);
    let mut acc = Complex64::new(0.0, 0.0);
    prefix.push(acc);
    for v in y {
        acc += v;
        prefix.push(acc);
    }
    prefix
}

fn samples_per_period(sample_rate_hz: f64) -> usize {
    (CODE_PERIOD_S * sample_rate_hz).round() as usize
}

/// Coherent cross-ambiguity value Σ_n x[n]·c(nT_s − τ)·e^{−j2π f_d n T_s}
/// over the whole passed signal.
pub fn caf(x: &ComplexSignal, code: &PrnCode, tau_s: f64, doppler_hz: f64) -> Result<CafValue> {
    x.validate()?;
    if x.duration_s() < CODE_PERIOD_S - 0.5 / x.sample_rate_hz {
        return Err(Error::InvalidArgument(format!(
            "signal spans {:.3e} s, less than one code period",
            x.duration_s()
        )));
    }
    let y = wipe_doppler(&x.samples, doppler_hz, x.sample_rate_hz);
    let prefix = prefix_sums(&y);
    let value = caf_prefix_walk(&prefix, &code.chips, tau_s, x.sample_rate_hz, code.chip_rate_hz);
    Ok(CafValue {
        value,
        tau_s,
        doppler_hz,
        prn_id: code.prn_id,
    })
}

/// CAF of the RIM-cleaned signal; an empty chain reduces to [`caf`].
pub fn robust_caf(
    x: &ComplexSignal,
    rim: &RimConfig,
    code: &PrnCode,
    tau_s: f64,
    doppler_hz: f64,
) -> Result<CafValue> {
    let cleaned = apply_rim(x, rim);
    caf(&cleaned, code, tau_s, doppler_hz)
}

fn tau_axis_is_sample_lags(tau_axis: &[f64], sample_rate_hz: f64) -> bool {
    let ts = 1.0 / sample_rate_hz;
    tau_axis
        .iter()
        .enumerate()
        .all(|(k, &tau)| (tau - (tau_axis[0] + k as f64 * ts)).abs() < 1e-12 * ts.max(1.0))
}

/// Dense CAF evaluation. Sample-spaced delay axes use one circular
/// correlation per Doppler bin (O(N log N)); arbitrary axes fall back to
/// exact per-point evaluation.
pub fn caf_grid(
    x: &ComplexSignal,
    code: &PrnCode,
    tau_axis: &[f64],
    doppler_axis: &[f64],
) -> Result<CafGrid> {
    x.validate()?;
    if tau_axis.is_empty() || doppler_axis.is_empty() {
        return Err(Error::InvalidArgument("empty CAF grid axis".into()));
    }
    if x.duration_s() < CODE_PERIOD_S - 0.5 / x.sample_rate_hz {
        return Err(Error::InvalidArgument(
            "signal spans less than one code period".into(),
        ));
    }
    let n = x.len();
    let period = samples_per_period(x.sample_rate_hz);
    let fft_ok = n % period == 0 && tau_axis_is_sample_lags(tau_axis, x.sample_rate_hz);

    let mut values = Vec::with_capacity(doppler_axis.len());
    for &fd in doppler_axis {
        let y = wipe_doppler(&x.samples, fd, x.sample_rate_hz);
        if fft_ok {
            // circular correlation against the code replica anchored at the
            // first axis delay
            let mut yf = y.clone();
            fft_forward(&mut yf);
            let mut cf: Vec<Complex64> = (0..n)
                .map(|k| {
                    let t = k as f64 / x.sample_rate_hz - tau_axis[0];
                    let chip = (t * code.chip_rate_hz).floor() as i64;
                    let c = code.chips[chip.rem_euclid(code.chips.len() as i64) as usize] as f64;
                    Complex64::new(c, 0.0)
                })
                .collect();
            fft_forward(&mut cf);
            let mut prod: Vec<Complex64> = yf
                .iter()
                .zip(cf.iter())
                .map(|(a, b)| a * b.conj())
                .collect();
            fft_inverse(&mut prod);
            let scale = 1.0 / n as f64;
            let row: Vec<Complex64> = (0..tau_axis.len())
                .map(|k| prod[k % n] * scale)
                .collect();
            values.push(row);
        } else {
            let prefix = prefix_sums(&y);
            let row: Vec<Complex64> = tau_axis
                .iter()
                .map(|&tau| {
                    caf_prefix_walk(&prefix, &code.chips, tau, x.sample_rate_hz, code.chip_rate_hz)
                })
                .collect();
            values.push(row);
        }
    }
    Ok(CafGrid {
        tau_axis: tau_axis.to_vec(),
        doppler_axis: doppler_axis.to_vec(),
        values,
        prn_id: code.prn_id,
    })
}

/// Direct-position cost Σ_i Σ_blocks |CAF_i(τ_i(κ), f_{d,i}(κ))|² of a
/// cleaned signal. The signal is split into one-code-period coherent
/// blocks that accumulate noncoherently.
pub fn dpe_cost(x_clean: &ComplexSignal, kappa: &ReceiverState, scenario: &Scenario) -> Result<f64> {
    x_clean.validate()?;
    let period = samples_per_period(x_clean.sample_rate_hz);
    if x_clean.len() < period {
        return Err(Error::InvalidArgument(
            "signal spans less than one code period".into(),
        ));
    }
    let n_blocks = x_clean.len() / period;
    let mut cost = 0.0;
    for sat in &scenario.satellites {
        let code = gen_ca_code(sat.prn_id)?;
        let tau = delay(kappa, sat)?;
        let fd = doppler(kappa, sat, scenario.carrier_freq_hz)?;
        let tau_mod = tau.rem_euclid(CODE_PERIOD_S);
        for b in 0..n_blocks {
            let block = ComplexSignal::new(
                x_clean.samples[b * period..(b + 1) * period].to_vec(),
                x_clean.sample_rate_hz,
            );
            let v = caf(&block, &code, tau_mod, fd)?;
            cost += v.value.norm_sqr();
        }
    }
    Ok(cost)
}

struct TableSat {
    /// Noncoherent delay-power profile Σ_b |R_b(lag)|² over one code
    /// period of lags.
    lag_power: Vec<f64>,
    position_m: Vector3<f64>,
    clock_bias_s: f64,
}

/// Coarse direct-position cost from per-satellite delay-power profiles on
/// the sample-lag grid (linear interpolation between lags). Each
/// evaluation costs a handful of lookups, which makes wide searches cheap;
/// the lag-grid resolution limits its accuracy to a few meters, so final
/// refinement belongs to [`DpeCostEvaluator`].
pub struct DelayPowerTables {
    sats: Vec<TableSat>,
    block_len: usize,
    sample_rate_hz: f64,
}

impl DelayPowerTables {
    pub fn new(
        x_clean: &ComplexSignal,
        scenario: &Scenario,
        doppler_anchor: &ReceiverState,
    ) -> Result<Self> {
        x_clean.validate()?;
        let block_len = samples_per_period(x_clean.sample_rate_hz);
        if x_clean.len() < block_len {
            return Err(Error::InvalidArgument(
                "signal spans less than one code period".into(),
            ));
        }
        let n_blocks = x_clean.len() / block_len;
        let mut sats = Vec::with_capacity(scenario.satellites.len());
        for sat in &scenario.satellites {
            let code = gen_ca_code(sat.prn_id)?;
            let fd = doppler(doppler_anchor, sat, scenario.carrier_freq_hz)?;
            let y = wipe_doppler(&x_clean.samples, fd, x_clean.sample_rate_hz);
            let mut cf: Vec<Complex64> = (0..block_len)
                .map(|k| {
                    let t = k as f64 / x_clean.sample_rate_hz;
                    let chip = (t * code.chip_rate_hz).floor() as i64;
                    let c = code.chips[chip.rem_euclid(code.chips.len() as i64) as usize] as f64;
                    Complex64::new(c, 0.0)
                })
                .collect();
            fft_forward(&mut cf);
            let mut lag_power = vec![0.0f64; block_len];
            let scale = 1.0 / block_len as f64;
            for b in 0..n_blocks {
                let mut yf = y[b * block_len..(b + 1) * block_len].to_vec();
                fft_forward(&mut yf);
                let mut prod: Vec<Complex64> = yf
                    .iter()
                    .zip(cf.iter())
                    .map(|(a, c)| a * c.conj())
                    .collect();
                fft_inverse(&mut prod);
                for (p, v) in lag_power.iter_mut().zip(&prod) {
                    *p += (v * scale).norm_sqr();
                }
            }
            sats.push(TableSat {
                lag_power,
                position_m: sat.position_m,
                clock_bias_s: sat.clock_bias_s,
            });
        }
        Ok(DelayPowerTables {
            sats,
            block_len,
            sample_rate_hz: x_clean.sample_rate_hz,
        })
    }

    /// Interpolated cost at a candidate position and clock bias (meters).
    /// A three-point parabola around the nearest lag keeps the correlation
    /// apex rounded instead of kinked, which the staged search relies on
    /// when it localizes the clock from this surface.
    pub fn cost(&self, position_m: &Vector3<f64>, clock_bias_m: f64) -> f64 {
        let mut cost = 0.0;
        let n = self.block_len;
        for sat in &self.sats {
            let range = (position_m - sat.position_m).norm();
            if range < 1.0 {
                return f64::NEG_INFINITY;
            }
            let tau = (range + clock_bias_m) / SPEED_OF_LIGHT - sat.clock_bias_s;
            let lag = (tau.rem_euclid(CODE_PERIOD_S)) * self.sample_rate_hz;
            let i0 = (lag.round() as usize) % n;
            let delta = lag - lag.round();
            let pm = sat.lag_power[(i0 + n - 1) % n];
            let p0 = sat.lag_power[i0];
            let pp = sat.lag_power[(i0 + 1) % n];
            cost += p0 + 0.5 * delta * (pp - pm) + 0.5 * delta * delta * (pp - 2.0 * p0 + pm);
        }
        cost
    }

    pub fn cost_at(&self, kappa: &ReceiverState) -> f64 {
        self.cost(&kappa.position_m, kappa.clock_bias_s * SPEED_OF_LIGHT)
    }

    /// Per-satellite delays (seconds, modulo the code period) at the
    /// profile maxima.
    pub fn peak_delays(&self) -> Vec<f64> {
        self.sats
            .iter()
            .map(|sat| {
                let (idx, _) = sat
                    .lag_power
                    .iter()
                    .enumerate()
                    .fold((0usize, f64::NEG_INFINITY), |acc, (i, &p)| {
                        if p > acc.1 {
                            (i, p)
                        } else {
                            acc
                        }
                    });
                idx as f64 / self.sample_rate_hz
            })
            .collect()
    }
}

struct LocalSat {
    /// Delay of the window center, seconds (modulo code period).
    tau_center_s: f64,
    /// Noncoherent power profile sampled at `spacing_s` around the center.
    power: Vec<f64>,
    position_m: Vector3<f64>,
    clock_bias_s: f64,
}

/// Exact-shaped delay-power profiles sampled on a fine local window around
/// a reference state. Evaluations are interpolated lookups, so searches in
/// the window cost microseconds while tracking the true correlation shape
/// to the sampling resolution.
pub struct LocalDelayTables {
    sats: Vec<LocalSat>,
    spacing_s: f64,
    half_points: usize,
}

impl LocalDelayTables {
    /// Cost at a candidate inside the window; candidates whose delays
    /// leave the window return −∞.
    pub fn cost(&self, position_m: &Vector3<f64>, clock_bias_m: f64) -> f64 {
        let mut cost = 0.0;
        for sat in &self.sats {
            let range = (position_m - sat.position_m).norm();
            if range < 1.0 {
                return f64::NEG_INFINITY;
            }
            let tau = (range + clock_bias_m) / SPEED_OF_LIGHT - sat.clock_bias_s;
            let mut dt = (tau - sat.tau_center_s).rem_euclid(CODE_PERIOD_S);
            if dt > CODE_PERIOD_S / 2.0 {
                dt -= CODE_PERIOD_S;
            }
            let x = dt / self.spacing_s + self.half_points as f64;
            if x < 0.0 || x >= (sat.power.len() - 1) as f64 {
                return f64::NEG_INFINITY;
            }
            let i = x.floor() as usize;
            let frac = x - i as f64;
            cost += sat.power[i] * (1.0 - frac) + sat.power[i + 1] * frac;
        }
        cost
    }

    pub fn cost_at(&self, kappa: &ReceiverState) -> f64 {
        self.cost(&kappa.position_m, kappa.clock_bias_s * SPEED_OF_LIGHT)
    }
}

struct EvalSat {
    chips: Vec<i8>,
    /// Per-block prefix sums of the Doppler-wiped signal, flattened as
    /// n_blocks × (block_len + 1).
    prefix: Vec<Complex64>,
    position_m: Vector3<f64>,
    clock_bias_s: f64,
}

/// Precomputed per-trial cost evaluator for static-receiver searches.
///
/// Doppler wipe-off is frozen at the anchor state: within a few kilometers
/// of it the candidate-dependent Doppler change is a few hertz, an
/// attenuation below 10⁻⁴ per millisecond block, so the cost agrees with
/// [`dpe_cost`] to that order while each evaluation costs O(M·B·1023).
pub struct DpeCostEvaluator {
    sats: Vec<EvalSat>,
    block_len: usize,
    n_blocks: usize,
    sample_rate_hz: f64,
    chip_rate_hz: f64,
}

impl DpeCostEvaluator {
    pub fn new(
        x_clean: &ComplexSignal,
        scenario: &Scenario,
        doppler_anchor: &ReceiverState,
    ) -> Result<Self> {
        x_clean.validate()?;
        let block_len = samples_per_period(x_clean.sample_rate_hz);
        if x_clean.len() < block_len {
            return Err(Error::InvalidArgument(
                "signal spans less than one code period".into(),
            ));
        }
        let n_blocks = x_clean.len() / block_len;
        let mut sats = Vec::with_capacity(scenario.satellites.len());
        let mut chip_rate_hz = 0.0;
        for sat in &scenario.satellites {
            let code = gen_ca_code(sat.prn_id)?;
            chip_rate_hz = code.chip_rate_hz;
            let fd = doppler(doppler_anchor, sat, scenario.carrier_freq_hz)?;
            let y = wipe_doppler(&x_clean.samples, fd, x_clean.sample_rate_hz);
            let mut prefix = Vec::with_capacity(n_blocks * (block_len + 1));
            for b in 0..n_blocks {
                let mut acc = Complex64::new(0.0, 0.0);
                prefix.push(acc);
                for v in &y[b * block_len..(b + 1) * block_len] {
                    acc += v;
                    prefix.push(acc);
                }
            }
            sats.push(EvalSat {
                chips: code.chips,
                prefix,
                position_m: sat.position_m,
                clock_bias_s: sat.clock_bias_s,
            });
        }
        Ok(DpeCostEvaluator {
            sats,
            block_len,
            n_blocks,
            sample_rate_hz: x_clean.sample_rate_hz,
            chip_rate_hz,
        })
    }

    /// Cost at a candidate position and clock bias (the clock is carried in
    /// meters, z = c·δt). Degenerate geometry yields −∞ so searches reject
    /// the candidate.
    pub fn cost(&self, position_m: &Vector3<f64>, clock_bias_m: f64) -> f64 {
        let stride = self.block_len + 1;
        let mut cost = 0.0;
        for sat in &self.sats {
            let range = (position_m - sat.position_m).norm();
            if range < 1.0 {
                return f64::NEG_INFINITY;
            }
            let tau = (range + clock_bias_m) / SPEED_OF_LIGHT - sat.clock_bias_s;
            let tau_mod = tau.rem_euclid(CODE_PERIOD_S);
            for b in 0..self.n_blocks {
                let prefix = &sat.prefix[b * stride..(b + 1) * stride];
                let v = caf_prefix_walk(
                    prefix,
                    &sat.chips,
                    tau_mod,
                    self.sample_rate_hz,
                    self.chip_rate_hz,
                );
                cost += v.norm_sqr();
            }
        }
        cost
    }

    pub fn cost_at(&self, kappa: &ReceiverState) -> f64 {
        self.cost(&kappa.position_m, kappa.clock_bias_s * SPEED_OF_LIGHT)
    }

    /// Samples exact per-satellite power profiles on a window of
    /// ±`half_window_m` around the delays at `around`, spaced `spacing_m`
    /// (both in meters of delay).
    pub fn local_tables(
        &self,
        around: &ReceiverState,
        half_window_m: f64,
        spacing_m: f64,
    ) -> LocalDelayTables {
        let spacing_s = spacing_m / SPEED_OF_LIGHT;
        let half_points = (half_window_m / spacing_m).ceil() as usize;
        let stride = self.block_len + 1;
        let clock_m = around.clock_bias_s * SPEED_OF_LIGHT;
        let sats = self
            .sats
            .iter()
            .map(|sat| {
                let range = (around.position_m - sat.position_m).norm();
                let tau_center_s =
                    ((range + clock_m) / SPEED_OF_LIGHT - sat.clock_bias_s).rem_euclid(CODE_PERIOD_S);
                let mut power = vec![0.0f64; 2 * half_points + 1];
                for (k, p) in power.iter_mut().enumerate() {
                    let tau = (tau_center_s + (k as f64 - half_points as f64) * spacing_s)
                        .rem_euclid(CODE_PERIOD_S);
                    for b in 0..self.n_blocks {
                        let prefix = &sat.prefix[b * stride..(b + 1) * stride];
                        let v = caf_prefix_walk(
                            prefix,
                            &sat.chips,
                            tau,
                            self.sample_rate_hz,
                            self.chip_rate_hz,
                        );
                        *p += v.norm_sqr();
                    }
                }
                LocalSat {
                    tau_center_s,
                    power,
                    position_m: sat.position_m,
                    clock_bias_s: sat.clock_bias_s,
                }
            })
            .collect();
        LocalDelayTables {
            sats,
            spacing_s,
            half_points,
        }
    }
}
