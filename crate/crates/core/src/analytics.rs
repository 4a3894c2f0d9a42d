//! Closed-form Fisher information, Cramér–Rao bounds, and the
//! loss-of-efficiency predictions for Huber-based robust processing.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::synth::ComplexSignal;

/// Complementary error function, accurate to better than 1e-12 over the
/// real line: a nonalternating series below the branch point, a continued
/// fraction above it.
pub fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    const SQRT_PI: f64 = 1.772_453_850_905_516;
    if x < 2.5 {
        // erf(x) = (2x/√π)·e^{−x²}·Σ (2x²)^n / (2n+1)!!, all terms positive
        let x2 = x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut n = 0u32;
        loop {
            n += 1;
            term *= 2.0 * x2 / (2.0 * n as f64 + 1.0);
            sum += term;
            if term < 1e-18 * sum || n > 300 {
                break;
            }
        }
        1.0 - (2.0 * x / SQRT_PI) * (-x2).exp() * sum
    } else {
        // √π·e^{x²}·erfc(x) = 1/(x + (1/2)/(x + (2/2)/(x + (3/2)/(x + …))))
        let mut tail = 0.0;
        for n in (1..=80).rev() {
            tail = (n as f64 / 2.0) / (x + tail);
        }
        (-x * x).exp() / (SQRT_PI * (x + tail))
    }
}

/// Mean quadratic bandwidth ξ² = Σ|s′[n]|² / Σ|s[n]|², with s′ the first
/// difference scaled by the sampling rate.
pub fn mqbd(code_samples: &ComplexSignal) -> Result<f64> {
    code_samples.validate()?;
    let fs = code_samples.sample_rate_hz;
    let energy: f64 = code_samples.samples.iter().map(|s| s.norm_sqr()).sum();
    if energy <= 0.0 {
        return Err(Error::Degenerate("zero-energy signal has no MQBD".into()));
    }
    let deriv_energy: f64 = code_samples
        .samples
        .windows(2)
        .map(|w| ((w[1] - w[0]) * fs).norm_sqr())
        .sum();
    Ok(deriv_energy / energy)
}

/// Inputs of the position-domain Fisher information: the delay Jacobian
/// (M×3, or M×4 with the clock column), per-satellite MQBD and SNR
/// diagonals, and the correlation-form scale constant.
#[derive(Debug, Clone)]
pub struct FimInputs {
    pub jacobian: DMatrix<f64>,
    pub mqbd: Vec<f64>,
    pub snr: Vec<f64>,
    pub k_out: f64,
}

impl FimInputs {
    pub fn validate(&self) -> Result<()> {
        let m = self.jacobian.nrows();
        if self.mqbd.len() != m || self.snr.len() != m {
            return Err(Error::InvalidArgument(format!(
                "jacobian rows {m} must match mqbd ({}) and snr ({}) lengths",
                self.mqbd.len(),
                self.snr.len()
            )));
        }
        if self.snr.iter().any(|&s| s < 0.0) {
            return Err(Error::InvalidArgument("SNR entries must be ≥ 0".into()));
        }
        if self.mqbd.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::InvalidArgument("MQBD entries must be > 0".into()));
        }
        Ok(())
    }
}

/// Fisher information 2·PᵀΞΓP over the Jacobian's parameterization.
pub fn fim(inputs: &FimInputs) -> Result<DMatrix<f64>> {
    inputs.validate()?;
    let m = inputs.jacobian.nrows();
    let k = inputs.jacobian.ncols();
    let mut info = DMatrix::zeros(k, k);
    for i in 0..m {
        let row = inputs.jacobian.row(i);
        let w = 2.0 * inputs.k_out * inputs.mqbd[i] * inputs.snr[i];
        for a in 0..k {
            for b in 0..k {
                info[(a, b)] += w * row[a] * row[b];
            }
        }
    }
    Ok(info)
}

/// Inverse of the Fisher information. Fails with a condition-number
/// diagnostic when the geometry leaves the FIM singular.
pub fn crb(inputs: &FimInputs) -> Result<DMatrix<f64>> {
    let info = fim(inputs)?;
    let svd = info.clone().svd(false, false);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let min_sv = svd.singular_values.iter().cloned().fold(f64::MAX, f64::min);
    if min_sv <= 0.0 || max_sv / min_sv > 1e12 {
        return Err(Error::Degenerate(format!(
            "FIM is singular or near-singular (condition number {:.3e}); \
             at least 3 satellites in general position are required",
            if min_sv > 0.0 { max_sv / min_sv } else { f64::INFINITY }
        )));
    }
    info.try_inverse().ok_or_else(|| {
        Error::Degenerate("FIM inversion failed despite conditioning check".into())
    })
}

/// Amplitude and variance distortion of a small signal in Gaussian noise
/// after the Huber nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HuberLossFactors {
    /// ᾱ/α ∈ (0, 1].
    pub amp_factor: f64,
    /// σ̄²/σ² ∈ (0, 1].
    pub var_factor: f64,
}

/// Distortion factors for threshold `th` against noise deviation
/// `sigma_n`:
///   amp = 1 − e^{−T²/2σ²} + (√π/2)·(T/√2σ)·erfc(T/√2σ)
///   var = 1 − e^{−T²/2σ²}
pub fn huber_loss_factors(th: f64, sigma_n: f64) -> HuberLossFactors {
    let t = th / (std::f64::consts::SQRT_2 * sigma_n);
    let var_factor = 1.0 - (-t * t).exp();
    let amp_factor =
        var_factor + (std::f64::consts::PI.sqrt() / 2.0) * t * erfc(t);
    HuberLossFactors {
        amp_factor,
        var_factor,
    }
}

/// Which RIM composition the loss-of-efficiency prediction describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoeMode {
    /// One nonlinearity, in either the time or frequency domain (the
    /// closed forms coincide).
    SingleDomain,
    /// Two cascaded domains; both distortion factors square.
    DualDomain,
}

/// Post-correlation SNR loss of the Huber-cleaned estimator in dB:
/// −10·log10(amp²/var) for a single domain, with squared factors for the
/// dual-domain cascade.
pub fn loe_db(th: f64, sigma_n: f64, mode: LoeMode) -> f64 {
    let f = huber_loss_factors(th, sigma_n);
    match mode {
        LoeMode::SingleDomain => -10.0 * (f.amp_factor.powi(2) / f.var_factor).log10(),
        LoeMode::DualDomain => {
            let amp = f.amp_factor.powi(2);
            let var = f.var_factor.powi(2);
            -10.0 * (amp.powi(2) / var).log10()
        }
    }
}

/// LoE evaluated along a normalized-threshold axis (Th/σ̂) for plotting
/// against Monte Carlo results.
pub fn loe_curve(th_over_sigma_axis: &[f64], mode: LoeMode) -> Result<Vec<(f64, f64)>> {
    if th_over_sigma_axis.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::InvalidArgument(
            "threshold axis must be positive".into(),
        ));
    }
    Ok(th_over_sigma_axis
        .iter()
        .map(|&t| (t, loe_db(t, 1.0, mode)))
        .collect())
}
