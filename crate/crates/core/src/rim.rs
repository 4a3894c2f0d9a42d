//! Zero-memory nonlinearities and the single/dual-domain robust
//! interference mitigation pipelines applied ahead of correlation.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{fft_forward, fft_inverse};
use crate::synth::ComplexSignal;

/// Huber threshold rule constant giving high efficiency under nominal
/// Gaussian conditions.
pub const HUBER_MAD_SCALE: f64 = 1.345;
/// MAD-to-sigma consistency constant for Gaussian data.
pub const MAD_GAUSSIAN_CONSISTENCY: f64 = 0.6745;

/// Families of zero-memory nonlinearities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZmnlKind {
    Identity,
    Huber,
    ComplexSignum,
    Myriad,
}

/// How a Huber threshold is obtained for each processed block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdRule {
    /// Use the spec's `threshold` field as-is.
    Fixed,
    /// Threshold = scale × the per-component noise deviation estimated
    /// from the block via the MAD rule.
    MadScaled(f64),
}

/// A configured elementwise nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZmnlSpec {
    pub kind: ZmnlKind,
    /// Huber threshold T_h (linear), used when `threshold_rule` is `Fixed`.
    pub threshold: f64,
    /// Myriad linearity parameter K_C.
    pub linearity_param: f64,
    pub threshold_rule: ThresholdRule,
}

impl ZmnlSpec {
    pub fn identity() -> Self {
        ZmnlSpec {
            kind: ZmnlKind::Identity,
            threshold: 0.0,
            linearity_param: 0.0,
            threshold_rule: ThresholdRule::Fixed,
        }
    }

    pub fn huber_fixed(threshold: f64) -> Self {
        ZmnlSpec {
            kind: ZmnlKind::Huber,
            threshold,
            linearity_param: 0.0,
            threshold_rule: ThresholdRule::Fixed,
        }
    }

    /// Huber with per-block threshold `scale × σ̂_component`.
    pub fn huber_mad(scale: f64) -> Self {
        ZmnlSpec {
            kind: ZmnlKind::Huber,
            threshold: 0.0,
            linearity_param: 0.0,
            threshold_rule: ThresholdRule::MadScaled(scale),
        }
    }

    pub fn complex_signum() -> Self {
        ZmnlSpec {
            kind: ZmnlKind::ComplexSignum,
            threshold: 0.0,
            linearity_param: 0.0,
            threshold_rule: ThresholdRule::Fixed,
        }
    }

    pub fn myriad(linearity_param: f64) -> Self {
        ZmnlSpec {
            kind: ZmnlKind::Myriad,
            threshold: 0.0,
            linearity_param,
            threshold_rule: ThresholdRule::Fixed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            ZmnlKind::Huber => match self.threshold_rule {
                ThresholdRule::Fixed if !(self.threshold > 0.0) => Err(Error::InvalidArgument(
                    "fixed Huber threshold must be > 0".into(),
                )),
                ThresholdRule::MadScaled(c) if !(c > 0.0) => Err(Error::InvalidArgument(
                    "MAD threshold scale must be > 0".into(),
                )),
                _ => Ok(()),
            },
            ZmnlKind::Myriad => {
                if !(self.linearity_param > 0.0) {
                    return Err(Error::InvalidArgument(
                        "myriad linearity parameter must be > 0".into(),
                    ));
                }
                if !matches!(self.threshold_rule, ThresholdRule::Fixed) {
                    return Err(Error::InvalidArgument(
                        "myriad supports only fixed parameters".into(),
                    ));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// z clipped to magnitude T_h with its phase preserved; 0 maps to 0.
#[inline]
pub fn huber_zmnl(z: Complex64, threshold: f64) -> Complex64 {
    let mag = z.norm();
    if mag <= threshold {
        z
    } else {
        z * (threshold / mag)
    }
}

/// z/|z| for z ≠ 0, and 0 at the origin.
#[inline]
pub fn complex_signum_zmnl(z: Complex64) -> Complex64 {
    let mag = z.norm();
    if mag == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        z / mag
    }
}

/// K_C·z/(K_C + |z|²).
#[inline]
pub fn myriad_zmnl(z: Complex64, linearity_param: f64) -> Complex64 {
    z * (linearity_param / (linearity_param + z.norm_sqr()))
}

fn median_in_place(v: &mut [f64]) -> f64 {
    let n = v.len();
    let (_, mid, _) = v.select_nth_unstable_by(n / 2, |a, b| a.partial_cmp(b).unwrap());
    let hi = *mid;
    if n % 2 == 1 {
        hi
    } else {
        let lo = v[..n / 2].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lo + hi)
    }
}

fn mad_sigma_component(samples: &[Complex64]) -> f64 {
    // Exactly-zero samples are structural (brick-wall-filtered bins carry
    // no noise at all) and are excluded so they cannot drag the scale
    // estimate down; continuous noise never produces exact zeros.
    let live: Vec<&Complex64> = samples
        .iter()
        .filter(|s| s.re != 0.0 || s.im != 0.0)
        .collect();
    if live.is_empty() {
        return 0.0;
    }
    // deviations about each component's own median, pooled
    let mut re: Vec<f64> = live.iter().map(|s| s.re).collect();
    let mut im: Vec<f64> = live.iter().map(|s| s.im).collect();
    let med_re = median_in_place(&mut re);
    let med_im = median_in_place(&mut im);
    let mut pooled = re;
    for v in pooled.iter_mut() {
        *v = (*v - med_re).abs();
    }
    for v in im {
        pooled.push((v - med_im).abs());
    }
    median_in_place(&mut pooled) / MAD_GAUSSIAN_CONSISTENCY
}

/// Robust noise-scale estimate: the MAD of the pooled real and imaginary
/// components divided by 0.6745 estimates the per-component deviation;
/// the returned value is the complex-envelope deviation √2·σ̂_component.
pub fn estimate_sigma_mad(x: &ComplexSignal) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot estimate scale of an empty signal".into(),
        ));
    }
    Ok(std::f64::consts::SQRT_2 * mad_sigma_component(&x.samples))
}

fn apply_zmnl_slice(samples: &mut [Complex64], spec: &ZmnlSpec, scale_support: Option<&[usize]>) {
    match spec.kind {
        ZmnlKind::Identity => {}
        ZmnlKind::ComplexSignum => {
            for s in samples.iter_mut() {
                *s = complex_signum_zmnl(*s);
            }
        }
        ZmnlKind::Myriad => {
            let kc = spec.linearity_param;
            for s in samples.iter_mut() {
                *s = myriad_zmnl(*s, kc);
            }
        }
        ZmnlKind::Huber => {
            let th = match spec.threshold_rule {
                ThresholdRule::Fixed => spec.threshold,
                ThresholdRule::MadScaled(c) => match scale_support {
                    Some(idx) => {
                        let sub: Vec<Complex64> = idx.iter().map(|&k| samples[k]).collect();
                        c * mad_sigma_component(&sub)
                    }
                    None => c * mad_sigma_component(samples),
                },
            };
            for s in samples.iter_mut() {
                *s = huber_zmnl(*s, th);
            }
        }
    }
}

/// Bin indices of a length-`n` block that fall inside the one-sided
/// passband.
fn passband_bins(n: usize, sample_rate_hz: f64, bandwidth_hz: f64) -> Vec<usize> {
    let df = sample_rate_hz / n as f64;
    (0..n)
        .filter(|&k| {
            let freq = if k <= n / 2 {
                k as f64 * df
            } else {
                (k as f64 - n as f64) * df
            };
            freq.abs() <= bandwidth_hz
        })
        .collect()
}

/// Applies the nonlinearity elementwise over the whole signal, treating it
/// as one block for any MAD-derived threshold.
pub fn apply_zmnl(x: &ComplexSignal, spec: &ZmnlSpec) -> ComplexSignal {
    let mut out = x.clone();
    apply_zmnl_slice(&mut out.samples, spec, None);
    out
}

fn forward_slice(samples: &mut [Complex64]) {
    fft_forward(samples);
    let scale = 1.0 / (samples.len() as f64).sqrt();
    for s in samples.iter_mut() {
        *s *= scale;
    }
}

fn inverse_slice(samples: &mut [Complex64]) {
    fft_inverse(samples);
    let scale = 1.0 / (samples.len() as f64).sqrt();
    for s in samples.iter_mut() {
        *s *= scale;
    }
}

/// Unitary DFT (1/√N scaling), so that `inverse ∘ forward` is the identity
/// and energy is preserved.
pub fn forward_transform(x: &ComplexSignal) -> ComplexSignal {
    let mut out = x.clone();
    forward_slice(&mut out.samples);
    out
}

/// Unitary inverse DFT.
pub fn inverse_transform(x: &ComplexSignal) -> ComplexSignal {
    let mut out = x.clone();
    inverse_slice(&mut out.samples);
    out
}

/// Processing domain of one RIM stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RimDomain {
    Time,
    Frequency,
}

/// One stage of the cleaning chain: a domain and the nonlinearity to apply
/// there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RimStage {
    pub domain: RimDomain,
    pub zmnl: ZmnlSpec,
}

/// Ordered cleaning chain (up to two stages) with the block length the
/// signal is split into before processing.
#[derive(Debug, Clone, PartialEq)]
pub struct RimConfig {
    pub chain: Vec<RimStage>,
    pub block_size: usize,
    /// One-sided front-end passband, when the receiver has one. Bins
    /// outside it carry no noise, so frequency-domain threshold estimation
    /// is restricted to the in-band support.
    pub frontend_bandwidth_hz: Option<f64>,
}

impl RimConfig {
    pub fn new(chain: Vec<RimStage>, block_size: usize) -> Result<Self> {
        if chain.len() > 2 {
            return Err(Error::InvalidArgument(format!(
                "RIM chain supports at most two stages, got {}",
                chain.len()
            )));
        }
        if block_size == 0 {
            return Err(Error::InvalidArgument("block size must be ≥ 1".into()));
        }
        for stage in &chain {
            stage.zmnl.validate()?;
        }
        Ok(RimConfig {
            chain,
            block_size,
            frontend_bandwidth_hz: None,
        })
    }

    /// Declares the receiver front-end passband for frequency-domain
    /// threshold estimation.
    pub fn with_frontend_bandwidth(mut self, bandwidth_hz: Option<f64>) -> Self {
        self.frontend_bandwidth_hz = bandwidth_hz;
        self
    }

    /// Passthrough configuration.
    pub fn none(block_size: usize) -> Self {
        RimConfig {
            chain: Vec::new(),
            block_size,
            frontend_bandwidth_hz: None,
        }
    }

    pub fn is_passthrough(&self) -> bool {
        self.chain.is_empty()
    }
}

/// Named RIM processing schemes built around the Huber nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RimScheme {
    None,
    TimeDomain,
    FrequencyDomain,
    DualTimeFreq,
    DualFreqTime,
}

impl RimScheme {
    pub const ALL: [RimScheme; 5] = [
        RimScheme::None,
        RimScheme::TimeDomain,
        RimScheme::FrequencyDomain,
        RimScheme::DualTimeFreq,
        RimScheme::DualFreqTime,
    ];

    /// Short label used in result tables.
    pub fn label(&self) -> &'static str {
        match self {
            RimScheme::None => "none",
            RimScheme::TimeDomain => "td",
            RimScheme::FrequencyDomain => "fd",
            RimScheme::DualTimeFreq => "dd_tf",
            RimScheme::DualFreqTime => "dd_ft",
        }
    }

    pub fn from_label(label: &str) -> Result<Self> {
        match label {
            "none" => Ok(RimScheme::None),
            "td" => Ok(RimScheme::TimeDomain),
            "fd" => Ok(RimScheme::FrequencyDomain),
            "dd_tf" => Ok(RimScheme::DualTimeFreq),
            "dd_ft" => Ok(RimScheme::DualFreqTime),
            other => Err(Error::Config(format!("unknown RIM scheme '{other}'"))),
        }
    }

    /// Builds the Huber chain for this scheme with MAD-scaled thresholds.
    pub fn config(&self, mad_scale: f64, block_size: usize) -> RimConfig {
        let huber = ZmnlSpec::huber_mad(mad_scale);
        let t = RimStage {
            domain: RimDomain::Time,
            zmnl: huber,
        };
        let f = RimStage {
            domain: RimDomain::Frequency,
            zmnl: huber,
        };
        let chain = match self {
            RimScheme::None => vec![],
            RimScheme::TimeDomain => vec![t],
            RimScheme::FrequencyDomain => vec![f],
            RimScheme::DualTimeFreq => vec![t, f],
            RimScheme::DualFreqTime => vec![f, t],
        };
        RimConfig {
            chain,
            block_size,
            frontend_bandwidth_hz: None,
        }
    }
}

/// Runs the cleaning chain block-by-block. Frequency-domain stages wrap the
/// nonlinearity between the unitary forward and inverse transforms; chain
/// stages compose in declared order; an empty chain is a passthrough. A
/// final partial block, when present, is processed at its own length.
pub fn apply_rim(x: &ComplexSignal, config: &RimConfig) -> ComplexSignal {
    if config.chain.is_empty() {
        return x.clone();
    }
    let mut out = x.clone();
    let block = config.block_size.min(out.samples.len());
    if block == 0 {
        return out;
    }
    let mut support_cache: Vec<(usize, Vec<usize>)> = Vec::new();
    for chunk in out.samples.chunks_mut(block) {
        for stage in &config.chain {
            match stage.domain {
                RimDomain::Time => apply_zmnl_slice(chunk, &stage.zmnl, None),
                RimDomain::Frequency => {
                    forward_slice(chunk);
                    let support = config.frontend_bandwidth_hz.map(|bw| {
                        if let Some((_, idx)) =
                            support_cache.iter().find(|(n, _)| *n == chunk.len())
                        {
                            idx.clone()
                        } else {
                            let idx = passband_bins(chunk.len(), x.sample_rate_hz, bw);
                            support_cache.push((chunk.len(), idx.clone()));
                            idx
                        }
                    });
                    apply_zmnl_slice(chunk, &stage.zmnl, support.as_deref());
                    inverse_slice(chunk);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gaussian_signal(n: usize, sigma_c: f64, seed: u64) -> ComplexSignal {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples = (0..n)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re * sigma_c, im * sigma_c)
            })
            .collect();
        ComplexSignal::new(samples, 1e6)
    }

    #[test]
    fn huber_linear_region_and_clip() {
        let th = 2.0;
        let z = Complex64::new(0.6, 0.8); // |z| = 1 = 0.5·Th
        assert_eq!(huber_zmnl(z, th), z);
        let z = Complex64::from_polar(2.0 * th, std::f64::consts::FRAC_PI_3);
        let out = huber_zmnl(z, th);
        let expected = Complex64::from_polar(th, std::f64::consts::FRAC_PI_3);
        assert!((out - expected).norm() < 1e-12);
        assert_eq!(huber_zmnl(Complex64::new(0.0, 0.0), th), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn huber_continuous_at_threshold() {
        let th = 1.7;
        for eps in [1e-9, 1e-12] {
            let below = huber_zmnl(Complex64::from_polar(th - eps, 0.4), th);
            let above = huber_zmnl(Complex64::from_polar(th + eps, 0.4), th);
            assert!((below - above).norm() < 3.0 * eps);
        }
    }

    #[test]
    fn signum_basics() {
        let out = complex_signum_zmnl(Complex64::new(3.0, 4.0));
        assert!((out - Complex64::new(0.6, 0.8)).norm() < 1e-15);
        assert_eq!(
            complex_signum_zmnl(Complex64::new(0.0, 0.0)),
            Complex64::new(0.0, 0.0)
        );
    }

    #[test]
    fn myriad_zero_peak_and_tail() {
        let kc = 4.0;
        assert_eq!(
            myriad_zmnl(Complex64::new(0.0, 0.0), kc),
            Complex64::new(0.0, 0.0)
        );
        // |z| = √Kc maximizes the output magnitude at √Kc/2
        let z = Complex64::from_polar(kc.sqrt(), 1.0);
        assert!((myriad_zmnl(z, kc).norm() - kc.sqrt() / 2.0).abs() < 1e-12);
        // slightly off the peak the magnitude is smaller
        for r in [0.9 * kc.sqrt(), 1.1 * kc.sqrt()] {
            let out = myriad_zmnl(Complex64::from_polar(r, 1.0), kc);
            assert!(out.norm() < kc.sqrt() / 2.0);
        }
        // large inputs are suppressed toward Kc/|z|
        let big = Complex64::from_polar(1e6, 0.3);
        let out = myriad_zmnl(big, kc);
        assert!((out.norm() - kc / 1e6).abs() / (kc / 1e6) < 1e-5);
    }

    proptest! {
        #[test]
        fn zmnls_preserve_phase_and_bounds(re in -50.0f64..50.0, im in -50.0f64..50.0) {
            let z = Complex64::new(re, im);
            prop_assume!(z.norm() > 1e-12);
            let th = 1.5;
            let kc = 2.0;
            for (out, bound) in [
                (huber_zmnl(z, th), z.norm().max(th)),
                (complex_signum_zmnl(z), 1.0),
                (myriad_zmnl(z, kc), (kc.sqrt() / 2.0).max(z.norm())),
            ] {
                if out.norm() > 0.0 {
                    let dphase = (out.arg() - z.arg()).abs();
                    prop_assert!(dphase < 1e-9 || (dphase - 2.0*std::f64::consts::PI).abs() < 1e-9);
                }
                prop_assert!(out.norm() <= bound + 1e-12);
            }
        }
    }

    #[test]
    fn mad_constant_signal_is_zero() {
        let x = ComplexSignal::new(vec![Complex64::new(3.0, -2.0); 100], 1e6);
        assert_eq!(estimate_sigma_mad(&x).unwrap(), 0.0);
    }

    #[test]
    fn mad_gaussian_consistency() {
        let x = gaussian_signal(100_000, 1.0, 7); // σ_n² = 2
        let sigma = estimate_sigma_mad(&x).unwrap();
        let expected = std::f64::consts::SQRT_2;
        assert!(
            (sigma - expected).abs() / expected < 0.02,
            "sigma {sigma} vs {expected}"
        );
    }

    #[test]
    fn mad_robust_to_gross_contamination() {
        let mut x = gaussian_signal(100_000, 1.0, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let idx = rng.gen_range(0..x.samples.len());
            x.samples[idx] = Complex64::from_polar(100.0, rng.gen_range(0.0..6.28));
        }
        let sigma = estimate_sigma_mad(&x).unwrap();
        let expected = std::f64::consts::SQRT_2;
        assert!(
            (sigma - expected).abs() / expected < 0.05,
            "sigma {sigma} vs {expected}"
        );
    }

    #[test]
    fn apply_zmnl_identity_bit_exact() {
        let x = gaussian_signal(4096, 1.3, 3);
        let out = apply_zmnl(&x, &ZmnlSpec::identity());
        assert_eq!(out.samples, x.samples);
    }

    #[test]
    fn apply_zmnl_huber_above_max_is_identity() {
        let x = gaussian_signal(4096, 1.0, 4);
        let max_mag = x.samples.iter().map(|s| s.norm()).fold(0.0, f64::max);
        let out = apply_zmnl(&x, &ZmnlSpec::huber_fixed(max_mag + 1.0));
        assert_eq!(out.samples, x.samples);
    }

    #[test]
    fn apply_zmnl_mad_huber_clip_fraction() {
        // With Th = c·σ̂_component the Rayleigh tail gives a clipped
        // fraction of e^{−c²/2}; at c = 1.345 that is ≈ 40.4%.
        let x = gaussian_signal(200_000, 1.0, 5);
        let out = apply_zmnl(&x, &ZmnlSpec::huber_mad(HUBER_MAD_SCALE));
        let clipped = out
            .samples
            .iter()
            .zip(&x.samples)
            .filter(|(a, b)| a != b)
            .count() as f64
            / x.len() as f64;
        let expected = (-HUBER_MAD_SCALE * HUBER_MAD_SCALE / 2.0_f64).exp();
        assert!(
            (clipped - expected).abs() < 0.01,
            "clipped {clipped} vs {expected}"
        );
    }

    #[test]
    fn transforms_unitary_roundtrip_and_parseval() {
        let x = gaussian_signal(5000, 1.0, 6);
        let freq = forward_transform(&x);
        let back = inverse_transform(&freq);
        let rms_err = (back
            .samples
            .iter()
            .zip(&x.samples)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            / x.len() as f64)
            .sqrt();
        assert!(rms_err < 1e-10);
        let ex: f64 = x.samples.iter().map(|s| s.norm_sqr()).sum();
        let ef: f64 = freq.samples.iter().map(|s| s.norm_sqr()).sum();
        assert!((ex - ef).abs() / ex < 1e-10);
    }

    #[test]
    fn transform_dc_concentration() {
        let x = ComplexSignal::new(vec![Complex64::new(2.0, 1.0); 256], 1e6);
        let freq = forward_transform(&x);
        assert!(freq.samples[0].norm() > 1.0);
        for b in &freq.samples[1..] {
            assert!(b.norm() < 1e-10);
        }
    }

    #[test]
    fn apply_rim_empty_chain_identity() {
        let x = gaussian_signal(8192, 1.0, 10);
        let cleaned = apply_rim(&x, &RimConfig::none(1024));
        assert_eq!(cleaned.samples, x.samples);
    }

    #[test]
    fn apply_rim_time_huber_clips_single_outlier() {
        let mut x = gaussian_signal(2048, 1e-3, 11);
        let th = 0.5;
        x.samples[777] = Complex64::from_polar(100.0 * th, 1.2);
        let config = RimConfig::new(
            vec![RimStage {
                domain: RimDomain::Time,
                zmnl: ZmnlSpec::huber_fixed(th),
            }],
            2048,
        )
        .unwrap();
        let cleaned = apply_rim(&x, &config);
        for (i, (a, b)) in cleaned.samples.iter().zip(&x.samples).enumerate() {
            if i == 777 {
                assert!((a.norm() - th).abs() < 1e-12);
                assert!((a.arg() - b.arg()).abs() < 1e-12);
            } else {
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn apply_rim_identity_chain_roundtrip() {
        let x = gaussian_signal(4096, 1.0, 12);
        let config = RimConfig::new(
            vec![
                RimStage {
                    domain: RimDomain::Frequency,
                    zmnl: ZmnlSpec::identity(),
                },
                RimStage {
                    domain: RimDomain::Time,
                    zmnl: ZmnlSpec::identity(),
                },
            ],
            1024,
        )
        .unwrap();
        let cleaned = apply_rim(&x, &config);
        let rms_err = (cleaned
            .samples
            .iter()
            .zip(&x.samples)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            / x.len() as f64)
            .sqrt();
        assert!(rms_err < 1e-10);
    }

    #[test]
    fn apply_rim_phase_rotation_commutes_fixed_threshold() {
        let x = gaussian_signal(2048, 1.0, 13);
        let theta = 0.83;
        let rot = Complex64::from_polar(1.0, theta);
        let rotated = ComplexSignal::new(x.samples.iter().map(|s| s * rot).collect(), x.sample_rate_hz);
        let config = RimConfig::new(
            vec![
                RimStage {
                    domain: RimDomain::Time,
                    zmnl: ZmnlSpec::huber_fixed(1.2),
                },
                RimStage {
                    domain: RimDomain::Frequency,
                    zmnl: ZmnlSpec::huber_fixed(1.2),
                },
            ],
            512,
        )
        .unwrap();
        let a = apply_rim(&rotated, &config);
        let b = apply_rim(&x, &config);
        for (u, v) in a.samples.iter().zip(&b.samples) {
            assert!((u - v * rot).norm() < 1e-10);
        }
    }

    #[test]
    fn rim_chain_length_limit() {
        let stage = RimStage {
            domain: RimDomain::Time,
            zmnl: ZmnlSpec::identity(),
        };
        assert!(RimConfig::new(vec![stage; 3], 64).is_err());
        assert!(RimConfig::new(vec![stage; 2], 64).is_ok());
    }
}
