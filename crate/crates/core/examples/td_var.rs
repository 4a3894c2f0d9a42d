use dpe_rim::rim::{apply_rim, apply_zmnl, estimate_sigma_mad, RimScheme, ZmnlSpec, HUBER_MAD_SCALE};
use dpe_rim::synth::ComplexSignal;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn main() {
    let n = 5000usize;
    let trials = 2000;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut per_sample = 0.0f64;
    let mut caf_floor = 0.0f64;
    let mut caf_floor_raw = 0.0f64;
    let mut sigma_est = 0.0f64;
    // random ±1 "code" and a carrier for the correlation floor
    let chips: Vec<f64> = (0..n).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect();
    let w = 2.0 * std::f64::consts::PI * 1234.0 / 5.0e6;
    for _ in 0..trials {
        let samples: Vec<Complex64> = (0..n)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re, im)
            })
            .collect();
        let x = ComplexSignal::new(samples, 5e6);
        let cleaned = apply_zmnl(&x, &ZmnlSpec::huber_mad(HUBER_MAD_SCALE));
        per_sample += cleaned.mean_power() / x.mean_power();
        sigma_est += estimate_sigma_mad(&x).unwrap() / std::f64::consts::SQRT_2;
        let corr = |sig: &ComplexSignal| -> f64 {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, s) in sig.samples.iter().enumerate() {
                acc += s * chips[k] * Complex64::from_polar(1.0, -w * k as f64);
            }
            acc.norm_sqr()
        };
        caf_floor += corr(&cleaned);
        caf_floor_raw += corr(&x);
    }
    println!("per-sample var factor: {:.4} (theory 0.5953)", per_sample / trials as f64);
    println!("sigma_component est:  {:.4} (true 1.0)", sigma_est / trials as f64);
    println!("caf floor var factor: {:.4}", caf_floor / caf_floor_raw);

    // same through apply_rim with block = n
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut ratio = 0.0;
    for _ in 0..500 {
        let samples: Vec<Complex64> = (0..n)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re, im)
            })
            .collect();
        let x = ComplexSignal::new(samples, 5e6);
        let td = apply_rim(&x, &RimScheme::TimeDomain.config(HUBER_MAD_SCALE, n));
        ratio += td.mean_power() / x.mean_power();
    }
    println!("apply_rim td var factor: {:.4}", ratio / 500.0);
}
