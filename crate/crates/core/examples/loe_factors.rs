use dpe_rim::constellation::{delay, doppler};
use dpe_rim::harness::ExperimentConfig;
use dpe_rim::rim::{apply_rim, RimScheme, HUBER_MAD_SCALE};
use dpe_rim::synth::{gen_ca_code, synthesize, CODE_PERIOD_S};
use dpe_rim::caf::caf;
use dpe_rim::synth::ComplexSignal;

fn main() {
    let config = ExperimentConfig::default_loe();
    let mut scenario = config.build_scenario();
    scenario.satellites.truncate(1);
    scenario.cn0_dbhz = Some(vec![44.0]);
    let sat = scenario.satellites[0];
    let code = gen_ca_code(sat.prn_id).unwrap();
    let tau = delay(&scenario.receiver, &sat).unwrap().rem_euclid(CODE_PERIOD_S);
    let fd = doppler(&scenario.receiver, &sat, scenario.carrier_freq_hz).unwrap();
    let block = (CODE_PERIOD_S * scenario.sample_rate_hz).round() as usize;

    let trials = 400;
    let mut sum_peak = [0.0f64; 5];
    let mut sum_floor = [0.0f64; 5];
    let mut n_floor = 0usize;
    for t in 0..trials {
        let x = synthesize(&scenario, 1000 + t).unwrap();
        for (si, scheme) in RimScheme::ALL.iter().enumerate() {
            let rim = scheme.config(HUBER_MAD_SCALE, block);
            let cleaned = apply_rim(&x, &rim);
            // peak amplitude: real part of CAF at truth, aligned by the known phase
            let first = ComplexSignal::new(cleaned.samples[..block].to_vec(), cleaned.sample_rate_hz);
            let v = caf(&first, &code, tau, fd).unwrap().value;
            // rotate by the known carrier phase so the signal lands on Re
            let aligned = v * num_complex::Complex64::from_polar(1.0, -sat.carrier_phase_rad);
            sum_peak[si] += aligned.re;
            // noise floor: |CAF|² at a far-off delay
            let off = caf(&first, &code, tau + 2.0e-4, fd).unwrap().value;
            sum_floor[si] += off.norm_sqr();
            if si == 0 { n_floor += 1; }
        }
    }
    let n = trials as f64;
    let base_peak = sum_peak[0] / n;
    let base_floor = sum_floor[0] / n;
    println!("trials {n}, floor samples {n_floor}");
    println!("expected amp_factor 0.7458, var_factor 0.5953 (single domain)");
    for (si, scheme) in RimScheme::ALL.iter().enumerate() {
        let amp = sum_peak[si] / n / base_peak;
        let var = sum_floor[si] / n / base_floor;
        let loe = -10.0 * (amp * amp / var).log10();
        println!(
            "{:>6}: amp {:.4} var {:.4} -> SNR-loss {:.4} dB",
            scheme.label(), amp, var, loe
        );
    }
}
