use dpe_rim::analytics::{crb, mqbd, FimInputs};
use dpe_rim::constellation::geometry_jacobian_with_clock;
use dpe_rim::harness::{derive_trial_seed, run_monte_carlo, ExperimentConfig};
use dpe_rim::synth::{synthesize_satellite, CODE_PERIOD_S};
use std::time::Instant;

fn main() {
    let mut config = ExperimentConfig::default_loe();
    let args: Vec<String> = std::env::args().collect();
    let trials: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(100);
    let iters: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1400);
    let bw: f64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(0.0);
    config.sweep.trials = trials;
    config.estimator.ars_iterations = iters;
    config.scenario.frontend_bandwidth_hz = bw;
    config.sweep.threshold_axis = vec![1.345];
    config.estimator.schemes = vec!["none".into(), "td".into(), "fd".into(), "dd_tf".into()];
    config.estimator.methods = vec!["dpe".into()];

    // closed-form position CRB (position + clock jointly estimated)
    let scenario = config.build_scenario();
    let jac = geometry_jacobian_with_clock(&scenario.receiver, &scenario.satellites).unwrap();
    let mut mqbds = Vec::new();
    let mut snrs = Vec::new();
    for i in 0..scenario.satellites.len() {
        let mut component = synthesize_satellite(&scenario, i).unwrap();
        if let Some(bw) = scenario.frontend_bandwidth_hz {
            component = dpe_rim::synth::lowpass_frontend(&component, bw).unwrap();
        }
        let energy: f64 = component.samples.iter().map(|s| s.norm_sqr()).sum();
        mqbds.push(mqbd(&component).unwrap());
        snrs.push(energy / scenario.noise_variance);
    }
    println!("mqbd[0] = {:.4e}, snr_total[0] = {:.2}", mqbds[0], snrs[0]);
    let inputs = FimInputs { jacobian: jac, mqbd: mqbds, snr: snrs, k_out: 1.0 };
    let cov = crb(&inputs).unwrap();
    let pos_crb = cov[(0,0)] + cov[(1,1)] + cov[(2,2)];
    println!("sqrt(trace pos CRB) = {:.3} m  (per-axis {:.3} {:.3} {:.3}, clock {:.3})",
        pos_crb.sqrt(), cov[(0,0)].sqrt(), cov[(1,1)].sqrt(), cov[(2,2)].sqrt(), cov[(3,3)].sqrt());
    println!("blocks per fix: {}", (scenario.duration_s / CODE_PERIOD_S).round());
    println!("seed check: {}", derive_trial_seed(config.sweep.base_seed, 0, 0));

    let t0 = Instant::now();
    let output = run_monte_carlo(&config).unwrap();
    let dt = t0.elapsed().as_secs_f64();
    for row in &output.aggregates {
        println!("{:>10} rmse {:>9.3} ± {:.3} m (n={})", row.method, row.rmse_m, row.stderr_m, row.trials);
    }
    println!("total {:.1} s for {} trials ({:.3} s/trial)", dt, trials, dt / trials as f64);
    let base = output.rmse(1.345, "dpe/none").unwrap();
    println!("dpe/none RMSE vs sqrt(CRB): ratio {:.3}", base / pos_crb.sqrt());
    for scheme in ["td", "fd", "dd_tf"] {
        let r = output.rmse(1.345, &format!("dpe/{scheme}")).unwrap();
        println!("LoE dpe/{scheme}: {:.4} dB", 20.0 * (r / base).log10());
    }
    if let Some(base2) = output.rmse(1.345, "2sp/none") {
        for scheme in ["td", "fd", "dd_tf"] {
            if let Some(r) = output.rmse(1.345, &format!("2sp/{scheme}")) {
                println!("LoE 2sp/{scheme}: {:.4} dB (2sp/none rmse {:.3})", 20.0 * (r / base2).log10(), base2);
            }
        }
    }
    // paired per-trial statistics: mean log error ratio with its standard error
    let base_errs = output.errors(1.345, "dpe/none");
    for label in ["dpe/td", "dpe/fd", "dpe/dd_tf"] {
        let errs = output.errors(1.345, label);
        let logs: Vec<f64> = errs
            .iter()
            .zip(&base_errs)
            .map(|(a, b)| 20.0 * (a / b).log10())
            .collect();
        let n = logs.len() as f64;
        let mean = logs.iter().sum::<f64>() / n;
        let var = logs.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (n - 1.0);
        println!("{label}: paired mean log-ratio {:.4} ± {:.4} dB", mean, (var / n).sqrt());
    }
    // error distributions
    for label in ["dpe/none", "dpe/td", "dpe/dd_tf"] {
        let mut errs = output.errors(1.345, label);
        errs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = errs.len();
        println!(
            "{label}: p50 {:.2} p90 {:.2} p99/max {:.2} / {:.2}",
            errs[n / 2],
            errs[(n as f64 * 0.9) as usize],
            errs[((n as f64 * 0.99) as usize).min(n - 1)],
            errs[n - 1]
        );
    }
}
