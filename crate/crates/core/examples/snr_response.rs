use dpe_rim::harness::{run_monte_carlo, ExperimentConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let trials: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(150);
    let mut rmses = Vec::new();
    for cn0 in [44.0, 43.706] {
        let mut config = ExperimentConfig::default_loe();
        config.sweep.trials = trials;
        config.sweep.threshold_axis = vec![10.0]; // effectively no clipping
        config.estimator.schemes = vec!["none".into()];
        config.estimator.methods = vec!["dpe".into(), "2sp".into()];
        config.scenario.cn0_dbhz = cn0;
        let out = run_monte_carlo(&config).unwrap();
        for row in &out.aggregates {
            println!("cn0 {cn0}: {} rmse {:.3} ± {:.3}", row.method, row.rmse_m, row.stderr_m);
            rmses.push((cn0, row.method.clone(), row.rmse_m));
        }
    }
    for m in ["dpe/none", "2sp/none"] {
        let hi = rmses.iter().find(|r| r.0 == 44.0 && r.1 == m).unwrap().2;
        let lo = rmses.iter().find(|r| r.0 != 44.0 && r.1 == m).unwrap().2;
        println!("{m}: response {:.4} dB per 0.294 dB SNR (expect ≈0.294)", 20.0 * (lo / hi).log10());
    }
}
