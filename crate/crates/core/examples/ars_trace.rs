use dpe_rim::caf::DpeCostEvaluator;
use dpe_rim::constellation::{ReceiverState, SatelliteState, Scenario};
use dpe_rim::estimators::{ars_maximize, ArsParams};
use dpe_rim::synth::synthesize;
use dpe_rim::SPEED_OF_LIGHT;
use nalgebra::Vector3;
use num_complex::Complex64;

fn test_scenario(noise_variance: f64, duration_ms: usize) -> Scenario {
    let rx = ReceiverState::static_at(Vector3::new(1_530_000.0, -4_460_000.0, 4_280_000.0));
    let positions = [
        Vector3::new(15.0e6, -18.0e6, 12.0e6),
        Vector3::new(5.0e6, -24.0e6, 9.0e6),
        Vector3::new(-3.0e6, -16.0e6, 20.0e6),
        Vector3::new(18.0e6, -8.0e6, 16.0e6),
        Vector3::new(9.0e6, -14.0e6, 21.0e6),
    ];
    let velocities = [
        Vector3::new(900.0, 1200.0, 3500.0),
        Vector3::new(-2500.0, 1100.0, 2600.0),
        Vector3::new(3100.0, -400.0, 2200.0),
        Vector3::new(-800.0, -3600.0, 1200.0),
        Vector3::new(1500.0, 2900.0, -2100.0),
    ];
    let satellites = (0..5)
        .map(|i| SatelliteState {
            position_m: positions[i],
            velocity_mps: velocities[i],
            clock_bias_s: 0.0,
            amplitude: Complex64::from_polar(0.6, 0.3 * i as f64),
            carrier_phase_rad: 0.5 * i as f64,
            prn_id: (2 * i + 1) as u8,
        })
        .collect();
    Scenario {
        receiver: rx,
        satellites,
        carrier_freq_hz: 1575.42e6,
        sample_rate_hz: 5e6,
        duration_s: duration_ms as f64 * 1e-3,
        cn0_dbhz: None,
        noise_variance,
        frontend_bandwidth_hz: None,
    }
}

fn main() {
    let sc = test_scenario(0.0, 2);
    let x = synthesize(&sc, 0).unwrap();
    let mut init = sc.receiver;
    init.position_m += Vector3::new(300.0, -288.0, 255.0);
    let eval = DpeCostEvaluator::new(&x, &sc, &init).unwrap();
    let truth_cost = eval.cost_at(&sc.receiver);
    let init_cost = eval.cost_at(&init);
    println!("cost at truth {truth_cost:.4e}, at init {init_cost:.4e}");

    // probe around truth
    for d in [0.0, 1.0, 5.0, 20.0, 80.0, 163.0, 300.0] {
        let mut k = sc.receiver;
        k.position_m += Vector3::new(d, 0.0, 0.0);
        println!("cost at +x {d:>6} m: {:.6e}", eval.cost_at(&k));
    }

    for iters in [500usize, 1500, 2500, 6000, 12000] {
        let params = ArsParams {
            initial_radius_m: 1000.0,
            min_radius_m: 0.05,
            contraction: 2.0,
            max_iterations: iters,
            seed: 3,
            max_position_offset_m: 2000.0,
            max_clock_offset_m: 600.0,
            ..ArsParams::default()
        };
        let r = ars_maximize(|k| eval.cost_at(k), &init, &params).unwrap();
        let err = (r.kappa_hat.position_m - sc.receiver.position_m).norm();
        let clock_err = (r.kappa_hat.clock_bias_s - sc.receiver.clock_bias_s) * SPEED_OF_LIGHT;
        println!(
            "iters {iters:>6}: err {err:>10.3} m  clock {clock_err:>10.3} m  cost {:.6e} (truth {truth_cost:.6e})",
            r.cost
        );
    }
}
