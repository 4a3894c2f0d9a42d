use dpe_rim::caf::DpeCostEvaluator;
use dpe_rim::constellation::{ReceiverState, SatelliteState, Scenario};
use dpe_rim::synth::synthesize;
use dpe_rim::SPEED_OF_LIGHT;
use nalgebra::Vector3;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn test_scenario() -> Scenario {
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
        duration_s: 2e-3,
        cn0_dbhz: None,
        noise_variance: 0.0,
        frontend_bandwidth_hz: None,
    }
}

fn main() {
    let sc = test_scenario();
    let x = synthesize(&sc, 0).unwrap();
    let mut init = sc.receiver;
    init.position_m += Vector3::new(300.0, -288.0, 255.0);
    let eval = DpeCostEvaluator::new(&x, &sc, &init).unwrap();

    // find the actual stall point by running the estimator
    let params = dpe_rim::estimators::ArsParams {
        initial_radius_m: 1000.0,
        min_radius_m: 0.05,
        contraction: 2.0,
        max_iterations: 2500,
        seed: 3,
        max_position_offset_m: 2000.0,
        max_clock_offset_m: 600.0,
        ..dpe_rim::estimators::ArsParams::default()
    };
    let r = dpe_rim::estimators::ars_maximize(|k| eval.cost_at(k), &init, &params).unwrap();
    let stall = r.kappa_hat;
    println!(
        "stall: err {:.3} m clock {:.3} m",
        (stall.position_m - sc.receiver.position_m).norm(),
        (stall.clock_bias_s - sc.receiver.clock_bias_s) * SPEED_OF_LIGHT
    );
    let c0 = eval.cost_at(&stall);
    println!("stall-ish point cost {c0:.5e}, truth {:.5e}", eval.cost_at(&sc.receiver));

    // cost along the straight line stall -> truth (position and clock jointly)
    let dp = sc.receiver.position_m - stall.position_m;
    let dz = (sc.receiver.clock_bias_s - stall.clock_bias_s) * SPEED_OF_LIGHT;
    println!("line stall->truth: |dp| {:.1} m, dz {:.1} m", dp.norm(), dz);
    for frac in [0.0, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9, 1.0] {
        let mut k = stall;
        k.position_m += dp * frac;
        k.clock_bias_s += dz * frac / SPEED_OF_LIGHT;
        println!("  frac {frac:.2}: cost {:.5e}", eval.cost_at(&k));
    }
    // transverse probes: position-only and clock-only
    for d in [2.0, 5.0, 10.0, 30.0] {
        let mut a = stall; a.position_m += dp.normalize() * d;
        let mut b = stall; b.clock_bias_s += d / SPEED_OF_LIGHT;
        let mut c = stall; c.position_m += Vector3::new(0.0,0.0,1.0) * d;
        println!("  +line {d} m: {:.5e}   +clock {d} m: {:.5e}  +zaxis {d} m: {:.5e}",
            eval.cost_at(&a), eval.cost_at(&b), eval.cost_at(&c));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for radius in [400.0, 200.0, 100.0, 50.0, 25.0, 12.0, 6.0, 3.0] {
        let mut improvements = 0usize;
        let mut best_gain: f64 = 0.0;
        let n = 3000;
        for _ in 0..n {
            let mut g = [0.0f64; 3];
            for v in g.iter_mut() { *v = rng.sample(StandardNormal); }
            let norm = (g.iter().map(|v| v * v).sum::<f64>()).sqrt();
            let u: f64 = rng.gen::<f64>();
            let s = radius * u.powf(1.0/3.0) / norm;
            for dz in [-1.0f64, -0.5, 0.0, 0.5, 1.0] {
                let mut cand = stall;
                cand.position_m += Vector3::new(g[0], g[1], g[2]) * s;
                cand.clock_bias_s += dz * radius / SPEED_OF_LIGHT;
                let c = eval.cost_at(&cand);
                if c > c0 {
                    improvements += 1;
                    best_gain = best_gain.max((c - c0) / c0);
                }
            }
        }
        println!("radius {radius:>6.1}: improvements {improvements:>5}/{} best rel gain {best_gain:.3e}", n*5);
    }
}
