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

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut best = init;
    let mut best_cost = eval.cost_at(&best);
    let initial_radius = 1000.0f64;
    let min_radius = 0.05f64;
    let mut radius = initial_radius;
    let mut accepts_by_band = [0usize; 20];
    let mut iters_by_band = [0usize; 20];
    for it in 0..12000 {
        let mut g = [0.0f64; 4];
        for v in g.iter_mut() { *v = rng.sample(StandardNormal); }
        let norm = (g.iter().map(|v| v * v).sum::<f64>()).sqrt().max(1e-300);
        let u: f64 = rng.gen::<f64>();
        let scale = radius * u.powf(0.25) / norm;
        let mut cand = best;
        cand.position_m += Vector3::new(g[0], g[1], g[2]) * scale;
        cand.clock_bias_s += g[3] * scale / SPEED_OF_LIGHT;
        let c = eval.cost_at(&cand);
        let band = (radius.log2().floor() as i32 + 6).clamp(0, 19) as usize;
        iters_by_band[band] += 1;
        if c > best_cost {
            accepts_by_band[band] += 1;
            best = cand;
            best_cost = c;
            radius = initial_radius;
        } else {
            radius /= 2.0;
            if radius < min_radius { radius = initial_radius; }
        }
        if it % 2000 == 1999 {
            let err = (best.position_m - sc.receiver.position_m).norm();
            println!("it {it:>6} err {err:>9.3} cost {best_cost:.5e}");
        }
    }
    println!("band(log2 r)+6: iters / accepts");
    for b in 0..20 {
        if iters_by_band[b] > 0 {
            println!("  r≈2^{:>3} m: {:>6} iters, {:>5} accepts", b as i32 - 6, iters_by_band[b], accepts_by_band[b]);
        }
    }
}
