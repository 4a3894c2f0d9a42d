//! Built-in scenario: a static terrestrial receiver observing seven
//! satellites with spread azimuths and elevations.

use nalgebra::Vector3;
use num_complex::Complex64;

use crate::constellation::{ReceiverState, SatelliteState, Scenario};

/// Nominal GPS orbital speed used for the preset satellite velocities, m/s.
const ORBITAL_SPEED_MPS: f64 = 3874.0;

/// Default receiver location (ECEF, meters): mid-latitude site.
pub fn default_receiver_position() -> Vector3<f64> {
    Vector3::new(1_527_700.0, -4_460_600.0, 4_295_000.0)
}

/// (azimuth°, elevation°, range km) of the seven preset satellites.
const PRESET_GEOMETRY: [(f64, f64, f64); 7] = [
    (0.0, 80.0, 20_400.0),
    (45.0, 45.0, 21_600.0),
    (120.0, 30.0, 23_100.0),
    (200.0, 55.0, 21_000.0),
    (270.0, 25.0, 23_700.0),
    (330.0, 40.0, 22_200.0),
    (160.0, 15.0, 24_600.0),
];

fn enu_basis(rx: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
    let up = rx.normalize();
    let lat = (up.z).asin();
    let lon = up.y.atan2(up.x);
    let east = Vector3::new(-lon.sin(), lon.cos(), 0.0);
    let north = Vector3::new(
        -lat.sin() * lon.cos(),
        -lat.sin() * lon.sin(),
        lat.cos(),
    );
    (east, north, up)
}

/// Seven-satellite scenario with equal CN0 on every channel.
pub fn seven_satellite_scenario(
    receiver_position_m: Vector3<f64>,
    cn0_dbhz: f64,
    sample_rate_hz: f64,
    duration_s: f64,
    noise_variance: f64,
    frontend_bandwidth_hz: Option<f64>,
) -> Scenario {
    let receiver = ReceiverState::static_at(receiver_position_m);
    let (east, north, up) = enu_basis(&receiver_position_m);
    let satellites: Vec<SatelliteState> = PRESET_GEOMETRY
        .iter()
        .enumerate()
        .map(|(i, &(az_deg, el_deg, range_km))| {
            let az = az_deg.to_radians();
            let el = el_deg.to_radians();
            let los = (east * az.sin() + north * az.cos()) * el.cos() + up * el.sin();
            let position = receiver_position_m + los * (range_km * 1e3);
            // velocity perpendicular to the geocentric radius, direction
            // varied per satellite so the Dopplers spread out
            let radial = position.normalize();
            let mix = east * (0.3 + 0.2 * i as f64).sin() + north * (1.1 + 0.45 * i as f64).cos()
                + up * 0.1;
            let tangent = (mix - radial * mix.dot(&radial)).normalize();
            let velocity = tangent * ORBITAL_SPEED_MPS * if i % 2 == 0 { 1.0 } else { -1.0 };
            SatelliteState {
                position_m: position,
                velocity_mps: velocity,
                clock_bias_s: 0.0,
                amplitude: Complex64::new(1.0, 0.0),
                carrier_phase_rad: 0.0,
                prn_id: (i + 1) as u8,
            }
        })
        .collect();
    let n_sats = satellites.len();
    Scenario {
        receiver,
        satellites,
        carrier_freq_hz: 1575.42e6,
        sample_rate_hz,
        duration_s,
        cn0_dbhz: Some(vec![cn0_dbhz; n_sats]),
        noise_variance,
        frontend_bandwidth_hz,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::{doppler, geometry_jacobian};

    #[test]
    fn preset_scenario_is_valid_with_spread_geometry() {
        let sc = seven_satellite_scenario(
            default_receiver_position(),
            44.0,
            5e6,
            5e-3,
            2.0,
            None,
        );
        sc.validate().unwrap();
        sc.receiver.validate_terrestrial().unwrap();
        assert_eq!(sc.satellites.len(), 7);
        let jac = geometry_jacobian(&sc.receiver, &sc.satellites).unwrap();
        // geometry must be full rank with a healthy spread
        let svd = jac.svd(false, false);
        let cond = svd.singular_values.max() / svd.singular_values.min();
        assert!(cond < 10.0, "condition {cond}");
        // Dopplers should be kilohertz-scale and not all alike
        let fds: Vec<f64> = sc
            .satellites
            .iter()
            .map(|s| doppler(&sc.receiver, s, sc.carrier_freq_hz).unwrap())
            .collect();
        assert!(fds.iter().any(|f| f.abs() > 300.0));
        let spread = fds.iter().cloned().fold(f64::MIN, f64::max)
            - fds.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread > 1000.0, "doppler spread {spread}");
        for f in fds {
            assert!(f.abs() < 6000.0, "doppler {f} outside GPS-like range");
        }
    }
}
