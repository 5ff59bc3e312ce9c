use qhm_core::thirdlaw::*;

#[test]
fn numeric_matches_closed_form() {
    for gamma in [0.0, 0.3, 0.5, 0.9, 1.0, 1.5, 2.0, 3.0] {
        let m = ColdBathModel::new(gamma, 3, 0.8, 1.7).unwrap();
        let horizon = m.zero_time().map_or(10.0, |z| 1.5 * z);
        let exact = integrate_temperature(&m, horizon, 3001).unwrap();
        let num = integrate_temperature_numeric(&m, horizon, 3001).unwrap();
        for k in 0..exact.t.len() {
            if let Some(z) = m.zero_time() {
                if (exact.t[k] - z).abs() < 1e-6 {
                    continue;
                }
            }
            let d = (exact.temperature[k] - num.temperature[k]).abs();
            assert!(d < 1e-8 * m.t0, "gamma {gamma} t {}: {d}", exact.t[k]);
        }
    }
}

#[test]
fn zero_time_is_exact() {
    for gamma in [0.0, 0.25, 0.5, 0.75] {
        let m = ColdBathModel::new(gamma, 2, 1.3, 0.9).unwrap();
        let z = m.zero_time().unwrap();
        let mut last = f64::INFINITY;
        for eps in [1e-2, 1e-4, 1e-6, 1e-8] {
            let t = m.temperature(z - eps);
            assert!(t < last || t == 0.0);
            last = t;
        }
        assert!(last < 1e-7);
        assert_eq!(m.temperature(z), 0.0);
    }
}

#[test]
fn trajectories_are_monotone() {
    for gamma in [0.0, 0.5, 1.0, 2.0] {
        let m = ColdBathModel::new(gamma, 1, 1.0, 1.0).unwrap();
        for traj in [integrate_temperature(&m, 5.0, 500).unwrap(), integrate_temperature_numeric(&m, 5.0, 500).unwrap()] {
            assert!(traj.temperature.windows(2).all(|w| w[1] <= w[0]));
            assert!(traj.temperature.iter().all(|&t| t >= 0.0));
        }
    }
}

#[test]
fn magnon_versus_phonon() {
    let magnon = ColdBathModel::magnon(3, 1.0, 1.0).unwrap();
    let phonon = ColdBathModel::phonon(3, 1.0, 1.0).unwrap();
    assert!(!verdict(&magnon).unattainable());
    assert!(verdict(&phonon).unattainable());
    let t = integrate_temperature(&phonon, 5.0, 6).unwrap();
    assert!((t.temperature[5] - (-5f64).exp()).abs() < 1e-15);
}
