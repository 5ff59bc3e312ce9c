//! Randomized invariants for every physics module.

use num_complex::Complex64 as C64;
use proptest::prelude::*;

use qhm_core::bath_spectra::{BathLabel, SpectrumModel, TabulatedSpectrum, ThermalBath};
use qhm_core::dressed_cooler::{self, DressedConfig};
use qhm_core::floquet::{self, HarmonicWeights, Modulation};
use qhm_core::lindblad::CMat;
use qhm_core::multilevel_machine::{self as ml, MultilevelConfig};
use qhm_core::nonmarkovian;
use qhm_core::quantum_piston::{self as qp, Damping, PistonState, Preparation};
use qhm_core::thirdlaw::{self, ColdBathModel};
use qhm_core::tls_machine::{self as tls, TlsMachineConfig};

fn spectrum() -> impl Strategy<Value = SpectrumModel> {
    prop_oneof![
        (0.1f64..2.0, 1.0f64..6.0).prop_map(|(s, c)| SpectrumModel::debye(s, c).unwrap()),
        (0.2f64..2.0, 0.05f64..1.0, 0.2f64..3.0)
            .prop_map(|(g, w, c)| SpectrumModel::lorentzian(g, w, c, 40.0).unwrap()),
        (1.0f64..3.0, 0.1f64..1.0).prop_map(|(e, a)| SpectrumModel::power_law(e, a, 8.0).unwrap()),
    ]
}

// Two Debye baths with T_c < T_h around a sinusoidal modulation; the cutoff
// sits above ω₀ so the central sideband is always bright.
fn machine() -> impl Strategy<Value = TlsMachineConfig> {
    (0.5f64..2.0, 0.0f64..1.0, 0.05f64..1.0, 0.2f64..3.0, 0.1f64..1.0, 1.2f64..3.0).prop_map(
        |(omega0, ratio, rate, t_h, frac, c)| {
            let cutoff = c * omega0;
            let m = Modulation::sinusoidal(omega0, ratio * rate, rate).unwrap();
            let hot = ThermalBath::at_temperature(SpectrumModel::debye(1.0, cutoff).unwrap(), t_h, BathLabel::Hot);
            let cold =
                ThermalBath::at_temperature(SpectrumModel::debye(0.5, cutoff).unwrap(), frac * t_h, BathLabel::Cold);
            TlsMachineConfig::new(m, Some(hot.unwrap()), Some(cold.unwrap())).unwrap()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kms_holds(s in spectrum(), t in 0.1f64..5.0, frac in 0.01f64..1.0) {
        let bath = ThermalBath::at_temperature(s.clone(), t, BathLabel::Single).unwrap();
        let w = frac * s.cutoff().min(8.0);
        let g = bath.eval_thermal(w);
        let kms = (bath.eval_thermal(-w) - (-w / t).exp() * g).abs();
        prop_assert!(kms <= 1e-10 * g, "w {} G {} residual {:e}", w, g, kms);
    }

    #[test]
    fn thermal_spectrum_grows_with_temperature(s in spectrum(), t1 in 0.05f64..3.0, dt in 0.0f64..3.0, w in -6.0f64..6.0) {
        let a = ThermalBath::at_temperature(s.clone(), t1, BathLabel::Single).unwrap().eval_thermal(w);
        let b = ThermalBath::at_temperature(s, t1 + dt, BathLabel::Single).unwrap().eval_thermal(w);
        prop_assert!(a <= b * (1.0 + 1e-14), "w {} G({}) = {} > G({}) = {}", w, t1, a, t1 + dt, b);
    }

    #[test]
    fn tabulated_interpolation_error_is_bounded(g in 0.2f64..2.0, width in 0.2f64..1.0, center in 1.0f64..4.0, n in 20usize..200) {
        let exact = SpectrumModel::lorentzian(g, width, center, 1e3).unwrap();
        let h = 6.0 / n as f64;
        let grid: Vec<(f64, f64)> =
            (0..=n).map(|k| k as f64 * h).map(|w| (w, exact.eval_zero_temperature(w).unwrap())).collect();
        let tab = SpectrumModel::Tabulated(TabulatedSpectrum::new(grid).unwrap());
        // max |G''| of g²Γ²/(Γ² + d²) sits at d = 0.
        let bound = h * h * (2.0 * g * g / (width * width)) / 8.0;
        for k in 0..n {
            let w = (k as f64 + 0.5) * h;
            let err = (tab.eval_zero_temperature(w).unwrap() - exact.eval_zero_temperature(w).unwrap()).abs();
            prop_assert!(err <= bound * (1.0 + 1e-9) + 1e-15, "w {} err {:e} bound {:e}", w, err, bound);
        }
    }

    #[test]
    fn sideband_weights_sum_to_one(ratio in 0.0f64..3.0, rate in 0.05f64..2.0) {
        let m = Modulation::sinusoidal(1.0, ratio * rate, rate).unwrap();
        let w = floquet::weights(&m, 30).unwrap();
        prop_assert!((w.total() - 1.0).abs() <= 1e-8);
        for q in 1..=30 {
            prop_assert!((w.get(q) - w.get(-q)).abs() <= 1e-13, "q {}", q);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn tls_laws_and_dense_agreement(cfg in machine()) {
        let r = tls::power(&cfg).unwrap();
        let beta_h = cfg.hot.as_ref().unwrap().beta;
        let beta_c = cfg.cold.as_ref().unwrap().beta;
        prop_assert!(r.first_law_residual().abs() <= 1e-10 * r.scale.max(1e-300));
        prop_assert!(r.entropy_production(beta_h, beta_c) >= -1e-10 * r.scale * beta_c);
        let d = tls::dense_oracle(&cfg).unwrap();
        let ss = tls::steady_state(&cfg).unwrap();
        prop_assert!((ss.w - d.w).abs() <= 1e-9 * d.w.max(1e-12));
        for (a, b) in [(r.j_c, d.j_c), (r.j_h, d.j_h), (r.w_dot, d.w_dot)] {
            prop_assert!((a - b).abs() <= 1e-9 * r.scale, "closed {} dense {}", a, b);
        }
    }

    #[test]
    fn single_bath_recovers_gibbs(omega0 in 0.2f64..3.0, t in 0.1f64..4.0, s in 0.1f64..2.0) {
        let bath = ThermalBath::at_temperature(SpectrumModel::debye(s, 5.0).unwrap(), t, BathLabel::Single).unwrap();
        let m = Modulation::sinusoidal(omega0, 0.0, 1.0).unwrap();
        let cfg = TlsMachineConfig::with_weights(m, HarmonicWeights::unmodulated(), None, Some(bath)).unwrap();
        let w = tls::steady_state(&cfg).unwrap().w;
        let gibbs = (-omega0 / t).exp();
        prop_assert!((w - gibbs).abs() <= 1e-13 * gibbs, "w {} gibbs {}", w, gibbs);
    }
}

// Random partition of the N-1 excited levels into collinear groups.
fn multilevel() -> impl Strategy<Value = MultilevelConfig> {
    (2usize..=7, machine(), any::<u64>()).prop_flat_map(|(n, m, seed)| {
        proptest::collection::vec(-1.0f64..1.0, n).prop_map(move |amps| {
            let mut sizes = Vec::new();
            let mut left = n - 1;
            let mut s = seed;
            while left > 0 {
                let take = 1 + (s % left as u64) as usize;
                s /= 7;
                sizes.push(take);
                left -= take;
            }
            let amps = if amps.iter().all(|a| *a == 0.0) { vec![1.0; n] } else { amps };
            MultilevelConfig::new(n, ml::grouped_dipoles(&sizes), m.clone(), ml::pure_state(&amps)).unwrap()
        })
    })
}

fn dark_overlap(cfg: &MultilevelConfig, rho: &CMat) -> f64 {
    let p = cfg.decomposition().dark_projector;
    let n = cfg.n;
    let mut acc = 0.0;
    for i in 0..n - 1 {
        for j in 0..n - 1 {
            acc += p[(i, j)] * rho[(j + 1, i + 1)].re;
        }
    }
    acc
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn multilevel_invariants(cfg in multilevel()) {
        let initial = dark_overlap(&cfg, &cfg.initial_state);
        let ss = ml::steady_state(&cfg).unwrap();
        prop_assert!((ss.dark_overlap - initial).abs() <= 1e-12, "{} vs {}", ss.dark_overlap, initial);
        let dense = ml::dense_oracle(&cfg).unwrap();
        let dense_dark = dark_overlap(&cfg, &dense.rho);
        prop_assert!((dense_dark - initial).abs() <= 1e-9, "dense {} vs {} (kernel {})", dense_dark, initial, dense.kernel_dim);

        let e = ml::enhancement(&cfg).unwrap();
        prop_assert!(e >= -1e-12 && e <= (cfg.n - 1) as f64 * (1.0 + 1e-12), "enhancement {}", e);

        let single = tls::power(&cfg.machine).unwrap();
        let multi = ml::currents_and_power(&cfg).unwrap();
        if e > 1e-9 && single.regime == multi.regime {
            prop_assert_eq!(single.figure_of_merit, multi.figure_of_merit);
        }
    }

    #[test]
    fn enhancement_decreases_with_dark_overlap(n in 2usize..12, x in 0.0f64..50.0, d1 in 0.0f64..1.0, d2 in 0.0f64..1.0) {
        let n_eff = 2;
        let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
        prop_assert!(ml::enhancement_formula(n, n_eff, hi, x) <= ml::enhancement_formula(n, n_eff, lo, x));
    }
}

fn preparation() -> impl Strategy<Value = Preparation> {
    prop_oneof![
        (0usize..6).prop_map(|n| Preparation::Fock { n }),
        (0.0f64..1.5, 0.0f64..6.3).prop_map(|(r, p)| Preparation::Coherent { alpha: C64::from_polar(r, p) }),
        (0.3f64..5.0).prop_map(|beta| Preparation::Thermal { beta }),
        (0.0f64..0.8).prop_map(|r| Preparation::SqueezedVacuum { r }),
        (0.0f64..1.2, 0.0f64..6.3, 0.5f64..5.0)
            .prop_map(|(r, p, beta)| Preparation::DisplacedThermal { alpha: C64::from_polar(r, p), beta }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn capacity_is_nonnegative_and_phase_invariant(prep in preparation(), omega_p in 0.5f64..2.0, theta in 0.0f64..6.3) {
        let (mode, state) = qp::prepare_auto(omega_p, &prep).unwrap();
        prop_assert!(state.work_capacity >= -1e-12, "capacity {}", state.work_capacity);
        let rotated = PistonState::from_rho(qp::phase_rotate(&state.rho, theta), &mode).unwrap();
        prop_assert!((rotated.work_capacity - state.work_capacity).abs() <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn damping_contracts_toward_thermal(prep in preparation(), nbar in 0.0f64..0.5) {
        let (mode, mut state) = qp::prepare_auto(1.0, &prep).unwrap();
        let beta = if nbar == 0.0 { f64::INFINITY } else { ((nbar + 1.0) / nbar).ln() };
        let target = qp::diagonal_state(&qp::gibbs_populations(beta, &mode));
        let damping = Damping { gamma: 1.0, nbar, duration: 0.25, steps: 250, sample_every: 250 };
        let mut last = qp::trace_distance(&state.rho, &target);
        for _ in 0..4 {
            state = qp::evolve_damped(&state, &mode, &damping).unwrap().final_state;
            let d = qp::trace_distance(&state.rho, &target);
            prop_assert!(d <= last + 1e-9, "{} -> {}", last, d);
            last = d;
        }
    }
}

fn cooler() -> impl Strategy<Value = DressedConfig> {
    (-5.0f64..5.0, 0.01f64..0.5, 0.05f64..1.0, 0.1f64..1.0, 0.0f64..1.0, 0.5f64..4.0).prop_map(
        |(delta, g, em, bg, t_em, t_bg)| {
            let em = ThermalBath::at_temperature(SpectrumModel::flat(em, 1e3).unwrap(), t_em, BathLabel::Cold).unwrap();
            let bg = ThermalBath::at_temperature(SpectrumModel::flat(bg, 1e3).unwrap(), t_bg, BathLabel::Hot).unwrap();
            DressedConfig::new(50.0, 50.0 - delta, g, em, bg, 1.0).unwrap()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dressed_rates_and_populations(cfg in cooler(), p0 in 0.0f64..=1.0, p1 in 0.0f64..=1.0) {
        let r = dressed_cooler::rates(&cfg);
        prop_assert!(r.r_plus >= 0.0 && r.r_minus >= 0.0 && r.r_zero >= 0.0);
        let og = cfg.rabi();
        prop_assert!(og >= 2.0 * cfg.g * (1.0 - 1e-15) && og >= cfg.delta().abs());
        let times: Vec<f64> = (0..40).map(|k| 0.5 * k as f64).collect();
        let a = dressed_cooler::evolve_populations(&cfg, p0, &times).unwrap();
        let b = dressed_cooler::evolve_populations(&cfg, p1, &times).unwrap();
        prop_assert!(a.rho_ee.iter().all(|p| (0.0..=1.0).contains(p)));
        prop_assert!((a.steady - b.steady).abs() <= 1e-15);
    }

    #[test]
    fn cooling_is_monotone_and_numeric_agrees(gamma in 0.0f64..3.0, dim in 1u32..=3, rate in 0.1f64..2.0, t0 in 0.1f64..3.0) {
        let m = ColdBathModel::new(gamma, dim, rate, t0).unwrap();
        let horizon = m.zero_time().map_or(5.0, |z| 1.2 * z);
        let exact = thirdlaw::integrate_temperature(&m, horizon, 401).unwrap();
        prop_assert!(exact.temperature.windows(2).all(|w| w[1] <= w[0] && w[1] >= 0.0));
        let num = thirdlaw::integrate_temperature_numeric(&m, horizon, 401).unwrap();
        for k in 0..exact.t.len() {
            if m.zero_time().is_some_and(|z| (exact.t[k] - z).abs() < 1e-6) {
                continue;
            }
            let d = (exact.temperature[k] - num.temperature[k]).abs();
            prop_assert!(d <= 1e-8 * t0, "t {} diff {:e}", exact.t[k], d);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn measurement_costs_energy(width in 0.02f64..2.0, center in 0.2f64..3.0, omega0 in 0.2f64..3.0) {
        let s = SpectrumModel::lorentzian(1.0, width, center, 1e3).unwrap();
        let e = nonmarkovian::measurement_energy(&s, omega0).unwrap();
        prop_assert!(e > 0.0, "dE_meas {}", e);
    }
}
