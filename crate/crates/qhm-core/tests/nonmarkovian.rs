use std::f64::consts::PI;

use qhm_core::bath_spectra::{BathLabel, SpectrumModel, ThermalBath};
use qhm_core::floquet::Modulation;
use qhm_core::nonmarkovian::*;

fn lorentz(gamma: f64, temp: f64) -> ThermalBath {
    ThermalBath::at_temperature(SpectrumModel::lorentzian(1.0, gamma, 1.0, 40.0).unwrap(), temp, BathLabel::Single)
        .unwrap()
}

/// Closed form of the first-cycle work after doing both time integrals by
/// hand: W = 2κΩ∫G_T(ω) sin(ντ)/(ν(ν² - Ω²)) dω with ν = ω + ω₀, τ = 2π/Ω.
/// Evaluated by a dense midpoint rule.
fn cycle_work_oracle(bath: &ThermalBath, omega0: f64, kappa: f64, rate: f64, n: usize) -> f64 {
    let tau = 2.0 * PI / rate;
    let (lo, hi) = (0.0, bath.spectrum.cutoff());
    let h = (hi - lo) / n as f64;
    let mut s = 0.0;
    for i in 0..n {
        let w = lo + (i as f64 + 0.5) * h;
        let nu = w + omega0;
        let d = nu * nu - rate * rate;
        let k = if d.abs() < 1e-9 { tau / (2.0 * nu) } else { (nu * tau).sin() / (nu * d) };
        s += bath.eval_thermal(w) * k;
    }
    2.0 * kappa * rate * s * h
}

#[test]
fn cycle_work_matches_closed_form() {
    let bath = lorentz(0.2, 0.0);
    for rate in [2.0, 6.0] {
        let cfg = CycleConfig::new(bath.clone(), 1.0, 0.05, rate, 1).unwrap();
        let w = cycle_work(&cfg).unwrap().first();
        let o = cycle_work_oracle(&bath, 1.0, 0.05, rate, 4_000_000);
        assert!((w - o).abs() < 1e-4 * o.abs().max(1e-6), "rate {rate}: {w} vs {o}");
    }
}

#[test]
fn lorentzian_scan_finds_positive_work() {
    let rows = work_scan(&lorentzian_preset(), 1.0, 0.05, &[3.0, 10.0, 30.0]).unwrap();
    assert!(rows[1].w_ext_cycle > 0.0);
    assert!(rows[2].w_ext_cycle < 0.0, "sign oscillates with Omega");
}

#[test]
fn weak_regime_flag() {
    let cfg = CycleConfig::new(lorentz(0.2, 0.0), 1.0, 0.5, 1.0, 1).unwrap();
    assert!(cfg.outside_weak_regime());
    let cfg = CycleConfig::new(lorentz(0.2, 0.0), 1.0, 0.1, 1.0, 1).unwrap();
    assert!(!cfg.outside_weak_regime());
}

#[test]
fn short_time_rates_are_universal() {
    let tc = 5.0;
    let r = transition_rates(&lorentzian_preset(), 1.0, &[0.0, 1e-4 * tc]).unwrap();
    assert!((r.r_e[1] / r.r_g[1] - 1.0).abs() < 1e-3);
    let slope = 2.0 * zeno_slope(&lorentzian_preset()).unwrap() * 1e-4 * tc;
    assert!((r.r_e[1] / slope - 1.0).abs() < 1e-3);
}

#[test]
fn golden_rule_limit() {
    let b = lorentzian_preset();
    let t = 1e3 * correlation_time(&b.spectrum);
    let r = transition_rates(&b, 1.0, &[0.0, t]).unwrap();
    let gr = 2.0 * PI * b.eval_thermal(1.0);
    assert!((r.r_e[1] - gr).abs() < 0.01 * gr);
}

#[test]
fn narrow_lorentzian_gives_negative_absorption_rate() {
    let grid: Vec<f64> = (0..=400).map(|k| k as f64 * 0.05).collect();
    let r = transition_rates(&lorentz(0.02, 0.0), 1.0, &grid).unwrap();
    assert!(r.r_g.iter().any(|&x| x < 0.0));
}

#[test]
fn population_step_halving() {
    let b = lorentz(0.2, 0.0);
    let coarse: Vec<f64> = (0..=1250).map(|k| k as f64 * 0.004).collect();
    let fine: Vec<f64> = (0..=2500).map(|k| k as f64 * 0.002).collect();
    let pc = evolve_populations(&transition_rates(&b, 1.0, &coarse).unwrap(), 0.3).unwrap();
    let pf = evolve_populations(&transition_rates(&b, 1.0, &fine).unwrap(), 0.3).unwrap();
    let dev = pc.rho_ee.iter().enumerate().map(|(k, p)| (p - pf.rho_ee[2 * k]).abs()).fold(0.0, f64::max);
    assert!(dev < 1e-6, "{dev}");
}

#[test]
fn kms_rates_relax_to_gibbs() {
    let beta: f64 = 1.3;
    let t: Vec<f64> = (0..=4000).map(|k| k as f64 * 0.01).collect();
    let n = t.len();
    let rates = RateTrajectory { t, r_e: vec![1.0; n], r_g: vec![(-beta).exp(); n] };
    let p = evolve_populations(&rates, 0.9).unwrap();
    let gibbs = (-beta).exp() / (1.0 + (-beta).exp());
    assert!((p.rho_ee.last().unwrap() - gibbs).abs() < 1e-12);
    let mon = entropy_production_monitor(&p, gibbs);
    assert!(mon.violations.is_empty());
}

#[test]
fn oze_trajectory_violates_spohn() {
    let s = SpectrumModel::band(SpectrumModel::lorentzian(1.0, 0.05, 1.0, 40.0).unwrap(), 0.05, f64::INFINITY).unwrap();
    let b = ThermalBath::at_temperature(s, 0.5, BathLabel::Single).unwrap();
    let grid: Vec<f64> = (0..=1000).map(|k| k as f64 * 0.01).collect();
    let p0 = 1.0 / (1.0 + 2f64.exp());
    let traj = evolve_populations(&transition_rates(&b, 1.0, &grid).unwrap(), p0).unwrap();
    let mon = entropy_production_monitor(&traj, p0);
    assert!(!mon.violations.is_empty());
}

/// ∫₀^∞ on the map ω = s/(1 - s), 10⁶ midpoint panels in s.
fn correlation_energy_oracle(gamma: f64, nu: f64, omega0: f64) -> f64 {
    let n = 1_000_000;
    let h = 1.0 / n as f64;
    let mut sum = 0.0;
    for i in 0..n {
        let s = (i as f64 + 0.5) * h;
        let w = s / (1.0 - s);
        let jac = 1.0 / ((1.0 - s) * (1.0 - s));
        sum += gamma * gamma / (gamma * gamma + (nu - w).powi(2)) / (1.0 + w / omega0) * jac;
    }
    -omega0 * sum * h
}

#[test]
fn correlation_energy_matches_dense_oracle() {
    let s = SpectrumModel::lorentzian(1.0, 1.0, 1.0, 40.0).unwrap();
    let e = correlation_energy(&s, 1.0).unwrap();
    let o = correlation_energy_oracle(1.0, 1.0, 1.0);
    assert!((e - o).abs() < 1e-6, "{e} vs {o}");
}

#[test]
fn correlation_energy_vanishes_with_bandwidth() {
    let mut last = f64::NEG_INFINITY;
    for g in [1e-1, 1e-2, 1e-3, 1e-4] {
        let e = correlation_energy(&SpectrumModel::lorentzian(1.0, g, 1.0, 40.0).unwrap(), 1.0).unwrap();
        assert!(e < 0.0 && e > last);
        last = e;
    }
    assert!(last > -1e-3);
}

#[test]
fn zero_temperature_work_report() {
    let cfg = CycleConfig::new(lorentzian_preset(), 1.0, 0.05, 2.0, 1).unwrap();
    let r = work_comparison(&cfg, &MeasurementInputs { delta_s_meas: 0.3, levels: 2, sl_entropy: 0.0 }).unwrap();
    assert!(r.delta_e_meas > 0.0);
    assert_eq!(r.w_sel_max, r.w_nsm_max);
    assert_eq!(r.w_nsm_max, r.delta_e_meas);
}

#[test]
fn coarse_graining_preset_converges() {
    let b = lorentzian_preset();
    let m = coarse_grain_preset();
    let r50 = coarse_grain_check(&m, &b, 5, 50, 0.0).unwrap();
    let r10 = coarse_grain_check(&m, &b, 5, 10, 0.0).unwrap();
    assert!(r50.deviation < 1e-3);
    assert!(r50.deviation < r10.deviation);
}

#[test]
fn coarse_graining_unmodulated() {
    let r = coarse_grain_check(&Modulation::None { carrier: 1.0 }, &lorentzian_preset(), 0, 50, 2.0 * PI).unwrap();
    assert!(r.deviation < 1e-8, "{}", r.deviation);
}

#[test]
fn coarse_graining_fails_for_narrow_bath() {
    // Γ = 0.005 gives t_c = 200, longer than the 10 averaged periods
    let b = ThermalBath::at_temperature(
        SpectrumModel::lorentzian(1.0, 0.005, 1.0, 40.0).unwrap(),
        0.0,
        BathLabel::Single,
    )
    .unwrap();
    let r = coarse_grain_check(&coarse_grain_preset(), &b, 5, 10, 0.0).unwrap();
    assert!(r.deviation > 1e-2, "{}", r.deviation);
}
