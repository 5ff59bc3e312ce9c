//! Cross-module invariant suite behind `qhm validate` and the acceptance test.
//!
//! Each criterion is a list of clauses. A clause marked `known` is one that
//! the implemented model cannot satisfy; the criterion then reports FAIL, but
//! the suite only counts it as unexpected when some other clause fails too.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};

use num_complex::Complex64 as C64;
use qhm_core::bath_spectra::{BathLabel, SpectrumModel, ThermalBath};
use qhm_core::dressed_cooler::{self, DressedConfig};
use qhm_core::floquet::{self, Modulation};
use qhm_core::multilevel_machine::{self as ml, AlignmentPreset, MultilevelConfig};
use qhm_core::nonmarkovian::{self as nm, CycleConfig, MeasurementInputs};
use qhm_core::quantum_piston::{self as qp, Damping, Preparation};
use qhm_core::thirdlaw::{self, ColdBathModel};
use qhm_core::tls_machine::{self as tls, Regime, SeparatedSpec, TlsMachineConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::presets::PRESETS;
use crate::run;
use crate::scenario::Format;

#[derive(Debug, Clone, PartialEq)]
pub struct Clause {
    pub name: &'static str,
    pub passed: bool,
    pub known: bool,
    pub detail: String,
}

fn clause(name: &'static str, passed: bool, detail: String) -> Clause {
    Clause { name, passed, known: false, detail }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub id: u32,
    pub module: &'static str,
    pub title: &'static str,
    pub passed: bool,
    /// Failed, and every failing clause is a documented known failure.
    pub known_failure: bool,
    pub clauses: Vec<Clause>,
    pub detail: String,
}

impl Outcome {
    pub fn status(&self) -> &'static str {
        if self.passed {
            "PASS"
        } else {
            "FAIL"
        }
    }
}

type CheckFn = fn() -> Result<Vec<Clause>, String>;

pub struct Criterion {
    pub id: u32,
    pub module: &'static str,
    pub title: &'static str,
    check: CheckFn,
}

pub const CRITERIA: &[Criterion] = &[
    Criterion { id: 1, module: "tls_machine", title: "thermodynamic laws on random configs", check: laws },
    Criterion { id: 2, module: "tls_machine", title: "Carnot attainment at Omega_crit", check: carnot },
    Criterion { id: 3, module: "tls_machine", title: "single engine/refrigerator switch", check: regime_switch },
    Criterion { id: 4, module: "tls_machine", title: "efficiency at max power beats Curzon-Ahlborn", check: curzon },
    Criterion { id: 5, module: "floquet", title: "sideband normalization and Bessel oracle", check: bessel },
    Criterion { id: 6, module: "multilevel_machine", title: "multilevel enhancement limits", check: enhancement },
    Criterion { id: 7, module: "multilevel_machine", title: "closed form vs dense Liouvillian", check: dense },
    Criterion { id: 8, module: "quantum_piston", title: "piston work capacity calculus", check: piston },
    Criterion { id: 9, module: "quantum_piston", title: "efficiency and COP bound branches", check: bounds },
    Criterion { id: 10, module: "dressed_cooler", title: "dressed cooler sign rule and KMS ratio", check: cooler },
    Criterion { id: 11, module: "nonmarkovian", title: "non-Markovian rates and work", check: nonmarkovian },
    Criterion { id: 12, module: "nonmarkovian", title: "coarse-grained rates vs Floquet sums", check: coarse },
    Criterion { id: 13, module: "thirdlaw", title: "cooling trajectories and finite-time zero", check: third_law },
    Criterion { id: 14, module: "cli_runner", title: "byte-identical preset datasets", check: determinism },
];

/// True when `filter` names the criterion's module or its number.
pub fn selected(c: &Criterion, filter: Option<&str>) -> bool {
    match filter {
        None => true,
        Some(f) => c.module == f || c.id.to_string() == f,
    }
}

pub fn run_criterion(c: &Criterion) -> Outcome {
    let res = catch_unwind(AssertUnwindSafe(c.check));
    let clauses = match res {
        Ok(Ok(cl)) => cl,
        Ok(Err(e)) => vec![clause("run", false, format!("error: {e}"))],
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            vec![clause("run", false, format!("panic: {msg}"))]
        }
    };
    let passed = !clauses.is_empty() && clauses.iter().all(|c| c.passed);
    let known_failure = !passed && clauses.iter().all(|c| c.passed || c.known);
    let detail = clauses
        .iter()
        .map(|c| format!("{}{}: {}", if c.passed { "" } else { "FAILED " }, c.name, c.detail))
        .collect::<Vec<_>>()
        .join("; ");
    Outcome { id: c.id, module: c.module, title: c.title, passed, known_failure, clauses, detail }
}

pub fn run_suite(filter: Option<&str>) -> Vec<Outcome> {
    CRITERIA.iter().filter(|c| selected(c, filter)).map(run_criterion).collect()
}

fn e<E: std::fmt::Display>(x: E) -> String {
    x.to_string()
}

fn debye(strength: f64, cutoff: f64, t: f64, label: BathLabel) -> Result<ThermalBath, String> {
    ThermalBath::at_temperature(SpectrumModel::debye(strength, cutoff).map_err(e)?, t, label).map_err(e)
}

struct RandomMachine {
    machine: TlsMachineConfig,
    t_h: f64,
    t_c: f64,
}

fn random_machine(rng: &mut ChaCha8Rng) -> Result<RandomMachine, String> {
    let omega0 = rng.gen_range(0.5..2.0);
    let t_c = rng.gen_range(0.3..1.5);
    let t_h = t_c * rng.gen_range(1.1..3.0);
    let hot = debye(rng.gen_range(0.2..2.0), rng.gen_range(3.0..8.0), t_h, BathLabel::Hot)?;
    let cold = debye(rng.gen_range(0.2..2.0), rng.gen_range(3.0..8.0), t_c, BathLabel::Cold)?;
    let rate = omega0 * rng.gen_range(0.05..1.0);
    let depth = rate * rng.gen_range(0.0..1.5);
    let m = Modulation::sinusoidal(omega0, depth, rate).map_err(e)?;
    Ok(RandomMachine { machine: TlsMachineConfig::new(m, Some(hot), Some(cold)).map_err(e)?, t_h, t_c })
}

/// Random partition of n - 1 dipoles into mutually orthogonal collinear groups.
fn random_groups(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut left = n - 1;
    let mut sizes = Vec::new();
    while left > 0 {
        let k = rng.gen_range(1..=left);
        sizes.push(k);
        left -= k;
    }
    sizes
}

fn random_pure(rng: &mut ChaCha8Rng, n: usize) -> qhm_core::lindblad::CMat {
    let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    if a.iter().all(|x| *x == 0.0) {
        ml::ground_state(n)
    } else {
        ml::pure_state(&a)
    }
}

fn random_multilevel(rng: &mut ChaCha8Rng, max_n: usize) -> Result<(MultilevelConfig, f64, f64), String> {
    let rm = random_machine(rng)?;
    let n = rng.gen_range(2..=max_n);
    let groups = random_groups(rng, n);
    let init = if rng.gen_bool(0.3) { ml::ground_state(n) } else { random_pure(rng, n) };
    let cfg = MultilevelConfig::new(n, ml::grouped_dipoles(&groups), rm.machine, init).map_err(e)?;
    Ok((cfg, rm.t_h, rm.t_c))
}

fn laws() -> Result<Vec<Clause>, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x51);
    let (mut first, mut second) = (0.0f64, f64::NEG_INFINITY);
    let mut count = 0;
    let mut check = |r: &tls::ThermoReport, t_h: f64, t_c: f64| {
        first = first.max(r.first_law_residual().abs() / r.scale);
        second = second.max(r.j_h / t_h + r.j_c / t_c);
        count += 1;
    };
    for _ in 0..30 {
        let rm = random_machine(&mut rng)?;
        check(&tls::power(&rm.machine).map_err(e)?, rm.t_h, rm.t_c);
    }
    for _ in 0..30 {
        let (cfg, t_h, t_c) = random_multilevel(&mut rng, 6)?;
        check(&ml::currents_and_power(&cfg).map_err(e)?, t_h, t_c);
    }
    Ok(vec![
        clause("first law", first <= 1e-10, format!("{count} configs, max |W+Jc+Jh|/scale = {first:.2e}")),
        clause("second law", second <= 1e-12, format!("max Jh/Th + Jc/Tc = {second:.2e}")),
    ])
}

fn carnot() -> Result<Vec<Clause>, String> {
    let spec = SeparatedSpec::debye_preset();
    let tpl = spec.template().map_err(e)?;
    let crit = tls::critical_frequency(spec.omega0, spec.t_h, spec.t_c).map_err(e)?;
    let at = tls::power(&tpl.machine(crit).map_err(e)?).map_err(e)?;
    let worst = at.j_c.abs().max(at.j_h.abs()).max(at.w_dot.abs()) / at.scale;
    let below = tls::power(&tpl.machine(crit - 1e-7).map_err(e)?).map_err(e)?;
    let carnot = tls::carnot_efficiency(spec.t_h, spec.t_c);
    let eta = below.figure_of_merit;
    let ok_eta = below.regime == Regime::Engine && eta.is_some_and(|x| (x - carnot).abs() <= 1e-6);
    Ok(vec![
        clause("zero currents", worst <= 1e-12, format!("Omega_crit = {crit}, max |current|/scale = {worst:.2e}")),
        clause("efficiency limit", ok_eta, format!("eta(Omega_crit - 1e-7) = {eta:?}, Carnot = {carnot}")),
    ])
}

fn preset_sweep() -> Result<(SeparatedSpec, tls::SweepResult), String> {
    let spec = SeparatedSpec::debye_preset();
    let grid: Vec<f64> = (2..=100).map(|k| k as f64 / 100.0).collect();
    let res = tls::sweep_modulation(&spec.template().map_err(e)?, &grid).map_err(e)?;
    Ok((spec, res))
}

fn regime_switch() -> Result<Vec<Clause>, String> {
    let (spec, res) = preset_sweep()?;
    let crit = tls::critical_frequency(spec.omega0, spec.t_h, spec.t_c).map_err(e)?;
    let nonzero: Vec<(f64, f64)> =
        res.rows.iter().filter(|r| r.report.w_dot != 0.0).map(|r| (r.omega, r.report.w_dot)).collect();
    let changes: Vec<(f64, f64)> = nonzero
        .windows(2)
        .filter(|w| w[0].1.signum() != w[1].1.signum())
        .map(|w| (w[0].0, w[1].0))
        .collect();
    let brackets = changes.len() == 1 && changes[0].0 <= crit && crit <= changes[0].1;
    let labels = res.rows.iter().all(|r| {
        let reg = r.report.regime;
        if r.omega < crit {
            reg == Regime::Engine
        } else if r.omega > crit {
            reg == Regime::Refrigerator
        } else {
            matches!(reg, Regime::Engine | Regime::Refrigerator | Regime::Idle)
        }
    });
    let cop_carnot = tls::carnot_cop(spec.t_h, spec.t_c);
    let mut worst = f64::NEG_INFINITY;
    for r in res.rows.iter().filter(|r| r.report.regime == Regime::Refrigerator) {
        let quoted = tls::efficiency_or_cop(spec.omega0, r.omega, spec.t_h, spec.t_c, r.report.regime);
        let actual = r.report.figure_of_merit.unwrap_or(f64::INFINITY);
        worst = worst.max(actual.max(quoted.value.unwrap_or(f64::INFINITY)));
    }
    Ok(vec![
        clause("one sign change", brackets, format!("changes {changes:?}, Omega_crit = {crit}")),
        clause("regime labels", labels, "Engine below Omega_crit, Refrigerator above".into()),
        clause("COP <= Carnot COP", worst <= cop_carnot, format!("max COP = {worst}, Carnot COP = {cop_carnot}")),
    ])
}

fn curzon() -> Result<Vec<Clause>, String> {
    let (spec, res) = preset_sweep()?;
    let best = res.omega_max.ok_or("no engine region")?;
    let eta = best.report.figure_of_merit.ok_or("no efficiency at Omega_max")?;
    let ca = tls::curzon_ahlborn(spec.t_h, spec.t_c);
    Ok(vec![clause("eta(Omega_max) > CA", eta > ca, format!("Omega_max = {:.6}, eta = {eta:.6}, CA = {ca:.6}", best.omega))])
}

/// J_q(x) by its power series; adequate for x ≤ 2.
fn bessel_j(q: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = half.powi(q as i32) / (1..=q).map(f64::from).product::<f64>();
    let mut sum = term;
    for k in 1..60u32 {
        term *= -half * half / (f64::from(k) * f64::from(k + q));
        sum += term;
    }
    sum
}

fn bessel() -> Result<Vec<Clause>, String> {
    let (mut norm, mut diff) = (0.0f64, 0.0f64);
    for ratio in [0.05, 0.2, 0.5, 1.0, 1.5, 2.0] {
        let rate = 0.4;
        let m = Modulation::sinusoidal(1.0, ratio * rate, rate).map_err(e)?;
        let w = floquet::weights(&m, 30).map_err(e)?;
        norm = norm.max((w.total() - 1.0).abs());
        let xi = floquet::xi_coefficients(&m, 10).map_err(e)?;
        for q in -10i64..=10 {
            let j = bessel_j(q.unsigned_abs() as u32, ratio).abs();
            diff = diff.max((xi[(q + 10) as usize].norm() - j).abs());
        }
    }
    Ok(vec![
        clause("sum P(q) = 1", norm <= 1e-8, format!("max |sum - 1| = {norm:.2e}")),
        clause("|xi(q)| = |J_q|", diff <= 1e-7, format!("max deviation {diff:.2e} for |q| <= 10, kappa/Omega <= 2")),
    ])
}

fn enhancement() -> Result<Vec<Clause>, String> {
    let n = 11;
    let single = |beta_omega0: f64| -> Result<TlsMachineConfig, String> {
        let b = ThermalBath::at_temperature(
            SpectrumModel::flat(1.0, 10.0).map_err(e)?,
            1.0 / beta_omega0,
            BathLabel::Single,
        )
        .map_err(e)?;
        TlsMachineConfig::new(Modulation::None { carrier: 1.0 }, None, Some(b)).map_err(e)
    };
    let enh = |m: &TlsMachineConfig, a: AlignmentPreset| -> Result<f64, String> {
        let cfg = MultilevelConfig::new(n, a.dipoles(n), m.clone(), ml::ground_state(n)).map_err(e)?;
        ml::enhancement(&cfg).map_err(e)
    };
    let cold = single(20.0)?;
    let presets = [AlignmentPreset::NonAligned, AlignmentPreset::Partial, AlignmentPreset::Aligned];
    let low: Vec<f64> = presets.iter().map(|&a| enh(&cold, a)).collect::<Result<_, _>>()?;
    let low_ok = low.iter().all(|x| (x - 10.0).abs() <= 1e-4);
    let hot = single(1e-3)?;
    let na = enh(&hot, AlignmentPreset::NonAligned)?;
    let al = enh(&hot, AlignmentPreset::Aligned)?;
    let target = 2.0 * (n - 1) as f64 / n as f64;

    let rm = random_machine(&mut ChaCha8Rng::seed_from_u64(0x66))?;
    let cfg = MultilevelConfig::new(3, ml::grouped_dipoles(&[2]), rm.machine, ml::pure_state(&[0.0, 1.0, -1.0]))
        .map_err(e)?;
    let r = ml::currents_and_power(&cfg).map_err(e)?;
    let dark_zero = r.j_c == 0.0 && r.j_h == 0.0 && r.w_dot == 0.0;
    Ok(vec![
        clause("beta_eff omega0 = 20", low_ok, format!("enhancements {low:?}")),
        clause("non-aligned, hot", (na - target).abs() <= 1e-3, format!("{na:.6} vs {target:.6}")),
        clause("aligned, hot", (al - 10.0).abs() <= 1e-3, format!("{al:.6} vs 10")),
        clause("dark initial state", dark_zero, format!("currents ({}, {}, {})", r.j_c, r.j_h, r.w_dot)),
    ])
}

fn dense() -> Result<Vec<Clause>, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x77);
    let mut worst_rho = 0.0f64;
    let mut worst_j = 0.0f64;
    for _ in 0..20 {
        let (cfg, _, _) = random_multilevel(&mut rng, 5)?;
        let ss = ml::steady_state(&cfg).map_err(e)?;
        let d = ml::dense_oracle(&cfg).map_err(e)?;
        worst_rho = worst_rho.max((&ss.rho_bare - &d.rho).norm() / d.rho.norm());
        let r = ml::currents_and_power(&cfg).map_err(e)?;
        for (a, b) in [(r.j_c, d.j_c), (r.j_h, d.j_h), (r.w_dot, d.w_dot)] {
            let scale = b.abs().max(a.abs()).max(1e-12 * r.scale);
            worst_j = worst_j.max((a - b).abs() / scale);
        }
    }
    Ok(vec![
        clause("steady state", worst_rho <= 1e-8, format!("20 configs, max relative |rho - rho_dense| = {worst_rho:.2e}")),
        clause("currents", worst_j <= 1e-8, format!("max relative current deviation {worst_j:.2e}")),
    ])
}

fn piston() -> Result<Vec<Clause>, String> {
    let omega_p = 1.0;
    let mut thermal = 0.0f64;
    for beta in [0.3, 1.0, 3.0, f64::INFINITY] {
        thermal = thermal.max(qp::prepare_auto(omega_p, &Preparation::Thermal { beta }).map_err(e)?.1.work_capacity);
    }
    let mut coh = 0.0f64;
    for a2 in [0.25, 1.0, 2.0, 4.0] {
        let alpha = C64::from_polar(f64::sqrt(a2), 0.7);
        let s = qp::prepare_auto(omega_p, &Preparation::Coherent { alpha }).map_err(e)?.1;
        coh = coh.max((s.work_capacity - a2 * omega_p).abs());
    }
    let mut disp = 0.0f64;
    for (a2, beta) in [(0.5, 2.0), (1.0, 1.0), (2.0, 0.5)] {
        let alpha = C64::new(f64::sqrt(a2), 0.0);
        let s = qp::prepare_auto(omega_p, &Preparation::DisplacedThermal { alpha, beta }).map_err(e)?.1;
        disp = disp.max((s.work_capacity - a2 * omega_p).abs());
    }
    let (mode, fock) = qp::prepare_auto(omega_p, &Preparation::Fock { n: 3 }).map_err(e)?;
    let coherent = qp::prepare(&mode, &Preparation::Coherent { alpha: C64::new(3f64.sqrt(), 0.0) }).map_err(e)?;
    let d = Damping { gamma: 1.0, nbar: 0.0, duration: 8.0, steps: 8000, sample_every: 500 };
    let tf = qp::evolve_damped(&fock, &mode, &d).map_err(e)?;
    let tc = qp::evolve_damped(&coherent, &mode, &d).map_err(e)?;
    let monotone = tf.samples.windows(2).all(|w| w[1].work_capacity < w[0].work_capacity);
    let last = tf.samples.last().map_or(f64::INFINITY, |s| s.work_capacity);
    let lower = tf.samples.iter().zip(&tc.samples).skip(1).all(|(f, c)| c.entropy < f.entropy);
    Ok(vec![
        clause("thermal capacity", thermal <= 1e-10 * omega_p, format!("max {thermal:.2e}")),
        clause("coherent capacity", coh <= 1e-8 * omega_p, format!("max deviation {coh:.2e}")),
        clause("displaced thermal capacity", disp <= 1e-6 * omega_p, format!("max deviation {disp:.2e}")),
        clause(
            "Fock decay",
            monotone && last < 1e-6 * omega_p && tf.valid,
            format!("{} samples, final capacity {last:.2e}", tf.samples.len()),
        ),
        clause("coherent entropy lower", lower && tc.valid, "every sample with t > 0".into()),
    ])
}

fn bounds() -> Result<Vec<Clause>, String> {
    let (t_c, t_h) = (1.0, 2.0);
    let carnot = 1.0 - t_c / t_h;
    let mut engine_ok = true;
    for k in 0..100 {
        let t_p = 0.02 * (k as f64 + 0.5);
        let b = qp::engine_efficiency_bound(t_c, t_h, t_p);
        engine_ok &= if t_p < t_c { b == 1.0 - t_p / t_h && b > carnot } else { b == carnot };
    }
    let carnot_cop = t_c / (t_h - t_c);
    let de = -0.5;
    let mut fridge_ok = true;
    for k in 0..100 {
        let ds = -1.0 + 2.0 * (k as f64 + 0.5) / 100.0;
        let b = qp::refrigerator_cop_bound(0.3, de, ds, t_c, t_h).map_err(e)?;
        fridge_ok &= b.bound == carnot_cop * (1.0 - t_h * ds / de) && ((b.bound > carnot_cop) == (ds > 0.0));
    }
    let rejects = qp::refrigerator_cop_bound(0.3, 0.1, 0.1, t_c, t_h).is_err();
    Ok(vec![
        clause("engine branch", engine_ok, "100 values of T_P across T_c".into()),
        clause("refrigerator branch", fridge_ok, "100 values of dS_P/dt at dE_P/dt = -0.5".into()),
        clause("non-powering piston rejected", rejects, "dE_P/dt >= 0".into()),
    ])
}

fn cooler_cfg(delta: f64, g: f64, t_bg: f64) -> Result<DressedConfig, String> {
    let em = ThermalBath::at_temperature(SpectrumModel::flat(1.0, 1e3).map_err(e)?, 0.0, BathLabel::Cold).map_err(e)?;
    let bg = ThermalBath::at_temperature(SpectrumModel::flat(0.3, 1e3).map_err(e)?, t_bg, BathLabel::Hot).map_err(e)?;
    DressedConfig::new(50.0, 50.0 - delta, g, em, bg, 1.0).map_err(e)
}

fn cooler() -> Result<Vec<Clause>, String> {
    let tpl = cooler_cfg(0.0, 0.01, 1.0)?;
    let grid: Vec<f64> = (-20..=20).filter(|&k| k != 0).map(|k| 0.25 * k as f64).collect();
    let bad: Vec<f64> = grid
        .iter()
        .copied()
        .filter(|&d| dressed_cooler::heat_current(&tpl.with_detuning(d)).j_h.signum() != d.signum())
        .collect();
    let d = 0.5;
    let devs: Vec<f64> = [10.0, 30.0, 100.0]
        .iter()
        .map(|f| cooler_cfg(d, d / f, 1.0).map(|c| dressed_cooler::kms_power_ratio(&c).deviation))
        .collect::<Result<_, _>>()?;
    Ok(vec![
        clause("sign rule", bad.is_empty(), format!("{} detunings in [-5, 5], violations at {bad:?}", grid.len())),
        clause(
            "KMS ratio",
            devs[0] > devs[1] && devs[1] > devs[2] && devs[2] < 1e-2,
            format!("deviations at g = |Delta|/10, /30, /100: {devs:?}"),
        ),
    ])
}

/// Random finite-temperature Debye configs in the slow-modulation limit.
pub fn markovian_configs(count: usize) -> Result<Vec<CycleConfig>, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xB11);
    (0..count)
        .map(|_| {
            let cutoff = rng.gen_range(1.5..3.0);
            let b = debye(rng.gen_range(0.5..2.0), cutoff, rng.gen_range(0.2..2.0), BathLabel::Single)?;
            let tc = nm::correlation_time(&b.spectrum);
            let rate = rng.gen_range(0.005..0.01) / tc;
            let omega0 = rng.gen_range(0.5..1.5);
            CycleConfig::new(b, omega0, 0.1 * rate, rate, 1).map_err(e)
        })
        .collect()
}

fn nonmarkovian() -> Result<Vec<Clause>, String> {
    let b = nm::lorentzian_preset();
    let tc = nm::correlation_time(&b.spectrum);
    let short = nm::transition_rates(&b, 1.0, &[0.0, 1e-4 * tc]).map_err(e)?;
    let ratio = short.r_e[1] / short.r_g[1];
    let long = nm::transition_rates(&b, 1.0, &[0.0, 1e3 * tc]).map_err(e)?;
    let gr = 2.0 * PI * b.eval_thermal(1.0);
    let gr_dev = (long.r_e[1] - gr).abs() / gr;

    let cfgs = markovian_configs(20)?;
    let mut positive = Vec::new();
    for (k, c) in cfgs.iter().enumerate() {
        let w = nm::cycle_work(c).map_err(e)?.first();
        let g = 2.0 * PI * c.bath.eval_thermal(c.omega0).max(c.bath.eval_thermal(-c.omega0));
        let scale = c.depth * g * c.period();
        if w > 1e-12 * scale {
            positive.push(format!("#{k}: W/scale = {:.2e}", w / scale));
        }
    }
    let mut markov = clause(
        "Markovian cycle work <= 0",
        positive.is_empty(),
        format!("{} of 20 configs give W > 0 ({})", positive.len(), positive.join(", ")),
    );
    markov.known = true;

    let grid: Vec<f64> = (0..8).map(|k| 3.0 * (100.0f64 / 3.0).powf(k as f64 / 7.0)).collect();
    let scan = nm::work_scan(&b, 1.0, 0.05, &grid).map_err(e)?;
    let best = scan.iter().map(|r| r.w_ext_cycle).fold(f64::NEG_INFINITY, f64::max);

    let mut rng = ChaCha8Rng::seed_from_u64(0xB12);
    let mut ident = 0.0f64;
    for _ in 0..100 {
        let (de, t, ds, wsl, w) =
            (rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0), rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0), rng.gen_range(-1.0..1.0));
        let r = nm::work_budget(de, t, ds, wsl, w);
        let mag = r.w_sel_max.abs().max(r.w_nsm_max.abs()).max(r.w_sl.abs()).max(1.0);
        ident = ident.max((r.w_sel_max - r.w_nsm_max - r.w_sl).abs() / (f64::EPSILON * mag));
    }

    let cfg = CycleConfig::new(b.clone(), 1.0, 0.05, 2.0, 1).map_err(e)?;
    let rep = nm::work_comparison(&cfg, &MeasurementInputs { delta_s_meas: 0.3, levels: 2, sl_entropy: 0.0 }).map_err(e)?;
    Ok(vec![
        clause("short-time ratio", (ratio - 1.0).abs() <= 1e-3, format!("R_e/R_g at 1e-4 t_c = {ratio:.9}")),
        clause("Golden-Rule limit", gr_dev <= 1e-2, format!("relative deviation at 1e3 t_c = {gr_dev:.2e}")),
        markov,
        clause("positive work in scan", best > 0.0, format!("max W_ext_cycle over Omega*t_c in [3, 100] = {best:.3e}")),
        clause("work budget identity", ident <= 4.0, format!("max residual {ident:.1} ulp")),
        clause(
            "T = 0 selective work",
            rep.w_sel_max == rep.delta_e_meas && rep.delta_e_meas > 0.0,
            format!("W_sel_max = {}, Delta E_meas = {}", rep.w_sel_max, rep.delta_e_meas),
        ),
    ])
}

fn coarse() -> Result<Vec<Clause>, String> {
    let r = nm::coarse_grain_check(&nm::coarse_grain_preset(), &nm::lorentzian_preset(), 5, 50, 0.0).map_err(e)?;
    Ok(vec![clause("50 periods", r.deviation <= 1e-3, format!("relative deviation {:.2e}", r.deviation))])
}

fn third_law() -> Result<Vec<Clause>, String> {
    let linear = ColdBathModel::new(1.0, 3, 1.0, 1.0).map_err(e)?;
    let a = thirdlaw::integrate_temperature(&linear, 20.0, 401).map_err(e)?;
    let b = thirdlaw::integrate_temperature_numeric(&linear, 20.0, 401).map_err(e)?;
    let positive = a.temperature.iter().chain(&b.temperature).all(|&t| t > 0.0);

    let (t0, c) = (1.0, 1.0);
    let magnon = ColdBathModel::magnon(3, c, t0).map_err(e)?;
    let (horizon, samples) = (2.0, 201);
    let h = horizon / (samples - 1) as f64;
    let t_star = t0 / c;
    let mut hits = Vec::new();
    for traj in [
        thirdlaw::integrate_temperature(&magnon, horizon, samples).map_err(e)?,
        thirdlaw::integrate_temperature_numeric(&magnon, horizon, samples).map_err(e)?,
    ] {
        let k = traj.temperature.iter().position(|&t| t == 0.0).ok_or("magnon trajectory never reaches 0")?;
        hits.push(traj.t[k]);
    }
    let hit_ok = hits.iter().all(|t| (t - t_star).abs() <= h);

    let mut agree = 0.0f64;
    for g in [0.0, 0.25, 0.5, 0.9, 1.0, 1.5, 2.0, 3.0] {
        let m = ColdBathModel::new(g, 3, 1.0, 1.0).map_err(e)?;
        let a = thirdlaw::integrate_temperature(&m, 3.0, 301).map_err(e)?;
        let b = thirdlaw::integrate_temperature_numeric(&m, 3.0, 301).map_err(e)?;
        for (x, y) in a.temperature.iter().zip(&b.temperature) {
            agree = agree.max((x - y).abs() / m.t0);
        }
    }
    Ok(vec![
        clause("gamma = 1 stays positive", positive, format!("T(20/C) = {:.3e}", a.temperature.last().unwrap_or(&0.0))),
        clause("gamma = 0 zero time", hit_ok, format!("first zero at {hits:?}, T0/C = {t_star}, step {h}")),
        clause("closed form vs numeric", agree <= 1e-8, format!("max |dT|/T0 = {agree:.2e}")),
    ])
}

fn determinism() -> Result<Vec<Clause>, String> {
    let mut out = Vec::new();
    for p in PRESETS {
        let s = p.scenario().map_err(e)?;
        let render = || -> Result<(Vec<u8>, Vec<u8>), String> {
            let r = run::execute(&s).map_err(e)?;
            Ok((r.dataset.render(Format::Csv).map_err(e)?, r.dataset.render(Format::Json).map_err(e)?))
        };
        let first = render()?;
        let second = render()?;
        out.push(clause(p.name, first == second, format!("{} csv bytes", first.0.len())));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_series_values() {
        // Tabulated: J0(1) = 0.7651976865579666, J1(2) = 0.5767248077568734.
        assert!((bessel_j(0, 1.0) - 0.7651976865579666).abs() < 1e-15);
        assert!((bessel_j(1, 2.0) - 0.5767248077568734).abs() < 1e-15);
        let lead = 0.025f64.powi(10) / 3628800.0;
        assert!((bessel_j(10, 0.05) / lead - 1.0).abs() < 1e-4);
    }

    #[test]
    fn filter_by_module_or_number() {
        let c = &CRITERIA[12];
        assert!(selected(c, Some("thirdlaw")));
        assert!(selected(c, Some("13")));
        assert!(!selected(c, Some("floquet")));
        assert_eq!(CRITERIA.len(), 14);
    }

    #[test]
    fn known_failure_requires_all_other_clauses() {
        fn mixed() -> Result<Vec<Clause>, String> {
            let mut k = clause("k", false, String::new());
            k.known = true;
            Ok(vec![k, clause("ok", true, String::new())])
        }
        fn broken() -> Result<Vec<Clause>, String> {
            let mut k = clause("k", false, String::new());
            k.known = true;
            Ok(vec![k, clause("bad", false, String::new())])
        }
        let c = Criterion { id: 99, module: "x", title: "x", check: mixed };
        let o = run_criterion(&c);
        assert!(!o.passed && o.known_failure);
        let c = Criterion { id: 99, module: "x", title: "x", check: broken };
        assert!(!run_criterion(&c).known_failure);
    }

    #[test]
    fn panics_become_failures() {
        fn boom() -> Result<Vec<Clause>, String> {
            panic!("boom")
        }
        let o = run_criterion(&Criterion { id: 99, module: "x", title: "x", check: boom });
        assert!(!o.passed && !o.known_failure && o.detail.contains("boom"));
    }
}
