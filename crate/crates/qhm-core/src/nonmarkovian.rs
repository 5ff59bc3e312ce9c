//! Non-Markovian qubit dynamics in a single bath after an impulsive
//! measurement: sinc-kernel transition rates, rate-equation populations,
//! system-bath correlation energy, measurement-triggered work cycles and the
//! comparison with the Szilard-Landauer bound.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::bath_spectra::{SpectrumModel, ThermalBath};
use crate::floquet::{self, FloquetError, Modulation};
use crate::quad::{self, QuadError, Tolerance};

/// Relative tolerance of each rate quadrature.
pub const RATE_REL_TOL: f64 = 1e-7;
/// Minimum trapezoid points per modulation period in the cycle work.
pub const CYCLE_POINTS: usize = 2048;
/// Grid points per period of the fastest rate oscillation, (cutoff + ω₀)⁻¹.
const POINTS_PER_OSCILLATION: f64 = 32.0;
/// κ/Ω above which the weak-modulation formula is flagged.
pub const WEAK_DEPTH_LIMIT: f64 = 0.3;
/// σ below this counts as a Spohn violation.
pub const SPOHN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NmError {
    #[error("bath is not integrable: {0}")]
    NonIntegrable(String),
    #[error("rate quadrature failed at t = {t}: {source}")]
    Quadrature { t: f64, source: QuadError },
    #[error("time grid must start at 0 and ascend")]
    BadGrid,
    #[error("rate and population grids differ in length")]
    Misaligned,
    #[error("entropy {s} outside [0, ln {d}]")]
    EntropyOutOfRange { s: f64, d: usize },
    #[error("level count must be >= 2, got {0}")]
    TooFewLevels(usize),
    #[error("correlation energy needs a Lorentzian spectrum")]
    NotLorentzian,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Floquet(#[from] FloquetError),
}

/// T = 0 Lorentzian bath (η = 1, Γ = 0.2, ν₀ = 1, cutoff 40) used by the
/// work scan and the coarse-graining check.
pub fn lorentzian_preset() -> ThermalBath {
    let s = SpectrumModel::lorentzian(1.0, 0.2, 1.0, 40.0).expect("valid preset");
    ThermalBath::at_temperature(s, 0.0, crate::bath_spectra::BathLabel::Single).expect("valid preset")
}

/// Sinusoidal modulation ω₀ = 1, κ = 0.4, Ω = 0.8 (κ/Ω = 0.5) for the
/// coarse-graining preset. Ω ≠ ω₀ keeps every sideband off the T = 0 edge at ω = 0.
pub fn coarse_grain_preset() -> Modulation {
    Modulation::sinusoidal(1.0, 0.4, 0.8).expect("valid preset")
}

/// Memory time t_c: 1/Γ for a Lorentzian, 1/cutoff otherwise.
pub fn correlation_time(spectrum: &SpectrumModel) -> f64 {
    match spectrum {
        SpectrumModel::Lorentzian { width, .. } => 1.0 / width,
        SpectrumModel::Band { inner, .. } => correlation_time(inner),
        other => 1.0 / other.cutoff(),
    }
}

/// Support of G_T: [-cutoff, cutoff] at T > 0, [0, cutoff] at T = 0.
fn support(bath: &ThermalBath) -> (f64, f64) {
    let c = bath.spectrum.cutoff();
    if bath.beta.is_infinite() {
        (0.0, c)
    } else {
        (-c, c)
    }
}

fn spectral_breaks(bath: &ThermalBath) -> Vec<f64> {
    let mut v = vec![0.0];
    for b in bath.spectrum.breakpoints() {
        v.push(b);
        if !bath.beta.is_infinite() {
            v.push(-b);
        }
    }
    v
}

/// sin(xt)/x with the t·sinc limit near x = 0.
fn sin_over(x: f64, t: f64) -> f64 {
    let y = x * t;
    if y.abs() < 1e-8 {
        t * (1.0 - y * y / 6.0)
    } else {
        (y).sin() / x
    }
}

/// 2∫G_T(ω) sin((ω - a)t)/(ω - a) dω, i.e. 2t∫G_T sinc[(ω - a)t].
/// `density` is ∫G_T; the absolute tolerance is 10⁻¹² of the bound 2t∫G_T.
fn sinc_rate(bath: &ThermalBath, a: f64, t: f64, density: f64) -> Result<f64, NmError> {
    if t == 0.0 {
        return Ok(0.0);
    }
    let (lo, hi) = support(bath);
    let mut extra = spectral_breaks(bath);
    extra.push(a);
    let breaks = quad::panel_breaks(lo, hi, 4.0 * PI / t, &extra);
    let f = |w: f64| bath.eval_thermal(w) * sin_over(w - a, t);
    let tol = Tolerance::new(1e-12 * t * density, RATE_REL_TOL);
    let est = quad::integrate_with_breaks(f, &breaks, tol).map_err(|source| NmError::Quadrature { t, source })?;
    Ok(2.0 * est.value)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateTrajectory {
    pub t: Vec<f64>,
    pub r_e: Vec<f64>,
    pub r_g: Vec<f64>,
}

fn check_grid(t: &[f64]) -> Result<(), NmError> {
    if t.first() != Some(&0.0) || t.windows(2).any(|w| w[1] <= w[0]) {
        return Err(NmError::BadGrid);
    }
    Ok(())
}

/// Checks integrability and returns ∫G_T.
fn require_integrable(bath: &ThermalBath) -> Result<f64, NmError> {
    if bath.is_integrable() {
        zeno_slope(bath)
    } else {
        Err(NmError::NonIntegrable(format!(
            "G_0(0+) = {} > 0 at finite temperature makes G_T ~ 1/|w| near zero",
            bath.spectrum.zero_limit()
        )))
    }
}

/// R_e(t) and R_g(t) on a grid starting at 0.
pub fn transition_rates(bath: &ThermalBath, omega0: f64, t: &[f64]) -> Result<RateTrajectory, NmError> {
    let density = require_integrable(bath)?;
    check_grid(t)?;
    let pairs: Vec<(f64, f64)> = t
        .par_iter()
        .map(|&ti| Ok((sinc_rate(bath, omega0, ti, density)?, sinc_rate(bath, -omega0, ti, density)?)))
        .collect::<Result<_, NmError>>()?;
    let (r_e, r_g) = pairs.into_iter().unzip();
    Ok(RateTrajectory { t: t.to_vec(), r_e, r_g })
}

/// Ṙ₀ = ∫G_T(ω)dω, the short-time slope scale (R ≈ 2Ṙ₀t).
pub fn zeno_slope(bath: &ThermalBath) -> Result<f64, NmError> {
    bath.integrated_density().map_err(|e| NmError::NonIntegrable(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopulationTrajectory {
    pub t: Vec<f64>,
    pub rho_ee: Vec<f64>,
    /// Steps where the population left [0, 1] and was clamped.
    pub clamp_events: usize,
}

/// Trapezoidal (implicit) stepping of ρ̇_ee = R_g ρ_gg - R_e ρ_ee on the rate grid.
pub fn evolve_populations(rates: &RateTrajectory, rho_ee0: f64) -> Result<PopulationTrajectory, NmError> {
    let n = rates.t.len();
    if rates.r_e.len() != n || rates.r_g.len() != n {
        return Err(NmError::Misaligned);
    }
    if !(0.0..=1.0).contains(&rho_ee0) {
        return Err(NmError::InvalidParameter(format!("rho_ee(0) = {rho_ee0} outside [0, 1]")));
    }
    let mut rho = Vec::with_capacity(n);
    rho.push(rho_ee0);
    let mut clamps = 0;
    for k in 0..n.saturating_sub(1) {
        let h = rates.t[k + 1] - rates.t[k];
        let (g0, k0) = (rates.r_g[k], rates.r_g[k] + rates.r_e[k]);
        let (g1, k1) = (rates.r_g[k + 1], rates.r_g[k + 1] + rates.r_e[k + 1]);
        let p = rho[k];
        let mut next = (p + 0.5 * h * (g0 - k0 * p + g1)) / (1.0 + 0.5 * h * k1);
        if !(0.0..=1.0).contains(&next) {
            clamps += 1;
            next = next.clamp(0.0, 1.0);
        }
        rho.push(next);
    }
    Ok(PopulationTrajectory { t: rates.t.clone(), rho_ee: rho, clamp_events: clamps })
}

/// ⟨H_SB⟩_eq = -ω₀∫₀^∞ Γ²/(Γ² + (ν₀ - ω)²) · 1/(1 + ω/ω₀) dω for a
/// Lorentzian of width Γ centred at ν₀ (coupling amplitude and cutoff unused).
pub fn correlation_energy(spectrum: &SpectrumModel, omega0: f64) -> Result<f64, NmError> {
    let (g, nu) = match spectrum {
        SpectrumModel::Lorentzian { width, center, .. } => (*width, *center),
        _ => return Err(NmError::NotLorentzian),
    };
    if !(g > 0.0 && nu > 0.0 && omega0 > 0.0) {
        return Err(NmError::InvalidParameter("Gamma, nu0 and omega0 must be positive".into()));
    }
    let f = |w: f64| {
        let d = nu - w;
        g * g / (g * g + d * d) / (1.0 + w / omega0)
    };
    let top = nu + 100.0 * g.max(omega0);
    let mut br: Vec<f64> =
        [-4.0, -1.0, 0.0, 1.0, 4.0].iter().map(|k| nu + k * g).filter(|w| *w > 0.0 && *w < top).collect();
    br.insert(0, 0.0);
    br.push(top);
    let tol = Tolerance::new(1e-15, 1e-12);
    let body = quad::integrate_with_breaks(f, &br, tol).map_err(|source| NmError::Quadrature { t: 0.0, source })?;
    let tail = quad::integrate_semi_infinite(f, top, tol).map_err(|source| NmError::Quadrature { t: 0.0, source })?;
    Ok(-omega0 * (body.value + tail.value))
}

/// ΔE_meas = -⟨H_SB⟩_eq > 0.
pub fn measurement_energy(spectrum: &SpectrumModel, omega0: f64) -> Result<f64, NmError> {
    Ok(-correlation_energy(spectrum, omega0)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleConfig {
    pub bath: ThermalBath,
    pub omega0: f64,
    pub depth: f64,
    pub rate: f64,
    pub cycles: usize,
}

impl CycleConfig {
    pub fn new(bath: ThermalBath, omega0: f64, depth: f64, rate: f64, cycles: usize) -> Result<Self, NmError> {
        if !(rate > 0.0) || !(depth >= 0.0) || cycles == 0 {
            return Err(NmError::InvalidParameter("need rate > 0, depth >= 0, cycles >= 1".into()));
        }
        require_integrable(&bath)?;
        Ok(CycleConfig { bath, omega0, depth, rate, cycles })
    }

    pub fn outside_weak_regime(&self) -> bool {
        self.depth / self.rate > WEAK_DEPTH_LIMIT
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.rate
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleWork {
    /// Work extracted in each cycle; the first entry is W_ext_cycle.
    pub per_cycle: Vec<f64>,
    pub outside_weak_regime: bool,
}

impl CycleWork {
    pub fn first(&self) -> f64 {
        self.per_cycle[0]
    }
}

/// W = -κ∫ J_g(t) Ω cos Ωt dt over each period, J_g(t) = ∫₀ᵗ R_g.
pub fn cycle_work(cfg: &CycleConfig) -> Result<CycleWork, NmError> {
    let outside = cfg.outside_weak_regime();
    if cfg.depth == 0.0 {
        return Ok(CycleWork { per_cycle: vec![0.0; cfg.cycles], outside_weak_regime: outside });
    }
    let fastest = (cfg.bath.spectrum.cutoff() + cfg.omega0.abs()) / cfg.rate;
    let per = CYCLE_POINTS.max((POINTS_PER_OSCILLATION * fastest).ceil() as usize);
    let n = per * cfg.cycles;
    let h = cfg.period() / per as f64;
    let grid: Vec<f64> = (0..=n).map(|k| k as f64 * h).collect();
    let density = zeno_slope(&cfg.bath)?;
    let r_g: Vec<f64> =
        grid.par_iter().map(|&t| sinc_rate(&cfg.bath, -cfg.omega0, t, density)).collect::<Result<_, _>>()?;
    let mut j = vec![0.0; n + 1];
    for k in 1..=n {
        j[k] = j[k - 1] + 0.5 * h * (r_g[k - 1] + r_g[k]);
    }
    let integrand: Vec<f64> = grid.iter().zip(&j).map(|(&t, &jg)| jg * cfg.rate * (cfg.rate * t).cos()).collect();
    let per_cycle = (0..cfg.cycles)
        .map(|c| {
            let s = &integrand[c * per..=(c + 1) * per];
            let sum: f64 = s.windows(2).map(|w| 0.5 * h * (w[0] + w[1])).sum();
            -cfg.depth * sum
        })
        .collect();
    Ok(CycleWork { per_cycle, outside_weak_regime: outside })
}

/// One row of a work scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WorkScanRow {
    pub omega_times_tc: f64,
    pub w_ext_cycle: f64,
}

/// W_ext_cycle over Ω·t_c values for a fixed bath, ω₀ and κ.
pub fn work_scan(bath: &ThermalBath, omega0: f64, depth: f64, omega_tc: &[f64]) -> Result<Vec<WorkScanRow>, NmError> {
    let tc = correlation_time(&bath.spectrum);
    omega_tc
        .iter()
        .map(|&x| {
            let cfg = CycleConfig::new(bath.clone(), omega0, depth, x / tc, 1)?;
            Ok(WorkScanRow { omega_times_tc: x, w_ext_cycle: cycle_work(&cfg)?.first() })
        })
        .collect()
}

/// W_SL = T ln d - T S.
pub fn sl_bound(d: usize, entropy: f64, temperature: f64) -> Result<f64, NmError> {
    if d < 2 {
        return Err(NmError::TooFewLevels(d));
    }
    let ln_d = (d as f64).ln();
    if !(entropy >= -1e-15 && entropy <= ln_d + 1e-15) {
        return Err(NmError::EntropyOutOfRange { s: entropy, d });
    }
    if temperature == 0.0 {
        return Ok(0.0);
    }
    Ok(temperature * ln_d - temperature * entropy)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WorkReport {
    pub w_ext_cycle: f64,
    pub delta_e_meas: f64,
    pub w_nsm_max: f64,
    pub w_sel_max: f64,
    pub w_sl: f64,
}

/// W_NSM_max = ΔE_meas - TΔS_meas and W_sel_max = W_NSM_max + W_SL.
pub fn work_budget(delta_e_meas: f64, temperature: f64, delta_s_meas: f64, w_sl: f64, w_ext_cycle: f64) -> WorkReport {
    let w_nsm_max = if temperature == 0.0 { delta_e_meas } else { delta_e_meas - temperature * delta_s_meas };
    WorkReport { w_ext_cycle, delta_e_meas, w_nsm_max, w_sel_max: w_nsm_max + w_sl, w_sl }
}

/// Inputs of the selective-measurement comparison not fixed by the cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasurementInputs {
    /// Entropy cost of the measurement (caller supplied).
    pub delta_s_meas: f64,
    /// Level count d of the Szilard-Landauer term.
    pub levels: usize,
    /// Entropy of the state the selective measurement leaves.
    pub sl_entropy: f64,
}

/// Full work comparison at the bath temperature.
pub fn work_comparison(cfg: &CycleConfig, inputs: &MeasurementInputs) -> Result<WorkReport, NmError> {
    if inputs.delta_s_meas < 0.0 {
        return Err(NmError::InvalidParameter("Delta S_meas must be >= 0".into()));
    }
    let t = cfg.bath.temperature();
    let de = measurement_energy(&cfg.bath.spectrum, cfg.omega0)?;
    let w_sl = sl_bound(inputs.levels, inputs.sl_entropy, t)?;
    let w = cycle_work(cfg)?.first();
    Ok(work_budget(de, t, inputs.delta_s_meas, w_sl, w))
}

/// Entropy change of a diagonal state between two population vectors.
pub fn measurement_entropy(pre: &[f64], post: &[f64]) -> f64 {
    let s = |p: &[f64]| -> f64 { p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum() };
    s(post) - s(pre)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpohnMonitor {
    pub t: Vec<f64>,
    /// σ(t) = -d/dt S(ρ(t)||ρ₀).
    pub sigma: Vec<f64>,
    pub violations: Vec<(f64, f64)>,
}

/// Relative entropy of two diagonal qubit states given by their excited populations.
pub fn relative_entropy(p: f64, p0: f64) -> f64 {
    let term = |a: f64, b: f64| if a == 0.0 { 0.0 } else { a * (a / b).ln() };
    term(p, p0) + term(1.0 - p, 1.0 - p0)
}

/// σ(t) by centred differences (one-sided at the ends) and the intervals
/// where it drops below -10⁻¹².
pub fn entropy_production_monitor(traj: &PopulationTrajectory, rho0_ee: f64) -> SpohnMonitor {
    let t = &traj.t;
    let s: Vec<f64> = traj.rho_ee.iter().map(|&p| relative_entropy(p, rho0_ee)).collect();
    let n = t.len();
    let sigma: Vec<f64> = (0..n)
        .map(|k| {
            if n < 2 {
                0.0
            } else if k == 0 {
                -(s[1] - s[0]) / (t[1] - t[0])
            } else if k == n - 1 {
                -(s[k] - s[k - 1]) / (t[k] - t[k - 1])
            } else {
                -(s[k + 1] - s[k - 1]) / (t[k + 1] - t[k - 1])
            }
        })
        .collect();
    let mut violations = Vec::new();
    let mut start: Option<usize> = None;
    for k in 0..n {
        let bad = sigma[k] < -SPOHN_TOL;
        match (bad, start) {
            (true, None) => start = Some(k),
            (false, Some(s0)) => {
                violations.push((t[s0], t[k - 1]));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s0) = start {
        violations.push((t[s0], t[n - 1]));
    }
    SpohnMonitor { t: t.clone(), sigma, violations }
}

/// E(a, t) = ∫₀ᵗ e^{ias} ds.
fn phase_integral(a: f64, t: f64) -> C64 {
    let x = 0.5 * a * t;
    let sinc = if x.abs() < 1e-8 { 1.0 - x * x / 6.0 } else { x.sin() / x };
    C64::from_polar(t * sinc, x)
}

/// ξ̃(t) = exp(-i∫₀ᵗ δω ds), periodic in t.
fn xi_tilde(m: &Modulation, t: f64) -> C64 {
    let rate = m.rate();
    let tl = if rate > 0.0 { t.rem_euclid(2.0 * PI / rate) } else { t };
    C64::from_polar(1.0, -m.phase(tl))
}

/// Modulated rates at time t: emission uses ξ̃*(t)ξ̃(t') and absorption the
/// conjugate pair, expanded in the Floquet coefficients ξ(q).
pub fn modulated_rates(
    bath: &ThermalBath,
    m: &Modulation,
    xi: &[C64],
    t: f64,
    density: f64,
) -> Result<(f64, f64), NmError> {
    if t == 0.0 {
        return Ok((0.0, 0.0));
    }
    let q_max = (xi.len() / 2) as i64;
    let w0 = m.carrier();
    let rate = m.rate();
    let xt = xi_tilde(m, t);
    let (lo, hi) = support(bath);
    let mut extra = spectral_breaks(bath);
    for q in -q_max..=q_max {
        extra.push(w0 + q as f64 * rate);
        extra.push(-w0 - q as f64 * rate);
    }
    let breaks = quad::panel_breaks(lo, hi, 4.0 * PI / t, &extra);
    let tol = Tolerance::new(1e-12 * t * density, RATE_REL_TOL);
    let kernel = |w: f64, emission: bool| -> f64 {
        let g = bath.eval_thermal(w);
        if g == 0.0 {
            return 0.0;
        }
        let mut acc = C64::new(0.0, 0.0);
        if emission {
            let x = w - w0;
            for (k, c) in xi.iter().enumerate() {
                let q = k as i64 - q_max;
                acc += c * phase_integral(x - q as f64 * rate, t);
            }
            2.0 * g * (xt.conj() * C64::from_polar(1.0, -x * t) * acc).re
        } else {
            let y = w + w0;
            for (k, c) in xi.iter().enumerate() {
                let q = k as i64 - q_max;
                acc += c.conj() * phase_integral(y + q as f64 * rate, t);
            }
            2.0 * g * (xt * C64::from_polar(1.0, -y * t) * acc).re
        }
    };
    let q = |emission: bool| {
        quad::integrate_with_breaks(|w| kernel(w, emission), &breaks, tol)
            .map(|e| e.value)
            .map_err(|source| NmError::Quadrature { t, source })
    };
    Ok((q(true)?, q(false)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoarseGrainReport {
    pub periods: usize,
    pub averaged_e: f64,
    pub averaged_g: f64,
    pub floquet_e: f64,
    pub floquet_g: f64,
    /// Largest |averaged - Floquet| over the larger Floquet target.
    pub deviation: f64,
}

/// Average the modulated rates over period n (of length τ) and compare with
/// 2π Σ_q P(q) G_T(±(ω₀ + qΩ)); the 2π matches the sinc-kernel normalization.
pub fn coarse_grain_check(
    m: &Modulation,
    bath: &ThermalBath,
    q_max: i64,
    periods: usize,
    period_if_unmodulated: f64,
) -> Result<CoarseGrainReport, NmError> {
    let density = require_integrable(bath)?;
    let xi = floquet::xi_coefficients(m, q_max)?;
    let w0 = m.carrier();
    let rate = m.rate();
    let tau = if rate > 0.0 { 2.0 * PI / rate } else { period_if_unmodulated };
    let (a, b) = (periods as f64 * tau, (periods + 1) as f64 * tau);
    let tol = Tolerance::new(1e-14, 1e-7);
    let avg = |emission: bool| -> Result<f64, NmError> {
        let f = |t: f64| {
            let r = modulated_rates(bath, m, &xi, t, density).expect("rate quadrature");
            if emission {
                r.0
            } else {
                r.1
            }
        };
        let br = quad::panel_breaks(a, b, tau / 16.0, &[]);
        quad::integrate_with_breaks(f, &br, tol).map(|e| e.value / tau).map_err(|source| NmError::Quadrature { t: a, source })
    };
    let averaged_e = avg(true)?;
    let averaged_g = avg(false)?;
    let (mut floquet_e, mut floquet_g) = (0.0, 0.0);
    for (k, c) in xi.iter().enumerate() {
        let f = w0 + (k as i64 - q_max) as f64 * rate;
        let p = c.norm_sqr();
        floquet_e += 2.0 * PI * p * bath.eval_thermal(f);
        floquet_g += 2.0 * PI * p * bath.eval_thermal(-f);
    }
    let scale = floquet_e.abs().max(floquet_g.abs());
    let deviation = (averaged_e - floquet_e).abs().max((averaged_g - floquet_g).abs()) / scale;
    Ok(CoarseGrainReport { periods, averaged_e, averaged_g, floquet_e, floquet_g, deviation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath_spectra::BathLabel;

    fn lorentz(gamma: f64) -> ThermalBath {
        let s = SpectrumModel::lorentzian(1.0, gamma, 1.0, 40.0).unwrap();
        ThermalBath::at_temperature(s, 0.0, BathLabel::Single).unwrap()
    }

    #[test]
    fn rates_vanish_at_zero_and_reject_bad_grids() {
        let r = transition_rates(&lorentz(0.2), 1.0, &[0.0, 0.1]).unwrap();
        assert_eq!((r.r_e[0], r.r_g[0]), (0.0, 0.0));
        assert!(transition_rates(&lorentz(0.2), 1.0, &[0.1, 0.2]).is_err());
        let hot = ThermalBath::at_temperature(SpectrumModel::lorentzian(1.0, 0.2, 1.0, 40.0).unwrap(), 1.0, BathLabel::Single)
            .unwrap();
        assert!(matches!(transition_rates(&hot, 1.0, &[0.0, 1.0]), Err(NmError::NonIntegrable(_))));
    }

    #[test]
    fn constant_equal_rates_relax_to_half() {
        let t: Vec<f64> = (0..=2000).map(|k| 0.01 * k as f64).collect();
        let rates = RateTrajectory { t: t.clone(), r_e: vec![1.0; t.len()], r_g: vec![1.0; t.len()] };
        let p = evolve_populations(&rates, 0.0, ).unwrap();
        assert!((p.rho_ee.last().unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(p.clamp_events, 0);
    }

    #[test]
    fn sl_bound_cases() {
        assert!((sl_bound(2, 0.0, 1.5).unwrap() - 1.5 * 2f64.ln()).abs() < 1e-15);
        assert_eq!(sl_bound(3, 3f64.ln(), 2.0).unwrap(), 0.0);
        assert_eq!(sl_bound(2, 0.3, 0.0).unwrap(), 0.0);
        assert!(sl_bound(2, 1.0, 1.0).is_err());
    }

    #[test]
    fn work_budget_identity() {
        let r = work_budget(0.7, 0.5, 0.2, 0.3, 0.0);
        assert!((r.w_sel_max - r.w_nsm_max - r.w_sl).abs() < 1e-15);
        let r = work_budget(0.0, 0.5, 0.0, 0.3, 0.0);
        assert_eq!(r.w_sel_max, r.w_sl);
    }

    #[test]
    fn zero_depth_gives_zero_work() {
        let cfg = CycleConfig::new(lorentz(0.2), 1.0, 0.0, 2.0, 1).unwrap();
        assert_eq!(cycle_work(&cfg).unwrap().first(), 0.0);
    }

    #[test]
    fn constant_trajectory_has_zero_production() {
        let t: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let traj = PopulationTrajectory { t, rho_ee: vec![0.2; 10], clamp_events: 0 };
        let m = entropy_production_monitor(&traj, 0.2);
        assert!(m.sigma.iter().all(|&s| s == 0.0));
        assert!(m.violations.is_empty());
    }
}
