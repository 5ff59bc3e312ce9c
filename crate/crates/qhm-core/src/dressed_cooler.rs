//! Laser-dressed two-level cooler of a buffer gas (BG).
//!
//! The EM bath drives dressed transitions at ν ± Ω_G and the BG drives
//! transitions at the Rabi frequency Ω_G = √(Δ² + 4g²), with Δ = ω₀ - ν.

use rayon::prelude::*;
use serde::Serialize;

use crate::bath_spectra::ThermalBath;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CoolerError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("initial excited population {0} outside [0, 1]")]
    BadPopulation(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DressedConfig {
    pub omega0: f64,
    pub nu: f64,
    pub g: f64,
    /// Cold EM bath, usually at T = 0.
    pub em_bath: ThermalBath,
    /// Hot buffer gas.
    pub bg_bath: ThermalBath,
    /// Process constant A in the heat current.
    pub scale: f64,
}

impl DressedConfig {
    pub fn new(
        omega0: f64,
        nu: f64,
        g: f64,
        em_bath: ThermalBath,
        bg_bath: ThermalBath,
        scale: f64,
    ) -> Result<Self, CoolerError> {
        if !(g > 0.0 && g.is_finite()) {
            return Err(CoolerError::InvalidParameter(format!("g must be positive, got {g}")));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(CoolerError::InvalidParameter(format!("A must be positive, got {scale}")));
        }
        if !omega0.is_finite() || !nu.is_finite() {
            return Err(CoolerError::InvalidParameter("frequencies must be finite".into()));
        }
        Ok(DressedConfig { omega0, nu, g, em_bath, bg_bath, scale })
    }

    pub fn delta(&self) -> f64 {
        self.omega0 - self.nu
    }

    pub fn rabi(&self) -> f64 {
        self.delta().hypot(2.0 * self.g)
    }

    /// Same config with the laser retuned to detuning Δ.
    pub fn with_detuning(&self, delta: f64) -> Self {
        DressedConfig { nu: self.omega0 - delta, ..self.clone() }
    }

    pub fn with_coupling(&self, g: f64) -> Result<Self, CoolerError> {
        Self::new(self.omega0, self.nu, g, self.em_bath.clone(), self.bg_bath.clone(), self.scale)
    }

    fn bg_boltzmann(&self) -> f64 {
        self.bg_bath.boltzmann(self.rabi())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rates {
    pub r_plus: f64,
    pub r_minus: f64,
    pub r_zero: f64,
}

pub fn rates(cfg: &DressedConfig) -> Rates {
    let d = cfg.delta();
    let og = cfg.rabi();
    let pre = |s: f64| ((og + s * d) / (2.0 * og)).powi(2);
    Rates {
        r_plus: pre(1.0) * cfg.em_bath.eval_thermal(cfg.nu + og),
        r_minus: pre(-1.0) * cfg.em_bath.eval_thermal(cfg.nu - og),
        r_zero: (2.0 * cfg.g / og).powi(2) * cfg.bg_bath.eval_thermal(og),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Cooling,
    Heating,
    Neutral,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Cooling => "Cooling",
            Verdict::Heating => "Heating",
            Verdict::Neutral => "Neutral",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoolerReport {
    pub delta: f64,
    pub omega_g: f64,
    pub r_plus: f64,
    pub r_minus: f64,
    pub r_zero: f64,
    /// Heat current out of the BG; positive means the BG is cooled.
    pub j_h: f64,
    pub verdict: Verdict,
    pub rho_ee_ss: f64,
}

/// J_h = A(r₊e^{-β_BG Ω_G} - r₋).
pub fn heat_current(cfg: &DressedConfig) -> CoolerReport {
    let r = rates(cfg);
    let x = cfg.bg_boltzmann();
    let gain = cfg.scale * r.r_plus * x;
    let loss = cfg.scale * r.r_minus;
    let j_h = gain - loss;
    let verdict = if j_h.abs() <= 1e-14 * (gain + loss) {
        Verdict::Neutral
    } else if j_h > 0.0 {
        Verdict::Cooling
    } else {
        Verdict::Heating
    };
    let (a, b) = relaxation(cfg, &r);
    CoolerReport {
        delta: cfg.delta(),
        omega_g: cfg.rabi(),
        r_plus: r.r_plus,
        r_minus: r.r_minus,
        r_zero: r.r_zero,
        j_h,
        verdict,
        rho_ee_ss: if a + b > 0.0 { b / (a + b) } else { f64::NAN },
    }
}

/// Decay rate a = r₀ + r₊ and pump rate b = e^{-β_BG Ω_G}r₀ + r₋.
fn relaxation(cfg: &DressedConfig, r: &Rates) -> (f64, f64) {
    (r.r_zero + r.r_plus, cfg.bg_boltzmann() * r.r_zero + r.r_minus)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KmsRatio {
    /// Cooling power at +|Δ| over heating power at -|Δ|.
    pub ratio: f64,
    /// e^{β_BG |Δ|}.
    pub reference: f64,
    pub deviation: f64,
}

/// |J_h(-Δ)|/|J_h(Δ)| for Δ > 0 (mirrored for Δ < 0); exactly 1 at Δ = 0.
pub fn kms_power_ratio(cfg: &DressedConfig) -> KmsRatio {
    let d = cfg.delta().abs();
    if d == 0.0 {
        return KmsRatio { ratio: 1.0, reference: 1.0, deviation: 0.0 };
    }
    let cool = heat_current(&cfg.with_detuning(d)).j_h;
    let heat = heat_current(&cfg.with_detuning(-d)).j_h;
    let ratio = heat.abs() / cool.abs();
    let reference = (cfg.bg_bath.beta * d).exp();
    KmsRatio { ratio, reference, deviation: (ratio - reference).abs() / reference }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopulationTrajectory {
    pub times: Vec<f64>,
    pub rho_ee: Vec<f64>,
    pub steady: f64,
    /// ln(ρ_gg/ρ_ee)/Ω_G at steady state.
    pub beta_tls: f64,
}

/// Closed-form relaxation of ρ_ee toward b/(a + b).
pub fn evolve_populations(cfg: &DressedConfig, rho_ee0: f64, times: &[f64]) -> Result<PopulationTrajectory, CoolerError> {
    if !(0.0..=1.0).contains(&rho_ee0) {
        return Err(CoolerError::BadPopulation(rho_ee0));
    }
    let r = rates(cfg);
    let (a, b) = relaxation(cfg, &r);
    let k = a + b;
    let steady = if k > 0.0 { b / k } else { rho_ee0 };
    let rho_ee = times.iter().map(|&t| steady + (rho_ee0 - steady) * (-k * t).exp()).collect();
    let beta_tls = ((1.0 - steady) / steady).ln() / cfg.rabi();
    Ok(PopulationTrajectory { times: times.to_vec(), rho_ee, steady, beta_tls })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetuningSweep {
    pub rows: Vec<CoolerReport>,
    /// Refined zero of J_h(Δ) in the sign-change bracket closest to Δ = 0.
    pub crossing: Option<f64>,
    /// The grid bracket that contains the crossing.
    pub bracket: Option<(f64, f64)>,
}

pub fn detuning_sweep(template: &DressedConfig, grid: &[f64]) -> DetuningSweep {
    let rows: Vec<CoolerReport> = grid.par_iter().map(|&d| heat_current(&template.with_detuning(d))).collect();
    let bracket = rows
        .windows(2)
        .filter(|w| w[0].j_h != 0.0 && w[1].j_h != 0.0 && w[0].j_h.signum() != w[1].j_h.signum())
        .map(|w| (w[0].delta, w[1].delta))
        .min_by(|a, b| (a.0.abs() + a.1.abs()).total_cmp(&(b.0.abs() + b.1.abs())));
    let crossing = bracket.map(|(mut lo, mut hi)| {
        let f = |d: f64| heat_current(&template.with_detuning(d)).j_h;
        let flo = f(lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            let fm = f(mid);
            if fm == 0.0 {
                return mid;
            }
            if fm.signum() == flo.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    });
    DetuningSweep { rows, crossing, bracket }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath_spectra::{BathLabel, SpectrumModel};

    fn cfg(delta: f64, g: f64, t_bg: f64) -> DressedConfig {
        let em = ThermalBath::at_temperature(SpectrumModel::flat(1.0, 1e3).unwrap(), 0.0, BathLabel::Cold).unwrap();
        let bg = ThermalBath::at_temperature(SpectrumModel::flat(0.3, 1e3).unwrap(), t_bg, BathLabel::Hot).unwrap();
        DressedConfig::new(50.0, 50.0 - delta, g, em, bg, 1.0).unwrap()
    }

    #[test]
    fn resonant_flat_rates_are_quarter() {
        let r = rates(&cfg(0.0, 0.2, 1.0));
        assert!((r.r_plus - 0.25).abs() < 1e-15 && (r.r_minus - 0.25).abs() < 1e-15);
        let rep = heat_current(&cfg(0.0, 0.2, 1.0));
        assert_eq!(rep.verdict, Verdict::Heating);
    }

    #[test]
    fn prefactors_sum() {
        for &(d, g) in &[(0.3, 0.1), (-1.7, 0.4), (2.0, 2.0)] {
            let c = cfg(d, g, 1.0);
            let r = rates(&c);
            let og = c.rabi();
            assert!(og >= d.abs() && og >= 2.0 * g);
            let oracle = (og * og + d * d) / (2.0 * og * og);
            assert!((r.r_plus + r.r_minus - oracle).abs() < 1e-14);
        }
    }

    #[test]
    fn weak_red_detuned_drive_cools() {
        let c = cfg(1.0, 0.01, 1.0);
        assert!(rates(&c).r_minus / rates(&c).r_plus < 1e-3);
        assert_eq!(heat_current(&c).verdict, Verdict::Cooling);
        assert_eq!(heat_current(&cfg(1.0, 0.01, 0.0)).verdict, Verdict::Heating);
    }

    #[test]
    fn kms_ratio_converges_in_g() {
        let d = 0.5;
        let devs: Vec<f64> =
            [0.05, 0.02, 0.01].iter().map(|f| kms_power_ratio(&cfg(d, f * d, 1.0)).deviation).collect();
        assert!(devs[0] > devs[1] && devs[1] > devs[2]);
        assert!(kms_power_ratio(&cfg(d, 0.01, 1.0)).deviation < 1e-2);
        assert_eq!(kms_power_ratio(&cfg(0.0, 0.01, 1.0)).ratio, 1.0);
    }

    #[test]
    fn populations_match_rk4() {
        let c = cfg(0.7, 0.3, 0.8);
        let times: Vec<f64> = (0..=10).map(|k| 0.5 * k as f64).collect();
        let tr = evolve_populations(&c, 0.9, &times).unwrap();
        let r = rates(&c);
        let (a, b) = (r.r_zero + r.r_plus, (-c.rabi() / 0.8).exp() * r.r_zero + r.r_minus);
        let f = |p: f64| -a * p + b * (1.0 - p);
        let (mut p, h) = (0.9, 1e-3);
        for (k, &t) in times.iter().enumerate() {
            if k > 0 {
                for _ in 0..500 {
                    let k1 = f(p);
                    let k2 = f(p + 0.5 * h * k1);
                    let k3 = f(p + 0.5 * h * k2);
                    let k4 = f(p + h * k3);
                    p += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                }
            }
            assert!((tr.rho_ee[k] - p).abs() < 1e-8, "t = {t}");
        }
    }

    #[test]
    fn no_collisions_resonant_half() {
        let c = cfg(0.0, 0.2, 1.0);
        let em = c.em_bath.clone();
        let bg = ThermalBath::at_temperature(SpectrumModel::flat(1e-300, 1e3).unwrap(), 1.0, BathLabel::Hot).unwrap();
        let c = DressedConfig::new(50.0, 50.0, 0.2, em, bg, 1.0).unwrap();
        let tr = evolve_populations(&c, 0.0, &[0.0]).unwrap();
        assert!((tr.steady - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sweep_sign_rule() {
        let grid: Vec<f64> = (-10..=10).filter(|&k| k != 0).map(|k| 0.1 * k as f64).collect();
        let s = detuning_sweep(&cfg(0.0, 1e-3, 1.0), &grid);
        for r in &s.rows {
            assert_eq!(r.j_h > 0.0, r.delta > 0.0);
        }
        let x = s.crossing.unwrap();
        assert!(x.abs() <= 0.2);
    }
}
