//! Cooling-speed scaling near absolute zero: J_c ∝ -T^{γ+d}, C_V ∝ T^d and
//! the reduced law dT/dt = -C T^γ, integrated in closed form and numerically.

use serde::Serialize;

/// Temperatures below this are reported as exactly zero.
pub const ZERO_CLIP: f64 = 1e-30;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ThirdLawError {
    #[error("invalid cold-bath model: {0}")]
    InvalidModel(String),
    #[error("horizon must be positive and finite, got {0}")]
    BadHorizon(f64),
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("step size underflow at t = {0}")]
    StepUnderflow(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ColdBathModel {
    /// Dispersion exponent of the coupling, γ ≥ 0.
    pub gamma: f64,
    /// Spatial dimension d ∈ {1, 2, 3}.
    pub dim: u32,
    /// Rate constant C > 0 (scales with inverse bath volume).
    pub rate: f64,
    /// Initial temperature T₀ > 0.
    pub t0: f64,
}

impl ColdBathModel {
    pub fn new(gamma: f64, dim: u32, rate: f64, t0: f64) -> Result<Self, ThirdLawError> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(ThirdLawError::InvalidModel(format!("gamma must be >= 0, got {gamma}")));
        }
        if !(1..=3).contains(&dim) {
            return Err(ThirdLawError::InvalidModel(format!("dimension must be 1, 2 or 3, got {dim}")));
        }
        if !(rate > 0.0 && rate.is_finite() && t0 > 0.0 && t0.is_finite()) {
            return Err(ThirdLawError::InvalidModel(format!("need C > 0 and T0 > 0, got C = {rate}, T0 = {t0}")));
        }
        Ok(ColdBathModel { gamma, dim, rate, t0 })
    }

    /// Magnon-like bath: frequency-independent coupling.
    pub fn magnon(dim: u32, rate: f64, t0: f64) -> Result<Self, ThirdLawError> {
        Self::new(0.0, dim, rate, t0)
    }

    /// Acoustic-phonon-like bath: coupling linear in frequency.
    pub fn phonon(dim: u32, rate: f64, t0: f64) -> Result<Self, ThirdLawError> {
        Self::new(1.0, dim, rate, t0)
    }

    /// Exponent of the heat current, γ + d.
    pub fn current_exponent(&self) -> f64 {
        self.gamma + self.dim as f64
    }

    /// Exponent of the heat capacity, d.
    pub fn heat_capacity_exponent(&self) -> f64 {
        self.dim as f64
    }

    /// Exponent of dT/dt after dividing the two.
    pub fn cooling_exponent(&self) -> f64 {
        self.current_exponent() - self.heat_capacity_exponent()
    }

    pub fn rhs(&self, t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else {
            -self.rate * t.powf(self.gamma)
        }
    }

    /// Finite time at which T reaches zero, for 0 ≤ γ < 1.
    pub fn zero_time(&self) -> Option<f64> {
        (self.gamma < 1.0).then(|| self.t0.powf(1.0 - self.gamma) / ((1.0 - self.gamma) * self.rate))
    }

    /// Closed-form T(t).
    pub fn temperature(&self, t: f64) -> f64 {
        let g = self.gamma;
        let v = if g == 1.0 {
            self.t0 * (-self.rate * t).exp()
        } else {
            let base = self.t0.powf(1.0 - g) - (1.0 - g) * self.rate * t;
            if base <= 0.0 {
                0.0
            } else {
                base.powf(1.0 / (1.0 - g))
            }
        };
        clip(v)
    }
}

fn clip(t: f64) -> f64 {
    if t < ZERO_CLIP {
        0.0
    } else {
        t
    }
}

/// J_c = -prefactor · T^{γ+d}.
pub fn current_scaling(t: f64, gamma: f64, dim: u32, prefactor: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    -prefactor * t.powf(gamma + dim as f64)
}

/// C_V = prefactor · T^d.
pub fn heat_capacity(t: f64, dim: u32, prefactor: f64) -> f64 {
    prefactor * t.max(0.0).powi(dim as i32)
}

/// dT/dt = J_c / C_V, which reduces to -(a/b) T^γ.
pub fn temperature_derivative(t: f64, gamma: f64, dim: u32, current_prefactor: f64, cv_prefactor: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    current_scaling(t, gamma, dim, current_prefactor) / heat_capacity(t, dim, cv_prefactor)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum Verdict {
    FiniteTimeZero { t_star: f64 },
    Exponential,
    AsymptoticPowerLaw,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::FiniteTimeZero { .. } => "finite-time-zero",
            Verdict::Exponential => "exponential",
            Verdict::AsymptoticPowerLaw => "asymptotic-power-law",
        }
    }

    /// Whether absolute zero is unattainable in finite time.
    pub fn unattainable(&self) -> bool {
        !matches!(self, Verdict::FiniteTimeZero { .. })
    }
}

pub fn verdict(model: &ColdBathModel) -> Verdict {
    match model.zero_time() {
        Some(t_star) => Verdict::FiniteTimeZero { t_star },
        None if model.gamma == 1.0 => Verdict::Exponential,
        None => Verdict::AsymptoticPowerLaw,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoolingTrajectory {
    pub t: Vec<f64>,
    pub temperature: Vec<f64>,
    /// J_c(t)/|J_c(0)| = -(T/T₀)^{γ+d}.
    pub j_c_scaled: Vec<f64>,
    pub zero_time: Option<f64>,
}

fn grid(horizon: f64, samples: usize) -> Result<Vec<f64>, ThirdLawError> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(ThirdLawError::BadHorizon(horizon));
    }
    if samples < 2 {
        return Err(ThirdLawError::TooFewSamples(samples));
    }
    Ok((0..samples).map(|k| horizon * k as f64 / (samples - 1) as f64).collect())
}

fn assemble(model: &ColdBathModel, t: Vec<f64>, temperature: Vec<f64>) -> CoolingTrajectory {
    let p = model.current_exponent();
    let j_c_scaled = temperature.iter().map(|&x| -(x / model.t0).powf(p)).collect();
    CoolingTrajectory { t, temperature, j_c_scaled, zero_time: model.zero_time() }
}

/// Closed-form trajectory on `samples` evenly spaced points of [0, horizon].
pub fn integrate_temperature(
    model: &ColdBathModel,
    horizon: f64,
    samples: usize,
) -> Result<CoolingTrajectory, ThirdLawError> {
    let t = grid(horizon, samples)?;
    let temps = t.iter().map(|&x| model.temperature(x)).collect();
    Ok(assemble(model, t, temps))
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Adaptive Dormand-Prince integration of a scalar ODE y' = f(t, y),
/// landing exactly on every output time. Once |y| drops to `floor` the
/// state is treated as an absorbing zero.
pub fn dopri5<F: Fn(f64, f64) -> f64>(
    f: F,
    y0: f64,
    outputs: &[f64],
    rtol: f64,
    atol: f64,
    floor: f64,
) -> Result<Vec<f64>, ThirdLawError> {
    let mut out = Vec::with_capacity(outputs.len());
    let (mut t, mut y) = (outputs.first().copied().unwrap_or(0.0), y0);
    let span = outputs.last().copied().unwrap_or(t) - t;
    let mut h = (span * 1e-3).max(1e-12);
    for &target in outputs {
        if y.abs() <= floor {
            y = 0.0;
            out.push(y);
            continue;
        }
        while target - t > 1e-15 * target.abs().max(1.0) && y.abs() > floor {
            let step = h.min(target - t);
            let mut k = [0.0; 7];
            for s in 0..7 {
                let yi = y + step * (0..s).map(|j| A[s][j] * k[j]).sum::<f64>();
                k[s] = f(t + C[s] * step, yi);
            }
            let y5 = y + step * (0..7).map(|i| B5[i] * k[i]).sum::<f64>();
            let y4 = y + step * (0..7).map(|i| B4[i] * k[i]).sum::<f64>();
            let sc = atol + rtol * y.abs().max(y5.abs());
            let err = ((y5 - y4) / sc).abs();
            if err <= 1.0 {
                t += step;
                y = y5;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = step * factor;
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(ThirdLawError::StepUnderflow(t));
            }
        }
        if y.abs() <= floor {
            y = 0.0;
        }
        out.push(y);
    }
    Ok(out)
}

/// Numeric counterpart of [`integrate_temperature`]; T is floored at 0.
pub fn integrate_temperature_numeric(
    model: &ColdBathModel,
    horizon: f64,
    samples: usize,
) -> Result<CoolingTrajectory, ThirdLawError> {
    let t = grid(horizon, samples)?;
    let ys = dopri5(|_, y| model.rhs(y), model.t0, &t, 1e-12, 1e-15 * model.t0, 1e-12 * model.t0)?;
    let mut temps: Vec<f64> = ys.into_iter().map(|y| clip(y.max(0.0))).collect();
    for k in 1..temps.len() {
        temps[k] = temps[k].min(temps[k - 1]);
    }
    Ok(assemble(model, t, temps))
}

/// CSV rows (t, T, J_c_scaled).
pub fn trajectory_rows(traj: &CoolingTrajectory) -> Vec<[f64; 3]> {
    (0..traj.t.len()).map(|k| [traj.t[k], traj.temperature[k], traj.j_c_scaled[k]]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_cooling_hits_zero_at_two() {
        let m = ColdBathModel::magnon(3, 1.0, 2.0).unwrap();
        assert_eq!(m.zero_time(), Some(2.0));
        assert_eq!(m.temperature(0.5), 1.5);
        assert_eq!(m.temperature(2.5), 0.0);
        assert_eq!(verdict(&m), Verdict::FiniteTimeZero { t_star: 2.0 });
    }

    #[test]
    fn quadratic_gives_harmonic_decay() {
        let m = ColdBathModel::new(2.0, 3, 1.0, 1.0).unwrap();
        for t in [0.0, 0.5, 3.0, 100.0] {
            assert!((m.temperature(t) - 1.0 / (1.0 + t)).abs() < 1e-15);
        }
        assert_eq!(m.zero_time(), None);
    }

    #[test]
    fn verdicts() {
        assert_eq!(verdict(&ColdBathModel::phonon(3, 1.0, 1.0).unwrap()), Verdict::Exponential);
        assert_eq!(verdict(&ColdBathModel::new(1.5, 3, 1.0, 1.0).unwrap()), Verdict::AsymptoticPowerLaw);
    }

    #[test]
    fn current_power_law() {
        assert_eq!(current_scaling(0.0, 1.0, 3, 2.0), 0.0);
        let r = current_scaling(0.5, 1.0, 3, 2.0) / current_scaling(1.0, 1.0, 3, 2.0);
        assert!((r - 2f64.powi(-4)).abs() < 1e-16);
        let r = current_scaling(0.5, 0.0, 3, 2.0) / current_scaling(1.0, 0.0, 3, 2.0);
        assert!((r - 2f64.powi(-3)).abs() < 1e-16);
    }

    #[test]
    fn dimension_cancels_in_cooling_law() {
        for d in 1..=3 {
            let v = temperature_derivative(0.3, 1.0, d, 2.0, 4.0);
            assert!((v + 0.5 * 0.3).abs() < 1e-15);
        }
        let m = ColdBathModel::new(0.7, 2, 1.0, 1.0).unwrap();
        assert!((m.cooling_exponent() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_models() {
        assert!(ColdBathModel::new(-0.1, 3, 1.0, 1.0).is_err());
        assert!(ColdBathModel::new(0.0, 4, 1.0, 1.0).is_err());
        assert!(ColdBathModel::new(0.0, 3, 0.0, 1.0).is_err());
    }
}
