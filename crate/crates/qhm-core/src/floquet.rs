//! Floquet harmonic coefficients ξ(q) and weights P(q) = |ξ(q)|² of a
//! periodic frequency modulation ω(t) = ω₀ + δω(t).
//!
//! The carrier is factored out, so ξ̃(t) = exp(-i∫₀ᵗ δω ds) is τ-periodic and
//! P(q) weights the sideband at ω₀ + qΩ.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64 as C64;
use serde::Serialize;

/// Largest deficit 1 - ΣP tolerated by [`weights`].
pub const DEFICIT_TOL: f64 = 1e-6;
/// Minimum trapezoid samples per period for smooth modulations.
pub const MIN_SAMPLES: usize = 4096;
const MAX_Q: i64 = 1 << 22;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FloquetError {
    #[error("harmonic cutoff Q must be non-negative, got {0}")]
    NegativeQ(i64),
    #[error("normalization deficit {value:e} exceeds {DEFICIT_TOL:e}; raise Q")]
    NormalizationDeficit { value: f64 },
    #[error("invalid modulation: {0}")]
    InvalidModulation(String),
    #[error("no Q up to {MAX_Q} reaches the normalization target")]
    NoConvergence,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Modulation {
    None { carrier: f64 },
    /// ω(t) = ω₀ + κ sin Ωt.
    Sinusoidal { carrier: f64, depth: f64, rate: f64 },
    /// δω(t) = offsets[k] on [times[k], times[k+1]), last segment ends at τ.
    PiecewiseConstant { carrier: f64, rate: f64, times: Vec<f64>, offsets: Vec<f64> },
}

impl Modulation {
    pub fn sinusoidal(carrier: f64, depth: f64, rate: f64) -> Result<Self, FloquetError> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(FloquetError::InvalidModulation(format!("rate must be positive, got {rate}")));
        }
        if !(depth >= 0.0 && depth.is_finite()) {
            return Err(FloquetError::InvalidModulation(format!("depth must be >= 0, got {depth}")));
        }
        Ok(Modulation::Sinusoidal { carrier, depth, rate })
    }

    /// Segments must start at t = 0, ascend strictly, stay inside one period
    /// and accumulate a phase that is a multiple of 2π (so ξ̃ is periodic).
    pub fn piecewise(carrier: f64, rate: f64, times: Vec<f64>, offsets: Vec<f64>) -> Result<Self, FloquetError> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(FloquetError::InvalidModulation(format!("rate must be positive, got {rate}")));
        }
        if times.is_empty() || times.len() != offsets.len() {
            return Err(FloquetError::InvalidModulation("times and offsets must be non-empty and aligned".into()));
        }
        let tau = 2.0 * PI / rate;
        if times[0] != 0.0 {
            return Err(FloquetError::InvalidModulation("first sample must be at t = 0".into()));
        }
        for k in 1..times.len() {
            if !(times[k] > times[k - 1]) {
                return Err(FloquetError::InvalidModulation(format!("sample times not ascending at index {k}")));
            }
        }
        if times[times.len() - 1] >= tau {
            return Err(FloquetError::InvalidModulation(format!("sample times must lie in [0, {tau})")));
        }
        let m = Modulation::PiecewiseConstant { carrier, rate, times, offsets };
        let phase = m.segments().iter().map(|s| s.2 * s.1).sum::<f64>();
        let wrapped = phase - 2.0 * PI * (phase / (2.0 * PI)).round();
        if wrapped.abs() > 1e-9 * (1.0 + phase.abs()) {
            return Err(FloquetError::InvalidModulation(format!(
                "accumulated phase {phase} per period is not a multiple of 2π; shift the carrier to the mean frequency"
            )));
        }
        Ok(m)
    }

    /// Piecewise samples from CSV rows (t, ω(t) - ω₀), header optional.
    pub fn piecewise_from_csv(carrier: f64, rate: f64, path: &Path) -> Result<Self, FloquetError> {
        let bad = |e: String| FloquetError::InvalidModulation(format!("{}: {e}", path.display()));
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_path(path)
            .map_err(|e| bad(e.to_string()))?;
        let (mut times, mut offsets) = (Vec::new(), Vec::new());
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            if rec.len() != 2 {
                return Err(bad(format!("row {} has {} columns, expected 2", i + 1, rec.len())));
            }
            match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
                (Ok(t), Ok(d)) => {
                    times.push(t);
                    offsets.push(d);
                }
                _ if i == 0 => continue,
                _ => return Err(bad(format!("row {} is not numeric", i + 1))),
            }
        }
        Self::piecewise(carrier, rate, times, offsets)
    }

    pub fn carrier(&self) -> f64 {
        match self {
            Modulation::None { carrier }
            | Modulation::Sinusoidal { carrier, .. }
            | Modulation::PiecewiseConstant { carrier, .. } => *carrier,
        }
    }

    /// Ω, zero for the unmodulated case.
    pub fn rate(&self) -> f64 {
        match self {
            Modulation::None { .. } => 0.0,
            Modulation::Sinusoidal { rate, .. } | Modulation::PiecewiseConstant { rate, .. } => *rate,
        }
    }

    /// Largest |δω|/Ω, a rough count of significant sidebands.
    pub fn depth_ratio(&self) -> f64 {
        match self {
            Modulation::None { .. } => 0.0,
            Modulation::Sinusoidal { depth, rate, .. } => depth / rate,
            Modulation::PiecewiseConstant { rate, offsets, .. } => {
                offsets.iter().fold(0.0f64, |m, d| m.max(d.abs())) / rate
            }
        }
    }

    /// (start, length, offset) per segment.
    fn segments(&self) -> Vec<(f64, f64, f64)> {
        match self {
            Modulation::PiecewiseConstant { rate, times, offsets, .. } => {
                let tau = 2.0 * PI / rate;
                (0..times.len())
                    .map(|k| {
                        let end = if k + 1 < times.len() { times[k + 1] } else { tau };
                        (times[k], end - times[k], offsets[k])
                    })
                    .collect()
            }
            _ => Vec::new(),
        }
    }

    /// Accumulated phase ∫₀ᵗ δω(s) ds for t in one period.
    pub fn phase(&self, t: f64) -> f64 {
        match self {
            Modulation::None { .. } => 0.0,
            Modulation::Sinusoidal { depth, rate, .. } => depth / rate * (1.0 - (rate * t).cos()),
            Modulation::PiecewiseConstant { .. } => {
                let mut acc = 0.0;
                for (start, len, d) in self.segments() {
                    if t >= start + len {
                        acc += d * len;
                    } else {
                        acc += d * (t - start).max(0.0);
                        break;
                    }
                }
                acc
            }
        }
    }

    fn samples_per_period(&self, q_max: i64) -> usize {
        let need = 8.0 * (self.depth_ratio() + q_max as f64) + 64.0;
        (need.ceil() as usize).next_power_of_two().max(MIN_SAMPLES)
    }

    fn xi_single(&self, q: i64, samples: usize) -> C64 {
        match self {
            Modulation::None { .. } => {
                if q == 0 {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            }
            Modulation::Sinusoidal { rate, .. } => {
                // Trapezoid on a periodic integrand: equal weights, spectrally accurate.
                let tau = 2.0 * PI / rate;
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..samples {
                    let t = tau * k as f64 / samples as f64;
                    let arg = -self.phase(t) + q as f64 * rate * t;
                    acc += C64::from_polar(1.0, arg);
                }
                acc / samples as f64
            }
            Modulation::PiecewiseConstant { rate, .. } => {
                // Exact integral of exp(i[(qΩ - δ)s]) over each segment.
                let tau = 2.0 * PI / rate;
                let qw = q as f64 * rate;
                let mut acc = C64::new(0.0, 0.0);
                let mut phi = 0.0;
                for (start, len, d) in self.segments() {
                    let a = qw - d;
                    let head = C64::from_polar(1.0, -phi + qw * start);
                    let x = 0.5 * a * len;
                    let sinc = if x == 0.0 { 1.0 } else { x.sin() / x };
                    acc += head * C64::from_polar(len * sinc, x);
                    phi += d * len;
                }
                acc / tau
            }
        }
    }
}

/// ξ(q) for q in [-Q, Q], indexed by q + Q.
pub fn xi_coefficients(m: &Modulation, q_max: i64) -> Result<Vec<C64>, FloquetError> {
    if q_max < 0 {
        return Err(FloquetError::NegativeQ(q_max));
    }
    let samples = m.samples_per_period(q_max);
    Ok((-q_max..=q_max).map(|q| m.xi_single(q, samples)).collect())
}

/// Sideband weights P(q) on a symmetric index range.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarmonicWeights {
    q_max: i64,
    p: Vec<f64>,
    deficit: f64,
}

impl HarmonicWeights {
    /// Weights from explicit (q, P) pairs; missing indices are zero.
    pub fn from_pairs(pairs: &[(i64, f64)]) -> Self {
        let q_max = pairs.iter().map(|(q, _)| q.abs()).max().unwrap_or(0);
        let mut p = vec![0.0; (2 * q_max + 1) as usize];
        for &(q, w) in pairs {
            p[(q + q_max) as usize] += w;
        }
        let deficit = 1.0 - p.iter().sum::<f64>();
        HarmonicWeights { q_max, p, deficit }
    }

    pub fn unmodulated() -> Self {
        Self::from_pairs(&[(0, 1.0)])
    }

    pub fn q_max(&self) -> i64 {
        self.q_max
    }

    pub fn get(&self, q: i64) -> f64 {
        if q.abs() > self.q_max {
            0.0
        } else {
            self.p[(q + self.q_max) as usize]
        }
    }

    /// 1 - ΣP(q).
    pub fn deficit(&self) -> f64 {
        self.deficit
    }

    pub fn total(&self) -> f64 {
        self.p.iter().sum()
    }

    /// Nonzero (q, P) pairs in ascending q.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.p
            .iter()
            .enumerate()
            .filter(|(_, w)| **w != 0.0)
            .map(move |(i, w)| (i as i64 - self.q_max, *w))
    }

    /// Keep only the listed harmonics (no renormalization).
    pub fn restricted(&self, qs: &[i64]) -> Self {
        let pairs: Vec<(i64, f64)> = qs.iter().map(|&q| (q, self.get(q))).collect();
        Self::from_pairs(&pairs)
    }
}

/// P(q) = |ξ(q)|² for |q| ≤ Q; fails if the truncation loses more than 10⁻⁶.
pub fn weights(m: &Modulation, q_max: i64) -> Result<HarmonicWeights, FloquetError> {
    let xi = xi_coefficients(m, q_max)?;
    let p: Vec<f64> = xi.iter().map(|z| z.norm_sqr()).collect();
    let deficit = 1.0 - p.iter().sum::<f64>();
    if deficit > DEFICIT_TOL {
        return Err(FloquetError::NormalizationDeficit { value: deficit });
    }
    Ok(HarmonicWeights { q_max, p, deficit })
}

/// Smallest Q whose normalization deficit is below 10⁻⁶.
pub fn default_q(m: &Modulation) -> Result<i64, FloquetError> {
    if let Modulation::None { .. } = m {
        return Ok(0);
    }
    let budget = m.depth_ratio().ceil() as i64 + 64;
    let limit = if matches!(m, Modulation::Sinusoidal { .. }) { budget } else { MAX_Q };
    let samples = m.samples_per_period(budget);
    let mut total = m.xi_single(0, samples).norm_sqr();
    let mut q = 0i64;
    while 1.0 - total >= DEFICIT_TOL {
        q += 1;
        if q > limit {
            return Err(FloquetError::NoConvergence);
        }
        total += m.xi_single(q, samples).norm_sqr() + m.xi_single(-q, samples).norm_sqr();
    }
    Ok(q)
}

/// Weights at the default truncation.
pub fn default_weights(m: &Modulation) -> Result<HarmonicWeights, FloquetError> {
    let q = default_q(m)?;
    weights(m, q)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeakWeights {
    pub p0: f64,
    pub p1: f64,
    /// Set when κ/Ω > 0.3, outside the expansion's intended range.
    pub outside_weak_regime: bool,
}

/// Second-order expansion P(0) ≈ 1 - ½(κ/Ω)², P(±1) ≈ ¼(κ/Ω)².
pub fn weak_modulation_weights(depth: f64, rate: f64) -> WeakWeights {
    let r = depth / rate;
    WeakWeights { p0: 1.0 - 0.5 * r * r, p1: 0.25 * r * r, outside_weak_regime: r > 0.3 }
}
