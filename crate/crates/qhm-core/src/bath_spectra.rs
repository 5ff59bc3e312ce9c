//! Bath coupling spectra and their KMS-consistent thermal extension.
//!
//! A spectrum model gives the temperature-independent density G₀(ω) for
//! ω ≥ 0. A [`ThermalBath`] attaches an inverse temperature and returns the
//! two-sided response G_T(ω) = G₀(ω)(1 + n(ω)) for ω > 0 and G₀(|ω|) n(|ω|)
//! for ω < 0, so that G_T(-ω) = e^{-βω} G_T(ω) holds identically.

use std::path::Path;

use serde::Serialize;

use crate::quad::{self, QuadError, Tolerance};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpectrumError {
    #[error("negative frequency {0} passed to a zero-temperature density")]
    NegativeFrequency(f64),
    #[error("invalid spectrum parameter: {0}")]
    InvalidParameter(String),
    #[error("tabulated spectrum: {0}")]
    MalformedTable(String),
    #[error("inverse temperature must be positive (use +inf for T = 0), got {0}")]
    InvalidBeta(f64),
    #[error("spectrum is not integrable: {0}")]
    NonIntegrable(String),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// Piecewise-linear density on an ascending frequency grid, zero outside it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TabulatedSpectrum {
    grid: Vec<(f64, f64)>,
}

impl TabulatedSpectrum {
    pub fn new(grid: Vec<(f64, f64)>) -> Result<Self, SpectrumError> {
        if grid.len() < 2 {
            return Err(SpectrumError::MalformedTable("need at least two points".into()));
        }
        for (i, &(w, g)) in grid.iter().enumerate() {
            if !w.is_finite() || !g.is_finite() {
                return Err(SpectrumError::MalformedTable(format!("non-finite entry at row {i}")));
            }
            if w < 0.0 {
                return Err(SpectrumError::MalformedTable(format!("negative frequency {w} at row {i}")));
            }
            if g < 0.0 {
                return Err(SpectrumError::MalformedTable(format!("negative density {g} at row {i}")));
            }
            if i > 0 && w <= grid[i - 1].0 {
                return Err(SpectrumError::MalformedTable(format!("grid not strictly ascending at row {i}")));
            }
        }
        Ok(TabulatedSpectrum { grid })
    }

    /// Read two columns (frequency, density); a non-numeric first row is
    /// taken as a header.
    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self, SpectrumError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let mut grid = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| SpectrumError::MalformedTable(e.to_string()))?;
            if rec.len() != 2 {
                return Err(SpectrumError::MalformedTable(format!("row {} has {} columns, expected 2", i + 1, rec.len())));
            }
            let parsed = (rec[0].parse::<f64>(), rec[1].parse::<f64>());
            match parsed {
                (Ok(w), Ok(g)) => grid.push((w, g)),
                _ if i == 0 => continue,
                _ => return Err(SpectrumError::MalformedTable(format!("row {} is not numeric", i + 1))),
            }
        }
        Self::new(grid)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self, SpectrumError> {
        let f = std::fs::File::open(path)
            .map_err(|e| SpectrumError::MalformedTable(format!("{}: {e}", path.display())))?;
        Self::from_csv_reader(f)
    }

    pub fn grid(&self) -> &[(f64, f64)] {
        &self.grid
    }

    fn eval(&self, w: f64) -> f64 {
        let g = &self.grid;
        if w < g[0].0 || w > g[g.len() - 1].0 {
            return 0.0;
        }
        let k = g.partition_point(|p| p.0 <= w);
        if k == g.len() {
            return g[g.len() - 1].1;
        }
        let (w0, g0) = g[k - 1];
        let (w1, g1) = g[k];
        g0 + (g1 - g0) * (w - w0) / (w1 - w0)
    }
}

/// Zero-temperature coupling density G₀(ω), ω ≥ 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectrumModel {
    /// `amplitude` on [0, cutoff].
    Flat { amplitude: f64, cutoff: f64 },
    /// f (ω/ω_D)³ on [0, ω_D].
    Debye { strength: f64, debye_cutoff: f64 },
    /// η² Γ²/(Γ² + (ν₀ - ω)²) on [0, cutoff].
    Lorentzian { peak_coupling: f64, width: f64, center: f64, cutoff: f64 },
    /// amplitude · ω^γ on [0, cutoff].
    PowerLaw { exponent: f64, amplitude: f64, cutoff: f64 },
    Tabulated(TabulatedSpectrum),
    /// `inner` restricted to lo < ω ≤ hi; models a spectral filter.
    Band { inner: Box<SpectrumModel>, lo: f64, hi: f64 },
}

fn positive(name: &str, v: f64) -> Result<(), SpectrumError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(SpectrumError::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
    }
}

fn non_negative(name: &str, v: f64) -> Result<(), SpectrumError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(SpectrumError::InvalidParameter(format!("{name} must be non-negative and finite, got {v}")))
    }
}

impl SpectrumModel {
    pub fn flat(amplitude: f64, cutoff: f64) -> Result<Self, SpectrumError> {
        non_negative("amplitude", amplitude)?;
        positive("cutoff", cutoff)?;
        Ok(SpectrumModel::Flat { amplitude, cutoff })
    }

    pub fn debye(strength: f64, debye_cutoff: f64) -> Result<Self, SpectrumError> {
        non_negative("strength", strength)?;
        positive("debye_cutoff", debye_cutoff)?;
        Ok(SpectrumModel::Debye { strength, debye_cutoff })
    }

    pub fn lorentzian(peak_coupling: f64, width: f64, center: f64, cutoff: f64) -> Result<Self, SpectrumError> {
        non_negative("peak_coupling", peak_coupling)?;
        positive("width", width)?;
        non_negative("center", center)?;
        positive("cutoff", cutoff)?;
        Ok(SpectrumModel::Lorentzian { peak_coupling, width, center, cutoff })
    }

    pub fn power_law(exponent: f64, amplitude: f64, cutoff: f64) -> Result<Self, SpectrumError> {
        non_negative("exponent", exponent)?;
        non_negative("amplitude", amplitude)?;
        positive("cutoff", cutoff)?;
        Ok(SpectrumModel::PowerLaw { exponent, amplitude, cutoff })
    }

    pub fn band(inner: SpectrumModel, lo: f64, hi: f64) -> Result<Self, SpectrumError> {
        if !(lo >= 0.0 && hi > lo) || lo.is_nan() || hi.is_nan() {
            return Err(SpectrumError::InvalidParameter(format!("band needs 0 <= lo < hi, got ({lo}, {hi})")));
        }
        Ok(SpectrumModel::Band { inner: Box::new(inner), lo, hi })
    }

    /// Upper edge of the support.
    pub fn cutoff(&self) -> f64 {
        match self {
            SpectrumModel::Flat { cutoff, .. } => *cutoff,
            SpectrumModel::Debye { debye_cutoff, .. } => *debye_cutoff,
            SpectrumModel::Lorentzian { cutoff, .. } => *cutoff,
            SpectrumModel::PowerLaw { cutoff, .. } => *cutoff,
            SpectrumModel::Tabulated(t) => t.grid[t.grid.len() - 1].0,
            SpectrumModel::Band { inner, hi, .. } => hi.min(inner.cutoff()),
        }
    }

    /// Frequencies where G₀ has a kink or jump; quadrature splits there.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            SpectrumModel::Lorentzian { width, center, cutoff, .. } => {
                let mut v: Vec<f64> = [-4.0, -1.0, 0.0, 1.0, 4.0]
                    .iter()
                    .map(|k| center + k * width)
                    .filter(|w| *w > 0.0 && w < cutoff)
                    .collect();
                v.push(*cutoff);
                v
            }
            SpectrumModel::Tabulated(t) => t.grid.iter().map(|p| p.0).collect(),
            SpectrumModel::Band { inner, lo, hi } => {
                let mut v = inner.breakpoints();
                v.push(*lo);
                if hi.is_finite() {
                    v.push(*hi);
                }
                v.retain(|w| *w >= *lo && *w <= self.cutoff());
                v
            }
            other => vec![other.cutoff()],
        }
    }

    /// G₀(ω). Rejects ω < 0.
    pub fn eval_zero_temperature(&self, w: f64) -> Result<f64, SpectrumError> {
        if w < 0.0 || w.is_nan() {
            return Err(SpectrumError::NegativeFrequency(w));
        }
        Ok(self.g0(w))
    }

    pub(crate) fn g0(&self, w: f64) -> f64 {
        match self {
            SpectrumModel::Flat { amplitude, cutoff } => {
                if w <= *cutoff {
                    *amplitude
                } else {
                    0.0
                }
            }
            SpectrumModel::Debye { strength, debye_cutoff } => {
                if w <= *debye_cutoff {
                    strength * (w / debye_cutoff).powi(3)
                } else {
                    0.0
                }
            }
            SpectrumModel::Lorentzian { peak_coupling, width, center, cutoff } => {
                if w <= *cutoff {
                    let d = center - w;
                    peak_coupling * peak_coupling * width * width / (width * width + d * d)
                } else {
                    0.0
                }
            }
            SpectrumModel::PowerLaw { exponent, amplitude, cutoff } => {
                if w > *cutoff {
                    0.0
                } else if *exponent == 0.0 {
                    *amplitude
                } else {
                    amplitude * w.powf(*exponent)
                }
            }
            SpectrumModel::Tabulated(t) => t.eval(w),
            SpectrumModel::Band { inner, lo, hi } => {
                if w > *lo && w <= *hi {
                    inner.g0(w)
                } else {
                    0.0
                }
            }
        }
    }

    /// lim_{ω→0⁺} G₀(ω).
    pub fn zero_limit(&self) -> f64 {
        match self {
            SpectrumModel::Flat { amplitude, .. } => *amplitude,
            SpectrumModel::Debye { .. } => 0.0,
            SpectrumModel::Lorentzian { .. } => self.g0(0.0),
            SpectrumModel::PowerLaw { exponent, amplitude, .. } => {
                if *exponent == 0.0 {
                    *amplitude
                } else {
                    0.0
                }
            }
            SpectrumModel::Tabulated(t) => {
                if t.grid[0].0 == 0.0 {
                    t.grid[0].1
                } else {
                    0.0
                }
            }
            SpectrumModel::Band { inner, lo, .. } => {
                if *lo > 0.0 {
                    0.0
                } else {
                    inner.zero_limit()
                }
            }
        }
    }

    /// lim_{ω→0⁺} G₀(ω)/ω when G₀(0⁺) = 0, None when it diverges.
    fn zero_slope(&self) -> Option<f64> {
        if self.zero_limit() > 0.0 {
            return None;
        }
        match self {
            SpectrumModel::PowerLaw { exponent, amplitude, .. } => {
                if *exponent == 1.0 {
                    Some(*amplitude)
                } else if *exponent > 1.0 {
                    Some(0.0)
                } else {
                    None
                }
            }
            SpectrumModel::Tabulated(t) => {
                if t.grid[0].0 == 0.0 {
                    let (w1, g1) = t.grid[1];
                    Some(g1 / w1)
                } else {
                    Some(0.0)
                }
            }
            SpectrumModel::Band { inner, lo, .. } => {
                if *lo > 0.0 {
                    Some(0.0)
                } else {
                    inner.zero_slope()
                }
            }
            _ => Some(0.0),
        }
    }

    /// Smallest p with G₀(ω) = O(ω^p) near zero (p = 0 for a finite limit).
    fn low_frequency_order(&self) -> f64 {
        match self {
            SpectrumModel::Debye { .. } => 3.0,
            SpectrumModel::PowerLaw { exponent, .. } => *exponent,
            SpectrumModel::Band { inner, lo, .. } => {
                if *lo > 0.0 {
                    f64::INFINITY
                } else {
                    inner.low_frequency_order()
                }
            }
            SpectrumModel::Tabulated(t) if t.grid[0].0 > 0.0 => f64::INFINITY,
            other if other.zero_limit() > 0.0 => 0.0,
            _ => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BathLabel {
    Hot,
    Cold,
    Single,
}

/// A spectrum at inverse temperature β; β = +∞ encodes T = 0 exactly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThermalBath {
    pub spectrum: SpectrumModel,
    pub beta: f64,
    pub label: BathLabel,
}

impl ThermalBath {
    pub fn new(spectrum: SpectrumModel, beta: f64, label: BathLabel) -> Result<Self, SpectrumError> {
        if !(beta > 0.0) {
            return Err(SpectrumError::InvalidBeta(beta));
        }
        Ok(ThermalBath { spectrum, beta, label })
    }

    /// Build from a temperature; T = 0 maps to β = +∞.
    pub fn at_temperature(spectrum: SpectrumModel, temperature: f64, label: BathLabel) -> Result<Self, SpectrumError> {
        if !(temperature >= 0.0) || !temperature.is_finite() {
            return Err(SpectrumError::InvalidParameter(format!("temperature must be >= 0, got {temperature}")));
        }
        let beta = if temperature == 0.0 { f64::INFINITY } else { 1.0 / temperature };
        Self::new(spectrum, beta, label)
    }

    pub fn temperature(&self) -> f64 {
        if self.beta.is_infinite() {
            0.0
        } else {
            1.0 / self.beta
        }
    }

    /// e^{-βω}, exact zero at T = 0 for ω > 0.
    pub fn boltzmann(&self, w: f64) -> f64 {
        (-self.beta * w).exp()
    }

    /// G_T(ω) for either sign of ω.
    pub fn eval_thermal(&self, w: f64) -> f64 {
        let b = self.beta;
        if w > 0.0 {
            // G₀ (1 + n) = G₀ / (1 - e^{-βω})
            let g = self.spectrum.g0(w);
            if g == 0.0 {
                0.0
            } else {
                g / -(-b * w).exp_m1()
            }
        } else if w < 0.0 {
            let a = -w;
            let g = self.spectrum.g0(a);
            if g == 0.0 || b.is_infinite() {
                0.0
            } else {
                g / (b * a).exp_m1()
            }
        } else if b.is_infinite() {
            self.spectrum.zero_limit()
        } else {
            self.spectrum.zero_slope().map_or(0.0, |s| s / b)
        }
    }

    /// Whether ∫ G_T over the real line is finite.
    pub fn is_integrable(&self) -> bool {
        self.beta.is_infinite() || self.spectrum.low_frequency_order() > 0.0
    }

    /// ∫_{-∞}^{∞} G_T(ω) dω.
    pub fn integrated_density(&self) -> Result<f64, SpectrumError> {
        self.integrated_density_with(Tolerance::default())
    }

    pub fn integrated_density_with(&self, tol: Tolerance) -> Result<f64, SpectrumError> {
        if !self.is_integrable() {
            return Err(SpectrumError::NonIntegrable(format!(
                "G_0 does not vanish at zero frequency (limit {}), so G_T ~ 1/(beta w) diverges logarithmically",
                self.spectrum.zero_limit()
            )));
        }
        let mut br = vec![0.0];
        br.extend(self.spectrum.breakpoints());
        br.retain(|w| *w <= self.spectrum.cutoff());
        br.sort_by(f64::total_cmp);
        br.dedup();
        let f = |w: f64| self.eval_thermal(w) + self.eval_thermal(-w);
        Ok(quad::integrate_with_breaks(f, &br, tol)?.value)
    }
}
