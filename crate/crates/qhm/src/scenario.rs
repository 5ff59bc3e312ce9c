//! Scenario files: TOML with one section per module, strict about keys.
//!
//! Every frequency, temperature, rate and energy in a scenario is expressed
//! in units of the reference frequency named by `frequency_unit`.

use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use qhm_core::bath_spectra::{SpectrumModel, TabulatedSpectrum};
use qhm_core::multilevel_machine::AlignmentPreset;
use qhm_core::quantum_piston::{Damping, Preparation};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Parse(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    TlsSweep,
    Multilevel,
    Piston,
    Cooler,
    NonmarkovianWork,
    Thirdlaw,
    Validate,
}

impl Kind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Kind::TlsSweep => "tls-sweep",
            Kind::Multilevel => "multilevel",
            Kind::Piston => "piston",
            Kind::Cooler => "cooler",
            Kind::NonmarkovianWork => "nonmarkovian-work",
            Kind::Thirdlaw => "thirdlaw",
            Kind::Validate => "validate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<Format>,
}

/// Spectrum as written in a scenario; mirrors [`SpectrumModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpectrumSpec {
    Flat { amplitude: f64, cutoff: f64 },
    Debye { strength: f64, debye_cutoff: f64 },
    Lorentzian { peak_coupling: f64, width: f64, center: f64, cutoff: f64 },
    PowerLaw { exponent: f64, amplitude: f64, cutoff: f64 },
    /// Two-column CSV (ω, G₀), relative to the scenario file.
    Tabulated { path: PathBuf },
    /// `inner` restricted to lo < ω ≤ hi (hi omitted = no upper edge).
    Band { inner: Box<SpectrumSpec>, lo: f64, hi: Option<f64> },
}

impl SpectrumSpec {
    pub fn build(&self, base: &Path) -> Result<SpectrumModel, ScenarioError> {
        let inv = |e: qhm_core::bath_spectra::SpectrumError| ScenarioError::Invalid(e.to_string());
        match self {
            SpectrumSpec::Flat { amplitude, cutoff } => SpectrumModel::flat(*amplitude, *cutoff).map_err(inv),
            SpectrumSpec::Debye { strength, debye_cutoff } => SpectrumModel::debye(*strength, *debye_cutoff).map_err(inv),
            SpectrumSpec::Lorentzian { peak_coupling, width, center, cutoff } => {
                SpectrumModel::lorentzian(*peak_coupling, *width, *center, *cutoff).map_err(inv)
            }
            SpectrumSpec::PowerLaw { exponent, amplitude, cutoff } => {
                SpectrumModel::power_law(*exponent, *amplitude, *cutoff).map_err(inv)
            }
            SpectrumSpec::Tabulated { path } => {
                let p = base.join(path);
                Ok(SpectrumModel::Tabulated(TabulatedSpectrum::from_csv_path(&p).map_err(inv)?))
            }
            SpectrumSpec::Band { inner, lo, hi } => {
                SpectrumModel::band(inner.build(base)?, *lo, hi.unwrap_or(f64::INFINITY)).map_err(inv)
            }
        }
    }
}

fn debye3() -> SpectrumSpec {
    SpectrumSpec::Debye { strength: 1.0, debye_cutoff: 3.0 }
}
fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// Cold band just below ω₀, hot bath above ω₀, harmonics {-1, 0, 1}.
    #[default]
    Separated,
    /// Both full spectra, default harmonic truncation.
    Overlapping,
}

/// Evenly spaced grid start, start + step, ..., stop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl LinearGrid {
    pub fn points(&self) -> Result<Vec<f64>, ScenarioError> {
        if !(self.step > 0.0 && self.stop >= self.start) {
            return Err(ScenarioError::Invalid(format!("bad grid {self:?}")));
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        // Rounded to 12 decimals so 0.02 + 48·0.01 prints as 0.5.
        Ok((0..=n).map(|k| ((self.start + k as f64 * self.step) * 1e12).round() / 1e12).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TlsSweepParams {
    #[serde(default = "one")]
    pub omega0: f64,
    pub t_h: f64,
    pub t_c: f64,
    #[serde(default)]
    pub layout: Layout,
    #[serde(default = "TlsSweepParams::default_depth_ratio")]
    pub depth_ratio: f64,
    #[serde(default = "one")]
    pub cold_amplitude: f64,
    #[serde(default = "TlsSweepParams::default_bandwidth")]
    pub cold_bandwidth: f64,
    #[serde(default = "debye3")]
    pub hot_spectrum: SpectrumSpec,
    /// Used by the overlapping layout only.
    #[serde(default = "debye3")]
    pub cold_spectrum: SpectrumSpec,
    #[serde(default = "TlsSweepParams::default_grid")]
    pub omega_grid: LinearGrid,
}

impl TlsSweepParams {
    fn default_depth_ratio() -> f64 {
        0.2
    }
    fn default_bandwidth() -> f64 {
        0.01
    }
    fn default_grid() -> LinearGrid {
        LinearGrid { start: 0.02, stop: 1.0, step: 0.01 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignmentSpec {
    NonAligned,
    Partial,
    Aligned,
}

impl From<AlignmentSpec> for AlignmentPreset {
    fn from(a: AlignmentSpec) -> Self {
        match a {
            AlignmentSpec::NonAligned => AlignmentPreset::NonAligned,
            AlignmentSpec::Partial => AlignmentPreset::Partial,
            AlignmentSpec::Aligned => AlignmentPreset::Aligned,
        }
    }
}

impl AlignmentSpec {
    pub fn as_str(&self) -> &'static str {
        match self {
            AlignmentSpec::NonAligned => "non_aligned",
            AlignmentSpec::Partial => "partial",
            AlignmentSpec::Aligned => "aligned",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialSpec {
    /// |0⟩⟨0|.
    #[default]
    Ground,
    /// Uniform superposition of the excited manifold.
    UniformExcited,
    /// |1⟩⟨1|.
    FirstExcited,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultilevelParams {
    #[serde(default = "MultilevelParams::default_n")]
    pub n_values: Vec<usize>,
    #[serde(default = "MultilevelParams::default_alignments")]
    pub alignments: Vec<AlignmentSpec>,
    #[serde(default)]
    pub initial: InitialSpec,
    #[serde(default = "one")]
    pub omega0: f64,
    pub t_h: f64,
    pub t_c: f64,
    /// κ.
    pub depth: f64,
    /// Ω.
    pub rate: f64,
    #[serde(default = "debye3")]
    pub hot_spectrum: SpectrumSpec,
    #[serde(default = "debye3")]
    pub cold_spectrum: SpectrumSpec,
}

impl MultilevelParams {
    fn default_n() -> Vec<usize> {
        (2..=11).collect()
    }
    fn default_alignments() -> Vec<AlignmentSpec> {
        vec![AlignmentSpec::NonAligned, AlignmentSpec::Partial, AlignmentSpec::Aligned]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    Fock {
        n: usize,
    },
    Coherent {
        alpha_re: f64,
        #[serde(default)]
        alpha_im: f64,
    },
    /// temperature = 0 is the vacuum.
    Thermal {
        temperature: f64,
    },
    SqueezedVacuum {
        r: f64,
    },
    DisplacedThermal {
        alpha_re: f64,
        #[serde(default)]
        alpha_im: f64,
        temperature: f64,
    },
}

fn beta_of(temperature: f64, omega_p: f64) -> Result<f64, ScenarioError> {
    if temperature < 0.0 {
        return Err(ScenarioError::Invalid(format!("temperature must be >= 0, got {temperature}")));
    }
    let _ = omega_p;
    Ok(if temperature == 0.0 { f64::INFINITY } else { 1.0 / temperature })
}

impl StateSpec {
    pub fn preparation(&self, omega_p: f64) -> Result<Preparation, ScenarioError> {
        Ok(match *self {
            StateSpec::Fock { n } => Preparation::Fock { n },
            StateSpec::Coherent { alpha_re, alpha_im } => Preparation::Coherent { alpha: C64::new(alpha_re, alpha_im) },
            StateSpec::Thermal { temperature } => Preparation::Thermal { beta: beta_of(temperature, omega_p)? },
            StateSpec::SqueezedVacuum { r } => Preparation::SqueezedVacuum { r },
            StateSpec::DisplacedThermal { alpha_re, alpha_im, temperature } => Preparation::DisplacedThermal {
                alpha: C64::new(alpha_re, alpha_im),
                beta: beta_of(temperature, omega_p)?,
            },
        })
    }

    pub fn label(&self) -> String {
        match *self {
            StateSpec::Fock { n } => format!("fock(n={n})"),
            StateSpec::Coherent { alpha_re, alpha_im } => format!("coherent(alpha={alpha_re}{alpha_im:+}i)"),
            StateSpec::Thermal { temperature } => format!("thermal(T={temperature})"),
            StateSpec::SqueezedVacuum { r } => format!("squeezed_vacuum(r={r})"),
            StateSpec::DisplacedThermal { alpha_re, alpha_im, temperature } => {
                format!("displaced_thermal(alpha={alpha_re}{alpha_im:+}i,T={temperature})")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DampingSpec {
    pub gamma: f64,
    #[serde(default)]
    pub nbar: f64,
    pub duration: f64,
    pub steps: usize,
    #[serde(default = "DampingSpec::default_stride")]
    pub sample_every: usize,
}

impl DampingSpec {
    fn default_stride() -> usize {
        1
    }
    pub fn damping(&self) -> Damping {
        Damping {
            gamma: self.gamma,
            nbar: self.nbar,
            duration: self.duration,
            steps: self.steps,
            sample_every: self.sample_every,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PistonParams {
    #[serde(default = "one")]
    pub omega_p: f64,
    pub states: Vec<StateSpec>,
    pub damping: Option<DampingSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoolerParams {
    pub omega0: f64,
    pub g: f64,
    #[serde(default = "one")]
    pub scale: f64,
    pub em_spectrum: SpectrumSpec,
    #[serde(default)]
    pub em_temperature: f64,
    pub bg_spectrum: SpectrumSpec,
    pub bg_temperature: f64,
    pub delta_grid: LinearGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    #[default]
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonmarkovianWorkParams {
    #[serde(default = "one")]
    pub omega0: f64,
    pub spectrum: SpectrumSpec,
    #[serde(default)]
    pub temperature: f64,
    /// κ.
    pub depth: f64,
    pub omega_tc_start: f64,
    pub omega_tc_stop: f64,
    pub omega_tc_points: usize,
    #[serde(default)]
    pub spacing: Spacing,
    #[serde(default)]
    pub delta_s_meas: f64,
    #[serde(default = "NonmarkovianWorkParams::default_levels")]
    pub sl_levels: usize,
    #[serde(default)]
    pub sl_entropy: f64,
    /// Population run length in units of t_c.
    #[serde(default = "NonmarkovianWorkParams::default_horizon")]
    pub population_horizon: f64,
    #[serde(default = "NonmarkovianWorkParams::default_steps")]
    pub population_steps: usize,
    /// Initial excited population of the population run.
    #[serde(default = "NonmarkovianWorkParams::default_initial")]
    pub initial_excited: f64,
}

impl NonmarkovianWorkParams {
    fn default_levels() -> usize {
        2
    }
    fn default_horizon() -> f64 {
        20.0
    }
    fn default_steps() -> usize {
        2000
    }
    fn default_initial() -> f64 {
        0.5
    }

    pub fn omega_tc_grid(&self) -> Result<Vec<f64>, ScenarioError> {
        let (a, b, n) = (self.omega_tc_start, self.omega_tc_stop, self.omega_tc_points);
        if !(a > 0.0 && b >= a && n >= 1) {
            return Err(ScenarioError::Invalid("need 0 < omega_tc_start <= omega_tc_stop and points >= 1".into()));
        }
        if n == 1 {
            return Ok(vec![a]);
        }
        Ok((0..n)
            .map(|k| {
                let s = k as f64 / (n - 1) as f64;
                match self.spacing {
                    Spacing::Linear => a + (b - a) * s,
                    Spacing::Log => a * (b / a).powf(s),
                }
            })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    ClosedForm,
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThirdlawParams {
    pub gammas: Vec<f64>,
    #[serde(default = "ThirdlawParams::default_dim")]
    pub dim: u32,
    #[serde(default = "one")]
    pub rate: f64,
    #[serde(default = "one")]
    pub t0: f64,
    pub horizon: f64,
    #[serde(default = "ThirdlawParams::default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub method: Method,
}

impl ThirdlawParams {
    fn default_dim() -> u32 {
        3
    }
    fn default_samples() -> usize {
        201
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateParams {
    pub filter: Option<String>,
}

/// Raw file layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    kind: Kind,
    frequency_unit: String,
    #[serde(default)]
    output: OutputSpec,
    #[serde(rename = "tls-sweep")]
    tls_sweep: Option<TlsSweepParams>,
    multilevel: Option<MultilevelParams>,
    piston: Option<PistonParams>,
    cooler: Option<CoolerParams>,
    #[serde(rename = "nonmarkovian-work")]
    nonmarkovian_work: Option<NonmarkovianWorkParams>,
    thirdlaw: Option<ThirdlawParams>,
    validate: Option<ValidateParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Params {
    TlsSweep(TlsSweepParams),
    Multilevel(MultilevelParams),
    Piston(PistonParams),
    Cooler(CoolerParams),
    NonmarkovianWork(NonmarkovianWorkParams),
    Thirdlaw(ThirdlawParams),
    Validate(ValidateParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub kind: Kind,
    pub frequency_unit: String,
    pub output: OutputSpec,
    pub params: Params,
    /// Directory relative paths inside the file resolve against.
    pub base_dir: PathBuf,
    /// Exact bytes the scenario was parsed from.
    pub source: String,
}

fn missing(kind: Kind) -> ScenarioError {
    ScenarioError::Invalid(format!("kind = \"{}\" needs a [{}] section", kind.as_str(), kind.as_str()))
}

/// Strict parse; errors carry the line, column and offending key.
pub fn parse_scenario(text: &str, base_dir: &Path) -> Result<Scenario, ScenarioError> {
    let raw: ScenarioFile = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    if raw.frequency_unit.trim().is_empty() {
        return Err(ScenarioError::Invalid("frequency_unit must name the reference frequency".into()));
    }
    let present: Vec<&str> = [
        ("tls-sweep", raw.tls_sweep.is_some()),
        ("multilevel", raw.multilevel.is_some()),
        ("piston", raw.piston.is_some()),
        ("cooler", raw.cooler.is_some()),
        ("nonmarkovian-work", raw.nonmarkovian_work.is_some()),
        ("thirdlaw", raw.thirdlaw.is_some()),
        ("validate", raw.validate.is_some()),
    ]
    .into_iter()
    .filter(|(name, on)| *on && *name != raw.kind.as_str())
    .map(|(name, _)| name)
    .collect();
    if let Some(name) = present.first() {
        return Err(ScenarioError::Invalid(format!(
            "section [{name}] does not apply to kind = \"{}\"",
            raw.kind.as_str()
        )));
    }
    let params = match raw.kind {
        Kind::TlsSweep => Params::TlsSweep(raw.tls_sweep.ok_or_else(|| missing(raw.kind))?),
        Kind::Multilevel => Params::Multilevel(raw.multilevel.ok_or_else(|| missing(raw.kind))?),
        Kind::Piston => Params::Piston(raw.piston.ok_or_else(|| missing(raw.kind))?),
        Kind::Cooler => Params::Cooler(raw.cooler.ok_or_else(|| missing(raw.kind))?),
        Kind::NonmarkovianWork => Params::NonmarkovianWork(raw.nonmarkovian_work.ok_or_else(|| missing(raw.kind))?),
        Kind::Thirdlaw => Params::Thirdlaw(raw.thirdlaw.ok_or_else(|| missing(raw.kind))?),
        Kind::Validate => Params::Validate(raw.validate.unwrap_or_default()),
    };
    Ok(Scenario {
        kind: raw.kind,
        frequency_unit: raw.frequency_unit,
        output: raw.output,
        params,
        base_dir: base_dir.to_path_buf(),
        source: text.to_string(),
    })
}

pub fn parse_file(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io { path: path.to_path_buf(), source })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_scenario(&text, &base).map_err(|e| match e {
        ScenarioError::Parse(m) => ScenarioError::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "kind = \"tls-sweep\"\nfrequency_unit = \"omega0\"\n[tls-sweep]\nomega0 = 1.0\nt_h = 1.5\nt_c = 1.0\n";

    #[test]
    fn minimal_tls_sweep() {
        let s = parse_scenario(MINIMAL, Path::new(".")).unwrap();
        assert_eq!(s.kind, Kind::TlsSweep);
        let Params::TlsSweep(p) = s.params else { panic!() };
        assert_eq!(p.layout, Layout::Separated);
        assert_eq!(p.omega_grid.points().unwrap().len(), 99);
    }

    #[test]
    fn misspelled_key_is_named() {
        let bad = MINIMAL.replace("t_h", "t_hot");
        let e = parse_scenario(&bad, Path::new(".")).unwrap_err().to_string();
        assert!(e.contains("t_hot"), "{e}");
        assert!(e.contains("line"), "{e}");
    }

    #[test]
    fn foreign_section_rejected() {
        let bad = format!("{MINIMAL}[validate]\n");
        assert!(parse_scenario(&bad, Path::new(".")).is_err());
    }

    #[test]
    fn unknown_spectrum_field_rejected() {
        let bad = format!("{MINIMAL}hot_spectrum = {{ kind = \"debye\", strength = 1.0, debye_cutof = 3.0 }}\n");
        let e = parse_scenario(&bad, Path::new(".")).unwrap_err().to_string();
        assert!(e.contains("debye_cutof"), "{e}");
    }

    #[test]
    fn grid_points_are_clean() {
        let g = LinearGrid { start: 0.02, stop: 1.0, step: 0.01 }.points().unwrap();
        assert_eq!(g[48], 0.5);
        assert_eq!(*g.last().unwrap(), 1.0);
    }
}
