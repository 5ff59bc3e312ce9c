//! Degenerate N-level machine: one ground state and N-1 excited states whose
//! transition dipoles may be aligned. Aligned dipoles create dark states that
//! never thermalize; the rest thermalize at an effective temperature.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::lindblad::{self, CMat, CrossTerm, LindbladError};
use crate::tls_machine::{self, ThermoReport, TlsError, TlsMachineConfig};

/// Tolerance on ||cos∠| - 1| for treating two dipoles as collinear.
pub const COLLINEAR_TOL: f64 = 1e-9;
/// Tolerance on the two equivalent enhancement formulas.
pub const CONSISTENCY_TOL: f64 = 1e-10;
const STATE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MultilevelError {
    #[error("need N >= 2 levels, got {0}")]
    TooFewLevels(usize),
    #[error("expected {expected} dipoles, got {got}")]
    DipoleCount { expected: usize, got: usize },
    #[error("dipole {0} is the zero vector")]
    ZeroDipole(usize),
    #[error("dipole {0} has a different dimension or magnitude from dipole 0")]
    UnequalDipoles(usize),
    #[error("invalid initial state: {0}")]
    InvalidState(String),
    #[error("enhancement forms disagree: {closed} vs {ground_ratio}")]
    InternalInconsistency { closed: f64, ground_ratio: f64 },
    #[error(transparent)]
    Tls(#[from] TlsError),
    #[error(transparent)]
    Lindblad(#[from] LindbladError),
}

/// Gram matrix of the normalized dipoles, 𝔭_ij = cos∠(d_i, d_j).
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentMatrix(pub DMatrix<f64>);

impl AlignmentMatrix {
    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }
}

pub fn alignment(dipoles: &[Vec<f64>]) -> Result<AlignmentMatrix, MultilevelError> {
    let unit: Vec<DVector<f64>> = dipoles
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let v = DVector::from_column_slice(d);
            let n = v.norm();
            if n == 0.0 || !n.is_finite() {
                Err(MultilevelError::ZeroDipole(i))
            } else {
                Ok(v / n)
            }
        })
        .collect::<Result<_, _>>()?;
    if let Some(i) = unit.iter().position(|v| v.len() != unit[0].len()) {
        return Err(MultilevelError::UnequalDipoles(i));
    }
    let m = unit.len();
    let mut p = DMatrix::from_fn(m, m, |i, j| unit[i].dot(&unit[j]).clamp(-1.0, 1.0));
    for i in 0..m {
        p[(i, i)] = 1.0;
    }
    Ok(AlignmentMatrix(p))
}

/// A set of collinear dipoles: members with their orientation signs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DipoleGroup {
    pub members: Vec<usize>,
    pub signs: Vec<f64>,
}

/// Bright and dark combinations of the excited states (vectors of length N-1).
#[derive(Debug, Clone, PartialEq)]
pub struct DarkBrightDecomposition {
    pub n_eff: usize,
    pub groups: Vec<DipoleGroup>,
    pub bright: Vec<DVector<f64>>,
    pub dark: Vec<DVector<f64>>,
    pub dark_projector: DMatrix<f64>,
    /// Rank of the alignment matrix. Equals N_eff - 1 only when distinct
    /// directions are mutually orthogonal; otherwise the group picture is
    /// approximate and the dense oracle is authoritative.
    pub gram_rank: usize,
}

impl DarkBrightDecomposition {
    pub fn groups_orthogonal(&self) -> bool {
        self.gram_rank + 1 == self.n_eff
    }
}

pub fn decompose(p: &AlignmentMatrix) -> DarkBrightDecomposition {
    let m = p.dim();
    let mut groups: Vec<DipoleGroup> = Vec::new();
    for i in 0..m {
        let found = groups.iter_mut().find(|g| (p.get(i, g.members[0]).abs() - 1.0).abs() <= COLLINEAR_TOL);
        match found {
            Some(g) => {
                g.signs.push(p.get(i, g.members[0]).signum());
                g.members.push(i);
            }
            None => groups.push(DipoleGroup { members: vec![i], signs: vec![1.0] }),
        }
    }
    let mut bright = Vec::new();
    let mut dark = Vec::new();
    for g in &groups {
        let k = g.members.len();
        let mut b = DVector::zeros(m);
        for (&j, &s) in g.members.iter().zip(&g.signs) {
            b[j] = s / (k as f64).sqrt();
        }
        bright.push(b);
        // Helmert basis of the complement inside the group.
        for r in 1..k {
            let mut d = DVector::zeros(m);
            let norm = ((r * (r + 1)) as f64).sqrt();
            for t in 0..r {
                d[g.members[t]] = g.signs[t] / norm;
            }
            d[g.members[r]] = -(r as f64) * g.signs[r] / norm;
            dark.push(d);
        }
    }
    let mut proj = DMatrix::zeros(m, m);
    for d in &dark {
        proj += d * d.transpose();
    }
    let eig = p.0.clone().symmetric_eigen();
    let gram_rank = eig.eigenvalues.iter().filter(|&&l| l > 1e-9 * m as f64).count();
    DarkBrightDecomposition { n_eff: groups.len() + 1, groups, bright, dark, dark_projector: proj, gram_rank }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultilevelConfig {
    pub n: usize,
    pub dipoles: Vec<Vec<f64>>,
    /// Shared ω₀, modulation, weights and baths; also the TLS reference.
    pub machine: TlsMachineConfig,
    pub initial_state: CMat,
}

impl MultilevelConfig {
    pub fn new(
        n: usize,
        dipoles: Vec<Vec<f64>>,
        machine: TlsMachineConfig,
        initial_state: CMat,
    ) -> Result<Self, MultilevelError> {
        if n < 2 {
            return Err(MultilevelError::TooFewLevels(n));
        }
        if dipoles.len() != n - 1 {
            return Err(MultilevelError::DipoleCount { expected: n - 1, got: dipoles.len() });
        }
        let norm0: f64 = dipoles[0].iter().map(|x| x * x).sum::<f64>().sqrt();
        for (i, d) in dipoles.iter().enumerate() {
            let nd: f64 = d.iter().map(|x| x * x).sum::<f64>().sqrt();
            if nd == 0.0 {
                return Err(MultilevelError::ZeroDipole(i));
            }
            if d.len() != dipoles[0].len() || (nd - norm0).abs() > 1e-9 * norm0 {
                return Err(MultilevelError::UnequalDipoles(i));
            }
        }
        check_state(&initial_state, n)?;
        Ok(MultilevelConfig { n, dipoles, machine, initial_state })
    }

    pub fn alignment(&self) -> AlignmentMatrix {
        alignment(&self.dipoles).expect("validated in constructor")
    }

    pub fn decomposition(&self) -> DarkBrightDecomposition {
        decompose(&self.alignment())
    }
}

fn check_state(rho: &CMat, n: usize) -> Result<(), MultilevelError> {
    if rho.nrows() != n || rho.ncols() != n {
        return Err(MultilevelError::InvalidState(format!("expected {n}x{n}, got {}x{}", rho.nrows(), rho.ncols())));
    }
    if (rho - rho.adjoint()).iter().any(|z| z.norm() > STATE_TOL) {
        return Err(MultilevelError::InvalidState("not Hermitian".into()));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
        return Err(MultilevelError::InvalidState(format!("trace {tr} is not 1")));
    }
    let herm = (rho + rho.adjoint()) * C64::new(0.5, 0.0);
    let min = herm.symmetric_eigen().eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -STATE_TOL {
        return Err(MultilevelError::InvalidState(format!("negative eigenvalue {min:e}")));
    }
    Ok(())
}

/// |0⟩⟨0| in dimension n.
pub fn ground_state(n: usize) -> CMat {
    lindblad::ket_bra(n, 0, 0)
}

/// |ψ⟩⟨ψ| for a real amplitude vector (normalized here).
pub fn pure_state(amplitudes: &[f64]) -> CMat {
    let v = DVector::from_iterator(amplitudes.len(), amplitudes.iter().map(|&a| C64::new(a, 0.0)));
    let v = &v / C64::new(v.norm(), 0.0);
    &v * v.adjoint()
}

/// Dipoles for mutually orthogonal collinear groups of the given sizes.
pub fn grouped_dipoles(sizes: &[usize]) -> Vec<Vec<f64>> {
    let dim = sizes.len();
    let mut out = Vec::new();
    for (g, &k) in sizes.iter().enumerate() {
        for _ in 0..k {
            let mut d = vec![0.0; dim];
            d[g] = 1.0;
            out.push(d);
        }
    }
    out
}

/// Alignment presets used in the enhancement comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignmentPreset {
    /// All dipoles mutually orthogonal, N_eff = N.
    NonAligned,
    /// N - 1 split into groups of at most three, N_eff = groups + 1.
    Partial,
    /// All dipoles parallel, N_eff = 2.
    Aligned,
}

impl AlignmentPreset {
    pub fn group_sizes(&self, n: usize) -> Vec<usize> {
        let m = n - 1;
        match self {
            AlignmentPreset::NonAligned => vec![1; m],
            AlignmentPreset::Aligned => vec![m],
            AlignmentPreset::Partial => {
                // 10 → [3, 3, 2, 2]
                let groups = m.div_ceil(3).max(1);
                let base = m / groups;
                let extra = m % groups;
                (0..groups).map(|g| base + usize::from(g < extra)).collect()
            }
        }
    }

    pub fn dipoles(&self, n: usize) -> Vec<Vec<f64>> {
        grouped_dipoles(&self.group_sizes(n))
    }
}

/// Effective Boltzmann factor x = e^{-β_eff ω₀}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EffectiveTemperature {
    pub x: f64,
    pub beta_eff: f64,
}

pub fn beta_eff(machine: &TlsMachineConfig) -> Result<EffectiveTemperature, MultilevelError> {
    let (bands, _) = machine.sidebands();
    let (mut up, mut down) = (0.0, 0.0);
    for bath in machine.baths() {
        for s in &bands {
            down += s.weight * bath.eval_thermal(s.freq);
            up += s.weight * bath.eval_thermal(-s.freq);
        }
    }
    if down <= 0.0 {
        return Err(TlsError::AllSidebandsDark.into());
    }
    let x = up / down;
    let beta_eff = if x == 0.0 { f64::INFINITY } else { -x.ln() / machine.omega0 };
    Ok(EffectiveTemperature { x, beta_eff })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultilevelSteadyState {
    /// Populations in the {ground, bright..., dark...} basis.
    pub populations: Vec<f64>,
    pub rho00: f64,
    pub bright_population: f64,
    pub dark_overlap: f64,
    pub thermalization_capability: f64,
    pub beta_eff: f64,
    pub x: f64,
    pub n_eff: usize,
    /// Steady state in the bare {|0⟩, |1⟩, ...} basis.
    pub rho_bare: CMat,
    /// Σ_{i≠j} |ρ_ij| in the bare basis.
    pub bare_coherence: f64,
}

/// Unitary whose columns are |0⟩, the bright states, then the dark states.
fn rotated_basis(n: usize, dec: &DarkBrightDecomposition) -> CMat {
    let mut u = CMat::zeros(n, n);
    u[(0, 0)] = C64::new(1.0, 0.0);
    for (c, v) in dec.bright.iter().chain(dec.dark.iter()).enumerate() {
        for j in 0..n - 1 {
            u[(j + 1, c + 1)] = C64::new(v[j], 0.0);
        }
    }
    u
}

pub fn steady_state(cfg: &MultilevelConfig) -> Result<MultilevelSteadyState, MultilevelError> {
    let dec = cfg.decomposition();
    let eff = beta_eff(&cfg.machine)?;
    let n = cfg.n;
    let u = rotated_basis(n, &dec);
    let rot = u.adjoint() * &cfg.initial_state * &u;
    let nb = dec.bright.len();
    let nd = dec.dark.len();
    // Summing the thermalizable populations directly keeps a pure dark
    // state at exactly zero capability instead of a rounding residue.
    let mut capability: f64 = (0..=nb).map(|k| rot[(k, k)].re).sum();
    if capability.abs() <= 1e-14 {
        capability = 0.0;
    }
    let dark_overlap = 1.0 - capability;
    let rho00 = capability / (1.0 + (dec.n_eff - 1) as f64 * eff.x);
    let bright_population = eff.x * rho00;
    let mut ss = CMat::zeros(n, n);
    ss[(0, 0)] = C64::new(rho00, 0.0);
    for k in 0..nb {
        ss[(1 + k, 1 + k)] = C64::new(bright_population, 0.0);
    }
    for a in 0..nd {
        for b in 0..nd {
            ss[(1 + nb + a, 1 + nb + b)] = rot[(1 + nb + a, 1 + nb + b)];
        }
    }
    let populations = (0..n).map(|i| ss[(i, i)].re).collect();
    let rho_bare = &u * ss * u.adjoint();
    let mut bare_coherence = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                bare_coherence += rho_bare[(i, j)].norm();
            }
        }
    }
    Ok(MultilevelSteadyState {
        populations,
        rho00,
        bright_population,
        dark_overlap,
        thermalization_capability: capability,
        beta_eff: eff.beta_eff,
        x: eff.x,
        n_eff: dec.n_eff,
        rho_bare,
        bare_coherence,
    })
}

/// (N-1)(1 - ⟨Π_d⟩)(1 + x)/(1 + (N_eff - 1)x).
pub fn enhancement_formula(n: usize, n_eff: usize, dark_overlap: f64, x: f64) -> f64 {
    (n - 1) as f64 * (1.0 - dark_overlap) * (1.0 + x) / (1.0 + (n_eff - 1) as f64 * x)
}

/// Current and power enhancement over the TLS reference, checked against
/// the ground-population form (N-1)ρ₀₀/ρ₀₀^TLS.
pub fn enhancement(cfg: &MultilevelConfig) -> Result<f64, MultilevelError> {
    let ss = steady_state(cfg)?;
    let closed = enhancement_formula(cfg.n, ss.n_eff, ss.dark_overlap, ss.x);
    let tls = tls_machine::steady_state(&cfg.machine)?;
    let ground_ratio = (cfg.n - 1) as f64 * ss.rho00 / tls.rho_gg;
    let scale = closed.abs().max(ground_ratio.abs());
    if (closed - ground_ratio).abs() > CONSISTENCY_TOL * scale {
        return Err(MultilevelError::InternalInconsistency { closed, ground_ratio });
    }
    Ok(closed)
}

/// TLS report scaled by the enhancement; laws are re-checked.
pub fn currents_and_power(cfg: &MultilevelConfig) -> Result<ThermoReport, MultilevelError> {
    let factor = enhancement(cfg)?;
    let base = tls_machine::power(&cfg.machine)?;
    let r = base.scaled(factor);
    let residual = r.first_law_residual();
    let tolerance = tls_machine::FIRST_LAW_TOL * r.j_c.abs().max(r.j_h.abs()) + 64.0 * f64::EPSILON * r.scale;
    if residual.abs() > tolerance {
        return Err(TlsError::FirstLawViolation { residual, tolerance }.into());
    }
    Ok(r)
}

/// One row of a multilevel sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MultilevelRow {
    pub n: usize,
    pub n_eff: usize,
    pub dark_overlap: f64,
    pub beta_eff: f64,
    pub enhancement: f64,
    pub j_c: f64,
    pub j_h: f64,
    pub w_dot: f64,
}

pub fn summarize(cfg: &MultilevelConfig) -> Result<MultilevelRow, MultilevelError> {
    let ss = steady_state(cfg)?;
    let enh = enhancement(cfg)?;
    let r = currents_and_power(cfg)?;
    Ok(MultilevelRow {
        n: cfg.n,
        n_eff: ss.n_eff,
        dark_overlap: ss.dark_overlap,
        beta_eff: ss.beta_eff,
        enhancement: enh,
        j_c: r.j_c,
        j_h: r.j_h,
        w_dot: r.w_dot,
    })
}

/// Reference solution from the dense N²×N² Liouvillian.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMultilevelSolution {
    pub rho: CMat,
    pub j_c: f64,
    pub j_h: f64,
    pub w_dot: f64,
    pub kernel_dim: usize,
}

/// Cross terms of one bath with rates summed over sidebands, each sideband
/// weighted by `weight(freq)` (1 for the generator, ω_q for the current).
fn bath_terms(
    cfg: &MultilevelConfig,
    p: &AlignmentMatrix,
    bath: &crate::bath_spectra::ThermalBath,
    weight: impl Fn(f64) -> f64,
) -> Vec<CrossTerm> {
    let (bands, _) = cfg.machine.sidebands();
    let (mut down, mut up) = (0.0, 0.0);
    for s in &bands {
        down += weight(s.freq) * s.weight * bath.eval_thermal(s.freq);
        up += weight(s.freq) * s.weight * bath.eval_thermal(-s.freq);
    }
    let n = cfg.n;
    let mut terms = Vec::new();
    for j in 1..n {
        for jp in 1..n {
            let c = p.get(j - 1, jp - 1);
            if c == 0.0 {
                continue;
            }
            terms.push(CrossTerm { coeff: down * c, a: lindblad::ket_bra(n, 0, j), b: lindblad::ket_bra(n, jp, 0) });
            terms.push(CrossTerm { coeff: up * c, a: lindblad::ket_bra(n, j, 0), b: lindblad::ket_bra(n, 0, jp) });
        }
    }
    terms
}

pub fn dense_oracle(cfg: &MultilevelConfig) -> Result<DenseMultilevelSolution, MultilevelError> {
    let p = cfg.alignment();
    let n = cfg.n;
    let baths: Vec<_> = [cfg.machine.hot.as_ref(), cfg.machine.cold.as_ref()].into_iter().collect();
    let mut gen = Vec::new();
    for b in baths.iter().flatten() {
        gen.extend(bath_terms(cfg, &p, b, |_| 1.0));
    }
    let l = lindblad::superoperator(n, &gen);
    let sol = lindblad::steady_state(&l, &cfg.initial_state)?;
    let mut excited = CMat::identity(n, n);
    excited[(0, 0)] = C64::new(0.0, 0.0);
    let current = |bath: Option<&crate::bath_spectra::ThermalBath>| -> f64 {
        bath.map_or(0.0, |b| {
            let terms = bath_terms(cfg, &p, b, |w| w);
            (&excited * lindblad::apply_all(&terms, &sol.rho)).trace().re
        })
    };
    let j_h = current(baths[0]);
    let j_c = current(baths[1]);
    Ok(DenseMultilevelSolution { rho: sol.rho, j_c, j_h, w_dot: -(j_c + j_h), kernel_dim: sol.kernel_dim })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath_spectra::{BathLabel, SpectrumModel, ThermalBath};
    use crate::floquet::Modulation;

    fn machine() -> TlsMachineConfig {
        let hot = ThermalBath::at_temperature(SpectrumModel::debye(1.0, 4.0).unwrap(), 2.0, BathLabel::Hot).unwrap();
        let cold = ThermalBath::at_temperature(SpectrumModel::debye(0.5, 4.0).unwrap(), 0.8, BathLabel::Cold).unwrap();
        let m = Modulation::sinusoidal(1.0, 0.3, 0.4).unwrap();
        TlsMachineConfig::new(m, Some(hot), Some(cold)).unwrap()
    }

    #[test]
    fn alignment_cosines() {
        let p = alignment(&[vec![1.0, 0.0, 0.0], vec![2.0, 0.0, 0.0]]).unwrap();
        assert_eq!(p.get(0, 1), 1.0);
        let p = alignment(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        assert_eq!(p.get(0, 1), 0.0);
        let p = alignment(&[vec![1.0, 0.0, 0.0], vec![0.5, 0.75f64.sqrt(), 0.0]]).unwrap();
        assert!((p.get(0, 1) - 0.5).abs() < 1e-15);
        assert!(alignment(&[vec![0.0; 3]]).is_err());
    }

    #[test]
    fn parallel_pair_has_antisymmetric_dark_state() {
        let dec = decompose(&alignment(&[vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 1.0]]).unwrap());
        assert_eq!(dec.n_eff, 2);
        assert_eq!(dec.dark.len(), 1);
        let s = 0.5f64.sqrt();
        assert!((dec.dark[0][0] - s).abs() < 1e-15 && (dec.dark[0][1] + s).abs() < 1e-15);
    }

    #[test]
    fn group_counting() {
        let dec = decompose(&alignment(&grouped_dipoles(&[3, 2, 2, 2, 1])).unwrap());
        assert_eq!(dec.n_eff, 6);
        assert_eq!(dec.dark.len(), 5);
        let pd = &dec.dark_projector;
        assert!((pd * pd - pd).norm() < 1e-12);
        assert!((pd.trace() - 5.0).abs() < 1e-12);
        assert!(dec.groups_orthogonal());
        assert_eq!(AlignmentPreset::Partial.group_sizes(11), vec![3, 3, 2, 2]);
    }

    #[test]
    fn single_bath_beta_eff_is_bath_beta() {
        let b = ThermalBath::at_temperature(SpectrumModel::flat(1.0, 10.0).unwrap(), 0.5, BathLabel::Single).unwrap();
        let m = TlsMachineConfig::new(Modulation::None { carrier: 1.5 }, None, Some(b)).unwrap();
        assert!((beta_eff(&m).unwrap().beta_eff - 2.0).abs() < 1e-12);
    }

    #[test]
    fn dark_initial_state_gives_nothing() {
        let cfg = MultilevelConfig::new(3, grouped_dipoles(&[2]), machine(), pure_state(&[0.0, 1.0, -1.0])).unwrap();
        let r = currents_and_power(&cfg).unwrap();
        assert_eq!(r.regime, tls_machine::Regime::Idle);
        assert_eq!((r.j_c, r.j_h, r.w_dot), (0.0, 0.0, 0.0));
    }

    #[test]
    fn two_levels_reproduce_tls() {
        let cfg = MultilevelConfig::new(2, grouped_dipoles(&[1]), machine(), ground_state(2)).unwrap();
        assert!((enhancement(&cfg).unwrap() - 1.0).abs() < 1e-15);
        let a = currents_and_power(&cfg).unwrap();
        let b = tls_machine::power(&cfg.machine).unwrap();
        assert!((a.j_h - b.j_h).abs() <= 1e-15 * b.j_h.abs());
    }

    #[test]
    fn three_level_cases_match_dense_oracle() {
        for sizes in [vec![2], vec![1, 1]] {
            let init = pure_state(&[1.0, 0.3, 0.0]);
            let cfg = MultilevelConfig::new(3, grouped_dipoles(&sizes), machine(), init).unwrap();
            let ss = steady_state(&cfg).unwrap();
            let d = dense_oracle(&cfg).unwrap();
            assert!((&ss.rho_bare - &d.rho).norm() < 1e-8);
            let r = currents_and_power(&cfg).unwrap();
            assert!((r.j_h - d.j_h).abs() <= 1e-8 * d.j_h.abs());
            assert!((r.j_c - d.j_c).abs() <= 1e-8 * d.j_c.abs());
        }
    }
}
