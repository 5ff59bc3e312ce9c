//! Work capacity of a quantized piston: a single harmonic mode H_P = ω_P a†a
//! truncated to D levels. The reference for extractable work is the Gibbs
//! state with the same entropy.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::lindblad::CMat;

/// Largest population tolerated above the truncation.
pub const TAIL_TOL: f64 = 1e-10;
/// Floor applied to density-matrix eigenvalues before taking logarithms.
pub const EIGEN_CLIP: f64 = 1e-30;
/// Entropies at or below this count as pure.
pub const PURE_ENTROPY: f64 = 1e-12;
/// Capacities above this multiple of ω_P mark a state non-passive.
pub const NONPASSIVE_TOL: f64 = 1e-10;
const STATE_TOL: f64 = 1e-12;
const BETA_RANGE: (f64, f64) = (1e-6, 1e6);
const BISECTION_STEPS: usize = 200;
const MAX_DIM: usize = 1 << 12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PistonError {
    #[error("truncation too small: population {tail:e} beyond level {dim}")]
    TruncationOverflow { tail: f64, dim: usize },
    #[error("entropy {entropy} exceeds the largest truncated Gibbs entropy {max}; raise the dimension")]
    EntropyOutOfRange { entropy: f64, max: f64 },
    #[error("piston is not powering the refrigerator: dE_P/dt = {0} must be negative")]
    NotPowering(f64),
    #[error("step {step} exceeds 1e-3/gamma = {limit}")]
    StepTooLarge { step: f64, limit: f64 },
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PistonMode {
    pub omega_p: f64,
    pub dim: usize,
}

impl PistonMode {
    pub fn new(omega_p: f64, dim: usize) -> Result<Self, PistonError> {
        if !(omega_p > 0.0 && omega_p.is_finite()) {
            return Err(PistonError::InvalidParameter(format!("omega_P must be positive, got {omega_p}")));
        }
        if dim < 2 {
            return Err(PistonError::InvalidParameter(format!("dimension must be >= 2, got {dim}")));
        }
        Ok(PistonMode { omega_p, dim })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preparation {
    Fock { n: usize },
    Coherent { alpha: C64 },
    /// β_P = ∞ gives the vacuum.
    Thermal { beta: f64 },
    SqueezedVacuum { r: f64 },
    DisplacedThermal { alpha: C64, beta: f64 },
}

impl Preparation {
    /// max(32, ⌈8(|α|² + n̄ + n + sinh²r)⌉).
    pub fn default_dim(&self, omega_p: f64) -> usize {
        let nbar = |beta: f64| if beta.is_infinite() { 0.0 } else { 1.0 / (beta * omega_p).exp_m1() };
        let load = match *self {
            Preparation::Fock { n } => n as f64,
            Preparation::Coherent { alpha } => alpha.norm_sqr(),
            Preparation::Thermal { beta } => nbar(beta),
            Preparation::SqueezedVacuum { r } => r.sinh().powi(2),
            Preparation::DisplacedThermal { alpha, beta } => alpha.norm_sqr() + nbar(beta),
        };
        32usize.max((8.0 * load).ceil() as usize)
    }
}

/// A density matrix with its cached thermodynamic quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct PistonState {
    pub rho: CMat,
    pub energy: f64,
    pub entropy: f64,
    pub temperature: f64,
    pub work_capacity: f64,
    /// Population in the top retained level.
    pub top_population: f64,
}

impl PistonState {
    pub fn from_rho(rho: CMat, mode: &PistonMode) -> Result<Self, PistonError> {
        check_state(&rho, mode.dim)?;
        let energy = energy(&rho, mode);
        let entropy = von_neumann_entropy(&rho);
        let temperature = temperature_for_entropy(entropy, mode)?;
        let work_capacity = (energy - gibbs_energy(temperature, mode)).max(0.0);
        let top_population = rho[(mode.dim - 1, mode.dim - 1)].re;
        Ok(PistonState { rho, energy, entropy, temperature, work_capacity, top_population })
    }

    pub fn is_nonpassive(&self, mode: &PistonMode) -> bool {
        self.work_capacity > NONPASSIVE_TOL * mode.omega_p
    }
}

fn check_state(rho: &CMat, dim: usize) -> Result<(), PistonError> {
    if rho.nrows() != dim || rho.ncols() != dim {
        return Err(PistonError::InvalidState(format!("expected {dim}x{dim}")));
    }
    if (rho - rho.adjoint()).iter().any(|z| z.norm() > STATE_TOL) {
        return Err(PistonError::InvalidState("not Hermitian".into()));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > STATE_TOL {
        return Err(PistonError::InvalidState(format!("trace {} is not 1", tr.re)));
    }
    let min = hermitian_eigenvalues(rho).iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -STATE_TOL {
        return Err(PistonError::InvalidState(format!("negative eigenvalue {min:e}")));
    }
    Ok(())
}

fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    h.symmetric_eigen().eigenvalues.iter().cloned().collect()
}

pub fn energy(rho: &CMat, mode: &PistonMode) -> f64 {
    mode.omega_p * (0..rho.nrows()).map(|n| n as f64 * rho[(n, n)].re).sum::<f64>()
}

pub fn von_neumann_entropy(rho: &CMat) -> f64 {
    hermitian_eigenvalues(rho)
        .into_iter()
        .map(|p| {
            let p = p.max(EIGEN_CLIP);
            -p * p.ln()
        })
        .sum()
}

/// Truncated Gibbs populations at inverse temperature β.
pub fn gibbs_populations(beta: f64, mode: &PistonMode) -> Vec<f64> {
    let x = (-beta * mode.omega_p).exp();
    let mut p = Vec::with_capacity(mode.dim);
    let mut w = 1.0;
    for _ in 0..mode.dim {
        p.push(w);
        w *= x;
    }
    let z: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= z);
    p
}

fn gibbs_entropy(beta: f64, mode: &PistonMode) -> f64 {
    gibbs_populations(beta, mode).into_iter().filter(|&p| p > 0.0).map(|p| -p * p.ln()).sum()
}

pub fn gibbs_energy(temperature: f64, mode: &PistonMode) -> f64 {
    if temperature == 0.0 {
        return 0.0;
    }
    let p = gibbs_populations(1.0 / temperature, mode);
    mode.omega_p * p.iter().enumerate().map(|(n, v)| n as f64 * v).sum::<f64>()
}

/// T_P with S(Gibbs(T_P)) = S; zero for pure states.
pub fn temperature_for_entropy(entropy: f64, mode: &PistonMode) -> Result<f64, PistonError> {
    if entropy <= PURE_ENTROPY {
        return Ok(0.0);
    }
    let (lo, hi) = (BETA_RANGE.0 / mode.omega_p, BETA_RANGE.1 / mode.omega_p);
    let max = gibbs_entropy(lo, mode);
    if entropy > max {
        return Err(PistonError::EntropyOutOfRange { entropy, max });
    }
    // Entropy falls as β grows; bisect in ln β.
    let (mut a, mut b) = (lo.ln(), hi.ln());
    for _ in 0..BISECTION_STEPS {
        let m = 0.5 * (a + b);
        if gibbs_entropy(m.exp(), mode) > entropy {
            a = m;
        } else {
            b = m;
        }
        if b - a <= f64::EPSILON * a.abs().max(1.0) {
            break;
        }
    }
    Ok(1.0 / (0.5 * (a + b)).exp())
}

pub fn effective_temperature(state: &PistonState) -> f64 {
    state.temperature
}

pub fn work_capacity(state: &PistonState) -> f64 {
    state.work_capacity
}

/// Annihilation operator on `dim` levels.
pub fn annihilation(dim: usize) -> CMat {
    let mut a = CMat::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// exp(αa† - α*a) on `dim` levels, via the Hermitian generator i(αa† - α*a).
pub fn displacement(alpha: C64, dim: usize) -> CMat {
    let a = annihilation(dim);
    let h = (a.adjoint() * alpha - &a * alpha.conj()) * C64::new(0.0, 1.0);
    let eig = h.symmetric_eigen();
    let v = &eig.eigenvectors;
    let phases = CMat::from_diagonal(&eig.eigenvalues.map(|l| C64::new(0.0, -l).exp()));
    v * phases * v.adjoint()
}

fn pure(amps: &[C64]) -> CMat {
    let n = amps.len();
    CMat::from_fn(n, n, |i, j| amps[i] * amps[j].conj())
}

/// Build the state in `dim` levels; returns it with its population beyond
/// the truncation (before renormalizing).
fn build(prep: &Preparation, mode: &PistonMode) -> Result<(CMat, f64), PistonError> {
    let d = mode.dim;
    let w = mode.omega_p;
    let positive_beta = |beta: f64| {
        if beta > 0.0 {
            Ok(())
        } else {
            Err(PistonError::InvalidParameter(format!("beta_P must be positive, got {beta}")))
        }
    };
    let (rho, tail) = match *prep {
        Preparation::Fock { n } => {
            if n >= d {
                return Err(PistonError::TruncationOverflow { tail: 1.0, dim: d });
            }
            let mut amps = vec![C64::new(0.0, 0.0); d];
            amps[n] = C64::new(1.0, 0.0);
            (pure(&amps), 0.0)
        }
        Preparation::Coherent { alpha } => {
            let mut amps = Vec::with_capacity(d);
            let mut c = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
            for n in 0..d {
                if n > 0 {
                    c = c * alpha / (n as f64).sqrt();
                }
                amps.push(c);
            }
            let kept: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
            (pure(&amps), (1.0 - kept).max(0.0))
        }
        Preparation::Thermal { beta } => {
            positive_beta(beta)?;
            let p = gibbs_populations(beta, mode);
            let rho = CMat::from_diagonal(&nalgebra::DVector::from_iterator(d, p.iter().map(|&v| C64::new(v, 0.0))));
            (rho, (-beta * w * d as f64).exp())
        }
        Preparation::SqueezedVacuum { r } => {
            let t = r.tanh();
            let mut amps = vec![C64::new(0.0, 0.0); d];
            let mut c = 1.0 / r.cosh().sqrt();
            let mut m = 0usize;
            while 2 * m < d {
                if m > 0 {
                    c *= -t * ((2 * m - 1) as f64 / (2 * m) as f64).sqrt();
                }
                amps[2 * m] = C64::new(c, 0.0);
                m += 1;
            }
            let kept: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
            (pure(&amps), (1.0 - kept).max(0.0))
        }
        Preparation::DisplacedThermal { alpha, beta } => {
            positive_beta(beta)?;
            // Displace in an enlarged space, then truncate.
            let big = PistonMode { omega_p: w, dim: 2 * d + 32 };
            let p = gibbs_populations(beta, &big);
            let th = CMat::from_diagonal(&nalgebra::DVector::from_iterator(big.dim, p.iter().map(|&v| C64::new(v, 0.0))));
            let dm = displacement(alpha, big.dim);
            let full = &dm * th * dm.adjoint();
            let rho = full.view((0, 0), (d, d)).into_owned();
            let kept = rho.trace().re;
            (rho, (1.0 - kept).max(0.0))
        }
    };
    let top = rho[(d - 1, d - 1)].re;
    let norm = rho.trace().re;
    let rho = &rho / C64::new(norm, 0.0);
    let rho = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
    Ok((rho, tail.max(top)))
}

/// Prepare in the mode's fixed dimension; a tail above 10⁻¹⁰ is an error.
pub fn prepare(mode: &PistonMode, prep: &Preparation) -> Result<PistonState, PistonError> {
    let (rho, tail) = build(prep, mode)?;
    if tail >= TAIL_TOL {
        return Err(PistonError::TruncationOverflow { tail, dim: mode.dim });
    }
    PistonState::from_rho(rho, mode)
}

/// Prepare from the default dimension, doubling it until the tail fits.
pub fn prepare_auto(omega_p: f64, prep: &Preparation) -> Result<(PistonMode, PistonState), PistonError> {
    let mut dim = prep.default_dim(omega_p);
    loop {
        let mode = PistonMode::new(omega_p, dim)?;
        match prepare(&mode, prep) {
            Err(PistonError::TruncationOverflow { .. }) if dim < MAX_DIM => dim *= 2,
            other => return other.map(|s| (mode, s)),
        }
    }
}

/// dE/dt - T_P dS/dt.
pub fn max_power(de_dt: f64, ds_dt: f64, t_p: f64) -> f64 {
    de_dt - t_p * ds_dt
}

/// 1 - T_c/T_h when T_P ≥ T_c, otherwise 1 - T_P/T_h.
pub fn engine_efficiency_bound(t_c: f64, t_h: f64, t_p: f64) -> f64 {
    if t_p >= t_c {
        1.0 - t_c / t_h
    } else {
        1.0 - t_p / t_h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CopBound {
    pub cop: f64,
    pub bound: f64,
    pub carnot: f64,
}

pub fn refrigerator_cop_bound(j_c: f64, de_dt: f64, ds_dt: f64, t_c: f64, t_h: f64) -> Result<CopBound, PistonError> {
    if !(de_dt < 0.0) {
        return Err(PistonError::NotPowering(de_dt));
    }
    let carnot = t_c / (t_h - t_c);
    Ok(CopBound { cop: j_c / -de_dt, bound: carnot * (1.0 - t_h * ds_dt / de_dt), carnot })
}

/// Thermalizing channel parameters for [`evolve_damped`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Damping {
    pub gamma: f64,
    pub nbar: f64,
    pub duration: f64,
    pub steps: usize,
    /// Emit a sample every this many steps (and at the end).
    pub sample_every: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PistonSample {
    pub t: f64,
    pub energy: f64,
    pub entropy: f64,
    pub temperature: f64,
    pub work_capacity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<PistonSample>,
    pub final_state: PistonState,
    /// Largest top-level population seen at any sample.
    pub max_top_population: f64,
    /// False when the top level exceeded 10⁻¹⁰ at some sample.
    pub valid: bool,
}

/// γ(n̄+1)D[a]ρ + γn̄D[a†]ρ with truncated ladder operators, elementwise.
fn damping_generator(rho: &CMat, gamma: f64, nbar: f64) -> CMat {
    let d = rho.nrows();
    let down = gamma * (nbar + 1.0);
    let up = gamma * nbar;
    // Diagonal of truncated a†a and a a†.
    let num = |n: usize| n as f64;
    let anum = |n: usize| if n + 1 < d { (n + 1) as f64 } else { 0.0 };
    CMat::from_fn(d, d, |m, n| {
        let mut v = C64::new(0.0, 0.0);
        if m + 1 < d && n + 1 < d {
            v += rho[(m + 1, n + 1)] * (down * (((m + 1) * (n + 1)) as f64).sqrt());
        }
        if m > 0 && n > 0 {
            v += rho[(m - 1, n - 1)] * (up * ((m * n) as f64).sqrt());
        }
        v - rho[(m, n)] * (0.5 * down * (num(m) + num(n)) + 0.5 * up * (anum(m) + anum(n)))
    })
}

fn sample(t: f64, s: &PistonState) -> PistonSample {
    PistonSample { t, energy: s.energy, entropy: s.entropy, temperature: s.temperature, work_capacity: s.work_capacity }
}

/// RK4 evolution under the single-mode thermalizing channel.
pub fn evolve_damped(state: &PistonState, mode: &PistonMode, damping: &Damping) -> Result<Trajectory, PistonError> {
    let Damping { gamma, nbar, duration, steps, sample_every } = *damping;
    if !(gamma >= 0.0) || !(nbar >= 0.0) || !(duration >= 0.0) || steps == 0 || sample_every == 0 {
        return Err(PistonError::InvalidParameter("need gamma, nbar, duration >= 0 and positive step counts".into()));
    }
    let h = duration / steps as f64;
    if gamma > 0.0 && h > 1e-3 / gamma {
        return Err(PistonError::StepTooLarge { step: h, limit: 1e-3 / gamma });
    }
    let half = C64::new(0.5 * h, 0.0);
    let full = C64::new(h, 0.0);
    let sixth = C64::new(h / 6.0, 0.0);
    let two = C64::new(2.0, 0.0);
    let mut rho = state.rho.clone();
    let mut samples = vec![sample(0.0, state)];
    let mut max_top = state.top_population;
    let mut last = state.clone();
    for k in 1..=steps {
        let k1 = damping_generator(&rho, gamma, nbar);
        let k2 = damping_generator(&(&rho + &k1 * half), gamma, nbar);
        let k3 = damping_generator(&(&rho + &k2 * half), gamma, nbar);
        let k4 = damping_generator(&(&rho + &k3 * full), gamma, nbar);
        rho += (k1 + k2 * two + k3 * two + k4) * sixth;
        rho = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
        if k % sample_every == 0 || k == steps {
            let s = PistonState::from_rho(rho.clone(), mode)?;
            max_top = max_top.max(s.top_population);
            samples.push(sample(k as f64 * h, &s));
            last = s;
        }
    }
    Ok(Trajectory { samples, final_state: last, max_top_population: max_top, valid: max_top < TAIL_TOL })
}

/// ½ Σ|λ_i(ρ - σ)|.
pub fn trace_distance(a: &CMat, b: &CMat) -> f64 {
    0.5 * hermitian_eigenvalues(&(a - b)).iter().map(|l| l.abs()).sum::<f64>()
}

/// e^{-iθa†a} ρ e^{iθa†a}.
pub fn phase_rotate(rho: &CMat, theta: f64) -> CMat {
    let d = rho.nrows();
    CMat::from_fn(d, d, |m, n| rho[(m, n)] * C64::new(0.0, -theta * (m as f64 - n as f64)).exp())
}

/// Real diagonal matrix helper for tests and callers holding populations.
pub fn diagonal_state(p: &[f64]) -> CMat {
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(p));
    d.map(|v| C64::new(v, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mode(d: usize) -> PistonMode {
        PistonMode::new(1.3, d).unwrap()
    }

    #[test]
    fn fock_one() {
        let m = mode(8);
        let s = prepare(&m, &Preparation::Fock { n: 1 }).unwrap();
        assert!((s.energy - 1.3).abs() < 1e-15);
        assert!(s.entropy < 1e-20);
        assert_eq!(s.temperature, 0.0);
        assert!((s.work_capacity - 1.3).abs() < 1e-15);
    }

    #[test]
    fn thermal_energy_matches_geometric_series() {
        let m = mode(64);
        let beta = 0.9;
        let s = prepare(&m, &Preparation::Thermal { beta }).unwrap();
        let x: f64 = (-beta * 1.3f64).exp();
        let oracle = 1.3 * x / (1.0 - x);
        assert!((s.energy - oracle).abs() < 1e-10);
        assert!((s.temperature - 1.0 / beta).abs() < 1e-8);
        assert!(s.work_capacity < 1e-10 * 1.3);
    }

    #[test]
    fn coherent_root_two() {
        let (m, s) = prepare_auto(1.0, &Preparation::Coherent { alpha: C64::new(2f64.sqrt(), 0.0) }).unwrap();
        assert!((s.energy - 2.0).abs() < 1e-9);
        assert_eq!(s.temperature, 0.0);
        assert!((s.work_capacity - 2.0).abs() < 1e-8);
        assert!(s.is_nonpassive(&m));
    }

    #[test]
    fn displaced_thermal_keeps_temperature() {
        let (m, s) = prepare_auto(1.0, &Preparation::DisplacedThermal { alpha: C64::new(1.0, 0.0), beta: 1.0 }).unwrap();
        assert!((s.temperature - 1.0).abs() < 1e-8);
        assert!((s.work_capacity - 1.0).abs() < 1e-6);
        assert!(m.dim >= 32);
    }

    #[test]
    fn squeezed_vacuum_energy() {
        let r = 0.5f64;
        let (_, s) = prepare_auto(1.0, &Preparation::SqueezedVacuum { r }).unwrap();
        assert!((s.energy - r.sinh().powi(2)).abs() < 1e-9);
        assert_eq!(s.temperature, 0.0);
    }

    #[test]
    fn explicit_small_dimension_overflows() {
        let m = mode(4);
        let e = prepare(&m, &Preparation::Coherent { alpha: C64::new(2.0, 0.0) });
        assert!(matches!(e, Err(PistonError::TruncationOverflow { .. })));
    }

    #[test]
    fn bound_arithmetic() {
        assert_eq!(max_power(1.0, 0.2, 2.0), 0.6);
        assert_eq!(engine_efficiency_bound(1.0, 2.0, 0.0), 1.0);
        assert_eq!(engine_efficiency_bound(1.0, 2.0, 1.5), 0.5);
        assert_eq!(engine_efficiency_bound(1.0, 2.0, 1.0), 0.5);
        let b = refrigerator_cop_bound(0.3, -1.0, 0.1, 1.0, 2.0).unwrap();
        assert!((b.bound - 1.2).abs() < 1e-15);
        assert!(refrigerator_cop_bound(0.3, 0.0, 0.1, 1.0, 2.0).is_err());
    }

    #[test]
    fn matched_thermal_state_is_stationary() {
        let m = mode(40);
        let nbar = 0.4;
        let beta = ((nbar + 1.0) / nbar as f64).ln() / m.omega_p;
        let s = prepare(&m, &Preparation::Thermal { beta }).unwrap();
        let d = Damping { gamma: 1.0, nbar, duration: 1.0, steps: 1000, sample_every: 100 };
        let tr = evolve_damped(&s, &m, &d).unwrap();
        for x in &tr.samples {
            assert!((x.energy - s.energy).abs() < 1e-8);
            assert!((x.entropy - s.entropy).abs() < 1e-8);
        }
        let bad = Damping { steps: 10, ..d };
        assert!(matches!(evolve_damped(&s, &m, &bad), Err(PistonError::StepTooLarge { .. })));
    }

    #[test]
    fn fock_loses_capacity_while_coherent_stays_pure() {
        let m = mode(32);
        let fock = prepare(&m, &Preparation::Fock { n: 3 }).unwrap();
        let coh = prepare(&m, &Preparation::Coherent { alpha: C64::new(3f64.sqrt(), 0.0) }).unwrap();
        let d = Damping { gamma: 1.0, nbar: 0.0, duration: 8.0, steps: 8_000, sample_every: 500 };
        let tf = evolve_damped(&fock, &m, &d).unwrap();
        let tc = evolve_damped(&coh, &m, &d).unwrap();
        assert!(tf.valid && tc.valid);
        for w in tf.samples.windows(2) {
            assert!(w[1].work_capacity < w[0].work_capacity);
        }
        assert!(tf.samples.last().unwrap().work_capacity < 1e-6 * m.omega_p);
        for (f, c) in tf.samples.iter().zip(&tc.samples).skip(1) {
            assert!(c.entropy < f.entropy);
        }
    }
}
