//! Dense Liouvillian construction and steady states by kernel projection.
//!
//! This is the brute-force reference path: generators are assembled as
//! n²×n² matrices acting on column-stacked density matrices, and the steady
//! state reached from a given initial state is obtained by projecting onto
//! the kernel along the conserved quantities (left null vectors).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

pub type CMat = DMatrix<C64>;

/// Relative singular-value threshold separating the kernel.
pub const KERNEL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LindbladError {
    #[error("generator has no kernel: smallest singular value {smallest:e} (relative)")]
    NoKernel { smallest: f64 },
    #[error("left and right kernels differ in dimension ({left} vs {right})")]
    KernelMismatch { left: usize, right: usize },
    #[error("conserved-quantity system is singular")]
    Singular,
}

/// (c/2)·D(a, b) with D(a, b)ρ = 2aρb - baρ - ρba.
///
/// With b = a† and c = γ this is the usual γ(aρa† - ½{a†a, ρ}).
#[derive(Debug, Clone)]
pub struct CrossTerm {
    pub coeff: f64,
    pub a: CMat,
    pub b: CMat,
}

impl CrossTerm {
    pub fn jump(rate: f64, op: CMat) -> Self {
        let b = op.adjoint();
        CrossTerm { coeff: rate, a: op, b }
    }

    pub fn apply(&self, rho: &CMat) -> CMat {
        let ba = &self.b * &self.a;
        let c = C64::new(0.5 * self.coeff, 0.0);
        (&self.a * rho * &self.b * C64::new(2.0, 0.0) - &ba * rho - rho * &ba) * c
    }
}

/// |i⟩⟨j| in dimension n.
pub fn ket_bra(n: usize, i: usize, j: usize) -> CMat {
    let mut m = CMat::zeros(n, n);
    m[(i, j)] = C64::new(1.0, 0.0);
    m
}

pub fn superoperator(dim: usize, terms: &[CrossTerm]) -> CMat {
    let id = CMat::identity(dim, dim);
    let mut l = CMat::zeros(dim * dim, dim * dim);
    for t in terms {
        let ba = &t.b * &t.a;
        // vec(AXB) = (Bᵀ ⊗ A) vec(X) for column-major stacking.
        let s = t.b.transpose().kronecker(&t.a) * C64::new(2.0, 0.0)
            - id.kronecker(&ba)
            - ba.transpose().kronecker(&id);
        l += s * C64::new(0.5 * t.coeff, 0.0);
    }
    l
}

pub fn apply_all(terms: &[CrossTerm], rho: &CMat) -> CMat {
    let n = rho.nrows();
    terms.iter().fold(CMat::zeros(n, n), |acc, t| acc + t.apply(rho))
}

#[derive(Debug, Clone)]
pub struct KernelSolution {
    pub rho: CMat,
    pub kernel_dim: usize,
    /// Largest kernel singular value relative to the largest overall.
    pub kernel_residual: f64,
    /// Smallest non-kernel singular value relative to the largest overall.
    pub spectral_gap: f64,
}

/// Long-time limit of ρ̇ = Lρ from `rho0`: the kernel component selected by
/// the values of all conserved quantities.
pub fn steady_state(l: &CMat, rho0: &CMat) -> Result<KernelSolution, LindbladError> {
    let n = rho0.nrows();
    let svd = l.clone().svd(false, true);
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let s = &svd.singular_values;
    let smax = s.iter().cloned().fold(0.0f64, f64::max).max(f64::MIN_POSITIVE);
    let kernel: Vec<usize> = (0..s.len()).filter(|&i| s[i] <= KERNEL_TOL * smax).collect();
    if kernel.is_empty() {
        let smallest = s.iter().cloned().fold(f64::INFINITY, f64::min) / smax;
        return Err(LindbladError::NoKernel { smallest });
    }
    let residual = kernel.iter().map(|&i| s[i]).fold(0.0f64, f64::max) / smax;
    let gap = (0..s.len())
        .filter(|i| !kernel.contains(i))
        .map(|i| s[i])
        .fold(f64::INFINITY, f64::min)
        / smax;
    let k = kernel.len();
    // Null vectors come from Vᴴ on both sides: U columns belonging to tiny
    // singular values are not reliably in the left kernel.
    let right: Vec<DVector<C64>> = kernel.iter().map(|&i| v_t.row(i).adjoint()).collect();
    let adj = l.adjoint().svd(false, true);
    let adj_t = adj.v_t.as_ref().expect("v_t requested");
    let left: Vec<DVector<C64>> = (0..adj.singular_values.len())
        .filter(|&i| adj.singular_values[i] <= KERNEL_TOL * smax)
        .map(|i| adj_t.row(i).adjoint())
        .collect();
    if left.len() != k {
        return Err(LindbladError::Singular);
    }
    let x0 = DVector::from_column_slice(rho0.as_slice());
    let mut m = CMat::zeros(k, k);
    let mut b = DVector::<C64>::zeros(k);
    for (r, lv) in left.iter().enumerate() {
        for (c, rv) in right.iter().enumerate() {
            m[(r, c)] = lv.dotc(rv);
        }
        b[r] = lv.dotc(&x0);
    }
    let coef = m.lu().solve(&b).ok_or(LindbladError::Singular)?;
    let mut x = DVector::<C64>::zeros(n * n);
    for (c, rv) in right.iter().enumerate() {
        x += rv * coef[c];
    }
    let rho = CMat::from_column_slice(n, n, x.as_slice());
    let rho = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
    Ok(KernelSolution { rho, kernel_dim: k, kernel_residual: residual, spectral_gap: gap })
}
