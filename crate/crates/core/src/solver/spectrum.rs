use super::{factor_block, spectral_scale, BlockSplit, KernelOptions, DENSE_SPECTRUM_LIMIT};
use crate::linalg::{self, eigs, C64};
use crate::model::{self, KerrArrayParams, TwoPhotonArrayParams};
use crate::superop::Superoperator;
use crate::{Error, Result};

/// Ritz pairs requested per block when the spectrum is too large to
/// diagonalize densely.
const SHIFT_INVERT_NEV: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpectrumMethod {
    /// Every eigenvalue, from dense diagonalization of each block.
    Dense,
    /// Eigenvalues nearest zero in modulus, by shift-invert subspace
    /// iteration on each block.
    ShiftInvert,
}

#[derive(Clone, Debug)]
pub struct SpectrumResult {
    pub eigenvalues: Vec<C64>,
    /// Number of eigenvalues with |Re λ| < kernel_tol.
    pub kernel_dim: usize,
    /// Smallest |Re λ| outside the kernel.
    pub dissipative_gap: f64,
    /// Absolute kernel tolerance.
    pub kernel_tol: f64,
    pub scale: f64,
    /// Largest Re λ relative to the scale; ≤ 0 up to roundoff for a Lindbladian.
    pub max_real_part: f64,
    /// Gap candidates when an eigenvalue falls within a factor 10 of the
    /// kernel tolerance: (gap if it is counted as kernel, gap if not).
    pub ambiguous: Option<(f64, f64)>,
    pub method: SpectrumMethod,
}

impl SpectrumResult {
    fn from_eigenvalues(eigenvalues: Vec<C64>, scale: f64, rel_tol: f64, method: SpectrumMethod) -> Result<Self> {
        let tol = rel_tol * scale;
        let kernel_dim = eigenvalues.iter().filter(|l| l.re.abs() < tol).count();
        let gap = eigenvalues
            .iter()
            .map(|l| l.re.abs())
            .filter(|&r| r >= tol)
            .fold(f64::INFINITY, f64::min);
        if kernel_dim == 0 {
            return Err(Error::Eigensolver(format!(
                "no eigenvalue with |Re λ| < {tol:.3e}; a trace-preserving map has a steady state"
            )));
        }
        let grey: Vec<f64> = eigenvalues
            .iter()
            .map(|l| l.re.abs())
            .filter(|&r| r >= 0.1 * tol && r < 10.0 * tol)
            .collect();
        let ambiguous = if grey.is_empty() {
            None
        } else {
            let strict = eigenvalues
                .iter()
                .map(|l| l.re.abs())
                .filter(|&r| r >= 10.0 * tol)
                .fold(f64::INFINITY, f64::min);
            let loose = grey.iter().copied().fold(f64::INFINITY, f64::min);
            log::warn!(
                "eigenvalues near the kernel tolerance {tol:.3e}: gap is {strict:.6e} if they belong to the kernel, {loose:.6e} otherwise"
            );
            Some((strict, loose))
        };
        let max_real_part = eigenvalues.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max) / scale;
        Ok(SpectrumResult {
            eigenvalues,
            kernel_dim,
            dissipative_gap: gap,
            kernel_tol: tol,
            scale,
            max_real_part,
            ambiguous,
            method,
        })
    }
}

/// Liouvillian spectrum and dissipative gap. Blocks up to
/// [`DENSE_SPECTRUM_LIMIT`] are diagonalized densely; larger ones yield the
/// eigenvalues nearest zero in modulus, whose smallest nonzero real part is
/// reported as the gap.
pub fn dissipative_gap(l: &Superoperator, opts: KernelOptions) -> Result<SpectrumResult> {
    let split = BlockSplit::new(l.matrix());
    if split.max_block() <= DENSE_SPECTRUM_LIMIT {
        let (scale, spectra) = spectral_scale(l, &split)?;
        let scale = opts.scale.unwrap_or(scale);
        let eigenvalues = spectra.expect("dense spectra below the limit").concat();
        return SpectrumResult::from_eigenvalues(eigenvalues, scale, opts.kernel_tol, SpectrumMethod::Dense);
    }
    let scale = opts.scale.unwrap_or_else(|| l.norm());
    let tol = opts.kernel_tol * scale;
    let mut eigenvalues = Vec::new();
    for b in &split.blocks {
        if b.nrows() <= DENSE_SPECTRUM_LIMIT / 4 {
            eigenvalues.extend(linalg::eigenvalues(b.to_dense().as_ref())?);
            continue;
        }
        let factor = factor_block(b, tol)?;
        let rz = eigs::near_zero(b, &factor, SHIFT_INVERT_NEV, SHIFT_INVERT_NEV / 2, 1e-8 * scale, 60, false)?;
        eigenvalues.extend(rz.values.iter().take(SHIFT_INVERT_NEV / 2));
    }
    SpectrumResult::from_eigenvalues(eigenvalues, scale, opts.kernel_tol, SpectrumMethod::ShiftInvert)
}

/// Δ_d ≈ 8(U²/N²)(Σ_{k≠φ} 1/γ_k)|ζ|² = 2Γ|ζ|².
pub fn kerr_zeno_gap_estimate(p: &KerrArrayParams) -> Result<f64> {
    Ok(2.0 * model::zeno_rate(p)? * p.zeta().norm_sqr())
}

/// Δ_d = (Γ/2)(N/U)ε₁ with ε₁ the first excited energy of H_φ (its two
/// lowest levels are the degenerate cat ground states).
pub fn kerr_zeno_gap_relation(p: &KerrArrayParams, m_phi: usize) -> Result<(f64, f64)> {
    let z = model::effective_zeno_kerr(p, m_phi)?;
    let ev = linalg::hermitian_eigenvalues(z.hamiltonian.to_dense().as_ref())?;
    let eps1 = ev[2];
    let gamma_eff = model::zeno_rate(p)?;
    Ok((0.5 * gamma_eff * p.n as f64 / p.u * eps1, eps1))
}

/// Δ_d ≈ 2η|ζ̃|²/N = 2G.
pub fn twophoton_zeno_gap_estimate(p: &TwoPhotonArrayParams) -> f64 {
    2.0 * p.eta * p.zeta().norm_sqr() / p.n as f64
}
