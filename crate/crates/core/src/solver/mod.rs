//! Steady states, conserved quantities, spectra and time evolution of
//! materialized Liouvillians.
//!
//! Every solve first splits the superoperator into the connected components
//! of its sparsity pattern. For the array models these are the sectors of
//! shifted quasi-momentum and parity differences between ket and bra, so
//! each block is factored or diagonalized on its own.

mod evolve;
mod kernel;
mod spectrum;
mod zeno;

pub use evolve::{
    evolve, log_time_grid, EvolveMethod, EvolveOptions, Observables, Trajectory,
};
pub use kernel::{
    conserved_quantities, dfs_projection_residual, physical_states, project_onto_kernel,
    steady_for_initial, steady_kernel, ConservedQuantities, KernelResult,
};
pub use spectrum::{
    dissipative_gap, kerr_zeno_gap_estimate, kerr_zeno_gap_relation, twophoton_zeno_gap_estimate,
    SpectrumMethod, SpectrumResult,
};
pub use zeno::{fit_loglog_slope, vacuum_steady_state, zeno_distance, ZenoComparison};

use crate::linalg::eigs::ShiftedFactor;
use crate::linalg::{self, SparseOp, C64};
use crate::superop::Superoperator;
use crate::Result;

/// Default kernel tolerance relative to the spectral scale.
pub const DEFAULT_KERNEL_TOL: f64 = 1e-10;
/// Blocks up to this size are diagonalized densely.
pub const DENSE_SPECTRUM_LIMIT: usize = 1600;

/// Tolerance settings shared by kernel and spectrum solves.
#[derive(Clone, Copy, Debug)]
pub struct KernelOptions {
    /// Kernel threshold relative to the spectral scale.
    pub kernel_tol: f64,
    /// Spectral scale override; estimated when `None`.
    pub scale: Option<f64>,
}

impl Default for KernelOptions {
    fn default() -> Self {
        KernelOptions {
            kernel_tol: DEFAULT_KERNEL_TOL,
            scale: None,
        }
    }
}

/// Invariant blocks of a superoperator matrix.
#[derive(Clone, Debug)]
pub struct BlockSplit {
    pub indices: Vec<Vec<usize>>,
    pub blocks: Vec<SparseOp>,
}

impl BlockSplit {
    pub fn new(m: &SparseOp) -> Self {
        let indices = m.components();
        let blocks = indices.iter().map(|idx| m.extract_block(idx)).collect();
        BlockSplit { indices, blocks }
    }

    pub fn max_block(&self) -> usize {
        self.indices.iter().map(Vec::len).max().unwrap_or(0)
    }
}

/// Largest |Re λ| over the spectrum when every block is small enough for a
/// dense solve, otherwise the infinity norm (an upper bound on |λ|).
fn spectral_scale(l: &Superoperator, split: &BlockSplit) -> Result<(f64, Option<Vec<Vec<C64>>>)> {
    if split.max_block() <= DENSE_SPECTRUM_LIMIT {
        let spectra = block_spectra(split)?;
        let s = spectra
            .iter()
            .flatten()
            .map(|l| l.re.abs())
            .fold(0.0, f64::max);
        Ok((if s > 0.0 { s } else { l.norm().max(1.0) }, Some(spectra)))
    } else {
        Ok((l.norm(), None))
    }
}

/// Spectral scale used for relative kernel tolerances.
pub fn liouvillian_scale(l: &Superoperator) -> Result<f64> {
    Ok(spectral_scale(l, &BlockSplit::new(l.matrix()))?.0)
}

fn block_spectra(split: &BlockSplit) -> Result<Vec<Vec<C64>>> {
    split
        .blocks
        .iter()
        .map(|b| linalg::eigenvalues(b.to_dense().as_ref()))
        .collect()
}

/// Shift used for inverse iteration, well inside the kernel band.
fn kernel_shift(tol: f64) -> C64 {
    C64::new(-1e-3 * tol, 0.0)
}

fn factor_block(b: &SparseOp, tol: f64) -> Result<ShiftedFactor> {
    ShiftedFactor::new(b, kernel_shift(tol))
}
