use faer::Mat;

use super::{conserved_quantities, steady_for_initial, KernelOptions};
use crate::linalg::{self, C64};
use crate::model::{self, KerrArrayParams, Truncations};
use crate::states::{dfs_basis, hs_distance, purity, with_vacuum_reservoir, DfsCoefficients};
use crate::superop::model_adjoint;
use crate::Result;

/// Full-array steady state against the Zeno prediction ρ_d ⊗ ρ_{φ,ss},
/// both seeded from the vacuum.
#[derive(Clone, Debug)]
pub struct ZenoComparison {
    pub gamma: f64,
    pub hs_distance: f64,
    pub full: DfsCoefficients,
    pub zeno: DfsCoefficients,
    pub full_purity: f64,
}

/// Vacuum-seeded steady state of a model via its conserved quantities,
/// with the spectral scale the kernel was resolved at.
pub fn vacuum_steady_state(
    m: &model::ModelInstance,
    opts: KernelOptions,
) -> Result<(Mat<C64>, DfsCoefficients, f64)> {
    let dfs = dfs_basis(m)?;
    let cq = conserved_quantities(&model_adjoint(m)?, &dfs, opts)?;
    let vac = m.space.vacuum();
    let rho_in = linalg::outer(vac.as_ref(), vac.as_ref());
    let (rho, c) = steady_for_initial(rho_in.as_ref(), &cq, &dfs)?;
    Ok((rho.into_matrix(), c, cq.kernel.scale))
}

pub fn zeno_distance(p: &KerrArrayParams, trunc: Truncations, opts: KernelOptions) -> Result<ZenoComparison> {
    let full = model::kerr_array(p, trunc)?;
    let (rho_ss, c_full, scale) = vacuum_steady_state(&full, opts)?;
    let zeno = model::effective_zeno_kerr(p, trunc.m_phi)?;
    // The Zeno generator is O(U²/γ) while its truncation-induced coherence
    // decay is not, so it is resolved at the absolute tolerance of the full one.
    let zopts = KernelOptions {
        scale: Some(opts.scale.unwrap_or(scale)),
        ..opts
    };
    let (rho_phi, c_zeno, _) = vacuum_steady_state(&zeno, zopts)?;
    let prod = with_vacuum_reservoir(&full.space, full.phi_mode, rho_phi.as_ref());
    Ok(ZenoComparison {
        gamma: p.gamma,
        hs_distance: hs_distance(rho_ss.as_ref(), prod.as_ref()),
        full: c_full,
        zeno: c_zeno,
        full_purity: purity(rho_ss.as_ref()),
    })
}

/// Least-squares slope of ln y against ln x.
pub fn fit_loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
