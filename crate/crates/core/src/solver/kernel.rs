use faer::linalg::solvers::Solve;
use faer::{Col, Mat, MatRef};

use super::{factor_block, spectral_scale, BlockSplit, KernelOptions};
use crate::fock::DensityMatrix;
use crate::linalg::{self, c, cr, eigs, C64};
use crate::states::{DfsCoefficients, Provenance};
use crate::superop::{devectorize, Superoperator};
use crate::{Error, Result};

const START_BLOCK: usize = 6;
const MAX_ITER: usize = 40;

/// Null space of a superoperator.
#[derive(Clone, Debug)]
pub struct KernelResult {
    /// Hermitian, Hilbert–Schmidt orthonormal basis of the kernel.
    pub basis: Vec<Mat<C64>>,
    /// Ritz values accepted as kernel eigenvalues.
    pub eigenvalues: Vec<C64>,
    /// ‖A x − λ x‖ for each accepted Ritz pair.
    pub residuals: Vec<f64>,
    /// Absolute tolerance used: kernel_tol × scale.
    pub tol: f64,
    pub scale: f64,
    /// Outside eigenvalue with the smallest |λ|.
    pub nearest_outside: Option<C64>,
}

impl KernelResult {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

struct BlockKernel {
    vectors: Vec<Col<C64>>,
    values: Vec<C64>,
    residuals: Vec<f64>,
    outside: Option<C64>,
}

fn block_kernel(b: &crate::linalg::SparseOp, tol: f64) -> Result<BlockKernel> {
    let n = b.nrows();
    let factor = factor_block(b, tol)?;
    let mut p = START_BLOCK.min(n);
    loop {
        let want = p.min(4);
        let rz = eigs::near_zero(b, &factor, p, want, tol, MAX_ITER, false)?;
        let inside: Vec<usize> = (0..rz.values.len()).filter(|&i| rz.values[i].re.abs() < tol).collect();
        if inside.len() == p && p < n {
            p = (2 * p).min(n);
            continue;
        }
        for (i, v) in rz.values.iter().enumerate() {
            let m = v.re.abs();
            if (m >= tol && m < 10.0 * tol) || (m < tol && m > 0.1 * tol) {
                log::warn!("eigenvalue {v} of a {n}-block lies within a factor 10 of the kernel tolerance {tol:.3e} (residual {:.3e})", rz.residuals[i]);
            }
        }
        for &i in &inside {
            if rz.residuals[i] > tol {
                return Err(Error::Eigensolver(format!(
                    "kernel vector of a {n}-block did not converge: residual {:.3e} > {tol:.3e}",
                    rz.residuals[i]
                )));
            }
        }
        let outside = (0..rz.values.len())
            .filter(|i| !inside.contains(i))
            .map(|i| rz.values[i])
            .min_by(|a, b| a.norm().total_cmp(&b.norm()));
        return Ok(BlockKernel {
            vectors: inside.iter().map(|&i| rz.vectors.col(i).to_owned()).collect(),
            values: inside.iter().map(|&i| rz.values[i]).collect(),
            residuals: inside.iter().map(|&i| rz.residuals[i]).collect(),
            outside,
        });
    }
}

/// Real Gram–Schmidt over Hermitian matrices with ⟨A, B⟩ = Re Tr[A†B].
/// Candidates whose remaining norm falls below `floor` are skipped.
fn hermitian_orthonormalize(cands: Vec<Mat<C64>>, keep: usize, floor: f64) -> Vec<Mat<C64>> {
    let mut out: Vec<Mat<C64>> = Vec::new();
    for mut x in cands {
        if out.len() == keep {
            break;
        }
        for _ in 0..2 {
            for q in &out {
                let d = linalg::hs_inner(q.as_ref(), x.as_ref()).re;
                x -= q * faer::Scale(cr(d));
            }
        }
        let nrm = linalg::frobenius(x.as_ref());
        if nrm > floor {
            x *= faer::Scale(cr(1.0 / nrm));
            out.push(x);
        }
    }
    out
}

/// Null space of `l` (a Liouvillian or adjoint Liouvillian), returned as a
/// Hermitian orthonormal basis. Among the eigenvalues nearest zero, those
/// with |Re λ| below `kernel_tol` times the spectral scale are kept, so
/// coherences whose frequency is a truncation artifact stay in the kernel.
pub fn steady_kernel(l: &Superoperator, opts: KernelOptions) -> Result<KernelResult> {
    let split = BlockSplit::new(l.matrix());
    let scale = match opts.scale {
        Some(s) => s,
        None => spectral_scale(l, &split)?.0,
    };
    let tol = opts.kernel_tol * scale;
    let d = l.dim();
    let mut raw = Vec::new();
    let mut eigenvalues = Vec::new();
    let mut residuals = Vec::new();
    let mut nearest_outside: Option<C64> = None;
    for (idx, b) in split.indices.iter().zip(&split.blocks) {
        let bk = block_kernel(b, tol)?;
        for v in &bk.vectors {
            let mut full = Col::zeros(d * d);
            for (p, &i) in idx.iter().enumerate() {
                full[i] = v[p];
            }
            raw.push(devectorize(full.as_ref())?);
        }
        eigenvalues.extend(bk.values);
        residuals.extend(bk.residuals);
        if let Some(o) = bk.outside {
            if nearest_outside.is_none_or(|n| o.norm() < n.norm()) {
                nearest_outside = Some(o);
            }
        }
    }
    let k = raw.len();
    let mut cands = Vec::with_capacity(2 * k);
    for x in &raw {
        let xa = linalg::adjoint(x.as_ref());
        cands.push(Mat::from_fn(d, d, |i, j| (x[(i, j)] + xa[(i, j)]) * 0.5));
        cands.push(Mat::from_fn(d, d, |i, j| (x[(i, j)] - xa[(i, j)]) * c(0.0, -0.5)));
    }
    cands.sort_by(|a, b| linalg::frobenius(b.as_ref()).total_cmp(&linalg::frobenius(a.as_ref())));
    let basis = hermitian_orthonormalize(cands, k, 1e-3);
    if basis.len() != k {
        return Err(Error::Eigensolver(format!(
            "kernel of dimension {k} is not closed under adjoint at tolerance {tol:.3e}"
        )));
    }
    Ok(KernelResult {
        basis,
        eigenvalues,
        residuals,
        tol,
        scale,
        nearest_outside,
    })
}

/// Orthogonal projection of `x` onto the span of an orthonormal basis.
pub fn project_onto_kernel(basis: &[Mat<C64>], x: MatRef<'_, C64>) -> Mat<C64> {
    let mut out = Mat::zeros(x.nrows(), x.ncols());
    for q in basis {
        let w = linalg::hs_inner(q.as_ref(), x);
        out += q * faer::Scale(w);
    }
    out
}

/// Largest Frobenius residual of a kernel basis element after projection
/// onto span{ξ}. The ξ must be Hilbert–Schmidt orthonormal.
pub fn dfs_projection_residual(basis: &[Mat<C64>], dfs: &[Mat<C64>]) -> f64 {
    basis
        .iter()
        .map(|k| {
            let p = project_onto_kernel(dfs, k.as_ref());
            linalg::frobenius((k - &p).as_ref())
        })
        .fold(0.0, f64::max)
}

/// Recombines a Hermitian kernel basis into density matrices. Each basis
/// element contributes the trace-normalized positive and negative parts of
/// its spectral decomposition (both stationary), and the set is reduced to
/// linearly independent states. With `references`, each reference is
/// projected onto the kernel and renormalized instead.
pub fn physical_states(kernel: &KernelResult, references: Option<&[Mat<C64>]>) -> Result<Vec<DensityMatrix>> {
    let k = kernel.dim();
    let mut states = Vec::new();
    if let Some(refs) = references {
        for r in refs {
            let p = project_onto_kernel(&kernel.basis, r.as_ref());
            let tr = linalg::trace(p.as_ref());
            if tr.norm() < 1e-8 {
                continue;
            }
            let m = Mat::from_fn(p.nrows(), p.ncols(), |i, j| {
                (p[(i, j)] + p[(j, i)].conj()) * 0.5 / tr.re
            });
            states.push(DensityMatrix::new(m)?);
        }
        return Ok(states);
    }
    let mut parts = Vec::new();
    for q in &kernel.basis {
        let eig = q
            .self_adjoint_eigen(faer::Side::Lower)
            .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
        let (u, s) = (eig.U(), eig.S());
        for sign in [1.0, -1.0] {
            let d = q.nrows();
            let mut m = Mat::<C64>::zeros(d, d);
            let mut tr = 0.0;
            for e in 0..d {
                let w = s[e].re * sign;
                if w > 0.0 {
                    tr += w;
                    for j in 0..d {
                        let uj = u[(j, e)].conj() * w;
                        for i in 0..d {
                            m[(i, j)] += u[(i, e)] * uj;
                        }
                    }
                }
            }
            if tr > 1e-8 {
                m *= faer::Scale(cr(1.0 / tr));
                parts.push(m);
            }
        }
    }
    // Greedy independent subset, kept in the original (physical) form.
    let mut ortho: Vec<Mat<C64>> = Vec::new();
    for m in parts {
        if states.len() == k {
            break;
        }
        let mut x = m.clone();
        for q in &ortho {
            let dq = linalg::hs_inner(q.as_ref(), x.as_ref()).re;
            x -= q * faer::Scale(cr(dq));
        }
        let nrm = linalg::frobenius(x.as_ref());
        if nrm > 1e-6 {
            x *= faer::Scale(cr(1.0 / nrm));
            ortho.push(x);
            let h = Mat::from_fn(m.nrows(), m.ncols(), |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5);
            states.push(DensityMatrix::new(h)?);
        }
    }
    Ok(states)
}

/// Conserved quantities bi-orthogonal to a DFS basis.
#[derive(Clone, Debug)]
pub struct ConservedQuantities {
    /// J_μ with Tr[J_μ† ξ_β] = δ_{μβ}.
    pub j: Vec<Mat<C64>>,
    /// max |Tr[J_μ† ξ_β] − δ_{μβ}|.
    pub biorthogonality_error: f64,
    pub kernel: KernelResult,
}

/// Kernel of the adjoint Liouvillian recombined so that Tr[J_μ† ξ_β] = δ_{μβ}.
pub fn conserved_quantities(
    l_adj: &Superoperator,
    dfs_basis: &[Mat<C64>],
    opts: KernelOptions,
) -> Result<ConservedQuantities> {
    let kernel = steady_kernel(l_adj, opts)?;
    let k = kernel.dim();
    if k != dfs_basis.len() {
        return Err(Error::KernelMismatch {
            kernel: k,
            basis: dfs_basis.len(),
        });
    }
    // S_{νβ} = Tr[K_ν† ξ_β]; J = K X with X = S^{−H}.
    let s = Mat::from_fn(k, k, |nu, beta| {
        linalg::hs_inner(kernel.basis[nu].as_ref(), dfs_basis[beta].as_ref())
    });
    let sh = linalg::adjoint(s.as_ref());
    let x = sh.partial_piv_lu().solve(&linalg::identity(k));
    let d = dfs_basis[0].nrows();
    let j: Vec<Mat<C64>> = (0..k)
        .map(|mu| {
            let mut acc = Mat::zeros(d, d);
            for nu in 0..k {
                acc += &kernel.basis[nu] * faer::Scale(x[(nu, mu)]);
            }
            acc
        })
        .collect();
    let mut err: f64 = 0.0;
    for (mu, jm) in j.iter().enumerate() {
        for (beta, xi) in dfs_basis.iter().enumerate() {
            let v = linalg::hs_inner(jm.as_ref(), xi.as_ref());
            let want = if mu == beta { cr(1.0) } else { cr(0.0) };
            err = err.max((v - want).norm());
        }
    }
    if !err.is_finite() || err > 1e-6 {
        return Err(Error::Eigensolver(format!(
            "adjoint kernel is nearly orthogonal to the DFS basis (bi-orthogonality error {err:.3e})"
        )));
    }
    Ok(ConservedQuantities {
        j,
        biorthogonality_error: err,
        kernel,
    })
}

/// ρ_ss = Σ_μ c_μ ξ_μ with c_μ = Tr[J_μ† ρ_in]. The DFS basis must be
/// ordered (ξ_{++}, ξ_{−−}, ξ_{+−}, ξ_{−+}) for the coefficients to be
/// reported; other orderings still give a correct ρ_ss.
pub fn steady_for_initial(
    rho_in: MatRef<'_, C64>,
    cq: &ConservedQuantities,
    dfs_basis: &[Mat<C64>],
) -> Result<(DensityMatrix, DfsCoefficients)> {
    let coeffs: Vec<C64> = cq.j.iter().map(|j| linalg::hs_inner(j.as_ref(), rho_in)).collect();
    let d = rho_in.nrows();
    let mut rho = Mat::zeros(d, d);
    for (cmu, xi) in coeffs.iter().zip(dfs_basis) {
        rho += xi * faer::Scale(*cmu);
    }
    let dm = DensityMatrix::new(rho).map_err(|e| {
        Error::InvalidState(format!("reconstructed steady state is unphysical ({e}); check truncation or kernel"))
    })?;
    let get = |i: usize| coeffs.get(i).copied().unwrap_or(cr(0.0));
    let dc = DfsCoefficients {
        c_pp: get(0).re,
        c_mm: get(1).re,
        c_pm: get(2),
        provenance: Provenance::ConservedQuantities,
    };
    Ok((dm, dc))
}
