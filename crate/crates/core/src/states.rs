//! Analytic cat states, dark-state checks and state figures of merit.

use faer::{Col, Mat, MatRef};

use crate::fock::{self, FockSpace};
use crate::linalg::{self, cr, Ket, SparseOp, C64};
use crate::model::{momentum, JumpLabel, ModelInstance, ModelKind};
use crate::{Error, Result};

/// Photon-number parity of a cat state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn sign(&self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

/// N_± = [2(1 ± e^{−2|ζ|²})]^{−1/2}.
pub fn cat_normalization(zeta: C64, parity: Parity) -> Result<f64> {
    let s = 2.0 * (1.0 + parity.sign() * (-2.0 * zeta.norm_sqr()).exp());
    if s <= 0.0 || (parity == Parity::Odd && zeta.norm_sqr() < 1e-300) {
        return Err(Error::DegenerateCat);
    }
    Ok(1.0 / s.sqrt())
}

/// Truncated cat N_±(|ζ⟩ ± |−ζ⟩) on `m` levels, normalized after truncation.
pub fn cat_state(zeta: C64, m: usize, parity: Parity) -> Result<Ket> {
    cat_normalization(zeta, parity)?;
    let amps = fock::coherent_amplitudes(zeta, m);
    let keep = |n: usize| match parity {
        Parity::Even => n % 2 == 0,
        Parity::Odd => n % 2 == 1,
    };
    let v = Col::from_fn(m, |n| if keep(n) { amps[n] } else { cr(0.0) });
    let nrm = v.norm_l2();
    if nrm < 1e-300 {
        return Err(Error::DegenerateCat);
    }
    Ok(Col::from_fn(m, |n| v[n] / nrm))
}

/// The pair |C±⟩ of one mode.
#[derive(Clone, Debug)]
pub struct CatManifold {
    pub zeta: C64,
    pub m: usize,
    pub plus: Ket,
    pub minus: Ket,
    pub n_plus: f64,
    pub n_minus: f64,
    /// Weight of the untruncated coherent state above level m − 1.
    pub leakage: f64,
}

impl CatManifold {
    pub fn new(zeta: C64, m: usize) -> Result<Self> {
        let leakage = fock::coherent_state(zeta, m)?.leakage;
        Ok(CatManifold {
            zeta,
            m,
            plus: cat_state(zeta, m, Parity::Even)?,
            minus: cat_state(zeta, m, Parity::Odd)?,
            n_plus: cat_normalization(zeta, Parity::Even)?,
            n_minus: cat_normalization(zeta, Parity::Odd)?,
            leakage,
        })
    }

    pub fn state(&self, p: Parity) -> &Ket {
        match p {
            Parity::Even => &self.plus,
            Parity::Odd => &self.minus,
        }
    }
}

/// A cat held by the non-dissipative mode with every other mode in vacuum.
#[derive(Clone, Debug)]
pub struct MultimodeCat {
    pub ket: Ket,
    /// ζ_j = (ζ/√N) e^{−ijφ} for sites j = 1..N.
    pub local_amplitudes: Vec<C64>,
    pub leakage: f64,
    pub warning: bool,
}

/// ζ_j = (ζ/√N) e^{−ijφ}, j = 1..N.
pub fn local_amplitudes(zeta: C64, n: usize, phi: f64) -> Vec<C64> {
    (1..=n)
        .map(|j| zeta / (n as f64).sqrt() * C64::from_polar(1.0, -(j as f64) * phi))
        .collect()
}

/// Lifts a state of the cat mode to the full space, others in vacuum.
pub fn embed_cat_mode_ket(space: &FockSpace, phi_mode: usize, v: &Ket) -> Ket {
    let mut out = Col::zeros(space.total_dim());
    let mut occ = vec![0; space.n_modes()];
    for n in 0..v.nrows() {
        occ[phi_mode] = n;
        out[space.index(&occ)] = v[n];
    }
    out
}

/// ρ_d ⊗ ρ_φ with ρ_d the vacuum of every mode other than `phi_mode`.
pub fn with_vacuum_reservoir(space: &FockSpace, phi_mode: usize, rho_phi: MatRef<'_, C64>) -> Mat<C64> {
    let d = space.total_dim();
    let mut occ = vec![0; space.n_modes()];
    let idx: Vec<usize> = (0..rho_phi.nrows())
        .map(|n| {
            occ[phi_mode] = n;
            space.index(&occ)
        })
        .collect();
    let mut out = Mat::zeros(d, d);
    for (a, &i) in idx.iter().enumerate() {
        for (b, &j) in idx.iter().enumerate() {
            out[(i, j)] = rho_phi[(a, b)];
        }
    }
    out
}

/// (⊗_{k≠φ}|0⟩_k) ⊗ |C±⟩_φ on the model's space.
pub fn multimode_cat(
    zeta: C64,
    n: usize,
    phi: f64,
    space: &FockSpace,
    phi_mode: usize,
    parity: Parity,
) -> Result<MultimodeCat> {
    let m = space.truncations()[phi_mode];
    let cat = cat_state(zeta, m, parity)?;
    let cs = fock::coherent_state(zeta, m)?;
    Ok(MultimodeCat {
        ket: embed_cat_mode_ket(space, phi_mode, &cat),
        local_amplitudes: local_amplitudes(zeta, n, phi),
        leakage: cs.leakage,
        warning: cs.warning,
    })
}

pub fn model_cat(model: &ModelInstance, parity: Parity) -> Result<MultimodeCat> {
    multimode_cat(
        model.zeta,
        model.n,
        momentum(model.n, model.m_phi),
        &model.space,
        model.phi_mode,
        parity,
    )
}

/// Analytic DFS basis (ξ_{++}, ξ_{−−}, ξ_{+−}, ξ_{−+}) with ξ_{ab} = |C_a⟩⟨C_b|.
pub fn dfs_basis(model: &ModelInstance) -> Result<[Mat<C64>; 4]> {
    let p = model_cat(model, Parity::Even)?.ket;
    let m = model_cat(model, Parity::Odd)?.ket;
    Ok([
        linalg::outer(p.as_ref(), p.as_ref()),
        linalg::outer(m.as_ref(), m.as_ref()),
        linalg::outer(p.as_ref(), m.as_ref()),
        linalg::outer(m.as_ref(), p.as_ref()),
    ])
}

/// Residuals of the dark-state conditions.
#[derive(Clone, Copy, Debug)]
pub struct DarkStateReport {
    /// max ‖L ψ‖ over the model's two-photon-free channels: non-local b_k
    /// (k ≠ φ) and, for two-photon models, the site operators Ẑ_j.
    pub jump_residual: f64,
    /// ‖Hψ − εψ‖ with ε = Gζ² for the Kerr array, 0 otherwise.
    pub hamiltonian_residual: f64,
    /// ‖(b_φ² − ζ²)ψ‖: nonzero only because the cat is truncated.
    pub truncation_floor: f64,
    pub tol: f64,
}

impl DarkStateReport {
    pub fn is_dark(&self) -> bool {
        self.jump_residual < self.tol && self.hamiltonian_residual < self.tol
    }
}

/// Default dark-state tolerance.
pub const DARK_TOL: f64 = 1e-6;

pub fn verify_dark_state(model: &ModelInstance, psi: &Ket) -> Result<DarkStateReport> {
    if psi.nrows() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: psi.nrows(),
        });
    }
    let mut jump_residual: f64 = 0.0;
    for j in &model.jumps {
        let counts = matches!(j.label, JumpLabel::NonLocal { .. } | JumpLabel::TwoPhotonSite { .. })
            || (model.kind.is_zeno() && j.label == JumpLabel::ZenoTwoPhoton);
        if counts {
            jump_residual = jump_residual.max(j.op.matvec(psi.as_ref()).norm_l2());
        }
    }
    let eps = model.dark_energy();
    let hpsi = model.hamiltonian.matvec(psi.as_ref());
    let hamiltonian_residual = (0..psi.nrows())
        .map(|i| (hpsi[i] - eps * psi[i]).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let b = fock::mode_annihilation(&model.space, model.phi_mode)?;
    let b2 = b.matmul(&b);
    let z2 = model.zeta * model.zeta;
    let bv = b2.matvec(psi.as_ref());
    let truncation_floor = (0..psi.nrows())
        .map(|i| (bv[i] - z2 * psi[i]).norm_sqr())
        .sum::<f64>()
        .sqrt();
    Ok(DarkStateReport {
        jump_residual,
        hamiltonian_residual,
        truncation_floor,
        tol: DARK_TOL,
    })
}

/// ⟨ψ|ρ|ψ⟩.
pub fn fidelity(rho: MatRef<'_, C64>, psi: &Ket) -> f64 {
    let rv = rho * psi;
    linalg::inner(psi.as_ref(), rv.as_ref()).re
}

/// Tr ρ².
pub fn purity(rho: MatRef<'_, C64>) -> f64 {
    let mut s = C64::new(0.0, 0.0);
    for i in 0..rho.nrows() {
        for j in 0..rho.ncols() {
            s += rho[(i, j)] * rho[(j, i)];
        }
    }
    s.re
}

/// Tr[(A − B)†(A − B)], the squared Hilbert–Schmidt norm.
pub fn hs_distance(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += (a[(i, j)] - b[(i, j)]).norm_sqr();
        }
    }
    s
}

/// exp(iπ Σ n̂) on the full space.
pub fn parity_operator(space: &FockSpace) -> SparseOp {
    let d: Vec<C64> = (0..space.total_dim())
        .map(|i| {
            let n: usize = space.occupations(i).iter().sum();
            cr(if n % 2 == 0 { 1.0 } else { -1.0 })
        })
        .collect();
    SparseOp::diagonal(&d)
}

/// (−1)^{n̂} on a single mode.
pub fn single_mode_parity(m: usize) -> SparseOp {
    let d: Vec<C64> = (0..m).map(|n| cr(if n % 2 == 0 { 1.0 } else { -1.0 })).collect();
    SparseOp::diagonal(&d)
}

/// exp(−2N|ζ_loc|²)/(N|ζ_loc|²).
pub fn noise_bias(local_amplitude_sq: f64, n: usize) -> Result<f64> {
    if !(local_amplitude_sq > 0.0) || n == 0 {
        return Err(Error::InvalidParameter {
            name: "local_amplitude_sq",
            reason: format!("bias needs a positive amplitude and N ≥ 1, got {local_amplitude_sq}, N = {n}"),
        });
    }
    let x = n as f64 * local_amplitude_sq;
    Ok((-2.0 * x).exp() / x)
}

/// Where a set of DFS coefficients came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    ConservedQuantities,
    Evolution,
}

/// ρ = c_{++}ξ_{++} + c_{−−}ξ_{−−} + c_{+−}ξ_{+−} + c_{+−}* ξ_{−+}.
#[derive(Clone, Copy, Debug)]
pub struct DfsCoefficients {
    pub c_pp: f64,
    pub c_mm: f64,
    pub c_pm: C64,
    pub provenance: Provenance,
}

impl DfsCoefficients {
    /// Projects ρ onto the cat pair: c_{ab} = ⟨C_a|ρ|C_b⟩.
    pub fn from_state(rho: MatRef<'_, C64>, plus: &Ket, minus: &Ket, provenance: Provenance) -> Self {
        let rm = rho * minus;
        DfsCoefficients {
            c_pp: fidelity(rho, plus),
            c_mm: fidelity(rho, minus),
            c_pm: linalg::inner(plus.as_ref(), rm.as_ref()),
            provenance,
        }
    }

    /// Smallest eigenvalue of [[c_pp, c_pm], [c_pm*, c_mm]].
    pub fn min_eigenvalue(&self) -> f64 {
        let tr = self.c_pp + self.c_mm;
        let det = self.c_pp * self.c_mm - self.c_pm.norm_sqr();
        0.5 * (tr - (tr * tr - 4.0 * det).max(0.0).sqrt())
    }

    pub fn is_physical(&self, trace_tol: f64) -> bool {
        (self.c_pp + self.c_mm - 1.0).abs() <= trace_tol && self.min_eigenvalue() >= -1e-8
    }
}

impl ModelInstance {
    /// Energy ε of the dark states: Gζ² for the Kerr array, 0 for the
    /// other models.
    pub fn dark_energy(&self) -> C64 {
        match self.kind {
            ModelKind::KerrArray => self.zeta * self.zeta * self.g,
            _ => cr(0.0),
        }
    }
}
