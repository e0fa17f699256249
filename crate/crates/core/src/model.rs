//! The Kerr-array and two-photon-loss array models in the plane-wave basis,
//! and their single-mode Zeno reductions.
//!
//! Quasi-momenta are k = 2πm/N with integer m = 1..N; mode m sits at tensor
//! position m − 1. Sites are numbered j = 1..N with periodic boundaries and
//! a_j = (1/√N) Σ_k e^{−ijk} b_k.

use std::f64::consts::PI;

use crate::fock::{self, FockSpace, ModeLabel};
use crate::linalg::{c, cr, SparseOp, C64};
use crate::{Error, Result};

/// Jump channels with rate below this fraction of the largest rate are dropped.
pub const ZERO_RATE_REL: f64 = 1e-14;

/// Which of the four supported models an instance realizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    KerrArray,
    TwoPhotonArray,
    KerrZeno,
    TwoPhotonZeno,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::KerrArray => "kerr-array",
            ModelKind::TwoPhotonArray => "twophoton-array",
            ModelKind::KerrZeno => "kerr-zeno",
            ModelKind::TwoPhotonZeno => "twophoton-zeno",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "kerr-array" => Some(ModelKind::KerrArray),
            "twophoton-array" => Some(ModelKind::TwoPhotonArray),
            "kerr-zeno" => Some(ModelKind::KerrZeno),
            "twophoton-zeno" => Some(ModelKind::TwoPhotonZeno),
            _ => None,
        }
    }

    pub fn is_kerr(&self) -> bool {
        matches!(self, ModelKind::KerrArray | ModelKind::KerrZeno)
    }

    pub fn is_zeno(&self) -> bool {
        matches!(self, ModelKind::KerrZeno | ModelKind::TwoPhotonZeno)
    }
}

/// Parameters of the Kerr array with two-photon drive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KerrArrayParams {
    pub n: usize,
    pub u: f64,
    pub g: f64,
    /// Non-dissipative quasi-momentum in radians, one of 2πm/N.
    pub phi: f64,
    pub gamma: f64,
    pub kappa: f64,
}

/// Parameters of the array with local two-photon driven dissipation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoPhotonArrayParams {
    pub n: usize,
    pub eta: f64,
    pub g: f64,
    pub phi: f64,
    pub gamma: f64,
    pub kappa: f64,
}

/// Momentum index m ∈ 1..=N with 2πm/N = φ (mod 2π).
pub fn phi_index(n: usize, phi: f64) -> Result<usize> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "N",
            reason: "at least one resonator is required".into(),
        });
    }
    let x = phi * n as f64 / (2.0 * PI);
    let r = x.round();
    if (x - r).abs() * 2.0 * PI / n as f64 > 1e-12 {
        return Err(Error::InvalidParameter {
            name: "phi",
            reason: format!("{phi} is not a lattice momentum 2πm/{n}"),
        });
    }
    let m = (r as i64).rem_euclid(n as i64) as usize;
    Ok(if m == 0 { n } else { m })
}

/// Lattice momentum 2πm/N for m ∈ 1..=N.
pub fn momentum(n: usize, m: usize) -> f64 {
    2.0 * PI * m as f64 / n as f64
}

fn check_rates(gamma: f64, kappa: f64) -> Result<()> {
    if !(gamma >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "gamma",
            reason: format!("must be ≥ 0, got {gamma}"),
        });
    }
    if !(kappa >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "kappa",
            reason: format!("must be ≥ 0, got {kappa}"),
        });
    }
    Ok(())
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be > 0, got {v}"),
        })
    }
}

impl KerrArrayParams {
    pub fn validate(&self) -> Result<()> {
        phi_index(self.n, self.phi)?;
        positive("U", self.u)?;
        positive("G", self.g)?;
        check_rates(self.gamma, self.kappa)
    }

    pub fn phi_index(&self) -> usize {
        phi_index(self.n, self.phi).expect("validated")
    }

    /// ζ = i√(NG/U).
    pub fn zeta(&self) -> C64 {
        c(0.0, (self.n as f64 * self.g / self.u).sqrt())
    }
}

impl TwoPhotonArrayParams {
    pub fn validate(&self) -> Result<()> {
        phi_index(self.n, self.phi)?;
        positive("eta", self.eta)?;
        positive("G", self.g)?;
        check_rates(self.gamma, self.kappa)
    }

    pub fn phi_index(&self) -> usize {
        phi_index(self.n, self.phi).expect("validated")
    }

    /// ζ̃ = √(−iNG/η), principal branch.
    pub fn zeta(&self) -> C64 {
        c(0.0, -(self.n as f64) * self.g / self.eta).sqrt()
    }
}

/// γ_k = 2γ(1 − cos(k − φ)).
pub fn gamma_k(gamma: f64, k: f64, phi: f64) -> f64 {
    2.0 * gamma * (1.0 - (k - phi).cos())
}

/// γ_k on the lattice, exactly zero at m = m_φ.
fn gamma_m(gamma: f64, n: usize, m: usize, m_phi: usize) -> f64 {
    if m % n == m_phi % n {
        0.0
    } else {
        gamma_k(gamma, momentum(n, m), momentum(n, m_phi))
    }
}

/// Per-mode truncations: `m_phi` for the cat-bearing mode, `m_d` for the rest.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Truncations {
    pub m_phi: usize,
    pub m_d: usize,
}

impl Truncations {
    /// Cat-mode truncation used for the array models at drive G/U (or G/η).
    pub fn for_drive(g_over_u: f64) -> Self {
        let m_phi = if g_over_u <= 0.5 + 1e-12 {
            12
        } else if g_over_u <= 0.75 + 1e-12 {
            16
        } else {
            18
        };
        Truncations { m_phi, m_d: 3 }
    }
}

/// Momentum-basis Fock space of an N-mode array.
pub fn momentum_space(n: usize, m_phi_index: usize, trunc: Truncations) -> Result<FockSpace> {
    let truncations = (1..=n)
        .map(|m| if m == m_phi_index { trunc.m_phi } else { trunc.m_d })
        .collect();
    let labels = (1..=n).map(|m| ModeLabel::Momentum { m, n }).collect();
    FockSpace::new(truncations, labels)
}

/// Origin of a jump channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JumpLabel {
    /// Non-local dissipation of normal mode m at rate γ_k.
    NonLocal { m: usize },
    /// Intrinsic single-photon loss of normal mode m at rate κ.
    Loss { m: usize },
    /// Local two-photon dissipation of site j.
    TwoPhotonSite { j: usize },
    /// Effective two-photon channel of the Zeno reductions.
    ZenoTwoPhoton,
}

#[derive(Clone, Debug)]
pub struct Jump {
    pub op: SparseOp,
    pub rate: f64,
    pub label: JumpLabel,
}

/// An assembled model: Hilbert space, Hamiltonian and jump channels.
#[derive(Clone, Debug)]
pub struct ModelInstance {
    pub kind: ModelKind,
    pub space: FockSpace,
    pub hamiltonian: SparseOp,
    pub jumps: Vec<Jump>,
    /// Cat amplitude ζ (Kerr) or ζ̃ (two-photon) of the non-dissipative mode.
    pub zeta: C64,
    pub n: usize,
    /// Momentum index of the cat-bearing mode.
    pub m_phi: usize,
    /// Tensor position of the cat-bearing mode.
    pub phi_mode: usize,
    /// Energy scale used for reporting (U or η).
    pub unit: f64,
    /// Two-photon drive G.
    pub g: f64,
}

impl ModelInstance {
    pub fn dim(&self) -> usize {
        self.space.total_dim()
    }

    pub fn phi(&self) -> f64 {
        momentum(self.n, self.m_phi)
    }

    pub fn jump_ops(&self) -> Vec<(SparseOp, f64)> {
        self.jumps.iter().map(|j| (j.op.clone(), j.rate)).collect()
    }
}

fn drop_zero_rates(mut jumps: Vec<Jump>) -> Vec<Jump> {
    let max = jumps.iter().map(|j| j.rate).fold(0.0, f64::max);
    jumps.retain(|j| j.rate > ZERO_RATE_REL * max && j.rate > 0.0);
    jumps
}

struct Ladder {
    n: usize,
    b: Vec<SparseOp>,
}

impl Ladder {
    fn new(space: &FockSpace, n: usize) -> Result<Self> {
        let b = (0..n)
            .map(|p| fock::mode_annihilation(space, p))
            .collect::<Result<_>>()?;
        Ok(Ladder { n, b })
    }

    /// b_k for momentum index m (taken mod N).
    fn b(&self, m: usize) -> &SparseOp {
        let p = (m + self.n - 1) % self.n;
        &self.b[p]
    }

    /// Q_K = Σ_{k3 + k4 ≡ K} b_{k3} b_{k4} over ordered pairs.
    fn pair(&self, total: usize) -> SparseOp {
        let dim = self.b[0].nrows();
        let mut q = SparseOp::zeros(dim, dim);
        for m3 in 1..=self.n {
            let m4 = (total + self.n * 2 - m3) % self.n;
            q = q.add(&self.b(m3).matmul(self.b(m4)));
        }
        q
    }
}

/// Ĥ = (U/N) Σ δ_{k1+k2,k3+k4} b†b†bb + G Σ_k (b†_k b†_{θ−k} + h.c.), θ = 2φ.
pub fn build_kerr_hamiltonian(p: &KerrArrayParams, trunc: Truncations) -> Result<(FockSpace, SparseOp)> {
    p.validate()?;
    let m_phi = p.phi_index();
    let space = momentum_space(p.n, m_phi, trunc)?;
    let h = kerr_hamiltonian_on(&space, p)?;
    Ok((space, h))
}

fn kerr_hamiltonian_on(space: &FockSpace, p: &KerrArrayParams) -> Result<SparseOp> {
    let n = p.n;
    let lad = Ladder::new(space, n)?;
    let dim = space.total_dim();
    let mut h = SparseOp::zeros(dim, dim);
    for total in 0..n {
        let q = lad.pair(total);
        h = h.add(&q.adjoint().matmul(&q).scale(cr(p.u / n as f64)));
    }
    let theta = (2 * p.phi_index()) % n;
    let q = lad.pair(theta);
    h = h.add(&q.add(&q.adjoint()).scale(cr(p.g)));
    Ok(h)
}

/// Non-local and intrinsic-loss channels shared by both array models.
fn momentum_channels(lad: &Ladder, n: usize, m_phi: usize, gamma: f64, kappa: f64) -> Vec<Jump> {
    let mut jumps = Vec::new();
    for m in 1..=n {
        let rate = gamma_m(gamma, n, m, m_phi);
        if m != m_phi && rate > 0.0 {
            jumps.push(Jump {
                op: lad.b(m).clone(),
                rate,
                label: JumpLabel::NonLocal { m },
            });
        }
    }
    if kappa > 0.0 {
        for m in 1..=n {
            jumps.push(Jump {
                op: lad.b(m).clone(),
                rate: kappa,
                label: JumpLabel::Loss { m },
            });
        }
    }
    jumps
}

/// Full Kerr-array model.
pub fn kerr_array(p: &KerrArrayParams, trunc: Truncations) -> Result<ModelInstance> {
    let (space, h) = build_kerr_hamiltonian(p, trunc)?;
    let lad = Ladder::new(&space, p.n)?;
    let m_phi = p.phi_index();
    let jumps = drop_zero_rates(momentum_channels(&lad, p.n, m_phi, p.gamma, p.kappa));
    Ok(ModelInstance {
        kind: ModelKind::KerrArray,
        space,
        hamiltonian: h,
        jumps,
        zeta: p.zeta(),
        n: p.n,
        m_phi,
        phi_mode: m_phi - 1,
        unit: p.u,
        g: p.g,
    })
}

/// Jump channels of the Kerr array, without building the Hamiltonian.
pub fn build_jumps_kerr(p: &KerrArrayParams, trunc: Truncations) -> Result<Vec<Jump>> {
    p.validate()?;
    let m_phi = p.phi_index();
    let space = momentum_space(p.n, m_phi, trunc)?;
    let lad = Ladder::new(&space, p.n)?;
    Ok(drop_zero_rates(momentum_channels(&lad, p.n, m_phi, p.gamma, p.kappa)))
}

/// Site operator â_j² in the momentum basis.
fn site_pair(lad: &Ladder, j: usize) -> SparseOp {
    let n = lad.n;
    let dim = lad.b[0].nrows();
    let mut out = SparseOp::zeros(dim, dim);
    for m1 in 1..=n {
        for m2 in 1..=n {
            let ph = -(j as f64) * (momentum(n, m1) + momentum(n, m2));
            let w = C64::from_polar(1.0 / n as f64, ph);
            out = out.add(&lad.b(m1).matmul(lad.b(m2)).scale(w));
        }
    }
    out
}

/// Full two-photon-loss array model: Ĥ = 0, local channels
/// Ẑ_j = â_j² − e^{−2ijφ} ζ̃²/N at rate 2η plus the momentum channels.
pub fn twophoton_array(p: &TwoPhotonArrayParams, trunc: Truncations) -> Result<ModelInstance> {
    p.validate()?;
    let n = p.n;
    let m_phi = p.phi_index();
    let space = momentum_space(n, m_phi, trunc)?;
    let lad = Ladder::new(&space, n)?;
    let dim = space.total_dim();
    let zt2 = p.zeta() * p.zeta();
    let phi = momentum(n, m_phi);
    let mut jumps = momentum_channels(&lad, n, m_phi, p.gamma, p.kappa);
    for j in 1..=n {
        let shift = C64::from_polar(1.0, -2.0 * j as f64 * phi) * zt2 / n as f64;
        let z = site_pair(&lad, j).sub(&SparseOp::identity(dim).scale(shift));
        jumps.push(Jump {
            op: z,
            rate: 2.0 * p.eta,
            label: JumpLabel::TwoPhotonSite { j },
        });
    }
    Ok(ModelInstance {
        kind: ModelKind::TwoPhotonArray,
        space,
        hamiltonian: SparseOp::zeros(dim, dim),
        jumps: drop_zero_rates(jumps),
        zeta: p.zeta(),
        n,
        m_phi,
        phi_mode: m_phi - 1,
        unit: p.eta,
        g: p.g,
    })
}

/// Γ = 4(U²/N²) Σ_{k≠φ} 1/γ_k.
pub fn zeno_rate(p: &KerrArrayParams) -> Result<f64> {
    p.validate()?;
    if p.gamma <= 0.0 {
        return Err(Error::ZenoAssumption(
            "the Zeno limit needs γ > 0; Γ contains 1/γ_k".into(),
        ));
    }
    let m_phi = p.phi_index();
    let mut s = 0.0;
    for m in (1..=p.n).filter(|&m| m != m_phi) {
        let g = gamma_m(p.gamma, p.n, m, m_phi);
        if g <= 0.0 {
            return Err(Error::ZenoAssumption(format!(
                "γ_k vanishes for mode m = {m}, which is not the cat mode"
            )));
        }
        s += 1.0 / g;
    }
    Ok(4.0 * p.u * p.u / (p.n * p.n) as f64 * s)
}

fn single_mode(m_phi_index: usize, n: usize, m: usize) -> Result<FockSpace> {
    FockSpace::new(vec![m], vec![ModeLabel::Momentum { m: m_phi_index, n }])
}

/// b² − ζ² on a single mode of dimension `m`.
pub fn two_photon_jump(zeta: C64, m: usize) -> Result<SparseOp> {
    let a = fock::annihilation(m)?;
    Ok(a.matmul(&a).sub(&SparseOp::identity(m).scale(zeta * zeta)))
}

/// Kerr Zeno model: H_φ = (U/N)(b†² − ζ*²)(b² − ζ²), jump b² − ζ² at rate
/// Γ, plus κ D[b] when κ > 0.
pub fn effective_zeno_kerr(p: &KerrArrayParams, m_phi: usize) -> Result<ModelInstance> {
    let gamma_eff = zeno_rate(p)?;
    let mi = p.phi_index();
    let space = single_mode(mi, p.n, m_phi)?;
    let zeta = p.zeta();
    let x = two_photon_jump(zeta, m_phi)?;
    let h = x.adjoint().matmul(&x).scale(cr(p.u / p.n as f64));
    let mut jumps = vec![Jump {
        op: x,
        rate: gamma_eff,
        label: JumpLabel::ZenoTwoPhoton,
    }];
    if p.kappa > 0.0 {
        jumps.push(Jump {
            op: fock::annihilation(m_phi)?,
            rate: p.kappa,
            label: JumpLabel::Loss { m: mi },
        });
    }
    Ok(ModelInstance {
        kind: ModelKind::KerrZeno,
        space,
        hamiltonian: h,
        jumps,
        zeta,
        n: p.n,
        m_phi: mi,
        phi_mode: 0,
        unit: p.u,
        g: p.g,
    })
}

/// Two-photon Zeno model: (2η/N) D[b² − ζ̃²], plus κ D[b] when κ > 0.
pub fn effective_zeno_twophoton(p: &TwoPhotonArrayParams, m_phi: usize) -> Result<ModelInstance> {
    p.validate()?;
    let mi = p.phi_index();
    let space = single_mode(mi, p.n, m_phi)?;
    let zeta = p.zeta();
    let mut jumps = vec![Jump {
        op: two_photon_jump(zeta, m_phi)?,
        rate: 2.0 * p.eta / p.n as f64,
        label: JumpLabel::ZenoTwoPhoton,
    }];
    if p.kappa > 0.0 {
        jumps.push(Jump {
            op: fock::annihilation(m_phi)?,
            rate: p.kappa,
            label: JumpLabel::Loss { m: mi },
        });
    }
    Ok(ModelInstance {
        kind: ModelKind::TwoPhotonZeno,
        space,
        hamiltonian: SparseOp::zeros(m_phi, m_phi),
        jumps,
        zeta,
        n: p.n,
        m_phi: mi,
        phi_mode: 0,
        unit: p.eta,
        g: p.g,
    })
}

/// Σ_k (k − φ) n_k mod 2π as an integer multiple of 2π/N, per basis state.
pub fn shifted_momentum(space: &FockSpace, n: usize, m_phi: usize) -> Vec<usize> {
    (0..space.total_dim())
        .map(|i| {
            let occ = space.occupations(i);
            occ.iter()
                .enumerate()
                .map(|(p, &k)| k * ((p + 1 + n - m_phi) % n))
                .sum::<usize>()
                % n
        })
        .collect()
}
