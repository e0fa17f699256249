//! Truncated bosonic Fock spaces: ladder operators, tensor embedding,
//! coherent states, displacements and density-matrix validation.
//!
//! Multi-mode basis states are ordered with the first mode as the slowest
//! varying index, so `embed(op, 0, ..)` is `op ⊗ I ⊗ … ⊗ I`.

use faer::{Col, Mat, MatRef};

use crate::linalg::{self, cr, Ket, SparseOp, C64};
use crate::{Error, Result};

/// Hermiticity tolerance for density matrices (max entry of |ρ − ρ†|).
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Trace and positivity tolerance for density matrices.
pub const TRACE_TOL: f64 = 1e-8;
/// Truncation leakage above which coherent states are flagged.
pub const LEAKAGE_WARN: f64 = 0.01;

/// Identifies a mode of a [`FockSpace`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModeLabel {
    /// Plane-wave mode with quasi-momentum k = 2πm/N.
    Momentum { m: usize, n: usize },
    /// Local resonator j.
    Site(usize),
}

impl ModeLabel {
    /// Quasi-momentum in radians, for momentum modes.
    pub fn momentum(&self) -> Option<f64> {
        match *self {
            ModeLabel::Momentum { m, n } => Some(2.0 * std::f64::consts::PI * m as f64 / n as f64),
            ModeLabel::Site(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FockSpace {
    truncations: Vec<usize>,
    labels: Vec<ModeLabel>,
    total_dim: usize,
}

impl FockSpace {
    pub fn new(truncations: Vec<usize>, labels: Vec<ModeLabel>) -> Result<Self> {
        if truncations.is_empty() {
            return Err(Error::InvalidParameter {
                name: "truncations",
                reason: "at least one mode is required".into(),
            });
        }
        if let Some(&m) = truncations.iter().find(|&&m| m < 2) {
            return Err(Error::InvalidDimension(m));
        }
        if labels.len() != truncations.len() {
            return Err(Error::DimensionMismatch {
                expected: truncations.len(),
                found: labels.len(),
            });
        }
        for (i, a) in labels.iter().enumerate() {
            if labels[..i].contains(a) {
                return Err(Error::InvalidParameter {
                    name: "mode_labels",
                    reason: format!("duplicate label {a:?}"),
                });
            }
        }
        let total_dim = truncations.iter().product();
        Ok(FockSpace {
            truncations,
            labels,
            total_dim,
        })
    }

    /// Space of local sites 0..n.
    pub fn sites(truncations: Vec<usize>) -> Result<Self> {
        let labels = (0..truncations.len()).map(ModeLabel::Site).collect();
        Self::new(truncations, labels)
    }

    pub fn single(m: usize) -> Result<Self> {
        Self::sites(vec![m])
    }

    pub fn truncations(&self) -> &[usize] {
        &self.truncations
    }

    pub fn labels(&self) -> &[ModeLabel] {
        &self.labels
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn n_modes(&self) -> usize {
        self.truncations.len()
    }

    /// Flat basis index of an occupation-number tuple.
    pub fn index(&self, occ: &[usize]) -> usize {
        debug_assert_eq!(occ.len(), self.n_modes());
        occ.iter()
            .zip(&self.truncations)
            .fold(0, |acc, (&n, &m)| acc * m + n)
    }

    /// Occupation-number tuple of a flat basis index.
    pub fn occupations(&self, mut idx: usize) -> Vec<usize> {
        let mut occ = vec![0; self.n_modes()];
        for (o, &m) in occ.iter_mut().zip(&self.truncations).rev() {
            *o = idx % m;
            idx /= m;
        }
        occ
    }

    /// Fock basis state with the given occupations.
    pub fn basis_state(&self, occ: &[usize]) -> Ket {
        let mut v = Col::zeros(self.total_dim);
        v[self.index(occ)] = cr(1.0);
        v
    }

    pub fn vacuum(&self) -> Ket {
        self.basis_state(&vec![0; self.n_modes()])
    }
}

fn check_dim(m: usize) -> Result<()> {
    if m < 2 {
        Err(Error::InvalidDimension(m))
    } else {
        Ok(())
    }
}

/// Single-mode annihilation operator, ⟨n−1|a|n⟩ = √n.
pub fn annihilation(m: usize) -> Result<SparseOp> {
    check_dim(m)?;
    Ok(SparseOp::from_triplets(
        m,
        m,
        (1..m).map(|n| (n - 1, n, cr((n as f64).sqrt()))),
    ))
}

pub fn creation(m: usize) -> Result<SparseOp> {
    Ok(annihilation(m)?.adjoint())
}

pub fn number(m: usize) -> Result<SparseOp> {
    check_dim(m)?;
    Ok(SparseOp::from_triplets(m, m, (1..m).map(|n| (n, n, cr(n as f64)))))
}

/// Fock state |n⟩ on an `m`-level mode.
pub fn fock_state(m: usize, n: usize) -> Result<Ket> {
    check_dim(m)?;
    if n >= m {
        return Err(Error::InvalidParameter {
            name: "n",
            reason: format!("level {n} outside truncation {m}"),
        });
    }
    let mut v = Col::zeros(m);
    v[n] = cr(1.0);
    Ok(v)
}

/// Places a single-mode operator at `mode` in the tensor product.
pub fn embed(op: &SparseOp, mode: usize, space: &FockSpace) -> Result<SparseOp> {
    if mode >= space.n_modes() {
        return Err(Error::InvalidParameter {
            name: "mode_index",
            reason: format!("mode {mode} outside a {}-mode space", space.n_modes()),
        });
    }
    let m = space.truncations()[mode];
    if op.nrows() != m || op.ncols() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: op.nrows(),
        });
    }
    let outer: usize = space.truncations()[..mode].iter().product();
    let inner: usize = space.truncations()[mode + 1..].iter().product();
    let mut trip = Vec::with_capacity(outer * inner * op.nnz());
    for o in 0..outer {
        for (i, j, v) in op.entries() {
            for r in 0..inner {
                trip.push(((o * m + i) * inner + r, (o * m + j) * inner + r, v));
            }
        }
    }
    Ok(SparseOp::from_triplets(space.total_dim(), space.total_dim(), trip))
}

/// Annihilation operator of `mode` on the full space.
pub fn mode_annihilation(space: &FockSpace, mode: usize) -> Result<SparseOp> {
    embed(&annihilation(space.truncations()[mode])?, mode, space)
}

/// Truncated, renormalized coherent state with its leakage diagnostic.
#[derive(Clone, Debug)]
pub struct CoherentState {
    pub ket: Ket,
    /// Probability weight of the untruncated state above level M−1.
    pub leakage: f64,
    /// Set when `leakage` exceeds [`LEAKAGE_WARN`].
    pub warning: bool,
}

/// Unnormalized Poisson amplitudes e^{−|ζ|²/2} ζⁿ/√(n!) for n < m.
pub fn coherent_amplitudes(zeta: C64, m: usize) -> Vec<C64> {
    let mut c = Vec::with_capacity(m);
    let mut cur = cr((-0.5 * zeta.norm_sqr()).exp());
    for n in 0..m {
        c.push(cur);
        cur = cur * zeta / ((n + 1) as f64).sqrt();
    }
    c
}

/// Poisson tail Σ_{n≥m} e^{−x} xⁿ/n! for mean x, summed directly so small
/// tails keep their relative accuracy.
pub fn coherent_leakage(x: f64, m: usize) -> f64 {
    let head: f64 = {
        let mut t = (-x).exp();
        let mut s = 0.0;
        for n in 0..m {
            s += t;
            t *= x / (n + 1) as f64;
        }
        s
    };
    if head < 0.5 {
        return (1.0 - head).max(0.0);
    }
    // Term n = m, computed in log space to avoid overflow.
    let ln_fact: f64 = (1..=m).map(|k| (k as f64).ln()).sum();
    let mut t = if x > 0.0 { (-x + m as f64 * x.ln() - ln_fact).exp() } else { 0.0 };
    let mut s = 0.0;
    let mut n = m;
    while t > s * 1e-17 && t > 0.0 {
        s += t;
        n += 1;
        t *= x / n as f64;
    }
    s
}

pub fn coherent_state(zeta: C64, m: usize) -> Result<CoherentState> {
    check_dim(m)?;
    let amps = coherent_amplitudes(zeta, m);
    let kept: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    let leakage = coherent_leakage(zeta.norm_sqr(), m);
    let warning = leakage > LEAKAGE_WARN;
    if warning {
        log::warn!("coherent state |{zeta}> loses {leakage:.3e} of its weight at truncation {m}");
    }
    let s = kept.sqrt();
    let ket = Col::from_fn(m, |n| amps[n] / s);
    Ok(CoherentState {
        ket,
        leakage,
        warning,
    })
}

/// Mode-wise product of kets, first factor slowest.
pub fn tensor_kets(kets: &[&Ket]) -> Ket {
    let mut out = Col::from_fn(1, |_| cr(1.0));
    for k in kets {
        let (a, b) = (out.nrows(), k.nrows());
        out = Col::from_fn(a * b, |i| out[i / b] * k[i % b]);
    }
    out
}

/// exp(ζa† − ζ*a) on an `m`-level mode.
pub fn displacement(zeta: C64, m: usize) -> Result<Mat<C64>> {
    let a = annihilation(m)?.to_dense();
    let gen = Mat::from_fn(m, m, |i, j| zeta * a[(j, i)].conj() - zeta.conj() * a[(i, j)]);
    let d = linalg::expm(gen.as_ref());
    let dev = linalg::max_abs_diff(
        (linalg::adjoint(d.as_ref()) * &d).as_ref(),
        linalg::identity(m).as_ref(),
    );
    if dev > 1e-8 {
        log::debug!("truncated displacement D({zeta}) deviates from unitarity by {dev:.3e}");
    }
    Ok(d)
}

/// Validity diagnostics for a candidate density matrix.
#[derive(Clone, Copy, Debug)]
pub struct DensityReport {
    pub hermiticity_error: f64,
    pub trace: C64,
    pub min_eigenvalue: f64,
}

impl DensityReport {
    pub fn is_valid(&self) -> bool {
        self.hermiticity_error <= HERMITIAN_TOL
            && (self.trace - cr(1.0)).norm() <= TRACE_TOL
            && self.min_eigenvalue >= -TRACE_TOL
    }
}

pub fn density_report(m: MatRef<'_, C64>) -> Result<DensityReport> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    let hermiticity_error = linalg::hermiticity_error(m);
    let herm = Mat::from_fn(m.nrows(), m.ncols(), |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5);
    let ev = linalg::hermitian_eigenvalues(herm.as_ref())?;
    Ok(DensityReport {
        hermiticity_error,
        trace: linalg::trace(m),
        min_eigenvalue: ev.first().copied().unwrap_or(0.0),
    })
}

/// A validated density matrix.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    matrix: Mat<C64>,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(matrix: Mat<C64>) -> Result<Self> {
        let r = density_report(matrix.as_ref())?;
        if !r.is_valid() {
            return Err(Error::InvalidState(format!(
                "hermiticity error {:.3e}, trace {}, min eigenvalue {:.3e}",
                r.hermiticity_error, r.trace, r.min_eigenvalue
            )));
        }
        Ok(DensityMatrix { matrix })
    }

    /// |ψ⟩⟨ψ| for a ket normalized here.
    pub fn pure(psi: &Ket) -> Self {
        let nrm = psi.norm_l2();
        let v = Col::from_fn(psi.nrows(), |i| psi[i] / nrm);
        DensityMatrix {
            matrix: linalg::outer(v.as_ref(), v.as_ref()),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> MatRef<'_, C64> {
        self.matrix.as_ref()
    }

    pub fn into_matrix(self) -> Mat<C64> {
        self.matrix
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, commutator, max_abs_diff};
    use proptest::prelude::*;

    #[test]
    fn annihilation_m3_entries() {
        let a = annihilation(3).unwrap().to_dense();
        let s2 = 2f64.sqrt();
        let want = [[0.0, 1.0, 0.0], [0.0, 0.0, s2], [0.0, 0.0, 0.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(a[(i, j)], cr(want[i][j]));
            }
        }
        assert!(matches!(annihilation(1), Err(Error::InvalidDimension(1))));
    }

    #[test]
    fn annihilation_lowers_fock_two() {
        let a = annihilation(5).unwrap();
        let v = a.matvec(fock_state(5, 2).unwrap().as_ref());
        for n in 0..5 {
            let want = if n == 1 { 2f64.sqrt() } else { 0.0 };
            assert!((v[n] - cr(want)).norm() < 1e-15);
        }
    }

    #[test]
    fn embed_number_operator_mode_major() {
        let space = FockSpace::sites(vec![2, 2]).unwrap();
        let n = embed(&number(2).unwrap(), 0, &space).unwrap().to_dense();
        let diag: Vec<f64> = (0..4).map(|i| n[(i, i)].re).collect();
        assert_eq!(diag, vec![0.0, 0.0, 1.0, 1.0]);
        let id = embed(&SparseOp::identity(2), 1, &space).unwrap().to_dense();
        assert_eq!(max_abs_diff(id.as_ref(), linalg::identity(4).as_ref()), 0.0);
    }

    #[test]
    fn embedded_distinct_modes_commute() {
        let space = FockSpace::sites(vec![3, 4]).unwrap();
        let a0 = mode_annihilation(&space, 0).unwrap().to_dense();
        let a1d = mode_annihilation(&space, 1).unwrap().adjoint().to_dense();
        assert!(commutator(a0.as_ref(), a1d.as_ref()).norm_max() < 1e-14);
    }

    #[test]
    fn embed_rejects_wrong_dimension() {
        let space = FockSpace::sites(vec![3, 4]).unwrap();
        assert!(embed(&annihilation(4).unwrap(), 0, &space).is_err());
    }

    #[test]
    fn space_rejects_duplicates_and_small_modes() {
        assert!(FockSpace::new(vec![3, 3], vec![ModeLabel::Site(0), ModeLabel::Site(0)]).is_err());
        assert!(FockSpace::sites(vec![3, 1]).is_err());
        let s = FockSpace::sites(vec![3, 4, 2]).unwrap();
        assert_eq!(s.total_dim(), 24);
        for i in 0..24 {
            assert_eq!(s.index(&s.occupations(i)), i);
        }
    }

    #[test]
    fn coherent_vacuum_and_overlap() {
        let v = coherent_state(cr(0.0), 4).unwrap();
        assert!((v.ket[0] - cr(1.0)).norm() < 1e-15);
        let p = coherent_state(cr(1.0), 20).unwrap();
        let m = coherent_state(cr(-1.0), 20).unwrap();
        // Series oracle: Σ (−1)ⁿ e^{−1}/n!.
        let mut series = 0.0;
        let mut fact = 1.0;
        for n in 0..40 {
            if n > 0 {
                fact *= n as f64;
            }
            series += (-1f64).powi(n) * (-1f64).exp() / fact;
        }
        let ov = linalg::inner(p.ket.as_ref(), m.ket.as_ref());
        assert!((ov.re - series).abs() < 1e-6);
        assert!((ov.re - 0.135335).abs() < 1e-6);
    }

    #[test]
    fn coherent_mean_photon_number() {
        let z = c(0.0, 3f64.sqrt());
        let s = coherent_state(z, 18).unwrap();
        let mean: f64 = (0..18).map(|n| n as f64 * s.ket[n].norm_sqr()).sum();
        assert!((mean - 3.0).abs() < 1e-3);
        assert!(!s.warning);
        assert!(coherent_state(cr(3.0), 8).unwrap().warning);
    }

    #[test]
    fn displacement_identities() {
        let m = 24;
        let d0 = displacement(cr(0.0), m).unwrap();
        assert!(max_abs_diff(d0.as_ref(), linalg::identity(m).as_ref()) < 1e-14);
        let z = c(0.9, -1.2);
        let d = displacement(z, m).unwrap();
        let dm = displacement(-z, m).unwrap();
        assert!(max_abs_diff((&d * &dm).as_ref(), linalg::identity(m).as_ref()) < 1e-8);
    }

    #[test]
    fn density_matrix_validation() {
        let psi = fock_state(3, 1).unwrap();
        let rho = DensityMatrix::pure(&psi);
        assert!(DensityMatrix::new(rho.matrix().to_owned()).is_ok());
        let mut bad = rho.into_matrix();
        bad[(0, 0)] = cr(-0.1);
        assert!(DensityMatrix::new(bad).is_err());
    }

    proptest! {
        #[test]
        fn ccr_holds_except_top_corner(m in 2usize..30) {
            let a = annihilation(m).unwrap().to_dense();
            let ad = linalg::adjoint(a.as_ref());
            let com = commutator(a.as_ref(), ad.as_ref());
            for i in 0..m {
                for j in 0..m {
                    let want = if i != j { 0.0 } else if i == m - 1 { 1.0 - m as f64 } else { 1.0 };
                    prop_assert!((com[(i, j)] - cr(want)).norm() < 1e-12);
                }
            }
        }

        #[test]
        fn embed_preserves_spectrum(m0 in 2usize..4, m1 in 2usize..4, m2 in 2usize..4, mode in 0usize..3) {
            let space = FockSpace::sites(vec![m0, m1, m2]).unwrap();
            let m = space.truncations()[mode];
            // Hermitian single-mode operator x = a + a†.
            let a = annihilation(m).unwrap();
            let x = a.add(&a.adjoint());
            let mut single = linalg::hermitian_eigenvalues(x.to_dense().as_ref()).unwrap();
            let full = linalg::hermitian_eigenvalues(embed(&x, mode, &space).unwrap().to_dense().as_ref()).unwrap();
            let mult = space.total_dim() / m;
            let mut want: Vec<f64> = single.drain(..).flat_map(|e| std::iter::repeat(e).take(mult)).collect();
            want.sort_by(f64::total_cmp);
            for (a, b) in want.iter().zip(&full) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }

        #[test]
        fn coherent_eigenrelation(re in -2.0f64..2.0, im in -2.0f64..2.0, m in 4usize..30) {
            let z = c(re, im);
            let s = coherent_state(z, m).unwrap();
            let a = annihilation(m).unwrap();
            let av = a.matvec(s.ket.as_ref());
            let r: f64 = (0..m).map(|n| (av[n] - z * s.ket[n]).norm_sqr()).sum::<f64>().sqrt();
            prop_assert!(r < 10.0 * s.leakage.sqrt() + 1e-8);
        }

        #[test]
        fn displacement_of_vacuum_is_coherent(re in -1.0f64..1.0, im in -1.0f64..1.0) {
            let m = 30;
            let z = c(re, im);
            prop_assume!(z.norm_sqr() <= m as f64 / 4.0);
            let d = displacement(z, m).unwrap();
            let s = coherent_state(z, m).unwrap();
            for n in 0..m {
                prop_assert!((d[(n, 0)] - s.ket[n]).norm() < 1e-6);
            }
        }
    }
}
