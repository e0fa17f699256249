//! Liouvillians and adjoint Liouvillians on column-stacked density matrices.
//!
//! With vec index i + D·j for entry (i, j), vec(AρB) = (Bᵀ ⊗ A) vec(ρ).
//! Rates are folded into the jump operators as √γ·L at assembly.

use faer::{Col, ColRef, Mat, MatRef};

use crate::linalg::{c, SparseOp, C64};
use crate::model::ModelInstance;
use crate::{Error, Result};

/// Flattening convention carried by every superoperator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Vectorization {
    ColumnStacking,
}

pub fn vectorize(rho: MatRef<'_, C64>) -> Col<C64> {
    let d = rho.nrows();
    Col::from_fn(d * rho.ncols(), |p| rho[(p % d, p / d)])
}

pub fn devectorize(v: ColRef<'_, C64>) -> Result<Mat<C64>> {
    let n = v.nrows();
    let d = (n as f64).sqrt().round() as usize;
    if d * d != n {
        return Err(Error::NotSquare(n));
    }
    Ok(Mat::from_fn(d, d, |i, j| v[i + d * j]))
}

/// Operator-level form of a Lindbladian: H_eff = H − (i/2) Σ L'†L' with
/// L' = √γ L. Sufficient to apply the generator or its adjoint without the
/// D² × D² matrix.
#[derive(Clone, Debug)]
pub struct MatrixFree {
    dim: usize,
    heff: SparseOp,
    heff_adj: SparseOp,
    jumps: Vec<(SparseOp, SparseOp)>,
    adjoint: bool,
}

impl MatrixFree {
    pub fn new(h: &SparseOp, jumps: &[(SparseOp, f64)], adjoint: bool) -> Result<Self> {
        let dim = h.nrows();
        if h.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: h.ncols(),
            });
        }
        let mut heff = h.clone();
        let mut scaled = Vec::with_capacity(jumps.len());
        for (l, rate) in jumps {
            if *rate < 0.0 || rate.is_nan() {
                return Err(Error::NegativeRate(*rate));
            }
            if l.nrows() != dim || l.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: l.nrows(),
                });
            }
            let ls = l.scale(c(rate.sqrt(), 0.0));
            let lsa = ls.adjoint();
            heff = heff.add(&lsa.matmul(&ls).scale(c(0.0, -0.5)));
            scaled.push((ls, lsa));
        }
        let heff_adj = heff.adjoint();
        Ok(MatrixFree {
            dim,
            heff,
            heff_adj,
            jumps: scaled,
            adjoint,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// L(ρ) = −i(H_eff ρ − ρ H_eff†) + Σ L'ρL'†, or for the adjoint
    /// L†(J) = i(H_eff† J − J H_eff) + Σ L'†JL'.
    pub fn apply(&self, rho: MatRef<'_, C64>) -> Mat<C64> {
        let mi = c(0.0, -1.0);
        let (left, right) = if self.adjoint {
            (&self.heff_adj, &self.heff)
        } else {
            (&self.heff, &self.heff_adj)
        };
        let s = if self.adjoint { -mi } else { mi };
        let a = left.mul_dense(rho);
        let b = right.dense_mul(rho);
        let mut out = Mat::from_fn(self.dim, self.dim, |i, j| s * (a[(i, j)] - b[(i, j)]));
        for (l, la) in &self.jumps {
            let t = if self.adjoint {
                l.dense_mul(la.mul_dense(rho).as_ref())
            } else {
                la.dense_mul(l.mul_dense(rho).as_ref())
            };
            out += &t;
        }
        out
    }
}

/// A materialized Liouvillian (or adjoint) with its matrix-free twin.
#[derive(Clone, Debug)]
pub struct Superoperator {
    dim: usize,
    matrix: SparseOp,
    free: MatrixFree,
    convention: Vectorization,
}

fn assemble(free: &MatrixFree) -> SparseOp {
    let d = free.dim;
    let mut trip: Vec<(usize, usize, C64)> = Vec::new();
    let i_unit = c(0.0, 1.0);
    if !free.adjoint {
        // −i H_eff ρ: (Iᵀ ⊗ H_eff)
        for (i, k, v) in free.heff.entries() {
            for j in 0..d {
                trip.push((i + d * j, k + d * j, -i_unit * v));
            }
        }
        // +i ρ H_eff†: ((H_eff†)ᵀ ⊗ I), entry B[l, j] = conj(H_eff[j, l])
        for (j, l, v) in free.heff.entries() {
            for i in 0..d {
                trip.push((i + d * j, i + d * l, i_unit * v.conj()));
            }
        }
        // L' ρ L'†: entry L'[i,k]·conj(L'[j,l])
        for (l, _) in &free.jumps {
            for (i, k, a) in l.entries() {
                for (j, ll, b) in l.entries() {
                    trip.push((i + d * j, k + d * ll, a * b.conj()));
                }
            }
        }
    } else {
        // +i H_eff† J: entry conj(H_eff[k, i])
        for (k, i, v) in free.heff.entries() {
            for j in 0..d {
                trip.push((i + d * j, k + d * j, i_unit * v.conj()));
            }
        }
        // −i J H_eff: B = H_eff, entry B[l, j] = H_eff[l, j]
        for (l, j, v) in free.heff.entries() {
            for i in 0..d {
                trip.push((i + d * j, i + d * l, -i_unit * v));
            }
        }
        // L'† J L': entry conj(L'[k,i])·L'[l,j]
        for (l, _) in &free.jumps {
            for (k, i, a) in l.entries() {
                for (ll, j, b) in l.entries() {
                    trip.push((i + d * j, k + d * ll, a.conj() * b));
                }
            }
        }
    }
    SparseOp::from_triplets(d * d, d * d, trip)
}

impl Superoperator {
    fn build(h: &SparseOp, jumps: &[(SparseOp, f64)], adjoint: bool) -> Result<Self> {
        let free = MatrixFree::new(h, jumps, adjoint)?;
        let matrix = assemble(&free);
        Ok(Superoperator {
            dim: free.dim,
            matrix,
            free,
            convention: Vectorization::ColumnStacking,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &SparseOp {
        &self.matrix
    }

    pub fn matrix_free(&self) -> &MatrixFree {
        &self.free
    }

    pub fn convention(&self) -> Vectorization {
        self.convention
    }

    pub fn is_adjoint(&self) -> bool {
        self.free.adjoint
    }

    /// Applies the materialized matrix to vec(ρ).
    pub fn matvec(&self, v: ColRef<'_, C64>) -> Col<C64> {
        self.matrix.matvec(v)
    }

    /// Applies the generator to ρ without the superoperator matrix.
    pub fn apply(&self, rho: MatRef<'_, C64>) -> Mat<C64> {
        self.free.apply(rho)
    }

    /// Infinity norm of the materialized matrix.
    pub fn norm(&self) -> f64 {
        self.matrix.norm_inf()
    }

    /// max_j |Σ_i L[(i,i), j]| relative to the norm; zero for trace-preserving maps.
    pub fn trace_preservation_error(&self) -> f64 {
        let d = self.dim;
        let mut col_sums = vec![C64::new(0.0, 0.0); d * d];
        for i in 0..d {
            for (j, v) in self.matrix.row(i + d * i) {
                col_sums[j] += v;
            }
        }
        let m = col_sums.iter().map(|v| v.norm()).fold(0.0, f64::max);
        m / self.norm().max(f64::MIN_POSITIVE)
    }
}

/// ρ̇ = −i[H, ρ] + Σ γ_i D[L_i]ρ.
pub fn liouvillian(h: &SparseOp, jumps: &[(SparseOp, f64)]) -> Result<Superoperator> {
    Superoperator::build(h, jumps, false)
}

/// L†J = i[H, J] + Σ γ_i (L_i† J L_i − ½{J, L_i†L_i}).
pub fn adjoint_liouvillian(h: &SparseOp, jumps: &[(SparseOp, f64)]) -> Result<Superoperator> {
    Superoperator::build(h, jumps, true)
}

pub fn model_liouvillian(m: &ModelInstance) -> Result<Superoperator> {
    liouvillian(&m.hamiltonian, &m.jump_ops())
}

pub fn model_adjoint(m: &ModelInstance) -> Result<Superoperator> {
    adjoint_liouvillian(&m.hamiltonian, &m.jump_ops())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock;
    use crate::linalg::{self, cr, max_abs_diff};

    #[test]
    fn vectorize_round_trip_and_diagonal_stride() {
        let d = 4;
        let m = Mat::from_fn(d, d, |i, j| c(i as f64, j as f64));
        let v = vectorize(m.as_ref());
        assert_eq!(max_abs_diff(devectorize(v.as_ref()).unwrap().as_ref(), m.as_ref()), 0.0);
        let diag = Mat::from_fn(d, d, |i, j| if i == j { cr(i as f64 + 1.0) } else { cr(0.0) });
        let v = vectorize(diag.as_ref());
        for i in 0..d {
            assert_eq!(v[i * (d + 1)], cr(i as f64 + 1.0));
        }
        assert!(matches!(devectorize(Col::zeros(5).as_ref()), Err(Error::NotSquare(5))));
    }

    #[test]
    fn amplitude_damping_of_one_photon() {
        let a = fock::annihilation(2).unwrap();
        let l = liouvillian(&SparseOp::zeros(2, 2), &[(a, 1.0)]).unwrap();
        let rho = Mat::from_fn(2, 2, |i, j| if i == 1 && j == 1 { cr(1.0) } else { cr(0.0) });
        let out = devectorize(l.matvec(vectorize(rho.as_ref()).as_ref()).as_ref()).unwrap();
        let want = Mat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => cr(1.0),
            (1, 1) => cr(-1.0),
            _ => cr(0.0),
        });
        assert!(max_abs_diff(out.as_ref(), want.as_ref()) < 1e-15);
    }

    #[test]
    fn rejects_negative_rate_and_mismatch() {
        let a = fock::annihilation(3).unwrap();
        assert!(matches!(
            liouvillian(&SparseOp::zeros(3, 3), &[(a.clone(), -1.0)]),
            Err(Error::NegativeRate(_))
        ));
        assert!(liouvillian(&SparseOp::zeros(4, 4), &[(a, 1.0)]).is_err());
    }

    #[test]
    fn adjoint_annihilates_identity() {
        let a = fock::annihilation(5).unwrap();
        let h = a.adjoint().matmul(&a).matmul(&a.adjoint().matmul(&a));
        let la = adjoint_liouvillian(&h, &[(a.matmul(&a), 0.7), (a, 0.2)]).unwrap();
        let id = vectorize(linalg::identity(5).as_ref());
        assert!(la.matvec(id.as_ref()).norm_max() == 0.0 || la.matvec(id.as_ref()).norm_max() < 1e-15);
    }
}
