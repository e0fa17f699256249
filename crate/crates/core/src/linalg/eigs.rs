//! Shift-invert subspace iteration for the eigenvalues of a (block of a)
//! Liouvillian nearest the origin: kernel extraction and the slowest
//! decaying modes.

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::sparse::linalg::solvers::Lu;
use faer::{Mat, MatRef};

use super::sparse::SparseOp;
use super::{adjoint, C64};
use crate::{Error, Result};

/// Blocks up to this size are factored densely.
pub const DENSE_FACTOR_LIMIT: usize = 2500;

/// LU factorization of `A − σI`.
pub enum ShiftedFactor {
    Dense(PartialPivLu<C64>),
    Sparse(Lu<usize, C64>),
}

impl ShiftedFactor {
    pub fn new(a: &SparseOp, sigma: C64) -> Result<Self> {
        let n = a.nrows();
        if n <= DENSE_FACTOR_LIMIT {
            let mut m = a.to_dense();
            for i in 0..n {
                m[(i, i)] -= sigma;
            }
            Ok(ShiftedFactor::Dense(m.partial_piv_lu()))
        } else {
            let shifted = a.sub(&SparseOp::identity(n).scale(sigma));
            let lu = shifted
                .to_faer()
                .sp_lu()
                .map_err(|e| Error::Factorization(format!("{e:?}")))?;
            Ok(ShiftedFactor::Sparse(lu))
        }
    }

    /// Overwrites `b` with (A − σI)⁻¹ b.
    pub fn solve(&self, b: &mut Mat<C64>) {
        match self {
            ShiftedFactor::Dense(lu) => lu.solve_in_place(b.as_mut()),
            ShiftedFactor::Sparse(lu) => lu.solve_in_place(b.as_mut()),
        }
    }

    /// Overwrites `b` with (A − σI)⁻ᴴ b.
    pub fn solve_adjoint(&self, b: &mut Mat<C64>) {
        match self {
            ShiftedFactor::Dense(lu) => lu.solve_adjoint_in_place(b.as_mut()),
            ShiftedFactor::Sparse(lu) => lu.solve_adjoint_in_place(b.as_mut()),
        }
    }
}

/// Ritz pairs of `A` nearest the shift.
#[derive(Clone, Debug)]
pub struct NearZero {
    pub values: Vec<C64>,
    /// Columns are unit-norm Ritz vectors matching `values`.
    pub vectors: Mat<C64>,
    pub residuals: Vec<f64>,
}

/// Deterministic, well-spread start block.
fn start_block(n: usize, p: usize) -> Mat<C64> {
    let mut state: u64 = 0x9E37_79B9_7F4A_7C15;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    Mat::from_fn(n, p, |_, _| C64::new(next(), next()))
}

/// Modified Gram–Schmidt, applied twice. Columns that collapse are
/// replaced so the block keeps full rank.
fn orthonormalize(x: &mut Mat<C64>) {
    let (n, p) = (x.nrows(), x.ncols());
    for j in 0..p {
        for _ in 0..2 {
            for k in 0..j {
                let mut d = C64::new(0.0, 0.0);
                for i in 0..n {
                    d += x[(i, k)].conj() * x[(i, j)];
                }
                for i in 0..n {
                    let v = x[(i, k)];
                    x[(i, j)] -= d * v;
                }
            }
        }
        let nrm = x.col(j).norm_l2();
        if nrm < 1e-300 || !nrm.is_finite() {
            for i in 0..n {
                x[(i, j)] = C64::new(((i * 7 + j * 13) % 17) as f64 - 8.0, 0.0);
            }
            continue;
        }
        for i in 0..n {
            x[(i, j)] /= nrm;
        }
    }
}

/// Computes the `p` eigenvalues of `a` nearest zero by subspace iteration
/// on (A − σI)⁻¹ (or its adjoint) followed by Rayleigh–Ritz. The iteration
/// stops once the `want` Ritz pairs nearest zero have residual under
/// `tol`. Ritz pairs are sorted by |λ|.
pub fn near_zero(
    a: &SparseOp,
    factor: &ShiftedFactor,
    p: usize,
    want: usize,
    tol: f64,
    max_iter: usize,
    adjoint_op: bool,
) -> Result<NearZero> {
    let n = a.nrows();
    let p = p.min(n);
    let want = want.min(p);
    let a_h;
    let op = if adjoint_op {
        a_h = a.adjoint();
        &a_h
    } else {
        a
    };
    let mut x = start_block(n, p);
    orthonormalize(&mut x);
    let mut last = None;
    for _ in 0..max_iter {
        if adjoint_op {
            factor.solve_adjoint(&mut x);
        } else {
            factor.solve(&mut x);
        }
        orthonormalize(&mut x);
        let ritz = rayleigh_ritz(op, x.as_ref())?;
        let worst = ritz.residuals[..want].iter().copied().fold(0.0, f64::max);
        let done = worst < tol;
        last = Some(ritz);
        if done {
            break;
        }
    }
    last.ok_or_else(|| Error::Eigensolver("no iterations performed".into()))
}

fn rayleigh_ritz(a: &SparseOp, q: MatRef<'_, C64>) -> Result<NearZero> {
    let aq = a.mul_dense(q);
    let h = adjoint(q) * &aq;
    let eig = h
        .eigen()
        .map_err(|e| Error::Eigensolver(format!("projected eigenproblem: {e:?}")))?;
    let s = eig.S();
    let y = eig.U();
    let p = h.nrows();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&i, &j| s[i].norm().total_cmp(&s[j].norm()));
    let mut vectors = Mat::zeros(q.nrows(), p);
    let mut values = Vec::with_capacity(p);
    let mut residuals = Vec::with_capacity(p);
    for (c, &k) in order.iter().enumerate() {
        let lam = s[k];
        let yk = y.col(k);
        let mut v = q * yk;
        let nrm = v.norm_l2();
        for i in 0..v.nrows() {
            v[i] /= nrm;
        }
        let av = a.matvec(v.as_ref());
        let r = (0..v.nrows())
            .map(|i| (av[i] - lam * v[i]).norm_sqr())
            .sum::<f64>()
            .sqrt();
        for i in 0..v.nrows() {
            vectors[(i, c)] = v[i];
        }
        values.push(lam);
        residuals.push(r);
    }
    Ok(NearZero {
        values,
        vectors,
        residuals,
    })
}
