//! Dense complex helpers shared by every module, plus the sparse and
//! shift-invert machinery used by the Liouvillian solvers.

pub mod eigs;
pub mod sparse;

pub use sparse::SparseOp;

use faer::linalg::solvers::Solve;
use faer::{Col, ColRef, Mat, MatRef};

pub use faer::c64 as C64;

/// State vector on a truncated Hilbert space.
pub type Ket = Col<C64>;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn adjoint(a: MatRef<'_, C64>) -> Mat<C64> {
    Mat::from_fn(a.ncols(), a.nrows(), |i, j| a[(j, i)].conj())
}

pub fn transpose(a: MatRef<'_, C64>) -> Mat<C64> {
    Mat::from_fn(a.ncols(), a.nrows(), |i, j| a[(j, i)])
}

pub fn identity(n: usize) -> Mat<C64> {
    Mat::identity(n, n)
}

pub fn scale(a: MatRef<'_, C64>, s: C64) -> Mat<C64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * s)
}

/// Kronecker product with `a` as the slow (most-significant) index.
pub fn kron(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> Mat<C64> {
    let (ar, ac) = (a.nrows(), a.ncols());
    let (br, bc) = (b.nrows(), b.ncols());
    let mut out = Mat::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij == C64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

pub fn trace(a: MatRef<'_, C64>) -> C64 {
    (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)]).sum()
}

/// Hilbert–Schmidt inner product Tr[a† b].
pub fn hs_inner(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            acc += a[(i, j)].conj() * b[(i, j)];
        }
    }
    acc
}

pub fn frobenius(a: MatRef<'_, C64>) -> f64 {
    a.norm_l2()
}

pub fn max_abs(a: MatRef<'_, C64>) -> f64 {
    a.norm_max()
}

pub fn max_abs_diff(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> f64 {
    let mut m: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    m
}

/// Largest entry of |a − a†|.
pub fn hermiticity_error(a: MatRef<'_, C64>) -> f64 {
    let mut m: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..=j.min(a.nrows() - 1) {
            m = m.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    m
}

pub fn commutator(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> Mat<C64> {
    a * b - b * a
}

pub fn outer(u: ColRef<'_, C64>, v: ColRef<'_, C64>) -> Mat<C64> {
    Mat::from_fn(u.nrows(), v.nrows(), |i, j| u[i] * v[j].conj())
}

pub fn inner(u: ColRef<'_, C64>, v: ColRef<'_, C64>) -> C64 {
    (0..u.nrows()).map(|i| u[i].conj() * v[i]).sum()
}

pub fn norm(v: ColRef<'_, C64>) -> f64 {
    v.norm_l2()
}

fn norm_1(a: MatRef<'_, C64>) -> f64 {
    (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a degree-13 Padé
/// approximant (Higham 2005).
pub fn expm(a: MatRef<'_, C64>) -> Mat<C64> {
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    const THETA13: f64 = 5.371920351148152;

    let n = a.nrows();
    let nrm = norm_1(a);
    let s = if nrm > THETA13 {
        (nrm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let a = scale(a, cr(0.5f64.powi(s)));
    let id = identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let lin = |m: &Mat<C64>, k: f64| scale(m.as_ref(), cr(k));
    let u_inner = &a6 * (lin(&a6, B[13]) + lin(&a4, B[11]) + lin(&a2, B[9]))
        + lin(&a6, B[7])
        + lin(&a4, B[5])
        + lin(&a2, B[3])
        + lin(&id, B[1]);
    let u = &a * u_inner;
    let v = &a6 * (lin(&a6, B[12]) + lin(&a4, B[10]) + lin(&a2, B[8]))
        + lin(&a6, B[6])
        + lin(&a4, B[4])
        + lin(&a2, B[2])
        + lin(&id, B[0]);

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.partial_piv_lu().solve(&p);
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// Eigenvalues of a general complex matrix.
pub fn eigenvalues(a: MatRef<'_, C64>) -> crate::Result<Vec<C64>> {
    a.eigenvalues()
        .map_err(|e| crate::Error::Eigensolver(format!("{e:?}")))
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(a: MatRef<'_, C64>) -> crate::Result<Vec<f64>> {
    a.self_adjoint_eigenvalues(faer::Side::Lower)
        .map_err(|e| crate::Error::Eigensolver(format!("{e:?}")))
}
