//! Compressed-row complex matrices for Hilbert-space operators and
//! Liouvillians, plus the connected-component split used to factor large
//! Liouvillians block by block.

use faer::sparse::{SparseColMat, Triplet};
use faer::{Col, ColRef, Mat, MatRef};

use super::C64;

/// Entries with magnitude at or below this are not stored.
pub const DROP_TOL: f64 = 1e-15;

#[derive(Clone, Debug)]
pub struct SparseOp {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<C64>,
}

impl SparseOp {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        SparseOp {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        SparseOp {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            vals: vec![C64::new(1.0, 0.0); n],
        }
    }

    pub fn diagonal(d: &[C64]) -> Self {
        Self::from_triplets(
            d.len(),
            d.len(),
            d.iter().enumerate().map(|(i, &v)| (i, i, v)),
        )
    }

    /// Builds from (row, col, value) triplets, summing duplicates.
    pub fn from_triplets<I>(nrows: usize, ncols: usize, entries: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, C64)>,
    {
        let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); nrows];
        for (i, j, v) in entries {
            assert!(i < nrows && j < ncols, "triplet ({i}, {j}) out of bounds");
            rows[i].push((j, v));
        }
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut k = 0;
            while k < row.len() {
                let j = row[k].0;
                let mut acc = C64::new(0.0, 0.0);
                while k < row.len() && row[k].0 == j {
                    acc += row[k].1;
                    k += 1;
                }
                if acc.norm() > DROP_TOL {
                    col_idx.push(j);
                    vals.push(acc);
                }
            }
            row_ptr.push(col_idx.len());
        }
        SparseOp {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            vals,
        }
    }

    pub fn from_dense(a: MatRef<'_, C64>) -> Self {
        let mut trip = Vec::new();
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                let v = a[(i, j)];
                if v.norm() > DROP_TOL {
                    trip.push((i, j, v));
                }
            }
        }
        Self::from_triplets(a.nrows(), a.ncols(), trip)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Iterates stored entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |p| (i, self.col_idx[p], self.vals[p]))
        })
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |p| (self.col_idx[p], self.vals[p]))
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.row(i)
            .find(|&(c, _)| c == j)
            .map(|(_, v)| v)
            .unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn to_dense(&self) -> Mat<C64> {
        let mut m = Mat::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.entries() {
            m[(i, j)] += v;
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(
            self.ncols,
            self.nrows,
            self.entries().map(|(i, j, v)| (j, i, v.conj())),
        )
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.ncols, self.nrows, self.entries().map(|(i, j, v)| (j, i, v)))
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.clone();
        for v in &mut out.vals {
            *v *= s;
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        Self::from_triplets(self.nrows, self.ncols, self.entries().chain(other.entries()))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows);
        let mut trip = Vec::new();
        for i in 0..self.nrows {
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    trip.push((i, j, a * b));
                }
            }
        }
        Self::from_triplets(self.nrows, other.ncols, trip)
    }

    pub fn matvec(&self, x: ColRef<'_, C64>) -> Col<C64> {
        assert_eq!(self.ncols, x.nrows());
        Col::from_fn(self.nrows, |i| self.row(i).map(|(j, v)| v * x[j]).sum())
    }

    /// Dense product `self * x`.
    pub fn mul_dense(&self, x: MatRef<'_, C64>) -> Mat<C64> {
        assert_eq!(self.ncols, x.nrows());
        let mut out = Mat::zeros(self.nrows, x.ncols());
        for c in 0..x.ncols() {
            for i in 0..self.nrows {
                let mut acc = C64::new(0.0, 0.0);
                for (j, v) in self.row(i) {
                    acc += v * x[(j, c)];
                }
                out[(i, c)] = acc;
            }
        }
        out
    }

    /// Dense product `x * self`.
    pub fn dense_mul(&self, x: MatRef<'_, C64>) -> Mat<C64> {
        assert_eq!(x.ncols(), self.nrows);
        let mut out = Mat::zeros(x.nrows(), self.ncols);
        for k in 0..self.nrows {
            for (j, v) in self.row(k) {
                for r in 0..x.nrows() {
                    out[(r, j)] += x[(r, k)] * v;
                }
            }
        }
        out
    }

    /// Largest entry of |A − A†|.
    pub fn hermiticity_error(&self) -> f64 {
        let mut m: f64 = 0.0;
        for (i, j, v) in self.entries() {
            m = m.max((v - self.get(j, i).conj()).norm());
        }
        m
    }

    /// Infinity norm (max absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows)
            .map(|i| self.row(i).map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn norm_max(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.vals.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Connected components of the symmetrized sparsity pattern. Each
    /// component indexes an invariant block: the matrix is block diagonal
    /// after permuting rows and columns by component.
    pub fn components(&self) -> Vec<Vec<usize>> {
        assert_eq!(self.nrows, self.ncols);
        let mut uf = UnionFind::new(self.nrows);
        for (i, j, _) in self.entries() {
            uf.union(i, j);
        }
        let mut by_root: Vec<Option<usize>> = vec![None; self.nrows];
        let mut comps: Vec<Vec<usize>> = Vec::new();
        for i in 0..self.nrows {
            let r = uf.find(i);
            let c = *by_root[r].get_or_insert_with(|| {
                comps.push(Vec::new());
                comps.len() - 1
            });
            comps[c].push(i);
        }
        comps
    }

    /// Principal submatrix on `idx` (sorted ascending).
    pub fn extract_block(&self, idx: &[usize]) -> Self {
        let mut local = vec![usize::MAX; self.ncols];
        for (p, &i) in idx.iter().enumerate() {
            local[i] = p;
        }
        let mut trip = Vec::new();
        for (p, &i) in idx.iter().enumerate() {
            for (j, v) in self.row(i) {
                if local[j] != usize::MAX {
                    trip.push((p, local[j], v));
                }
            }
        }
        Self::from_triplets(idx.len(), idx.len(), trip)
    }

    pub fn to_faer(&self) -> SparseColMat<usize, C64> {
        let trip: Vec<Triplet<usize, usize, C64>> = self
            .entries()
            .map(|(row, col, val)| Triplet { row, col, val })
            .collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &trip)
            .expect("indices are in bounds by construction")
    }
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}
