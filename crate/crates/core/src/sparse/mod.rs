//! Sparse symmetric matrices, fill-reducing orderings, sparse Cholesky and
//! Gaussian random field sampling.

mod cholesky;
mod grf;
mod ordering;

pub use cholesky::{symbolic_fill, CholeskyFactor, LowerCsc};
pub use grf::{field_from_noise, sample_grf, standard_normal, whiten_field};
pub use ordering::{approximate_minimum_degree, geometric_nested_dissection, OrderingMethod};

use nalgebra::DMatrix;

use crate::{Error, Result};

/// Symmetric matrix stored as its lower triangle in compressed columns.
/// Every column starts with its diagonal entry; row indices are strictly
/// increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSym {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSym {
    /// Builds from `(row, col, value)` with `row >= col`. Duplicates are
    /// summed; missing diagonal entries are stored as explicit zeros.
    pub fn from_lower_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Result<Self> {
        for &(r, c, v) in &triplets {
            if r >= n || c >= n {
                return Err(Error::IndexOutOfRange {
                    index: r.max(c),
                    size: n,
                });
            }
            if r < c {
                return Err(Error::InvalidInput(format!(
                    "entry ({r}, {c}) lies above the diagonal"
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!("non-finite entry at ({r}, {c})")));
            }
        }
        triplets.extend((0..n).map(|i| (i, i, 0.0)));
        triplets.sort_unstable_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));
        let mut col_ptr = vec![0; n + 1];
        let mut row_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().expect("entry present") += v;
            } else {
                row_idx.push(r);
                values.push(v);
                col_ptr[c + 1] += 1;
                last = Some((r, c));
            }
        }
        for c in 0..n {
            col_ptr[c + 1] += col_ptr[c];
        }
        Ok(Self {
            n,
            col_ptr,
            row_idx,
            values,
        })
    }

    /// Lower triangle of a dense symmetric matrix; off-diagonal entries with
    /// `|v| < drop_below` are omitted.
    pub fn from_dense(a: &DMatrix<f64>, drop_below: f64) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                found: a.ncols(),
            });
        }
        let n = a.nrows();
        let mut t = Vec::new();
        for j in 0..n {
            for i in j..n {
                let v = a[(i, j)];
                if i == j || v.abs() >= drop_below {
                    t.push((i, j, v));
                }
            }
        }
        Self::from_lower_triplets(n, t)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n,
            col_ptr: (0..=n).collect(),
            row_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn row_idx(&self) -> &[usize] {
        &self.row_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Row indices and values of column `j` of the lower triangle.
    pub fn column(&self, j: usize) -> (&[usize], &[f64]) {
        let r = self.col_ptr[j]..self.col_ptr[j + 1];
        (&self.row_idx[r.clone()], &self.values[r])
    }

    /// Stored entries of the lower triangle, diagonal included.
    pub fn nnz_lower(&self) -> usize {
        self.row_idx.len()
    }

    /// Nonzeros of the full symmetric matrix.
    pub fn nnz(&self) -> usize {
        2 * self.nnz_lower() - self.n
    }

    /// Average number of nonzeros per row, both triangles counted.
    pub fn anz(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.nnz() as f64 / self.n as f64
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        let (rows, vals) = self.column(c);
        match rows.binary_search(&r) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.values[self.col_ptr[j]]).collect()
    }

    /// `A + ρI`.
    pub fn add_ridge(&self, rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidInput(format!("ridge must be positive, got {rho}")));
        }
        let mut out = self.clone();
        for j in 0..self.n {
            out.values[out.col_ptr[j]] += rho;
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for j in 0..self.n {
            let (rows, vals) = self.column(j);
            for (&i, &v) in rows.iter().zip(vals) {
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
        a
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for j in 0..self.n {
            let (rows, vals) = self.column(j);
            y[j] += vals[0] * x[j];
            for (&i, &v) in rows[1..].iter().zip(&vals[1..]) {
                y[i] += v * x[j];
                y[j] += v * x[i];
            }
        }
        y
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut s = 0.0;
        for j in 0..self.n {
            let (rows, vals) = self.column(j);
            for (&i, &v) in rows.iter().zip(vals) {
                s += if i == j { v * v } else { 2.0 * v * v };
            }
        }
        s.sqrt()
    }

    /// `B(i, j) = A(perm[i], perm[j])`.
    pub fn permuted(&self, perm: &Permutation) -> Self {
        assert_eq!(perm.len(), self.n);
        let inv = perm.inverse_map();
        let mut t = Vec::with_capacity(self.nnz_lower());
        for j in 0..self.n {
            let (rows, vals) = self.column(j);
            for (&i, &v) in rows.iter().zip(vals) {
                let (a, b) = (inv[i], inv[j]);
                t.push((a.max(b), a.min(b), v));
            }
        }
        Self::from_lower_triplets(self.n, t).expect("permuted entries are valid")
    }

    /// Off-diagonal neighbours of every vertex of the symmetric pattern.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for j in 0..self.n {
            for &i in &self.column(j).0[1..] {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        adj
    }
}

/// Symmetric permutation; `perm[new] = old`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    perm: Vec<usize>,
    inv: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self {
            perm: (0..n).collect(),
            inv: (0..n).collect(),
        }
    }

    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let n = perm.len();
        let mut inv = vec![usize::MAX; n];
        for (new, &old) in perm.iter().enumerate() {
            if old >= n || inv[old] != usize::MAX {
                return Err(Error::InvalidInput("not a permutation".into()));
            }
            inv[old] = new;
        }
        Ok(Self { perm, inv })
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    /// `new -> old`.
    pub fn forward_map(&self) -> &[usize] {
        &self.perm
    }

    /// `old -> new`.
    pub fn inverse_map(&self) -> &[usize] {
        &self.inv
    }

    pub fn inverse(&self) -> Self {
        Self {
            perm: self.inv.clone(),
            inv: self.perm.clone(),
        }
    }

    /// `y[new] = x[perm[new]]`, i.e. `y = P x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.perm.iter().map(|&o| x[o]).collect()
    }

    /// `y = Pᵀ x`.
    pub fn apply_transpose(&self, x: &[f64]) -> Vec<f64> {
        self.inv.iter().map(|&n| x[n]).collect()
    }
}
