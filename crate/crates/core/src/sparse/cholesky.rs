//! Simplicial sparse Cholesky factorization.
//!
//! The symbolic phase builds the elimination tree and obtains column counts
//! from the row patterns (`ereach`); the numeric phase computes `L` one row
//! at a time from those patterns.

use crate::sparse::ordering::{approximate_minimum_degree, OrderingMethod};
use crate::sparse::{Permutation, SparseSym};
use crate::{Error, Result};

/// Lower-triangular matrix in compressed columns, diagonal first.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerCsc {
    pub n: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl LowerCsc {
    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    /// `nnz / N` counting the stored triangle only.
    pub fn anz(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.nnz() as f64 / self.n as f64
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for j in 0..self.n {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                y[self.row_idx[p]] += self.values[p] * xj;
            }
        }
        y
    }

    /// Solves `L y = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        for j in 0..self.n {
            let p0 = self.col_ptr[j];
            b[j] /= self.values[p0];
            let bj = b[j];
            for p in p0 + 1..self.col_ptr[j + 1] {
                b[self.row_idx[p]] -= self.values[p] * bj;
            }
        }
    }

    /// Solves `Lᵀ y = b` in place.
    pub fn solve_transpose_in_place(&self, b: &mut [f64]) {
        for j in (0..self.n).rev() {
            let p0 = self.col_ptr[j];
            let mut s = b[j];
            for p in p0 + 1..self.col_ptr[j + 1] {
                s -= self.values[p] * b[self.row_idx[p]];
            }
            b[j] = s / self.values[p0];
        }
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut l = nalgebra::DMatrix::zeros(self.n, self.n);
        for j in 0..self.n {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                l[(self.row_idx[p], j)] = self.values[p];
            }
        }
        l
    }
}

/// Upper triangle of `a` in compressed columns (row `k` of the lower part).
fn upper(a: &SparseSym) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
    let n = a.size();
    let mut count = vec![0usize; n + 1];
    for &i in a.row_idx() {
        count[i + 1] += 1;
    }
    for k in 0..n {
        count[k + 1] += count[k];
    }
    let mut next = count.clone();
    let mut rows = vec![0; a.nnz_lower()];
    let mut vals = vec![0.0; a.nnz_lower()];
    for j in 0..n {
        let (ri, rv) = a.column(j);
        for (&i, &v) in ri.iter().zip(rv) {
            rows[next[i]] = j;
            vals[next[i]] = v;
            next[i] += 1;
        }
    }
    (count, rows, vals)
}

fn etree(n: usize, up_ptr: &[usize], up_rows: &[usize]) -> Vec<usize> {
    const NONE: usize = usize::MAX;
    let mut parent = vec![NONE; n];
    let mut ancestor = vec![NONE; n];
    for k in 0..n {
        for &r in &up_rows[up_ptr[k]..up_ptr[k + 1]] {
            let mut i = r;
            while i != NONE && i < k {
                let next = ancestor[i];
                ancestor[i] = k;
                if next == NONE {
                    parent[i] = k;
                }
                i = next;
            }
        }
    }
    parent
}

/// Pattern of row `k` of `L` (excluding the diagonal) in `s[top..]`,
/// topologically ordered.
fn ereach(
    k: usize,
    up_ptr: &[usize],
    up_rows: &[usize],
    parent: &[usize],
    s: &mut [usize],
    mark: &mut [usize],
    stamp: usize,
) -> usize {
    let n = parent.len();
    let mut top = n;
    mark[k] = stamp;
    for &r in &up_rows[up_ptr[k]..up_ptr[k + 1]] {
        let mut i = r;
        if i > k {
            continue;
        }
        let mut len = 0;
        while mark[i] != stamp {
            s[len] = i;
            len += 1;
            mark[i] = stamp;
            i = parent[i];
        }
        while len > 0 {
            top -= 1;
            len -= 1;
            s[top] = s[len];
        }
    }
    top
}

struct Symbolic {
    up_ptr: Vec<usize>,
    up_rows: Vec<usize>,
    up_vals: Vec<f64>,
    parent: Vec<usize>,
    col_ptr: Vec<usize>,
}

fn symbolic(a: &SparseSym) -> Symbolic {
    let n = a.size();
    let (up_ptr, up_rows, up_vals) = upper(a);
    let parent = etree(n, &up_ptr, &up_rows);
    let mut counts = vec![1usize; n];
    let mut s = vec![0; n];
    let mut mark = vec![usize::MAX; n];
    for k in 0..n {
        let top = ereach(k, &up_ptr, &up_rows, &parent, &mut s, &mut mark, k);
        for &i in &s[top..n] {
            counts[i] += 1;
        }
    }
    let mut col_ptr = vec![0; n + 1];
    for k in 0..n {
        col_ptr[k + 1] = col_ptr[k] + counts[k];
    }
    Symbolic {
        up_ptr,
        up_rows,
        up_vals,
        parent,
        col_ptr,
    }
}

/// `nnz(L)` of the Cholesky factor of `a` in its given order, diagonal
/// included.
pub fn symbolic_fill(a: &SparseSym) -> usize {
    symbolic(a).col_ptr[a.size()]
}

/// `P A Pᵀ = L Lᵀ` together with the ridge already contained in `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    pub l: LowerCsc,
    pub perm: Permutation,
    pub rho: f64,
}

impl CholeskyFactor {
    /// Factorizes `P A Pᵀ`. Fails with [`Error::NonPositivePivot`] (column in
    /// the permuted order) if `A` is not numerically positive definite.
    pub fn factorize(a: &SparseSym, perm: Permutation) -> Result<Self> {
        if perm.len() != a.size() {
            return Err(Error::DimensionMismatch {
                expected: a.size(),
                found: perm.len(),
            });
        }
        let b = a.permuted(&perm);
        let n = b.size();
        let sym = symbolic(&b);
        let nnz = sym.col_ptr[n];
        let mut row_idx = vec![0; nnz];
        let mut values = vec![0.0; nnz];
        let mut next = sym.col_ptr[..n].to_vec();
        let mut x = vec![0.0; n];
        let mut s = vec![0; n];
        let mut mark = vec![usize::MAX; n];

        for k in 0..n {
            let top = ereach(k, &sym.up_ptr, &sym.up_rows, &sym.parent, &mut s, &mut mark, k);
            for p in sym.up_ptr[k]..sym.up_ptr[k + 1] {
                x[sym.up_rows[p]] = sym.up_vals[p];
            }
            let mut d = x[k];
            x[k] = 0.0;
            for &i in &s[top..n] {
                let lki = x[i] / values[sym.col_ptr[i]];
                x[i] = 0.0;
                for p in sym.col_ptr[i] + 1..next[i] {
                    x[row_idx[p]] -= values[p] * lki;
                }
                d -= lki * lki;
                let p = next[i];
                next[i] += 1;
                row_idx[p] = k;
                values[p] = lki;
            }
            if !(d > 0.0) {
                return Err(Error::NonPositivePivot { column: k, value: d });
            }
            let p = next[k];
            next[k] += 1;
            row_idx[p] = k;
            values[p] = d.sqrt();
        }
        Ok(Self {
            l: LowerCsc {
                n,
                col_ptr: sym.col_ptr,
                row_idx,
                values,
            },
            perm,
            rho: 0.0,
        })
    }

    /// Factorizes `K + ρI` under the chosen ordering.
    ///
    /// `boxes` gives the support of every index and is required by
    /// [`OrderingMethod::NestedDissection`].
    pub fn ridged(
        k: &SparseSym,
        rho: f64,
        method: OrderingMethod,
        boxes: Option<&[crate::BoundingBox]>,
    ) -> Result<Self> {
        let a = k.add_ridge(rho)?;
        let perm = match method {
            OrderingMethod::Natural => Permutation::identity(a.size()),
            OrderingMethod::MinimumDegree => approximate_minimum_degree(&a),
            OrderingMethod::NestedDissection => {
                let boxes = boxes.ok_or_else(|| {
                    Error::InvalidInput("nested dissection needs the support boxes".into())
                })?;
                if boxes.len() != a.size() {
                    return Err(Error::DimensionMismatch {
                        expected: a.size(),
                        found: boxes.len(),
                    });
                }
                crate::sparse::geometric_nested_dissection(boxes, 64)
            }
        };
        let mut f = Self::factorize(&a, perm)?;
        f.rho = rho;
        Ok(f)
    }

    pub fn size(&self) -> usize {
        self.l.n
    }

    pub fn nnz(&self) -> usize {
        self.l.nnz()
    }

    pub fn anz(&self) -> f64 {
        self.l.anz()
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.size() {
            return Err(Error::DimensionMismatch {
                expected: self.size(),
                found: b.len(),
            });
        }
        let mut y = self.perm.apply(b);
        self.l.solve_in_place(&mut y);
        self.l.solve_transpose_in_place(&mut y);
        Ok(self.perm.apply_transpose(&y))
    }

    /// `‖P A Pᵀ − L Lᵀ‖_F / ‖A‖_F`, computed sparsely.
    pub fn relative_residual(&self, a: &SparseSym) -> f64 {
        let b = a.permuted(&self.perm);
        let n = self.size();
        let l = &self.l;
        // Row access to L.
        let mut rptr = vec![0usize; n + 1];
        for &i in &l.row_idx {
            rptr[i + 1] += 1;
        }
        for i in 0..n {
            rptr[i + 1] += rptr[i];
        }
        let mut fill = rptr.clone();
        let mut rcol = vec![0; l.nnz()];
        let mut rval = vec![0.0; l.nnz()];
        for j in 0..n {
            for p in l.col_ptr[j]..l.col_ptr[j + 1] {
                let i = l.row_idx[p];
                rcol[fill[i]] = j;
                rval[fill[i]] = l.values[p];
                fill[i] += 1;
            }
        }
        let mut acc = vec![0.0; n];
        let mut touched = vec![false; n];
        let mut list = Vec::new();
        let mut sum = 0.0;
        for c in 0..n {
            // Column c of L Lᵀ below the diagonal: Σ_j L(:, j) L(c, j).
            for q in rptr[c]..rptr[c + 1] {
                let j = rcol[q];
                let lcj = rval[q];
                for p in l.col_ptr[j]..l.col_ptr[j + 1] {
                    let i = l.row_idx[p];
                    if i < c {
                        continue;
                    }
                    if !touched[i] {
                        touched[i] = true;
                        list.push(i);
                    }
                    acc[i] += l.values[p] * lcj;
                }
            }
            let (rows, vals) = b.column(c);
            for (&i, &v) in rows.iter().zip(vals) {
                if !touched[i] {
                    touched[i] = true;
                    list.push(i);
                }
                acc[i] -= v;
            }
            for &i in &list {
                let e = acc[i] * acc[i];
                sum += if i == c { e } else { 2.0 * e };
                acc[i] = 0.0;
                touched[i] = false;
            }
            list.clear();
        }
        let norm = a.frobenius_norm();
        if norm == 0.0 {
            sum.sqrt()
        } else {
            sum.sqrt() / norm
        }
    }
}
