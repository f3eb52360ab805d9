//! Dense reference computations for small problems.

use nalgebra::DMatrix;

use crate::basis::SampletBasis;
use crate::kernels::{dense_matrix_for, KernelConfig};
use crate::transform::{forward_transform, CoefficientVector};
use crate::{Error, Result};

/// Largest `N` accepted by the dense oracles.
pub const ORACLE_CAP: usize = 1 << 12;

/// `T` with rows `samplet_as_point_vector(k)`, columns in original point
/// order, so that `f^Σ = T f^Δ`.
pub fn dense_samplet_matrix(basis: &SampletBasis) -> Result<DMatrix<f64>> {
    let n = basis.len();
    if n > ORACLE_CAP {
        return Err(Error::ResourceLimit {
            what: "dense samplet matrix size",
            requested: n,
            cap: ORACLE_CAP,
        });
    }
    let mut t = DMatrix::zeros(n, n);
    for k in 0..n {
        let w = basis.samplet_as_point_vector(k)?;
        for (j, v) in w.into_iter().enumerate() {
            t[(k, j)] = v;
        }
    }
    Ok(t)
}

/// `T K Tᵀ`: the dense kernel matrix transformed on both sides by applying
/// the forward transform to every column and then to every row.
pub fn dense_compressed_oracle(cfg: &KernelConfig, basis: &SampletBasis) -> Result<DMatrix<f64>> {
    let n = basis.len();
    let idx: Vec<usize> = (0..n).collect();
    let k = dense_matrix_for(cfg, basis.tree().cloud(), &idx, ORACLE_CAP)?;
    let mut tk = DMatrix::zeros(n, n);
    for j in 0..n {
        let col = forward_transform(basis, &CoefficientVector::point(k.column(j).iter().copied().collect()))?;
        tk.column_mut(j).copy_from_slice(&col.values);
    }
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        let row = forward_transform(basis, &CoefficientVector::point(tk.row(i).iter().copied().collect()))?;
        out.column_mut(i).copy_from_slice(&row.values);
    }
    Ok(out)
}
