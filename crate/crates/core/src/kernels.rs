//! Radial positive-definite kernels and the dense kernel matrix.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cluster_tree::{ClusterTree, PointCloud};
use crate::{Error, Result};

/// Largest `N` accepted by [`dense_kernel_matrix`].
pub const DENSE_CAP: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    /// `exp(-r/ℓ)`
    Matern12,
    /// `(1 + √3 r/ℓ) exp(-√3 r/ℓ)`
    Matern32,
    /// `(1 + √5 r/ℓ + 5r²/(3ℓ²)) exp(-√5 r/ℓ)`
    Matern52,
    /// `exp(-r²/(2ℓ²))`
    SquaredExponential,
    /// `exp(-c r)`
    ScaledExponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub family: KernelFamily,
    #[serde(default = "one")]
    pub length_scale: f64,
    #[serde(default = "one")]
    pub distance_scale: f64,
}

fn one() -> f64 {
    1.0
}

impl KernelConfig {
    pub fn new(family: KernelFamily, length_scale: f64) -> Result<Self> {
        let cfg = Self {
            family,
            length_scale,
            distance_scale: 1.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `exp(-c ‖x - y‖)`.
    pub fn scaled_exponential(distance_scale: f64) -> Result<Self> {
        let cfg = Self {
            family: KernelFamily::ScaledExponential,
            length_scale: 1.0,
            distance_scale,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.length_scale) || !ok(self.distance_scale) {
            return Err(Error::InvalidInput(format!(
                "kernel scales must be positive and finite (length_scale {}, distance_scale {})",
                self.length_scale, self.distance_scale
            )));
        }
        Ok(())
    }

    /// Kernel as a function of the distance `r`.
    #[inline]
    pub fn radial(&self, r: f64) -> f64 {
        let l = self.length_scale;
        match self.family {
            KernelFamily::Matern12 => (-r / l).exp(),
            KernelFamily::Matern32 => {
                let s = 3f64.sqrt() * r / l;
                (1.0 + s) * (-s).exp()
            }
            KernelFamily::Matern52 => {
                let s = 5f64.sqrt() * r / l;
                (1.0 + s + s * s / 3.0) * (-s).exp()
            }
            KernelFamily::SquaredExponential => (-r * r / (2.0 * l * l)).exp(),
            KernelFamily::ScaledExponential => (-self.distance_scale * r).exp(),
        }
    }

    #[inline]
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), y.len());
        let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        self.radial(r2.sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixOrder {
    Original,
    TreePermuted,
}

/// Dense `K_ij = k(x_i, x_j)` in original or tree order.
pub fn dense_kernel_matrix(cfg: &KernelConfig, tree: &ClusterTree, order: MatrixOrder) -> Result<DMatrix<f64>> {
    let idx: Vec<usize> = match order {
        MatrixOrder::Original => (0..tree.len()).collect(),
        MatrixOrder::TreePermuted => tree.permutation().to_vec(),
    };
    dense_matrix_for(cfg, tree.cloud(), &idx, DENSE_CAP)
}

/// Dense kernel matrix of the points `cloud[idx[i]]`.
pub(crate) fn dense_matrix_for(
    cfg: &KernelConfig,
    cloud: &PointCloud,
    idx: &[usize],
    cap: usize,
) -> Result<DMatrix<f64>> {
    let n = idx.len();
    if n > cap {
        return Err(Error::ResourceLimit {
            what: "dense kernel matrix size",
            requested: n,
            cap,
        });
    }
    let mut k = DMatrix::zeros(n, n);
    for j in 0..n {
        k[(j, j)] = cfg.radial(0.0);
        for i in j + 1..n {
            let v = cfg.eval(cloud.point(idx[i]), cloud.point(idx[j]));
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}
