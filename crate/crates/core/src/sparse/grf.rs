//! Gaussian random fields through the factored samplet covariance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::basis::SampletBasis;
use crate::sparse::CholeskyFactor;
use crate::transform::{forward_transform, inverse_transform, CoefficientVector};
use crate::{Error, Result};

/// Standard normal vector of length `n` for sample `index`. Every sample has
/// its own stream of the seeded generator, so results do not depend on how
/// samples are scheduled.
pub fn standard_normal(seed: u64, index: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let mut z = Vec::with_capacity(n + 1);
    while z.len() < n {
        // Box-Muller; 1 - u keeps the logarithm finite.
        let u1: f64 = 1.0 - rng.random::<f64>();
        let u2: f64 = rng.random::<f64>();
        let r = (-2.0 * u1.ln()).sqrt();
        let t = std::f64::consts::TAU * u2;
        z.push(r * t.cos());
        z.push(r * t.sin());
    }
    z.truncate(n);
    z
}

/// Field in original point order from a white-noise vector `z`:
/// `inverse_transform(Pᵀ L z)`.
pub fn field_from_noise(factor: &CholeskyFactor, basis: &SampletBasis, z: &[f64]) -> Result<Vec<f64>> {
    if factor.size() != basis.len() || z.len() != basis.len() {
        return Err(Error::DimensionMismatch {
            expected: basis.len(),
            found: if factor.size() != basis.len() {
                factor.size()
            } else {
                z.len()
            },
        });
    }
    let lz = factor.l.mul_vec(z);
    let coeffs = factor.perm.apply_transpose(&lz);
    Ok(inverse_transform(basis, &CoefficientVector::samplet(coeffs))?.values)
}

/// `n_samples` realizations with covariance `K^Σ_ε + ρI` in the samplet
/// basis. Samples are generated in parallel on the current rayon pool and
/// are identical for any thread count.
pub fn sample_grf(
    factor: &CholeskyFactor,
    basis: &SampletBasis,
    seed: u64,
    n_samples: usize,
) -> Result<Vec<Vec<f64>>> {
    (0..n_samples)
        .into_par_iter()
        .map(|s| field_from_noise(factor, basis, &standard_normal(seed, s as u64, basis.len())))
        .collect()
}

/// Recovers the noise vector of a field: `L⁻¹ P forward_transform(f)`.
pub fn whiten_field(factor: &CholeskyFactor, basis: &SampletBasis, field: &[f64]) -> Result<Vec<f64>> {
    let coeffs = forward_transform(basis, &CoefficientVector::point(field.to_vec()))?;
    let mut y = factor.perm.apply(&coeffs.values);
    factor.l.solve_in_place(&mut y);
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::{Permutation, SparseSym};
    use crate::{ClusterTree, MomentSpec, PointCloud};

    #[test]
    fn single_point_returns_raw_draw() {
        let cloud = PointCloud::new(1, vec![0.5]).unwrap();
        let basis = SampletBasis::new(ClusterTree::build(cloud, 1).unwrap(), MomentSpec::new(0, 1));
        let f = CholeskyFactor::factorize(&SparseSym::identity(1), Permutation::identity(1)).unwrap();
        let s = sample_grf(&f, &basis, 9, 3).unwrap();
        for (k, v) in s.iter().enumerate() {
            assert_eq!(v, &standard_normal(9, k as u64, 1));
        }
    }

    #[test]
    fn normal_moments() {
        let z = standard_normal(1, 0, 200_000);
        let mean = z.iter().sum::<f64>() / z.len() as f64;
        let var = z.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / z.len() as f64;
        assert!(mean.abs() < 0.01);
        assert!((var - 1.0).abs() < 0.01);
        assert_ne!(standard_normal(1, 0, 8), standard_normal(1, 1, 8));
        assert_eq!(standard_normal(4, 2, 7), standard_normal(4, 2, 7));
        assert_eq!(standard_normal(4, 2, 7)[..5], standard_normal(4, 2, 5)[..]);
    }

    #[test]
    fn whitening_recovers_noise() {
        let coords: Vec<f64> = (0..200).map(|i| (i as f64 * 0.618).fract()).collect();
        let cloud = PointCloud::new(2, coords).unwrap();
        let spec = MomentSpec::new(1, 2);
        let basis = SampletBasis::new(ClusterTree::build(cloud, spec.default_leaf_size()).unwrap(), spec);
        let a = SparseSym::from_lower_triplets(
            100,
            (0..100).map(|i| (i, i, 2.0)).chain((1..100).map(|i| (i, i - 1, 0.5))).collect(),
        )
        .unwrap();
        let f = CholeskyFactor::factorize(&a, crate::sparse::approximate_minimum_degree(&a)).unwrap();
        let z = standard_normal(3, 0, 100);
        let field = field_from_noise(&f, &basis, &z).unwrap();
        let back = whiten_field(&f, &basis, &field).unwrap();
        for (a, b) in z.iter().zip(&back) {
            assert!((a - b).abs() < 1e-8);
        }
    }
}
