//! Forward and inverse samplet transforms, thresholding and singularity
//! detection.
//!
//! Point-basis vectors are always in the original point order; the tree
//! permutation is applied internally.

use serde::{Deserialize, Serialize};

use crate::basis::SampletBasis;
use crate::cluster_tree::BoundingBox;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BasisTag {
    /// Coefficients with respect to the Dirac measures at the points.
    PointBasis,
    /// Coefficients with respect to the samplet basis.
    SampletBasis,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector {
    pub values: Vec<f64>,
    pub basis_tag: BasisTag,
}

impl CoefficientVector {
    pub fn point(values: Vec<f64>) -> Self {
        Self {
            values,
            basis_tag: BasisTag::PointBasis,
        }
    }

    pub fn samplet(values: Vec<f64>) -> Self {
        Self {
            values,
            basis_tag: BasisTag::SampletBasis,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.values)
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn check(basis: &SampletBasis, v: &CoefficientVector, tag: BasisTag) -> Result<()> {
    if v.basis_tag != tag {
        return Err(Error::InvalidInput(format!(
            "expected a vector in {tag:?}, got {:?}",
            v.basis_tag
        )));
    }
    if v.len() != basis.len() {
        return Err(Error::DimensionMismatch {
            expected: basis.len(),
            found: v.len(),
        });
    }
    Ok(())
}

/// `f^Δ -> f^Σ`, linear in the number of points.
pub fn forward_transform(basis: &SampletBasis, f_delta: &CoefficientVector) -> Result<CoefficientVector> {
    check(basis, f_delta, BasisTag::PointBasis)?;
    let perm = basis.tree().permutation();
    let tree_order: Vec<f64> = perm.iter().map(|&i| f_delta.values[i]).collect();
    let mut out = vec![0.0; basis.len()];
    basis.forward_tree_order(&tree_order, &mut out);
    Ok(CoefficientVector::samplet(out))
}

/// `f^Σ -> f^Δ`, the exact inverse of [`forward_transform`].
pub fn inverse_transform(basis: &SampletBasis, f_sigma: &CoefficientVector) -> Result<CoefficientVector> {
    check(basis, f_sigma, BasisTag::SampletBasis)?;
    let mut tree_order = vec![0.0; basis.len()];
    basis.inverse_tree_order(&f_sigma.values, &mut tree_order);
    let mut out = vec![0.0; basis.len()];
    for (pos, &i) in basis.tree().permutation().iter().enumerate() {
        out[i] = tree_order[pos];
    }
    Ok(CoefficientVector::point(out))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub threshold: f64,
    pub kept: usize,
    pub zeroed: usize,
    /// `zeroed / N`.
    pub compression_ratio: f64,
    pub max_abs_coefficient: f64,
}

/// Zeroes samplet coefficients with `|c| < tau`.
///
/// With `protect_scaling` the root scaling coefficients always survive and
/// count as kept. Takes `n_root_scaling` rather than the basis so it can be
/// applied to raw coefficient files.
pub fn threshold_coefficients(
    f_sigma: &CoefficientVector,
    tau: f64,
    protect_scaling: bool,
    n_root_scaling: usize,
) -> Result<(CoefficientVector, ThresholdReport)> {
    if !(tau >= 0.0) {
        return Err(Error::InvalidInput(format!("threshold must be >= 0, got {tau}")));
    }
    let max_abs_coefficient = f_sigma.max_abs();
    let mut values = f_sigma.values.clone();
    let start = if protect_scaling {
        n_root_scaling.min(values.len())
    } else {
        0
    };
    let mut zeroed = 0;
    for v in &mut values[start..] {
        if v.abs() < tau {
            zeroed += 1;
            *v = 0.0;
        }
    }
    let n = values.len();
    let report = ThresholdReport {
        threshold: tau,
        kept: n - zeroed,
        zeroed,
        compression_ratio: if n == 0 { 0.0 } else { zeroed as f64 / n as f64 },
        max_abs_coefficient,
    };
    Ok((
        CoefficientVector {
            values,
            basis_tag: f_sigma.basis_tag,
        },
        report,
    ))
}

/// One line of a compression report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub threshold: f64,
    pub kept: usize,
    pub ratio: f64,
    pub l2_error: f64,
    pub linf_error: f64,
}

/// Forward transform, threshold at `tau` (root scaling protected), inverse
/// transform, and compare against the input.
pub fn reconstruction_error(
    basis: &SampletBasis,
    f_delta: &CoefficientVector,
    tau: f64,
) -> Result<ReconstructionReport> {
    let f_sigma = forward_transform(basis, f_delta)?;
    let (kept, report) = threshold_coefficients(&f_sigma, tau, true, basis.root_scaling_count())?;
    let rec = inverse_transform(basis, &kept)?;
    let mut l2 = 0.0;
    let mut linf = 0.0f64;
    for (a, b) in f_delta.values.iter().zip(&rec.values) {
        let e = a - b;
        l2 += e * e;
        linf = linf.max(e.abs());
    }
    Ok(ReconstructionReport {
        threshold: tau,
        kept: report.kept,
        ratio: report.compression_ratio,
        l2_error: l2.sqrt(),
        linf_error: linf,
    })
}

/// A cluster owning at least one large samplet coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlaggedCluster {
    pub cluster: usize,
    pub level: usize,
    pub max_abs_coefficient: f64,
    pub bbox: BoundingBox,
    pub is_leaf: bool,
}

/// Clusters with a samplet coefficient `|c| >= tau`, by descending magnitude.
/// Root scaling coefficients are ignored.
pub fn detect_singularities(
    basis: &SampletBasis,
    f_sigma: &CoefficientVector,
    tau: f64,
) -> Result<Vec<FlaggedCluster>> {
    check(basis, f_sigma, BasisTag::SampletBasis)?;
    if !(tau >= 0.0) {
        return Err(Error::InvalidInput(format!("threshold must be >= 0, got {tau}")));
    }
    let tree = basis.tree();
    let mut flagged = Vec::new();
    for (c, block) in basis.blocks().iter().enumerate() {
        let coeffs = &f_sigma.values[block.samplet_offset..block.samplet_offset + block.n_samplets];
        let m = max_abs(coeffs);
        if block.n_samplets > 0 && m >= tau {
            let cl = tree.cluster(c);
            flagged.push(FlaggedCluster {
                cluster: c,
                level: cl.level,
                max_abs_coefficient: m,
                bbox: cl.bbox.clone(),
                is_leaf: cl.is_leaf(),
            });
        }
    }
    flagged.sort_by(|a, b| {
        b.max_abs_coefficient
            .total_cmp(&a.max_abs_coefficient)
            .then(a.cluster.cmp(&b.cluster))
    });
    Ok(flagged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{ClusterTree, MomentSpec, PointCloud};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_basis(n: usize, d: usize, q: usize, seed: u64) -> SampletBasis {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coords = (0..n * d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let cloud = PointCloud::new(d, coords).unwrap();
        let spec = MomentSpec::new(q, d);
        let tree = ClusterTree::build(cloud, spec.default_leaf_size()).unwrap();
        SampletBasis::new(tree, spec)
    }

    #[test]
    fn constant_data_has_no_samplet_content() {
        let basis = random_basis(500, 2, 1, 3);
        let f = CoefficientVector::point(vec![1.0; 500]);
        let fs = forward_transform(&basis, &f).unwrap();
        let ns = basis.root_scaling_count();
        for &c in &fs.values[ns..] {
            assert!(c.abs() <= 1e-10 * (500f64).sqrt());
        }
        let root_mass: f64 = fs.values[..ns].iter().map(|c| c * c).sum();
        assert!((root_mass - 500.0).abs() < 1e-9);
    }

    #[test]
    fn polynomial_data_annihilated() {
        let basis = random_basis(700, 2, 2, 5);
        let frame = basis.frame();
        let cloud = basis.tree().cloud();
        let mut xt = [0.0; 2];
        let f: Vec<f64> = (0..700)
            .map(|i| {
                frame.apply(cloud.point(i), &mut xt);
                1.0 - 2.0 * xt[0] + 0.5 * xt[1] + xt[0] * xt[1] - 3.0 * xt[1] * xt[1]
            })
            .collect();
        let norm: f64 = f.iter().map(|x| x * x).sum::<f64>().sqrt();
        let fs = forward_transform(&basis, &CoefficientVector::point(f)).unwrap();
        for &c in &fs.values[basis.root_scaling_count()..] {
            assert!(c.abs() <= 1e-9 * norm, "{c}");
        }
    }

    #[test]
    fn zero_and_wrong_tag() {
        let basis = random_basis(50, 1, 0, 1);
        let z = inverse_transform(&basis, &CoefficientVector::samplet(vec![0.0; 50])).unwrap();
        assert!(z.values.iter().all(|&x| x == 0.0));
        assert!(forward_transform(&basis, &CoefficientVector::samplet(vec![0.0; 50])).is_err());
        assert!(matches!(
            forward_transform(&basis, &CoefficientVector::point(vec![0.0; 49])),
            Err(Error::DimensionMismatch { expected: 50, found: 49 })
        ));
    }

    #[test]
    fn unit_coefficient_inverts_to_basis_element() {
        let basis = random_basis(120, 2, 1, 8);
        for k in [0, 3, 17, 64, 119] {
            let mut e = vec![0.0; 120];
            e[k] = 1.0;
            let v = inverse_transform(&basis, &CoefficientVector::samplet(e)).unwrap();
            let w = basis.samplet_as_point_vector(k).unwrap();
            for (a, b) in v.values.iter().zip(&w) {
                assert!((a - b).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn threshold_edge_cases() {
        let f = CoefficientVector::samplet(vec![3.0, -0.5, 0.2, 0.0, -2.0]);
        let (g, r) = threshold_coefficients(&f, 0.0, true, 1).unwrap();
        assert_eq!(g, f);
        assert_eq!((r.kept, r.compression_ratio), (5, 0.0));
        let (g, r) = threshold_coefficients(&f, 10.0, true, 1).unwrap();
        assert_eq!(g.values, vec![3.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!((r.kept, r.zeroed), (1, 4));
        assert_eq!(r.max_abs_coefficient, 3.0);
        let (g, r) = threshold_coefficients(&f, 10.0, false, 1).unwrap();
        assert!(g.values.iter().all(|&x| x == 0.0));
        assert_eq!(r.compression_ratio, 1.0);
        assert!(threshold_coefficients(&f, -1.0, true, 1).is_err());
    }

    #[test]
    fn tau_zero_reconstruction_is_exact() {
        let basis = random_basis(300, 1, 2, 2);
        let f: Vec<f64> = (0..300).map(|i| ((i * 7919) % 101) as f64).collect();
        let r = reconstruction_error(&basis, &CoefficientVector::point(f), 0.0).unwrap();
        assert!(r.l2_error < 1e-10 && r.linf_error < 1e-11);
        assert_eq!(r.ratio, 0.0);
    }

    #[test]
    fn detection_on_kink() {
        let n = 1024;
        let h = 2.0 / (n - 1) as f64;
        let coords: Vec<f64> = (0..n).map(|i| -1.0 + i as f64 * h).collect();
        let f: Vec<f64> = coords.iter().map(|x| x.abs()).collect();
        let cloud = PointCloud::new(1, coords).unwrap();
        let spec = MomentSpec::new(2, 1);
        let tree = ClusterTree::build(cloud, spec.default_leaf_size()).unwrap();
        let basis = SampletBasis::new(tree, spec);
        let fs = forward_transform(&basis, &CoefficientVector::point(f)).unwrap();
        let tau = 1e-8 * fs.max_abs();
        let flagged = detect_singularities(&basis, &fs, tau).unwrap();
        assert!(!flagged.is_empty());
        for w in flagged.windows(2) {
            assert!(w[0].max_abs_coefficient >= w[1].max_abs_coefficient);
        }
        for fc in flagged.iter().filter(|f| f.is_leaf) {
            assert!(fc.bbox.lo[0] - 2.0 * h <= 0.0 && fc.bbox.hi[0] + 2.0 * h >= 0.0);
        }
        let constant = forward_transform(&basis, &CoefficientVector::point(vec![2.0; n])).unwrap();
        assert!(detect_singularities(&basis, &constant, 1e-8).unwrap().is_empty());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn round_trip_parseval_linearity(
            n in 1usize..300,
            d in 1usize..4,
            q in 0usize..3,
            seed in any::<u64>(),
            alpha in -3.0f64..3.0,
        ) {
            let basis = random_basis(n, d, q, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
            let f: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let g: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let fs = forward_transform(&basis, &CoefficientVector::point(f.clone())).unwrap();
            let gs = forward_transform(&basis, &CoefficientVector::point(g.clone())).unwrap();
            let back = inverse_transform(&basis, &fs).unwrap();
            let finf = max_abs(&f);
            for (a, b) in f.iter().zip(&back.values) {
                prop_assert!((a - b).abs() <= 1e-12 * finf.max(1.0));
            }
            let e1: f64 = f.iter().map(|x| x * x).sum();
            let e2: f64 = fs.values.iter().map(|x| x * x).sum();
            prop_assert!((e1 - e2).abs() <= 1e-10 * e1.max(1e-300));

            let h: Vec<f64> = f.iter().zip(&g).map(|(a, b)| alpha * a + b).collect();
            let hs = forward_transform(&basis, &CoefficientVector::point(h)).unwrap();
            let scale = max_abs(&hs.values).max(1.0);
            for k in 0..n {
                prop_assert!((hs.values[k] - alpha * fs.values[k] - gs.values[k]).abs() <= 1e-12 * scale);
            }

            // Other direction.
            let fwd = forward_transform(&basis, &inverse_transform(&basis, &CoefficientVector::samplet(g.clone())).unwrap()).unwrap();
            for (a, b) in g.iter().zip(&fwd.values) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }

        #[test]
        fn thresholding_error_is_dropped_norm(n in 2usize..400, seed in any::<u64>(), frac in 0.0f64..1.0) {
            let basis = random_basis(n, 2, 1, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let fv = CoefficientVector::point(f);
            let fs = forward_transform(&basis, &fv).unwrap();
            let tau = frac * fs.max_abs();
            let ns = basis.root_scaling_count();
            let dropped: f64 = fs.values[ns..].iter().filter(|c| c.abs() < tau).map(|c| c * c).sum();
            let r = reconstruction_error(&basis, &fv, tau).unwrap();
            prop_assert!((r.l2_error * r.l2_error - dropped).abs() <= 1e-10 * dropped.max(1e-20) + 1e-24);
        }
    }
}
