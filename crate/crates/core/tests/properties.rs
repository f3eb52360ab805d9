use nalgebra::DMatrix;
use proptest::prelude::*;

use samplets::h2::{assemble_compressed_kernel, dense_samplet_matrix, H2Params};
use samplets::sparse::{Permutation, SparseSym};
use samplets::transform::{forward_transform, CoefficientVector};
use samplets::{ClusterTree, KernelConfig, KernelFamily, MomentSpec, PointCloud, SampletBasis};

fn cloud_strategy(max_n: usize) -> impl Strategy<Value = PointCloud> {
    (1usize..=3, 1usize..=max_n).prop_flat_map(|(d, n)| {
        prop::collection::vec(-2.0f64..2.0, n * d).prop_map(move |c| PointCloud::new(d, c).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tree_partitions_points(cloud in cloud_strategy(300), leaf in 1usize..20) {
        let tree = ClusterTree::build(cloud.clone(), leaf).unwrap();
        let mut seen = tree.permutation().to_vec();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..cloud.len()).collect::<Vec<_>>());
        for (i, c) in tree.clusters().iter().enumerate() {
            for pos in c.range() {
                prop_assert!(c.bbox.contains(tree.tree_point(pos)));
            }
            match c.sons {
                Some([a, b]) => {
                    let (ca, cb) = (tree.cluster(a), tree.cluster(b));
                    prop_assert!(a > i && b > i);
                    prop_assert_eq!(ca.begin, c.begin);
                    prop_assert_eq!(ca.end, cb.begin);
                    prop_assert_eq!(cb.end, c.end);
                    prop_assert!(ca.len().abs_diff(cb.len()) <= 1);
                }
                None => prop_assert!(c.len() <= leaf || c.len() == 1),
            }
        }
    }

    #[test]
    fn basis_is_orthonormal_and_matches_transform(cloud in cloud_strategy(200), q in 0usize..=2) {
        let spec = MomentSpec::new(q, cloud.dim());
        let basis = SampletBasis::new(ClusterTree::build(cloud, spec.default_leaf_size()).unwrap(), spec);
        let n = basis.len();
        let t = dense_samplet_matrix(&basis).unwrap();
        prop_assert!((&t * t.transpose() - DMatrix::identity(n, n)).abs().max() <= 1e-10);
        let f: Vec<f64> = (0..n).map(|i| (i as f64 * 1.3).cos()).collect();
        let fs = forward_transform(&basis, &CoefficientVector::point(f.clone())).unwrap();
        let explicit = &t * nalgebra::DVector::from_vec(f);
        for (a, b) in fs.values.iter().zip(explicit.iter()) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn permutation_round_trip(perm in Just((0..40).collect::<Vec<usize>>()).prop_shuffle(),
                              x in prop::collection::vec(-5.0f64..5.0, 40)) {
        let p = Permutation::new(perm).unwrap();
        prop_assert_eq!(p.apply_transpose(&p.apply(&x)), x.clone());
        prop_assert_eq!(p.apply(&p.apply_transpose(&x)), x);
        prop_assert_eq!(p.inverse().inverse(), p);
    }

    #[test]
    fn matrix_market_round_trip(entries in prop::collection::vec((0usize..30, 0usize..30, -1e3f64..1e3), 0..80)) {
        let t: Vec<_> = entries.into_iter().map(|(i, j, v)| (i.max(j), i.min(j), v)).collect();
        let a = SparseSym::from_lower_triplets(30, t).unwrap();
        let mut buf = Vec::new();
        samplets::io::write_matrix_market(&mut buf, &a).unwrap();
        prop_assert_eq!(samplets::io::read_matrix_market(&buf[..]).unwrap(), a);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn thresholding_error_bounded_by_epsilon(seed in 0u64..1000, eps in 1e-6f64..1e-2) {
        let cloud = PointCloud::uniform_cube(400, 2, seed).unwrap();
        let spec = MomentSpec::new(1, 2);
        let basis = SampletBasis::new(ClusterTree::build(cloud, spec.default_leaf_size()).unwrap(), spec);
        let cfg = KernelConfig::new(KernelFamily::Matern12, 0.5).unwrap();
        let full = assemble_compressed_kernel(&basis, &cfg, &H2Params { epsilon: 0.0, ..H2Params::default() }).unwrap();
        let cut = assemble_compressed_kernel(&basis, &cfg, &H2Params { epsilon: eps, ..H2Params::default() }).unwrap();
        let diff = (full.matrix.to_dense() - cut.matrix.to_dense()).abs().max();
        prop_assert!(diff < eps);
        prop_assert_eq!(full.matrix.diagonal(), cut.matrix.diagonal());
        prop_assert_eq!(cut.matrix.to_dense(), cut.matrix.to_dense().transpose());
    }
}
