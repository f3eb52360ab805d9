//! Samplets: orthonormal multiresolution bases of signed measures on
//! scattered data.
//!
//! The crate is organised along the processing pipeline:
//!
//! - [`cluster_tree`]: balanced binary cluster tree with tight bounding boxes
//!   and the admissibility predicate.
//! - [`basis`]: the samplet basis, built bottom-up from QR decompositions of
//!   moment matrices.
//! - [`transform`]: linear-cost forward and inverse samplet transforms,
//!   thresholding and singularity detection.
//! - [`kernels`]: Matérn-family kernels and a dense kernel-matrix oracle.
//! - [`h2`]: assembly of the samplet-compressed kernel matrix using
//!   interpolation-based H²-matrix far-field approximation.
//! - [`sparse`]: sparse symmetric storage, fill-reducing orderings, simplicial
//!   Cholesky and Gaussian random field sampling.
//! - [`io`]: point, vector, Matrix Market and factor file formats.
//!
//! ```
//! use samplets::{ClusterTree, MomentSpec, PointCloud, SampletBasis};
//! use samplets::transform::{forward_transform, inverse_transform, CoefficientVector};
//!
//! let coords: Vec<f64> = (0..64).map(|i| i as f64 / 63.0).collect();
//! let cloud = PointCloud::new(1, coords).unwrap();
//! let spec = MomentSpec::new(1, 1);
//! let tree = ClusterTree::build(cloud, spec.default_leaf_size()).unwrap();
//! let basis = SampletBasis::new(tree, spec);
//!
//! let data = CoefficientVector::point((0..64).map(|i| (i as f64).sin()).collect());
//! let coeffs = forward_transform(&basis, &data).unwrap();
//! let back = inverse_transform(&basis, &coeffs).unwrap();
//! assert!((back.values[5] - data.values[5]).abs() < 1e-12);
//! ```

pub mod basis;
pub mod cluster_tree;
mod error;
pub mod h2;
pub mod io;
pub mod kernels;
pub mod sparse;
pub mod transform;

pub use basis::{moment_dimension, MomentSpec, SampletBasis};
pub use cluster_tree::{BoundingBox, Cluster, ClusterTree, PointCloud};
pub use error::{Error, Result};
pub use kernels::{KernelConfig, KernelFamily};
