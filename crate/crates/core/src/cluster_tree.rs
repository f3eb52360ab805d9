//! Balanced binary cluster tree over a point set.
//!
//! Clusters are split at the median along the longest edge of their tight
//! bounding box, so sibling cardinalities differ by at most one. Clusters are
//! stored in breadth-first order: the root has index 0 and every son has a
//! larger index than its father.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Default leaf size when a tree is built without basis parameters.
pub const DEFAULT_LEAF_SIZE: usize = 16;

/// A set of `count` points in `dim` dimensions, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
}

impl PointCloud {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("point dimension must be positive".into()));
        }
        if coords.is_empty() {
            return Err(Error::InvalidInput("point cloud is empty".into()));
        }
        if coords.len() % dim != 0 {
            return Err(Error::InvalidInput(format!(
                "{} coordinates do not form points of dimension {dim}",
                coords.len()
            )));
        }
        if let Some(pos) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite coordinate in point {}",
                pos / dim
            )));
        }
        Ok(Self { dim, coords })
    }

    /// Builds a cloud from a slice of points.
    pub fn from_points<P: AsRef<[f64]>>(points: &[P]) -> Result<Self> {
        let dim = points
            .first()
            .map(|p| p.as_ref().len())
            .ok_or_else(|| Error::InvalidInput("point cloud is empty".into()))?;
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            let p = p.as_ref();
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
            coords.extend_from_slice(p);
        }
        Self::new(dim, coords)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// `n` independent uniform points in `[-1, 1]^dim`.
    pub fn uniform_cube(n: usize, dim: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::new(dim, (0..n * dim).map(|_| rng.random_range(-1.0..=1.0)).collect())
    }

    /// Tensor grid of `m^dim = n` equispaced points on `[-1, 1]^dim`, first
    /// axis varying fastest.
    pub fn grid(n: usize, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("point dimension must be positive".into()));
        }
        let m = (n as f64).powf(1.0 / dim as f64).round() as usize;
        if m.checked_pow(dim as u32) != Some(n) {
            return Err(Error::InvalidInput(format!(
                "a grid in {dim} dimensions needs a perfect power as point count, got {n}"
            )));
        }
        let coord = |k: usize| if m == 1 { 0.0 } else { -1.0 + 2.0 * k as f64 / (m - 1) as f64 };
        let mut coords = Vec::with_capacity(n * dim);
        for i in 0..n {
            let mut rest = i;
            for _ in 0..dim {
                coords.push(coord(rest % m));
                rest /= m;
            }
        }
        Self::new(dim, coords)
    }
}

/// Axis-parallel box `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BoundingBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoundingBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        debug_assert_eq!(lo.len(), hi.len());
        debug_assert!(lo.iter().zip(&hi).all(|(l, h)| l <= h));
        Self { lo, hi }
    }

    /// Smallest box containing the given points of `cloud`.
    pub fn enclosing<I: IntoIterator<Item = usize>>(cloud: &PointCloud, indices: I) -> Self {
        let d = cloud.dim();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for i in indices {
            for (k, &x) in cloud.point(i).iter().enumerate() {
                lo[k] = lo[k].min(x);
                hi[k] = hi[k].max(x);
            }
        }
        Self { lo, hi }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| 0.5 * (l + h)).collect()
    }

    /// Longest axis; ties go to the lowest axis index.
    pub fn longest_axis(&self) -> usize {
        let mut best = 0;
        for k in 1..self.dim() {
            if self.extent(k) > self.extent(best) {
                best = k;
            }
        }
        best
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .enumerate()
            .all(|(k, &v)| self.lo[k] <= v && v <= self.hi[k])
    }

    pub fn diameter(&self) -> f64 {
        cluster_diameter(self)
    }

    pub fn distance(&self, other: &BoundingBox) -> f64 {
        cluster_distance(self, other)
    }
}

/// Euclidean length of the box diagonal.
pub fn cluster_diameter(b: &BoundingBox) -> f64 {
    b.lo.iter()
        .zip(&b.hi)
        .map(|(l, h)| (h - l) * (h - l))
        .sum::<f64>()
        .sqrt()
}

/// Euclidean distance between two boxes, zero iff they intersect.
pub fn cluster_distance(a: &BoundingBox, b: &BoundingBox) -> f64 {
    a.lo.iter()
        .zip(&a.hi)
        .zip(b.lo.iter().zip(&b.hi))
        .map(|((alo, ahi), (blo, bhi))| {
            let gap = (alo - bhi).max(blo - ahi).max(0.0);
            gap * gap
        })
        .sum::<f64>()
        .sqrt()
}

/// Cut-off criterion `dist(a, b) >= eta * max(diam a, diam b)` with `dist > 0`.
///
/// `eta = f64::INFINITY` makes every pair inadmissible.
pub fn is_admissible(a: &BoundingBox, b: &BoundingBox, eta: f64) -> bool {
    let dist = cluster_distance(a, b);
    let diam = cluster_diameter(a).max(cluster_diameter(b));
    dist > 0.0 && dist >= eta * diam
}

#[derive(Debug, Clone)]
pub struct Cluster {
    pub level: usize,
    /// Half-open range into the tree permutation.
    pub begin: usize,
    pub end: usize,
    pub bbox: BoundingBox,
    pub sons: Option<[usize; 2]>,
    pub parent: Option<usize>,
}

impl Cluster {
    pub fn len(&self) -> usize {
        self.end - self.begin
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.begin
    }

    pub fn is_leaf(&self) -> bool {
        self.sons.is_none()
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.begin..self.end
    }
}

#[derive(Debug, Clone)]
pub struct ClusterTree {
    cloud: PointCloud,
    clusters: Vec<Cluster>,
    /// Tree position -> original point index.
    permutation: Vec<usize>,
    leaf_size: usize,
    depth: usize,
}

impl ClusterTree {
    /// Cardinality-balanced clustering of `cloud`.
    pub fn build(cloud: PointCloud, leaf_size: usize) -> Result<Self> {
        if leaf_size == 0 {
            return Err(Error::InvalidInput("leaf size must be at least 1".into()));
        }
        if cloud.is_empty() {
            return Err(Error::InvalidInput("point cloud is empty".into()));
        }
        let n = cloud.len();
        let mut permutation: Vec<usize> = (0..n).collect();
        let mut clusters = vec![Cluster {
            level: 0,
            begin: 0,
            end: n,
            bbox: BoundingBox::enclosing(&cloud, 0..n),
            sons: None,
            parent: None,
        }];

        // Breadth-first: clusters are appended in level order, so a plain index
        // sweep visits each one after its father.
        let mut next = 0;
        while next < clusters.len() {
            let (begin, end, level) = {
                let c = &clusters[next];
                (c.begin, c.end, c.level)
            };
            let count = end - begin;
            if count > leaf_size {
                let axis = clusters[next].bbox.longest_axis();
                let slice = &mut permutation[begin..end];
                let left = count.div_ceil(2);
                slice.select_nth_unstable_by(left, |&a, &b| {
                    cloud.point(a)[axis]
                        .total_cmp(&cloud.point(b)[axis])
                        .then(a.cmp(&b))
                });
                let mid = begin + left;
                let first = clusters.len();
                for (b, e) in [(begin, mid), (mid, end)] {
                    clusters.push(Cluster {
                        level: level + 1,
                        begin: b,
                        end: e,
                        bbox: BoundingBox::enclosing(&cloud, permutation[b..e].iter().copied()),
                        sons: None,
                        parent: Some(next),
                    });
                }
                clusters[next].sons = Some([first, first + 1]);
            }
            next += 1;
        }
        let depth = clusters.iter().map(|c| c.level).max().unwrap_or(0);
        Ok(Self {
            cloud,
            clusters,
            permutation,
            leaf_size,
            depth,
        })
    }

    pub fn cloud(&self) -> &PointCloud {
        &self.cloud
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn cluster(&self, index: usize) -> &Cluster {
        &self.clusters[index]
    }

    pub fn root(&self) -> &Cluster {
        &self.clusters[0]
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    pub fn leaf_size(&self) -> usize {
        self.leaf_size
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.permutation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.permutation.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.cloud.dim()
    }

    pub fn leaves(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.clusters.len()).filter(|&i| self.clusters[i].is_leaf())
    }

    /// Point at tree position `pos`.
    pub fn tree_point(&self, pos: usize) -> &[f64] {
        self.cloud.point(self.permutation[pos])
    }

    /// Maps point coordinates affinely so that the root box becomes `[-1, 1]^d`.
    /// Degenerate axes map to 0.
    pub fn normalization(&self) -> AffineFrame {
        AffineFrame::from_box(&self.root().bbox)
    }
}

/// Affine map `x -> (x - center) / half_width` per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineFrame {
    pub center: Vec<f64>,
    pub inv_half_width: Vec<f64>,
}

impl AffineFrame {
    pub fn from_box(b: &BoundingBox) -> Self {
        let center = b.center();
        let inv_half_width = (0..b.dim())
            .map(|k| {
                let h = 0.5 * b.extent(k);
                if h > 0.0 {
                    1.0 / h
                } else {
                    0.0
                }
            })
            .collect();
        Self {
            center,
            inv_half_width,
        }
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        for k in 0..x.len() {
            out[k] = (x[k] - self.center[k]) * self.inv_half_width[k];
        }
    }

    /// Image of a box under the map.
    pub fn apply_box(&self, b: &BoundingBox) -> BoundingBox {
        let mut lo = vec![0.0; b.dim()];
        let mut hi = vec![0.0; b.dim()];
        self.apply(&b.lo, &mut lo);
        self.apply(&b.hi, &mut hi);
        BoundingBox::new(lo, hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize) -> PointCloud {
        PointCloud::new(1, (0..n).map(|i| i as f64).collect()).unwrap()
    }

    #[test]
    fn generators() {
        let g = PointCloud::grid(9, 2).unwrap();
        assert_eq!(g.point(0), &[-1.0, -1.0]);
        assert_eq!(g.point(1), &[0.0, -1.0]);
        assert_eq!(g.point(8), &[1.0, 1.0]);
        assert!(PointCloud::grid(10, 2).is_err());
        assert_eq!(PointCloud::grid(1, 3).unwrap().coords(), &[0.0; 3]);
        let u = PointCloud::uniform_cube(100, 3, 5).unwrap();
        assert_eq!(u, PointCloud::uniform_cube(100, 3, 5).unwrap());
        assert_ne!(u, PointCloud::uniform_cube(100, 3, 6).unwrap());
        assert!(u.coords().iter().all(|c| (-1.0..=1.0).contains(c)));
        assert!(PointCloud::uniform_cube(0, 2, 1).is_err());
    }

    #[test]
    fn eight_collinear_points() {
        let tree = ClusterTree::build(line(8), 2).unwrap();
        assert_eq!(tree.depth(), 2);
        assert_eq!(tree.root().range(), 0..8);
        let leaves: Vec<_> = tree.leaves().collect();
        assert_eq!(leaves.len(), 4);
        for l in leaves {
            assert_eq!(tree.cluster(l).len(), 2);
            assert_eq!(tree.cluster(l).level, 2);
        }
        // Median splits on sorted data keep consecutive pairs together.
        let first_leaf = tree.cluster(3);
        let mut pts: Vec<usize> = tree.permutation()[first_leaf.range()].to_vec();
        pts.sort();
        assert_eq!(pts, vec![0, 1]);
    }

    #[test]
    fn single_point() {
        let tree = ClusterTree::build(line(1), 4).unwrap();
        assert_eq!(tree.depth(), 0);
        assert_eq!(tree.clusters().len(), 1);
        assert!(tree.root().is_leaf());
        assert_eq!(tree.root().len(), 1);
    }

    #[test]
    fn unit_square_splits_along_first_axis() {
        let cloud =
            PointCloud::from_points(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]).unwrap();
        let tree = ClusterTree::build(cloud, 1).unwrap();
        let [a, b] = tree.root().sons.unwrap();
        for (son, x) in [(a, 0.0), (b, 1.0)] {
            let c = tree.cluster(son);
            assert_eq!(c.len(), 2);
            assert_eq!(c.bbox.lo[0], x);
            assert_eq!(c.bbox.hi[0], x);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            PointCloud::new(2, vec![]),
            Err(Error::InvalidInput(_))
        ));
        assert!(PointCloud::new(1, vec![f64::NAN]).is_err());
        assert!(PointCloud::new(2, vec![1.0, 2.0, 3.0]).is_err());
        assert!(ClusterTree::build(line(3), 0).is_err());
    }

    #[test]
    fn diameters() {
        let cube = BoundingBox::new(vec![0.0; 3], vec![1.0; 3]);
        assert!((cluster_diameter(&cube) - 3f64.sqrt()).abs() < 1e-15);
        let point = BoundingBox::new(vec![2.0, 3.0], vec![2.0, 3.0]);
        assert_eq!(cluster_diameter(&point), 0.0);
        let rect = BoundingBox::new(vec![0.0, 0.0], vec![3.0, 4.0]);
        assert_eq!(cluster_diameter(&rect), 5.0);
    }

    #[test]
    fn distances() {
        let a = BoundingBox::new(vec![0.0], vec![2.0]);
        let b = BoundingBox::new(vec![1.0], vec![3.0]);
        assert_eq!(cluster_distance(&a, &b), 0.0);
        let a = BoundingBox::new(vec![0.0], vec![1.0]);
        let b = BoundingBox::new(vec![3.0], vec![4.0]);
        assert_eq!(cluster_distance(&a, &b), 2.0);
        assert_eq!(cluster_distance(&b, &a), 2.0);
        let a = BoundingBox::new(vec![0.0, 0.0], vec![1.0, 1.0]);
        let b = BoundingBox::new(vec![2.0, 0.0], vec![3.0, 1.0]);
        assert_eq!(cluster_distance(&a, &b), 1.0);
    }

    #[test]
    fn admissibility() {
        let a = BoundingBox::new(vec![0.0], vec![1.0]);
        let b = BoundingBox::new(vec![3.0], vec![4.0]);
        assert!(!is_admissible(&a, &a, 1.0));
        assert!(is_admissible(&a, &b, 1.0));
        assert!(!is_admissible(&a, &b, 2.5));
        assert!(!is_admissible(&a, &b, f64::INFINITY));
        // Two separated points: diameters vanish, only infinite eta rejects.
        let p = BoundingBox::new(vec![0.0], vec![0.0]);
        let r = BoundingBox::new(vec![1.0], vec![1.0]);
        assert!(is_admissible(&p, &r, 1e6));
        assert!(!is_admissible(&p, &r, f64::INFINITY));
    }

    #[test]
    fn duplicate_points_are_balanced() {
        let cloud = PointCloud::new(1, vec![0.5; 11]).unwrap();
        let tree = ClusterTree::build(cloud, 2).unwrap();
        for c in tree.clusters() {
            if let Some([a, b]) = c.sons {
                assert_eq!(tree.cluster(a).len(), c.len().div_ceil(2));
                assert_eq!(tree.cluster(b).len(), c.len() / 2);
            } else {
                assert!(c.len() <= 2);
            }
        }
    }
}
