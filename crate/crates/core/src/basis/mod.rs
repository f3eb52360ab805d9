//! Samplet basis on a cluster tree.
//!
//! Every cluster owns an orthogonal two-scale matrix `Q = [Q_Φ | Q_Σ]` that
//! maps its incoming functions (points at a leaf, the sons' scaling functions
//! otherwise) to its own scaling functions and samplets. `Q` comes from the
//! QR decomposition of the transposed moment matrix; its trailing columns
//! annihilate all monomials of the moment matrix.
//!
//! Global coefficient ordering: the root's scaling functions come first,
//! followed by the samplets of each cluster in breadth-first cluster order,
//! so coarse levels precede fine ones.

mod qr;

use nalgebra::DMatrix;

use crate::cluster_tree::{AffineFrame, ClusterTree};
use crate::{Error, Result};

pub(crate) use qr::householder_qr;
use qr::{householder_reflectors, PackedReflectors, Reflectors};

/// Dimension `C(q + d, d)` of the polynomials of total degree `<= q` in `d`
/// variables.
pub fn moment_dimension(q: usize, d: usize) -> usize {
    // C(q+d, d) computed incrementally; every intermediate is an integer.
    let mut c = 1usize;
    for i in 1..=d {
        c = c * (q + i) / i;
    }
    c
}

/// Exponents of all monomials of total degree `<= degree` in `d` variables,
/// graded lexicographically: by total degree, then by decreasing exponent of
/// the first variable, then the second, and so on.
pub fn monomial_exponents(d: usize, degree: usize) -> Vec<Vec<usize>> {
    fn with_total(d: usize, total: usize, out: &mut Vec<Vec<usize>>, prefix: &mut Vec<usize>) {
        if d == 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for a in (0..=total).rev() {
            prefix.push(a);
            with_total(d - 1, total - a, out, prefix);
            prefix.pop();
        }
    }
    let mut out = Vec::with_capacity(moment_dimension(degree, d));
    let mut prefix = Vec::with_capacity(d);
    for t in 0..=degree {
        with_total(d, t, &mut out, &mut prefix);
    }
    out
}

/// Evaluates all monomials of degree `<= degree` at `x` in graded-lex order.
pub fn eval_monomials(x: &[f64], exponents: &[Vec<usize>], degree: usize, out: &mut [f64]) {
    let d = x.len();
    let mut powers = vec![1.0; d * (degree + 1)];
    for k in 0..d {
        for e in 1..=degree {
            powers[k * (degree + 1) + e] = powers[k * (degree + 1) + e - 1] * x[k];
        }
    }
    for (row, alpha) in exponents.iter().enumerate() {
        out[row] = alpha
            .iter()
            .enumerate()
            .map(|(k, &a)| powers[k * (degree + 1) + a])
            .product();
    }
}

/// Vanishing-moment parameters for a point set of dimension `dim`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MomentSpec {
    /// Samplets on non-leaf clusters have `q + 1` vanishing moments.
    pub q: usize,
    /// Polynomial degree used at the leaves.
    pub q_leaf: usize,
    pub dim: usize,
    pub m_q: usize,
    pub m_qhat: usize,
}

impl MomentSpec {
    /// `q + 1` vanishing moments with the smallest leaf degree `q̂ >= q`
    /// satisfying `m_q̂ >= 2 m_q`.
    pub fn new(q: usize, dim: usize) -> Self {
        let m_q = moment_dimension(q, dim);
        let mut q_leaf = q;
        while moment_dimension(q_leaf, dim) < 2 * m_q {
            q_leaf += 1;
        }
        Self {
            q,
            q_leaf,
            dim,
            m_q,
            m_qhat: moment_dimension(q_leaf, dim),
        }
    }

    pub fn with_leaf_degree(q: usize, q_leaf: usize, dim: usize) -> Result<Self> {
        if q_leaf < q {
            return Err(Error::InvalidInput(format!(
                "leaf degree {q_leaf} is smaller than q = {q}"
            )));
        }
        Ok(Self {
            q,
            q_leaf,
            dim,
            m_q: moment_dimension(q, dim),
            m_qhat: moment_dimension(q_leaf, dim),
        })
    }

    /// Leaf size used when the tree is built for this basis.
    pub fn default_leaf_size(&self) -> usize {
        (2 * self.m_qhat).max(8)
    }
}

/// Monomial moments of the points of a leaf in the normalized frame,
/// `m_degree x |ν|`, columns in tree order.
pub fn leaf_moment_matrix(
    tree: &ClusterTree,
    cluster: usize,
    degree: usize,
    frame: &AffineFrame,
) -> DMatrix<f64> {
    let c = tree.cluster(cluster);
    let d = tree.dim();
    let exps = monomial_exponents(d, degree);
    let mut m = DMatrix::zeros(exps.len(), c.len());
    let mut xt = vec![0.0; d];
    let mut col = vec![0.0; exps.len()];
    for (j, pos) in c.range().enumerate() {
        frame.apply(tree.tree_point(pos), &mut xt);
        eval_monomials(&xt, &exps, degree, &mut col);
        m.column_mut(j).copy_from_slice(&col);
    }
    m
}

/// Orthogonal two-scale matrix of a cluster from its `m x n` moment matrix.
///
/// Returns `Q` (`n x n`) from `moment^T = Q R` and the number `min(m, n)` of
/// leading scaling columns; the remaining columns are samplets.
pub fn two_scale_decomposition(moment: &DMatrix<f64>) -> (DMatrix<f64>, usize) {
    let (q, _) = householder_qr(&moment.transpose());
    (q, moment.nrows().min(moment.ncols()))
}

/// Two-scale transform of one cluster.
#[derive(Debug, Clone)]
pub struct ClusterBasisBlock {
    /// `[Q_Φ | Q_Σ]`, square of size `n_scaling + n_samplets`.
    pub q: DMatrix<f64>,
    pub n_scaling: usize,
    pub n_samplets: usize,
    /// First global index of this cluster's samplets.
    pub samplet_offset: usize,
}

impl ClusterBasisBlock {
    /// Number of incoming functions.
    pub fn size(&self) -> usize {
        self.n_scaling + self.n_samplets
    }
}

/// Owner of a global coefficient index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisIndex {
    RootScaling { local: usize },
    Samplet { cluster: usize, local: usize },
}

impl BasisIndex {
    pub fn cluster(&self) -> usize {
        match *self {
            BasisIndex::RootScaling { .. } => 0,
            BasisIndex::Samplet { cluster, .. } => cluster,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SampletBasis {
    tree: ClusterTree,
    spec: MomentSpec,
    frame: AffineFrame,
    blocks: Vec<ClusterBasisBlock>,
    /// Offset of each cluster's scaling outputs in transform scratch buffers.
    scaling_offset: Vec<usize>,
    scaling_total: usize,
    max_block: usize,
    /// Reflectors of all clusters, slot `i` holding cluster `nc - 1 - i`
    /// so that the forward sweep reads memory sequentially.
    packed: PackedReflectors,
}

impl SampletBasis {
    /// Builds the basis bottom-up; cost is linear in the number of points.
    pub fn new(tree: ClusterTree, spec: MomentSpec) -> Self {
        assert_eq!(
            tree.dim(),
            spec.dim,
            "moment spec dimension must match the point dimension"
        );
        let frame = tree.normalization();
        let nc = tree.clusters().len();
        let mut moments: Vec<Option<DMatrix<f64>>> = vec![None; nc];
        let mut blocks: Vec<Option<ClusterBasisBlock>> = vec![None; nc];
        let mut reflectors_of: Vec<Option<Reflectors>> = vec![None; nc];

        for c in (0..nc).rev() {
            let cluster = tree.cluster(c);
            let (moment, is_leaf) = match cluster.sons {
                None => (leaf_moment_matrix(&tree, c, spec.q_leaf, &frame), true),
                Some([a, b]) => {
                    let ma = moments[a].take().expect("son processed before father");
                    let mb = moments[b].take().expect("son processed before father");
                    let mut m = DMatrix::zeros(spec.m_q, ma.ncols() + mb.ncols());
                    m.columns_mut(0, ma.ncols()).copy_from(&ma);
                    m.columns_mut(ma.ncols(), mb.ncols()).copy_from(&mb);
                    (m, false)
                }
            };
            let (reflectors, r) = householder_reflectors(&moment.transpose());
            let q = reflectors.to_dense();
            let n_in = moment.ncols();
            let n_scaling = moment.nrows().min(n_in);
            // Moments of the outgoing scaling functions: leading block of R^T,
            // truncated to degree q above the leaves.
            let rows = spec.m_q.min(moment.nrows());
            debug_assert!(is_leaf || rows == moment.nrows());
            let mut up = DMatrix::zeros(spec.m_q, n_scaling);
            for j in 0..n_scaling {
                for i in 0..rows {
                    up[(i, j)] = r[(j, i)];
                }
            }
            moments[c] = Some(up);
            blocks[c] = Some(ClusterBasisBlock {
                q,
                n_scaling,
                n_samplets: n_in - n_scaling,
                samplet_offset: 0,
            });
            reflectors_of[c] = Some(reflectors);
        }

        let mut blocks: Vec<ClusterBasisBlock> = blocks.into_iter().map(Option::unwrap).collect();
        let mut offset = blocks[0].n_scaling;
        let mut scaling_offset = Vec::with_capacity(nc);
        let mut scaling_total = 0;
        for b in blocks.iter_mut() {
            b.samplet_offset = offset;
            offset += b.n_samplets;
            scaling_offset.push(scaling_total);
            scaling_total += b.n_scaling;
        }
        assert_eq!(offset, tree.len(), "samplet count must equal the point count");
        let max_block = blocks.iter().map(|b| b.size()).max().unwrap_or(0);
        let packed = PackedReflectors::pack(reflectors_of.iter().rev().map(|r| r.as_ref().expect("every cluster processed")));

        Self {
            tree,
            spec,
            frame,
            blocks,
            scaling_offset,
            scaling_total,
            max_block,
            packed,
        }
    }

    pub fn tree(&self) -> &ClusterTree {
        &self.tree
    }

    pub fn spec(&self) -> &MomentSpec {
        &self.spec
    }

    /// Affine map taking the root box to `[-1, 1]^d`; monomials are evaluated
    /// in these coordinates.
    pub fn frame(&self) -> &AffineFrame {
        &self.frame
    }

    pub fn blocks(&self) -> &[ClusterBasisBlock] {
        &self.blocks
    }

    pub fn block(&self, cluster: usize) -> &ClusterBasisBlock {
        &self.blocks[cluster]
    }

    pub fn len(&self) -> usize {
        self.tree.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tree.is_empty()
    }

    pub fn root_scaling_count(&self) -> usize {
        self.blocks[0].n_scaling
    }

    /// Cluster and local position of a global coefficient index.
    pub fn index_info(&self, global: usize) -> Result<BasisIndex> {
        let n = self.len();
        if global >= n {
            return Err(Error::IndexOutOfRange {
                index: global,
                size: n,
            });
        }
        if global < self.root_scaling_count() {
            return Ok(BasisIndex::RootScaling { local: global });
        }
        let c = self
            .blocks
            .partition_point(|b| b.samplet_offset + b.n_samplets <= global);
        Ok(BasisIndex::Samplet {
            cluster: c,
            local: global - self.blocks[c].samplet_offset,
        })
    }

    /// Bounding box of the support of every basis element, in coefficient
    /// order.
    pub fn support_boxes(&self) -> Vec<crate::BoundingBox> {
        let mut out = vec![self.tree.root().bbox.clone(); self.len()];
        for (c, b) in self.blocks.iter().enumerate() {
            let bbox = &self.tree.cluster(c).bbox;
            for slot in &mut out[b.samplet_offset..b.samplet_offset + b.n_samplets] {
                slot.clone_from(bbox);
            }
        }
        out
    }

    /// Coefficient vector over the Dirac measures (original point order) of
    /// basis element `global`.
    pub fn samplet_as_point_vector(&self, global: usize) -> Result<Vec<f64>> {
        let (cluster, column) = match self.index_info(global)? {
            BasisIndex::RootScaling { local } => (0, local),
            BasisIndex::Samplet { cluster, local } => {
                (cluster, self.blocks[cluster].n_scaling + local)
            }
        };
        let mut local = vec![0.0; self.blocks[cluster].size()];
        local[column] = 1.0;
        let values = self.subtree_inverse(cluster, &local);
        let c = self.tree.cluster(cluster);
        let mut out = vec![0.0; self.len()];
        for (pos, v) in c.range().zip(values) {
            out[self.tree.permutation()[pos]] = v;
        }
        Ok(out)
    }

    /// Transform restricted to the subtree of `cluster`: maps data on the
    /// cluster's points (tree order) to its `[Φ; Σ]` coefficients.
    pub fn subtree_forward(&self, cluster: usize, data: &[f64]) -> Vec<f64> {
        let c = self.tree.cluster(cluster);
        assert_eq!(data.len(), c.len());
        let incoming = match c.sons {
            None => data.to_vec(),
            Some(sons) => {
                let mut v = Vec::with_capacity(self.blocks[cluster].size());
                for s in sons {
                    let sc = self.tree.cluster(s);
                    let part = &data[sc.begin - c.begin..sc.end - c.begin];
                    let out = self.subtree_forward(s, part);
                    v.extend_from_slice(&out[..self.blocks[s].n_scaling]);
                }
                v
            }
        };
        (self.blocks[cluster].q.transpose() * nalgebra::DVector::from_vec(incoming))
            .data
            .into()
    }

    /// Inverse of [`Self::subtree_forward`] when all samplets of proper
    /// descendants vanish.
    pub fn subtree_inverse(&self, cluster: usize, coeffs: &[f64]) -> Vec<f64> {
        let block = &self.blocks[cluster];
        assert_eq!(coeffs.len(), block.size());
        let incoming = &block.q * nalgebra::DVector::from_column_slice(coeffs);
        let c = self.tree.cluster(cluster);
        match c.sons {
            None => incoming.data.into(),
            Some(sons) => {
                let mut out = Vec::with_capacity(c.len());
                let mut at = 0;
                for s in sons {
                    let sb = &self.blocks[s];
                    let mut local = vec![0.0; sb.size()];
                    local[..sb.n_scaling].copy_from_slice(&incoming.as_slice()[at..at + sb.n_scaling]);
                    at += sb.n_scaling;
                    out.extend(self.subtree_inverse(s, &local));
                }
                out
            }
        }
    }

    /// Forward transform of data given in tree order.
    pub(crate) fn forward_tree_order(&self, data: &[f64], out: &mut [f64]) {
        let n = self.len();
        debug_assert_eq!(data.len(), n);
        debug_assert_eq!(out.len(), n);
        let mut scaling = vec![0.0; self.scaling_total];
        let mut x = vec![0.0; self.max_block];
        for c in (0..self.blocks.len()).rev() {
            let cluster = self.tree.cluster(c);
            let block = &self.blocks[c];
            let n_in = block.size();
            match cluster.sons {
                None => x[..n_in].copy_from_slice(&data[cluster.range()]),
                Some(sons) => {
                    let mut at = 0;
                    for s in sons {
                        let ns = self.blocks[s].n_scaling;
                        let off = self.scaling_offset[s];
                        x[at..at + ns].copy_from_slice(&scaling[off..off + ns]);
                        at += ns;
                    }
                }
            }
            self.packed.apply_transpose(self.blocks.len() - 1 - c, &mut x[..n_in]);
            let y = &x[..n_in];
            let ns = block.n_scaling;
            if c == 0 {
                out[..ns].copy_from_slice(&y[..ns]);
            } else {
                let off = self.scaling_offset[c];
                scaling[off..off + ns].copy_from_slice(&y[..ns]);
            }
            out[block.samplet_offset..block.samplet_offset + block.n_samplets]
                .copy_from_slice(&y[ns..n_in]);
        }
    }

    /// Inverse transform producing data in tree order.
    pub(crate) fn inverse_tree_order(&self, coeffs: &[f64], out: &mut [f64]) {
        let n = self.len();
        debug_assert_eq!(coeffs.len(), n);
        debug_assert_eq!(out.len(), n);
        let mut scaling = vec![0.0; self.scaling_total];
        let mut x = vec![0.0; self.max_block];
        let root_ns = self.blocks[0].n_scaling;
        scaling[..root_ns].copy_from_slice(&coeffs[..root_ns]);
        for c in 0..self.blocks.len() {
            let cluster = self.tree.cluster(c);
            let block = &self.blocks[c];
            let n_in = block.size();
            let ns = block.n_scaling;
            let off = self.scaling_offset[c];
            x[..ns].copy_from_slice(&scaling[off..off + ns]);
            x[ns..n_in].copy_from_slice(
                &coeffs[block.samplet_offset..block.samplet_offset + block.n_samplets],
            );
            self.packed.apply(self.blocks.len() - 1 - c, &mut x[..n_in]);
            match cluster.sons {
                None => out[cluster.range()].copy_from_slice(&x[..n_in]),
                Some(sons) => {
                    let mut at = 0;
                    for s in sons {
                        let ns = self.blocks[s].n_scaling;
                        let off = self.scaling_offset[s];
                        scaling[off..off + ns].copy_from_slice(&x[at..at + ns]);
                        at += ns;
                    }
                }
            }
        }
    }
}
