//! Samplet compression of kernel matrices with an H² far field.
//!
//! Blocks of admissible cluster pairs are approximated by tensor Chebyshev
//! interpolation, `[V_Φ; V_Σ] S [V_Φ'; V_Σ']ᵀ`, with nested multiscale
//! cluster bases; all other blocks are computed exactly from the kernel
//! and the two-scale transforms. The sweep runs column by column in
//! post-order and reuses the blocks of leaf rows computed for son columns.
//! Only the lower triangle is assembled.

mod interpolation;
mod oracle;

pub use interpolation::{chebyshev_nodes, InterpolationScheme};
pub use oracle::{dense_compressed_oracle, dense_samplet_matrix, ORACLE_CAP};

use std::collections::HashMap;
use std::time::Instant;

use nalgebra::DMatrix;

use crate::basis::SampletBasis;
use crate::cluster_tree::{is_admissible, ClusterTree};
use crate::kernels::KernelConfig;
use crate::sparse::SparseSym;
use crate::{Error, Result};

/// Compression parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct H2Params {
    /// Cut-off parameter of the admissibility condition. `f64::INFINITY`
    /// makes every pair inadmissible, so the whole matrix is computed
    /// exactly.
    pub eta: f64,
    /// Interpolation degree per axis.
    pub degree: usize,
    /// Off-diagonal entries with `|v| < epsilon` are dropped.
    pub epsilon: f64,
}

impl Default for H2Params {
    fn default() -> Self {
        Self {
            eta: 1.25,
            degree: 3,
            epsilon: 1e-3,
        }
    }
}

impl H2Params {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) {
            return Err(Error::InvalidInput(format!("eta must be positive, got {}", self.eta)));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "epsilon must be finite and >= 0, got {}",
                self.epsilon
            )));
        }
        if self.degree > 10 {
            return Err(Error::InvalidInput(format!(
                "interpolation degree {} is above the supported maximum 10",
                self.degree
            )));
        }
        Ok(())
    }
}

/// `[V_Φ; V_Σ]` of every cluster, `n_in x (p+1)^d`, rows in the order of the
/// cluster's two-scale transform.
#[derive(Debug, Clone)]
pub struct MultiscaleClusterBasis {
    v: Vec<DMatrix<f64>>,
}

impl MultiscaleClusterBasis {
    pub fn new(basis: &SampletBasis, scheme: &InterpolationScheme) -> Self {
        let tree = basis.tree();
        let np = scheme.n_points();
        let mut v: Vec<DMatrix<f64>> = vec![DMatrix::zeros(0, 0); tree.clusters().len()];
        let mut row = vec![0.0; np];
        for c in (0..tree.clusters().len()).rev() {
            let cluster = tree.cluster(c);
            let block = basis.block(c);
            let stacked = match cluster.sons {
                None => {
                    let mut vd = DMatrix::zeros(cluster.len(), np);
                    for (i, pos) in cluster.range().enumerate() {
                        scheme.lagrange(&cluster.bbox, tree.tree_point(pos), &mut row);
                        for (s, &val) in row.iter().enumerate() {
                            vd[(i, s)] = val;
                        }
                    }
                    vd
                }
                Some(sons) => {
                    let mut st = DMatrix::zeros(block.size(), np);
                    let mut at = 0;
                    for s in sons {
                        let ns = basis.block(s).n_scaling;
                        let t = scheme.transfer_matrix(&cluster.bbox, &tree.cluster(s).bbox);
                        let part = v[s].rows(0, ns) * t.transpose();
                        st.rows_mut(at, ns).copy_from(&part);
                        at += ns;
                    }
                    st
                }
            };
            v[c] = block.q.tr_mul(&stacked);
        }
        Self { v }
    }

    /// `[V_Φ; V_Σ]` of `cluster`.
    pub fn get(&self, cluster: usize) -> &DMatrix<f64> {
        &self.v[cluster]
    }
}

/// Evaluates blocks `[Q_Φ, Q_Σ]ᵀ K_{ν,ν'} [Q_Φ', Q_Σ']` of the kernel matrix.
pub struct BlockEvaluator<'a> {
    basis: &'a SampletBasis,
    cfg: KernelConfig,
    scheme: InterpolationScheme,
    cluster_basis: MultiscaleClusterBasis,
    eta: f64,
}

impl<'a> BlockEvaluator<'a> {
    pub fn new(basis: &'a SampletBasis, cfg: KernelConfig, degree: usize, eta: f64) -> Self {
        let scheme = InterpolationScheme::new(degree, basis.tree().dim());
        let cluster_basis = MultiscaleClusterBasis::new(basis, &scheme);
        Self {
            basis,
            cfg,
            scheme,
            cluster_basis,
            eta,
        }
    }

    fn tree(&self) -> &ClusterTree {
        self.basis.tree()
    }

    pub fn admissible(&self, a: usize, b: usize) -> bool {
        is_admissible(&self.tree().cluster(a).bbox, &self.tree().cluster(b).bbox, self.eta)
    }

    /// Far-field approximation `V S V'ᵀ`.
    pub fn far_field(&self, a: usize, b: usize) -> DMatrix<f64> {
        let tree = self.tree();
        let s = self
            .scheme
            .coupling_matrix(&self.cfg, &tree.cluster(a).bbox, &tree.cluster(b).bbox);
        let va = self.cluster_basis.get(a);
        let vb = self.cluster_basis.get(b);
        (va * s) * vb.transpose()
    }

    /// Exact block of two leaves.
    pub fn leaf_block(&self, a: usize, b: usize) -> DMatrix<f64> {
        let tree = self.tree();
        let (ca, cb) = (tree.cluster(a), tree.cluster(b));
        let k = DMatrix::from_fn(ca.len(), cb.len(), |i, j| {
            self.cfg
                .eval(tree.tree_point(ca.begin + i), tree.tree_point(cb.begin + j))
        });
        self.basis.block(a).q.tr_mul(&k) * &self.basis.block(b).q
    }

    /// `[Q_Φ, Q_Σ]ᵀ [B_1^Φ; B_2^Φ]` from the blocks of the row sons.
    fn combine_rows(&self, cluster: usize, parts: [&DMatrix<f64>; 2]) -> DMatrix<f64> {
        let sons = self.tree().cluster(cluster).sons.expect("non-leaf");
        let n0 = self.basis.block(sons[0]).n_scaling;
        let n1 = self.basis.block(sons[1]).n_scaling;
        let cols = parts[0].ncols();
        let mut st = DMatrix::zeros(n0 + n1, cols);
        st.rows_mut(0, n0).copy_from(&parts[0].rows(0, n0));
        st.rows_mut(n0, n1).copy_from(&parts[1].rows(0, n1));
        self.basis.block(cluster).q.tr_mul(&st)
    }

    /// `[B_1^Φ, B_2^Φ] [Q_Φ', Q_Σ']` from the blocks of the column sons.
    fn combine_cols(&self, cluster: usize, parts: [&DMatrix<f64>; 2]) -> DMatrix<f64> {
        let sons = self.tree().cluster(cluster).sons.expect("non-leaf");
        let n0 = self.basis.block(sons[0]).n_scaling;
        let n1 = self.basis.block(sons[1]).n_scaling;
        let rows = parts[0].nrows();
        let mut st = DMatrix::zeros(rows, n0 + n1);
        st.columns_mut(0, n0).copy_from(&parts[0].columns(0, n0));
        st.columns_mut(n0, n1).copy_from(&parts[1].columns(0, n1));
        st * &self.basis.block(cluster).q
    }

    /// The block of `(a, b)` by recursion over both cluster trees.
    pub fn block(&self, a: usize, b: usize) -> DMatrix<f64> {
        if self.admissible(a, b) {
            return self.far_field(a, b);
        }
        let tree = self.tree();
        match (tree.cluster(a).sons, tree.cluster(b).sons) {
            (None, None) => self.leaf_block(a, b),
            (None, Some(sb)) => {
                let p0 = self.block(a, sb[0]);
                let p1 = self.block(a, sb[1]);
                self.combine_cols(b, [&p0, &p1])
            }
            (Some(sa), None) => {
                let p0 = self.block(sa[0], b);
                let p1 = self.block(sa[1], b);
                self.combine_rows(a, [&p0, &p1])
            }
            (Some(sa), Some(sb)) => {
                let mut rows = Vec::with_capacity(2);
                for s in sa {
                    let p0 = self.block(s, sb[0]);
                    let p1 = self.block(s, sb[1]);
                    rows.push(self.combine_cols(b, [&p0, &p1]));
                }
                self.combine_rows(a, [&rows[0], &rows[1]])
            }
        }
    }
}

/// Counters of one assembly.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AssemblyStats {
    /// Cluster pairs whose block was formed by the sweep.
    pub visited_pairs: usize,
    pub admissible_pairs: usize,
    /// Largest total size of blocks held for reuse at any time.
    pub peak_block_bytes: usize,
    pub assembly_seconds: f64,
}

/// `K^Σ_ε` in samplet ordering.
#[derive(Debug, Clone)]
pub struct CompressedKernelMatrix {
    pub matrix: SparseSym,
    pub kernel: KernelConfig,
    pub params: H2Params,
    pub stats: AssemblyStats,
}

impl CompressedKernelMatrix {
    pub fn size(&self) -> usize {
        self.matrix.size()
    }

    pub fn anz(&self) -> f64 {
        self.matrix.anz()
    }
}

struct Sweep<'a, 'b> {
    eval: &'b BlockEvaluator<'a>,
    epsilon: f64,
    stored: Vec<Option<HashMap<usize, DMatrix<f64>>>>,
    bytes: usize,
    stats: AssemblyStats,
    triplets: Vec<(usize, usize, f64)>,
}

fn block_bytes(m: &DMatrix<f64>) -> usize {
    m.len() * std::mem::size_of::<f64>()
}

impl Sweep<'_, '_> {
    fn basis(&self) -> &SampletBasis {
        self.eval.basis
    }

    /// Global index of local row/column `k` of `cluster`, if it is a basis
    /// element (a samplet, or a scaling function of the root).
    fn global(&self, cluster: usize, k: usize) -> Option<usize> {
        let b = self.basis().block(cluster);
        if k >= b.n_scaling {
            Some(b.samplet_offset + k - b.n_scaling)
        } else if cluster == 0 {
            Some(k)
        } else {
            None
        }
    }

    fn emit(&mut self, row: usize, col: usize, block: &DMatrix<f64>) {
        let rows: Vec<Option<usize>> = (0..block.nrows()).map(|k| self.global(row, k)).collect();
        for l in 0..block.ncols() {
            let Some(gc) = self.global(col, l) else { continue };
            for (k, gr) in rows.iter().enumerate() {
                let Some(gr) = *gr else { continue };
                if gr < gc {
                    continue;
                }
                let v = block[(k, l)];
                if gr == gc || v.abs() >= self.epsilon {
                    self.triplets.push((gr, gc, v));
                }
            }
        }
    }

    fn setup_column(&mut self, col: usize) {
        let sons = self.basis().tree().cluster(col).sons;
        if let Some(sons) = sons {
            for s in sons {
                self.setup_column(s);
            }
        }
        let mut store = HashMap::new();
        self.setup_row(0, col, &mut store);
        self.stored[col] = Some(store);
        if let Some(sons) = sons {
            for s in sons {
                if let Some(m) = self.stored[s].take() {
                    self.bytes -= m.values().map(block_bytes).sum::<usize>();
                }
            }
        }
    }

    fn setup_row(&mut self, row: usize, col: usize, store: &mut HashMap<usize, DMatrix<f64>>) -> DMatrix<f64> {
        self.stats.visited_pairs += 1;
        let eval = self.eval;
        let tree = eval.basis.tree();
        let result = match (tree.cluster(row).sons, tree.cluster(col).sons) {
            (Some(sons), _) => {
                let mut parts = Vec::with_capacity(2);
                for s in sons {
                    if self.eval.admissible(s, col) {
                        self.stats.visited_pairs += 1;
                        self.stats.admissible_pairs += 1;
                        let b = self.eval.far_field(s, col);
                        self.emit(s, col, &b);
                        parts.push(b);
                    } else {
                        parts.push(self.setup_row(s, col, store));
                    }
                }
                self.eval.combine_rows(row, [&parts[0], &parts[1]])
            }
            (None, None) => self.eval.leaf_block(row, col),
            (None, Some(col_sons)) => {
                let mut parts = Vec::with_capacity(2);
                for s in col_sons {
                    let reuse = if self.eval.admissible(row, s) {
                        None
                    } else {
                        self.stored[s].as_ref().and_then(|m| m.get(&row)).cloned()
                    };
                    parts.push(reuse.unwrap_or_else(|| self.eval.block(row, s)));
                }
                let b = self.eval.combine_cols(col, [&parts[0], &parts[1]]);
                self.bytes += block_bytes(&b);
                self.stats.peak_block_bytes = self.stats.peak_block_bytes.max(self.bytes);
                store.insert(row, b.clone());
                b
            }
        };
        if tree.cluster(row).is_leaf() && tree.cluster(col).is_leaf() {
            self.bytes += block_bytes(&result);
            self.stats.peak_block_bytes = self.stats.peak_block_bytes.max(self.bytes);
            store.insert(row, result.clone());
        }
        self.emit(row, col, &result);
        result
    }
}

/// Assembles `K^Σ_ε` for the samplet basis `basis`.
pub fn assemble_compressed_kernel(
    basis: &SampletBasis,
    kernel: &KernelConfig,
    params: &H2Params,
) -> Result<CompressedKernelMatrix> {
    params.validate()?;
    kernel.validate()?;
    let start = Instant::now();
    let eval = BlockEvaluator::new(basis, *kernel, params.degree, params.eta);
    let mut sweep = Sweep {
        eval: &eval,
        epsilon: params.epsilon,
        stored: vec![None; basis.tree().clusters().len()],
        bytes: 0,
        stats: AssemblyStats::default(),
        triplets: Vec::new(),
    };
    sweep.setup_column(0);
    let mut stats = sweep.stats;
    let matrix = SparseSym::from_lower_triplets(basis.len(), std::mem::take(&mut sweep.triplets))?;
    stats.assembly_seconds = start.elapsed().as_secs_f64();
    Ok(CompressedKernelMatrix {
        matrix,
        kernel: *kernel,
        params: *params,
        stats,
    })
}

/// Cluster pairs of the block tree: recursion from `(root, root)` stops at
/// admissible pairs and at pairs of leaves.
pub fn block_tree_pairs(tree: &ClusterTree, eta: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut stack = vec![(0usize, 0usize)];
    while let Some((a, b)) = stack.pop() {
        out.push((a, b));
        if is_admissible(&tree.cluster(a).bbox, &tree.cluster(b).bbox, eta) {
            continue;
        }
        match (tree.cluster(a).sons, tree.cluster(b).sons) {
            (None, None) => {}
            (None, Some(sb)) => stack.extend(sb.iter().map(|&s| (a, s))),
            (Some(sa), None) => stack.extend(sa.iter().map(|&s| (s, b))),
            (Some(sa), Some(sb)) => {
                for s in sa {
                    stack.extend(sb.iter().map(|&t| (s, t)));
                }
            }
        }
    }
    out
}

/// Number of pairs visited by the pruned block-tree recursion.
pub fn admissible_pair_count(tree: &ClusterTree, eta: f64) -> usize {
    block_tree_pairs(tree, eta).len()
}
