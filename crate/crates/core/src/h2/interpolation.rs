//! Tensor Chebyshev interpolation on bounding boxes.
//!
//! Grid points are numbered with axis 0 varying fastest. An axis on which a
//! box has zero width collapses all its nodes to one coordinate; there every
//! Lagrange factor is `1/(p+1)`, which keeps the basis a partition of unity
//! and interpolation of functions restricted to the box exact.

use nalgebra::DMatrix;

use crate::cluster_tree::BoundingBox;
use crate::kernels::KernelConfig;

/// First-kind Chebyshev nodes `cos((2k+1)π/(2p+2))` on `[-1, 1]`.
pub fn chebyshev_nodes(p: usize) -> Vec<f64> {
    (0..=p)
        .map(|k| ((2 * k + 1) as f64 * std::f64::consts::PI / (2 * p + 2) as f64).cos())
        .collect()
}

/// Barycentric weights of the first-kind Chebyshev nodes.
fn barycentric_weights(p: usize) -> Vec<f64> {
    (0..=p)
        .map(|k| {
            let s = ((2 * k + 1) as f64 * std::f64::consts::PI / (2 * p + 2) as f64).sin();
            if k % 2 == 0 {
                s
            } else {
                -s
            }
        })
        .collect()
}

/// Interpolation of fixed degree `p` in `d` dimensions.
#[derive(Debug, Clone)]
pub struct InterpolationScheme {
    pub degree: usize,
    pub dim: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl InterpolationScheme {
    pub fn new(degree: usize, dim: usize) -> Self {
        Self {
            degree,
            dim,
            nodes: chebyshev_nodes(degree),
            weights: barycentric_weights(degree),
        }
    }

    /// `(p+1)^d`.
    pub fn n_points(&self) -> usize {
        (self.degree + 1).pow(self.dim as u32)
    }

    fn axis_node(&self, b: &BoundingBox, axis: usize, k: usize) -> f64 {
        let c = 0.5 * (b.lo[axis] + b.hi[axis]);
        let h = 0.5 * (b.hi[axis] - b.lo[axis]);
        c + h * self.nodes[k]
    }

    /// Tensor grid in `b`, one row per point.
    pub fn points(&self, b: &BoundingBox) -> Vec<Vec<f64>> {
        let m = self.degree + 1;
        (0..self.n_points())
            .map(|t| {
                let mut rest = t;
                (0..self.dim)
                    .map(|axis| {
                        let k = rest % m;
                        rest /= m;
                        self.axis_node(b, axis, k)
                    })
                    .collect()
            })
            .collect()
    }

    /// All 1D Lagrange polynomials of `axis` of box `b` at coordinate `x`.
    fn lagrange_1d(&self, b: &BoundingBox, axis: usize, x: f64, out: &mut [f64]) {
        let m = self.degree + 1;
        let h = 0.5 * (b.hi[axis] - b.lo[axis]);
        if h <= 0.0 {
            out[..m].fill(1.0 / m as f64);
            return;
        }
        let c = 0.5 * (b.lo[axis] + b.hi[axis]);
        let t = (x - c) / h;
        for k in 0..m {
            if t == self.nodes[k] {
                out[..m].fill(0.0);
                out[k] = 1.0;
                return;
            }
        }
        let mut sum = 0.0;
        for k in 0..m {
            let v = self.weights[k] / (t - self.nodes[k]);
            out[k] = v;
            sum += v;
        }
        for v in &mut out[..m] {
            *v /= sum;
        }
    }

    /// `L_s(x)` for every grid point `s` of box `b`.
    pub fn lagrange(&self, b: &BoundingBox, x: &[f64], out: &mut [f64]) {
        let m = self.degree + 1;
        let mut axis_vals = vec![0.0; m * self.dim];
        for axis in 0..self.dim {
            self.lagrange_1d(b, axis, x[axis], &mut axis_vals[axis * m..(axis + 1) * m]);
        }
        for (t, o) in out[..self.n_points()].iter_mut().enumerate() {
            let mut rest = t;
            let mut v = 1.0;
            for axis in 0..self.dim {
                v *= axis_vals[axis * m + rest % m];
                rest /= m;
            }
            *o = v;
        }
    }

    /// `T_{s,t} = L_s^parent(ξ_t^son)`.
    pub fn transfer_matrix(&self, parent: &BoundingBox, son: &BoundingBox) -> DMatrix<f64> {
        let np = self.n_points();
        let mut t = DMatrix::zeros(np, np);
        let mut vals = vec![0.0; np];
        for (col, xi) in self.points(son).iter().enumerate() {
            self.lagrange(parent, xi, &mut vals);
            t.column_mut(col).copy_from_slice(&vals);
        }
        t
    }

    /// `S_{s,t} = k(ξ_s^a, ξ_t^b)`.
    pub fn coupling_matrix(&self, cfg: &KernelConfig, a: &BoundingBox, b: &BoundingBox) -> DMatrix<f64> {
        let pa = self.points(a);
        let pb = self.points(b);
        DMatrix::from_fn(pa.len(), pb.len(), |s, t| cfg.eval(&pa[s], &pb[t]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelFamily;

    fn bx(lo: &[f64], hi: &[f64]) -> BoundingBox {
        BoundingBox::new(lo.to_vec(), hi.to_vec())
    }

    #[test]
    fn node_examples() {
        let s = InterpolationScheme::new(0, 2);
        assert_eq!(s.points(&bx(&[0.0, 2.0], &[1.0, 4.0])), vec![vec![0.5, 3.0]]);
        let s = InterpolationScheme::new(1, 1);
        let pts = s.points(&bx(&[-1.0], &[1.0]));
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((pts[0][0] - h).abs() < 1e-15 && (pts[1][0] + h).abs() < 1e-15);
        let s = InterpolationScheme::new(1, 2);
        let pts = s.points(&bx(&[-1.0, -1.0], &[1.0, 1.0]));
        assert_eq!(pts.len(), 4);
        assert_eq!(pts[0][1], pts[1][1]);
        assert_eq!(pts[0][0], pts[2][0]);
        assert_ne!(pts[0][0], pts[1][0]);
    }

    #[test]
    fn lagrange_is_cardinal_and_partition_of_unity() {
        let s = InterpolationScheme::new(4, 2);
        let b = bx(&[0.0, -2.0], &[3.0, 1.0]);
        let mut vals = vec![0.0; s.n_points()];
        for (t, xi) in s.points(&b).iter().enumerate() {
            s.lagrange(&b, xi, &mut vals);
            for (u, v) in vals.iter().enumerate() {
                let expected = if u == t { 1.0 } else { 0.0 };
                assert!((v - expected).abs() < 1e-12);
            }
        }
        s.lagrange(&b, &[0.3, 0.77], &mut vals);
        assert!((vals.iter().sum::<f64>() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn tensor_polynomials_reproduced() {
        let p = 3;
        let s = InterpolationScheme::new(p, 2);
        let b = bx(&[-0.5, 1.0], &[2.0, 1.5]);
        let f = |x: &[f64]| (1.0 + x[0] - 2.0 * x[0].powi(3)) * (0.5 - x[1] + x[1] * x[1] * x[1]);
        let nodes = s.points(&b);
        let fv: Vec<f64> = nodes.iter().map(|x| f(x)).collect();
        let mut vals = vec![0.0; s.n_points()];
        for x in [[0.0, 1.2], [1.9, 1.01], [-0.4, 1.49]] {
            s.lagrange(&b, &x, &mut vals);
            let interp: f64 = vals.iter().zip(&fv).map(|(a, b)| a * b).sum();
            assert!((interp - f(&x)).abs() < 1e-10);
        }
    }

    #[test]
    fn transfer_reproduces_parent_polynomials() {
        let s = InterpolationScheme::new(3, 2);
        let parent = bx(&[0.0, 0.0], &[2.0, 1.0]);
        let son = bx(&[0.2, 0.1], &[0.9, 0.8]);
        let t = s.transfer_matrix(&parent, &son);
        let mut lp = vec![0.0; 16];
        let mut ls = vec![0.0; 16];
        let x = [0.5, 0.3];
        s.lagrange(&parent, &x, &mut lp);
        s.lagrange(&son, &x, &mut ls);
        // L^parent(x) = T L^son(x).
        let via = &t * nalgebra::DVector::from_vec(ls);
        for i in 0..16 {
            assert!((via[i] - lp[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn degenerate_axis() {
        let s = InterpolationScheme::new(2, 2);
        let parent = bx(&[0.0, 1.0], &[1.0, 1.0]);
        let son = bx(&[0.0, 1.0], &[0.5, 1.0]);
        let mut vals = vec![0.0; 9];
        s.lagrange(&parent, &[0.25, 1.0], &mut vals);
        assert!((vals.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        // f(x) = x0^2 is interpolated exactly on the segment.
        let fv: Vec<f64> = s.points(&parent).iter().map(|x| x[0] * x[0]).collect();
        let v: f64 = vals.iter().zip(&fv).map(|(a, b)| a * b).sum();
        assert!((v - 0.0625).abs() < 1e-14);
        let t = s.transfer_matrix(&parent, &son);
        assert!(t.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn coupling_examples() {
        let cfg = KernelConfig::new(KernelFamily::Matern12, 1.0).unwrap();
        let s = InterpolationScheme::new(0, 1);
        let a = bx(&[0.0], &[0.0]);
        let b = bx(&[1.0], &[1.0]);
        assert_eq!(s.coupling_matrix(&cfg, &a, &a)[(0, 0)], 1.0);
        assert!((s.coupling_matrix(&cfg, &a, &b)[(0, 0)] - (-1.0f64).exp()).abs() < 1e-15);
        let s = InterpolationScheme::new(2, 2);
        let a = bx(&[0.0, 0.0], &[1.0, 0.5]);
        let b = bx(&[2.0, 1.0], &[2.5, 3.0]);
        assert_eq!(s.coupling_matrix(&cfg, &a, &b), s.coupling_matrix(&cfg, &b, &a).transpose());
    }
}
