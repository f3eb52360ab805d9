use nalgebra::DMatrix;

/// Householder reflectors `H_1 ⋯ H_s` of a QR decomposition together with
/// the column signs that make `diag(R) >= 0`, so that
/// `Q = H_1 ⋯ H_s · diag(sign)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct Reflectors {
    n: usize,
    /// `(k, beta, offset)`: `H = I - beta v vᵀ` with `v` supported on rows
    /// `k..n`, stored at `data[offset..offset + n - k]`.
    steps: Vec<(usize, f64, usize)>,
    data: Vec<f64>,
    flipped: Vec<usize>,
}

impl Reflectors {
    /// `x <- Q x`.
    pub(crate) fn apply(&self, x: &mut [f64]) {
        apply(self.n, &self.steps, &self.data, &self.flipped, x);
    }

    pub(crate) fn to_dense(&self) -> DMatrix<f64> {
        let mut q = DMatrix::<f64>::identity(self.n, self.n);
        for j in 0..self.n {
            self.apply(q.column_mut(j).as_mut_slice());
        }
        q
    }
}

fn reflect(n: usize, (k, beta, off): (usize, f64, usize), data: &[f64], x: &mut [f64]) {
    let v = &data[off..off + n - k];
    let x = &mut x[k..n];
    let s = beta * v.iter().zip(x.iter()).map(|(a, b)| a * b).sum::<f64>();
    for (xi, vi) in x.iter_mut().zip(v) {
        *xi -= s * vi;
    }
}

fn apply_transpose(n: usize, steps: &[(usize, f64, usize)], data: &[f64], flipped: &[usize], x: &mut [f64]) {
    for &step in steps {
        reflect(n, step, data, x);
    }
    for &k in flipped {
        x[k] = -x[k];
    }
}

fn apply(n: usize, steps: &[(usize, f64, usize)], data: &[f64], flipped: &[usize], x: &mut [f64]) {
    for &k in flipped {
        x[k] = -x[k];
    }
    for &step in steps.iter().rev() {
        reflect(n, step, data, x);
    }
}

/// The reflectors of many blocks in one contiguous buffer.
#[derive(Debug, Clone, Default)]
pub(crate) struct PackedReflectors {
    sizes: Vec<usize>,
    step_ptr: Vec<usize>,
    flip_ptr: Vec<usize>,
    steps: Vec<(usize, f64, usize)>,
    flipped: Vec<usize>,
    data: Vec<f64>,
}

impl PackedReflectors {
    /// Packs `blocks` in the given order; slot `i` holds `blocks[i]`.
    pub(crate) fn pack<'a>(blocks: impl IntoIterator<Item = &'a Reflectors>) -> Self {
        let mut p = Self {
            step_ptr: vec![0],
            flip_ptr: vec![0],
            ..Default::default()
        };
        for r in blocks {
            let base = p.data.len();
            p.data.extend_from_slice(&r.data);
            p.steps.extend(r.steps.iter().map(|&(k, beta, off)| (k, beta, off + base)));
            p.flipped.extend_from_slice(&r.flipped);
            p.sizes.push(r.n);
            p.step_ptr.push(p.steps.len());
            p.flip_ptr.push(p.flipped.len());
        }
        p
    }

    fn parts(&self, slot: usize) -> (usize, &[(usize, f64, usize)], &[usize]) {
        (
            self.sizes[slot],
            &self.steps[self.step_ptr[slot]..self.step_ptr[slot + 1]],
            &self.flipped[self.flip_ptr[slot]..self.flip_ptr[slot + 1]],
        )
    }

    pub(crate) fn apply_transpose(&self, slot: usize, x: &mut [f64]) {
        let (n, steps, flipped) = self.parts(slot);
        apply_transpose(n, steps, &self.data, flipped, x);
    }

    pub(crate) fn apply(&self, slot: usize, x: &mut [f64]) {
        let (n, steps, flipped) = self.parts(slot);
        apply(n, steps, &self.data, flipped, x);
    }
}

/// Householder QR `a = q * r` with `diag(r) >= 0`; `q` is returned in
/// factored form.
///
/// Columns whose sub-diagonal part is already zero are left unreflected, so a
/// triangular input with positive diagonal yields `q = I`.
pub(crate) fn householder_reflectors(a: &DMatrix<f64>) -> (Reflectors, DMatrix<f64>) {
    let (n, m) = a.shape();
    let mut r = a.clone();
    let mut refl = Reflectors {
        n,
        ..Default::default()
    };
    let mut w = vec![0.0; m];

    for k in 0..n.min(m) {
        let tail: f64 = (k + 1..n).map(|i| r[(i, k)] * r[(i, k)]).sum();
        if tail == 0.0 {
            continue;
        }
        let x0 = r[(k, k)];
        let norm = (x0 * x0 + tail).sqrt();
        let alpha = if x0 > 0.0 { -norm } else { norm };
        let off = refl.data.len();
        refl.data.push(x0 - alpha);
        refl.data.extend((k + 1..n).map(|i| r[(i, k)]));
        let v = &refl.data[off..];
        let beta = 2.0 / (v[0] * v[0] + tail);

        // r <- (I - beta v vᵀ) r on rows k.., columns k+1..
        for j in k + 1..m {
            w[j] = beta * v.iter().enumerate().map(|(l, vl)| vl * r[(k + l, j)]).sum::<f64>();
        }
        for j in k + 1..m {
            for (l, vl) in v.iter().enumerate() {
                r[(k + l, j)] -= vl * w[j];
            }
        }
        r[(k, k)] = alpha;
        for i in k + 1..n {
            r[(i, k)] = 0.0;
        }
        refl.steps.push((k, beta, off));
    }

    for k in 0..n.min(m) {
        if r[(k, k)] < 0.0 {
            for j in k..m {
                r[(k, j)] = -r[(k, j)];
            }
            refl.flipped.push(k);
        }
    }
    (refl, r)
}

/// Full Householder QR `a = q * r` with `q` square orthogonal and
/// `diag(r) >= 0`.
pub(crate) fn householder_qr(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let (refl, r) = householder_reflectors(a);
    (refl.to_dense(), r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs(m: &DMatrix<f64>) -> f64 {
        m.iter().fold(0.0f64, |a, &b| a.max(b.abs()))
    }

    #[test]
    fn reproduces_input() {
        let a = DMatrix::from_fn(7, 4, |i, j| ((i * 3 + j * 5) % 7) as f64 - 2.5 + 0.1 * j as f64);
        let (q, r) = householder_qr(&a);
        assert!(max_abs(&(q.transpose() * &q - DMatrix::identity(7, 7))) < 1e-13);
        assert!(max_abs(&(&q * &r - &a)) < 1e-12);
        for j in 0..4 {
            for i in j + 1..7 {
                assert_eq!(r[(i, j)], 0.0);
            }
            assert!(r[(j, j)] >= 0.0);
        }
    }

    #[test]
    fn wide_input() {
        let a = DMatrix::from_fn(3, 5, |i, j| (i + 1) as f64 * (j as f64 - 1.5).powi(i as i32));
        let (q, r) = householder_qr(&a);
        assert!(max_abs(&(&q * &r - &a)) < 1e-12);
        assert!(max_abs(&(q.transpose() * &q - DMatrix::identity(3, 3))) < 1e-13);
    }

    #[test]
    fn factored_form_matches_dense() {
        let a = DMatrix::from_fn(9, 4, |i, j| ((i * 7 + j * 3) % 11) as f64 - 4.0);
        let (refl, r) = householder_reflectors(&a);
        let q = refl.to_dense();
        assert!(max_abs(&(&q * &r - &a)) < 1e-12);
        let x: Vec<f64> = (0..9).map(|i| (i as f64).cos()).collect();
        let packed = PackedReflectors::pack([&Reflectors::default(), &refl]);
        let mut y = x.clone();
        packed.apply_transpose(1, &mut y);
        let expected = q.transpose() * nalgebra::DVector::from_column_slice(&x);
        assert!(y.iter().zip(expected.iter()).all(|(a, b)| (a - b).abs() < 1e-13));
        packed.apply(1, &mut y);
        assert!(y.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-13));
    }
}
