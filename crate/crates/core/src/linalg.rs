//! Small dense kernels for symmetric positive-definite systems.
//!
//! Matrices are square, row-major `Vec<f64>`. Only the lower triangle of a
//! factor is meaningful; the strict upper triangle is kept at zero.

/// Dot product with four independent accumulators.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `y += a * x`
#[inline]
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Lower-triangular Cholesky factor `L` with `L Lᵀ = A`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    /// Factors the symmetric matrix `a` (only its lower triangle is read).
    /// Returns `None` if a non-positive pivot is met.
    pub fn factor(a: &[f64], n: usize) -> Option<Self> {
        assert_eq!(a.len(), n * n);
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let (row_i, row_j) = if i == j {
                    let r = &l[i * n..i * n + j];
                    (r, r)
                } else {
                    (&l[i * n..i * n + j], &l[j * n..j * n + j])
                };
                let s = a[i * n + j] - dot(row_i, row_j);
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return None;
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Some(Self { n, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Row-major storage of `L`.
    pub fn factor_data(&self) -> &[f64] {
        &self.l
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.l[i * self.n..i * self.n + i + 1]
    }

    /// Solves `L v = b` in place.
    pub fn solve_lower_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let s = b[i] - dot(&self.l[i * n..i * n + i], &b[..i]);
            b[i] = s / self.l[i * n + i];
        }
    }

    /// Solves `Lᵀ x = v` in place.
    pub fn solve_upper_in_place(&self, v: &mut [f64]) {
        let n = self.n;
        for i in (0..n).rev() {
            let xi = v[i] / self.l[i * n + i];
            v[i] = xi;
            let (head, _) = v.split_at_mut(i);
            axpy(-xi, &self.l[i * n..i * n + i], head);
        }
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_lower_in_place(&mut x);
        self.solve_upper_in_place(&mut x);
        x
    }

    /// `L⁻¹`, built row by row from forward solves against unit vectors.
    pub fn inverse_factor(&self) -> Vec<f64> {
        let n = self.n;
        let mut inv = vec![0.0; n * n];
        for i in 0..n {
            let mut row = vec![0.0; i + 1];
            row[i] = 1.0;
            for k in 0..i {
                let c = self.l[i * n + k];
                if c != 0.0 {
                    axpy(-c, &inv[k * n..k * n + k + 1], &mut row[..k + 1]);
                }
            }
            let d = self.l[i * n + i];
            for (dst, v) in inv[i * n..i * n + i + 1].iter_mut().zip(&row) {
                *dst = v / d;
            }
        }
        inv
    }

    /// log det A
    pub fn log_det(&self) -> f64 {
        (0..self.n).map(|i| 2.0 * self.l[i * self.n + i].ln()).sum()
    }
}

/// `diag(A⁻¹)` from `L⁻¹`: `[A⁻¹]_jj = Σ_{i ≥ j} (L⁻¹)_ij²`.
pub fn inverse_diagonal(inv_factor: &[f64], n: usize) -> Vec<f64> {
    let mut diag = vec![0.0; n];
    for i in 0..n {
        for (d, v) in diag[..=i].iter_mut().zip(&inv_factor[i * n..i * n + i + 1]) {
            *d += v * v;
        }
    }
    diag
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spd(n: usize) -> Vec<f64> {
        // A = B Bᵀ + n I for a fixed B
        let b: Vec<f64> = (0..n * n)
            .map(|k| ((k * 7 + 3) % 11) as f64 / 11.0 - 0.4)
            .collect();
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = (0..n).map(|k| b[i * n + k] * b[j * n + k]).sum::<f64>();
            }
            a[i * n + i] += n as f64;
        }
        a
    }

    #[test]
    fn factor_reconstructs() {
        let n = 9;
        let a = spd(n);
        let c = Cholesky::factor(&a, n).unwrap();
        let l = c.factor_data();
        for i in 0..n {
            for j in 0..n {
                let v: f64 = (0..n).map(|k| l[i * n + k] * l[j * n + k]).sum();
                assert_relative_eq!(v, a[i * n + j], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn solve_and_inverse() {
        let n = 7;
        let a = spd(n);
        let c = Cholesky::factor(&a, n).unwrap();
        let b: Vec<f64> = (0..n).map(|i| i as f64 - 2.5).collect();
        let x = c.solve(&b);
        for i in 0..n {
            let r: f64 = (0..n).map(|j| a[i * n + j] * x[j]).sum();
            assert_relative_eq!(r, b[i], epsilon = 1e-12);
        }
        let inv = c.inverse_factor();
        let diag = inverse_diagonal(&inv, n);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let col = c.solve(&e);
            assert_relative_eq!(diag[j], col[j], max_relative = 1e-12);
        }
    }

    #[test]
    fn rejects_indefinite() {
        let a = vec![1.0, 2.0, 2.0, 1.0];
        assert!(Cholesky::factor(&a, 2).is_none());
    }

    #[test]
    fn dot_handles_remainders() {
        let a: Vec<f64> = (0..11).map(|i| i as f64).collect();
        assert_eq!(dot(&a, &a), (0..11).map(|i| (i * i) as f64).sum::<f64>());
    }
}
