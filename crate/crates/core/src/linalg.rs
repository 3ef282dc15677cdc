//! Dense Cholesky factorization for the small symmetric matrices used here.

/// Lower-triangular factor `L` with `A = L Lᵀ`, stored row-major.
#[derive(Debug, Clone)]
pub(crate) struct Cholesky {
    dim: usize,
    lower: Vec<f64>,
}

/// Pivots below this fraction of their original diagonal entry are treated
/// as zero.
const PIVOT_TOL: f64 = 64.0 * f64::EPSILON;

impl Cholesky {
    /// Factors a symmetric matrix given row-major. Returns `None` unless the
    /// matrix is numerically positive definite.
    pub(crate) fn factor(a: &[f64], dim: usize) -> Option<Self> {
        debug_assert_eq!(a.len(), dim * dim);
        let mut lower = vec![0.0; dim * dim];
        for j in 0..dim {
            let mut pivot = a[j * dim + j];
            for k in 0..j {
                pivot -= lower[j * dim + k] * lower[j * dim + k];
            }
            let scale = a[j * dim + j].abs();
            if !(pivot > PIVOT_TOL * scale) || !pivot.is_finite() {
                return None;
            }
            let ljj = pivot.sqrt();
            lower[j * dim + j] = ljj;
            for i in j + 1..dim {
                let mut v = a[i * dim + j];
                for k in 0..j {
                    v -= lower[i * dim + k] * lower[j * dim + k];
                }
                lower[i * dim + j] = v / ljj;
            }
        }
        Some(Self { dim, lower })
    }

    /// Overwrites `b` with `L⁻¹ b`.
    pub(crate) fn solve_lower_in_place(&self, b: &mut [f64]) {
        let n = self.dim;
        for i in 0..n {
            let mut v = b[i];
            for k in 0..i {
                v -= self.lower[i * n + k] * b[k];
            }
            b[i] = v / self.lower[i * n + i];
        }
    }

    /// `out = L z`.
    pub(crate) fn mul_lower(&self, z: &[f64], out: &mut [f64]) {
        let n = self.dim;
        for i in 0..n {
            out[i] = (0..=i).map(|k| self.lower[i * n + k] * z[k]).sum();
        }
    }

    /// Ratio of the largest to the smallest pivot `L_ii²`.
    pub(crate) fn pivot_ratio(&self) -> f64 {
        let n = self.dim;
        let pivots = (0..n).map(|i| self.lower[i * n + i].powi(2));
        let (lo, hi) = pivots.fold((f64::INFINITY, 0.0f64), |(lo, hi), p| (lo.min(p), hi.max(p)));
        hi / lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factors_and_solves() {
        // A = [[4, 2], [2, 3]] -> L = [[2, 0], [1, sqrt 2]]
        let chol = Cholesky::factor(&[4.0, 2.0, 2.0, 3.0], 2).unwrap();
        let mut b = [2.0, 1.0 + 2f64.sqrt()];
        chol.solve_lower_in_place(&mut b);
        assert!((b[0] - 1.0).abs() < 1e-15 && (b[1] - 1.0).abs() < 1e-15);
        let mut out = [0.0; 2];
        chol.mul_lower(&[1.0, 1.0], &mut out);
        assert!((out[1] - (1.0 + 2f64.sqrt())).abs() < 1e-15);
        assert!((chol.pivot_ratio() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_singular_and_indefinite() {
        assert!(Cholesky::factor(&[1.0, 2.0, 2.0, 4.0], 2).is_none());
        assert!(Cholesky::factor(&[1.0, 3.0, 3.0, 1.0], 2).is_none());
        assert!(Cholesky::factor(&[0.0], 1).is_none());
    }
}
