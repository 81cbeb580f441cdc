//! Minimal dense linear algebra for the GP: row-major symmetric matrices,
//! Cholesky factorization and triangular solves. Problem sizes are bounded by
//! the query budget, so cubic algorithms on contiguous buffers are plenty.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::sqrt;

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix,
/// stored dense row-major with the strict upper triangle zeroed.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct CholeskyFactor {
    pub n: usize,
    pub l: Vec<f64>,
}

impl CholeskyFactor {
    /// Factor `a` (n x n row-major, symmetric). Returns `None` if a pivot is
    /// not strictly positive.
    pub fn factor(a: &[f64], n: usize) -> Option<Self> {
        debug_assert_eq!(a.len(), n * n);
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return None;
                    }
                    l[i * n + i] = sqrt(s);
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Some(Self { n, l })
    }

    /// Extend the factor of K to the factor of K with one extra row/column.
    /// `new_col` is the full new column of the extended matrix (length n+1,
    /// last entry the diagonal). Returns `None` if the new pivot fails.
    pub fn append_row(&self, new_col: &[f64]) -> Option<Self> {
        let n = self.n;
        debug_assert_eq!(new_col.len(), n + 1);
        let row = self.solve_lower(&new_col[..n]);
        let pivot = new_col[n] - row.iter().map(|x| x * x).sum::<f64>();
        if pivot <= 0.0 || !pivot.is_finite() {
            return None;
        }
        let m = n + 1;
        let mut l = vec![0.0; m * m];
        for i in 0..n {
            l[i * m..i * m + n].copy_from_slice(&self.l[i * n..i * n + n]);
        }
        l[n * m..n * m + n].copy_from_slice(&row);
        l[n * m + n] = sqrt(pivot);
        Some(Self { n: m, l })
    }

    /// Solve L y = b.
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                y[i] -= self.l[i * n + k] * y[k];
            }
            y[i] /= self.l[i * n + i];
        }
        y
    }

    /// Solve L^T x = b.
    pub fn solve_lower_transpose(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = b.to_vec();
        for i in (0..n).rev() {
            for k in i + 1..n {
                x[i] -= self.l[k * n + i] * x[k];
            }
            x[i] /= self.l[i * n + i];
        }
        x
    }

    /// Solve (L L^T) x = b.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.solve_lower_transpose(&self.solve_lower(b))
    }

    /// Inverse of the factored matrix, dense row-major.
    pub fn inverse(&self) -> Vec<f64> {
        let n = self.n;
        let mut inv = vec![0.0; n * n];
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = self.solve(&e);
            e[j] = 0.0;
            for i in 0..n {
                inv[i * n + j] = col[i];
            }
        }
        inv
    }

    /// Sum of log diagonal entries (half the log determinant).
    pub fn log_diag_sum(&self) -> f64 {
        (0..self.n).map(|i| crate::math::ln(self.l[i * self.n + i])).sum()
    }

    /// Reconstruct L L^T (test support).
    #[cfg(test)]
    pub fn reconstruct(&self) -> Vec<f64> {
        let n = self.n;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..=i.min(j) {
                    s += self.l[i * n + k] * self.l[j * n + k];
                }
                a[i * n + j] = s;
            }
        }
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_matches_hand_example() {
        // [[4,12,-16],[12,37,-43],[-16,-43,98]] has the classic factor
        // [[2,0,0],[6,1,0],[-8,5,3]].
        let a = [4.0, 12.0, -16.0, 12.0, 37.0, -43.0, -16.0, -43.0, 98.0];
        let c = CholeskyFactor::factor(&a, 3).unwrap();
        let expected = [2.0, 0.0, 0.0, 6.0, 1.0, 0.0, -8.0, 5.0, 3.0];
        for (got, want) in c.l.iter().zip(expected.iter()) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn solve_and_inverse_agree() {
        let a = [4.0, 2.0, 0.6, 2.0, 5.0, 1.0, 0.6, 1.0, 3.0];
        let c = CholeskyFactor::factor(&a, 3).unwrap();
        let b = [1.0, -2.0, 0.5];
        let x = c.solve(&b);
        // residual A x - b
        for i in 0..3 {
            let r: f64 = (0..3).map(|j| a[i * 3 + j] * x[j]).sum::<f64>() - b[i];
            assert!(r.abs() < 1e-12);
        }
        let inv = c.inverse();
        for i in 0..3 {
            let xi: f64 = (0..3).map(|j| inv[i * 3 + j] * b[j]).sum();
            assert!((xi - x[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn append_row_matches_full_factorization() {
        let a4 = [
            4.0, 1.0, 0.5, 0.2, //
            1.0, 3.0, 0.7, 0.1, //
            0.5, 0.7, 5.0, 0.3, //
            0.2, 0.1, 0.3, 2.0,
        ];
        let a3: Vec<f64> = (0..3)
            .flat_map(|i| (0..3).map(move |j| a4[i * 4 + j]))
            .collect();
        let c3 = CholeskyFactor::factor(&a3, 3).unwrap();
        let grown = c3.append_row(&[0.2, 0.1, 0.3, 2.0]).unwrap();
        let full = CholeskyFactor::factor(&a4, 4).unwrap();
        for (g, f) in grown.l.iter().zip(full.l.iter()) {
            assert!((g - f).abs() < 1e-12);
        }
    }

    #[test]
    fn indefinite_matrix_rejected() {
        let a = [1.0, 2.0, 2.0, 1.0];
        assert!(CholeskyFactor::factor(&a, 2).is_none());
    }
}
