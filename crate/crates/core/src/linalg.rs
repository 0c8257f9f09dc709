//! Dense helpers for the tiny (r x r) systems that appear in rank extraction and net
//! construction. Row-major storage throughout.

/// LU factorization with partial pivoting of a square matrix.
#[derive(Clone, Debug)]
pub struct Lu {
    dim: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
    det: f64,
}

impl Lu {
    /// Factors `a` (row-major, `dim * dim`). Returns `None` when `|det| <= singular_tol`.
    pub fn factor(a: &[f64], dim: usize, singular_tol: f64) -> Option<Lu> {
        assert_eq!(a.len(), dim * dim);
        let mut lu = a.to_vec();
        let mut perm: Vec<usize> = (0..dim).collect();
        let mut det = 1.0;
        for col in 0..dim {
            let pivot =
                (col..dim).max_by(|&x, &y| lu[x * dim + col].abs().total_cmp(&lu[y * dim + col].abs())).unwrap();
            if lu[pivot * dim + col] == 0.0 {
                return None;
            }
            if pivot != col {
                for k in 0..dim {
                    lu.swap(col * dim + k, pivot * dim + k);
                }
                perm.swap(col, pivot);
                det = -det;
            }
            let p = lu[col * dim + col];
            det *= p;
            for row in col + 1..dim {
                let factor = lu[row * dim + col] / p;
                lu[row * dim + col] = factor;
                for k in col + 1..dim {
                    lu[row * dim + k] -= factor * lu[col * dim + k];
                }
            }
        }
        if det.abs() <= singular_tol {
            return None;
        }
        Some(Lu { dim, lu, perm, det })
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                x[i] -= self.lu[i * n + k] * x[k];
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                x[i] -= self.lu[i * n + k] * x[k];
            }
            x[i] /= self.lu[i * n + i];
        }
        x
    }
}

/// Determinant by elimination; zero for numerically singular input.
pub fn determinant(a: &[f64], dim: usize) -> f64 {
    Lu::factor(a, dim, 0.0).map_or(0.0, |lu| lu.det())
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}
