//! Compressed sparse row storage for the symmetric stiffness matrices.

use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Assemble from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(n: usize, triplets: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
        for (i, j, v) in triplets {
            *rows[i].entry(j).or_insert(0.0) += v;
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in rows {
            for (j, v) in row {
                col_idx.push(j);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Self { n, row_ptr, col_idx, values }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// y = A x
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yi = acc;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec(x, &mut y);
        y
    }

    /// y_i = Σ_{j≠i} A_ij (x_j − x_i), i.e. A x for a matrix whose rows sum
    /// to zero, evaluated so that constants map to exactly zero.
    pub fn apply_zero_row_sum(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                self.row(i)
                    .filter(|&(j, _)| j != i)
                    .map(|(j, v)| v * (x[j] - x[i]))
                    .sum()
            })
            .collect()
    }

    /// Symmetric bilinear form xᵀ A y, summed edge by edge so that swapping
    /// the arguments reproduces the same floating-point result.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                if j == i {
                    acc += v * (x[i] * y[i]);
                } else if j > i {
                    acc += v * (x[i] * y[j] + x[j] * y[i]);
                }
            }
        }
        acc
    }

    /// Off-diagonal entries (i < j, value) in row-major order.
    pub fn upper_edges(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                if j > i {
                    out.push((i, j, v));
                }
            }
        }
        out
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| self.get(j, i) == v))
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Weighted inner product Σ wᵢ aᵢ bᵢ.
pub fn wdot(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a).zip(b).map(|((w, x), y)| w * x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> CsrMatrix {
        CsrMatrix::from_triplets(
            3,
            vec![
                (0, 0, 1.0),
                (0, 1, -1.0),
                (1, 0, -1.0),
                (1, 1, 2.0),
                (1, 2, -1.0),
                (2, 1, -1.0),
                (2, 2, 1.0),
            ],
        )
    }

    #[test]
    fn duplicates_are_summed() {
        let m = CsrMatrix::from_triplets(2, vec![(0, 1, 1.0), (0, 1, 2.5), (1, 1, 1.0)]);
        assert_eq!(m.get(0, 1), 3.5);
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn matvec_and_bilinear_agree() {
        let m = path3();
        let x = [1.0, -2.0, 0.5];
        let y = [0.3, 0.7, -1.1];
        let direct = dot(&x, &m.apply(&y));
        assert!((direct - m.bilinear(&x, &y)).abs() < 1e-14);
        assert_eq!(m.bilinear(&x, &y), m.bilinear(&y, &x));
        assert!(m.is_symmetric());
        assert_eq!(m.apply(&[1.0, 1.0, 1.0]), vec![0.0, 0.0, 0.0]);
        let z = m.apply_zero_row_sum(&y);
        assert!(z.iter().zip(m.apply(&y)).all(|(a, b)| (a - b).abs() < 1e-14));
        assert!(m.apply_zero_row_sum(&[0.3; 3]).iter().all(|&v| v == 0.0));
    }
}
