//! Compressed sparse row storage over the free DOFs.
//!
//! All operators of one discretization share a single sorted pattern built
//! from element connectivity, so sums such as `D/Δt + νA + μB₀` are plain
//! value-array combinations.

use std::sync::Arc;

/// Row offsets and sorted column indices; shared between operators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparsityPattern {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_offsets: Vec<usize>,
    pub col_indices: Vec<usize>,
}

impl SparsityPattern {
    /// Build a square pattern from per-row column sets (need not be sorted).
    pub fn from_rows(n: usize, mut rows: Vec<Vec<usize>>) -> Self {
        assert_eq!(rows.len(), n);
        let mut row_offsets = Vec::with_capacity(n + 1);
        let mut col_indices = Vec::new();
        row_offsets.push(0);
        for cols in rows.iter_mut() {
            cols.sort_unstable();
            cols.dedup();
            col_indices.extend_from_slice(cols);
            row_offsets.push(col_indices.len());
        }
        Self {
            n_rows: n,
            n_cols: n,
            row_offsets,
            col_indices,
        }
    }

    pub fn nnz(&self) -> usize {
        self.col_indices.len()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[usize] {
        &self.col_indices[self.row_offsets[i]..self.row_offsets[i + 1]]
    }

    /// Position of `(i, j)` in the value array.
    #[inline]
    pub fn find(&self, i: usize, j: usize) -> Option<usize> {
        let start = self.row_offsets[i];
        self.row(i).binary_search(&j).ok().map(|p| start + p)
    }

    pub fn is_structurally_symmetric(&self) -> bool {
        (0..self.n_rows).all(|i| self.row(i).iter().all(|&j| self.find(j, i).is_some()))
    }
}

/// Square sparse operator on the free DOFs.
#[derive(Clone, Debug)]
pub struct CsrMatrix {
    pattern: Arc<SparsityPattern>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(pattern: Arc<SparsityPattern>) -> Self {
        let nnz = pattern.nnz();
        Self {
            pattern,
            values: vec![0.0; nnz],
        }
    }

    pub fn from_parts(pattern: Arc<SparsityPattern>, values: Vec<f64>) -> Self {
        assert_eq!(pattern.nnz(), values.len());
        Self { pattern, values }
    }

    pub fn pattern(&self) -> &Arc<SparsityPattern> {
        &self.pattern
    }

    pub fn n_rows(&self) -> usize {
        self.pattern.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.pattern.n_cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pattern.find(i, j).map_or(0.0, |p| self.values[p])
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows()];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n_cols());
        assert_eq!(y.len(), self.n_rows());
        let p = &self.pattern;
        for (i, yi) in y.iter_mut().enumerate() {
            let range = p.row_offsets[i]..p.row_offsets[i + 1];
            *yi = p.col_indices[range.clone()]
                .iter()
                .zip(&self.values[range])
                .map(|(&j, &a)| a * x[j])
                .sum();
        }
    }

    /// `xᵀ M y`
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.mul_vec(y))
    }

    /// `self += alpha * other`; both must share the same pattern.
    pub fn add_scaled(&mut self, alpha: f64, other: &CsrMatrix) {
        assert!(
            Arc::ptr_eq(&self.pattern, &other.pattern) || *self.pattern == *other.pattern,
            "operators must share a sparsity pattern"
        );
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += alpha * b;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// `max |M_ij − s·M_ji|`; `s = 1` measures asymmetry, `s = −1` skewness defect.
    pub fn symmetry_defect(&self, s: f64) -> f64 {
        let p = &self.pattern;
        let mut worst = 0.0f64;
        for i in 0..self.n_rows() {
            for (off, &j) in p.row(i).iter().enumerate() {
                let a = self.values[p.row_offsets[i] + off];
                let b = self.get(j, i);
                worst = worst.max((a - s * b).abs());
            }
        }
        worst
    }

    /// Dense copy, for tests on small problems.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n_cols()]; self.n_rows()];
        for (i, row) in d.iter_mut().enumerate() {
            for (off, &j) in self.pattern.row(i).iter().enumerate() {
                row[j] = self.values[self.pattern.row_offsets[i] + off];
            }
        }
        d
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
