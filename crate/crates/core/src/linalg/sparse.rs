use alloc::vec;
use alloc::vec::Vec;

use super::DenseMatrix;

/// Compressed sparse row matrix. Column indices within a row are strictly
/// increasing and duplicate triplets are summed.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn from_triplets(rows: usize, cols: usize, mut t: Vec<(u32, u32, f64)>) -> Self {
        t.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut indptr = vec![0usize; rows + 1];
        let mut indices = Vec::with_capacity(t.len());
        let mut values: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(u32, u32)> = None;
        for (i, j, v) in t {
            assert!((i as usize) < rows && (j as usize) < cols, "triplet out of range");
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            last = Some((i, j));
            indices.push(j);
            values.push(v);
            indptr[i as usize + 1] += 1;
        }
        for r in 0..rows {
            indptr[r + 1] += indptr[r];
        }
        CsrMatrix {
            rows,
            cols,
            indptr,
            indices,
            values,
        }
    }

    /// Rows given as `(column, value)` lists with strictly increasing columns.
    pub fn from_rows(cols: usize, rows: Vec<Vec<(u32, f64)>>) -> Self {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        indptr.push(0);
        let nnz = rows.iter().map(Vec::len).sum();
        let mut indices = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        let n = rows.len();
        for r in rows {
            debug_assert!(r.windows(2).all(|w| w[0].0 < w[1].0));
            for (j, v) in r {
                assert!((j as usize) < cols, "column out of range");
                indices.push(j);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            rows: n,
            cols,
            indptr,
            indices,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            rows: n,
            cols: n,
            indptr: (0..=n).collect(),
            indices: (0..n as u32).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let mut m = Self::identity(d.len());
        m.values.copy_from_slice(d);
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (idx, val) = self.row(i);
        match idx.binary_search(&(j as u32)) {
            Ok(p) => val[p],
            Err(_) => 0.0,
        }
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i).1.iter().sum()).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        for (i, yi) in y.iter_mut().enumerate().take(self.rows) {
            let (idx, val) = self.row(i);
            *yi = idx.iter().zip(val).map(|(&j, v)| v * x[j as usize]).sum();
        }
    }

    pub fn matvec_transpose(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate().take(self.rows) {
            if xi == 0.0 {
                continue;
            }
            let (idx, val) = self.row(i);
            for (&j, v) in idx.iter().zip(val) {
                y[j as usize] += v * xi;
            }
        }
        y
    }

    pub fn transpose(&self) -> Self {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.rows {
            let (idx, val) = self.row(i);
            for (&j, &v) in idx.iter().zip(val) {
                t.push((j, i as u32, v));
            }
        }
        Self::from_triplets(self.cols, self.rows, t)
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut m = self.clone();
        m.values.iter_mut().for_each(|v| *v *= s);
        m
    }

    /// `diag(l) * self * diag(r)`.
    pub fn scale_rows_cols(&self, l: &[f64], r: &[f64]) -> Self {
        let mut m = self.clone();
        for i in 0..self.rows {
            let (a, b) = (m.indptr[i], m.indptr[i + 1]);
            for p in a..b {
                m.values[p] *= l[i] * r[m.indices[p] as usize];
            }
        }
        m
    }

    /// `sum_k c_k A_k`; all terms must share a shape.
    pub fn linear_combination(terms: &[(f64, &CsrMatrix)]) -> Self {
        assert!(!terms.is_empty());
        let (rows, cols) = (terms[0].1.rows, terms[0].1.cols);
        let mut t = Vec::new();
        for &(c, m) in terms {
            assert_eq!((m.rows, m.cols), (rows, cols));
            for i in 0..rows {
                let (idx, val) = m.row(i);
                for (&j, &v) in idx.iter().zip(val) {
                    t.push((i as u32, j, c * v));
                }
            }
        }
        Self::from_triplets(rows, cols, t)
    }

    pub fn add(&self, o: &CsrMatrix) -> Self {
        Self::linear_combination(&[(1.0, self), (1.0, o)])
    }

    pub fn sub(&self, o: &CsrMatrix) -> Self {
        Self::linear_combination(&[(1.0, self), (-1.0, o)])
    }

    /// Sparse product by a dense accumulator per row.
    pub fn mul(&self, o: &CsrMatrix) -> Self {
        assert_eq!(self.cols, o.rows);
        let mut acc = vec![0.0; o.cols];
        let mut mark = vec![usize::MAX; o.cols];
        let mut touched: Vec<u32> = Vec::new();
        let mut indptr = Vec::with_capacity(self.rows + 1);
        indptr.push(0);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for i in 0..self.rows {
            touched.clear();
            let (ia, va) = self.row(i);
            for (&k, &a) in ia.iter().zip(va) {
                let (ib, vb) = o.row(k as usize);
                for (&j, &b) in ib.iter().zip(vb) {
                    let ju = j as usize;
                    if mark[ju] != i {
                        mark[ju] = i;
                        acc[ju] = 0.0;
                        touched.push(j);
                    }
                    acc[ju] += a * b;
                }
            }
            touched.sort_unstable();
            for &j in &touched {
                indices.push(j);
                values.push(acc[j as usize]);
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            rows: self.rows,
            cols: o.cols,
            indptr,
            indices,
            values,
        }
    }

    /// Drops stored entries with `|v| <= tol`.
    pub fn prune(&self, tol: f64) -> Self {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.rows {
            let (idx, val) = self.row(i);
            for (&j, &v) in idx.iter().zip(val) {
                if v.abs() > tol {
                    t.push((i as u32, j, v));
                }
            }
        }
        Self::from_triplets(self.rows, self.cols, t)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            let (idx, val) = self.row(i);
            for (&j, &v) in idx.iter().zip(val) {
                d[(i, j as usize)] = v;
            }
        }
        d
    }

    pub fn max_abs_diff(&self, o: &CsrMatrix) -> f64 {
        self.sub(o).values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}
