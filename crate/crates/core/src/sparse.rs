//! Compressed sparse row matrices applied to row-major multi-channel data.

use rayon::prelude::*;

/// Rows with at least this many entries are processed in parallel.
const PAR_ROWS: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from `(row, col, value)` triplets; duplicates are summed
    /// and explicit zeros kept.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, c, _) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) outside {nrows}x{ncols}");
            counts[r + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut cursor = counts.clone();
        let mut entries = vec![(0usize, 0.0f64); triplets.len()];
        for &(r, c, v) in triplets {
            entries[cursor[r]] = (c, v);
            cursor[r] += 1;
        }
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        for r in 0..nrows {
            let row = &mut entries[counts[r]..counts[r + 1]];
            row.sort_by_key(|e| e.0);
            for &(c, v) in row.iter() {
                if col_idx.len() > row_ptr[r] && *col_idx.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self { nrows, ncols, row_ptr, col_idx, values }
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let t: Vec<_> = d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        Self::from_triplets(d.len(), d.len(), &t)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `(column, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn transpose(&self) -> Self {
        let t: Vec<_> = self.triplets().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, &t)
    }

    /// `diag(left) * self * diag(right)`.
    pub fn scaled(&self, left: Option<&[f64]>, right: Option<&[f64]>) -> Self {
        let mut out = self.clone();
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let mut v = self.values[k];
                if let Some(l) = left {
                    v *= l[i];
                }
                if let Some(r) = right {
                    v *= r[self.col_idx[k]];
                }
                out.values[k] = v;
            }
        }
        out
    }

    /// Sparse product `self * rhs`.
    pub fn matmul(&self, rhs: &SparseMatrix) -> Self {
        assert_eq!(self.ncols, rhs.nrows);
        let mut t = Vec::new();
        let mut acc = vec![0.0; rhs.ncols];
        let mut touched: Vec<usize> = Vec::new();
        let mut mark = vec![false; rhs.ncols];
        for i in 0..self.nrows {
            for (k, a) in self.row(i) {
                for (j, b) in rhs.row(k) {
                    if !mark[j] {
                        mark[j] = true;
                        touched.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            for &j in &touched {
                t.push((i, j, acc[j]));
                acc[j] = 0.0;
                mark[j] = false;
            }
            touched.clear();
        }
        Self::from_triplets(self.nrows, rhs.ncols, &t)
    }

    pub fn add(&self, rhs: &SparseMatrix) -> Self {
        assert_eq!((self.nrows, self.ncols), (rhs.nrows, rhs.ncols));
        let t: Vec<_> = self.triplets().chain(rhs.triplets()).collect();
        Self::from_triplets(self.nrows, self.ncols, &t)
    }

    /// `y = self * x` where `x` holds `ncols` rows of `channels` values.
    pub fn apply(&self, x: &[f64], channels: usize) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows * channels];
        self.apply_into(x, channels, &mut y);
        y
    }

    pub fn apply_into(&self, x: &[f64], channels: usize, y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols * channels);
        assert_eq!(y.len(), self.nrows * channels);
        let kernel = |(i, out): (usize, &mut [f64])| {
            out.iter_mut().for_each(|o| *o = 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let a = self.values[k];
                let xr = &x[self.col_idx[k] * channels..(self.col_idx[k] + 1) * channels];
                for (o, xv) in out.iter_mut().zip(xr) {
                    *o += a * xv;
                }
            }
        };
        if self.nrows >= PAR_ROWS {
            y.par_chunks_mut(channels).enumerate().for_each(kernel);
        } else {
            y.chunks_mut(channels).enumerate().for_each(kernel);
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, j, v) in self.triplets() {
            d[i][j] += v;
        }
        d
    }

    pub fn max_abs_asymmetry(&self) -> f64 {
        self.triplets().map(|(i, j, v)| (v - self.get(j, i)).abs()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// Column-major copy for the sparse factorisation backend.
    pub(crate) fn to_faer(&self) -> faer::sparse::SparseColMat<usize, f64> {
        let t: Vec<_> = self
            .triplets()
            .map(|(i, j, v)| faer::sparse::Triplet { row: i, col: j, val: v })
            .collect();
        faer::sparse::SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &t)
            .expect("valid sparse structure")
    }

    /// Matrix Market coordinate format.
    pub fn write_matrix_market<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for (i, j, v) in self.triplets() {
            writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates() {
        let m = SparseMatrix::from_triplets(2, 3, &[(0, 2, 1.0), (0, 2, 2.0), (1, 0, -1.0), (0, 0, 4.0)]);
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(0, 2), 3.0);
        assert_eq!(m.get(0, 0), 4.0);
        assert_eq!(m.get(1, 1), 0.0);
        assert_eq!(m.apply(&[1.0, 2.0, 3.0], 1), vec![13.0, -1.0]);
    }

    #[test]
    fn multichannel_apply_and_products() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 1, 3.0)]);
        // two channels: columns (1, 10) and (2, 20)
        assert_eq!(a.apply(&[1.0, 10.0, 2.0, 20.0], 2), vec![5.0, 50.0, 6.0, 60.0]);
        let at = a.transpose();
        assert_eq!(at.get(1, 0), 2.0);
        let p = at.matmul(&a);
        assert_eq!(p.to_dense(), vec![vec![1.0, 2.0], vec![2.0, 13.0]]);
        assert_eq!(p.max_abs_asymmetry(), 0.0);
    }

    #[test]
    fn matrix_market_header() {
        let a = SparseMatrix::diagonal(&[1.0, 2.0]);
        let mut buf = Vec::new();
        a.write_matrix_market(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1e0\n"));
    }
}
