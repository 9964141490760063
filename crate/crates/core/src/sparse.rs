//! Row-compressed non-negative sparse matrices.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SparseError {
    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("invalid CSR layout: {0}")]
    InvalidLayout(String),
}

/// CSR matrix with sorted, unique columns per row and finite
/// non-negative values. Explicit zeros are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    offsets: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        SparseMatrix {
            n_rows,
            n_cols,
            offsets: vec![0; n_rows + 1],
            cols: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            n_rows: n,
            n_cols: n,
            offsets: (0..=n).collect(),
            cols: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Builds from raw CSR arrays, checking every layout invariant.
    pub fn try_from_csr(
        n_rows: usize,
        n_cols: usize,
        offsets: Vec<usize>,
        cols: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self, SparseError> {
        let bad = |m: &str| Err(SparseError::InvalidLayout(m.to_string()));
        if offsets.len() != n_rows + 1 || offsets[0] != 0 {
            return bad("offsets length or origin");
        }
        if cols.len() != values.len() || *offsets.last().unwrap() != cols.len() {
            return bad("last offset must equal stored entries");
        }
        for r in 0..n_rows {
            let (lo, hi) = (offsets[r], offsets[r + 1]);
            if lo > hi {
                return bad("offsets not monotone");
            }
            let row = &cols[lo..hi];
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return bad("columns not strictly increasing");
            }
            if row.last().is_some_and(|&c| c >= n_cols) {
                return bad("column out of range");
            }
        }
        if values.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return bad("values must be finite and positive");
        }
        Ok(SparseMatrix {
            n_rows,
            n_cols,
            offsets,
            cols,
            values,
        })
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed in
    /// input order and zero results are dropped.
    ///
    /// # Panics
    /// On out-of-range indices or negative/non-finite values.
    pub fn from_triplets(n_rows: usize, n_cols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        for &(r, c, v) in &triplets {
            assert!(r < n_rows && c < n_cols, "triplet ({r}, {c}) out of range");
            assert!(v.is_finite() && v >= 0.0, "triplet value {v} invalid");
        }
        // stable sort keeps duplicate summation in input order
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut offsets = vec![0usize; n_rows + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        let mut iter = triplets.into_iter().peekable();
        while let Some((r, c, mut v)) = iter.next() {
            while let Some(&(r2, c2, v2)) = iter.peek() {
                if (r2, c2) != (r, c) {
                    break;
                }
                v += v2;
                iter.next();
            }
            if v > 0.0 {
                cols.push(c);
                values.push(v);
                offsets[r + 1] += 1;
            }
        }
        for r in 0..n_rows {
            offsets[r + 1] += offsets[r];
        }
        SparseMatrix {
            n_rows,
            n_cols,
            offsets,
            cols,
            values,
        }
    }

    /// Builds row by row from an iterator of sorted `(col, value)` rows.
    fn from_rows<I>(n_rows: usize, n_cols: usize, rows: I) -> Self
    where
        I: IntoIterator<Item = Vec<(usize, f64)>>,
    {
        let mut m = SparseMatrix::zeros(0, n_cols);
        m.offsets.reserve(n_rows);
        for row in rows {
            for (c, v) in row {
                if v > 0.0 {
                    m.cols.push(c);
                    m.values.push(v);
                }
            }
            m.offsets.push(m.cols.len());
        }
        m.shrink_to_fit();
        m.n_rows = m.offsets.len() - 1;
        debug_assert_eq!(m.n_rows, n_rows);
        m
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_rows, self.n_cols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, r: usize) -> impl ExactSizeIterator<Item = (usize, f64)> + '_ {
        let (lo, hi) = (self.offsets[r], self.offsets[r + 1]);
        self.cols[lo..hi]
            .iter()
            .copied()
            .zip(self.values[lo..hi].iter().copied())
    }

    pub fn row_nnz(&self, r: usize) -> usize {
        self.offsets[r + 1] - self.offsets[r]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (lo, hi) = (self.offsets[r], self.offsets[r + 1]);
        match self.cols[lo..hi].binary_search(&c) {
            Ok(k) => self.values[lo + k],
            Err(_) => 0.0,
        }
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n_rows).map(|r| self.row(r).map(|(_, v)| v).sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n_cols];
        for (&c, &v) in self.cols.iter().zip(&self.values) {
            sums[c] += v;
        }
        sums
    }

    /// Dense copy. Intended for small matrices in tests and debugging.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n_cols]; self.n_rows];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in self.row(r) {
                row[c] = v;
            }
        }
        out
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &c in &self.cols {
            counts[c + 1] += 1;
        }
        for i in 0..self.n_cols {
            counts[i + 1] += counts[i];
        }
        let offsets = counts.clone();
        let mut next = counts;
        let mut cols = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for r in 0..self.n_rows {
            for (c, v) in self.row(r) {
                let k = next[c];
                cols[k] = r;
                values[k] = v;
                next[c] += 1;
            }
        }
        SparseMatrix {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            offsets,
            cols,
            values,
        }
    }

    /// Sparse product `self × rhs` (row-wise accumulation, dense workspace of
    /// length `rhs.n_cols`). Each output entry sums its terms in ascending
    /// order of the inner index.
    pub fn matmul(&self, rhs: &SparseMatrix) -> Result<SparseMatrix, SparseError> {
        if self.n_cols != rhs.n_rows {
            return Err(SparseError::DimensionMismatch {
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        let mut acc = vec![0.0f64; rhs.n_cols];
        let mut touched = vec![false; rhs.n_cols];
        let mut pattern: Vec<usize> = Vec::new();
        let mut out = SparseMatrix::zeros(0, rhs.n_cols);
        for r in 0..self.n_rows {
            for (k, a) in self.row(r) {
                for (c, b) in rhs.row(k) {
                    if !touched[c] {
                        touched[c] = true;
                        pattern.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            pattern.sort_unstable();
            for &c in &pattern {
                if acc[c] > 0.0 {
                    out.cols.push(c);
                    out.values.push(acc[c]);
                }
                acc[c] = 0.0;
                touched[c] = false;
            }
            pattern.clear();
            out.offsets.push(out.cols.len());
        }
        out.shrink_to_fit();
        out.n_rows = self.n_rows;
        Ok(out)
    }

    /// `self × rhsᵀ`.
    pub fn mul_transpose(&self, rhs: &SparseMatrix) -> Result<SparseMatrix, SparseError> {
        if self.n_cols != rhs.n_cols {
            return Err(SparseError::DimensionMismatch {
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        self.matmul(&rhs.transpose())
    }

    fn check_same_shape(&self, other: &SparseMatrix) -> Result<(), SparseError> {
        if self.shape() != other.shape() {
            return Err(SparseError::DimensionMismatch {
                left: self.shape(),
                right: other.shape(),
            });
        }
        Ok(())
    }

    /// Entrywise sum.
    pub fn add(&self, other: &SparseMatrix) -> Result<SparseMatrix, SparseError> {
        self.check_same_shape(other)?;
        let rows = (0..self.n_rows).map(|r| {
            let mut a = self.row(r).peekable();
            let mut b = other.row(r).peekable();
            let mut row = Vec::with_capacity(a.len() + b.len());
            loop {
                match (a.peek().copied(), b.peek().copied()) {
                    (Some((ca, va)), Some((cb, vb))) => {
                        if ca == cb {
                            row.push((ca, va + vb));
                            a.next();
                            b.next();
                        } else if ca < cb {
                            row.push((ca, va));
                            a.next();
                        } else {
                            row.push((cb, vb));
                            b.next();
                        }
                    }
                    (Some(x), None) => {
                        row.push(x);
                        a.next();
                    }
                    (None, Some(y)) => {
                        row.push(y);
                        b.next();
                    }
                    (None, None) => break,
                }
            }
            row
        });
        Ok(SparseMatrix::from_rows(self.n_rows, self.n_cols, rows))
    }

    /// Entrywise (Hadamard) product; support is the intersection.
    pub fn hadamard(&self, other: &SparseMatrix) -> Result<SparseMatrix, SparseError> {
        self.check_same_shape(other)?;
        let rows = (0..self.n_rows).map(|r| {
            let (bc, bv) = {
                let (lo, hi) = (other.offsets[r], other.offsets[r + 1]);
                (&other.cols[lo..hi], &other.values[lo..hi])
            };
            let mut row = Vec::new();
            let mut j = 0;
            for (c, v) in self.row(r) {
                while j < bc.len() && bc[j] < c {
                    j += 1;
                }
                if j < bc.len() && bc[j] == c {
                    row.push((c, v * bv[j]));
                }
            }
            row
        });
        Ok(SparseMatrix::from_rows(self.n_rows, self.n_cols, rows))
    }

    /// Copy with the main diagonal removed.
    pub fn without_diagonal(&self) -> SparseMatrix {
        let rows = (0..self.n_rows).map(|r| self.row(r).filter(|&(c, _)| c != r).collect());
        SparseMatrix::from_rows(self.n_rows, self.n_cols, rows)
    }

    /// Divides every row with a positive sum by that sum. Returns the
    /// normalized matrix and the indices of all-zero rows.
    pub fn normalize_rows(&self) -> (SparseMatrix, Vec<usize>) {
        let mut out = self.clone();
        let dangling = out.normalize_rows_in_place();
        (out, dangling)
    }

    /// In-place form of [`normalize_rows`](Self::normalize_rows).
    pub fn normalize_rows_in_place(&mut self) -> Vec<usize> {
        let mut dangling = Vec::new();
        for r in 0..self.n_rows {
            let (lo, hi) = (self.offsets[r], self.offsets[r + 1]);
            let row = &mut self.values[lo..hi];
            let sum: f64 = row.iter().sum();
            if sum > 0.0 {
                row.iter_mut().for_each(|v| *v /= sum);
            } else {
                dangling.push(r);
            }
        }
        dangling
    }

    fn shrink_to_fit(&mut self) {
        self.offsets.shrink_to_fit();
        self.cols.shrink_to_fit();
        self.values.shrink_to_fit();
    }

    /// Multiplies each row `r` by `factors[r]`. Factors must be positive.
    pub fn scale_rows(&self, factors: &[f64]) -> SparseMatrix {
        assert_eq!(factors.len(), self.n_rows);
        let mut out = self.clone();
        for (r, &f) in factors.iter().enumerate() {
            let (lo, hi) = (self.offsets[r], self.offsets[r + 1]);
            for v in &mut out.values[lo..hi] {
                *v *= f;
            }
        }
        out
    }

    /// `out[c] = Σ_r self[r, c] · x[r]`, i.e. `selfᵀ x`, accumulated in
    /// ascending row order.
    pub fn transpose_mul_vec_into(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.n_rows);
        assert_eq!(out.len(), self.n_cols);
        out.iter_mut().for_each(|o| *o = 0.0);
        for (r, &xr) in x.iter().enumerate() {
            if xr == 0.0 {
                continue;
            }
            for (c, v) in self.row(r) {
                out[c] += v * xr;
            }
        }
    }

    /// Approximate heap footprint of the stored arrays, in bytes.
    pub fn heap_bytes(&self) -> usize {
        self.offsets.capacity() * std::mem::size_of::<usize>()
            + self.cols.capacity() * std::mem::size_of::<usize>()
            + self.values.capacity() * std::mem::size_of::<f64>()
    }
}
