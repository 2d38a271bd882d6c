//! N:M structured-sparse and dense matrix representations.
//!
//! A structured-sparse row stores exactly `n` slots for every `m`-wide block
//! of columns. Each slot carries a value and the column of that value inside
//! its block (`0..m`). Blocks with fewer than `n` non-zeros are padded with
//! zero values placed at the smallest unused in-block indexes, so the stored
//! indexes of a block are always strictly increasing.

use std::fmt;

use thiserror::Error;

use crate::element::Element;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SparseError {
    #[error("invalid sparsity pattern {n}:{m}: {reason}")]
    InvalidPattern { n: usize, m: usize, reason: &'static str },
    #[error("shape error: {0}")]
    Shape(String),
    #[error("row {row}, block {block} holds more than {n} non-zeros")]
    BlockViolation { row: usize, block: usize, n: usize },
    #[error("structured-sparse matrix is invalid: {0}")]
    Invalid(Violation),
}

/// An `n:m` pattern: at most `n` non-zeros in every block of `m` columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub struct SparsityPattern {
    n: usize,
    m: usize,
}

impl SparsityPattern {
    pub fn new(n: usize, m: usize) -> Result<Self, SparseError> {
        if n == 0 || n > m {
            return Err(SparseError::InvalidPattern { n, m, reason: "requires 1 <= n <= m" });
        }
        if !m.is_power_of_two() {
            return Err(SparseError::InvalidPattern { n, m, reason: "m must be a power of two" });
        }
        if m > 256 {
            return Err(SparseError::InvalidPattern { n, m, reason: "m must fit an 8-bit index" });
        }
        Ok(Self { n, m })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn density(&self) -> f64 {
        self.n as f64 / self.m as f64
    }

    /// Stored slots per row for a matrix with `cols` logical columns.
    pub fn stored_per_row(&self, cols: usize) -> usize {
        cols / self.m * self.n
    }
}

impl fmt::Display for SparsityPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.n, self.m)
    }
}

impl std::str::FromStr for SparsityPattern {
    type Err = SparseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SparseError::Shape(format!("cannot parse pattern `{s}`, expected n:m"));
        let (n, m) = s.trim().split_once(':').ok_or_else(bad)?;
        let n = n.trim().parse().map_err(|_| bad())?;
        let m = m.trim().parse().map_err(|_| bad())?;
        SparsityPattern::new(n, m)
    }
}

/// Recovers the column of stored slot `slot` within the full row.
///
/// `block_id = slot / n` and the result is `stored_idx + block_id * m`.
/// `m` is a power of two, so the multiply is a shift; the divide is a shift
/// too whenever `n` is.
pub fn actual_col_index(slot: usize, stored_idx: usize, pattern: SparsityPattern) -> usize {
    let block_id = if pattern.n.is_power_of_two() {
        slot >> pattern.n.trailing_zeros()
    } else {
        slot / pattern.n
    };
    stored_idx + (block_id << pattern.m.trailing_zeros())
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Element> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self, SparseError> {
        if data.len() != rows * cols {
            return Err(SparseError::Shape(format!(
                "{} elements given for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self, SparseError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(SparseError::Shape("ragged rows".into()));
        }
        Ok(Self { rows: rows.len(), cols, data: rows.concat() })
    }

    pub fn identity(n: usize) -> Self {
        let mut d = Self::zeros(n, n);
        for i in 0..n {
            d.set(i, i, T::one());
        }
        d
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn count_nonzeros(&self) -> usize {
        self.data.iter().filter(|v| !v.is_zero()).count()
    }

    /// Appends zero columns until `cols` is a multiple of `multiple`.
    pub fn pad_cols_to(&self, multiple: usize) -> Self {
        let cols = self.cols.div_ceil(multiple) * multiple;
        if cols == self.cols {
            return self.clone();
        }
        let mut out = Self::zeros(self.rows, cols);
        for r in 0..self.rows {
            out.data[r * cols..r * cols + self.cols].copy_from_slice(self.row(r));
        }
        out
    }

    /// Appends zero rows until there are `rows` rows.
    pub fn pad_rows_to(&self, rows: usize) -> Self {
        let mut out = self.clone();
        if rows > self.rows {
            out.data.resize(rows * self.cols, T::zero());
            out.rows = rows;
        }
        out
    }

    /// Sub-matrix of columns `start..start + width`.
    pub fn column_slice(&self, start: usize, width: usize) -> Self {
        let mut out = Self::zeros(self.rows, width);
        for r in 0..self.rows {
            out.data[r * width..(r + 1) * width]
                .copy_from_slice(&self.row(r)[start..start + width]);
        }
        out
    }

    /// Scalar triple-loop product, the reference every kernel is checked against.
    pub fn matmul_reference(&self, rhs: &DenseMatrix<T>) -> Result<DenseMatrix<T>, SparseError> {
        if self.cols != rhs.rows {
            return Err(SparseError::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut c = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for j in 0..rhs.cols {
                let mut acc = T::zero();
                for k in 0..self.cols {
                    acc = acc + self.get(i, k) * rhs.get(k, j);
                }
                c.set(i, j, acc);
            }
        }
        Ok(c)
    }
}

/// What rule a [`Violation`] broke.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationRule {
    /// Column count not a multiple of `m`, or array lengths off.
    Shape,
    /// In-block index `>= m`.
    IndexRange,
    /// In-block indexes not strictly increasing within a block.
    Ordering,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Violation {
    pub row: usize,
    pub block: usize,
    pub rule: ViolationRule,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} violation at row {}, block {}", self.rule, self.row, self.block)
    }
}

/// N:M compressed matrix: `values` and `col_idx` are `rows x stored_per_row`,
/// row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredSparseMatrix<T> {
    pattern: SparsityPattern,
    rows: usize,
    cols: usize,
    values: Vec<T>,
    col_idx: Vec<u8>,
}

impl<T: Element> StructuredSparseMatrix<T> {
    /// Assembles a matrix from raw arrays and checks every invariant.
    pub fn from_parts(
        pattern: SparsityPattern,
        rows: usize,
        cols: usize,
        values: Vec<T>,
        col_idx: Vec<u8>,
    ) -> Result<Self, SparseError> {
        let ssm = Self::from_parts_unchecked(pattern, rows, cols, values, col_idx);
        match ssm.validate().first() {
            None => Ok(ssm),
            Some(v) => Err(SparseError::Invalid(*v)),
        }
    }

    /// Assembles a matrix without validation; see [`Self::validate`].
    pub fn from_parts_unchecked(
        pattern: SparsityPattern,
        rows: usize,
        cols: usize,
        values: Vec<T>,
        col_idx: Vec<u8>,
    ) -> Self {
        Self { pattern, rows, cols, values, col_idx }
    }

    pub fn encode(dense: &DenseMatrix<T>, pattern: SparsityPattern) -> Result<Self, SparseError> {
        let (n, m) = (pattern.n, pattern.m);
        if dense.cols % m != 0 {
            return Err(SparseError::Shape(format!(
                "{} columns is not a multiple of block width {m}",
                dense.cols
            )));
        }
        let per_row = pattern.stored_per_row(dense.cols);
        let mut values = Vec::with_capacity(dense.rows * per_row);
        let mut col_idx = Vec::with_capacity(dense.rows * per_row);
        let mut present = vec![false; m];
        for r in 0..dense.rows {
            for (block, chunk) in dense.row(r).chunks(m).enumerate() {
                let nnz = chunk.iter().filter(|v| !v.is_zero()).count();
                if nnz > n {
                    return Err(SparseError::BlockViolation { row: r, block, n });
                }
                present.iter_mut().enumerate().for_each(|(k, p)| *p = !chunk[k].is_zero());
                let mut filler = n - nnz;
                for k in 0..m {
                    if !present[k] && filler > 0 {
                        present[k] = true;
                        filler -= 1;
                    }
                }
                for (k, _) in present.iter().enumerate().filter(|(_, p)| **p) {
                    values.push(chunk[k]);
                    col_idx.push(k as u8);
                }
            }
        }
        Ok(Self { pattern, rows: dense.rows, cols: dense.cols, values, col_idx })
    }

    pub fn decode(&self) -> DenseMatrix<T> {
        let mut out = DenseMatrix::zeros(self.rows, self.cols);
        let per_row = self.stored_per_row();
        for r in 0..self.rows {
            for j in 0..per_row {
                let v = self.values[r * per_row + j];
                if v.is_zero() {
                    continue;
                }
                let c = actual_col_index(j, self.col_idx[r * per_row + j] as usize, self.pattern);
                out.set(r, c, v);
            }
        }
        out
    }

    /// Keeps the `n` largest-magnitude entries of every block (ties keep the
    /// lower column) and encodes the result.
    pub fn prune(dense: &DenseMatrix<T>, pattern: SparsityPattern) -> Result<Self, SparseError> {
        let m = pattern.m;
        if dense.cols % m != 0 {
            return Err(SparseError::Shape(format!(
                "{} columns is not a multiple of block width {m}",
                dense.cols
            )));
        }
        let mut kept = dense.clone();
        let mut order: Vec<usize> = Vec::with_capacity(m);
        for r in 0..dense.rows {
            for b in 0..dense.cols / m {
                let base = r * dense.cols + b * m;
                let block = &dense.data[base..base + m];
                order.clear();
                order.extend(0..m);
                // stable sort keeps the lower column first among equal magnitudes
                order.sort_by(|&x, &y| {
                    block[y].abs().partial_cmp(&block[x].abs()).unwrap_or(std::cmp::Ordering::Equal)
                });
                for &k in &order[pattern.n..] {
                    kept.data[base + k] = T::zero();
                }
            }
        }
        Self::encode(&kept, pattern)
    }

    /// Lists every invariant violation; empty iff the matrix is well formed.
    pub fn validate(&self) -> Vec<Violation> {
        let (n, m) = (self.pattern.n, self.pattern.m);
        let mut out = Vec::new();
        if self.cols % m != 0 {
            out.push(Violation { row: 0, block: 0, rule: ViolationRule::Shape });
            return out;
        }
        let per_row = self.stored_per_row();
        if self.values.len() != self.rows * per_row || self.col_idx.len() != self.rows * per_row {
            out.push(Violation { row: 0, block: 0, rule: ViolationRule::Shape });
            return out;
        }
        for r in 0..self.rows {
            for b in 0..self.cols / m {
                let slots = &self.col_idx[r * per_row + b * n..r * per_row + (b + 1) * n];
                if slots.iter().any(|&k| k as usize >= m) {
                    out.push(Violation { row: r, block: b, rule: ViolationRule::IndexRange });
                }
                if slots.windows(2).any(|w| w[0] >= w[1]) {
                    out.push(Violation { row: r, block: b, rule: ViolationRule::Ordering });
                }
            }
        }
        out
    }

    pub fn pattern(&self) -> SparsityPattern {
        self.pattern
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn stored_per_row(&self) -> usize {
        self.pattern.stored_per_row(self.cols)
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn col_idx(&self) -> &[u8] {
        &self.col_idx
    }

    pub fn value(&self, row: usize, slot: usize) -> T {
        self.values[row * self.stored_per_row() + slot]
    }

    pub fn stored_index(&self, row: usize, slot: usize) -> usize {
        self.col_idx[row * self.stored_per_row() + slot] as usize
    }

    /// Side representation with full-row column indexes.
    pub fn to_full_column(&self) -> FullColumnMatrix<T> {
        let per_row = self.stored_per_row();
        let cols = (0..self.rows * per_row)
            .map(|k| actual_col_index(k % per_row, self.col_idx[k] as usize, self.pattern) as u32)
            .collect();
        FullColumnMatrix { rows: self.rows, cols: self.cols, per_row, values: self.values.clone(), col: cols }
    }
}

/// Same slots as a [`StructuredSparseMatrix`], but with absolute column
/// indexes, trading storage for index arithmetic.
#[derive(Debug, Clone, PartialEq)]
pub struct FullColumnMatrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub per_row: usize,
    pub values: Vec<T>,
    pub col: Vec<u32>,
}

/// Relative storage increase of absolute column indexes over in-block ones.
pub fn full_column_overhead<T: Element>(ssm: &StructuredSparseMatrix<T>, value_bits: u32) -> f64 {
    let slots = (ssm.rows * ssm.stored_per_row()) as f64;
    if slots == 0.0 {
        return 0.0;
    }
    let bits_struct = ceil_log2(ssm.pattern.m) as f64;
    let bits_full = ceil_log2(ssm.cols) as f64;
    (bits_full - bits_struct) * slots / (value_bits as f64 * slots + bits_struct * slots)
}

fn ceil_log2(x: usize) -> u32 {
    if x <= 1 {
        0
    } else {
        usize::BITS - (x - 1).leading_zeros()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n: usize, m: usize) -> SparsityPattern {
        SparsityPattern::new(n, m).unwrap()
    }

    #[test]
    fn pattern_rules() {
        assert!(SparsityPattern::new(0, 4).is_err());
        assert!(SparsityPattern::new(5, 4).is_err());
        assert!(SparsityPattern::new(1, 3).is_err());
        assert_eq!("2:4".parse::<SparsityPattern>().unwrap(), p(2, 4));
        assert!("2-4".parse::<SparsityPattern>().is_err());
    }

    #[test]
    fn encode_zero_matrix_pads() {
        let d = DenseMatrix::<i32>::zeros(2, 4);
        let s = StructuredSparseMatrix::encode(&d, p(1, 4)).unwrap();
        assert_eq!(s.values(), &[0, 0]);
        assert_eq!(s.col_idx(), &[0, 0]);
    }

    #[test]
    fn encode_single_nonzero() {
        let d = DenseMatrix::from_rows(&[vec![0, 7, 0, 0]]).unwrap();
        let s = StructuredSparseMatrix::encode(&d, p(1, 4)).unwrap();
        assert_eq!(s.values(), &[7]);
        assert_eq!(s.col_idx(), &[1]);
        assert_eq!(s.decode(), d);
    }

    #[test]
    fn encode_filler_keeps_ascent() {
        let d = DenseMatrix::from_rows(&[vec![0, 0, 5, 0]]).unwrap();
        let s = StructuredSparseMatrix::encode(&d, p(2, 4)).unwrap();
        assert_eq!(s.col_idx(), &[0, 2]);
        assert_eq!(s.values(), &[0, 5]);
        assert!(s.validate().is_empty());
    }

    #[test]
    fn encode_errors() {
        let d = DenseMatrix::from_rows(&[vec![1, 2, 0, 0]]).unwrap();
        assert_eq!(
            StructuredSparseMatrix::encode(&d, p(1, 4)),
            Err(SparseError::BlockViolation { row: 0, block: 0, n: 1 })
        );
        let d = DenseMatrix::<i32>::zeros(1, 6);
        assert!(matches!(StructuredSparseMatrix::encode(&d, p(1, 4)), Err(SparseError::Shape(_))));
    }

    #[test]
    fn actual_col_index_cases() {
        // element `e` of the 3:4 recovery example
        assert_eq!(actual_col_index(4, 1, p(3, 4)), 5);
        assert_eq!(actual_col_index(0, 0, p(1, 4)), 0);
        assert_eq!(actual_col_index(5, 2, p(2, 4)), 10);
    }

    #[test]
    fn actual_col_index_matches_decode_placement() {
        // 2:4 row with a non-zero at column 10: slot 5 holds in-block index 2
        let mut row = vec![0i64; 16];
        row[10] = 9;
        row[0] = 1;
        let d = DenseMatrix::from_rows(&[row]).unwrap();
        let s = StructuredSparseMatrix::encode(&d, p(2, 4)).unwrap();
        assert_eq!(s.stored_index(0, 5), 2);
        assert_eq!(s.value(0, 5), 9);
        assert_eq!(s.decode().get(0, actual_col_index(5, 2, p(2, 4))), 9);
    }

    #[test]
    fn prune_keeps_largest_magnitude() {
        let d = DenseMatrix::from_rows(&[vec![3, -5, 1, 2]]).unwrap();
        let s = StructuredSparseMatrix::prune(&d, p(1, 4)).unwrap();
        assert_eq!((s.values(), s.col_idx()), (&[-5][..], &[1u8][..]));
        let d = DenseMatrix::from_rows(&[vec![4, 4, 0, 0]]).unwrap();
        let s = StructuredSparseMatrix::prune(&d, p(1, 4)).unwrap();
        assert_eq!((s.values(), s.col_idx()), (&[4][..], &[0u8][..]));
    }

    #[test]
    fn validate_reports_rules() {
        let bad = StructuredSparseMatrix::<i32>::from_parts_unchecked(p(1, 4), 1, 4, vec![1], vec![4]);
        assert_eq!(bad.validate(), vec![Violation { row: 0, block: 0, rule: ViolationRule::IndexRange }]);
        let dup = StructuredSparseMatrix::<i32>::from_parts_unchecked(p(2, 4), 1, 4, vec![1, 2], vec![1, 1]);
        assert_eq!(dup.validate(), vec![Violation { row: 0, block: 0, rule: ViolationRule::Ordering }]);
        assert!(StructuredSparseMatrix::from_parts(p(2, 4), 1, 4, vec![1, 2], vec![1, 1]).is_err());
    }

    #[test]
    fn overhead_cases() {
        let one_block = StructuredSparseMatrix::encode(&DenseMatrix::<f32>::zeros(2, 4), p(1, 4)).unwrap();
        assert_eq!(full_column_overhead(&one_block, 32), 0.0);
        let wide = StructuredSparseMatrix::encode(&DenseMatrix::<f32>::zeros(1, 1024), p(1, 4)).unwrap();
        assert!((full_column_overhead(&wide, 32) - 8.0 / 34.0).abs() < 1e-12);
        assert_eq!(ceil_log2(2048), ceil_log2(1024) + 1);
    }

    #[test]
    fn padding_helpers() {
        let d = DenseMatrix::from_rows(&[vec![1, 2, 3]]).unwrap();
        let padded = d.pad_cols_to(4);
        assert_eq!(padded.row(0), &[1, 2, 3, 0]);
        assert_eq!(d.pad_rows_to(2).row(1), &[0, 0, 0]);
        assert_eq!(padded.column_slice(1, 2).row(0), &[2, 3]);
    }
}
