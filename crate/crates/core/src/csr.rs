//! Compressed sparse row storage, the sequential SpMV kernel and a dense
//! brute-force oracle used to check it.
//!
//! A [`CsrMatrix`] describes an `m x n` block of an `M x N` global matrix.
//! Row `k` of the block spans `row_ptr[k]..row_ptr[k + 1]` in `col_idx` and
//! `values`. Column indices are always global, so in a distributed setting
//! they are bounded by `N` rather than by the local width `n`.

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// CSR matrix block together with its placement in the global matrix.
///
/// Fields are public so arbitrary candidate arrays can be assembled and
/// checked with [`validate_csr`]; nothing here is trusted until validated.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    /// Local row count `m`.
    pub local_rows: usize,
    /// Local column count `n`, the width of the diagonal block.
    pub local_cols: usize,
    /// Global row count `M`.
    pub global_rows: usize,
    /// Global column count `N`.
    pub global_cols: usize,
    /// Global index of the first local row.
    pub row_start: usize,
    /// Global index of the first local column.
    pub col_start: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    /// A matrix held entirely by one process: `m == M`, `n == N`, starts at 0.
    pub fn sequential(
        rows: usize,
        cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<T>,
    ) -> Self {
        CsrMatrix {
            local_rows: rows,
            local_cols: cols,
            global_rows: rows,
            global_cols: cols,
            row_start: 0,
            col_start: 0,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Like [`CsrMatrix::sequential`] but rejects arrays that fail validation.
    pub fn try_sequential(
        rows: usize,
        cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<T>,
    ) -> Result<Self> {
        let mat = Self::sequential(rows, cols, row_ptr, col_idx, values);
        let report = validate_csr(&mat);
        if report.is_ok() {
            Ok(mat)
        } else {
            Err(Error::InvalidCsr(report))
        }
    }

    /// Stored entry count.
    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// Entry range of local row `row` in `col_idx` / `values`.
    pub fn row_range(&self, row: usize) -> std::ops::Range<usize> {
        self.row_ptr[row]..self.row_ptr[row + 1]
    }

    /// Iterates `(col, value)` pairs of local row `row` in storage order.
    pub fn row_entries(&self, row: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let range = self.row_range(row);
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    /// Smallest `x` length the kernel can read without going out of bounds.
    pub fn column_reach(&self) -> usize {
        let end = self
            .row_ptr
            .last()
            .copied()
            .unwrap_or(0)
            .min(self.col_idx.len());
        self.col_idx[..end]
            .iter()
            .map(|&c| c + 1)
            .max()
            .unwrap_or(0)
    }

    /// Kernel body writing into caller storage. `y` must have `local_rows`
    /// entries and `x` must cover [`CsrMatrix::column_reach`].
    ///
    /// Each output is reset to zero before accumulation, so empty rows
    /// produce exactly `0.0`. Column order within a row is not assumed and
    /// duplicate columns simply accumulate.
    pub fn mul_vec_into(&self, x: &[T], y: &mut [T]) {
        assert_eq!(
            y.len(),
            self.local_rows,
            "output length must equal local row count"
        );
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = T::zero();
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                *yi += self.values[p] * x[self.col_idx[p]];
            }
        }
    }
}

/// Dense vector slice with its global length.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseVector<T> {
    /// Global length `N`; equals `values.len()` for sequential vectors.
    pub global_len: usize,
    pub values: Vec<T>,
}

impl<T: Scalar> DenseVector<T> {
    pub fn from_vec(values: Vec<T>) -> Self {
        DenseVector {
            global_len: values.len(),
            values,
        }
    }

    /// A local piece of a longer distributed vector.
    pub fn distributed(values: Vec<T>, global_len: usize) -> Result<Self> {
        if values.len() > global_len {
            return Err(Error::SizeMismatch(format!(
                "local length {} exceeds global length {global_len}",
                values.len()
            )));
        }
        Ok(DenseVector { global_len, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.values
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            values: vec![T::zero(); rows * cols],
        }
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.values[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[T] {
        &self.values[row * self.cols..(row + 1) * self.cols]
    }
}

/// One broken CSR invariant, with the first offending index where relevant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    RowPtrLength {
        expected: usize,
        found: usize,
    },
    RowPtrStart {
        found: usize,
    },
    RowPtrDecreasing {
        index: usize,
    },
    RowPtrEnd {
        end: usize,
        nnz: usize,
    },
    ValuesLength {
        values: usize,
        col_idx: usize,
    },
    ColumnOutOfRange {
        index: usize,
        col: usize,
        bound: usize,
    },
    RowPlacement {
        start: usize,
        local: usize,
        global: usize,
    },
    ColPlacement {
        start: usize,
        local: usize,
        global: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::RowPtrLength { expected, found } => {
                write!(
                    f,
                    "len(rowPtr) != m + 1 (expected {expected}, found {found})"
                )
            }
            Violation::RowPtrStart { found } => write!(f, "rowPtr[0] != 0 (found {found})"),
            Violation::RowPtrDecreasing { index } => {
                write!(f, "rowPtr decreasing at index {index}")
            }
            Violation::RowPtrEnd { end, nnz } => {
                write!(f, "rowPtr[m] != nnz ({end} != {nnz})")
            }
            Violation::ValuesLength { values, col_idx } => {
                write!(f, "len(values) != len(colIdx) ({values} != {col_idx})")
            }
            Violation::ColumnOutOfRange { index, col, bound } => {
                write!(f, "colIdx[{index}] = {col} out of range 0..{bound}")
            }
            Violation::RowPlacement {
                start,
                local,
                global,
            } => {
                write!(f, "rstart + m > M ({start} + {local} > {global})")
            }
            Violation::ColPlacement {
                start,
                local,
                global,
            } => {
                write!(f, "cstart + n > N ({start} + {local} > {global})")
            }
        }
    }
}

/// Outcome of [`validate_csr`]; empty means valid.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("ok");
        }
        for (k, v) in self.violations.iter().enumerate() {
            if k > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks every structural invariant of `mat`. Violations are reported as
/// data; this never fails.
pub fn validate_csr<T>(mat: &CsrMatrix<T>) -> ValidationReport {
    let mut violations = Vec::new();
    let nnz = mat.col_idx.len();

    if mat.row_ptr.len() != mat.local_rows + 1 {
        violations.push(Violation::RowPtrLength {
            expected: mat.local_rows + 1,
            found: mat.row_ptr.len(),
        });
    }
    if let Some(&first) = mat.row_ptr.first() {
        if first != 0 {
            violations.push(Violation::RowPtrStart { found: first });
        }
    }
    if let Some(k) = mat.row_ptr.windows(2).position(|w| w[1] < w[0]) {
        violations.push(Violation::RowPtrDecreasing { index: k + 1 });
    }
    if let Some(&end) = mat.row_ptr.last() {
        if end != nnz {
            violations.push(Violation::RowPtrEnd { end, nnz });
        }
    }
    if mat.values.len() != nnz {
        violations.push(Violation::ValuesLength {
            values: mat.values.len(),
            col_idx: nnz,
        });
    }
    if let Some((index, &col)) = mat
        .col_idx
        .iter()
        .enumerate()
        .find(|&(_, &c)| c >= mat.global_cols)
    {
        violations.push(Violation::ColumnOutOfRange {
            index,
            col,
            bound: mat.global_cols,
        });
    }
    if mat.row_start + mat.local_rows > mat.global_rows {
        violations.push(Violation::RowPlacement {
            start: mat.row_start,
            local: mat.local_rows,
            global: mat.global_rows,
        });
    }
    if mat.col_start + mat.local_cols > mat.global_cols {
        violations.push(Violation::ColPlacement {
            start: mat.col_start,
            local: mat.local_cols,
            global: mat.global_cols,
        });
    }
    ValidationReport { violations }
}

/// Row pointer shape checks the kernel cannot run without.
fn check_kernel_shape<T>(mat: &CsrMatrix<T>) -> Result<()> {
    let shape_ok = mat.row_ptr.len() == mat.local_rows + 1
        && mat.row_ptr.windows(2).all(|w| w[0] <= w[1])
        && mat
            .row_ptr
            .last()
            .is_some_and(|&end| end <= mat.col_idx.len() && end <= mat.values.len());
    if shape_ok {
        Ok(())
    } else {
        Err(Error::InvalidCsr(validate_csr(mat)))
    }
}

/// Sequential SpMV: `y[i] = sum of values[p] * x[col_idx[p]]` over row `i`.
///
/// The result has one entry per local row and carries the matrix's global
/// row count as its global length.
pub fn spmv_seq<T: Scalar>(mat: &CsrMatrix<T>, x: &DenseVector<T>) -> Result<DenseVector<T>> {
    check_kernel_shape(mat)?;
    let reach = mat.column_reach();
    if x.len() < reach {
        return Err(Error::SizeMismatch(format!(
            "x has {} entries but the matrix references column {}",
            x.len(),
            reach - 1
        )));
    }
    let mut y = vec![T::zero(); mat.local_rows];
    mat.mul_vec_into(x.as_slice(), &mut y);
    Ok(DenseVector {
        global_len: mat.global_rows.max(mat.local_rows),
        values: y,
    })
}

/// Squared 2-norm of `y - z`, accumulated in index order.
pub fn residual_sq<T: Scalar>(y: &DenseVector<T>, z: &DenseVector<T>) -> Result<T> {
    residual_sq_slices(y.as_slice(), z.as_slice())
}

pub(crate) fn residual_sq_slices<T: Scalar>(y: &[T], z: &[T]) -> Result<T> {
    if y.len() != z.len() {
        return Err(Error::SizeMismatch(format!(
            "residual of vectors with lengths {} and {}",
            y.len(),
            z.len()
        )));
    }
    let mut norm = T::zero();
    for (&a, &b) in y.iter().zip(z) {
        norm += (a - b) * (a - b);
    }
    Ok(norm)
}

/// Materializes `mat` as an `m x N` dense matrix; absent entries are zero.
///
/// Duplicate `(row, col)` pairs are rejected since their dense value would
/// be ambiguous.
pub fn dense_from_csr<T: Scalar>(mat: &CsrMatrix<T>) -> Result<DenseMatrix<T>> {
    let report = validate_csr(mat);
    if !report.is_ok() {
        return Err(Error::InvalidCsr(report));
    }
    let cols = mat.global_cols;
    let mut dense = DenseMatrix::zeros(mat.local_rows, cols);
    // last row that wrote each column, offset by one so 0 means "never"
    let mut stamp = vec![0usize; cols];
    for row in 0..mat.local_rows {
        for (col, value) in mat.row_entries(row) {
            if stamp[col] == row + 1 {
                return Err(Error::DuplicateEntry { row, col });
            }
            stamp[col] = row + 1;
            dense.values[row * cols + col] = value;
        }
    }
    Ok(dense)
}

/// Schoolbook `y_i = sum_j a_ij x_j` over every cell of `dense`.
pub fn spmv_dense_oracle<T: Scalar>(
    dense: &DenseMatrix<T>,
    x: &DenseVector<T>,
) -> Result<DenseVector<T>> {
    if dense.cols != x.len() {
        return Err(Error::SizeMismatch(format!(
            "dense matrix has {} columns but x has {} entries",
            dense.cols,
            x.len()
        )));
    }
    let mut y = Vec::with_capacity(dense.rows);
    for i in 0..dense.rows {
        let mut acc = T::zero();
        for j in 0..dense.cols {
            acc += dense.get(i, j) * x.values[j];
        }
        y.push(acc);
    }
    Ok(DenseVector::from_vec(y))
}
