//! Block distribution of rows and columns over ranks.

use crate::csr::CsrMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// How a [`Layout`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayoutKind {
    /// `global / size`, plus one for ranks below the remainder.
    Block,
    /// Local sizes supplied by the caller.
    Explicit,
}

/// Per-rank local sizes and start offsets of one global extent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub global: usize,
    pub local_sizes: Vec<usize>,
    /// Exclusive prefix sums of `local_sizes`.
    pub starts: Vec<usize>,
    pub kind: LayoutKind,
}

impl Layout {
    pub fn size(&self) -> usize {
        self.local_sizes.len()
    }

    pub fn local_size(&self, rank: usize) -> usize {
        self.local_sizes[rank]
    }

    pub fn start(&self, rank: usize) -> usize {
        self.starts[rank]
    }

    /// Global index range owned by `rank`.
    pub fn range(&self, rank: usize) -> std::ops::Range<usize> {
        self.starts[rank]..self.starts[rank] + self.local_sizes[rank]
    }

    pub fn is_uniform(&self) -> bool {
        self.local_sizes.windows(2).all(|w| w[0] == w[1])
    }
}

/// Local extent of `rank` under the default block formula.
pub fn block_local_size(global: usize, size: usize, rank: usize) -> Result<usize> {
    if size == 0 {
        return Err(Error::InvalidSize);
    }
    if rank >= size {
        return Err(Error::InvalidRank { rank, size });
    }
    Ok(global / size + usize::from(global % size > rank))
}

/// Exclusive prefix sums, starting at 0.
pub fn exclusive_prefix_sums(sizes: &[usize]) -> Vec<usize> {
    sizes
        .iter()
        .scan(0usize, |acc, &s| {
            let start = *acc;
            *acc += s;
            Some(start)
        })
        .collect()
}

/// Builds a layout of `global` over `size` ranks, from `explicit` local sizes
/// when given, otherwise from [`block_local_size`].
///
/// Explicit sizes are checked here: they must have one entry per rank and
/// sum to `global`.
pub fn build_layout(global: usize, size: usize, explicit: Option<&[usize]>) -> Result<Layout> {
    if size == 0 {
        return Err(Error::InvalidSize);
    }
    let (local_sizes, kind) = match explicit {
        Some(sizes) => {
            if sizes.len() != size {
                return Err(Error::LayoutLength {
                    found: sizes.len(),
                    size,
                });
            }
            let sum: usize = sizes.iter().sum();
            if sum != global {
                return Err(Error::LayoutSumMismatch { sum, global });
            }
            (sizes.to_vec(), LayoutKind::Explicit)
        }
        None => (
            (0..size)
                .map(|rank| block_local_size(global, size, rank))
                .collect::<Result<Vec<_>>>()?,
            LayoutKind::Block,
        ),
    };
    let starts = exclusive_prefix_sums(&local_sizes);
    Ok(Layout {
        global,
        local_sizes,
        starts,
        kind,
    })
}

/// Pulls rows `row_start .. row_start + rows` out of a global CSR matrix.
///
/// The row pointer is rebuilt from zero with each row keeping its global
/// entry count. Column indices and values are the contiguous global slices,
/// with column indices left global.
pub fn extract_rows<T: Scalar>(
    global: &CsrMatrix<T>,
    row_start: usize,
    rows: usize,
    col_start: usize,
    cols: usize,
) -> Result<CsrMatrix<T>> {
    if row_start + rows > global.local_rows || global.row_ptr.len() != global.local_rows + 1 {
        return Err(Error::SizeMismatch(format!(
            "rows {row_start}..{} outside a matrix with {} rows",
            row_start + rows,
            global.local_rows
        )));
    }
    if col_start + cols > global.global_cols {
        return Err(Error::SizeMismatch(format!(
            "columns {col_start}..{} outside a matrix with {} columns",
            col_start + cols,
            global.global_cols
        )));
    }
    let gi = &global.row_ptr;
    let mut row_ptr = Vec::with_capacity(rows + 1);
    row_ptr.push(0);
    for i in 0..rows {
        let prev = row_ptr[i];
        row_ptr.push(prev + (gi[row_start + i + 1] - gi[row_start + i]));
    }
    let first = gi[row_start];
    let last = gi[row_start + rows];
    Ok(CsrMatrix {
        local_rows: rows,
        local_cols: cols,
        global_rows: global.global_rows,
        global_cols: global.global_cols,
        row_start,
        col_start,
        row_ptr,
        col_idx: global.col_idx[first..last].to_vec(),
        values: global.values[first..last].to_vec(),
    })
}

/// Local submatrix owned by `rank` under the given layouts.
pub fn extract_local<T: Scalar>(
    global: &CsrMatrix<T>,
    row_layout: &Layout,
    col_layout: &Layout,
    rank: usize,
) -> Result<CsrMatrix<T>> {
    let size = row_layout.size();
    if rank >= size || rank >= col_layout.size() {
        return Err(Error::InvalidRank { rank, size });
    }
    if row_layout.global != global.global_rows || col_layout.global != global.global_cols {
        return Err(Error::SizeMismatch(format!(
            "layouts cover {}x{} but the matrix is {}x{}",
            row_layout.global, col_layout.global, global.global_rows, global.global_cols
        )));
    }
    extract_rows(
        global,
        row_layout.start(rank),
        row_layout.local_size(rank),
        col_layout.start(rank),
        col_layout.local_size(rank),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_sizes() {
        let sizes = |g, s| {
            (0..s)
                .map(|r| block_local_size(g, s, r).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(sizes(32, 3), vec![11, 11, 10]);
        assert_eq!(sizes(36, 3), vec![12, 12, 12]);
        assert_eq!(sizes(4, 6), vec![1, 1, 1, 1, 0, 0]);
    }

    #[test]
    fn block_size_errors() {
        assert!(matches!(block_local_size(4, 0, 0), Err(Error::InvalidSize)));
        assert!(matches!(
            block_local_size(4, 2, 2),
            Err(Error::InvalidRank { rank: 2, size: 2 })
        ));
    }

    #[test]
    fn default_layouts() {
        let l = build_layout(32, 3, None).unwrap();
        assert_eq!(l.local_sizes, vec![11, 11, 10]);
        assert_eq!(l.starts, vec![0, 11, 22]);
        let l = build_layout(36, 5, None).unwrap();
        assert_eq!(l.local_sizes, vec![8, 7, 7, 7, 7]);
        assert_eq!(l.starts, vec![0, 8, 15, 22, 29]);
        assert_eq!(l.kind, LayoutKind::Block);
    }

    #[test]
    fn explicit_layout_must_sum() {
        let err = build_layout(10, 2, Some(&[3, 6])).unwrap_err();
        assert!(matches!(
            err,
            Error::LayoutSumMismatch { sum: 9, global: 10 }
        ));
        assert_eq!(err.to_string(), "sum 9 != 10");
        assert!(matches!(
            build_layout(10, 3, Some(&[5, 5])),
            Err(Error::LayoutLength { found: 2, size: 3 })
        ));
        let l = build_layout(10, 2, Some(&[0, 10])).unwrap();
        assert_eq!(l.starts, vec![0, 0]);
        assert_eq!(l.kind, LayoutKind::Explicit);
    }

    #[test]
    fn zero_row_rank_gets_empty_piece() {
        let global = CsrMatrix::sequential(2, 2, vec![0, 1, 2], vec![0, 1], vec![1.0, 2.0]);
        let rows = build_layout(2, 3, None).unwrap();
        let cols = build_layout(2, 3, None).unwrap();
        let piece = extract_local(&global, &rows, &cols, 2).unwrap();
        assert_eq!(piece.local_rows, 0);
        assert_eq!(piece.row_ptr, vec![0]);
        assert!(piece.col_idx.is_empty());
        assert!(extract_local(&global, &rows, &cols, 3).is_err());
    }
}
