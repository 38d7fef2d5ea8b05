//! Problem instances: a global CSR matrix, an input vector `x` and the
//! expected product `z = A x`.

use crate::csr::{dense_from_csr, spmv_dense_oracle, validate_csr, CsrMatrix, DenseVector};
use crate::error::{Error, Result};
use crate::generator::GenParams;
use crate::scalar::Scalar;

/// Where a fixture came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    /// The 32 x 36 reference problem bundled with the crate.
    Paper,
    Generated,
    MatrixMarket,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Paper => "paper",
            Origin::Generated => "generated",
            Origin::MatrixMarket => "matrix-market",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "paper" => Some(Origin::Paper),
            "generated" => Some(Origin::Generated),
            "matrix-market" => Some(Origin::MatrixMarket),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixtureMeta {
    pub origin: Origin,
    /// Name of the random generator, when one was used.
    pub rng: Option<String>,
    pub params: Option<GenParams>,
}

impl FixtureMeta {
    pub fn new(origin: Origin) -> Self {
        FixtureMeta {
            origin,
            rng: None,
            params: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fixture<T> {
    /// Sequential global matrix (`m == M`, `n == N`).
    pub matrix: CsrMatrix<T>,
    pub x: Vec<T>,
    /// Ground truth `A x`.
    pub z: Vec<T>,
    pub meta: FixtureMeta,
}

impl<T: Scalar> Fixture<T> {
    pub fn rows(&self) -> usize {
        self.matrix.global_rows
    }

    pub fn cols(&self) -> usize {
        self.matrix.global_cols
    }

    pub fn nnz(&self) -> usize {
        self.matrix.nnz()
    }

    pub fn x_vector(&self) -> DenseVector<T> {
        DenseVector::from_vec(self.x.clone())
    }

    pub fn z_vector(&self) -> DenseVector<T> {
        DenseVector::from_vec(self.z.clone())
    }

    /// Checks the matrix invariants and vector lengths, but not `z`.
    pub fn check_structure(&self) -> Result<()> {
        let report = validate_csr(&self.matrix);
        if !report.is_ok() {
            return Err(Error::ValidationFailed(format!("matrix: {report}")));
        }
        let m = &self.matrix;
        if m.local_rows != m.global_rows
            || m.local_cols != m.global_cols
            || m.row_start != 0
            || m.col_start != 0
        {
            return Err(Error::ValidationFailed(
                "fixture matrix must be sequential (m == M, n == N, starts at 0)".into(),
            ));
        }
        if self.x.len() != self.cols() {
            return Err(Error::ValidationFailed(format!(
                "x has {} entries, expected N = {}",
                self.x.len(),
                self.cols()
            )));
        }
        if self.z.len() != self.rows() {
            return Err(Error::ValidationFailed(format!(
                "z has {} entries, expected M = {}",
                self.z.len(),
                self.rows()
            )));
        }
        Ok(())
    }

    /// Recomputes `A x` with the dense oracle and compares it with `z`.
    ///
    /// Rows agree when they differ by no more than `1e-12` times the row's
    /// absolute product sum, which is exact equality for integer data.
    pub fn check_ground_truth(&self) -> Result<()> {
        let dense = dense_from_csr(&self.matrix)?;
        let expected = spmv_dense_oracle(&dense, &self.x_vector())?;
        let tol = T::from_f64(1e-12).expect("representable tolerance");
        for (row, (&want, &have)) in expected.values.iter().zip(&self.z).enumerate() {
            let scale = self
                .matrix
                .row_entries(row)
                .map(|(c, a)| (a * self.x[c]).abs())
                .fold(T::zero(), |acc, v| acc + v);
            let diff = (want - have).abs();
            if diff.is_nan() || diff > tol * scale {
                return Err(Error::ValidationFailed(format!(
                    "ground truth mismatch at row {row}: z = {have}, oracle = {want}"
                )));
            }
        }
        Ok(())
    }

    /// Structure and ground truth.
    pub fn validate(&self) -> Result<()> {
        self.check_structure()?;
        self.check_ground_truth()
    }
}

/// Global row count of the reference problem.
pub const PAPER_ROWS: usize = 32;
/// Global column count of the reference problem.
pub const PAPER_COLS: usize = 36;
/// Capacity the reference source declares for its entry arrays. Only
/// `PAPER_ROW_PTR[32] = 49` slots are referenced; the last slot is
/// zero padding that no row covers.
pub const PAPER_DECLARED_NNZ: usize = 50;

pub const PAPER_ROW_PTR: [usize; PAPER_ROWS + 1] = [
    0, 1, 1, 2, 6, 9, 10, 10, 11, 11, 13, 13, 13, 16, 17, 18, 18, 19, 20, 22, 23, 27, 28, 31, 32,
    34, 37, 37, 41, 44, 44, 47, 49,
];

pub const PAPER_COL_IDX: [usize; 49] = [
    25, 13, 1, 5, 7, 35, 18, 19, 31, 32, 21, 32, 33, 0, 8, 27, 16, 25, 3, 24, 17, 27, 13, 3, 28,
    29, 30, 2, 23, 29, 31, 10, 8, 29, 1, 20, 22, 3, 8, 16, 19, 10, 14, 24, 2, 6, 15, 17, 34,
];

pub const PAPER_VALUES: [i64; 49] = [
    8, 3, 7, 5, 6, 7, 1, 9, 8, 9, 9, 9, 5, 1, 5, 8, 4, 4, 2, 11, 3, 8, 9, 7, 7, 4, 2, 2, 7, 6, 9,
    3, 4, 2, 2, 9, 7, 4, 7, 8, 1, 8, 6, 1, 3, 3, 6, 6, 1,
];

pub const PAPER_X: [i64; PAPER_COLS] = [
    3, 2, 2, 7, 1, 5, 3, 3, 6, 6, 4, 8, 8, 4, 7, 8, 9, 7, 7, 6, 9, 5, 8, 5, 7, 5, 5, 5, 2, 4, 8, 1,
    3, 6, 9, 8,
];

pub const PAPER_Z: [i64; PAPER_ROWS] = [
    40, 0, 12, 113, 69, 27, 0, 45, 0, 57, 0, 0, 73, 36, 20, 0, 14, 77, 61, 36, 95, 4, 68, 12, 32,
    141, 0, 148, 81, 0, 63, 51,
];

fn cast<T: Scalar>(v: &[i64]) -> Vec<T> {
    v.iter()
        .map(|&k| T::from_i64(k).expect("small integers are representable"))
        .collect()
}

/// The bundled 32 x 36 reference problem with its stated ground truth.
pub fn paper_fixture<T: Scalar>() -> Fixture<T> {
    Fixture {
        matrix: CsrMatrix::sequential(
            PAPER_ROWS,
            PAPER_COLS,
            PAPER_ROW_PTR.to_vec(),
            PAPER_COL_IDX.to_vec(),
            cast(&PAPER_VALUES),
        ),
        x: cast(&PAPER_X),
        z: cast(&PAPER_Z),
        meta: FixtureMeta::new(Origin::Paper),
    }
}
