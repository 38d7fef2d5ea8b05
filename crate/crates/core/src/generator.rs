//! Seeded random fixture generation.
//!
//! All randomness comes from [`RNG_NAME`], seeded with `seed_from_u64`, and
//! is drawn in a fixed order: sparsity pattern, then matrix values in
//! storage order, then `x`. Values are small integers so every product and
//! sum is exact in floating point. The ground truth `z` is computed by the
//! dense oracle, never by the CSR kernel.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::csr::{dense_from_csr, spmv_dense_oracle, CsrMatrix, DenseVector};
use crate::error::{Error, Result};
use crate::fixture::{Fixture, FixtureMeta, Origin};
use crate::scalar::Scalar;

/// Generator recorded in fixture metadata.
pub const RNG_NAME: &str = "chacha8-seed_from_u64";

/// Inclusive integer range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntRange {
    pub lo: i64,
    pub hi: i64,
}

impl IntRange {
    pub const fn new(lo: i64, hi: i64) -> Self {
        IntRange { lo, hi }
    }

    fn check(self, what: &str) -> Result<()> {
        if self.lo > self.hi || self.lo < 1 {
            return Err(Error::InvalidParams(format!(
                "{what} range {self} must be nonempty with positive bounds"
            )));
        }
        Ok(())
    }
}

impl fmt::Display for IntRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..={}", self.lo, self.hi)
    }
}

impl FromStr for IntRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (lo, hi) = s
            .split_once("..=")
            .ok_or_else(|| format!("expected LO..=HI, got {s:?}"))?;
        let lo = lo.trim().parse().map_err(|e| format!("{lo:?}: {e}"))?;
        let hi = hi.trim().parse().map_err(|e| format!("{hi:?}: {e}"))?;
        Ok(IntRange { lo, hi })
    }
}

/// How many entries to place.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fill {
    /// Exactly this many entries at uniformly chosen distinct positions.
    Nnz(usize),
    /// Each row independently gets between 0 and this many entries.
    MaxPerRow(usize),
    /// Every row gets exactly this many entries.
    PerRow(usize),
}

impl fmt::Display for Fill {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fill::Nnz(k) => write!(f, "nnz:{k}"),
            Fill::MaxPerRow(k) => write!(f, "max-per-row:{k}"),
            Fill::PerRow(k) => write!(f, "per-row:{k}"),
        }
    }
}

impl FromStr for Fill {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, k) = s
            .split_once(':')
            .ok_or_else(|| format!("expected KIND:COUNT, got {s:?}"))?;
        let k: usize = k.parse().map_err(|e| format!("{k:?}: {e}"))?;
        match kind {
            "nnz" => Ok(Fill::Nnz(k)),
            "max-per-row" => Ok(Fill::MaxPerRow(k)),
            "per-row" => Ok(Fill::PerRow(k)),
            _ => Err(format!("unknown fill kind {kind:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenParams {
    pub rows: usize,
    pub cols: usize,
    pub fill: Fill,
    pub values: IntRange,
    pub x: IntRange,
    pub seed: u64,
}

impl GenParams {
    /// Value ranges default to 1..=11 for the matrix and 1..=9 for `x`.
    pub fn new(rows: usize, cols: usize, fill: Fill, seed: u64) -> Self {
        GenParams {
            rows,
            cols,
            fill,
            values: IntRange::new(1, 11),
            x: IntRange::new(1, 9),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.values.check("value")?;
        self.x.check("x")?;
        let capacity = self.rows.checked_mul(self.cols).ok_or_else(|| {
            Error::InfeasibleParams(format!("{} x {} overflows", self.rows, self.cols))
        })?;
        match self.fill {
            Fill::Nnz(k) if k > capacity => Err(Error::InfeasibleParams(format!(
                "nnz exceeds capacity ({k} > {capacity})"
            ))),
            Fill::MaxPerRow(k) | Fill::PerRow(k) if k > self.cols => Err(Error::InfeasibleParams(
                format!("row fill exceeds column count ({k} > {})", self.cols),
            )),
            _ => Ok(()),
        }
    }
}

/// Builds a random fixture; the same parameters always give the same fixture.
pub fn generate<T: Scalar>(params: &GenParams) -> Result<Fixture<T>> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let (rows, cols) = (params.rows, params.cols);

    let mut row_ptr = Vec::with_capacity(rows + 1);
    row_ptr.push(0);
    let mut col_idx = Vec::new();
    match params.fill {
        Fill::Nnz(k) => {
            let mut cells = index::sample(&mut rng, rows * cols, k).into_vec();
            cells.sort_unstable();
            let mut it = cells.into_iter().peekable();
            for r in 0..rows {
                while let Some(cell) = it.next_if(|&c| c / cols == r) {
                    col_idx.push(cell % cols);
                }
                row_ptr.push(col_idx.len());
            }
        }
        Fill::MaxPerRow(_) | Fill::PerRow(_) => {
            for _ in 0..rows {
                let count = match params.fill {
                    Fill::MaxPerRow(k) => rng.random_range(0..=k),
                    Fill::PerRow(k) => k,
                    Fill::Nnz(_) => unreachable!(),
                };
                let mut picked = index::sample(&mut rng, cols, count).into_vec();
                picked.sort_unstable();
                col_idx.extend(picked);
                row_ptr.push(col_idx.len());
            }
        }
    }

    let draw = |rng: &mut ChaCha8Rng, range: IntRange| {
        T::from_i64(rng.random_range(range.lo..=range.hi)).expect("integer fits the scalar type")
    };
    let values: Vec<T> = (0..col_idx.len())
        .map(|_| draw(&mut rng, params.values))
        .collect();
    let x: Vec<T> = (0..cols).map(|_| draw(&mut rng, params.x)).collect();

    let matrix = CsrMatrix::sequential(rows, cols, row_ptr, col_idx, values);
    let dense = dense_from_csr(&matrix)?;
    let z = spmv_dense_oracle(&dense, &DenseVector::from_vec(x.clone()))?.values;

    Ok(Fixture {
        matrix,
        x,
        z,
        meta: FixtureMeta {
            origin: Origin::Generated,
            rng: Some(RNG_NAME.to_string()),
            params: Some(params.clone()),
        },
    })
}
