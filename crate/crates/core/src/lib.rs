//! Sparse matrix-vector multiplication over compressed sparse row storage.
//!
//! The crate provides:
//!
//! * [`csr`]: CSR and dense types, validation, the sequential kernel and a
//!   dense brute-force oracle;
//! * [`layout`]: block distribution of rows and columns over ranks;
//! * [`collectives`]: a deterministic in-process stand-in for the MPI
//!   collectives the distributed kernel needs;
//! * [`dist`]: the basic distributed product (gather all of `x`, multiply
//!   locally, allreduce the squared residual);
//! * [`generator`], [`fixture`] and [`io`]: problem instances with ground
//!   truth, and their text and Matrix Market forms;
//! * [`verify`]: checks of both products packaged as reports.
//!
//! Numeric code is generic over [`Scalar`] (`f32`, `f64`). The aliases below
//! fix it to the common choices.

pub mod collectives;
pub mod csr;
pub mod dist;
mod error;
pub mod fixture;
pub mod generator;
pub mod io;
pub mod layout;
mod scalar;
pub mod verify;

pub use collectives::{run_ranks, CollectiveTrace, CommError, ExecMode, RankContext};
pub use csr::{
    dense_from_csr, residual_sq, spmv_dense_oracle, spmv_seq, validate_csr, CsrMatrix, DenseMatrix,
    DenseVector, ValidationReport, Violation,
};
pub use dist::{check_pass, run_distributed, DistOptions, DistRunReport, GatherPath};
pub use error::{Error, Result};
pub use fixture::{paper_fixture, Fixture, FixtureMeta, Origin};
pub use generator::{generate, Fill, GenParams, IntRange};
pub use layout::{block_local_size, build_layout, extract_local, Layout, LayoutKind};
pub use scalar::{bitwise_eq, Scalar};
pub use verify::{verify_distributed, verify_sequential, VerificationReport};

pub type CsrMatrixF64 = CsrMatrix<f64>;
pub type CsrMatrixF32 = CsrMatrix<f32>;
pub type DenseVectorF64 = DenseVector<f64>;
pub type DenseVectorF32 = DenseVector<f32>;
pub type DenseMatrixF64 = DenseMatrix<f64>;
pub type DenseMatrixF32 = DenseMatrix<f32>;
pub type FixtureF64 = Fixture<f64>;
pub type FixtureF32 = Fixture<f32>;
pub type DistRunReportF64 = DistRunReport<f64>;
