//! Basic distributed SpMV over a block row distribution.
//!
//! Each simulated rank computes its local sizes, derives its row and column
//! starts with an exclusive scan, cuts its rows out of the global arrays,
//! gathers the whole of `x` from every rank's slice, multiplies, and joins
//! an allreduce of the squared residual against its slice of `z`.

use crate::collectives::{run_ranks, CollectiveTrace, ExecMode, RankContext};
use crate::csr::spmv_seq;
use crate::csr::{residual_sq_slices, DenseVector};
use crate::error::{Error, Result};
use crate::fixture::Fixture;
use crate::layout::{build_layout, exclusive_prefix_sums, extract_rows, Layout, LayoutKind};
use crate::scalar::Scalar;

/// Largest squared residual still counted as a correct product.
pub const RESIDUAL_TOLERANCE: f64 = 1e-6;

/// True iff `residual_sq <= 1e-6`. NaN fails.
pub fn check_pass<T: Scalar>(residual_sq: T) -> bool {
    residual_sq
        .to_f64()
        .is_some_and(|r| r <= RESIDUAL_TOLERANCE)
}

/// Collective used to assemble the global `x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GatherPath {
    /// All local lengths equal: plain allgather.
    EqualBlocks,
    /// Lengths differ: allgather of lengths, then allgatherv.
    UnevenBlocks,
}

impl GatherPath {
    pub fn as_str(self) -> &'static str {
        match self {
            GatherPath::EqualBlocks => "EqualBlocks",
            GatherPath::UnevenBlocks => "UnevenBlocks",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistOptions {
    pub ranks: usize,
    pub row_sizes: Option<Vec<usize>>,
    pub col_sizes: Option<Vec<usize>>,
    pub mode: ExecMode,
}

impl DistOptions {
    pub fn new(ranks: usize) -> Self {
        DistOptions {
            ranks,
            row_sizes: None,
            col_sizes: None,
            mode: ExecMode::Parallel,
        }
    }

    pub fn with_mode(mut self, mode: ExecMode) -> Self {
        self.mode = mode;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistRunReport<T> {
    pub size: usize,
    pub row_layout: Layout,
    pub col_layout: Layout,
    /// Local slices of `y`, in rank order.
    pub per_rank_y: Vec<Vec<T>>,
    /// The allreduced squared residual as seen by rank 0.
    pub residual_sq: T,
    /// The allreduced squared residual as seen by every rank.
    pub per_rank_residual: Vec<T>,
    pub gather_path: GatherPath,
    pub trace: CollectiveTrace,
}

impl<T: Scalar> DistRunReport<T> {
    /// All local slices joined in rank order.
    pub fn y(&self) -> Vec<T> {
        self.per_rank_y.iter().flatten().copied().collect()
    }

    pub fn passed(&self) -> bool {
        check_pass(self.residual_sq)
    }

    /// Bit-level equality of every numeric field, the layouts and the trace.
    pub fn bitwise_eq(&self, other: &Self) -> bool {
        use crate::scalar::bitwise_eq;
        self.size == other.size
            && self.row_layout == other.row_layout
            && self.col_layout == other.col_layout
            && self.per_rank_y.len() == other.per_rank_y.len()
            && self
                .per_rank_y
                .iter()
                .zip(&other.per_rank_y)
                .all(|(a, b)| bitwise_eq(a, b))
            && bitwise_eq(&[self.residual_sq], &[other.residual_sq])
            && bitwise_eq(&self.per_rank_residual, &other.per_rank_residual)
            && self.gather_path == other.gather_path
            && self.trace == other.trace
    }
}

/// Gathers every rank's slice of `x` into the full vector on every rank.
///
/// For a default block layout the path follows `N % size`; for an explicit
/// layout every rank's length is gathered first and compared.
pub async fn gather_x<T: Scalar>(
    ctx: &RankContext,
    local_x: &[T],
    col_layout: &Layout,
) -> Result<(Vec<T>, GatherPath)> {
    let size = ctx.size();
    let n = local_x.len();
    let mut counts = None;
    let uniform = match col_layout.kind {
        LayoutKind::Block => col_layout.global.is_multiple_of(size),
        LayoutKind::Explicit => {
            let all = ctx.allgather(&[n]).await?;
            let equal = all.windows(2).all(|w| w[0] == w[1]);
            counts = Some(all);
            equal
        }
    };
    if uniform {
        return Ok((ctx.allgather(local_x).await?, GatherPath::EqualBlocks));
    }
    let counts = match counts {
        Some(c) => c,
        None => ctx.allgather(&[n]).await?,
    };
    let displs = exclusive_prefix_sums(&counts);
    let x = ctx.allgatherv(local_x, &counts, &displs).await?;
    Ok((x, GatherPath::UnevenBlocks))
}

struct RankOutput<T> {
    y: Vec<T>,
    residual: T,
    path: GatherPath,
}

async fn rank_program<T: Scalar>(
    ctx: RankContext,
    fixture: &Fixture<T>,
    row_layout: &Layout,
    col_layout: &Layout,
) -> Result<RankOutput<T>> {
    let rank = ctx.rank();
    let a = &fixture.matrix;
    let (m, n) = (row_layout.local_size(rank), col_layout.local_size(rank));

    let mut rstart = ctx.exscan_sum(m).await?;
    if rank == 0 {
        rstart = 0;
    }
    let mut cstart = ctx.exscan_sum(n).await?;
    if rank == 0 {
        cstart = 0;
    }
    if rstart != row_layout.start(rank) || cstart != col_layout.start(rank) {
        return Err(Error::SizeMismatch(format!(
            "rank {rank}: scanned starts ({rstart}, {cstart}) disagree with the layout"
        )));
    }

    let local = extract_rows(a, rstart, m, cstart, n)?;
    let x_local = &fixture.x[cstart..cstart + n];
    let z_local = &fixture.z[rstart..rstart + m];

    let (x_full, path) = gather_x(&ctx, x_local, col_layout).await?;
    let y = spmv_seq(&local, &DenseVector::from_vec(x_full))?.values;

    let partial = residual_sq_slices(&y, z_local)?;
    let residual = ctx.allreduce_sum(partial).await?;
    Ok(RankOutput { y, residual, path })
}

/// Runs the distributed product of `fixture` on `opts.ranks` simulated ranks.
pub fn run_distributed<T: Scalar>(
    fixture: &Fixture<T>,
    opts: &DistOptions,
) -> Result<DistRunReport<T>> {
    if opts.ranks == 0 {
        return Err(Error::InvalidSize);
    }
    fixture.check_structure()?;
    let row_layout = build_layout(fixture.rows(), opts.ranks, opts.row_sizes.as_deref())?;
    let col_layout = build_layout(fixture.cols(), opts.ranks, opts.col_sizes.as_deref())?;

    let (rl, cl) = (&row_layout, &col_layout);
    let run = run_ranks(opts.ranks, opts.mode, |ctx| {
        rank_program(ctx, fixture, rl, cl)
    })?;

    let gather_path = run.results[0].path;
    if run.results.iter().any(|r| r.path != gather_path) {
        return Err(Error::SizeMismatch(
            "ranks disagree on the gather path".into(),
        ));
    }
    let per_rank_residual: Vec<T> = run.results.iter().map(|r| r.residual).collect();
    Ok(DistRunReport {
        size: opts.ranks,
        residual_sq: per_rank_residual[0],
        per_rank_residual,
        per_rank_y: run.results.into_iter().map(|r| r.y).collect(),
        gather_path,
        trace: run.trace,
        row_layout,
        col_layout,
    })
}
