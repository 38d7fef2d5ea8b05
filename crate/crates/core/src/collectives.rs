//! In-process simulation of the message-passing collectives used by the
//! distributed SpMV: exclusive scan, allgather, allgatherv and allreduce.
//!
//! A rank program is an async closure receiving a [`RankContext`]. Every
//! collective call is a rendezvous: a rank deposits its contribution under
//! its next sequence number and waits until all ranks have deposited for
//! that sequence number. Each rank then derives its own result from the
//! full, rank-ordered list of contributions, so results never depend on
//! arrival order.
//!
//! Two executors drive the same programs:
//!
//! * [`ExecMode::Parallel`] gives every rank its own OS thread.
//! * [`ExecMode::Sequential`] polls all ranks round-robin, in rank order, on
//!   the calling thread. Useful under a debugger.
//!
//! Protocol errors that would hang real MPI (ranks issuing different
//! collectives, a rank exiting while others wait) are detected and
//! reported as [`CommError`] on every waiting rank.

use std::any::Any;
use std::collections::BTreeMap;
use std::fmt;
use std::future::Future;
use std::ops::Add;
use std::panic::{self, AssertUnwindSafe};
use std::pin::Pin;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};
use std::task::{Context, Poll, Wake, Waker};
use std::thread::{self, Thread};

use num_traits::Zero;
use thiserror::Error;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CommError {
    #[error("collective mismatch at seq {seq}: {detail}")]
    CollectiveMismatch { seq: u64, detail: String },

    #[error("allgather blocks have unequal lengths {lengths:?}")]
    UnequalBlockLength { lengths: Vec<usize> },

    #[error("rank {rank} block has {found} entries but counts say {expected}")]
    CountMismatch {
        rank: usize,
        expected: usize,
        found: usize,
    },

    #[error("displacements {displs:?} are not the packed prefix sums of counts {counts:?}")]
    OverlappingDisplacement {
        counts: Vec<usize>,
        displs: Vec<usize>,
    },

    #[error("rank {rank} failed; collective aborted")]
    Aborted { rank: usize },
}

/// Executor used by [`run_ranks`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecMode {
    /// One thread per rank.
    #[default]
    Parallel,
    /// All ranks interleaved deterministically on the calling thread.
    Sequential,
}

/// One participant record of one collective call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    pub seq: u64,
    pub op: &'static str,
    pub rank: usize,
    /// Number of elements contributed.
    pub len: usize,
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "seq={} op={} rank={} len={}",
            self.seq, self.op, self.rank, self.len
        )
    }
}

/// Collective participation records, ordered by `(seq, rank)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CollectiveTrace {
    pub records: Vec<TraceRecord>,
}

impl CollectiveTrace {
    /// Renders one line per record.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&r.to_string());
            out.push('\n');
        }
        out
    }

    /// True when every sequence number has exactly `size` records, one per
    /// rank, all naming the same operation.
    pub fn is_complete(&self, size: usize) -> bool {
        let mut by_seq: BTreeMap<u64, Vec<&TraceRecord>> = BTreeMap::new();
        for r in &self.records {
            by_seq.entry(r.seq).or_default().push(r);
        }
        by_seq.values().all(|recs| {
            recs.len() == size
                && recs.iter().enumerate().all(|(rank, r)| r.rank == rank)
                && recs.iter().all(|r| r.op == recs[0].op)
        })
    }

    /// Number of distinct collective calls.
    pub fn collective_count(&self) -> usize {
        let mut seqs: Vec<u64> = self.records.iter().map(|r| r.seq).collect();
        seqs.dedup();
        seqs.len()
    }
}

/// Output of [`run_ranks`]: per-rank results in rank order plus the trace.
#[derive(Debug, Clone)]
pub struct RankRun<R> {
    pub results: Vec<R>,
    pub trace: CollectiveTrace,
}

type Payload = Arc<dyn Any + Send + Sync>;

struct Round {
    op: &'static str,
    contributions: Vec<Option<Payload>>,
    arrived: usize,
    collected: usize,
}

struct State {
    rounds: BTreeMap<u64, Round>,
    next_seq: Vec<u64>,
    /// Collectives issued by a rank that has returned.
    finished: Vec<Option<u64>>,
    failure: Option<CommError>,
    wakers: Vec<Option<Waker>>,
    trace: Vec<TraceRecord>,
}

struct Shared {
    size: usize,
    state: Mutex<State>,
}

impl Shared {
    fn new(size: usize) -> Self {
        Shared {
            size,
            state: Mutex::new(State {
                rounds: BTreeMap::new(),
                next_seq: vec![0; size],
                finished: vec![None; size],
                failure: None,
                wakers: vec![None; size],
                trace: Vec::new(),
            }),
        }
    }

    fn lock(&self) -> MutexGuard<'_, State> {
        // a poisoned lock only means a rank panicked; the panic is re-raised
        // by the executor, so the state is still usable for draining
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn fail(state: &mut State, err: CommError) {
        if state.failure.is_none() {
            state.failure = Some(err);
        }
        for w in state.wakers.iter_mut() {
            if let Some(w) = w.take() {
                w.wake();
            }
        }
    }

    /// Registers `rank`'s contribution to its next collective.
    fn deposit(
        &self,
        rank: usize,
        op: &'static str,
        len: usize,
        payload: Payload,
    ) -> Result<u64, CommError> {
        let mut st = self.lock();
        if let Some(err) = &st.failure {
            return Err(err.clone());
        }
        let seq = st.next_seq[rank];
        st.next_seq[rank] += 1;

        if let Some((gone, count)) = st
            .finished
            .iter()
            .enumerate()
            .find_map(|(r, f)| f.filter(|&c| c <= seq).map(|c| (r, c)))
        {
            let err = CommError::CollectiveMismatch {
                seq,
                detail: format!(
                    "rank {rank} called {op} but rank {gone} returned after {count} collectives"
                ),
            };
            Self::fail(&mut st, err.clone());
            return Err(err);
        }

        let size = self.size;
        let round = st.rounds.entry(seq).or_insert_with(|| Round {
            op,
            contributions: vec![None; size],
            arrived: 0,
            collected: 0,
        });
        if round.op != op {
            let err = CommError::CollectiveMismatch {
                seq,
                detail: format!(
                    "rank {rank} called {op} while another rank called {}",
                    round.op
                ),
            };
            Self::fail(&mut st, err.clone());
            return Err(err);
        }
        round.contributions[rank] = Some(payload);
        round.arrived += 1;
        let complete = round.arrived == size;
        st.trace.push(TraceRecord { seq, op, rank, len });
        if complete {
            for w in st.wakers.iter_mut() {
                if let Some(w) = w.take() {
                    w.wake();
                }
            }
        }
        Ok(seq)
    }

    fn poll_round(
        &self,
        rank: usize,
        seq: u64,
        cx: &mut Context<'_>,
    ) -> Poll<Result<Vec<Payload>, CommError>> {
        let mut st = self.lock();
        if let Some(err) = &st.failure {
            return Poll::Ready(Err(err.clone()));
        }
        let size = self.size;
        let round = st.rounds.get_mut(&seq).expect("round exists after deposit");
        if round.arrived < size {
            st.wakers[rank] = Some(cx.waker().clone());
            return Poll::Pending;
        }
        let all = round
            .contributions
            .iter()
            .map(|c| c.clone().expect("complete round has every contribution"))
            .collect();
        round.collected += 1;
        if round.collected == size {
            st.rounds.remove(&seq);
        }
        Poll::Ready(Ok(all))
    }

    /// Marks `rank` as returned. Any round still waiting on it can never
    /// complete, so waiting ranks are failed.
    fn finish(&self, rank: usize, failed: bool) {
        let mut st = self.lock();
        let issued = st.next_seq[rank];
        st.finished[rank] = Some(issued);
        let stranded = st
            .rounds
            .iter()
            .find(|(&seq, round)| seq >= issued && round.arrived < self.size)
            .map(|(&seq, round)| (seq, round.op));
        if failed {
            Self::fail(&mut st, CommError::Aborted { rank });
        } else if let Some((seq, op)) = stranded {
            Self::fail(
                &mut st,
                CommError::CollectiveMismatch {
                    seq,
                    detail: format!("rank {rank} returned without calling {op}"),
                },
            );
        }
    }

    fn trace(&self) -> CollectiveTrace {
        let mut records = self.lock().trace.clone();
        records.sort_by_key(|r| (r.seq, r.rank));
        CollectiveTrace { records }
    }
}

/// A rank's handle on the simulated communicator.
#[derive(Clone)]
pub struct RankContext {
    rank: usize,
    shared: Arc<Shared>,
}

impl fmt::Debug for RankContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RankContext")
            .field("rank", &self.rank)
            .field("size", &self.shared.size)
            .finish()
    }
}

impl RankContext {
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn size(&self) -> usize {
        self.shared.size
    }

    /// Deposits `payload` and waits for every rank's contribution, returned
    /// typed and in rank order.
    async fn exchange<P: Any + Send + Sync>(
        &self,
        op: &'static str,
        len: usize,
        payload: P,
    ) -> Result<Vec<Arc<P>>, CommError> {
        let seq = self.shared.deposit(self.rank, op, len, Arc::new(payload))?;
        let all = std::future::poll_fn(|cx| self.shared.poll_round(self.rank, seq, cx)).await?;
        all.into_iter()
            .enumerate()
            .map(|(rank, p)| {
                p.downcast::<P>()
                    .map_err(|_| CommError::CollectiveMismatch {
                        seq,
                        detail: format!("rank {rank} passed a different element type to {op}"),
                    })
            })
            .collect()
    }

    /// Sum of the values contributed by lower ranks; rank 0 receives zero.
    pub async fn exscan_sum<V>(&self, value: V) -> Result<V, CommError>
    where
        V: Zero + Add<Output = V> + Copy + Send + Sync + 'static,
    {
        let vals = self.exchange("exscan_sum", 1, value).await?;
        Ok(vals[..self.rank].iter().fold(V::zero(), |acc, v| acc + **v))
    }

    /// Concatenation of equally sized blocks in rank order.
    pub async fn allgather<V>(&self, block: &[V]) -> Result<Vec<V>, CommError>
    where
        V: Clone + Send + Sync + 'static,
    {
        let blocks = self
            .exchange("allgather", block.len(), block.to_vec())
            .await?;
        if blocks.iter().any(|b| b.len() != block.len()) {
            return Err(CommError::UnequalBlockLength {
                lengths: blocks.iter().map(|b| b.len()).collect(),
            });
        }
        Ok(blocks.iter().flat_map(|b| b.iter().cloned()).collect())
    }

    /// Gathers variable-size blocks; rank `r`'s block lands at
    /// `displs[r]..displs[r] + counts[r]`.
    ///
    /// Only the packed layout is accepted: `displs` must be the exclusive
    /// prefix sums of `counts`.
    pub async fn allgatherv<V>(
        &self,
        block: &[V],
        counts: &[usize],
        displs: &[usize],
    ) -> Result<Vec<V>, CommError>
    where
        V: Clone + Send + Sync + 'static,
    {
        let size = self.size();
        if counts.len() != size || counts[self.rank] != block.len() {
            return Err(CommError::CountMismatch {
                rank: self.rank,
                expected: counts.get(self.rank).copied().unwrap_or(0),
                found: block.len(),
            });
        }
        if displs != crate::layout::exclusive_prefix_sums(counts).as_slice() {
            return Err(CommError::OverlappingDisplacement {
                counts: counts.to_vec(),
                displs: displs.to_vec(),
            });
        }
        let blocks = self
            .exchange("allgatherv", block.len(), block.to_vec())
            .await?;
        let mut out = Vec::with_capacity(counts.iter().sum());
        for (rank, b) in blocks.into_iter().enumerate() {
            if b.len() != counts[rank] {
                return Err(CommError::CountMismatch {
                    rank,
                    expected: counts[rank],
                    found: b.len(),
                });
            }
            out.extend(b.iter().cloned());
        }
        Ok(out)
    }

    /// Sum over all ranks, accumulated in ascending rank order.
    pub async fn allreduce_sum<V>(&self, value: V) -> Result<V, CommError>
    where
        V: Zero + Add<Output = V> + Copy + Send + Sync + 'static,
    {
        let vals = self.exchange("allreduce_sum", 1, value).await?;
        Ok(vals.iter().fold(V::zero(), |acc, v| acc + **v))
    }
}

struct Signal {
    woken: AtomicBool,
    thread: Option<Thread>,
}

impl Wake for Signal {
    fn wake(self: Arc<Self>) {
        self.wake_by_ref();
    }

    fn wake_by_ref(self: &Arc<Self>) {
        self.woken.store(true, Ordering::Release);
        if let Some(t) = &self.thread {
            t.unpark();
        }
    }
}

fn block_on<F: Future>(fut: F) -> F::Output {
    let signal = Arc::new(Signal {
        woken: AtomicBool::new(false),
        thread: Some(thread::current()),
    });
    let waker = Waker::from(signal.clone());
    let mut cx = Context::from_waker(&waker);
    let mut fut = std::pin::pin!(fut);
    loop {
        if let Poll::Ready(out) = fut.as_mut().poll(&mut cx) {
            return out;
        }
        while !signal.woken.swap(false, Ordering::AcqRel) {
            thread::park();
        }
    }
}

/// Runs `program` once per rank and returns the results in rank order.
///
/// When ranks fail, the error of the lowest rank that failed on its own
/// account is returned; ranks that were only aborted because a peer failed
/// are reported last.
pub fn run_ranks<R, F, Fut>(size: usize, mode: ExecMode, program: F) -> Result<RankRun<R>>
where
    F: Fn(RankContext) -> Fut + Sync,
    Fut: Future<Output = Result<R>> + Send,
    R: Send,
{
    if size == 0 {
        return Err(Error::InvalidSize);
    }
    let shared = Arc::new(Shared::new(size));
    let contexts: Vec<RankContext> = (0..size)
        .map(|rank| RankContext {
            rank,
            shared: shared.clone(),
        })
        .collect();

    let outcomes = match mode {
        ExecMode::Parallel => run_parallel(&shared, contexts, &program),
        ExecMode::Sequential => run_sequential(&shared, contexts, &program),
    };

    let mut results = Vec::with_capacity(size);
    let mut first_err: Option<Error> = None;
    let mut aborted: Option<Error> = None;
    for outcome in outcomes {
        match outcome {
            Ok(r) => results.push(r),
            Err(Error::Comm(CommError::Aborted { rank })) => {
                aborted.get_or_insert(Error::Comm(CommError::Aborted { rank }));
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    if let Some(e) = first_err.or(aborted) {
        return Err(e);
    }
    Ok(RankRun {
        results,
        trace: shared.trace(),
    })
}

fn run_parallel<R, F, Fut>(
    shared: &Arc<Shared>,
    contexts: Vec<RankContext>,
    program: &F,
) -> Vec<Result<R>>
where
    F: Fn(RankContext) -> Fut + Sync,
    Fut: Future<Output = Result<R>> + Send,
    R: Send,
{
    thread::scope(|scope| {
        let handles: Vec<_> = contexts
            .into_iter()
            .map(|ctx| {
                let shared = shared.clone();
                scope.spawn(move || {
                    let rank = ctx.rank;
                    let outcome = panic::catch_unwind(AssertUnwindSafe(|| block_on(program(ctx))));
                    shared.finish(rank, !matches!(outcome, Ok(Ok(_))));
                    outcome
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| match h.join().expect("rank thread outcome") {
                Ok(outcome) => outcome,
                Err(payload) => panic::resume_unwind(payload),
            })
            .collect()
    })
}

fn run_sequential<R, F, Fut>(
    shared: &Arc<Shared>,
    contexts: Vec<RankContext>,
    program: &F,
) -> Vec<Result<R>>
where
    F: Fn(RankContext) -> Fut,
    Fut: Future<Output = Result<R>>,
{
    let size = contexts.len();
    let mut futures: Vec<Option<Pin<Box<Fut>>>> = contexts
        .into_iter()
        .map(|ctx| Some(Box::pin(program(ctx))))
        .collect();
    let mut outcomes: Vec<Option<Result<R>>> = (0..size).map(|_| None).collect();
    let signal = Arc::new(Signal {
        woken: AtomicBool::new(false),
        thread: None,
    });
    let waker = Waker::from(signal.clone());
    let mut cx = Context::from_waker(&waker);

    let mut remaining = size;
    while remaining > 0 {
        let mut progressed = false;
        for rank in 0..size {
            let Some(fut) = futures[rank].as_mut() else {
                continue;
            };
            let polled = panic::catch_unwind(AssertUnwindSafe(|| fut.as_mut().poll(&mut cx)));
            match polled {
                Ok(Poll::Pending) => {}
                Ok(Poll::Ready(out)) => {
                    shared.finish(rank, out.is_err());
                    outcomes[rank] = Some(out);
                    futures[rank] = None;
                    remaining -= 1;
                    progressed = true;
                }
                Err(payload) => {
                    shared.finish(rank, true);
                    panic::resume_unwind(payload);
                }
            }
        }
        let woken = signal.woken.swap(false, Ordering::AcqRel);
        if !progressed && !woken && remaining > 0 {
            // every live rank is parked on a round that cannot complete
            let mut st = shared.lock();
            let seq = st.next_seq.iter().copied().max().unwrap_or(0);
            Shared::fail(
                &mut st,
                CommError::CollectiveMismatch {
                    seq,
                    detail: "no rank can make progress".into(),
                },
            );
        }
    }
    outcomes
        .into_iter()
        .map(|o| o.expect("every rank completed"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MODES: [ExecMode; 2] = [ExecMode::Parallel, ExecMode::Sequential];

    #[test]
    fn independent_programs() {
        for mode in MODES {
            let run = run_ranks(1, mode, |ctx| async move { Ok(ctx.rank()) }).unwrap();
            assert_eq!(run.results, vec![0]);
            let run = run_ranks(3, mode, |ctx| async move { Ok(ctx.rank() * ctx.rank()) }).unwrap();
            assert_eq!(run.results, vec![0, 1, 4]);
            assert!(run.trace.records.is_empty());
        }
    }

    #[test]
    fn zero_ranks_rejected() {
        let err = run_ranks(0, ExecMode::Parallel, |_ctx| async move { Ok(()) }).unwrap_err();
        assert!(matches!(err, Error::InvalidSize));
    }

    #[test]
    fn exscan_examples() {
        for mode in MODES {
            for contrib in [vec![11usize, 11, 10], vec![12, 12, 12], vec![7]] {
                let c = &contrib;
                let run = run_ranks(c.len(), mode, |ctx| async move {
                    Ok(ctx.exscan_sum(c[ctx.rank()]).await?)
                })
                .unwrap();
                assert_eq!(run.results, crate::layout::exclusive_prefix_sums(c));
            }
        }
    }

    #[test]
    fn allgather_concatenates() {
        for mode in MODES {
            let run = run_ranks(3, mode, |ctx| async move {
                let r = ctx.rank() as f64;
                Ok(ctx.allgather(&[2.0 * r + 1.0, 2.0 * r + 2.0]).await?)
            })
            .unwrap();
            for got in run.results {
                assert_eq!(got, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
            }
        }
    }

    #[test]
    fn allgather_unequal_blocks() {
        for mode in MODES {
            let err = run_ranks(2, mode, |ctx| async move {
                let block = vec![1.0f64; 2 + ctx.rank()];
                Ok(ctx.allgather(&block).await?)
            })
            .unwrap_err();
            assert!(
                matches!(err, Error::Comm(CommError::UnequalBlockLength { .. })),
                "{err}"
            );
        }
    }

    #[test]
    fn allgatherv_packs_blocks() {
        for mode in MODES {
            let run = run_ranks(2, mode, |ctx| async move {
                let block: Vec<char> = if ctx.rank() == 0 {
                    vec!['a', 'b']
                } else {
                    vec!['c']
                };
                Ok(ctx.allgatherv(&block, &[2, 1], &[0, 2]).await?)
            })
            .unwrap();
            assert_eq!(run.results, vec![vec!['a', 'b', 'c']; 2]);
        }
    }

    #[test]
    fn allgatherv_misuse() {
        let err = run_ranks(2, ExecMode::Sequential, |ctx| async move {
            Ok(ctx
                .allgatherv(&[1.0f64, 2.0, 3.0], &[2, 1], &[0, 2])
                .await?)
        })
        .unwrap_err();
        assert!(
            matches!(err, Error::Comm(CommError::CountMismatch { rank: 0, .. })),
            "{err}"
        );

        let err = run_ranks(2, ExecMode::Parallel, |ctx| async move {
            let block = vec![0.0f64; if ctx.rank() == 0 { 2 } else { 1 }];
            Ok(ctx.allgatherv(&block, &[2, 1], &[0, 1]).await?)
        })
        .unwrap_err();
        assert!(
            matches!(err, Error::Comm(CommError::OverlappingDisplacement { .. })),
            "{err}"
        );
    }

    #[test]
    fn allgatherv_zero_counts() {
        let run = run_ranks(3, ExecMode::Parallel, |ctx| async move {
            let block: Vec<u8> = if ctx.rank() == 1 {
                vec![]
            } else {
                vec![ctx.rank() as u8]
            };
            Ok(ctx.allgatherv(&block, &[1, 0, 1], &[0, 1, 1]).await?)
        })
        .unwrap();
        assert_eq!(run.results[1], vec![0, 2]);
    }

    #[test]
    fn allreduce_examples() {
        for mode in MODES {
            let run = run_ranks(2, mode, |ctx| async move {
                Ok(ctx.allreduce_sum([1.5f64, 2.5][ctx.rank()]).await?)
            })
            .unwrap();
            assert_eq!(run.results, vec![4.0, 4.0]);
            let run = run_ranks(1, mode, |ctx| async move {
                Ok(ctx.allreduce_sum(3.25f64).await?)
            })
            .unwrap();
            assert_eq!(run.results, vec![3.25]);
        }
    }

    #[test]
    fn allreduce_is_rank_ordered() {
        // (1e16 + 1) + -1e16 loses the 1 in double precision; rank order is
        // fixed so the answer is always 0, never 1
        for _ in 0..20 {
            let run = run_ranks(3, ExecMode::Parallel, |ctx| async move {
                Ok(ctx.allreduce_sum([1e16f64, 1.0, -1e16][ctx.rank()]).await?)
            })
            .unwrap();
            assert_eq!(run.results, vec![0.0; 3]);
        }
    }

    #[test]
    fn mismatched_collectives() {
        for mode in MODES {
            let err = run_ranks(2, mode, |ctx| async move {
                if ctx.rank() == 0 {
                    ctx.allreduce_sum(1.0f64).await?;
                } else {
                    ctx.allgather(&[1.0f64]).await?;
                }
                Ok(())
            })
            .unwrap_err();
            assert!(
                matches!(
                    err,
                    Error::Comm(CommError::CollectiveMismatch { seq: 0, .. })
                ),
                "{err}"
            );
        }
    }

    #[test]
    fn rank_skipping_a_collective() {
        for mode in MODES {
            let err = run_ranks(3, mode, |ctx| async move {
                if ctx.rank() != 1 {
                    ctx.allreduce_sum(1u32).await?;
                }
                Ok(())
            })
            .unwrap_err();
            assert!(
                matches!(err, Error::Comm(CommError::CollectiveMismatch { .. })),
                "{err}"
            );
        }
    }

    #[test]
    fn first_real_failure_wins() {
        for mode in MODES {
            let err = run_ranks(3, mode, |ctx| async move {
                if ctx.rank() == 2 {
                    return Err(Error::InvalidParams("rank 2 gave up".into()));
                }
                ctx.allreduce_sum(1u32).await?;
                Ok(())
            })
            .unwrap_err();
            assert!(matches!(err, Error::InvalidParams(_)), "{err}");
        }
    }

    #[test]
    fn trace_records_every_participant() {
        for mode in MODES {
            let run = run_ranks(4, mode, |ctx| async move {
                let start = ctx.exscan_sum(ctx.rank() + 1).await?;
                let all = ctx.allgather(&[start]).await?;
                Ok(ctx.allreduce_sum(all.len()).await?)
            })
            .unwrap();
            assert_eq!(run.results, vec![16; 4]);
            assert_eq!(run.trace.records.len(), 12);
            assert_eq!(run.trace.collective_count(), 3);
            assert!(run.trace.is_complete(4));
            let text = run.trace.to_text();
            assert_eq!(
                text.lines().next(),
                Some("seq=0 op=exscan_sum rank=0 len=1")
            );
            assert_eq!(text.lines().nth(7), Some("seq=1 op=allgather rank=3 len=1"));
        }
    }
}
