//! Correctness checks for the sequential and distributed products, packaged
//! as reports. Every check is evaluated even after an earlier one fails, so
//! a report points at the faulty stage.

use std::fmt;

use serde::Serialize;

use crate::csr::{dense_from_csr, residual_sq, spmv_dense_oracle, spmv_seq};
use crate::dist::{check_pass, run_distributed, DistOptions, DistRunReport, GatherPath};
use crate::error::Result;
use crate::fixture::Fixture;
use crate::layout::{build_layout, extract_local, Layout, LayoutKind};
use crate::scalar::{bitwise_eq, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
}

impl VerificationReport {
    fn push(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    fn push_result(&mut self, name: impl Into<String>, outcome: Result<String, String>) {
        match outcome {
            Ok(detail) => self.push(name, true, detail),
            Err(detail) => self.push(name, false, detail),
        }
    }

    /// Conjunction of all checks.
    pub fn overall(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn extend(&mut self, other: VerificationReport) {
        self.checks.extend(other.checks);
    }

    /// One JSON object per line, one line per check.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&serde_json::to_string(c).expect("check serializes"));
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let mark = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "[{mark}] {}: {}", c.name, c.detail)?;
        }
        write!(
            f,
            "overall: {}",
            if self.overall() { "PASS" } else { "FAIL" }
        )
    }
}

fn first_difference<T: Scalar>(got: &[T], want: &[T]) -> String {
    if got.len() != want.len() {
        return format!("length {} != {}", got.len(), want.len());
    }
    match got
        .iter()
        .zip(want)
        .position(|(a, b)| a.bit_pattern() != b.bit_pattern())
    {
        Some(i) => format!("first difference at {i}: {} != {}", got[i], want[i]),
        None => "identical".into(),
    }
}

/// Kernel against the dense oracle, residual against `z`, and agreement of
/// the pass decision with the residual.
pub fn verify_sequential<T: Scalar>(fixture: &Fixture<T>) -> VerificationReport {
    let mut report = VerificationReport::default();
    let x = fixture.x_vector();
    let y = spmv_seq(&fixture.matrix, &x);

    let oracle = dense_from_csr(&fixture.matrix).and_then(|d| spmv_dense_oracle(&d, &x));
    report.push_result(
        "seq.kernel_matches_oracle",
        match (&y, &oracle) {
            (Ok(y), Ok(o)) if bitwise_eq(&y.values, &o.values) => {
                Ok(format!("{} rows identical", y.len()))
            }
            (Ok(y), Ok(o)) => Err(first_difference(&y.values, &o.values)),
            (Err(e), _) => Err(format!("kernel failed: {e}")),
            (_, Err(e)) => Err(format!("oracle failed: {e}")),
        },
    );

    let residual = y
        .as_ref()
        .map_err(|e| format!("kernel failed: {e}"))
        .and_then(|y| residual_sq(y, &fixture.z_vector()).map_err(|e| e.to_string()));
    report.push_result(
        "seq.residual",
        match &residual {
            Ok(r) if check_pass(*r) => Ok(format!("residualSq == {r}")),
            Ok(r) => Err(format!("residualSq == {r}")),
            Err(e) => Err(e.clone()),
        },
    );

    report.push_result(
        "seq.pass_consistency",
        match &residual {
            Ok(r) => {
                let verdict = check_pass(*r);
                let expected = r.to_f64().is_some_and(|v| v <= 1e-6);
                if verdict == expected {
                    Ok(format!("check_pass = {verdict}"))
                } else {
                    Err(format!("check_pass = {verdict} but residual {r}"))
                }
            }
            Err(e) => Err(e.clone()),
        },
    );
    report
}

/// Distributed obligations for one rank count:
///
/// * layouts sum to `M` and `N`;
/// * each rank's `y` is the product of its extracted rows with the full `x`;
/// * the joined `y` equals the sequential product;
/// * the allreduced residual passes and is the same on every rank;
/// * the gather path is the one the column layout predicts.
pub fn verify_distributed<T: Scalar>(
    fixture: &Fixture<T>,
    opts: &DistOptions,
) -> VerificationReport {
    let mut report = VerificationReport::default();
    let size = opts.ranks;
    let tag = |name: &str| format!("dist[{size}].{name}");

    let rows = build_layout(fixture.rows(), size, opts.row_sizes.as_deref());
    let cols = build_layout(fixture.cols(), size, opts.col_sizes.as_deref());
    let layout_detail = |which: &str, l: &Result<Layout>| match l {
        Ok(l) => Ok(format!("{which} {:?}", l.local_sizes)),
        Err(e) => Err(format!("{which}: {e}")),
    };
    report.push_result(
        tag("layout"),
        match (layout_detail("rows", &rows), layout_detail("cols", &cols)) {
            (Ok(a), Ok(b)) => Ok(format!("{a}, {b}")),
            (Err(e), _) | (_, Err(e)) => Err(e),
        },
    );

    let run: std::result::Result<DistRunReport<T>, String> =
        run_distributed(fixture, opts).map_err(|e| format!("distributed run failed: {e}"));

    report.push_result(
        tag("local_products"),
        run.clone().and_then(|run| {
            let x = fixture.x_vector();
            for rank in 0..size {
                let local = extract_local(&fixture.matrix, &run.row_layout, &run.col_layout, rank)
                    .map_err(|e| format!("rank {rank}: {e}"))?;
                let want = spmv_seq(&local, &x).map_err(|e| format!("rank {rank}: {e}"))?;
                if !bitwise_eq(&run.per_rank_y[rank], &want.values) {
                    return Err(format!(
                        "rank {rank}: {}",
                        first_difference(&run.per_rank_y[rank], &want.values)
                    ));
                }
            }
            Ok(format!("{size} ranks match their sub-products"))
        }),
    );

    report.push_result(
        tag("matches_sequential"),
        run.clone().and_then(|run| {
            let want = spmv_seq(&fixture.matrix, &fixture.x_vector()).map_err(|e| e.to_string())?;
            let got = run.y();
            if bitwise_eq(&got, &want.values) {
                Ok(format!("{} entries identical", got.len()))
            } else {
                Err(first_difference(&got, &want.values))
            }
        }),
    );

    report.push_result(
        tag("residual"),
        run.clone().and_then(|run| {
            let r = run.residual_sq;
            if !bitwise_eq(&run.per_rank_residual, &vec![r; size]) {
                return Err(format!("ranks disagree: {:?}", run.per_rank_residual));
            }
            if check_pass(r) {
                Ok(format!("residualSq == {r}"))
            } else {
                Err(format!("residualSq == {r}"))
            }
        }),
    );

    report.push_result(
        tag("gather_path"),
        run.and_then(|run| {
            let predicted = match run.col_layout.kind {
                LayoutKind::Block if fixture.cols().is_multiple_of(size) => GatherPath::EqualBlocks,
                LayoutKind::Explicit if run.col_layout.is_uniform() => GatherPath::EqualBlocks,
                _ => GatherPath::UnevenBlocks,
            };
            if predicted == run.gather_path {
                Ok(run.gather_path.as_str().to_string())
            } else {
                Err(format!(
                    "took {}, expected {}",
                    run.gather_path.as_str(),
                    predicted.as_str()
                ))
            }
        }),
    );
    report
}

/// Sequential checks followed by distributed checks for each rank count.
pub fn verify_all<T: Scalar>(
    fixture: &Fixture<T>,
    rank_counts: &[usize],
    template: &DistOptions,
) -> VerificationReport {
    let mut report = verify_sequential(fixture);
    for &ranks in rank_counts {
        let opts = DistOptions {
            ranks,
            ..template.clone()
        };
        report.extend(verify_distributed(fixture, &opts));
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csr::CsrMatrix;
    use crate::fixture::{paper_fixture, FixtureMeta, Origin};

    #[test]
    fn paper_passes_sequentially() {
        let report = verify_sequential(&paper_fixture::<f64>());
        assert!(report.overall(), "{report}");
        assert_eq!(report.checks.len(), 3);
    }

    #[test]
    fn corrupted_z_localized() {
        let mut f = paper_fixture::<f64>();
        f.z[0] = 41.0;
        let report = verify_sequential(&f);
        assert!(!report.overall());
        assert!(report.check("seq.kernel_matches_oracle").unwrap().passed);
        let r = report.check("seq.residual").unwrap();
        assert!(!r.passed);
        assert_eq!(r.detail, "residualSq == 1");
    }

    #[test]
    fn zero_one_by_one() {
        let f = Fixture {
            matrix: CsrMatrix::<f64>::sequential(1, 1, vec![0, 0], vec![], vec![]),
            x: vec![0.0],
            z: vec![0.0],
            meta: FixtureMeta::new(Origin::Generated),
        };
        assert!(verify_sequential(&f).overall());
        assert!(verify_distributed(&f, &DistOptions::new(2)).overall());
    }

    #[test]
    fn distributed_paper() {
        let f = paper_fixture::<f64>();
        let report = verify_distributed(&f, &DistOptions::new(3));
        assert!(report.overall(), "{report}");
        let report = verify_distributed(&f, &DistOptions::new(5));
        assert!(report.overall(), "{report}");
        assert_eq!(
            report.check("dist[5].gather_path").unwrap().detail,
            "UnevenBlocks"
        );
    }

    #[test]
    fn bad_row_layout_named() {
        let f = paper_fixture::<f64>();
        let mut opts = DistOptions::new(2);
        opts.row_sizes = Some(vec![16, 15]);
        let report = verify_distributed(&f, &opts);
        assert!(!report.overall());
        let layout = report.check("dist[2].layout").unwrap();
        assert!(!layout.passed);
        assert_eq!(layout.detail, "rows: sum 31 != 32");
        assert_eq!(report.checks.len(), 5);
    }

    #[test]
    fn json_lines() {
        let report = verify_sequential(&paper_fixture::<f64>());
        let text = report.to_json_lines();
        assert_eq!(text.lines().count(), 3);
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(first["name"], "seq.kernel_matches_oracle");
        assert_eq!(first["passed"], true);
    }
}
