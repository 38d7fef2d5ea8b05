use proptest::collection::{btree_set, vec};
use proptest::prelude::*;

use spmv_core::layout::exclusive_prefix_sums;
use spmv_core::{
    bitwise_eq, block_local_size, build_layout, dense_from_csr, extract_local, generate,
    residual_sq, run_distributed, run_ranks, spmv_dense_oracle, spmv_seq, validate_csr,
    CsrMatrixF64, DenseVector, DistOptions, ExecMode, Fill, GenParams,
};

/// Random CSR with distinct, shuffled columns per row and integer values.
fn csr_strategy(
    max_rows: usize,
    max_cols: usize,
) -> impl Strategy<Value = (CsrMatrixF64, Vec<f64>)> {
    (1..=max_rows, 1..=max_cols).prop_flat_map(|(rows, cols)| {
        let row = btree_set(0..cols, 0..=cols)
            .prop_map(|s| s.into_iter().collect::<Vec<_>>())
            .prop_shuffle();
        (
            vec(row, rows),
            vec(-20i32..=20, rows * cols),
            vec(-9i32..=9, cols),
        )
            .prop_map(move |(pattern, pool, x)| {
                let mut row_ptr = vec![0];
                let mut col_idx = Vec::new();
                for r in pattern {
                    col_idx.extend(r);
                    row_ptr.push(col_idx.len());
                }
                let values = pool[..col_idx.len()]
                    .iter()
                    .map(|&v| f64::from(v))
                    .collect();
                let mat = CsrMatrixF64::sequential(rows, cols, row_ptr, col_idx, values);
                (mat, x.into_iter().map(f64::from).collect())
            })
    })
}

proptest! {
    #[test]
    fn kernel_equals_dense_oracle((mat, x) in csr_strategy(12, 12)) {
        prop_assert!(validate_csr(&mat).is_ok());
        let x = DenseVector::from_vec(x);
        let y = spmv_seq(&mat, &x).unwrap();
        let o = spmv_dense_oracle(&dense_from_csr(&mat).unwrap(), &x).unwrap();
        prop_assert!(bitwise_eq(&y.values, &o.values));
    }

    #[test]
    fn kernel_close_to_oracle_on_reals(
        (mat, x) in csr_strategy(10, 10),
        scale in 0.001f64..1000.0,
    ) {
        let mut mat = mat;
        for (k, v) in mat.values.iter_mut().enumerate() {
            *v = *v * scale + (k as f64).sin();
        }
        let x = DenseVector::from_vec(x.iter().map(|v| v / 7.0).collect());
        let y = spmv_seq(&mat, &x).unwrap();
        let o = spmv_dense_oracle(&dense_from_csr(&mat).unwrap(), &x).unwrap();
        for i in 0..mat.local_rows {
            let mag: f64 = mat.row_entries(i).map(|(c, a)| (a * x.values[c]).abs()).sum();
            prop_assert!((y.values[i] - o.values[i]).abs() <= 1e-12 * mag.max(f64::MIN_POSITIVE));
        }
    }

    #[test]
    fn power_of_two_scaling_is_exact((mat, x) in csr_strategy(10, 10), k in -8i32..8) {
        let alpha = 2f64.powi(k);
        let base = spmv_seq(&mat, &DenseVector::from_vec(x.clone())).unwrap();
        let scaled_x: Vec<f64> = x.iter().map(|v| v * alpha).collect();
        let scaled = spmv_seq(&mat, &DenseVector::from_vec(scaled_x)).unwrap();
        let expected: Vec<f64> = base.values.iter().map(|v| v * alpha).collect();
        prop_assert!(bitwise_eq(&scaled.values, &expected));
    }

    #[test]
    fn empty_rows_stay_zero((mat, _) in csr_strategy(10, 10), x in vec(-1e300f64..1e300, 10)) {
        let y = spmv_seq(&mat, &DenseVector::from_vec(x)).unwrap();
        for i in 0..mat.local_rows {
            if mat.row_range(i).is_empty() {
                prop_assert_eq!(y.values[i].to_bits(), 0.0f64.to_bits());
            }
        }
    }

    #[test]
    fn residual_zero_iff_equal(a in vec(-1e6f64..1e6, 0..20), flip in any::<prop::sample::Index>()) {
        let y = DenseVector::from_vec(a.clone());
        prop_assert_eq!(residual_sq(&y, &y).unwrap(), 0.0);
        if !a.is_empty() {
            let mut b = a.clone();
            let i = flip.index(a.len());
            b[i] += 1.0;
            let r = residual_sq(&y, &DenseVector::from_vec(b)).unwrap();
            prop_assert!(r > 0.0);
        }
    }

    #[test]
    fn extraction_round_trips((mat, _) in csr_strategy(20, 8), size in 1usize..=10) {
        let rows = build_layout(mat.global_rows, size, None).unwrap();
        let cols = build_layout(mat.global_cols, size, None).unwrap();
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for rank in 0..size {
            let local = extract_local(&mat, &rows, &cols, rank).unwrap();
            prop_assert!(validate_csr(&local).is_ok());
            prop_assert_eq!(local.local_rows, rows.local_size(rank));
            let base = *row_ptr.last().unwrap();
            row_ptr.extend(local.row_ptr[1..].iter().map(|p| p + base));
            col_idx.extend(local.col_idx);
            values.extend(local.values);
        }
        prop_assert_eq!(row_ptr, mat.row_ptr.clone());
        prop_assert_eq!(col_idx, mat.col_idx.clone());
        prop_assert_eq!(values, mat.values.clone());
    }

    #[test]
    fn explicit_layouts_match_scan(sizes in vec(0usize..6, 1..8)) {
        let global: usize = sizes.iter().sum();
        let layout = build_layout(global, sizes.len(), Some(&sizes)).unwrap();
        let s = &sizes;
        let run = run_ranks(sizes.len(), ExecMode::Sequential, |ctx| async move {
            Ok(ctx.exscan_sum(s[ctx.rank()]).await?)
        }).unwrap();
        prop_assert_eq!(&run.results, &layout.starts);
        for (r, w) in run.results.windows(2).enumerate() {
            prop_assert_eq!(w[0] + sizes[r], w[1]);
        }
    }

    #[test]
    fn allgatherv_equal_counts_is_allgather(block in 0usize..5, size in 1usize..6, seed in any::<u32>()) {
        let data: Vec<f64> = (0..block * size).map(|k| f64::from(seed) + k as f64).collect();
        let d = &data;
        let counts = vec![block; size];
        let displs = exclusive_prefix_sums(&counts);
        let (c, ds) = (&counts, &displs);
        let a = run_ranks(size, ExecMode::Parallel, |ctx| async move {
            let r = ctx.rank();
            Ok(ctx.allgather(&d[r * block..(r + 1) * block]).await?)
        }).unwrap();
        let b = run_ranks(size, ExecMode::Parallel, |ctx| async move {
            let r = ctx.rank();
            Ok(ctx.allgatherv(&d[r * block..(r + 1) * block], c, ds).await?)
        }).unwrap();
        prop_assert_eq!(&a.results, &b.results);
        prop_assert!(a.results.iter().all(|v| v == d));
    }

    #[test]
    fn allreduce_is_left_to_right(values in vec(-1e10f64..1e10, 1..9)) {
        let v = &values;
        for mode in [ExecMode::Parallel, ExecMode::Sequential] {
            let run = run_ranks(values.len(), mode, |ctx| async move {
                Ok(ctx.allreduce_sum(v[ctx.rank()]).await?)
            }).unwrap();
            let expected = values.iter().fold(0.0, |acc, x| acc + x);
            prop_assert!(run.results.iter().all(|r| r.to_bits() == expected.to_bits()));
        }
    }

    #[test]
    fn distributed_equals_sequential(
        rows in 1usize..30,
        cols in 1usize..30,
        fill in 0usize..6,
        seed in any::<u64>(),
        size in 1usize..=8,
    ) {
        let fixture = generate::<f64>(&GenParams::new(rows, cols, Fill::MaxPerRow(fill.min(cols)), seed)).unwrap();
        let seq = spmv_seq(&fixture.matrix, &fixture.x_vector()).unwrap();
        prop_assert_eq!(&seq.values, &fixture.z);
        let report = run_distributed(&fixture, &DistOptions::new(size)).unwrap();
        prop_assert!(bitwise_eq(&report.y(), &seq.values));
        prop_assert_eq!(report.residual_sq, 0.0);
        prop_assert_eq!(report.row_layout.local_sizes.iter().sum::<usize>(), rows);
        prop_assert_eq!(report.col_layout.local_sizes.iter().sum::<usize>(), cols);
        prop_assert!(report.trace.is_complete(size));
    }

    #[test]
    fn generated_fixtures_are_valid(
        rows in 1usize..40,
        cols in 1usize..40,
        density in 0.0f64..1.0,
        seed in any::<u64>(),
    ) {
        let nnz = ((rows * cols) as f64 * density) as usize;
        let fixture = generate::<f64>(&GenParams::new(rows, cols, Fill::Nnz(nnz), seed)).unwrap();
        prop_assert_eq!(fixture.nnz(), nnz);
        prop_assert!(fixture.validate().is_ok());
        for r in 0..rows {
            let cols: Vec<usize> = fixture.matrix.row_entries(r).map(|(c, _)| c).collect();
            prop_assert!(cols.windows(2).all(|w| w[0] < w[1]));
        }
    }
}

#[test]
fn block_sizes_exhaustive() {
    for global in 0..=200 {
        for size in 1..=16 {
            let sizes: Vec<usize> = (0..size)
                .map(|r| block_local_size(global, size, r).unwrap())
                .collect();
            assert_eq!(sizes.iter().sum::<usize>(), global);
            assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            assert!(sizes.windows(2).all(|w| w[0] >= w[1]));
        }
    }
}

#[test]
fn single_precision_distributed() {
    let fixture = generate::<f32>(&GenParams::new(17, 23, Fill::MaxPerRow(6), 4)).unwrap();
    for size in 1..=6 {
        let report = run_distributed(&fixture, &DistOptions::new(size)).unwrap();
        assert_eq!(report.y(), fixture.z);
        assert_eq!(report.residual_sq, 0.0f32);
    }
}
