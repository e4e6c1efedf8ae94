use cobra::io::{decode_embeddings, decode_similarity, encode_embeddings, encode_similarity};
use cobra::kernels::{build_sparse, Kernel, KernelSpec};
use cobra::metrics::{coverage_score, vendi_score, VendiKernel};
use cobra::optimize::{gains_non_increasing, greedy_lazy, BudgetConstraint};
use cobra::selection::{round_sig9, SelectionResult};
use cobra::submodular::{Flmi, Objective};
use cobra::{EmbeddingMatrix, GroundSet, SparseSimilarity};
use proptest::prelude::*;

fn triplets(max_n: usize) -> impl Strategy<Value = (usize, Vec<(usize, usize, f64)>)> {
    (2..max_n).prop_flat_map(|n| {
        let entry = (0..n, 0..n, 0.0f64..3.0);
        (Just(n), prop::collection::vec(entry, 0..n * 3))
    })
}

fn dedup(mut t: Vec<(usize, usize, f64)>) -> Vec<(usize, usize, f64)> {
    t.sort_by_key(|&(i, j, _)| (i, j));
    t.dedup_by_key(|&mut (i, j, _)| (i, j));
    t
}

fn embeddings(rows: usize, dim: usize) -> impl Strategy<Value = EmbeddingMatrix> {
    prop::collection::vec(-2.0f32..2.0, rows * dim)
        .prop_map(move |d| EmbeddingMatrix::new(rows, dim, d).unwrap())
}

proptest! {
    #[test]
    fn similarity_round_trip_is_bit_exact((n, t) in triplets(20)) {
        let s = SparseSimilarity::from_triplets(n, dedup(t)).unwrap();
        let back = decode_similarity(&encode_similarity(&s)).unwrap();
        prop_assert_eq!(back.row_offsets(), s.row_offsets());
        prop_assert_eq!(back.column_indices(), s.column_indices());
        let bits = |v: &[f32]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(back.values()), bits(s.values()));
    }

    #[test]
    fn embedding_round_trip_is_bit_exact(e in embeddings(7, 3)) {
        prop_assert_eq!(decode_embeddings(&encode_embeddings(&e)).unwrap(), e);
    }

    #[test]
    fn symmetrized_matrices_are_symmetric((n, t) in triplets(15)) {
        let s = SparseSimilarity::from_triplets(n, dedup(t)).unwrap().symmetrize_max();
        prop_assert!(s.is_symmetric());
        for i in 0..n {
            for j in 0..n {
                prop_assert_eq!(s.get(i, j).unwrap(), s.get(j, i).unwrap());
            }
        }
    }

    #[test]
    fn sparse_build_is_nonnegative_symmetric_and_bounded(
        e in embeddings(24, 3),
        r in 1usize..6,
        restricted in any::<bool>(),
        labels in prop::collection::vec(0u32..3, 24),
    ) {
        let gs = GroundSet::new(4, labels, 3).unwrap();
        for kernel in [Kernel::Rbf { gamma: 0.5 }, Kernel::CosineShifted] {
            let spec = KernelSpec { kernel, per_row_cap: r, class_restricted: restricted };
            let s = match build_sparse(&e, &gs, &spec) {
                Ok(s) => s,
                Err(cobra::Error::ZeroNorm) => continue,
                Err(other) => return Err(TestCaseError::fail(other.to_string())),
            };
            prop_assert!(s.values().iter().all(|&v| v >= 0.0));
            prop_assert!(s.is_symmetric());
            prop_assert!(s.nnz() <= 2 * r * 24);
            for i in 0..24 {
                let (cols, _) = s.row(i);
                prop_assert!(cols.iter().all(|&j| j as usize != i));
                if restricted {
                    prop_assert!(cols.iter().all(|&j| gs.label(j as usize) == gs.label(i)));
                }
            }
        }
    }

    #[test]
    fn vendi_is_permutation_invariant_and_bounded(
        e in embeddings(9, 4),
        perm in Just((0..9usize).collect::<Vec<_>>()).prop_shuffle(),
    ) {
        let items: Vec<usize> = (0..9).collect();
        for k in [VendiKernel::Rbf { gamma: 0.7 }, VendiKernel::Cosine] {
            let (a, b) = match (vendi_score(&items, &e, k), vendi_score(&perm, &e, k)) {
                (Ok(a), Ok(b)) => (a, b),
                _ => continue,
            };
            prop_assert!((a - b).abs() < 1e-6);
            prop_assert!((1.0 - 1e-6..=9.0 + 1e-6).contains(&a));
        }
    }

    #[test]
    fn coverage_is_monotone((n, t) in triplets(14), extra in 0usize..100) {
        let s = SparseSimilarity::from_triplets(n, dedup(t)).unwrap();
        let gs = GroundSet::new(1, vec![0; n], 1).unwrap();
        let mut small = SelectionResult::new("x", n);
        small.selected = vec![1];
        let mut big = small.clone();
        let add = 1 + extra % (n - 1);
        if add != 1 {
            big.selected.push(add);
        }
        let lo = coverage_score(&small, &s, &gs).unwrap();
        let hi = coverage_score(&big, &s, &gs).unwrap();
        prop_assert!(hi >= lo);
    }

    #[test]
    fn greedy_gains_non_increasing_for_flmi((n, t) in triplets(18), k in 1usize..6) {
        let s = SparseSimilarity::from_triplets(n, dedup(t)).unwrap().symmetrize_max();
        let gs = GroundSet::new(1, vec![0; n], 1).unwrap();
        let k = k.min(n - 1);
        let obj = Flmi::new(&s, &gs);
        let run = greedy_lazy(&obj, &BudgetConstraint::aux(&gs, k).unwrap()).unwrap();
        prop_assert!(gains_non_increasing(&run.selection.gains, 1e-12));
        let total: f64 = run.selection.gains.iter().sum();
        prop_assert!((total - obj.value(&run.selection.selected)).abs() < 1e-9);
    }

    #[test]
    fn sig9_round_trip_is_stable(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        let r = round_sig9(x);
        prop_assert_eq!(round_sig9(r), r);
        let text = serde_json::to_string(&r).unwrap();
        prop_assert_eq!(text.parse::<f64>().unwrap(), r);
        if x != 0.0 {
            prop_assert!(((r - x) / x).abs() <= 5e-9);
        }
    }
}
