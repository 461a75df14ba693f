mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use tenspart::partition::{
    analyze, block_norms, corner_norms, insignificant_indices, monotone_reorder, partition_tensor,
    restrict_and_recurse, sign_change_split, significance_ranking, split_ranges, Direction,
};
use tenspart::preprocess::normalize_slices_adjacency;
use tenspart::{DenseMatrix, LabelTable, Mode, PartitionOptions, SolverConfig, SparseTensor3, TensError};

fn sym_cfg() -> SolverConfig {
    SolverConfig {
        symmetric: true,
        rel_tol: 1e-12,
        max_iters: 1000,
        ..SolverConfig::default()
    }
}

fn two_columns(u2: &[f64]) -> DenseMatrix {
    DenseMatrix::from_fn(u2.len(), 2, |i, c| if c == 0 { 1.0 } else { u2[i] })
}

/// Symmetric stochastic block model: `sizes` groups, edge probability and
/// weight per pair of groups, `n` independent slices.
fn block_model(r: &mut impl Rng, sizes: &[usize], prob: &[Vec<f64>], weight: &[Vec<f64>], n: usize) -> SparseTensor3 {
    let group: Vec<usize> = sizes.iter().enumerate().flat_map(|(g, &s)| std::iter::repeat_n(g, s)).collect();
    let m = group.len();
    let mut raw = Vec::new();
    for k in 0..n {
        for i in 0..m {
            for j in (i + 1)..m {
                let (a, b) = (group[i], group[j]);
                if r.random::<f64>() < prob[a][b] {
                    raw.push((i, j, k, weight[a][b]));
                    raw.push((j, i, k, weight[a][b]));
                }
            }
        }
    }
    SparseTensor3::new([m, m, n], raw).unwrap()
}

#[test]
fn reorder_examples() {
    let r = monotone_reorder(&two_columns(&[0.9, 0.5, 0.1, -0.3])).unwrap();
    assert!(r.perm.is_identity());
    let r = monotone_reorder(&two_columns(&[-0.3, 0.1, 0.5, 0.9])).unwrap();
    assert_eq!(r.perm.order(), vec![3, 2, 1, 0]);
    let mut g = rng(1);
    let u2: Vec<f64> = (0..50).map(|_| gaussian(&mut g)).collect();
    let r = monotone_reorder(&two_columns(&u2)).unwrap();
    assert!(r.u2.windows(2).all(|w| w[0] >= w[1]));
    for (old, &x) in u2.iter().enumerate() {
        assert_eq!(r.u2[r.perm.apply(old)], x);
    }
    assert!(monotone_reorder(&DenseMatrix::zeros(3, 1)).is_err());
}

#[test]
fn split_examples() {
    let s = sign_change_split(&[0.5, 0.1, -0.2, -0.7]);
    assert_eq!((s.index, s.sign_change), (2, true));
    let s = sign_change_split(&[0.5, 0.1]);
    assert_eq!((s.index, s.sign_change), (2, false));
    let s = sign_change_split(&[-0.1, -0.5]);
    assert_eq!((s.index, s.sign_change), (0, false));
}

#[test]
fn karate_split_matches_matrix_method() {
    let t = normalize_slices_adjacency(&karate_tensor(3)).unwrap();
    let (_, report, _) = analyze(&t, [2, 2, 1], true, &sym_cfg(), &PartitionOptions::default()).unwrap();
    let (_, vecs) = sorted_eigen(&karate_normalized());
    let want: Vec<bool> = (0..34).map(|i| vecs[(i, 1)] > 0.0).collect();
    let got = report.first_group(Mode::One);
    assert_eq!(membership_accuracy(&got, &want), 1.0);
    assert!(report.mode(Mode::One).split.sign_change);
    // the well-known leaders end up on opposite sides
    assert_ne!(got[0], got[33]);
}

#[test]
fn disconnected_blocks_are_separated() {
    // two components with different weights, so the leading eigenvalues differ
    let mut r = rng(2);
    let mut raw = Vec::new();
    for k in 0..2 {
        for (base, size, w) in [(0usize, 6usize, 2.0), (6, 8, 1.0)] {
            for i in 0..size {
                for j in (i + 1)..size {
                    if j == i + 1 || r.random::<f64>() < 0.5 {
                        raw.push((base + i, base + j, k, w));
                        raw.push((base + j, base + i, k, w));
                    }
                }
            }
        }
    }
    let t = SparseTensor3::new([14, 14, 2], raw).unwrap();
    let (_, report, reordered) = analyze(&t, [2, 2, 1], true, &sym_cfg(), &PartitionOptions::default()).unwrap();
    let perm = &report.mode(Mode::One).perm;
    let pos: Vec<usize> = (0..14).map(|i| perm.apply(i)).collect();
    // one component occupies a prefix of the new order
    let small_first = pos[..6].iter().all(|&p| p < 6);
    let large_first = pos[6..].iter().all(|&p| p < 8);
    assert!(small_first || large_first, "{pos:?}");
    let boundary = if small_first { 6 } else { 8 };
    let table = block_norms(&reordered, [split_ranges(boundary, 14), split_ranges(boundary, 14), vec![(0, 2)]]).unwrap();
    let m = table.matrix();
    assert_eq!((m[0][1], m[1][0]), (0.0, 0.0));
}

#[test]
fn planted_membership() {
    let mut r = rng(3);
    for _ in 0..3 {
        let (t, truth) = planted_two_block(&mut r, 60, 5, 0.25, 6, 0.1, 0.01);
        let (_, report, _) = analyze(&t, [2, 2, 1], true, &sym_cfg(), &PartitionOptions::default()).unwrap();
        assert!(membership_accuracy(&report.first_group(Mode::One), &truth) >= 0.99);
        assert_eq!(report.mode(Mode::One).perm, report.mode(Mode::Two).perm);
        assert!(report.symmetric);
    }
}

#[test]
fn direction_does_not_change_groups() {
    let t = normalize_slices_adjacency(&karate_tensor(2)).unwrap();
    let up = PartitionOptions {
        direction: Direction::Nondecreasing,
        ..PartitionOptions::default()
    };
    let (_, down, _) = analyze(&t, [2, 2, 1], true, &sym_cfg(), &PartitionOptions::default()).unwrap();
    let (_, upr, _) = analyze(&t, [2, 2, 1], true, &sym_cfg(), &up).unwrap();
    let (a, b) = (down.first_group(Mode::One), upr.first_group(Mode::One));
    assert!(a.iter().zip(&b).all(|(x, y)| x != y), "groups should swap ends");
    let (ua, ub) = (&down.mode(Mode::One).u2, &upr.mode(Mode::One).u2);
    assert!(ub.windows(2).all(|w| w[0] <= w[1]));
    let mut sorted = ua.clone();
    sorted.reverse();
    assert_eq!(&sorted, ub);
}

#[test]
fn block_norm_identities() {
    let mut r = rng(4);
    let t = random_sparse(&mut r, [9, 8, 3], 0.4);
    let whole = block_norms(&t, [vec![(0, 9)], vec![(0, 8)], vec![(0, 3)]]).unwrap();
    assert_eq!(whole.norms[0][0][0], t.frobenius_norm());
    assert_eq!(whole.mass_fraction, 1.0);
    let split = block_norms(&t, [split_ranges(4, 9), split_ranges(3, 8), vec![(0, 3)]]).unwrap();
    let sq: f64 = split.norms.iter().flatten().flatten().map(|x| x * x).sum();
    assert!((sq - t.norm_sq()).abs() <= 1e-12 * t.norm_sq());
    // corner table against explicit subtensors
    let c = corner_norms(&t, 3).unwrap();
    let idx = |lo: usize, hi: usize| (lo..hi).collect::<Vec<_>>();
    let ranges = [[(0, 3), (6, 9)], [(0, 3), (5, 8)]];
    for (a, &(l0, l1)) in ranges[0].iter().enumerate() {
        for (b, &(m0, m1)) in ranges[1].iter().enumerate() {
            let want = t.subtensor(&idx(l0, l1), &idx(m0, m1), &idx(0, 3)).unwrap().frobenius_norm();
            assert!((c.norms[a][b][0] - want).abs() <= 1e-12 * t.frobenius_norm());
        }
    }
    assert!(corner_norms(&t, 5).is_err());
    assert!(block_norms(&t, [vec![(0, 5), (4, 9)], vec![(0, 8)], vec![(0, 3)]]).is_err());
}

#[test]
fn ranking_lists() {
    let mut r = rng(5);
    let (t, truth) = planted_two_block(&mut r, 20, 3, 0.4, 2, 0.1, 0.0);
    let labels = LabelTable::numbered(40);
    let opts = PartitionOptions {
        top_k: 20,
        labels: [Some(labels.clone()), None, None],
        ..PartitionOptions::default()
    };
    let (_, report, _) = analyze(&t, [2, 2, 1], true, &sym_cfg(), &opts).unwrap();
    let ranking = report.mode(Mode::One).ranking.as_ref().unwrap();
    let side = |list: &[tenspart::partition::RankedLabel]| list.iter().map(|x| truth[x.index]).collect::<Vec<_>>();
    let (b, e) = (side(&ranking.beginning), side(&ranking.end));
    assert!(b.iter().all(|&x| x == b[0]) && e.iter().all(|&x| x == e[0]) && b[0] != e[0]);

    let m = &report.mode(Mode::One);
    let reordering = tenspart::partition::Reordering {
        perm: m.perm.clone(),
        u1: m.u1.clone(),
        u2: m.u2.clone(),
    };
    let one = significance_ranking(&reordering, m.split.index, &labels, 1).unwrap();
    assert_eq!(one.beginning[0].index, m.perm.order()[0]);
    assert_eq!(one.end[0].index, m.perm.order()[39]);
    assert!(significance_ranking(&reordering, m.split.index, &labels, 41).is_err());
}

#[test]
fn planted_hubs_lead_the_lists() {
    // two groups of 50 with 10 hubs each; hubs link to their whole group
    let mut raw = Vec::new();
    let group = |i: usize| i / 50;
    let hub = |i: usize| i % 50 < 10;
    for k in 0..3 {
        for i in 0..100 {
            for j in (i + 1)..100 {
                let w = if group(i) != group(j) {
                    1e-3
                } else if hub(i) || hub(j) {
                    1.0
                } else {
                    0.01
                };
                raw.push((i, j, k, w));
                raw.push((j, i, k, w));
            }
        }
    }
    let t = SparseTensor3::new([100, 100, 3], raw).unwrap();
    let opts = PartitionOptions {
        labels: [Some(LabelTable::numbered(100)), None, None],
        ..PartitionOptions::default()
    };
    let (_, report, _) = analyze(&t, [2, 2, 1], true, &sym_cfg(), &opts).unwrap();
    let ranking = report.mode(Mode::One).ranking.as_ref().unwrap();
    let mut ends: Vec<Vec<usize>> = [&ranking.beginning, &ranking.end]
        .iter()
        .map(|l| {
            let mut v: Vec<usize> = l.iter().map(|x| x.index).collect();
            v.sort();
            v
        })
        .collect();
    ends.sort();
    assert_eq!(ends[0], (0..10).collect::<Vec<_>>());
    assert_eq!(ends[1], (50..60).collect::<Vec<_>>());
}

#[test]
fn insignificance_scores() {
    assert_eq!(insignificant_indices(&[1.0, 0.001, -0.5, 0.009], 1e-2), vec![1, 3]);
}

#[test]
fn recursion_on_full_sets_matches_direct() {
    let t = normalize_slices_adjacency(&karate_tensor(2)).unwrap();
    let opts = PartitionOptions::default();
    let (_, direct, _) = analyze(&t, [2, 2, 1], true, &sym_cfg(), &opts).unwrap();
    let all = |n: usize| (0..n).collect::<Vec<_>>();
    let (_, nested, _) = restrict_and_recurse(&t, [all(34), all(34), all(2)], [2, 2, 1], &sym_cfg(), &opts).unwrap();
    assert_eq!(direct.mode(Mode::One).perm, nested.mode(Mode::One).perm);
    assert_eq!(direct.mode(Mode::One).split, nested.mode(Mode::One).split);
    assert_eq!(nested.index_sets.as_ref().unwrap()[0], all(34));
}

#[test]
fn recursion_finds_nested_blocks() {
    let mut r = rng(6);
    let p = vec![
        vec![0.5, 0.2, 0.02, 0.02],
        vec![0.2, 0.5, 0.02, 0.02],
        vec![0.02, 0.02, 0.5, 0.2],
        vec![0.02, 0.02, 0.2, 0.5],
    ];
    let w = vec![
        vec![1.0, 0.2, 0.05, 0.05],
        vec![0.2, 1.0, 0.05, 0.05],
        vec![0.05, 0.05, 1.0, 0.2],
        vec![0.05, 0.05, 0.2, 1.0],
    ];
    let t = normalize_slices_adjacency(&block_model(&mut r, &[30, 30, 30, 30], &p, &w, 4)).unwrap();
    let (_, top, _) = analyze(&t, [2, 2, 1], true, &sym_cfg(), &PartitionOptions::default()).unwrap();
    let coarse: Vec<bool> = (0..120).map(|i| i < 60).collect();
    let first = top.first_group(Mode::One);
    assert!(membership_accuracy(&first, &coarse) >= 0.99);
    // restrict to whichever side holds vertex 0 (indices 0..60)
    let side: Vec<usize> = (0..120).filter(|&i| first[i] == first[0]).collect();
    assert_eq!(side, (0..60).collect::<Vec<_>>());
    let labels = LabelTable::numbered(120);
    let opts = PartitionOptions {
        labels: [Some(labels), None, None],
        ..PartitionOptions::default()
    };
    let (_, nested, _) = restrict_and_recurse(&t, [side.clone(), side.clone(), (0..4).collect()], [2, 2, 1], &sym_cfg(), &opts).unwrap();
    let fine: Vec<bool> = (0..60).map(|i| i < 30).collect();
    assert!(membership_accuracy(&nested.first_group(Mode::One), &fine) >= 0.99);
    let ranking = nested.mode(Mode::One).ranking.as_ref().unwrap();
    assert!(ranking.beginning.iter().chain(&ranking.end).all(|x| x.index < 60));
}

#[test]
fn recursion_on_empty_support_fails() {
    let t = SparseTensor3::new([4, 4, 1], [(0, 1, 0, 1.0), (1, 0, 0, 1.0)]).unwrap();
    let res = restrict_and_recurse(&t, [vec![2, 3], vec![2, 3], vec![0]], [1, 1, 1], &sym_cfg(), &PartitionOptions::default());
    assert!(matches!(res, Err(TensError::EmptySubtensor)));
}

#[test]
fn general_tensor_partitions_every_mode() {
    let mut r = rng(7);
    let t = random_sparse(&mut r, [12, 9, 6], 0.5);
    let cfg = SolverConfig::default();
    let (approx, report, reordered) = analyze(&t, [2, 2, 2], false, &cfg, &PartitionOptions::default()).unwrap();
    assert!(!report.symmetric);
    assert_eq!(report.modes.len(), 3);
    assert_eq!(reordered.frobenius_norm(), t.frobenius_norm());
    let again = partition_tensor(&t, &approx, &PartitionOptions::default()).unwrap().0;
    assert_eq!(again.to_json().unwrap(), report.to_json().unwrap());
    assert!(report.to_text().contains("dims"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn reports_are_consistent(seed in any::<u64>(), l in 4usize..=10, m in 4usize..=10, n in 2usize..=4) {
        let mut r = rng(seed);
        let t = random_sparse(&mut r, [l, m, n], 0.6);
        prop_assume!(t.nnz() > 0);
        let (_, report, reordered) = analyze(&t, [2, 2, 2], false, &SolverConfig::default(), &PartitionOptions::default()).unwrap();
        prop_assert_eq!(reordered.frobenius_norm(), t.frobenius_norm());
        prop_assert_eq!(reordered.nnz(), t.nnz());
        for (a, mp) in report.modes.iter().enumerate() {
            let extent = t.dims()[a];
            let mut seen = vec![false; extent];
            for i in 0..extent {
                seen[mp.perm.apply(i)] = true;
            }
            prop_assert!(seen.iter().all(|&x| x));
            prop_assert!(mp.split.index <= extent);
        }
        let sq: f64 = report.split_blocks.norms.iter().flatten().flatten().map(|x| x * x).sum();
        prop_assert!((sq - t.norm_sq()).abs() <= 1e-10 * t.norm_sq());
    }
}
