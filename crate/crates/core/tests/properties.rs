mod common;

use num_bigint::BigUint;
use proptest::prelude::*;
use schmidt::bipartite;
use schmidt::compose::{self, Grouping};
use schmidt::multipartite::{self, random_decomposition, random_state};
use schmidt::partition;
use schmidt::purify;
use schmidt::state::{self, Bipartition, DensityMatrix};

fn dims_strategy(max_total: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..=4, 2..=5)
        .prop_filter("total dimension in range", move |d| {
            let t: usize = d.iter().product();
            t > 1 && t <= max_total
        })
}

fn subset_of(n: usize, mask: u64) -> Vec<usize> {
    (0..n).filter(|k| mask >> k & 1 == 1).collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn reduced_density_matches_index_contraction(dims in dims_strategy(64), seed in any::<u64>(), mask in any::<u64>()) {
        let s = random_state(&dims, seed).unwrap();
        let n = dims.len();
        let keep = subset_of(n, mask % ((1 << n) - 2) + 1);
        let fast = state::reduced_density(&s, &keep).unwrap();
        let oracle = common::partial_trace(s.amplitudes(), &dims, &keep);
        prop_assert!(common::max_entry_gap(&oracle, fast.entries()) <= 1e-10);
        prop_assert!((fast.entries().trace().re - 1.0).abs() <= 1e-10);
        let full = state::partial_trace(&s.density(), &keep).unwrap();
        prop_assert!(common::max_entry_gap(&oracle, full.entries()) <= 1e-10);
    }

    #[test]
    fn flatten_is_a_bijection(dims in dims_strategy(64), seed in any::<u64>(), mask in any::<u64>()) {
        let s = random_state(&dims, seed).unwrap();
        let n = dims.len();
        let left = subset_of(n, mask % ((1 << n) - 2) + 1);
        let cut = Bipartition::new(&left, n).unwrap();
        let m = state::flatten(&s, &cut).unwrap();
        let back = state::unflatten(&m, &dims, &cut).unwrap();
        prop_assert_eq!(back.amplitudes(), s.amplitudes());
        // every amplitude appears exactly once
        let mut seen: Vec<_> = m.iter().map(|z| (z.re.to_bits(), z.im.to_bits())).collect();
        let mut expect: Vec<_> = s.amplitudes().iter().map(|z| (z.re.to_bits(), z.im.to_bits())).collect();
        seen.sort();
        expect.sort();
        prop_assert_eq!(seen, expect);
    }

    #[test]
    fn complementary_spectra_agree(dims in dims_strategy(64), seed in any::<u64>(), mask in any::<u64>()) {
        let s = random_state(&dims, seed).unwrap();
        let n = dims.len();
        let left = subset_of(n, mask % ((1 << n) - 2) + 1);
        let cut = Bipartition::new(&left, n).unwrap();
        let nonzero = |mut v: Vec<f64>| { v.retain(|&x| x > 1e-12); v };
        let a = nonzero(state::reduced_density(&s, cut.left()).unwrap().spectrum());
        let b = nonzero(state::reduced_density(&s, cut.right()).unwrap().spectrum());
        let via_cut = nonzero(bipartite::spectra(&s, cut.left()).unwrap());
        prop_assert_eq!(a.len(), via_cut.len());
        for (x, y) in a.iter().zip(&via_cut) {
            prop_assert!((x - y).abs() <= 1e-8);
        }
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-8);
        }
    }

    #[test]
    fn bipartite_round_trip_and_rank_symmetry(dims in dims_strategy(64), seed in any::<u64>(), mask in any::<u64>()) {
        let s = random_state(&dims, seed).unwrap();
        let n = dims.len();
        let left = subset_of(n, mask % ((1 << n) - 2) + 1);
        let cut = Bipartition::new(&left, n).unwrap();
        let d = bipartite::schmidt_decompose_bipartite(&s, &cut).unwrap();
        prop_assert!(d.reconstruct().distance(&s) <= 1e-10);
        let total: f64 = d.coefficients().iter().map(|x| x * x).sum();
        prop_assert!((total - 1.0).abs() <= 1e-10);
        prop_assert!(d.coefficients().windows(2).all(|w| w[0] >= w[1]));
        prop_assert_eq!(
            bipartite::schmidt_number(&s, &cut).unwrap(),
            bipartite::schmidt_number(&s, &cut.swapped()).unwrap()
        );
    }

    #[test]
    fn partition_matches_enumeration(dims in prop::collection::vec(1u64..=9, 2..=12)) {
        let oracle = common::partition_max(&dims);
        let best = partition::max_schmidt_number(&dims).unwrap();
        prop_assert_eq!(best.k.clone(), BigUint::from(oracle));
        let big: Vec<BigUint> = dims.iter().map(|&d| BigUint::from(d)).collect();
        for strategy in [partition::Strategy::BruteForce, partition::Strategy::MeetInTheMiddle] {
            let s = partition::max_schmidt_number_with(&big, strategy, schmidt::Execution::Sequential).unwrap();
            prop_assert_eq!(&s.cut, &best.cut);
        }
        for k in [1, oracle as u64, oracle as u64 + 1] {
            prop_assert_eq!(partition::decide(&dims, k).unwrap().is_some(), k as u128 <= oracle);
        }
    }

    #[test]
    fn subset_sum_adapter_agrees_with_dp(values in prop::collection::vec(1u64..=20, 1..=15), t in 1u64..=150) {
        let r = partition::subset_sum_to_partition(&values, t).unwrap();
        let exec = schmidt::Execution::default();
        let feasible = partition::solve(&r.exact, partition::Strategy::Auto, exec).unwrap().is_some();
        prop_assert_eq!(feasible, common::subset_sum(&values, t));
    }

    #[test]
    fn composition_reconstructs_tensor_product(
        m in 1usize..=4, n in 1usize..=3, seed in any::<u64>(), pick in any::<usize>()
    ) {
        prop_assume!(n <= m);
        let dims_a: Vec<usize> = (0..m).map(|k| 2 + (seed as usize >> k) % 2).collect();
        let dims_b: Vec<usize> = (0..n).map(|k| 2 + (seed as usize >> (k + 4)) % 2).collect();
        let ra = 1 + pick % *dims_a.iter().min().unwrap();
        let rb = 1 + (pick / 7) % *dims_b.iter().min().unwrap();
        let a = random_decomposition(&dims_a, ra, seed).unwrap();
        let b = random_decomposition(&dims_b, rb, seed ^ 0xabc).unwrap();
        let groupings = compose::enumerate_groupings(m, n).unwrap();
        let g: &Grouping = &groupings[pick % groupings.len()];
        let c = compose::compose(&a, &b, g).unwrap();
        prop_assert_eq!(c.rank(), ra * rb);
        // regroup the reconstruction into A's parts then B's parts
        let product = a.reconstruct().kron(&b.reconstruct());
        let ungrouped: Vec<usize> = g.subsystem_order();
        let permuted = product.permute_subsystems(&ungrouped).unwrap();
        let flat_dims: Vec<usize> = ungrouped.iter().map(|&k| product.dims()[k]).collect();
        prop_assert_eq!(permuted.dims(), &flat_dims[..]);
        let rebuilt = c.reconstruct();
        prop_assert_eq!(rebuilt.amplitudes().len(), permuted.amplitudes().len());
        let gap = rebuilt.amplitudes().iter().zip(permuted.amplitudes()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        prop_assert!(gap <= 1e-10);
    }

    #[test]
    fn purification_traces_back(side in 1usize..=16, rank in 1usize..=16, seed in any::<u64>()) {
        let rank = rank.min(side);
        let s = random_state(&[side, rank], seed).unwrap();
        let rho: DensityMatrix = state::reduced_density(&s, &[0]).unwrap();
        let p = purify::purify(&rho, None).unwrap();
        prop_assert!(p.rank <= rank);
        prop_assert!((p.trace_back().entries() - rho.entries()).norm() <= 1e-9);
    }

    #[test]
    fn local_unitaries_preserve_decomposability(seed in any::<u64>()) {
        let dims = [2usize, 3, 2];
        let s = multipartite::random_decomposable_state(&dims, 2, seed).unwrap();
        let us = multipartite::random_local_unitaries(&dims, seed ^ 1);
        let t = s.apply_local_all(&us).unwrap();
        let a = multipartite::check_decomposable(&s, 0).unwrap();
        let b = multipartite::check_decomposable(&t, 0).unwrap();
        prop_assert!(a.is_decomposable() && b.is_decomposable());
        let (ca, cb) = (a.decomposition.unwrap(), b.decomposition.unwrap());
        for (x, y) in ca.coefficients().iter().zip(cb.coefficients()) {
            prop_assert!((x - y).abs() <= 1e-8);
        }
    }
}

#[test]
fn grouping_counts_are_binomial() {
    for m in 1..=12u64 {
        for n in 1..=m {
            let got = compose::enumerate_groupings(m as usize, n as usize).unwrap().len() as u64;
            assert_eq!(got, common::binomial(m - 1, n - 1), "m={m} n={n}");
        }
    }
}

#[test]
fn qubit_instances_hit_the_bound() {
    for n in 2..=20u32 {
        let k = partition::max_schmidt_number(&vec![2; n as usize]).unwrap().k;
        assert_eq!(k, BigUint::from(partition::qubit_bound(n)));
    }
}
