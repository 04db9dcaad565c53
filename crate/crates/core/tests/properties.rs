//! Cross-module invariants checked against brute-force oracles.

use grafite::bench::{measure_fpr, RangeFilter};
use grafite::grafite::{budget_fpr_bound, expected_duplicates};
use grafite::workloads::{self, intersects};
use grafite::{
    Answer, BucketingFilter, EliasFano, Epsilon, GrafiteBuilder, GrafiteFilter, FULL_UNIVERSE,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sorted_distinct(max_len: usize, bound: u64) -> impl Strategy<Value = Vec<u64>> {
    prop::collection::btree_set(0..bound, 1..=max_len).prop_map(|s| s.into_iter().collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn elias_fano_round_trip(values in sorted_distinct(1000, 1 << 40), slack in 1u64..1000) {
        let bound = values[values.len() - 1] as u128 + slack as u128;
        let ef = EliasFano::build(&values, bound).unwrap();
        prop_assert_eq!(ef.iter().collect::<Vec<_>>(), values.clone());
        for (i, &v) in values.iter().enumerate() {
            prop_assert_eq!(ef.access(i + 1).unwrap(), v);
        }
        prop_assert_eq!(ef.first(), ef.access(1).unwrap());
        prop_assert_eq!(ef.last(), ef.access(values.len()).unwrap());
        let again = EliasFano::from_bytes(&ef.to_bytes()).unwrap();
        prop_assert_eq!(&again, &ef);
        prop_assert_eq!(again.to_bytes(), ef.to_bytes());
    }

    #[test]
    fn elias_fano_predecessor_matches_binary_search(values in sorted_distinct(1000, 4096)) {
        let ef = EliasFano::build(&values, 4096).unwrap();
        for y in 0..4096u64 {
            let rank = values.partition_point(|&v| v <= y);
            let pred = rank.checked_sub(1).map(|i| values[i]);
            prop_assert_eq!(ef.predecessor(y), pred);
            prop_assert_eq!(ef.rank(y), rank);
        }
    }

    #[test]
    fn elias_fano_space_accounting(values in sorted_distinct(5000, 1 << 30)) {
        let bound = 1u128 << 30;
        let ef = EliasFano::build(&values, bound).unwrap();
        let m = values.len() as u64;
        prop_assert_eq!(
            ef.size_in_bits(),
            m * ef.low_bits() as u64 + ef.high_len() as u64 + ef.sample_size_in_bits()
        );
        prop_assert!(ef.sample_size_in_bits() as f64 <= 0.25 * ef.high_len() as f64);
        let formula = m as f64 * ((bound as f64 / m as f64).log2() + 2.0);
        prop_assert!((ef.size_in_bits() - ef.sample_size_in_bits()) as f64 <= formula + 1.0);
    }

    #[test]
    fn grafite_no_false_negatives_small_universe(
        keys in prop::collection::vec(0u64..(1 << 16), 1..200),
        max_range in 1u64..64,
        eps_den in 2u64..50,
        seed: u64,
    ) {
        let eps = Epsilon::from_ratio(1, eps_den).unwrap();
        let f = GrafiteBuilder::new(max_range, eps).universe(1 << 16).seed(seed).build(&keys).unwrap();
        let mut sorted = keys.clone();
        sorted.sort_unstable();
        sorted.dedup();
        for &k in &sorted {
            for width in [1u64, 2, max_range, 4 * max_range - 1] {
                for shift in [0, width / 2, width - 1] {
                    let a = k.saturating_sub(shift);
                    let b = (a + width - 1).min((1 << 16) - 1);
                    if a <= k && k <= b {
                        prop_assert_eq!(f.query(a, b).unwrap(), Answer::NotEmpty);
                    }
                }
            }
        }
    }

    #[test]
    fn grafite_count_is_zero_iff_empty(
        keys in prop::collection::vec(any::<u64>(), 1..300),
        queries in prop::collection::vec((any::<u64>(), 0u64..5000), 50),
        seed: u64,
    ) {
        let f = GrafiteFilter::build(&keys, 64, 0.05, seed).unwrap();
        for (a, w) in queries {
            let b = a.saturating_add(w);
            let answer = f.query(a, b).unwrap();
            let count = f.approx_count(a, b).unwrap();
            prop_assert_eq!(count == 0, answer == Answer::Empty);
            prop_assert!(count <= f.code_count() as u64);
        }
    }

    #[test]
    fn bucketing_matches_bucket_oracle(
        keys in prop::collection::vec(0u64..(1 << 16), 1..200),
        shift in 0u32..=16,
        queries in prop::collection::vec((0u64..(1 << 16), 0u64..2000), 100),
    ) {
        let s = 1u64 << shift;
        let f = BucketingFilter::build(&keys, s as u128, 1 << 16).unwrap();
        let coarser = BucketingFilter::build(&keys, 2 * s as u128, 1 << 16).unwrap();
        for (a, w) in queries {
            let b = (a + w).min((1 << 16) - 1);
            let oracle = keys.iter().any(|&k| (a / s..=b / s).contains(&(k / s)));
            prop_assert_eq!(f.may_contain(a, b), oracle);
            if keys.iter().any(|&k| a <= k && k <= b) {
                prop_assert!(oracle);
            }
            if oracle {
                prop_assert!(coarser.may_contain(a, b));
            }
        }
    }

    #[test]
    fn bucketing_space_formula(
        keys in prop::collection::vec(any::<u64>(), 1..3000),
        shift in 0u32..=64,
    ) {
        let f = BucketingFilter::build(&keys, 1u128 << shift, FULL_UNIVERSE).unwrap();
        let payload = f.size_in_bits() - f.buckets().sample_size_in_bits();
        prop_assert!(payload as f64 <= f.space_formula_bits() + 1e-9);
        prop_assert!(f.buckets().sample_size_in_bits() as f64 <= 0.25 * f.space_formula_bits());
        prop_assert!(f.occupied() as u128 <= f.bucket_count().min(keys.len() as u128));
    }

    #[test]
    fn filters_are_deterministic(keys in prop::collection::vec(any::<u64>(), 1..500), seed: u64) {
        let a = GrafiteFilter::build_with_budget(&keys, 14, Some(8), seed).unwrap();
        let b = GrafiteFilter::build_with_budget(&keys, 14, Some(8), seed).unwrap();
        prop_assert_eq!(a.to_bytes(), b.to_bytes());
        let g = GrafiteFilter::from_bytes(&a.to_bytes()).unwrap();
        prop_assert_eq!(g, a);
    }
}

#[test]
fn duplicate_codes_follow_expected_count() {
    let (n, max_range, eps) = (10_000usize, 32u64, 1.0 / 512.0);
    let trials = 400;
    let expected = expected_duplicates(n as u64, max_range, eps);
    let mut total = 0usize;
    for seed in 0..trials {
        let keys = workloads::gen_uniform_keys(n, FULL_UNIVERSE, 1000 + seed).unwrap();
        let f = GrafiteFilter::build(&keys, max_range, eps, seed).unwrap();
        total += n - f.code_count();
    }
    // Duplicates are (approximately) Poisson per trial.
    let mean = expected * trials as f64;
    let sigma = mean.sqrt();
    assert!(
        (total as f64 - mean).abs() <= 5.0 * sigma,
        "total {total}, expected {mean:.1} ± {sigma:.1}"
    );
}

#[test]
fn budget_point_query_fpr() {
    let keys = workloads::gen_uniform_keys(1000, FULL_UNIVERSE, 5).unwrap();
    let f = GrafiteFilter::build_with_budget(&keys, 20, None, 5).unwrap();
    let w = workloads::gen_uncorrelated_queries(1_000_000, 1, FULL_UNIVERSE, 6).unwrap();
    let w = workloads::enforce_empty(&w, &keys).unwrap();
    let bound = budget_fpr_bound(20, 1);
    let sigma = (bound * (1.0 - bound) / w.len() as f64).sqrt();
    let fpr = measure_fpr(&f, &w.ranges).fpr();
    assert!(fpr <= bound + 4.0 * sigma, "fpr {fpr} bound {bound}");
}

#[test]
fn budget_bits_per_key() {
    let keys = workloads::gen_uniform_keys(100_000, FULL_UNIVERSE, 3).unwrap();
    let f = GrafiteFilter::build_with_budget(&keys, 16, None, 3).unwrap();
    assert_eq!(f.reduced_universe(), 100_000u128 << 14);
    assert!(f.bits_per_key() <= 16.3, "{}", f.bits_per_key());

    let keys = workloads::gen_uniform_keys(10_000, 1 << 32, 3).unwrap();
    let b = BucketingFilter::build_with_budget(&keys, 12.0, 1 << 32).unwrap();
    assert!(b.bits_per_key() <= 12.0, "{}", b.bits_per_key());
    if b.bucket_width() > 1 {
        let finer = BucketingFilter::build(&keys, b.bucket_width() / 2, 1 << 32).unwrap();
        assert!(finer.bits_per_key() > 12.0);
    }
}

#[test]
fn bucketing_single_bucket_is_always_positive() {
    let keys = workloads::gen_uniform_keys(1000, FULL_UNIVERSE, 1).unwrap();
    let f = BucketingFilter::build(&keys, FULL_UNIVERSE, FULL_UNIVERSE).unwrap();
    let w = workloads::gen_uncorrelated_queries(10_000, 8, FULL_UNIVERSE, 2).unwrap();
    let w = workloads::enforce_empty(&w, &keys).unwrap();
    assert_eq!(measure_fpr(&f, &w.ranges).fpr(), 1.0);
    assert_eq!(f.name(), "bucketing");
}

#[test]
fn grafite_fpr_is_independent_of_correlation_small() {
    let keys = workloads::gen_uniform_keys(20_000, FULL_UNIVERSE, 8).unwrap();
    let f = GrafiteFilter::build_with_budget(&keys, 12, None, 8).unwrap();
    let ell = 8;
    let bound = budget_fpr_bound(12, ell);
    for (i, d) in [0.0, 0.5, 1.0].into_iter().enumerate() {
        let w = workloads::gen_correlated_queries(&keys, 200_000, ell, d, FULL_UNIVERSE, i as u64)
            .unwrap();
        let w = workloads::enforce_empty(&w, &keys).unwrap();
        let sigma = (bound * (1.0 - bound) / w.len() as f64).sqrt();
        let fpr = measure_fpr(&f, &w.ranges).fpr();
        assert!(fpr <= bound + 4.0 * sigma, "D={d}: fpr {fpr} bound {bound}");
    }
}

#[test]
fn random_queries_never_miss_keys() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..200 {
        let u = 1u128 << rng.random_range(6..=16);
        let n = rng.random_range(1..=(u as usize / 4).min(300));
        let keys = workloads::gen_uniform_keys(n, u, rng.random()).unwrap();
        let f = GrafiteBuilder::new(rng.random_range(1..16), Epsilon::from_ratio(1, 3).unwrap())
            .universe(u)
            .seed(rng.random())
            .build(&keys)
            .unwrap();
        let t = workloads::gen_true_queries(&keys, 200, rng.random_range(1..40), u, rng.random())
            .unwrap();
        for &(a, b) in &t.ranges {
            assert!(intersects(&keys, a, b));
            assert!(f.may_contain(a, b));
        }
    }
}

#[test]
fn large_dataset_loads_quickly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("million.bin");
    let keys = workloads::gen_uniform_keys(1_000_000, FULL_UNIVERSE, 1).unwrap();
    workloads::write_binary_dataset(&path, &keys).unwrap();
    let start = std::time::Instant::now();
    let loaded = workloads::load_binary_dataset(&path).unwrap();
    let elapsed = start.elapsed();
    assert_eq!(loaded, keys);
    assert!(elapsed.as_secs_f64() < 1.0, "{elapsed:?}");
}

#[test]
fn uniform_keys_pass_ks_test() {
    let n = 100_000;
    let keys = workloads::gen_uniform_keys(n, FULL_UNIVERSE, 12).unwrap();
    let d = keys
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let x = k as f64 / 2f64.powi(64);
            let lo = i as f64 / n as f64;
            let hi = (i + 1) as f64 / n as f64;
            (x - lo).abs().max((hi - x).abs())
        })
        .fold(0.0, f64::max);
    // Asymptotic critical value at α = 0.001.
    let critical = 1.9495 / (n as f64).sqrt();
    assert!(d < critical, "D = {d}, critical {critical}");
}
