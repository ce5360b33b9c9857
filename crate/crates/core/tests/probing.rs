use lowrank_spgd::probing::check_isotropy;
use lowrank_spgd::{Distribution, ProbingMatrix};
use proptest::prelude::*;
use rayon::prelude::*;

/// Largest per-sample variance of an entry of `Y Yᵀ`.
fn entry_variance(dist: Distribution, n: usize, k: usize) -> f64 {
    let (n, k) = (n as f64, k as f64);
    match dist {
        // diagonal entries are exactly 1; off-diagonal variance 1/k
        Distribution::Rademacher => 1.0 / k,
        // diagonal (1/k)·χ²_k has variance 2/k
        Distribution::Gaussian => 2.0 / k,
        // diagonal (n/k)·Binomial(k, 1/n); off-diagonal entries are 0
        Distribution::ScaledIdentityColumns => (n / k) * (1.0 - 1.0 / n),
    }
}

#[test]
fn isotropy_meta_trials() {
    let (n, samples, trials) = (8, 100_000, 100);
    for dist in Distribution::ALL {
        for k in [2, 8] {
            let tol = 5.0 * (entry_variance(dist, n, k) / samples as f64).sqrt();
            let passed = (0..trials as u64)
                .into_par_iter()
                .filter(|&t| check_isotropy(dist, n, k, samples, 1000 * t + k as u64).unwrap() <= tol)
                .count();
            assert!(
                passed * 100 >= 99 * trials,
                "{dist} k={k}: {passed}/{trials} below {tol:e}"
            );
        }
    }
}

#[test]
fn isotropy_deviation_shrinks_with_samples() {
    let small = check_isotropy(Distribution::Gaussian, 6, 3, 1_000, 1).unwrap();
    let large = check_isotropy(Distribution::Gaussian, 6, 3, 100_000, 1).unwrap();
    assert!(large < small / 3.0, "{small} -> {large}");
}

#[test]
fn exact_cover_gives_identity() {
    // With k = n the scaled-identity columns are unit vectors; a seed whose
    // draw is a permutation makes Y Yᵀ = I exactly.
    let seed = (0..10_000u64)
        .find(|&s| {
            let p = ProbingMatrix::generate(Distribution::ScaledIdentityColumns, 3, 3, s).unwrap();
            let mut idx = p.column_indices().unwrap().to_vec();
            idx.sort_unstable();
            idx == [0, 1, 2]
        })
        .unwrap();
    assert_eq!(
        check_isotropy(Distribution::ScaledIdentityColumns, 3, 3, 1, seed).unwrap(),
        0.0
    );
}

#[test]
fn invalid_shapes_rejected() {
    assert!(ProbingMatrix::generate(Distribution::Gaussian, 0, 2, 0).is_err());
    assert!(ProbingMatrix::generate(Distribution::Gaussian, 4, 0, 0).is_err());
    assert!(check_isotropy(Distribution::Gaussian, 4, 2, 0, 0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn deterministic_and_normalized(
        n in 1usize..40, k in 1usize..10, seed in any::<u64>(), which in 0usize..3
    ) {
        let dist = Distribution::ALL[which];
        let a = ProbingMatrix::generate(dist, n, k, seed).unwrap();
        let b = ProbingMatrix::generate(dist, n, k, seed).unwrap();
        prop_assert_eq!(a.matrix(), b.matrix());
        prop_assert_eq!(a.matrix().shape(), (n, k));
        let expected = (n as f64 / k as f64).sqrt();
        if dist != Distribution::Gaussian {
            for col in a.matrix().column_iter() {
                prop_assert!((col.norm() - expected).abs() <= 1e-12 * expected);
            }
        }
    }

    #[test]
    fn names_parse_back(which in 0usize..3) {
        let dist = Distribution::ALL[which];
        prop_assert_eq!(dist.name().parse::<Distribution>().unwrap(), dist);
    }
}
