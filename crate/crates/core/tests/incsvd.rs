mod common;

use common::{factored_orthonormality, gaussian, orthonormality, rng, singular_values};
use lowrank_spgd::incsvd::{
    core_svd, decompose, orthogonal_complement_basis, reorthonormalize,
};
use lowrank_spgd::{incremental_update, FactoredMatrix, LowRankGradient, UpdateConfig};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

fn cfg() -> UpdateConfig {
    UpdateConfig::default()
}

#[test]
fn complement_of_in_span_block_is_empty() {
    let f = FactoredMatrix::random_with_spectrum(12, 8, &[3.0, 2.0, 1.0], 1).unwrap();
    let mut r = rng(1);
    let a = f.u() * gaussian(3, 2, &mut r);
    let (p, ra) = orthogonal_complement_basis(f.u(), &a, 1e-12).unwrap();
    assert_eq!(p.ncols(), 0);
    assert_eq!(ra.nrows(), 0);
}

#[test]
fn complement_with_empty_basis_is_qr() {
    let mut a = DMatrix::zeros(5, 2);
    a[(0, 0)] = 3.0;
    a[(1, 1)] = -2.0;
    let (p, ra) = orthogonal_complement_basis(&DMatrix::zeros(5, 0), &a, 1e-12).unwrap();
    assert_eq!(p.ncols(), 2);
    assert!((&p * &ra - &a).amax() < 1e-15);
    assert!((ra[(0, 0)].abs() - 3.0).abs() < 1e-15);
    assert!((ra[(1, 1)].abs() - 2.0).abs() < 1e-15);
    assert!(ra[(0, 1)].abs() < 1e-15 && ra[(1, 0)].abs() < 1e-15);
}

#[test]
fn complement_reconstructs_block() {
    let mut r = rng(2);
    for _ in 0..20 {
        let u = gaussian(10, 3, &mut r).qr().q();
        let a = gaussian(10, 2, &mut r);
        let (p, ra) = orthogonal_complement_basis(&u, &a, 1e-12).unwrap();
        let rebuilt = &p * &ra + &u * (u.transpose() * &a);
        assert!((rebuilt - &a).norm() <= 1e-10 * a.norm());
        assert!((u.transpose() * &p).amax() < 1e-12);
        assert!(orthonormality(&p) < 1e-12);
    }
}

#[test]
fn decomposition_blocks() {
    let mut r = rng(3);
    let f = FactoredMatrix::random_with_spectrum(14, 11, &[4.0, 3.0, 1.0], 7).unwrap();
    let g = LowRankGradient::new(gaussian(14, 3, &mut r), gaussian(11, 3, &mut r)).unwrap();
    let d = decompose(&f, &g, 0.7, 1e-12).unwrap();
    assert!(d.p.ncols() <= 3 && d.q.ncols() <= 3);
    assert!(orthonormality(&d.p) < 1e-10 && orthonormality(&d.q) < 1e-10);
    assert!((f.u().transpose() * &d.p).amax() < 1e-10);
    assert!((f.v().transpose() * &d.q).amax() < 1e-10);

    // K from its defining formula, assembled densely.
    let (rk, p, q) = (f.rank(), d.p.ncols(), d.q.ncols());
    let mut left = DMatrix::zeros(rk + p, 3);
    left.rows_mut(0, rk).copy_from(&(f.u().transpose() * g.a() * 0.7));
    left.rows_mut(rk, p).copy_from(&d.r_a);
    let mut right = DMatrix::zeros(rk + q, 3);
    right.rows_mut(0, rk).copy_from(&(f.v().transpose() * g.b()));
    right.rows_mut(rk, q).copy_from(&d.r_b);
    let mut k = left * right.transpose();
    for i in 0..rk {
        k[(i, i)] += f.sigma()[i];
    }
    assert!((k - &d.k).amax() < 1e-12);
}

#[test]
fn core_svd_random_7x5() {
    let mut r = rng(4);
    for _ in 0..10 {
        let k = gaussian(7, 5, &mut r);
        let s = core_svd(&k, 512).unwrap();
        let rebuilt = &s.u * DMatrix::from_diagonal(&s.sigma) * s.v.transpose();
        assert!((rebuilt - &k).amax() < 1e-12);
        assert!(orthonormality(&s.u) < 1e-12 && orthonormality(&s.v) < 1e-12);
        assert!((s.sigma.clone() - singular_values(&k)).amax() < 1e-12);
    }
}

#[test]
fn core_svd_trivial_cases() {
    let k = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![5.0, 1.0]));
    let s = core_svd(&k, 512).unwrap();
    assert_eq!(s.sigma.as_slice(), &[5.0, 1.0]);
    assert!((s.u.abs() - DMatrix::identity(2, 2)).amax() < 1e-15);
    let s = core_svd(&DMatrix::zeros(3, 2), 512).unwrap();
    assert_eq!(s.sigma.len(), 0);
    assert!(core_svd(&DMatrix::zeros(5, 5), 4).is_err());
}

#[test]
fn update_matches_dense_svd() {
    let mut r = rng(5);
    for seed in 0..10 {
        let f = FactoredMatrix::random_with_spectrum(15, 12, &[5.0, 2.0, 0.3], seed).unwrap();
        let g = LowRankGradient::new(gaussian(15, 2, &mut r), gaussian(12, 2, &mut r)).unwrap();
        let s = r.random_range(-2.0..2.0);
        let out = incremental_update(&f, &g, s, &cfg()).unwrap();
        let dense = f.to_dense().unwrap() + g.to_dense().unwrap() * s;
        let expected = singular_values(&dense);
        assert!(out.rank() <= 5);
        for i in 0..out.rank() {
            assert!((out.sigma()[i] - expected[i]).abs() < 1e-9);
        }
        for i in out.rank()..expected.len() {
            assert!(expected[i] < 1e-9);
        }
    }
}

#[test]
fn rank_one_from_zero_and_scale_zero() {
    let mut a = DMatrix::zeros(6, 1);
    a[(2, 0)] = 1.0;
    let mut b = DMatrix::zeros(4, 1);
    b[(1, 0)] = 1.0;
    let g = LowRankGradient::new(a, b).unwrap();
    let out = incremental_update(&FactoredMatrix::zeros(6, 4), &g, 2.0, &cfg()).unwrap();
    assert_eq!(out.rank(), 1);
    assert!((out.sigma()[0] - 2.0).abs() < 1e-15);

    let f = FactoredMatrix::random_with_spectrum(6, 4, &[1.5, 0.25], 3).unwrap();
    let same = incremental_update(&f, &g, 0.0, &cfg()).unwrap();
    assert_eq!(same.sigma(), f.sigma());
}

#[test]
fn long_chain_stays_orthonormal() {
    // 10⁴ updates with periodic re-orthonormalization, as in a long solve.
    let (m, n) = (20, 15);
    let mut r = rng(6);
    let mut f = FactoredMatrix::zeros(m, n);
    let mut dense = DMatrix::zeros(m, n);
    let mut worst = 0.0f64;
    for t in 1..=10_000 {
        let c = r.random_range(1..=3);
        let g = LowRankGradient::new(gaussian(m, c, &mut r), gaussian(n, c, &mut r)).unwrap();
        let s = r.random_range(-0.1..0.1);
        dense += g.to_dense().unwrap() * s;
        f = incremental_update(&f, &g, s, &cfg()).unwrap();
        if t % 256 == 0 {
            f = reorthonormalize(&f, &cfg()).unwrap();
        }
        worst = worst.max(factored_orthonormality(&f));
    }
    assert!(worst <= 1e-10, "orthonormality drift {worst:e}");
    let err = (f.to_dense().unwrap() - &dense).norm() / dense.norm();
    assert!(err < 1e-8, "reconstruction {err:e}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reconstruction_property(
        spec in prop::collection::vec(0.05f64..8.0, 0..=5),
        c in 1usize..=3,
        s in -3.0f64..3.0,
        seed in any::<u64>(),
    ) {
        let (m, n) = (13, 9);
        let f = FactoredMatrix::random_with_spectrum(m, n, &spec, seed).unwrap();
        let mut r = rng(seed ^ 0x5eed);
        let g = LowRankGradient::new(gaussian(m, c, &mut r), gaussian(n, c, &mut r)).unwrap();
        let out = incremental_update(&f, &g, s, &cfg()).unwrap();
        let dense_g = g.to_dense().unwrap();
        let expected = f.to_dense().unwrap() + &dense_g * s;
        let err = (out.to_dense().unwrap() - expected).norm();
        prop_assert!(err <= 1e-9 * (f.frobenius_norm() + s.abs() * dense_g.norm()));
        prop_assert!(factored_orthonormality(&out) <= 1e-10);
        prop_assert!(out.rank() <= (f.rank() + c).min(n));
    }

    #[test]
    fn in_span_updates_keep_rank(
        spec in prop::collection::vec(0.05f64..8.0, 1..=5),
        seed in any::<u64>(),
        left in any::<bool>(),
    ) {
        let f = FactoredMatrix::random_with_spectrum(13, 9, &spec, seed).unwrap();
        let mut r = rng(seed.wrapping_add(1));
        let (a, b) = if left {
            (f.u() * gaussian(f.rank(), 2, &mut r), gaussian(9, 2, &mut r))
        } else {
            (gaussian(13, 2, &mut r), f.v() * gaussian(f.rank(), 2, &mut r))
        };
        let g = LowRankGradient::new(a, b).unwrap();
        let d = decompose(&f, &g, 1.0, 1e-12).unwrap();
        if left {
            prop_assert_eq!(d.p.ncols(), 0);
        } else {
            prop_assert_eq!(d.q.ncols(), 0);
        }
        let out = incremental_update(&f, &g, 1.0, &cfg()).unwrap();
        let expected = f.to_dense().unwrap() + g.to_dense().unwrap();
        prop_assert!((out.to_dense().unwrap() - &expected).norm() <= 1e-9 * (1.0 + expected.norm()));
        prop_assert!(out.rank() <= f.rank() + 2);
    }
}
