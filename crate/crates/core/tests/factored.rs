mod common;

use common::{gaussian, rng, singular_values};
use lowrank_spgd::{Error, FactoredMatrix, LowRankGradient};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

#[test]
fn dense_round_trip_10x7() {
    let mut r = rng(1);
    for _ in 0..20 {
        let d = gaussian(10, 7, &mut r);
        let f = FactoredMatrix::from_dense(&d, 0.0).unwrap();
        assert!((f.to_dense().unwrap() - &d).norm() <= 1e-10 * d.norm());
        f.validate().unwrap();
        let s = singular_values(&d);
        assert!((f.sigma() - s).amax() < 1e-12 * d.norm());
    }
}

#[test]
fn wide_and_rank_deficient_inputs() {
    let mut r = rng(2);
    let d = gaussian(4, 9, &mut r);
    let f = FactoredMatrix::from_dense(&d, 0.0).unwrap();
    assert_eq!(f.rank(), 4);
    assert!((f.to_dense().unwrap() - &d).norm() < 1e-12 * d.norm());

    let low = gaussian(8, 2, &mut r) * gaussian(2, 6, &mut r);
    let f = FactoredMatrix::from_dense(&low, 1e-12).unwrap();
    assert_eq!(f.rank(), 2);
}

#[test]
fn factored_norms_match_dense() {
    let f = FactoredMatrix::random_with_spectrum(30, 20, &[4.0, 2.5, 1.0], 3).unwrap();
    let d = f.to_dense().unwrap();
    assert!((f.frobenius_norm() - d.norm()).abs() < 1e-12);
    assert!((f.nuclear_norm() - common::nuclear_norm(&d)).abs() < 1e-12);
    assert!((f.spectral_norm() - singular_values(&d)[0]).abs() < 1e-12);
}

#[test]
fn products_match_dense() {
    let mut r = rng(4);
    let f = FactoredMatrix::random_with_spectrum(15, 11, &[3.0, 2.0, 0.5], 9).unwrap();
    let g = FactoredMatrix::random_with_spectrum(15, 11, &[1.0, 1.0], 10).unwrap();
    let (fd, gd) = (f.to_dense().unwrap(), g.to_dense().unwrap());
    let y = gaussian(11, 4, &mut r);
    assert!((f.multiply_right(&y).unwrap() - &fd * &y).amax() < 1e-12);
    let x = DVector::from_fn(15, |i, _| i as f64 - 7.0);
    assert!((f.transpose_multiply_vec(&x).unwrap() - fd.transpose() * &x).amax() < 1e-11);
    assert!((f.inner_product(&g).unwrap() - fd.dot(&gd)).abs() < 1e-12);
    assert!((f.distance_sq(&g).unwrap() - (&fd - &gd).norm_squared()).abs() < 1e-11);
    let cols = f.scaled_columns(&[3, 3, 0], 2.0).unwrap();
    assert!((cols.column(0) - fd.column(3) * 2.0).amax() < 1e-14);
    assert!((cols.column(2) - fd.column(0) * 2.0).amax() < 1e-14);
}

#[test]
fn from_parts_rejects_bad_factors() {
    let u = DMatrix::from_row_slice(3, 1, &[1.0, 1.0, 0.0]);
    let v = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
    let err = FactoredMatrix::from_parts(u, DVector::from_vec(vec![1.0]), v).unwrap_err();
    assert!(matches!(err, Error::NotOrthonormal { .. }));

    let u = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
    let v = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
    let err = FactoredMatrix::from_parts(u, DVector::from_vec(vec![-1.0]), v).unwrap_err();
    assert!(matches!(err, Error::InvalidArgument(_)));
}

#[test]
fn dense_cap_refuses_large_conversions() {
    let f = FactoredMatrix::zeros(100_000, 100_000);
    assert!(matches!(
        f.to_dense().unwrap_err(),
        Error::DenseCapExceeded { .. }
    ));
}

#[test]
fn gradient_norm_matches_dense() {
    let mut r = rng(6);
    let g = LowRankGradient::new(gaussian(9, 3, &mut r), gaussian(7, 3, &mut r)).unwrap();
    let d = g.to_dense().unwrap();
    assert!((g.frobenius_norm_sq() - d.norm_squared()).abs() < 1e-10 * d.norm_squared());
}

fn spectrum() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..10.0, 0..6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn norm_ordering(spec in spectrum(), seed in any::<u64>()) {
        let f = FactoredMatrix::random_with_spectrum(12, 9, &spec, seed).unwrap();
        prop_assert!(f.nuclear_norm() + 1e-12 >= f.frobenius_norm());
        prop_assert!(f.frobenius_norm() + 1e-12 >= f.spectral_norm());
        prop_assert!(f.orthonormality_error() <= 1e-12);
        prop_assert!(f.sigma().iter().zip(f.sigma().iter().skip(1)).all(|(a, b)| a >= b));
    }

    #[test]
    fn distance_is_symmetric_and_nonnegative(
        a in spectrum(), b in spectrum(), s1 in any::<u64>(), s2 in any::<u64>()
    ) {
        let f = FactoredMatrix::random_with_spectrum(10, 8, &a, s1).unwrap();
        let g = FactoredMatrix::random_with_spectrum(10, 8, &b, s2).unwrap();
        let d1 = f.distance_sq(&g).unwrap();
        let d2 = g.distance_sq(&f).unwrap();
        prop_assert!(d1 >= 0.0);
        prop_assert!((d1 - d2).abs() <= 1e-10 * (1.0 + d1));
        prop_assert!(f.distance_sq(&f).unwrap() <= 1e-10 * (1.0 + f.frobenius_norm_sq()));
    }
}
