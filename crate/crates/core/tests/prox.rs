mod common;

use common::{ball_point, dense_prox, gaussian, prox_objective, rng, singular_values};
use lowrank_spgd::prox::{dual_value, project_frobenius, svs};
use lowrank_spgd::{kkt_dual_check, prox_nuclear, Domain, FactoredMatrix};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

fn random_factored(m: usize, n: usize, seed: u64) -> (FactoredMatrix, DMatrix<f64>) {
    let d = gaussian(m, n, &mut rng(seed));
    (FactoredMatrix::from_dense(&d, 0.0).unwrap(), d)
}

#[test]
fn tie_at_second_singular_value_matches_dense_prox() {
    let (f, d) = random_factored(10, 8, 1);
    let lambda = f.sigma()[1];
    let out = svs(&f, lambda).unwrap();
    assert_eq!(out.rank(), 1);
    let oracle = dense_prox(&d, lambda, None);
    assert!((out.to_dense().unwrap() - oracle).norm() < 1e-10);
}

#[test]
fn projection_is_closest_feasible_point() {
    let mut r = rng(2);
    let (f, d) = random_factored(9, 7, 3);
    let radius = 0.4 * f.frobenius_norm();
    let p = project_frobenius(&f, radius).unwrap();
    assert!((p.frobenius_norm() - radius).abs() < 1e-12);
    assert_eq!(p.u(), f.u());
    let best = (p.to_dense().unwrap() - &d).norm();
    for _ in 0..1000 {
        let x = ball_point(9, 7, radius, &mut r);
        assert!(best <= (x - &d).norm() + 1e-12);
    }
}

#[test]
fn projection_inside_ball_is_identity() {
    let f = FactoredMatrix::random_with_spectrum(6, 5, &[2.0, 2.0, 2.0, 2.0], 4).unwrap();
    assert_eq!(project_frobenius(&f, 5.0).unwrap(), f);
    let f = FactoredMatrix::random_with_spectrum(6, 5, &[8.0, 6.0], 4).unwrap();
    let p = project_frobenius(&f, 5.0).unwrap();
    assert!((p.sigma() - f.sigma() * 0.5).amax() < 1e-15);
}

#[test]
fn unbounded_prox_is_optimal_under_perturbation() {
    let mut r = rng(5);
    let (f, d) = random_factored(10, 8, 6);
    let tau = 0.8;
    let out = prox_nuclear(&f, 0.4, 2.0, &Domain::Unbounded).unwrap();
    let x_star = out.to_dense().unwrap();
    let best = prox_objective(&x_star, &d, tau);
    for i in 0..1000 {
        let size = 10f64.powi(-(i % 6) as i32);
        let x = &x_star + gaussian(10, 8, &mut r) * size;
        assert!(prox_objective(&x, &d, tau) >= best - 1e-12);
    }
}

#[test]
fn ball_prox_is_optimal_over_feasible_perturbations() {
    let mut r = rng(7);
    let (f, d) = random_factored(10, 8, 8);
    let tau = 0.5;
    let radius = 2.0;
    let out = prox_nuclear(&f, tau, 1.0, &Domain::frobenius_ball(radius).unwrap()).unwrap();
    let x_star = out.to_dense().unwrap();
    assert!((x_star.norm() - radius).abs() < 1e-12, "constraint should be active");
    let best = prox_objective(&x_star, &d, tau);
    let mut tried = 0;
    while tried < 1000 {
        let size = 10f64.powi(-(tried % 5) as i32);
        let mut x = &x_star + gaussian(10, 8, &mut r) * size;
        let norm = x.norm();
        if norm > radius {
            x *= radius / norm;
        }
        assert!(prox_objective(&x, &d, tau) >= best - 1e-12);
        tried += 1;
    }
}

#[test]
fn composed_order_matches_dense_constrained_oracle() {
    let (f, d) = random_factored(12, 9, 9);
    let ball = Domain::frobenius_ball(1.5).unwrap();
    let ours = prox_nuclear(&f, 0.3, 1.0, &ball).unwrap().to_dense().unwrap();
    let oracle = dense_prox(&d, 0.3, Some(1.5));
    assert!((&ours - &oracle).norm() < 1e-10);
    // projecting first and shrinking after is a different operator
    let reverse = svs(&project_frobenius(&f, 1.5).unwrap(), 0.3).unwrap();
    assert!((reverse.to_dense().unwrap() - &oracle).norm() > 1e-3);
}

/// Minimizer of the dual by scanning a fine grid, then refining.
fn dual_grid_max(shrunk_sq: f64, y_sq: f64, radius: f64) -> (f64, f64) {
    let mut best = (0.0, dual_value(shrunk_sq, y_sq, radius, 0.0));
    let mut hi = 1.0;
    while dual_value(shrunk_sq, y_sq, radius, hi) > dual_value(shrunk_sq, y_sq, radius, hi / 2.0) {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..8 {
        let step = (hi - lo) / 1000.0;
        for i in 0..=1000 {
            let mu = lo + step * i as f64;
            let v = dual_value(shrunk_sq, y_sq, radius, mu);
            if v > best.1 {
                best = (mu, v);
            }
        }
        lo = (best.0 - step).max(0.0);
        hi = best.0 + step;
    }
    best
}

#[test]
fn kkt_on_random_active_instances() {
    let mut r = rng(10);
    for seed in 0..100 {
        let (f, d) = random_factored(8, 6, 100 + seed);
        let lambda = r.random_range(0.0..1.0);
        let s = singular_values(&d);
        let shrunk_sq: f64 = s.iter().map(|x| (x - lambda).max(0.0).powi(2)).sum();
        let radius = shrunk_sq.sqrt() * r.random_range(0.1..0.9);
        let k = kkt_dual_check(&f, lambda, radius).unwrap();
        assert!(k.active);
        assert!((k.scale * k.shrunk_norm - radius).abs() <= 1e-12);
        assert!(k.relative_gap() <= 1e-9);
        // primal from the dense oracle, dual maximum by search
        let x = dense_prox(&d, lambda, Some(radius));
        let primal = prox_objective(&x, &d, lambda);
        assert!((primal - k.primal_value).abs() <= 1e-9 * (1.0 + primal));
        let (mu, best) = dual_grid_max(shrunk_sq, d.norm_squared(), radius);
        assert!((mu - k.mu_star).abs() <= 1e-6 * (1.0 + mu));
        assert!((best - k.dual_value).abs() <= 1e-9 * (1.0 + best.abs()));
    }
}

#[test]
fn kkt_inactive_and_closed_form() {
    let f = FactoredMatrix::random_with_spectrum(5, 4, &[9.0, 7.0], 2).unwrap();
    let k = kkt_dual_check(&f, 1.0, 5.0).unwrap();
    assert!((k.mu_star - 0.5).abs() < 1e-15);
    assert!((k.scale - 0.5).abs() < 1e-15);
    let k = kkt_dual_check(&f, 1.0, 20.0).unwrap();
    assert_eq!(k.mu_star, 0.0);
    assert_eq!(k.primal_dual_gap, 0.0);
    assert!(kkt_dual_check(&f, 1.0, 0.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn nonexpansive(
        s1 in any::<u64>(), s2 in any::<u64>(),
        tau in 0.0f64..3.0,
        radius in prop::option::of(0.1f64..10.0),
    ) {
        let (f1, d1) = random_factored(9, 6, s1);
        let (f2, d2) = random_factored(9, 6, s2);
        let domain = match radius {
            Some(r) => Domain::frobenius_ball(r).unwrap(),
            None => Domain::Unbounded,
        };
        let p1 = prox_nuclear(&f1, tau, 1.0, &domain).unwrap();
        let p2 = prox_nuclear(&f2, tau, 1.0, &domain).unwrap();
        prop_assert!(p1.distance_sq(&p2).unwrap().sqrt() <= (d1 - d2).norm() + 1e-10);
    }

    #[test]
    fn matches_dense_prox(
        seed in any::<u64>(),
        lambda in 0.0f64..3.0,
        eta in 0.1f64..2.0,
        radius in prop::option::of(0.1f64..10.0),
    ) {
        let (f, d) = random_factored(11, 7, seed);
        let domain = match radius {
            Some(r) => Domain::frobenius_ball(r).unwrap(),
            None => Domain::Unbounded,
        };
        let ours = prox_nuclear(&f, lambda, eta, &domain).unwrap();
        let oracle = dense_prox(&d, lambda * eta, radius);
        prop_assert!((ours.to_dense().unwrap() - &oracle).norm() <= 1e-9 * oracle.norm().max(1.0));
        prop_assert!(ours.orthonormality_error() <= 1e-12);
        if let Some(r) = radius {
            prop_assert!(ours.frobenius_norm() <= r + 1e-12);
        }
    }
}
