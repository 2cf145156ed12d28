mod common;

use common::golden_max;
use proptest::prelude::*;
use stochrelax::scalarfam::{BinomialModel, LimitVerdict};

fn ln_choose(n: u32, k: u32) -> f64 {
    (1..=k).map(|i| ((n - k + i) as f64 / i as f64).ln()).sum()
}

/// `sup_theta theta eta - psi(theta)` by golden-section search.
fn legendre(model: &BinomialModel, eta: f64) -> f64 {
    let g = |t: f64| t * eta - model.psi(t);
    let t = golden_max(g, -60.0, 60.0, 200);
    g(t)
}

#[test]
fn conjugate_matches_numerical_legendre() {
    for n in [1, 2, 5, 13, 30] {
        let model = BinomialModel::new(n).unwrap();
        for k in 1..40 {
            let eta = n as f64 * k as f64 / 40.0;
            let numeric = legendre(&model, eta);
            assert!((model.psi_star(eta) - numeric).abs() <= 1e-8, "n {n} eta {eta}");
        }
    }
}

#[test]
fn densities_normalize_against_counting_measure() {
    for n in [1, 2, 7, 30] {
        let model = BinomialModel::new(n).unwrap();
        for k in 0..=20 {
            let eta = n as f64 * k as f64 / 20.0;
            let total: f64 = (0..=n)
                .map(|x| ln_choose(n, x).exp() * model.density_std(x, eta).unwrap())
                .sum();
            assert!((total - 1.0).abs() <= 1e-12, "n {n} eta {eta}: {total}");
        }
    }
}

#[test]
fn worked_values_for_two_trials() {
    let m = BinomialModel::new(2).unwrap();
    assert!((m.density_std(1, 1.0).unwrap() - 0.25).abs() < 1e-15);
    assert!((m.density_bregman(1, 1.0).unwrap() - 0.25).abs() < 1e-15);
    assert_eq!(m.bregman_divergence(1, 1.0).unwrap(), 0.0);
    assert_eq!(m.density_std(0, 0.0).unwrap(), 1.0);
}

#[test]
fn boundary_scans() {
    for n in [2, 9, 30] {
        let m = BinomialModel::new(n).unwrap();
        for x in 0..=n {
            let scan = m.boundary_limit_check(x).unwrap();
            assert!(scan.passed, "n {n} x {x}");
            if x > 0 {
                assert_eq!(scan.left_verdict, LimitVerdict::DivergesToNegInfinity);
            } else {
                assert_eq!(scan.left_verdict, LimitVerdict::ConvergesToZero);
            }
        }
    }
    let scan = BinomialModel::new(2).unwrap().boundary_limit_check(1).unwrap();
    assert!(scan.left.last().unwrap().1 < -20.0);
}

proptest! {
    #[test]
    fn three_log_densities_agree(n in 1u32..=30, u in 0.001f64..0.999, theta in -10.0f64..10.0) {
        let m = BinomialModel::new(n).unwrap();
        let eta = u * n as f64;
        let t = m.theta_from_eta(eta).unwrap();
        for x in 0..=n {
            let std = m.log_density_std(x, eta).unwrap();
            prop_assert!((m.log_density_exp(x, t).unwrap() - std).abs() <= 1e-12 * std.abs().max(1.0));
            prop_assert!((m.log_density_bregman(x, eta).unwrap() - std).abs() <= 1e-12 * std.abs().max(1.0));
            prop_assert!(m.bregman_divergence(x, eta).unwrap() >= -1e-12);
        }
        let e = m.eta_from_theta(theta);
        prop_assert!((m.psi_star(e) + m.psi(theta) - theta * e).abs() <= 1e-10);
    }

    #[test]
    fn psi_is_convex(n in 1u32..=30, a in -20.0f64..20.0, b in -20.0f64..20.0, s in 0.0f64..1.0) {
        let m = BinomialModel::new(n).unwrap();
        let mid = m.psi(s * a + (1.0 - s) * b);
        prop_assert!(mid <= s * m.psi(a) + (1.0 - s) * m.psi(b) + 1e-12 * (1.0 + mid.abs()));
    }
}
