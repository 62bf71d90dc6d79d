//! Randomized invariants of the basis, fitting, envelope and decomposition.

mod common;

use std::sync::Arc;

use common::*;
use hybrid_emd::basis::{bspline_deriv, bspline_value};
use hybrid_emd::emd::decompose;
use hybrid_emd::envelope::{iterative_slope_upper_envelope, lower_envelope};
use hybrid_emd::fitting::fit_points;
use hybrid_emd::specops::{canonical_cost, leakage_cost, ImfSoul};
use hybrid_emd::{BasisEnv, EmdConfig, EnvelopeConfig, FitConfig, KnotVector, Spline};
use proptest::prelude::*;

fn knot_vector() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..1.0, 2..12).prop_map(|gaps| {
        let mut knots = vec![-1.0];
        for g in gaps {
            knots.push(knots.last().unwrap() + g);
        }
        knots
    })
}

fn env_strategy() -> impl Strategy<Value = Arc<BasisEnv>> {
    (knot_vector(), 1usize..=6, 0usize..4)
        .prop_map(|(k, order, q)| BasisEnv::new(KnotVector::new(k).unwrap(), order, q).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partition_of_unity(env in env_strategy(), frac in 0.0f64..=1.0) {
        let (lo, hi) = env.domain();
        let t = lo + frac * (hi - lo);
        let sum: f64 = (0..env.basis_count()).map(|i| bspline_value(&env, i, t).unwrap()).sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nonnegative_with_local_support(env in env_strategy(), frac in 0.0f64..=1.0) {
        let (lo, hi) = env.domain();
        let t = lo + frac * (hi - lo);
        let ext = env.extended_knots().as_slice();
        let k = env.order();
        for i in 0..env.basis_count() {
            let b = bspline_value(&env, i, t).unwrap();
            prop_assert!(b >= 0.0);
            if t < ext[i] || t > ext[i + k] {
                prop_assert_eq!(b, 0.0);
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences(
        env in env_strategy().prop_filter("smooth enough", |e| e.order() >= 4),
        frac in 0.05f64..0.95,
    ) {
        let (lo, hi) = env.domain();
        let t = lo + frac * (hi - lo);
        let h = 1e-6 * (hi - lo);
        // away from knots the pieces are polynomials
        let ext = env.extended_knots().as_slice();
        prop_assume!(ext.iter().all(|&x| (x - t).abs() > 10.0 * h));
        for i in 0..env.basis_count() {
            for d in 1..=2 {
                let f = |x: f64| match d - 1 {
                    0 => bspline_value(&env, i, x).unwrap(),
                    m => bspline_deriv(&env, i, x, m).unwrap(),
                };
                let fd = (f(t + h) - f(t - h)) / (2.0 * h);
                let exact = bspline_deriv(&env, i, t, d).unwrap();
                let scale = (0..=200)
                    .map(|j| bspline_deriv(&env, i, lo + (hi - lo) * j as f64 / 200.0, d).unwrap().abs())
                    .fold(1.0f64, f64::max);
                prop_assert!((fd - exact).abs() < 1e-6 * scale, "i={} d={}: {} vs {}", i, d, fd, exact);
            }
        }
    }

    #[test]
    fn spline_evaluation_is_linear(
        a in prop::collection::vec(-5.0f64..5.0, 30),
        b in prop::collection::vec(-5.0f64..5.0, 30),
        alpha in -3.0f64..3.0,
        frac in 0.0f64..=1.0,
    ) {
        let env = BasisEnv::uniform(0.0, 1.0, 4, 30, 2).unwrap();
        let sa = Spline::new(Arc::clone(&env), a).unwrap();
        let sb = Spline::new(Arc::clone(&env), b).unwrap();
        let comb = sa.lin_comb(alpha, &sb, 1.0).unwrap();
        for d in 0..=2 {
            let want = alpha * sa.eval(frac, d).unwrap() + sb.eval(frac, d).unwrap();
            prop_assert!((comb.eval(frac, d).unwrap() - want).abs() < 1e-9 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn fit_is_linear_in_values(
        v1 in prop::collection::vec(-10.0f64..10.0, 120),
        v2 in prop::collection::vec(-10.0f64..10.0, 120),
        alpha in -2.0f64..2.0,
        beta in -2.0f64..2.0,
    ) {
        let env = BasisEnv::uniform(0.0, 1.0, 4, 40, 2).unwrap();
        let times: Vec<f64> = (0..120).map(|j| j as f64 / 119.0).collect();
        let cfg = FitConfig::default();
        let f1 = fit_points(&times, &v1, &env, &cfg).unwrap();
        let f2 = fit_points(&times, &v2, &env, &cfg).unwrap();
        let mixed: Vec<f64> = v1.iter().zip(&v2).map(|(x, y)| alpha * x + beta * y).collect();
        let fm = fit_points(&times, &mixed, &env, &cfg).unwrap();
        for ((m, x), y) in fm.coeffs().iter().zip(f1.coeffs()).zip(f2.coeffs()) {
            prop_assert!((m - (alpha * x + beta * y)).abs() < 1e-9 * (1.0 + m.abs()));
        }
    }

    #[test]
    fn leakage_cost_splits(gamma in 0.0f64..10.0, shift in -2.0f64..2.0) {
        let env = BasisEnv::uniform(0.0, 1.0, 4, 60, 4).unwrap();
        let s = fitted_on(&env, |t| shift + (20.0 * t).cos());
        let soul = ImfSoul::new(
            fitted_on(&env, |t| 1.0 + t),
            fitted_on(&env, |t| 18.0 * t),
        ).unwrap();
        let zero = Spline::zeros(Arc::clone(&env));
        let split = canonical_cost(&s, &soul).unwrap() + gamma * canonical_cost(&zero, &soul).unwrap();
        let cost = leakage_cost(&s, &soul, gamma).unwrap();
        prop_assert!((cost - split).abs() <= 1e-12 * cost.abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn decomposition_reconstructs_signal(
        w1 in 40.0f64..80.0,
        w2 in 8.0f64..20.0,
        trend in -5.0f64..5.0,
    ) {
        let s = fitted(|t| (w1 * t).cos() + 2.0 * (w2 * t).sin() + trend * t);
        let d = decompose(&s, &EmdConfig::default()).unwrap();
        let rec = d.reconstruct();
        for (x, y) in rec.coeffs().iter().zip(s.coeffs()) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn lower_envelope_is_negated_upper(w in 20.0f64..60.0, trend in -10.0f64..10.0) {
        let s = fitted(|t| (w * t).sin() * (1.0 + t) + trend * t);
        let cfg = EnvelopeConfig::default();
        let lower = lower_envelope(&s, &cfg).unwrap().envelope;
        let upper = iterative_slope_upper_envelope(&s.scaled(-1.0), &cfg).unwrap().envelope;
        for (l, u) in lower.coeffs().iter().zip(upper.coeffs()) {
            prop_assert_eq!(*l, -u);
        }
        // and the round trip through double negation is exact
        let back = lower_envelope(&s.scaled(-1.0).scaled(-1.0), &cfg).unwrap().envelope;
        prop_assert_eq!(back.coeffs(), lower.coeffs());
    }
}
