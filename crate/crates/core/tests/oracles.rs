//! Core routines checked against independent dense or recursive computations.

mod common;

use common::*;
use hybrid_emd::basis::{bspline_deriv, bspline_value};
use hybrid_emd::fitting::{fit_points, FitConfig};
use hybrid_emd::specops::{build_omega_system, solve_omega};
use hybrid_emd::{BasisEnv, KnotVector};
use nalgebra::{DMatrix, DVector};
use rand::{rngs::StdRng, Rng, SeedableRng};

/// Cox–de Boor recursion straight from the definition, right-continuous
/// except at the last knot.
fn cox_de_boor(ext: &[f64], i: usize, k: usize, t: f64) -> f64 {
    if k == 1 {
        let last = *ext.last().unwrap();
        let inside = ext[i] <= t && t < ext[i + 1];
        let at_end = t == last && ext[i] < ext[i + 1] && ext[i + 1] == last;
        return if inside || at_end { 1.0 } else { 0.0 };
    }
    let mut v = 0.0;
    let left = ext[i + k - 1] - ext[i];
    if left > 0.0 {
        v += (t - ext[i]) / left * cox_de_boor(ext, i, k - 1, t);
    }
    let right = ext[i + k] - ext[i + 1];
    if right > 0.0 {
        v += (ext[i + k] - t) / right * cox_de_boor(ext, i + 1, k - 1, t);
    }
    v
}

fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    a.clone()
        .svd(true, true)
        .solve(b, 1e-14)
        .expect("svd solve")
}

#[test]
fn basis_matches_recursion_on_irregular_knots() {
    let mut rng = StdRng::seed_from_u64(7);
    let mut knots: Vec<f64> = (0..12).map(|_| rng.gen_range(-2.0..3.0)).collect();
    knots.extend([-2.0, 3.0]);
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    for order in [2, 3, 4, 5] {
        let env = BasisEnv::new(KnotVector::new(knots.clone()).unwrap(), order, 3).unwrap();
        let ext = env.extended_knots().as_slice().to_vec();
        for _ in 0..200 {
            let t = rng.gen_range(-2.0..=3.0);
            for i in 0..env.basis_count() {
                let want = cox_de_boor(&ext, i, order, t);
                let got = bspline_value(&env, i, t).unwrap();
                assert!(
                    (got - want).abs() < 1e-12,
                    "k={order} i={i} t={t}: {got} vs {want}"
                );
            }
        }
    }
}

#[test]
fn banded_fit_matches_dense_solve() {
    let mut rng = StdRng::seed_from_u64(11);
    let env = BasisEnv::uniform(0.0, 2.0, 4, 40, 3).unwrap();
    let n = env.basis_count();
    let times: Vec<f64> = (0..300).map(|j| 2.0 * j as f64 / 299.0).collect();
    let values: Vec<f64> = times
        .iter()
        .map(|t| t.sin() + rng.gen_range(-0.1..0.1))
        .collect();

    for weight in [0.0, 1e-4, 1.0] {
        let cfg = FitConfig {
            smooth_weight: weight,
        };
        let got = fit_points(&times, &values, &env, &cfg).unwrap();

        let h = env.knots().mean_spacing();
        let grid = env.extgrid();
        let rows = times.len() + if weight > 0.0 { grid.len() } else { 0 };
        let mut a = DMatrix::zeros(rows, n);
        let mut b = DVector::zeros(rows);
        for (r, (&t, &v)) in times.iter().zip(&values).enumerate() {
            for i in 0..n {
                a[(r, i)] = bspline_value(&env, i, t).unwrap();
            }
            b[r] = v;
        }
        if weight > 0.0 {
            for (g, &t) in grid.iter().enumerate() {
                for i in 0..n {
                    a[(times.len() + g, i)] =
                        weight.sqrt() * h * h * bspline_deriv(&env, i, t, 2).unwrap();
                }
            }
        }
        let want = least_squares(&a, &b);
        for (x, y) in got.coeffs().iter().zip(want.iter()) {
            assert!(
                (x - y).abs() < 1e-9 * (1.0 + y.abs()),
                "w={weight}: {x} vs {y}"
            );
        }
    }
}

#[test]
fn omega_solution_matches_dense_solve() {
    let env = env_on(0.0, 1.0);
    let u = fitted_on(&env, harmonic_peaks);
    let sys = build_omega_system(&u).unwrap();
    let rows = sys.matrix();
    let a = DMatrix::from_fn(sys.nrows(), sys.ncols(), |r, c| rows[r][c]);
    let b = DVector::from_vec(sys.rhs());
    let want = least_squares(&a, &b);
    let got = solve_omega(&sys).unwrap();
    let scale = want.amax();
    for (x, y) in got.coeffs().iter().zip(want.iter()) {
        assert!((x - y).abs() < 1e-8 * scale, "{x} vs {y}");
    }
    // the residual of the banded answer is no larger than the dense one
    let r_got: f64 = sys.residual(got.coeffs()).iter().map(|v| v * v).sum();
    let r_want = (&a * &want - &b).norm_squared();
    assert!(r_got <= r_want * (1.0 + 1e-9));
}

#[test]
fn omega_system_is_well_conditioned_on_examples() {
    let env = env_on(0.0, 1.0);
    for f in [constant_tone, harmonic_peaks, sigmoid_chirp] {
        let sys = build_omega_system(&fitted_on(&env, f)).unwrap();
        let rows = sys.matrix();
        let sv = DMatrix::from_fn(sys.nrows(), sys.ncols(), |r, c| rows[r][c]).singular_values();
        assert!(sv.min() / sv.max() > 1e-8);
    }
}

#[test]
fn constant_omega_satisfies_each_row() {
    let env = env_on(0.0, 1.0);
    let sys = build_omega_system(&fitted_on(&env, constant_tone)).unwrap();
    let omega = vec![1.0 / 1600.0; sys.ncols()];
    let worst = sys
        .residual(&omega)
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    // pointwise u″ of the cubic fit is accurate to (hω)²/12 ≈ 4e-3
    assert!(worst < 1e-2, "{worst}");
}
