mod common;

use proptest::prelude::*;

use ugwb::landau::{
    gram_matrix, lambda_bounds_0k, lambda_nk, lambda_sweep, landau_kernel_closed, landau_projection_kernel,
    quadrature_grid, radius_from_lambda, LandauSpec,
};
use ugwb::special_functions::laguerre;

#[test]
fn lowest_level_eigenvalues_match_simpson() {
    for (q, b) in [(0.5, 1.0), (1.0, 2.0), (2.0, 4.0), (1.5, 0.7)] {
        let spec = LandauSpec::new(b, 0, q, 12).unwrap();
        for ev in lambda_sweep(&spec, 1e-12).unwrap() {
            let reference = common::lambda_0k_simpson(ev.k as usize, q, b);
            assert!(
                (ev.lambda - reference).abs() < 1e-9 * reference,
                "q={q} b={b} k={}: {} vs {reference}",
                ev.k,
                ev.lambda
            );
        }
    }
}

#[test]
fn negative_angular_index_mirrors_lower_level() {
    for j in 1..=2usize {
        let spec = LandauSpec::new(2.0, 2, 1.0, 3).unwrap();
        let mirrored = LandauSpec::new(2.0, 2 - j, 1.0, 3).unwrap();
        let a = lambda_nk(&spec, -(j as i64), 1e-12).unwrap().lambda;
        let b = lambda_nk(&mirrored, j as i64, 1e-12).unwrap().lambda;
        assert!((a - b).abs() < 1e-12 * b);
    }
}

#[test]
fn basis_is_orthonormal_on_quadrature_grid() {
    for n in 0..=2 {
        let spec = LandauSpec::new(2.0, n, 1.0, 5).unwrap();
        let grid = quadrature_grid(2.0, n, 5).unwrap();
        let g = gram_matrix(&spec, &grid);
        for ((i, j), c) in g.indexed_iter() {
            let target = if i == j { 1.0 } else { 0.0 };
            assert!((c - target).norm() < 1e-9, "n={n} ({i},{j}) {c}");
        }
    }
}

#[test]
fn kernel_series_converges_to_closed_form() {
    let points = [([0.3, -0.2], [0.1, 0.4]), ([1.2, 0.5], [-0.7, 0.9]), ([0.0, 0.0], [2.0, -1.0])];
    for n in 0..=2 {
        for (x, y) in points {
            let series = landau_projection_kernel(n, 2.0, &x, &y, 80);
            let closed = landau_kernel_closed(n, 2.0, &x, &y);
            assert!(series.converged);
            assert!((series.value - closed).norm() < 1e-9, "n={n} {x:?} {y:?}");
        }
    }
}

proptest! {
    #[test]
    fn bracket_holds_off_the_sweep(k in 0usize..80, q in 0.1f64..3.0, b in 0.5f64..6.0) {
        let spec = LandauSpec::new(b, 0, q, k as i64).unwrap();
        let lambda = lambda_nk(&spec, k as i64, 1e-10).unwrap().lambda;
        let (lo, hi) = lambda_bounds_0k(k, q, b);
        prop_assert!(lambda > lo && lambda < hi);
    }

    #[test]
    fn radii_grow_with_angular_momentum(k in 0usize..60, q in 0.2f64..2.0, b in 0.5f64..4.0) {
        let spec = LandauSpec::new(b, 0, q, k as i64 + 1).unwrap();
        let r0 = radius_from_lambda(lambda_nk(&spec, k as i64, 1e-12).unwrap().lambda, q).unwrap().value;
        let r1 = radius_from_lambda(lambda_nk(&spec, k as i64 + 1, 1e-12).unwrap().lambda, q).unwrap().value;
        prop_assert!(r1 >= r0);
    }

    #[test]
    fn laguerre_matches_explicit_sum(n in 0usize..40, alpha in 0.0f64..30.0, x in 0.0f64..80.0) {
        let reference = common::laguerre_explicit(n, alpha, x);
        let scale = common::laguerre_term_scale(n, alpha, x);
        prop_assert!((laguerre(n, alpha, x) - reference).abs() <= 1e-9 * scale);
    }
}
