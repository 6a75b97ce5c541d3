mod common;

use ndarray::Array2;
use num_complex::Complex64;
use proptest::prelude::*;

use ugwb::landau::{landau_grid_projection, KernelSource};
use ugwb::linalg::hermitian_eigen;
use ugwb::operator::{
    assemble_wf, build_ugwb, eigendecompose, gaussian_samples, EigenStrategy, GridSpec, KernelProjection, UgwbOptions,
};

fn landau(points: usize, half_width: f64) -> KernelProjection {
    let grid = GridSpec::new(2, half_width, points).unwrap();
    landau_grid_projection(0, 2.0, grid, KernelSource::Closed).unwrap()
}

fn opts(strategy: EigenStrategy) -> UgwbOptions {
    UgwbOptions { strategy, ..UgwbOptions::default() }
}

#[test]
fn dense_and_compressed_routes_agree() {
    let p = landau(24, 5.0);
    let dense = build_ugwb(&p, 1.0, &opts(EigenStrategy::Dense)).unwrap();
    let compressed = build_ugwb(&p, 1.0, &opts(EigenStrategy::RangeCompressed)).unwrap();
    assert_eq!(dense.levels.len(), compressed.levels.len());
    assert_eq!(dense.range_rank, compressed.range_rank);
    for (a, b) in dense.levels.iter().zip(&compressed.levels) {
        assert!((a.lambda - b.lambda).abs() < 1e-10 * a.lambda.max(1e-3), "{} vs {}", a.lambda, b.lambda);
        assert_eq!(a.multiplicity(), b.multiplicity());
        assert!((a.radius - b.radius).abs() < 1e-6);
    }
    assert!((dense.hs_norm_sq - compressed.hs_norm_sq).abs() < 1e-8 * dense.hs_norm_sq);
    assert!(compressed.check().passed);
}

#[test]
fn unpurified_route_reproduces_literal_compression() {
    let p = landau(20, 5.0);
    let raw = build_ugwb(&p, 1.0, &UgwbOptions { purify: false, ..opts(EigenStrategy::Dense) }).unwrap();
    let raw_c = build_ugwb(&p, 1.0, &UgwbOptions { purify: false, ..opts(EigenStrategy::RangeCompressed) }).unwrap();
    let w = assemble_wf(&p, &p.grid().sample(|x| (-ugwb::special_functions::jbracket(x)).exp())).unwrap();
    let s = eigendecompose(&w).unwrap();
    assert!((raw.levels[0].lambda - s.values[0]).abs() < 1e-12);
    for (a, b) in raw.levels.iter().zip(&raw_c.levels).take(10) {
        assert!((a.lambda - b.lambda).abs() < 1e-10);
    }
}

#[test]
fn grid_eigenvalues_match_radial_integrals() {
    let p = landau(48, 6.0);
    let u = build_ugwb(&p, 1.0, &UgwbOptions::default()).unwrap();
    for k in 0..4 {
        let reference = common::lambda_0k_simpson(k, 1.0, 2.0);
        assert!((u.levels[k].lambda - reference).abs() < 1e-7 * reference, "k = {k}");
    }
}

#[test]
fn unit_weight_returns_the_range_with_eigenvalue_one() {
    let grid = GridSpec::new(2, 4.0, 16).unwrap();
    let a = gaussian_samples(&grid, &[1.0, 0.0]);
    let b = gaussian_samples(&grid, &[-1.5, 0.5]);
    let w = grid.weight();
    let na = (a.iter().map(|c| c.norm_sqr()).sum::<f64>() * w).sqrt();
    let a: Vec<Complex64> = a.iter().map(|c| c / na).collect();
    // orthonormalize b against a
    let overlap: Complex64 = a.iter().zip(&b).map(|(x, y)| x.conj() * y).sum::<Complex64>() * w;
    let b: Vec<Complex64> = b.iter().zip(&a).map(|(y, x)| y - overlap * x).collect();
    let nb = (b.iter().map(|c| c.norm_sqr()).sum::<f64>() * w).sqrt();
    let b: Vec<Complex64> = b.iter().map(|c| c / nb).collect();
    let kernel = Array2::from_shape_fn((grid.len(), grid.len()), |(i, j)| a[i] * a[j].conj() + b[i] * b[j].conj());
    let p = KernelProjection::new(kernel, grid).unwrap();
    let wf = assemble_wf(&p, &vec![1.0; grid.len()]).unwrap();
    let s = eigendecompose(&wf).unwrap();
    assert!((s.values[0] - 1.0).abs() < 1e-10 && (s.values[1] - 1.0).abs() < 1e-10);
    assert!(s.values[2].abs() < 1e-10);
}

#[test]
fn compression_is_positive_and_below_weight_maximum() {
    let p = landau(20, 5.0);
    let u = build_ugwb(&p, 0.7, &UgwbOptions::default()).unwrap();
    let cap = (-0.7_f64).exp();
    for l in &u.levels {
        assert!(l.lambda > 0.0 && l.lambda < cap, "{}", l.lambda);
    }
}

#[test]
fn gauge_transform_preserves_levels() {
    let p = landau(20, 5.0);
    let grid = *p.grid();
    let phase: Vec<Complex64> = (0..grid.len())
        .map(|i| Complex64::from_polar(1.0, 0.3 * grid.coords(i)[0] - 1.1 * grid.coords(i)[1].powi(2)))
        .collect();
    let k = p.kernel();
    let gauged = Array2::from_shape_fn(k.dim(), |(i, j)| phase[i] * k[[i, j]] * phase[j].conj());
    let pg = KernelProjection::new(gauged, grid).unwrap();
    let a = build_ugwb(&p, 1.0, &UgwbOptions::default()).unwrap();
    let b = build_ugwb(&pg, 1.0, &UgwbOptions::default()).unwrap();
    assert_eq!(a.levels.len(), b.levels.len());
    for (la, lb) in a.levels.iter().zip(&b.levels) {
        assert!((la.lambda - lb.lambda).abs() < 1e-10);
        let da: Vec<f64> = la.vectors.column(0).iter().map(|c| c.norm()).collect();
        let db: Vec<f64> = lb.vectors.column(0).iter().map(|c| c.norm()).collect();
        if la.multiplicity() == 1 {
            assert!(da.iter().zip(&db).all(|(x, y)| (x - y).abs() < 1e-7));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn eigendecomposition_reconstructs(seed in any::<u64>(), n in 1usize..24) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let a = common::random_hermitian(&mut rng, n);
        let s = hermitian_eigen(&a).unwrap();
        prop_assert!(s.values.windows(2).all(|w| w[0] >= w[1]));
        let d = Array2::from_diag(&ndarray::Array1::from(s.values.clone()).mapv(|v| Complex64::new(v, 0.0)));
        let recon = s.vectors.dot(&d).dot(&ugwb::linalg::adjoint(&s.vectors));
        let scale = ugwb::linalg::max_abs(&a).max(1.0);
        prop_assert!(ugwb::linalg::max_abs(&(recon - &a)) < 1e-10 * scale);
        let gram = ugwb::linalg::adjoint(&s.vectors).dot(&s.vectors);
        prop_assert!(ugwb::linalg::max_abs(&(gram - Array2::<Complex64>::eye(n))) < 1e-10);
    }

    #[test]
    fn rank_one_basis_is_single_normalized_vector(cx in -1.0f64..1.0, cy in -1.0f64..1.0, q in 0.2f64..2.0) {
        let grid = GridSpec::new(2, 5.0, 16).unwrap();
        let p = KernelProjection::rank_one(grid, &gaussian_samples(&grid, &[cx, cy])).unwrap();
        let u = build_ugwb(&p, q, &UgwbOptions::default()).unwrap();
        prop_assert_eq!(u.total_vectors(), 1);
        let r = u.check();
        prop_assert!(r.passed);
        prop_assert!(r.max_orthonormality_error < 1e-10);
    }
}
