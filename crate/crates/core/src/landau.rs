//! Landau levels in the symmetric gauge: the angular-momentum basis,
//! the exact eigenvalues of `P_n e^{-q<X>} P_n`, their brackets, and the
//! projection kernels used to seed grid computations.

use ndarray::Array2;
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::operator::{GridSpec, KernelProjection};
use crate::special_functions::{
    integrate_adaptive, jbracket, laguerre, laguerre_abs_coefficient_sum, ln_factorial, DecayEnvelope,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LandauSpec {
    pub b: f64,
    pub n: usize,
    pub q: f64,
    pub k_max: i64,
}

impl LandauSpec {
    pub fn new(b: f64, n: usize, q: f64, k_max: i64) -> Result<Self> {
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::InvalidParameter(format!("magnetic field must be positive, got {b}")));
        }
        if !(q > 0.0 && q.is_finite()) {
            return Err(Error::InvalidParameter(format!("q must be positive, got {q}")));
        }
        if k_max < -(n as i64) {
            return Err(Error::InvalidParameter(format!("k_max = {k_max} is below -n = -{n}")));
        }
        Ok(LandauSpec { b, n, q, k_max })
    }

    /// `E_n = (b/2)(2n + 1)`.
    pub fn energy(&self) -> f64 {
        0.5 * self.b * (2 * self.n + 1) as f64
    }

    /// Angular indices `-n..=k_max`.
    pub fn k_range(&self) -> std::ops::RangeInclusive<i64> {
        -(self.n as i64)..=self.k_max
    }

    pub fn basis(&self, k: i64, x: &[f64]) -> Complex64 {
        landau_basis_eval(self.b, self.n, k, x)
    }
}

/// `phi_{n,k}(x)` for `k >= -n`; zero for `k < -n`.
///
/// Negative `k = -j` uses `phi_{n,-j} = (-1)^j conj(phi_{n-j,j})`.
pub fn landau_basis_eval(b: f64, n: usize, k: i64, x: &[f64]) -> Complex64 {
    if k < 0 {
        let j = (-k) as usize;
        if j > n {
            return Complex64::new(0.0, 0.0);
        }
        let v = landau_basis_eval(b, n - j, j as i64, x).conj();
        return if j.is_multiple_of(2) { v } else { -v };
    }
    let k = k as usize;
    let r2 = x[0] * x[0] + x[1] * x[1];
    let xi = 0.5 * b * r2;
    let lag = laguerre(n, k as f64, xi);
    let gauss_norm = (b / (2.0 * PI)).sqrt();
    if k == 0 {
        return Complex64::new(gauss_norm * lag * (-0.25 * b * r2).exp(), 0.0);
    }
    if r2 == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    // |z|^k with |z| = sqrt(xi), combined with the factorial ratio and Gaussian in log space
    let log_mod = 0.5 * (ln_factorial(n) - ln_factorial(n + k)) + 0.5 * k as f64 * xi.ln() - 0.5 * xi;
    let theta = x[1].atan2(x[0]);
    Complex64::from_polar(gauss_norm * lag * log_mod.exp(), k as f64 * theta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LandauEigenvalue {
    pub k: i64,
    pub lambda: f64,
    pub err_estimate: f64,
    pub radius: f64,
    pub radius_clamped: bool,
    /// Brackets are only available for the lowest level.
    pub lower_bound: Option<f64>,
    pub upper_bound: Option<f64>,
}

/// `lambda_{n,k} = (n!/(k+n)!) int_0^inf e^{-q <sqrt(2 xi / b)>} e^{-xi} xi^k L_n^{(k)}(xi)^2 dxi`
/// to absolute tolerance `tol`.
pub fn lambda_nk(spec: &LandauSpec, k: i64, tol: f64) -> Result<LandauEigenvalue> {
    let n = spec.n;
    if k < -(n as i64) {
        return Err(Error::InvalidParameter(format!("k = {k} is below -n = -{n}")));
    }
    // lambda_{n,-j} = lambda_{n-j,j}
    let (nn, kk) = if k < 0 { (n - (-k) as usize, (-k) as usize) } else { (n, k as usize) };
    let (b, q) = (spec.b, spec.q);
    let log_ratio = ln_factorial(nn) - ln_factorial(nn + kk);
    let alpha = kk as f64;
    let integrand = |xi: f64| {
        if xi == 0.0 {
            return if kk == 0 { (-q * 1.0).exp() * (log_ratio).exp() * laguerre(nn, 0.0, 0.0).powi(2) } else { 0.0 };
        }
        let weight = -q * jbracket(&[(2.0 * xi / b).sqrt()]) + alpha * xi.ln() - xi + log_ratio;
        weight.exp() * laguerre(nn, alpha, xi).powi(2)
    };
    let coef = laguerre_abs_coefficient_sum(nn, alpha);
    let envelope = DecayEnvelope::new((-q + log_ratio).exp() * coef * coef, (kk + 2 * nn) as u32, 1.0);
    let integral = integrate_adaptive(integrand, &envelope, tol)?;
    let lambda = integral.value;
    let radius = radius_from_lambda(lambda, q)?;
    let (lower_bound, upper_bound) = if n == 0 {
        let (lo, hi) = lambda_bounds_0k(kk, q, b);
        (Some(lo), Some(hi))
    } else {
        (None, None)
    };
    Ok(LandauEigenvalue {
        k,
        lambda,
        err_estimate: integral.err_estimate,
        radius: radius.value,
        radius_clamped: radius.clamped,
        lower_bound,
        upper_bound,
    })
}

/// `lambda_{n,k}` for every `k` in `spec.k_range()`, in order of `k`.
pub fn lambda_sweep(spec: &LandauSpec, tol: f64) -> Result<Vec<LandauEigenvalue>> {
    let ks: Vec<i64> = spec.k_range().collect();
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        ks.par_iter().map(|&k| lambda_nk(spec, k, tol)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        ks.iter().map(|&k| lambda_nk(spec, k, tol)).collect()
    }
}

/// `(e^{-q} (1 + 2q/b)^{-(k+1)}, e^{-q})`.
pub fn lambda_bounds_0k(k: usize, q: f64, b: f64) -> (f64, f64) {
    let upper = (-q).exp();
    let lower = (-q - (k as f64 + 1.0) * (2.0 * q / b).ln_1p()).exp();
    (lower, upper)
}

/// Bracket `1 <= <r_{0,k}> <= 1 + ((k+1)/q) ln(1 + 2q/b)`.
pub fn radius_bracket_0k(k: usize, q: f64, b: f64) -> (f64, f64) {
    (1.0, 1.0 + (k as f64 + 1.0) / q * (2.0 * q / b).ln_1p())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Radius {
    pub value: f64,
    /// `lambda > e^{-q}` made the radicand negative; `value` was set to zero.
    pub clamped: bool,
}

/// `r = sqrt((ln(lambda)/q)^2 - 1)`.
pub fn radius_from_lambda(lambda: f64, q: f64) -> Result<Radius> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidLambda(lambda));
    }
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::InvalidParameter(format!("q must be positive, got {q}")));
    }
    let t = lambda.ln() / q;
    let radicand = t * t - 1.0;
    Ok(Radius { value: radicand.max(0.0).sqrt(), clamped: lambda > (-q).exp() })
}

/// Square 2D midpoint grid wide and fine enough to integrate products of
/// `phi_{n,k}` with `|k| <= k_abs` to near machine precision.
pub fn quadrature_grid(b: f64, n: usize, k_abs: usize) -> Result<GridSpec> {
    let m = (k_abs + n) as f64;
    let xi_cut = 45.0 + 3.0 * m;
    let half_width = (2.0 * xi_cut / b).sqrt();
    let h = 0.5 / (b * (1.0 + m)).sqrt();
    let points = (2.0 * half_width / h).ceil() as usize;
    GridSpec::with_cap(2, half_width, points + points % 2, usize::MAX)
}

/// Columns `phi_{n,k}(x_i)` for the given `ks`.
pub fn basis_samples(b: f64, n: usize, ks: &[i64], grid: &GridSpec) -> Array2<Complex64> {
    let mut out = Array2::zeros((grid.len(), ks.len()));
    for i in 0..grid.len() {
        let x = grid.coords(i);
        for (c, &k) in ks.iter().enumerate() {
            out[[i, c]] = landau_basis_eval(b, n, k, &x[..2]);
        }
    }
    out
}

/// `<phi_{n,k}, e^{-q<x>} phi_{n,k'}>` by direct 2D position-space quadrature.
pub fn toeplitz_element(spec: &LandauSpec, k: i64, k_prime: i64) -> Result<Complex64> {
    let grid = quadrature_grid(spec.b, spec.n, k.unsigned_abs().max(k_prime.unsigned_abs()) as usize)?;
    let m = toeplitz_on_grid(spec, &[k, k_prime], &grid);
    Ok(m[[0, 1]])
}

/// Matrix of `<phi_{n,k}, e^{-q<x>} phi_{n,k'}>` over `spec.k_range()` by 2D quadrature.
pub fn toeplitz_matrix(spec: &LandauSpec) -> Result<Array2<Complex64>> {
    let ks: Vec<i64> = spec.k_range().collect();
    let k_abs = ks.iter().map(|k| k.unsigned_abs() as usize).max().unwrap_or(0);
    let grid = quadrature_grid(spec.b, spec.n, k_abs)?;
    Ok(toeplitz_on_grid(spec, &ks, &grid))
}

fn toeplitz_on_grid(spec: &LandauSpec, ks: &[i64], grid: &GridSpec) -> Array2<Complex64> {
    let phi = basis_samples(spec.b, spec.n, ks, grid);
    let w = grid.weight();
    let f = grid.sample(|x| (-spec.q * jbracket(x)).exp());
    let mut fphi = phi.clone();
    for (mut row, fm) in fphi.rows_mut().into_iter().zip(f) {
        row.mapv_inplace(|c| c * fm * w);
    }
    phi.t().mapv(|c| c.conj()).dot(&fphi)
}

/// Gram matrix of `phi_{n,k}`, `k` in `spec.k_range()`, on `grid`.
pub fn gram_matrix(spec: &LandauSpec, grid: &GridSpec) -> Array2<Complex64> {
    let ks: Vec<i64> = spec.k_range().collect();
    let phi = basis_samples(spec.b, spec.n, &ks, grid);
    phi.t().mapv(|c| c.conj()).dot(&phi).mapv(|c| c * grid.weight())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelSum {
    pub value: Complex64,
    /// Sum of the moduli of the next terms after `k_trunc`.
    pub tail_estimate: f64,
    pub converged: bool,
}

/// Tail threshold for a truncated kernel series to count as converged.
pub const KERNEL_TAIL_TOL: f64 = 1e-10;
const TAIL_TERMS: i64 = 24;

/// `sum_{k=-n}^{k_trunc} phi_{n,k}(x) conj(phi_{n,k}(y))`.
pub fn landau_projection_kernel(n: usize, b: f64, x: &[f64], y: &[f64], k_trunc: i64) -> KernelSum {
    let lo = -(n as i64);
    let mut value = Complex64::new(0.0, 0.0);
    for k in lo..=k_trunc {
        value += landau_basis_eval(b, n, k, x) * landau_basis_eval(b, n, k, y).conj();
    }
    let tail_estimate = series_tail(n, b, x, y, k_trunc);
    KernelSum { value, tail_estimate, converged: tail_estimate < KERNEL_TAIL_TOL }
}

fn series_tail(n: usize, b: f64, x: &[f64], y: &[f64], k_trunc: i64) -> f64 {
    let start = k_trunc.max(-(n as i64) - 1) + 1;
    (start..start + TAIL_TERMS)
        .map(|k| landau_basis_eval(b, n, k, x).norm() * landau_basis_eval(b, n, k, y).norm())
        .sum()
}

/// Smallest truncation index, past the peak of the series, whose tail at
/// the corner of a box of the given half-width is below the convergence threshold.
pub fn default_k_trunc(n: usize, b: f64, half_width: f64) -> i64 {
    let corner = [half_width, half_width];
    let xi = b * half_width * half_width;
    let mut k = xi.ceil() as i64;
    while series_tail(n, b, &corner, &corner, k) >= KERNEL_TAIL_TOL {
        k += 4;
    }
    k
}

/// `P_n(x, y) = (b/2pi) e^{i (b/2)(x2 y1 - x1 y2)} L_n(b|x-y|^2/2) e^{-b|x-y|^2/4}`,
/// the series summed in closed form.
pub fn landau_kernel_closed(n: usize, b: f64, x: &[f64], y: &[f64]) -> Complex64 {
    let d2 = (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2);
    let modulus = b / (2.0 * PI) * laguerre(n, 0.0, 0.5 * b * d2) * (-0.25 * b * d2).exp();
    Complex64::from_polar(1.0, 0.5 * b * (x[1] * y[0] - x[0] * y[1])) * modulus
}

/// How the grid kernel of a Landau projection is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelSource {
    Closed,
    /// Truncated angular-momentum series.
    Series {
        k_trunc: i64,
    },
}

/// The Landau projection `P_n` sampled on a 2D grid.
pub fn landau_grid_projection(n: usize, b: f64, grid: GridSpec, source: KernelSource) -> Result<KernelProjection> {
    if grid.dim != 2 {
        return Err(Error::InvalidParameter("Landau projections live on 2D grids".into()));
    }
    let kernel = match source {
        KernelSource::Closed => {
            let pts: Vec<[f64; 3]> = (0..grid.len()).map(|i| grid.coords(i)).collect();
            Array2::from_shape_fn((grid.len(), grid.len()), |(i, j)| landau_kernel_closed(n, b, &pts[i], &pts[j]))
        }
        KernelSource::Series { k_trunc } => {
            let ks: Vec<i64> = (-(n as i64)..=k_trunc).collect();
            let phi = basis_samples(b, n, &ks, &grid);
            phi.dot(&phi.t().mapv(|c| c.conj()))
        }
    };
    KernelProjection::new(kernel, grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_at_origin() {
        let v = landau_basis_eval(2.0, 0, 0, &[0.0, 0.0]);
        assert!((v.re - (1.0 / PI).sqrt()).abs() < 1e-15 && v.im == 0.0);
        assert_eq!(landau_basis_eval(2.0, 0, 1, &[0.0, 0.0]).norm(), 0.0);
        assert_eq!(landau_basis_eval(2.0, 1, -2, &[0.3, 0.1]).norm(), 0.0);
    }

    #[test]
    fn basis_normalization_on_grid() {
        let b: f64 = 2.0;
        let grid = GridSpec::with_cap(2, 8.0 / b.sqrt(), 256, usize::MAX).unwrap();
        let norm: f64 =
            (0..grid.len()).map(|i| landau_basis_eval(b, 0, 3, &grid.coords(i)[..2]).norm_sqr()).sum::<f64>()
                * grid.weight();
        assert!((norm - 1.0).abs() < 1e-6, "{norm}");
    }

    #[test]
    fn negative_index_matches_direct_formula() {
        // phi_{1,-1} from the defining display: sqrt(1!/0!) z^{-1} L_1^{(-1)}(xi) G, L_1^{(-1)}(xi) = -xi
        let (b, x): (f64, [f64; 2]) = (1.5, [0.7, -0.4]);
        let z = Complex64::new(x[0], x[1]) * (b / 2.0).sqrt();
        let xi = 0.5 * b * (x[0] * x[0] + x[1] * x[1]);
        let g = (b / (2.0 * PI)).sqrt() * (-xi / 2.0).exp();
        let direct = z.inv() * (-xi) * g;
        assert!((landau_basis_eval(b, 1, -1, &x) - direct).norm() < 1e-14);
    }

    #[test]
    fn bounds_and_brackets() {
        let (lo, hi) = lambda_bounds_0k(0, 1.0, 2.0);
        assert!((lo - (-1f64).exp() / 2.0).abs() < 1e-15);
        assert!((hi - 0.36787944117144233).abs() < 1e-15);
        let (lo, hi) = lambda_bounds_0k(10, 2.0, 4.0);
        assert!((lo - (-2f64).exp() / 2048.0).abs() < 1e-18);
        assert!((hi - (-2f64).exp()).abs() < 1e-15);
        let (lo, hi) = lambda_bounds_0k(0, 1e-9, 1.0);
        assert!((hi - lo) < 1e-8 && (1.0 - lo) < 1e-8);
        assert_eq!(radius_bracket_0k(0, 1.0, 2.0), (1.0, 1.0 + 2f64.ln()));
        assert!((radius_bracket_0k(9, 1.0, 2.0).1 - 7.931_471_805_599_453).abs() < 1e-14);
    }

    #[test]
    fn radius_formula() {
        assert_eq!(radius_from_lambda((-1.5f64).exp(), 1.5).unwrap().value, 0.0);
        assert!((radius_from_lambda((-2f64).exp(), 1.0).unwrap().value - 3f64.sqrt()).abs() < 1e-12);
        let r = radius_from_lambda(0.263, 1.0).unwrap();
        assert!((r.value - 0.884).abs() < 2e-3 && !r.clamped);
        let r = radius_from_lambda(0.5, 1.0).unwrap();
        assert!(r.clamped && r.value == 0.0);
        assert!(matches!(radius_from_lambda(1.0, 1.0), Err(Error::InvalidLambda(_))));
        assert!(matches!(radius_from_lambda(0.0, 1.0), Err(Error::InvalidLambda(_))));
    }

    #[test]
    fn lambda_lowest_values() {
        let spec = LandauSpec::new(2.0, 0, 1.0, 5).unwrap();
        let l0 = lambda_nk(&spec, 0, 1e-10).unwrap();
        assert!((l0.lambda - 0.263).abs() < 1e-3, "{}", l0.lambda);
        let l5 = lambda_nk(&spec, 5, 1e-10).unwrap();
        assert!(l5.lambda > 0.005748 && l5.lambda < 0.367879);
        assert!(l5.lower_bound.unwrap() < l5.lambda && l5.lambda < l5.upper_bound.unwrap());
    }

    #[test]
    fn negative_k_lambda_identity() {
        let spec = LandauSpec::new(1.3, 2, 0.7, 3).unwrap();
        let a = lambda_nk(&spec, -1, 1e-12).unwrap().lambda;
        let b = lambda_nk(&LandauSpec::new(1.3, 1, 0.7, 3).unwrap(), 1, 1e-12).unwrap().lambda;
        assert_eq!(a, b);
    }

    #[test]
    fn lambda_matches_two_dimensional_quadrature() {
        let spec = LandauSpec::new(1.0, 1, 0.5, 0).unwrap();
        let radial = lambda_nk(&spec, 0, 1e-12).unwrap().lambda;
        let direct = toeplitz_element(&spec, 0, 0).unwrap();
        assert!((radial - direct.re).abs() < 1e-5 && direct.im.abs() < 1e-12);
    }

    #[test]
    fn toeplitz_examples() {
        let spec = LandauSpec::new(2.0, 0, 1.0, 2).unwrap();
        assert!(toeplitz_element(&spec, 0, 1).unwrap().norm() < 1e-8);
        let d = toeplitz_element(&spec, 2, 2).unwrap();
        assert!((d.re - lambda_nk(&spec, 2, 1e-12).unwrap().lambda).abs() < 1e-6);
        let spec1 = LandauSpec::new(2.0, 1, 1.0, 0).unwrap();
        assert!(toeplitz_element(&spec1, -1, 0).unwrap().norm() < 1e-8);
    }

    #[test]
    fn kernel_series_examples() {
        let s = landau_projection_kernel(0, 2.0, &[0.0, 0.0], &[0.0, 0.0], 0);
        assert!((s.value.re - 1.0 / PI).abs() < 1e-15);
        let s = landau_projection_kernel(0, 2.0, &[0.0, 0.0], &[3.0, 0.0], 60);
        assert!(s.value.norm() <= (-4.5f64).exp() / PI * (1.0 + 1e-12));
        let s = landau_projection_kernel(1, 2.0, &[1.0, 1.0], &[1.0, 1.0], 80);
        assert!((s.value.re - 1.0 / PI).abs() < 1e-6 && s.converged);
    }

    #[test]
    fn closed_kernel_matches_series() {
        for n in 0..3 {
            for &(x, y) in &[([0.3, -1.2], [1.1, 0.4]), ([2.0, 1.0], [-0.5, 0.7]), ([0.0, 0.0], [1.5, -1.5])] {
                let s = landau_projection_kernel(n, 1.7, &x, &y, 90);
                let c = landau_kernel_closed(n, 1.7, &x, &y);
                assert!((s.value - c).norm() < 1e-12, "n={n}: {} vs {}", s.value, c);
            }
        }
    }

    #[test]
    fn default_truncation_converges_at_corner() {
        let k = default_k_trunc(0, 2.0, 3.0);
        let s = landau_projection_kernel(0, 2.0, &[3.0, 3.0], &[3.0, 3.0], k);
        assert!(s.converged && (s.value.re - 1.0 / PI).abs() < 1e-9);
    }

    #[test]
    fn gram_is_identity() {
        for n in 0..=2 {
            let spec = LandauSpec::new(2.0, n, 1.0, 12).unwrap();
            let grid = quadrature_grid(2.0, n, 12).unwrap();
            let g = gram_matrix(&spec, &grid);
            for ((i, j), v) in g.indexed_iter() {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((v - Complex64::new(target, 0.0)).norm() < 1e-6, "n={n} ({i},{j}) {v}");
            }
        }
    }

    #[test]
    fn spec_validation() {
        assert!(LandauSpec::new(0.0, 0, 1.0, 0).is_err());
        assert!(LandauSpec::new(1.0, 0, -1.0, 0).is_err());
        assert!(LandauSpec::new(1.0, 1, 1.0, -2).is_err());
        assert_eq!(LandauSpec::new(2.0, 1, 1.0, 0).unwrap().energy(), 3.0);
    }
}
