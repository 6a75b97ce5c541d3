//! Reference computations used to check the library against independent routes.

#![allow(dead_code)]

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::PI;

/// `L_n^{(alpha)}(x) = sum_j (-1)^j C(n + alpha, n - j) x^j / j!` with the
/// binomial built from a running product.
pub fn laguerre_explicit(n: usize, alpha: f64, x: f64) -> f64 {
    laguerre_terms(n, alpha, x).iter().sum()
}

/// `sum_j |term_j|`, the size of the largest cancellation in [`laguerre_explicit`].
pub fn laguerre_term_scale(n: usize, alpha: f64, x: f64) -> f64 {
    laguerre_terms(n, alpha, x).iter().map(|t| t.abs()).sum()
}

fn laguerre_terms(n: usize, alpha: f64, x: f64) -> Vec<f64> {
    (0..=n)
        .map(|j| {
            // C(n + alpha, n - j) = prod_{i=1}^{n-j} (alpha + j + i) / i
            let mut binom = 1.0;
            for i in 1..=(n - j) {
                binom *= (alpha + (j + i) as f64) / i as f64;
            }
            let mut pow = 1.0;
            for i in 1..=j {
                pow *= x / i as f64;
            }
            if j % 2 == 0 {
                binom * pow
            } else {
                -binom * pow
            }
        })
        .collect()
}

/// Composite Simpson rule with `2m` panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, m: usize) -> f64 {
    let n = 2 * m;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// `<phi_{0,k}, e^{-q<X>} phi_{0,k}>` as the radial integral
/// `(1/k!) int_0^inf e^{-q sqrt(1 + 2u/b)} u^k e^{-u} du`.
pub fn lambda_0k_simpson(k: usize, q: f64, b: f64) -> f64 {
    let kf = k as f64;
    let ln_kfact: f64 = (1..=k).map(|i| (i as f64).ln()).sum();
    let upper = kf + 40.0 * (kf + 1.0).sqrt() + 60.0;
    simpson(
        |u| {
            if u == 0.0 {
                return if k == 0 { (-q).exp() } else { 0.0 };
            }
            (-q * (1.0 + 2.0 * u / b).sqrt() + kf * u.ln() - u - ln_kfact).exp()
        },
        0.0,
        upper,
        20_000,
    )
}

/// Bloch Hamiltonian of the flux `p/q` Hofstadter model on a `q x 1` magnetic
/// cell, with the cell momentum `kx in [0, 2 pi)` entering through the bond
/// that leaves the cell.
pub fn harper_bloch(p: u32, q: u32, kx: f64, ky: f64) -> Array2<Complex64> {
    let q = q as usize;
    let alpha = p as f64 / q as f64;
    let mut h = Array2::<Complex64>::zeros((q, q));
    for j in 0..q {
        h[[j, j]] = Complex64::new(-2.0 * (ky - 2.0 * PI * alpha * j as f64).cos(), 0.0);
    }
    for j in 0..q {
        let next = (j + 1) % q;
        let t = if next == 0 { -Complex64::from_polar(1.0, kx) } else { Complex64::new(-1.0, 0.0) };
        h[[j, next]] += t;
        h[[next, j]] += t.conj();
    }
    h
}

/// Lowest-band Chern number from link variables on an `nk x nk` momentum mesh.
pub fn fhs_lowest_band_chern(p: u32, q: u32, nk: usize) -> f64 {
    let step = 2.0 * PI / nk as f64;
    let states: Vec<Vec<Vec<Complex64>>> = (0..nk)
        .map(|a| {
            (0..nk)
                .map(|c| {
                    let h = harper_bloch(p, q, a as f64 * step, c as f64 * step);
                    let s = ugwb::linalg::hermitian_eigen(&h).unwrap();
                    let last = s.values.len() - 1;
                    s.vectors.column(last).to_vec()
                })
                .collect()
        })
        .collect();
    let link = |u: &[Complex64], v: &[Complex64]| {
        let z: Complex64 = u.iter().zip(v).map(|(a, b)| a.conj() * b).sum();
        z / z.norm()
    };
    let mut total = 0.0;
    for a in 0..nk {
        for c in 0..nk {
            let a1 = (a + 1) % nk;
            let c1 = (c + 1) % nk;
            let u00 = &states[a][c];
            let u10 = &states[a1][c];
            let u11 = &states[a1][c1];
            let u01 = &states[a][c1];
            let plaquette = link(u00, u10) * link(u10, u11) * link(u11, u01) * link(u01, u00);
            total += plaquette.arg();
        }
    }
    total / (2.0 * PI)
}

/// Hermitian matrix with standard normal real and imaginary parts.
pub fn random_hermitian<R: Rng>(rng: &mut R, n: usize) -> Array2<Complex64> {
    let mut a = Array2::<Complex64>::zeros((n, n));
    for i in 0..n {
        a[[i, i]] = Complex64::new(normal(rng), 0.0);
        for j in 0..i {
            let z = Complex64::new(normal(rng), normal(rng));
            a[[i, j]] = z;
            a[[j, i]] = z.conj();
        }
    }
    a
}

fn normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}
