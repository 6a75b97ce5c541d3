use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::GridSpec;
use crate::error::{Error, Result};
use crate::linalg::{hermitize, max_abs};

/// Constants of an exponential envelope `|P(x, y)| <= c e^{-beta |x - y|}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decay {
    pub c: f64,
    pub beta: f64,
}

/// A projection given by its integral kernel sampled on a grid,
/// `kernel[[i, j]] ~ P(x_i, x_j)`. Acting on grid functions it is
/// `(P psi)_i = sum_j kernel[[i, j]] psi_j * weight`.
#[derive(Debug, Clone)]
pub struct KernelProjection {
    kernel: Array2<Complex64>,
    grid: GridSpec,
    pub decay: Option<Decay>,
}

impl KernelProjection {
    /// Takes ownership of the samples and makes them exactly Hermitian.
    pub fn new(mut kernel: Array2<Complex64>, grid: GridSpec) -> Result<Self> {
        let n = grid.len();
        if kernel.dim() != (n, n) {
            return Err(Error::DimensionMismatch { expected: n, found: kernel.nrows() });
        }
        hermitize(&mut kernel);
        Ok(KernelProjection { kernel, grid, decay: None })
    }

    pub fn with_decay(mut self, decay: Decay) -> Self {
        self.decay = Some(decay);
        self
    }

    pub fn zero(grid: GridSpec) -> Self {
        let n = grid.len();
        KernelProjection { kernel: Array2::zeros((n, n)), grid, decay: None }
    }

    /// The identity operator: `kernel = weight^{-1} I`.
    pub fn identity(grid: GridSpec) -> Self {
        let n = grid.len();
        let kernel = Array2::from_diag_elem(n, Complex64::new(1.0 / grid.weight(), 0.0));
        KernelProjection { kernel, grid, decay: None }
    }

    /// Rank-one projection onto `samples`, normalized in the grid inner product
    /// so that the discrete operator is exactly idempotent.
    pub fn rank_one(grid: GridSpec, samples: &[Complex64]) -> Result<Self> {
        let n = grid.len();
        if samples.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: samples.len() });
        }
        let norm_sq: f64 = samples.iter().map(|c| c.norm_sqr()).sum::<f64>() * grid.weight();
        if norm_sq == 0.0 {
            return Err(Error::InvalidParameter("rank-one projection onto the zero vector".into()));
        }
        let kernel = Array2::from_shape_fn((n, n), |(i, j)| samples[i] * samples[j].conj() / norm_sq);
        Self::new(kernel, grid)
    }

    pub fn kernel(&self) -> &Array2<Complex64> {
        &self.kernel
    }

    pub fn into_kernel(self) -> Array2<Complex64> {
        self.kernel
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Matrix of the operator in the orthonormal basis of normalized cell
    /// indicators, `weight * kernel`.
    pub fn unitary_matrix(&self) -> Array2<Complex64> {
        let w = self.grid.weight();
        self.kernel.mapv(|c| c * w)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.kernel.diag().iter().map(|c| c.re).collect()
    }

    /// `max_ij |K_ij - conj(K_ji)|`, `max_ij |(K W K - K)_ij|` and the
    /// decay-envelope violations, compared against `tol`.
    ///
    /// The idempotency residual costs one dense matrix product.
    pub fn verify(&self, tol: f64) -> ProjectionReport {
        let n = self.len();
        let k = &self.kernel;
        let mut hermiticity = 0.0_f64;
        for i in 0..n {
            for j in 0..=i {
                hermiticity = hermiticity.max((k[[i, j]] - k[[j, i]].conj()).norm());
            }
        }
        let w = self.grid.weight();
        let square = k.dot(k).mapv(|c| c * w);
        let idempotency = max_abs(&(&square - k));

        let mut decay_violations = 0usize;
        let mut worst_decay_ratio = 0.0_f64;
        if let Some(Decay { c, beta }) = self.decay {
            for i in 0..n {
                for j in 0..n {
                    let bound = c * (-beta * self.grid.distance(i, j)).exp();
                    let ratio = k[[i, j]].norm() / bound;
                    worst_decay_ratio = worst_decay_ratio.max(ratio);
                    if k[[i, j]].norm() > bound + tol {
                        decay_violations += 1;
                    }
                }
            }
        }
        ProjectionReport {
            hermiticity,
            idempotency,
            decay_violations,
            worst_decay_ratio: self.decay.map(|_| worst_decay_ratio),
            passed: hermiticity <= tol && idempotency <= tol && decay_violations == 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProjectionReport {
    pub hermiticity: f64,
    pub idempotency: f64,
    pub decay_violations: usize,
    pub worst_decay_ratio: Option<f64>,
    pub passed: bool,
}

/// Grid samples of the normalized Gaussian `pi^{-d/4} e^{-|x - center|^2 / 2}`.
pub fn gaussian_samples(grid: &GridSpec, center: &[f64]) -> Vec<Complex64> {
    let norm = std::f64::consts::PI.powf(-(grid.dim as f64) / 4.0);
    grid.sample(|x| {
        let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
        norm * (-0.5 * r2).exp()
    })
    .into_iter()
    .map(|v| Complex64::new(v, 0.0))
    .collect()
}
