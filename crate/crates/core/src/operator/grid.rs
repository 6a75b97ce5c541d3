use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense eigensolver feasibility limit on the number of grid points.
pub const DEFAULT_POINT_CAP: usize = 8192;

/// Uniform midpoint grid on the box `[-half_width, half_width]^dim`.
///
/// Point `i` has axis indices `i % n`, `(i / n) % n`, ... and coordinates
/// `-half_width + h (index + 1/2)` with `h = 2 half_width / n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub half_width: f64,
    pub points_per_axis: usize,
    /// Distances wrap around the box (lattice tori).
    pub periodic: bool,
}

impl GridSpec {
    pub fn new(dim: usize, half_width: f64, points_per_axis: usize) -> Result<Self> {
        Self::with_cap(dim, half_width, points_per_axis, DEFAULT_POINT_CAP)
    }

    pub fn with_cap(dim: usize, half_width: f64, points_per_axis: usize, cap: usize) -> Result<Self> {
        if !(dim == 2 || dim == 3) {
            return Err(Error::InvalidParameter(format!("grid dimension must be 2 or 3, got {dim}")));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidParameter(format!("half-width must be positive, got {half_width}")));
        }
        if points_per_axis == 0 {
            return Err(Error::InvalidParameter("points per axis must be positive".into()));
        }
        let points = points_per_axis.pow(dim as u32);
        if points > cap {
            return Err(Error::GridTooLarge { points, cap });
        }
        Ok(GridSpec { dim, half_width, points_per_axis, periodic: false })
    }

    /// Unit-spaced `size x size` lattice centered at the origin.
    pub fn lattice(size: usize, periodic: bool) -> Result<Self> {
        let mut g = Self::with_cap(2, size as f64 / 2.0, size, usize::MAX)?;
        g.periodic = periodic;
        Ok(g)
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points_per_axis as f64
    }

    /// Midpoint-rule cell volume `h^dim`.
    pub fn weight(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn axis_indices(&self, i: usize) -> [usize; 3] {
        let n = self.points_per_axis;
        let mut idx = [0; 3];
        let mut rest = i;
        for slot in idx.iter_mut().take(self.dim) {
            *slot = rest % n;
            rest /= n;
        }
        idx
    }

    pub fn axis_coordinate(&self, index: usize) -> f64 {
        -self.half_width + self.spacing() * (index as f64 + 0.5)
    }

    /// Coordinates of point `i`; entries past `dim` are zero.
    pub fn coords(&self, i: usize) -> [f64; 3] {
        let idx = self.axis_indices(i);
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = self.axis_coordinate(idx[a]);
        }
        x
    }

    pub fn sample<F: Fn(&[f64]) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.len()).map(|i| f(&self.coords(i)[..self.dim])).collect()
    }

    /// Euclidean distance, using the minimum-image convention when periodic.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.coords(i), self.coords(j));
        let period = 2.0 * self.half_width;
        let mut d2 = 0.0;
        for k in 0..self.dim {
            let mut d = (a[k] - b[k]).abs();
            if self.periodic && d > 0.5 * period {
                d = period - d;
            }
            d2 += d * d;
        }
        d2.sqrt()
    }
}
