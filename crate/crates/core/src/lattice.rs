//! Square-lattice magnetic (Hofstadter) models, their gapped spectral
//! projections, empirical kernel decay fits and the local Chern marker.

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, Spectrum};
use crate::operator::{Decay, GridSpec, KernelProjection};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Open,
    Periodic,
}

impl FromStr for Boundary {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "open" => Ok(Boundary::Open),
            "periodic" => Ok(Boundary::Periodic),
            other => Err(Error::InvalidParameter(format!("unknown boundary '{other}'"))),
        }
    }
}

/// Flux per plaquette `p/q` in units of the flux quantum, in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flux {
    pub p: u32,
    pub q: u32,
}

impl Flux {
    pub fn new(p: u32, q: u32) -> Result<Self> {
        if q == 0 || (p != 0 && p >= q) {
            return Err(Error::InvalidParameter(format!("flux {p}/{q} must lie in [0, 1)")));
        }
        if p == 0 {
            return Ok(Flux { p: 0, q: 1 });
        }
        if gcd(p, q) != 1 {
            return Err(Error::InvalidParameter(format!("flux {p}/{q} is not in lowest terms")));
        }
        Ok(Flux { p, q })
    }

    pub fn value(&self) -> f64 {
        self.p as f64 / self.q as f64
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl FromStr for Flux {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("flux must look like p/q, got '{s}'"));
        match s.split_once('/') {
            Some((p, q)) => Flux::new(p.trim().parse().map_err(|_| bad())?, q.trim().parse().map_err(|_| bad())?),
            None if s.trim() == "0" => Flux::new(0, 1),
            None => Err(bad()),
        }
    }
}

impl fmt::Display for Flux {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeModel {
    pub size: usize,
    pub flux: Flux,
    pub boundary: Boundary,
}

impl LatticeModel {
    /// Requires `size >= 3q`; periodic boundaries also need `q | size` so the
    /// vertical phases close around the torus.
    pub fn new(size: usize, flux: Flux, boundary: Boundary) -> Result<Self> {
        let q = flux.q as usize;
        if size < 3 * q.max(1) {
            return Err(Error::InvalidParameter(format!("lattice size {size} is below 3q = {}", 3 * q)));
        }
        if boundary == Boundary::Periodic && !size.is_multiple_of(q) {
            return Err(Error::InvalidParameter(format!(
                "periodic lattice size {size} is not a multiple of the flux denominator {q}"
            )));
        }
        Ok(LatticeModel { size, flux, boundary })
    }

    pub fn sites(&self) -> usize {
        self.size * self.size
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec::lattice(self.size, self.boundary == Boundary::Periodic).expect("lattice sizes are valid")
    }

    /// Site `(x, y)` has index `x + size * y`.
    pub fn index(&self, x: usize, y: usize) -> usize {
        x + self.size * y
    }
}

/// Nearest-neighbour hopping `-1` with Peierls phase `e^{2 pi i (p/q) x}` on
/// vertical bonds `(x, y) -> (x, y + 1)`.
pub fn hofstadter_hamiltonian(model: &LatticeModel) -> Array2<Complex64> {
    let n = model.size;
    let alpha = model.flux.value();
    let periodic = model.boundary == Boundary::Periodic;
    let mut h = Array2::<Complex64>::zeros((model.sites(), model.sites()));
    let mut hop = |to: usize, from: usize, t: Complex64| {
        h[[to, from]] += t;
        h[[from, to]] += t.conj();
    };
    for y in 0..n {
        for x in 0..n {
            let here = model.index(x, y);
            if x + 1 < n || periodic {
                hop(model.index((x + 1) % n, y), here, Complex64::new(-1.0, 0.0));
            }
            if y + 1 < n || periodic {
                let phase = Complex64::from_polar(1.0, 2.0 * PI * alpha * x as f64);
                hop(model.index(x, (y + 1) % n), here, -phase);
            }
        }
    }
    h
}

/// Eigenpairs of a lattice Hamiltonian in increasing order.
#[derive(Debug, Clone)]
pub struct LatticeSpectrum {
    pub values: Vec<f64>,
    pub vectors: Array2<Complex64>,
}

impl LatticeSpectrum {
    pub fn new(h: &Array2<Complex64>) -> Result<Self> {
        let Spectrum { mut values, vectors } = hermitian_eigen(h)?;
        values.reverse();
        let order: Vec<usize> = (0..values.len()).rev().collect();
        Ok(LatticeSpectrum { values, vectors: vectors.select(Axis(1), &order) })
    }

    /// Window `(min - 1, midpoint of the gap after the lowest sites/q states)`.
    pub fn lowest_band_window(&self, flux: Flux) -> (f64, f64) {
        let count = (self.values.len() / flux.q as usize).clamp(1, self.values.len());
        let lo = self.values[0] - 1.0;
        let hi = if count == self.values.len() {
            self.values[count - 1] + 1.0
        } else {
            0.5 * (self.values[count - 1] + self.values[count])
        };
        (lo, hi)
    }

    /// Distance between the two eigenvalues adjacent to `energy`.
    pub fn gap_at(&self, energy: f64) -> f64 {
        let above = self.values.iter().find(|&&e| e > energy);
        let below = self.values.iter().rev().find(|&&e| e <= energy);
        match (below, above) {
            (Some(b), Some(a)) => a - b,
            _ => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    Range { lo: f64, hi: f64 },
    AutoLowest,
}

impl FromStr for Window {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "auto-lowest" {
            return Ok(Window::AutoLowest);
        }
        let bad = || Error::InvalidParameter(format!("window must be 'auto-lowest' or 'lo,hi', got '{s}'"));
        let (lo, hi) = s.split_once(',').ok_or_else(bad)?;
        let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
        if !(lo < hi) {
            return Err(bad());
        }
        Ok(Window::Range { lo, hi })
    }
}

/// Default distance an eigenvalue must keep from either window edge.
pub const DEFAULT_GAP_MARGIN: f64 = 1e-6;

/// `P = sum_{lo < e < hi} v v^*` as a kernel on the lattice grid.
pub fn spectral_projection(
    spectrum: &LatticeSpectrum,
    grid: GridSpec,
    lo: f64,
    hi: f64,
    margin: f64,
) -> Result<KernelProjection> {
    if spectrum.values.len() != grid.len() {
        return Err(Error::DimensionMismatch { expected: grid.len(), found: spectrum.values.len() });
    }
    for &e in &spectrum.values {
        for edge in [lo, hi] {
            if (e - edge).abs() < margin {
                return Err(Error::WindowTouchesSpectrum { eigenvalue: e, edge, margin });
            }
        }
    }
    let keep: Vec<usize> =
        (0..spectrum.values.len()).filter(|&i| spectrum.values[i] > lo && spectrum.values[i] < hi).collect();
    let v = spectrum.vectors.select(Axis(1), &keep);
    let kernel = v.dot(&v.t().mapv(|c| c.conj())).mapv(|c| c / grid.weight());
    KernelProjection::new(kernel, grid)
}

/// Resolves the window and builds the projection for `model`.
pub fn model_projection(
    model: &LatticeModel,
    spectrum: &LatticeSpectrum,
    window: Window,
    margin: f64,
) -> Result<(KernelProjection, (f64, f64))> {
    let (lo, hi) = match window {
        Window::Range { lo, hi } => (lo, hi),
        Window::AutoLowest => spectrum.lowest_band_window(model.flux),
    };
    Ok((spectral_projection(spectrum, model.grid(), lo, hi, margin)?, (lo, hi)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    /// `exp(intercept)` of the fitted line.
    pub c_fit: f64,
    /// Smallest `C` with `|P(x, y)| <= C e^{-beta |x - y|}` on every entry.
    pub c_envelope: f64,
    /// `f64::INFINITY` when every off-diagonal entry vanishes.
    pub beta: f64,
    pub r_squared: f64,
    pub bins: usize,
    /// All off-diagonal entries vanish; `beta` is the infinite sentinel.
    pub trivially_local: bool,
    /// `beta > 0` with `r_squared >= 0.95`.
    pub certified: bool,
}

impl DecayFit {
    pub fn decay(&self) -> Option<Decay> {
        (self.beta.is_finite() && self.beta > 0.0).then_some(Decay { c: self.c_envelope, beta: self.beta })
    }
}

/// Minimum coefficient of determination for a certified fit.
pub const MIN_R_SQUARED: f64 = 0.95;
const ZERO_ENTRY: f64 = 1e-300;

/// Least-squares fit of `ln g(d)` against `d` for `d` in `[2h, (n/4) h]`,
/// where `g(d)` is the largest `|P(x, y)|` over pairs at binned distance at
/// least `d` (bins of width `h`). Open grids only use pairs inside the
/// central half of the box; periodic grids use wrapped distances.
pub fn kernel_decay_fit(p: &KernelProjection) -> Result<DecayFit> {
    let grid = *p.grid();
    let k = p.kernel();
    let n = grid.len();
    let h = grid.spacing();
    let axis = grid.points_per_axis;
    let bulk: Vec<usize> = if grid.periodic {
        (0..n).collect()
    } else {
        (0..n)
            .filter(|&i| grid.axis_indices(i)[..grid.dim].iter().all(|&a| 4 * a >= axis && 4 * a < 3 * axis))
            .collect()
    };

    let off_max = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .fold(0.0_f64, |m, (i, j)| m.max(k[[i, j]].norm()));
    if off_max <= ZERO_ENTRY {
        return Ok(DecayFit {
            c_fit: 0.0,
            c_envelope: (0..n).map(|i| k[[i, i]].norm()).fold(0.0, f64::max),
            beta: f64::INFINITY,
            r_squared: 1.0,
            bins: 0,
            trivially_local: true,
            certified: true,
        });
    }

    // monotone envelope: largest entry at binned distance >= d
    let lo_bin = 2usize;
    let hi_bin = axis / 4;
    let far = bulk
        .iter()
        .flat_map(|&i| bulk.iter().map(move |&j| (i, j)))
        .fold(0.0_f64, |m, (i, j)| m.max(grid.distance(i, j)));
    let mut best = vec![0.0_f64; (far / h).round() as usize + 2];
    for &i in &bulk {
        for &j in &bulk {
            let b = (grid.distance(i, j) / h).round() as usize;
            best[b] = best[b].max(k[[i, j]].norm());
        }
    }
    for b in (0..best.len() - 1).rev() {
        best[b] = best[b].max(best[b + 1]);
    }
    let pts: Vec<(f64, f64)> = (lo_bin..=hi_bin.min(best.len() - 1))
        .filter(|&b| best[b] > ZERO_ENTRY)
        .map(|b| (b as f64 * h, best[b].ln()))
        .collect();
    if pts.len() < 4 {
        return Err(Error::DegenerateFit { bins: pts.len() });
    }
    let line = linear_fit(&pts);
    let beta = -line.slope;
    let mut c_envelope = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            c_envelope = c_envelope.max(k[[i, j]].norm() * (beta * grid.distance(i, j)).exp());
        }
    }
    Ok(DecayFit {
        c_fit: line.intercept.exp(),
        c_envelope,
        beta,
        r_squared: line.r_squared,
        bins: pts.len(),
        trivially_local: false,
        certified: beta > 0.0 && line.r_squared >= MIN_R_SQUARED,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y = intercept + slope x`.
pub fn linear_fit(pts: &[(f64, f64)]) -> LineFit {
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let r_squared = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    LineFit { slope, intercept, r_squared }
}

/// Site-resolved `c(x) = -4 pi Im <x| P X P Y P |x>` with `X`, `Y` the
/// lattice coordinates measured from the centre.
pub fn chern_marker(p: &KernelProjection) -> Result<Vec<f64>> {
    let grid = p.grid();
    if grid.periodic {
        return Err(Error::InvalidParameter("the local marker needs open boundaries".into()));
    }
    if grid.dim != 2 {
        return Err(Error::InvalidParameter("the local marker is defined on 2D lattices".into()));
    }
    let n = grid.len();
    let pu = p.unitary_matrix();
    let xs: Vec<f64> = (0..n).map(|i| grid.coords(i)[0]).collect();
    let ys: Vec<f64> = (0..n).map(|i| grid.coords(i)[1]).collect();
    let mut xp = pu.clone();
    for (mut row, &x) in xp.axis_iter_mut(Axis(0)).zip(&xs) {
        row.mapv_inplace(|c| c * x);
    }
    let pxp = pu.dot(&xp);
    Ok((0..n)
        .map(|i| {
            let s: Complex64 = (0..n).map(|j| pxp[[i, j]] * ys[j] * pu[[j, i]]).sum();
            -4.0 * PI * s.im
        })
        .collect())
}

/// Mean of a site field over the central `size/3 x size/3` block.
pub fn bulk_average(field: &[f64], size: usize) -> f64 {
    let lo = size / 3;
    let hi = 2 * size / 3;
    let mut sum = 0.0;
    let mut count = 0usize;
    for y in lo..hi {
        for x in lo..hi {
            sum += field[x + size * y];
            count += 1;
        }
    }
    sum / count as f64
}
