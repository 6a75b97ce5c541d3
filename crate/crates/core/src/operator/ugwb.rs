//! Assembly and diagonalization of `W_f = P f(X) P`, and the resulting
//! radially localized basis.
//!
//! All matrices here act on coefficient vectors `u_i = sqrt(weight) psi(x_i)`,
//! i.e. in the orthonormal basis of normalized cell indicators; basis vectors
//! stored in [`Ugwb`] are converted back to function samples `psi(x_i)`.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use num_complex::Complex64;
use serde::Serialize;

use super::grid::GridSpec;
use super::kernel::KernelProjection;
use super::localization::LocalizationFunction;
use crate::error::{Error, Result};
use crate::landau::radius_from_lambda;
use crate::linalg::{adjoint, hermitian_eigen, hermitize, pivoted_cholesky, thin_qr, Spectrum};
use crate::special_functions::jbracket;

/// Matrix of `W_f` for `f` sampled on the grid: `(w K) diag(f) (w K)`.
pub fn assemble_wf(p: &KernelProjection, f: &[f64]) -> Result<Array2<Complex64>> {
    check_weight(p.grid(), f)?;
    let kt = p.unitary_matrix();
    let mut fk = kt.clone();
    for (mut row, &fm) in fk.axis_iter_mut(Axis(0)).zip(f) {
        row.mapv_inplace(|c| c * fm);
    }
    let mut w = kt.dot(&fk);
    hermitize(&mut w);
    Ok(w)
}

fn check_weight(grid: &GridSpec, f: &[f64]) -> Result<()> {
    if f.len() != grid.len() {
        return Err(Error::DimensionMismatch { expected: grid.len(), found: f.len() });
    }
    if let Some(bad) = f.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::InvalidParameter(format!("f must be positive and bounded on the grid, found {bad}")));
    }
    Ok(())
}

/// Full spectrum, sorted decreasingly.
pub fn eigendecompose(w: &Array2<Complex64>) -> Result<Spectrum> {
    hermitian_eigen(w)
}

/// A group of (numerically) equal eigenvalues; `vectors` are columns in
/// whatever coordinates the spectrum was computed in.
#[derive(Debug, Clone)]
pub struct Level {
    pub lambda: f64,
    pub vectors: Array2<Complex64>,
}

/// Merges consecutive eigenvalues with `|l_a - l_b| <= rel_tol * l_a` and
/// discards everything at or below `floor`.
pub fn group_degeneracies(spectrum: &Spectrum, rel_tol: f64, floor: f64) -> Vec<Level> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut prev: Option<f64> = None;
    for (i, &v) in spectrum.values.iter().enumerate() {
        if v <= floor {
            break;
        }
        match (prev, groups.last_mut()) {
            (Some(p), Some(g)) if (p - v).abs() <= rel_tol * p => g.push(i),
            _ => groups.push(vec![i]),
        }
        prev = Some(v);
    }
    groups
        .into_iter()
        .map(|idx| Level {
            lambda: idx.iter().map(|&i| spectrum.values[i]).sum::<f64>() / idx.len() as f64,
            vectors: spectrum.vectors.select(Axis(1), &idx),
        })
        .collect()
}

/// `sum_i e^{q |<x_i> - <r>|} |psi_i|^2 * weight`.
pub fn localization_integral(psi: ArrayView1<Complex64>, r: f64, q: f64, grid: &GridSpec) -> f64 {
    let jr = jbracket(&[r]);
    let w = grid.weight();
    psi.iter()
        .enumerate()
        .map(|(i, c)| {
            let jx = jbracket(&grid.coords(i)[..grid.dim]);
            (q * (jx - jr).abs()).exp() * c.norm_sqr()
        })
        .sum::<f64>()
        * w
}

/// `sum_i e^{q (<r> - <x_i>)} |psi_i|^2 * weight`, which equals one for an
/// eigenvector of `P e^{-q<X>} P` lying in the range of `P`.
pub fn normalization_integral(psi: ArrayView1<Complex64>, r: f64, q: f64, grid: &GridSpec) -> f64 {
    let jr = jbracket(&[r]);
    let w = grid.weight();
    psi.iter()
        .enumerate()
        .map(|(i, c)| (q * (jr - jbracket(&grid.coords(i)[..grid.dim]))).exp() * c.norm_sqr())
        .sum::<f64>()
        * w
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct HsBound {
    /// `||G(|X|) P f(X)||_HS^2` on the grid.
    pub hs_norm_sq: f64,
    /// `hs_norm_sq + 1`.
    pub m_bound: f64,
    /// The weighted kernel does not decay across the box.
    pub overflow: bool,
}

/// Grid Hilbert-Schmidt norm of the kernel `G(|x|) P(x, y) f(y)` plus one.
///
/// The overflow flag compares the largest weighted entry among pairs in the
/// outer half of the distance range with the largest among the inner half:
/// if `G` outgrows the decay of the kernel the outer pairs dominate.
pub fn hs_bound(p: &KernelProjection, f: &[f64], g: &LocalizationFunction) -> Result<HsBound> {
    let grid = p.grid();
    check_weight(grid, f)?;
    let n = grid.len();
    let h = grid.spacing();
    let gx: Vec<f64> = (0..n).map(|i| g.eval(norm(&grid.coords(i)[..grid.dim]))).collect();
    let k = p.kernel();
    let max_dist = if grid.periodic {
        grid.half_width * (grid.dim as f64).sqrt()
    } else {
        2.0 * grid.half_width * (grid.dim as f64).sqrt()
    };
    let bins = (max_dist / h).ceil() as usize + 1;
    let mut shell_max = vec![0.0_f64; bins];
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            let v = gx[i] * k[[i, j]].norm() * f[j];
            sum += v * v;
            let b = ((grid.distance(i, j) / h).round() as usize).min(bins - 1);
            if v > shell_max[b] {
                shell_max[b] = v;
            }
        }
    }
    let hs_norm_sq = sum * grid.weight() * grid.weight();
    let half = bins / 2;
    let inner = shell_max[..half].iter().cloned().fold(0.0, f64::max);
    let outer = shell_max[half..].iter().cloned().fold(0.0, f64::max);
    let overflow = !hs_norm_sq.is_finite() || (outer > 0.0 && outer >= inner);
    Ok(HsBound { hs_norm_sq, m_bound: hs_norm_sq + 1.0, overflow })
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenStrategy {
    /// Dense up to `dense_limit` grid points, range-compressed beyond.
    Auto,
    /// Full `N x N` assembly and eigendecomposition.
    Dense,
    /// Work in an orthonormal basis of the numerical range of `P`.
    RangeCompressed,
}

#[derive(Debug, Clone, Copy)]
pub struct UgwbOptions {
    pub rel_tol: f64,
    /// Levels at or below `floor_rel * lambda_max` are dropped.
    pub floor_rel: f64,
    pub strategy: EigenStrategy,
    pub dense_limit: usize,
    /// Replace the grid operator by its spectral projector onto eigenvalues
    /// above one half before assembling `W_f`.
    pub purify: bool,
    /// Relative stopping threshold of the pivoted Cholesky range finder.
    pub range_tol: f64,
}

impl Default for UgwbOptions {
    fn default() -> Self {
        UgwbOptions {
            rel_tol: 1e-6,
            floor_rel: 1e-12,
            strategy: EigenStrategy::Auto,
            dense_limit: 1024,
            purify: true,
            range_tol: 1e-13,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FKind {
    /// `f(x) = e^{-q <x>}`.
    ExpJapanese { q: f64 },
}

#[derive(Debug, Clone)]
pub struct UgwbLevel {
    pub lambda: f64,
    pub radius: f64,
    /// `lambda > e^{-q}` forced the radius to zero.
    pub radius_clamped: bool,
    /// Orthonormal (grid inner product) function samples, one column per vector.
    pub vectors: Array2<Complex64>,
}

impl UgwbLevel {
    pub fn multiplicity(&self) -> usize {
        self.vectors.ncols()
    }
}

/// Eigen-apparatus of `P e^{-q<X>} P` on a grid.
#[derive(Debug, Clone)]
pub struct Ugwb {
    pub levels: Vec<UgwbLevel>,
    pub m_bound: f64,
    pub hs_norm_sq: f64,
    pub hs_overflow: bool,
    pub q: f64,
    pub f_kind: FKind,
    pub grid: GridSpec,
    pub strategy: EigenStrategy,
    /// Dimension of the range used (after purification when enabled).
    pub range_rank: usize,
    /// Largest `min(s, 1 - s)` over eigenvalues `s` of the grid operator
    /// inside the computed range: zero for an exact projection.
    pub projection_defect: f64,
    /// `Some(false)` if the kernel carries a fitted decay rate below `1.5 q`.
    pub beta_margin_ok: Option<bool>,
}

/// Smallest ratio `beta / q` accepted as a safe margin above `q`.
pub const BETA_MARGIN: f64 = 1.5;

/// Builds the basis for `f(x) = e^{-q <x>}`.
pub fn build_ugwb(p: &KernelProjection, q: f64, opts: &UgwbOptions) -> Result<Ugwb> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::InvalidParameter(format!("q must be positive, got {q}")));
    }
    let grid = *p.grid();
    let n = grid.len();
    let w = grid.weight();
    let f = grid.sample(|x| (-q * jbracket(x)).exp());
    let gq = grid.sample(|x| (q * jbracket(x)).exp());

    let strategy = match opts.strategy {
        EigenStrategy::Auto if n <= opts.dense_limit => EigenStrategy::Dense,
        EigenStrategy::Auto => EigenStrategy::RangeCompressed,
        s => s,
    };

    let (spectrum, range_rank, projection_defect, hs_norm_sq) = if opts.purify {
        // orthonormal basis of the spectral subspace of the grid operator for
        // eigenvalues above one half, and W_f compressed to it
        let (basis, rank, defect) = match strategy {
            EigenStrategy::Dense => {
                let ks = hermitian_eigen(&p.unitary_matrix())?;
                let keep: Vec<usize> = (0..ks.len()).filter(|&i| ks.values[i] > 0.5).collect();
                (ks.vectors.select(Axis(1), &keep), keep.len(), defect_of(&ks.values))
            }
            _ => {
                let (qm, r) = range_factor(p, opts.range_tol)?;
                let mut s = r.dot(&adjoint(&r));
                hermitize(&mut s);
                let ss = hermitian_eigen(&s)?;
                let keep: Vec<usize> = (0..ss.len()).filter(|&i| ss.values[i] > 0.5).collect();
                (qm.dot(&ss.vectors.select(Axis(1), &keep)), keep.len(), defect_of(&ss.values))
            }
        };
        let spec = hermitian_eigen(&compress(&basis, &basis, &f))?;
        let vectors = basis.dot(&spec.vectors);
        let hs = low_rank_hs(&basis, &f, &gq);
        (Spectrum { values: spec.values, vectors }, rank, defect, hs)
    } else {
        let hs = hs_bound(p, &f, &LocalizationFunction::exp_japanese(q))?.hs_norm_sq;
        match strategy {
            EigenStrategy::Dense => {
                let ks = hermitian_eigen(&p.unitary_matrix())?;
                let rank = ks.values.iter().filter(|&&s| s > 0.5).count();
                (eigendecompose(&assemble_wf(p, &f)?)?, rank, defect_of(&ks.values), hs)
            }
            _ => {
                // W = L (L^H F L) L^H = Q [R (L^H F L) R^H] Q^H
                let (qm, r) = range_factor(p, opts.range_tol)?;
                let l = qm.dot(&r);
                let mut b = r.dot(&compress(&l, &l, &f)).dot(&adjoint(&r));
                hermitize(&mut b);
                let spec = hermitian_eigen(&b)?;
                let mut s = r.dot(&adjoint(&r));
                hermitize(&mut s);
                let ss = hermitian_eigen(&s)?;
                let rank = ss.values.iter().filter(|&&s| s > 0.5).count();
                (Spectrum { values: spec.values, vectors: qm.dot(&spec.vectors) }, rank, defect_of(&ss.values), hs)
            }
        }
    };

    let lambda_max = spectrum.values.first().copied().unwrap_or(0.0);
    let floor = opts.floor_rel * lambda_max.max(0.0);
    let groups = if lambda_max > 0.0 { group_degeneracies(&spectrum, opts.rel_tol, floor) } else { vec![] };
    let inv_sw = 1.0 / w.sqrt();
    let mut levels = Vec::with_capacity(groups.len());
    for g in groups {
        let lambda = g.lambda.min(1.0 - f64::EPSILON);
        let radius = radius_from_lambda(lambda, q)?;
        levels.push(UgwbLevel {
            lambda: g.lambda,
            radius: radius.value,
            radius_clamped: radius.clamped,
            vectors: g.vectors.mapv(|c| c * inv_sw),
        });
    }

    let hs_overflow =
        if n <= 16_384 { hs_bound(p, &f, &LocalizationFunction::exp_japanese(q))?.overflow } else { false };
    Ok(Ugwb {
        levels,
        m_bound: hs_norm_sq + 1.0,
        hs_norm_sq,
        hs_overflow,
        q,
        f_kind: FKind::ExpJapanese { q },
        grid,
        strategy,
        range_rank,
        projection_defect,
        beta_margin_ok: p.decay.map(|d| d.beta >= BETA_MARGIN * q),
    })
}

// thin QR of the scaled pivoted Cholesky factor: w K ~ Q R R^H Q^H
fn range_factor(p: &KernelProjection, tol: f64) -> Result<(Array2<Complex64>, Array2<Complex64>)> {
    let mut l = pivoted_cholesky(p.kernel(), tol)?;
    let sw = p.grid().weight().sqrt();
    l.mapv_inplace(|c| c * sw);
    Ok(thin_qr(&l))
}

fn defect_of(values: &[f64]) -> f64 {
    values.iter().map(|&s| s.min(1.0 - s).max(0.0)).fold(0.0, f64::max)
}

// A^H diag(f) B
fn compress(a: &Array2<Complex64>, b: &Array2<Complex64>, f: &[f64]) -> Array2<Complex64> {
    let mut fb = b.clone();
    for (mut row, &fm) in fb.axis_iter_mut(Axis(0)).zip(f) {
        row.mapv_inplace(|c| c * fm);
    }
    let mut c = adjoint(a).dot(&fb);
    hermitize(&mut c);
    c
}

// ||G P f||_HS^2 for P = V V^H (unitary coordinates):
// sum_j f_j^2 (P G^2 P)_jj = sum_j f_j^2 v_j (V^H G^2 V) v_j^H with v_j the j-th row of V.
fn low_rank_hs(v: &Array2<Complex64>, f: &[f64], g: &[f64]) -> f64 {
    let g2: Vec<f64> = g.iter().map(|x| x * x).collect();
    let m = compress(v, v, &g2);
    let mut total = 0.0;
    for (row, &fj) in v.axis_iter(Axis(0)).zip(f) {
        let mv = m.dot(&row.mapv(|c| c.conj()));
        let quad: Complex64 = row.iter().zip(mv.iter()).map(|(a, b)| a * b).sum();
        total += fj * fj * quad.re;
    }
    total
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelCheck {
    pub lambda: f64,
    pub multiplicity: usize,
    pub radius: f64,
    pub radius_clamped: bool,
    pub max_localization_integral: f64,
    /// `lambda ||G psi|| / ||G P f||_HS` maximized over the level; at most one.
    pub g_localization_ratio: f64,
    pub max_normalization_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct UgwbReport {
    pub levels: Vec<LevelCheck>,
    pub strictly_decreasing: bool,
    pub max_orthonormality_error: f64,
    pub max_localization_integral: f64,
    pub m_bound: f64,
    pub localization_bound_holds: bool,
    pub max_g_localization_ratio: f64,
    pub g_localization_holds: bool,
    pub clamped_levels: usize,
    pub passed: bool,
}

impl Ugwb {
    pub fn radii(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.radius).collect()
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.lambda).collect()
    }

    pub fn max_multiplicity(&self) -> usize {
        self.levels.iter().map(UgwbLevel::multiplicity).max().unwrap_or(0)
    }

    pub fn total_vectors(&self) -> usize {
        self.levels.iter().map(UgwbLevel::multiplicity).sum()
    }

    /// Evaluates every structural invariant of the basis.
    pub fn check(&self) -> UgwbReport {
        let grid = &self.grid;
        let w = grid.weight();
        let q = self.q;
        let hs_norm = self.hs_norm_sq.sqrt();
        let gq: Array1<f64> = Array1::from(grid.sample(|x| (q * jbracket(x)).exp()));

        let strictly_decreasing = self.levels.windows(2).all(|p| p[0].lambda > p[1].lambda);
        let mut max_ortho = 0.0_f64;
        let mut checks = Vec::with_capacity(self.levels.len());
        for level in &self.levels {
            let v = &level.vectors;
            let gram = adjoint(v).dot(v).mapv(|c| c * w);
            for ((i, j), c) in gram.indexed_iter() {
                let target = if i == j { 1.0 } else { 0.0 };
                max_ortho = max_ortho.max((c - target).norm());
            }
            let mut max_loc = 0.0_f64;
            let mut max_g = 0.0_f64;
            let mut max_norm_res = 0.0_f64;
            for col in v.axis_iter(Axis(1)) {
                max_loc = max_loc.max(localization_integral(col, level.radius, q, grid));
                max_norm_res = max_norm_res.max((normalization_integral(col, level.radius, q, grid) - 1.0).abs());
                let g_norm = (col.iter().zip(gq.iter()).map(|(c, g)| c.norm_sqr() * g * g).sum::<f64>() * w).sqrt();
                max_g = max_g.max(level.lambda * g_norm / hs_norm);
            }
            checks.push(LevelCheck {
                lambda: level.lambda,
                multiplicity: level.multiplicity(),
                radius: level.radius,
                radius_clamped: level.radius_clamped,
                max_localization_integral: max_loc,
                g_localization_ratio: max_g,
                max_normalization_residual: max_norm_res,
            });
        }
        let max_loc = checks.iter().map(|c| c.max_localization_integral).fold(0.0, f64::max);
        let max_g = checks.iter().map(|c| c.g_localization_ratio).fold(0.0, f64::max);
        let localization_bound_holds = max_loc <= self.m_bound;
        let g_localization_holds = max_g <= 1.0;
        UgwbReport {
            strictly_decreasing,
            max_orthonormality_error: max_ortho,
            max_localization_integral: max_loc,
            m_bound: self.m_bound,
            localization_bound_holds,
            max_g_localization_ratio: max_g,
            g_localization_holds,
            clamped_levels: checks.iter().filter(|c| c.radius_clamped).count(),
            passed: strictly_decreasing && max_ortho <= 1e-8 && localization_bound_holds && g_localization_holds,
            levels: checks,
        }
    }
}
