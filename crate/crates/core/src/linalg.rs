//! Dense Hermitian eigensolver and the low-rank helpers used to compress a
//! projection onto its range.
//!
//! The eigensolver reduces a Hermitian matrix to real symmetric tridiagonal
//! form with Householder reflections (the complex off-diagonal phases are
//! absorbed into a diagonal unitary), runs implicit QL with Wilkinson shifts
//! on the tridiagonal matrix, and back-transforms the eigenvectors.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Eigenvalues sorted decreasingly with eigenvectors as matching columns.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: Array2<Complex64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn is_square(a: &ArrayView2<Complex64>) -> Result<usize> {
    let (n, m) = a.dim();
    if n != m {
        return Err(Error::DimensionMismatch { expected: n, found: m });
    }
    Ok(n)
}

/// Full eigendecomposition of a Hermitian matrix. Only the lower triangle is read.
pub fn hermitian_eigen(a: &Array2<Complex64>) -> Result<Spectrum> {
    let n = is_square(&a.view())?;
    if n == 0 {
        return Ok(Spectrum { values: vec![], vectors: Array2::zeros((0, 0)) });
    }
    let mut work = a.clone();
    // mirror the lower triangle so the reduction sees an exactly Hermitian matrix
    for i in 0..n {
        work[[i, i]] = Complex64::new(work[[i, i]].re, 0.0);
        for j in 0..i {
            work[[j, i]] = work[[i, j]].conj();
        }
    }
    let (diag, offdiag, reflectors) = tridiagonalize(&mut work);

    // T = D T_r D^H with T_r having real non-negative off-diagonals
    let mut phases = vec![Complex64::new(1.0, 0.0); n];
    let mut e = vec![0.0; n];
    for k in 0..n.saturating_sub(1) {
        let alpha = offdiag[k];
        let mag = alpha.norm();
        e[k + 1] = mag;
        phases[k + 1] = if mag > 0.0 { phases[k] * (alpha / mag) } else { phases[k] };
    }
    let mut d = diag;
    let mut zt = Array2::<f64>::eye(n);
    tql2(&mut d, &mut e, &mut zt)?;

    // V = Q D Z
    let mut v = Array2::<Complex64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            v[[i, j]] = phases[i] * zt[[j, i]];
        }
    }
    apply_reflectors(&reflectors, &mut v);

    let mut order: Vec<usize> = (0..n).collect();
    // stable sort keeps solver order for exact ties
    order.sort_by(|&a, &b| d[b].partial_cmp(&d[a]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| d[i]).collect();
    let vectors = v.select(Axis(1), &order);
    Ok(Spectrum { values, vectors })
}

type Reflector = Option<Array1<Complex64>>;

const REFLECTOR_BLOCK: usize = 32;

// v <- H_0 H_1 ... H_{n-2} v, where H_k = I - 2 u_k u_k^H acts on rows k+1..,
// in blocks of the compact WY form H_s ... H_e = I - U T U^H.
fn apply_reflectors(reflectors: &[Reflector], v: &mut Array2<Complex64>) {
    let n = v.nrows();
    let mut end = reflectors.len();
    while end > 0 {
        let start = end.saturating_sub(REFLECTOR_BLOCK);
        let nb = end - start;
        let row0 = start + 1;
        let mut u = Array2::<Complex64>::zeros((n - row0, nb));
        let mut tau = vec![0.0; nb];
        for (c, k) in (start..end).enumerate() {
            if let Some(r) = &reflectors[k] {
                u.slice_mut(s![k - start.., c]).assign(r);
                tau[c] = 2.0;
            }
        }
        let uh = adjoint(&u);
        let g = uh.dot(&u);
        let mut t = Array2::<Complex64>::zeros((nb, nb));
        for j in 0..nb {
            t[[j, j]] = Complex64::new(tau[j], 0.0);
            for i in 0..j {
                let acc: Complex64 = (i..j).map(|l| t[[i, l]] * g[[l, j]]).sum();
                t[[i, j]] = -acc * tau[j];
            }
        }
        let mut block = v.slice_mut(s![row0.., ..]);
        let upd = u.dot(&t.dot(&uh.dot(&block)));
        block -= &upd;
        end = start;
    }
}

// Householder reduction of a full Hermitian matrix. Returns the real diagonal,
// the complex subdiagonal T[k+1, k], and the unit reflectors u_k acting on
// indices k+1.. (H_k = I - 2 u u^H).
fn tridiagonalize(a: &mut Array2<Complex64>) -> (Vec<f64>, Vec<Complex64>, Vec<Reflector>) {
    debug_assert!(a.is_standard_layout());
    let n = a.nrows();
    let mut offdiag = vec![ZERO; n.saturating_sub(1)];
    let mut reflectors: Vec<Reflector> = Vec::with_capacity(n.saturating_sub(1));
    for k in 0..n.saturating_sub(1) {
        let x = a.slice(s![k + 1.., k]).to_owned();
        let xnorm = x.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let tail_norm = x.iter().skip(1).map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 || tail_norm == 0.0 {
            offdiag[k] = x[0];
            reflectors.push(None);
            continue;
        }
        let x0 = x[0];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { Complex64::new(1.0, 0.0) };
        let alpha = -phase * xnorm;
        let mut u = x;
        u[0] -= alpha;
        let unorm = u.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        u.mapv_inplace(|c| c / unorm);

        // trailing block update on the lower triangle only:
        // A <- A - 2 u w^H - 2 w u^H, w = p - kappa u, p = A u
        let m = n - k - 1;
        let mut p = vec![ZERO; m];
        {
            let block = a.slice(s![k + 1.., k + 1..]);
            for i in 0..m {
                let row = block.row(i);
                let row = row.as_slice().expect("contiguous row");
                let ui = u[i];
                let mut acc = row[i] * ui;
                for j in 0..i {
                    acc += row[j] * u[j];
                    p[j] += row[j].conj() * ui;
                }
                p[i] += acc;
            }
        }
        let kappa: f64 = u.iter().zip(p.iter()).map(|(ui, pi)| (ui.conj() * pi).re).sum();
        let w: Vec<Complex64> = p.iter().zip(u.iter()).map(|(pi, ui)| pi - ui * kappa).collect();
        let wc: Vec<Complex64> = w.iter().map(|c| c.conj() * 2.0).collect();
        let uc: Vec<Complex64> = u.iter().map(|c| c.conj() * 2.0).collect();
        {
            let mut block = a.slice_mut(s![k + 1.., k + 1..]);
            for i in 0..m {
                let (ui, wi) = (u[i], w[i]);
                let mut row = block.row_mut(i);
                for ((aij, wj), uj) in row.iter_mut().take(i + 1).zip(&wc).zip(&uc) {
                    *aij -= ui * wj + wi * uj;
                }
            }
        }
        offdiag[k] = alpha;
        a[[k + 1, k]] = alpha;
        a[[k, k + 1]] = alpha.conj();
        for i in k + 2..n {
            a[[i, k]] = ZERO;
            a[[k, i]] = ZERO;
        }
        reflectors.push(Some(u));
    }
    let diag = (0..n).map(|i| a[[i, i]].re).collect();
    (diag, offdiag, reflectors)
}

// Implicit QL with Wilkinson shifts for a real symmetric tridiagonal matrix
// (diagonal d, subdiagonal e[1..]). Accumulates rotations into the rows of
// zt, so row i of zt ends up holding eigenvector i.
fn tql2(d: &mut [f64], e: &mut [f64], zt: &mut Array2<f64>) -> Result<()> {
    let n = d.len();
    if n == 1 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1 = 0.0_f64;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m == n {
            m = n - 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 60 {
                    return Err(Error::EigenNonConvergence { index: l });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    let flat = zt.as_slice_mut().expect("standard layout");
                    let (head, tail) = flat.split_at_mut((i + 1) * n);
                    let row_i = &mut head[i * n..];
                    let row_i1 = &mut tail[..n];
                    for (zk, zk1) in row_i.iter_mut().zip(row_i1.iter_mut()) {
                        let (a, b) = (*zk, *zk1);
                        *zk1 = s * a + c * b;
                        *zk = c * a - s * b;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Pivoted (partial) Cholesky of a Hermitian positive semidefinite matrix:
/// returns `L` (n x r) with `A ~ L L^H`, stopping once the largest remaining
/// diagonal entry falls below `rel_tol * max(diag A)`.
pub fn pivoted_cholesky(a: &Array2<Complex64>, rel_tol: f64) -> Result<Array2<Complex64>> {
    let n = is_square(&a.view())?;
    let mut resid: Vec<f64> = (0..n).map(|i| a[[i, i]].re).collect();
    let max_diag = resid.iter().cloned().fold(0.0_f64, f64::max);
    let mut cols: Vec<Array1<Complex64>> = Vec::new();
    if max_diag <= 0.0 {
        return Ok(Array2::zeros((n, 0)));
    }
    let stop = rel_tol * max_diag;
    let mut used = vec![false; n];
    loop {
        let (piv, &dmax) = resid
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .max_by(|x, y| x.1.partial_cmp(y.1).unwrap_or(std::cmp::Ordering::Equal))
            .unwrap_or((0, &0.0));
        if dmax <= stop || cols.len() == n {
            break;
        }
        used[piv] = true;
        let mut col: Array1<Complex64> = a.column(piv).to_owned();
        for prev in &cols {
            let c = prev[piv].conj();
            col.zip_mut_with(prev, |x, &y| *x -= y * c);
        }
        let root = dmax.sqrt();
        col.mapv_inplace(|x| x / root);
        for (r, x) in resid.iter_mut().zip(col.iter()) {
            *r -= x.norm_sqr();
        }
        resid[piv] = 0.0;
        cols.push(col);
    }
    let mut l = Array2::<Complex64>::zeros((n, cols.len()));
    for (j, c) in cols.iter().enumerate() {
        l.column_mut(j).assign(c);
    }
    Ok(l)
}

/// Thin QR by Householder reflections: returns `(Q, R)` with `Q` (n x r)
/// having orthonormal columns and `R` (r x r) upper triangular.
pub fn thin_qr(a: &Array2<Complex64>) -> (Array2<Complex64>, Array2<Complex64>) {
    let (n, r) = a.dim();
    let mut work = a.clone();
    let mut reflectors: Vec<Option<Array1<Complex64>>> = Vec::with_capacity(r);
    for k in 0..r.min(n) {
        let x = work.slice(s![k.., k]).to_owned();
        let xnorm = x.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            reflectors.push(None);
            continue;
        }
        let x0 = x[0];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { Complex64::new(1.0, 0.0) };
        let alpha = -phase * xnorm;
        let mut u = x;
        u[0] -= alpha;
        let unorm = u.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if unorm == 0.0 {
            reflectors.push(None);
            continue;
        }
        u.mapv_inplace(|c| c / unorm);
        apply_reflector(&mut work.slice_mut(s![k.., k..]), &u);
        reflectors.push(Some(u));
    }
    let mut rmat = Array2::<Complex64>::zeros((r, r));
    for i in 0..r.min(n) {
        for j in i..r {
            rmat[[i, j]] = work[[i, j]];
        }
    }
    let mut q = Array2::<Complex64>::zeros((n, r));
    for i in 0..r.min(n) {
        q[[i, i]] = Complex64::new(1.0, 0.0);
    }
    for (k, refl) in reflectors.iter().enumerate().rev() {
        if let Some(u) = refl {
            apply_reflector(&mut q.slice_mut(s![k.., ..]), u);
        }
    }
    (q, rmat)
}

fn apply_reflector(block: &mut ndarray::ArrayViewMut2<Complex64>, u: &Array1<Complex64>) {
    let cols = block.ncols();
    let mut proj = vec![ZERO; cols];
    for (i, ui) in u.iter().enumerate() {
        let uc = ui.conj();
        for (p, x) in proj.iter_mut().zip(block.row(i).iter()) {
            *p += uc * x;
        }
    }
    for (i, ui) in u.iter().enumerate() {
        let coef = *ui * 2.0;
        for (x, p) in block.row_mut(i).iter_mut().zip(proj.iter()) {
            *x -= coef * p;
        }
    }
}

/// Conjugate transpose.
pub fn adjoint(a: &Array2<Complex64>) -> Array2<Complex64> {
    a.t().mapv(|c| c.conj())
}

/// Replaces `a` by `(a + a^H) / 2`, which is exactly Hermitian in floating point.
pub fn hermitize(a: &mut Array2<Complex64>) {
    let n = a.nrows();
    for i in 0..n {
        a[[i, i]] = Complex64::new(a[[i, i]].re, 0.0);
        for j in 0..i {
            let v = (a[[i, j]] + a[[j, i]].conj()) * 0.5;
            a[[i, j]] = v;
            a[[j, i]] = v.conj();
        }
    }
}

pub fn max_abs(a: &Array2<Complex64>) -> f64 {
    a.iter().map(|c| c.norm()).fold(0.0, f64::max)
}
