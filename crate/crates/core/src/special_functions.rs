//! Generalized Laguerre polynomials, the Japanese bracket and the 1D
//! quadrature engines used by the rest of the crate.

use serde::Serialize;

use crate::error::{Error, Result};

/// `L_n^{(alpha)}(xi)` by the upward three-term recurrence
/// `(m+1) L_{m+1} = (2m+1+alpha-xi) L_m - (m+alpha) L_{m-1}`.
pub fn laguerre(n: usize, alpha: f64, xi: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + alpha - xi;
    for m in 1..n {
        let m = m as f64;
        let next = ((2.0 * m + 1.0 + alpha - xi) * cur - (m + alpha) * prev) / (m + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// `sum_m |c_m|` for the coefficients of `L_n^{(alpha)}` in powers of `xi`,
/// so that `|L_n^{(alpha)}(xi)| <= abs_coefficient_sum * (1 + xi)^n`.
pub fn laguerre_abs_coefficient_sum(n: usize, alpha: f64) -> f64 {
    // binom(n + alpha, n - m) / m!
    (0..=n).map(|m| (generalized_binomial(n as f64 + alpha, n - m) / factorial(m)).abs()).sum()
}

pub(crate) fn generalized_binomial(top: f64, m: usize) -> f64 {
    let mut acc = 1.0;
    for j in 0..m {
        acc *= (top - j as f64) / (j as f64 + 1.0);
    }
    acc
}

pub(crate) fn factorial(m: usize) -> f64 {
    (1..=m).fold(1.0, |acc, j| acc * j as f64)
}

/// `ln(m!)`, summed directly; exact enough for the small integer arguments used here.
pub fn ln_factorial(m: usize) -> f64 {
    (2..=m).map(|j| (j as f64).ln()).sum()
}

/// Japanese bracket `<x> = sqrt(1 + |x|^2)`, evaluated with scaling so large
/// coordinates do not overflow.
pub fn jbracket(x: &[f64]) -> f64 {
    let scale = x.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let inv = 1.0 / scale;
    let sum = x.iter().map(|v| (v * inv).powi(2)).sum::<f64>() + inv * inv;
    scale * sum.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureKind {
    GaussLaguerre,
    AdaptiveComposite,
}

/// Nodes and positive weights of a 1D rule on `[0, inf)`.
#[derive(Debug, Clone, Serialize)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub kind: QuadratureKind,
}

impl QuadratureRule {
    /// `m`-point Gauss-Laguerre rule for the weight `e^{-xi}`.
    ///
    /// Nodes are found by Newton iteration on `L_m` from asymptotic starting
    /// guesses, and the weights use `w_i = -1 / (m L_m'(x_i) L_{m-1}(x_i))`,
    /// which keeps full relative accuracy even for the tiny weights far out.
    pub fn gauss_laguerre(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("Gauss-Laguerre rule needs m >= 1".into()));
        }
        let nf = m as f64;
        let mut nodes = vec![0.0; m];
        let mut weights = vec![0.0; m];
        let mut z = 0.0_f64;
        for i in 0..m {
            z = match i {
                0 => 3.0 / (1.0 + 2.4 * nf),
                1 => z + 15.0 / (1.0 + 2.5 * nf),
                _ => {
                    let ai = (i - 1) as f64;
                    z + (1.0 + 2.55 * ai) / (1.9 * ai) * (z - nodes[i - 2])
                }
            };
            let mut converged = false;
            for _ in 0..200 {
                let (p, pm1) = laguerre_pair(m, z);
                let step = p / ((nf * p - nf * pm1) / z);
                z -= step;
                if step.abs() <= 1e-15 * z.abs().max(1.0) {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::NonConvergence { err_estimate: f64::NAN, tol: 1e-15 });
            }
            let (p, lower) = laguerre_pair(m, z);
            let deriv = (nf * p - nf * lower) / z;
            nodes[i] = z;
            weights[i] = -1.0 / (nf * deriv * lower);
        }
        Ok(QuadratureRule { nodes, weights, kind: QuadratureKind::GaussLaguerre })
    }

    /// For a Gauss-Laguerre rule this approximates `int_0^inf e^{-xi} f(xi) dxi`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

// (L_m(z), L_{m-1}(z)) for alpha = 0
fn laguerre_pair(m: usize, z: f64) -> (f64, f64) {
    let mut p1 = 1.0;
    let mut p2 = 0.0;
    for j in 0..m {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = ((2.0 * jf + 1.0 - z) * p2 - jf * p3) / (jf + 1.0);
    }
    (p1, p2)
}

/// Caller-declared bound `|f(xi)| <= scale * (1 + xi)^degree * e^{-rate xi}`,
/// used to place the tail cut of [`integrate_adaptive`].
#[derive(Debug, Clone, Copy)]
pub struct DecayEnvelope {
    pub scale: f64,
    pub degree: u32,
    pub rate: f64,
}

impl DecayEnvelope {
    pub fn new(scale: f64, degree: u32, rate: f64) -> Self {
        DecayEnvelope { scale, degree, rate }
    }

    /// Exact value of `int_X^inf scale (1+xi)^d e^{-rate xi} dxi`.
    pub fn tail(&self, x: f64) -> f64 {
        if self.scale == 0.0 {
            return 0.0;
        }
        let d = self.degree as f64;
        let u = 1.0 + x;
        // terms relative to j = 0: ratio term_{j+1}/term_j = (d - j) / (u * rate)
        let mut rel = 1.0;
        let mut sum = 1.0;
        for j in 0..self.degree {
            rel *= (d - j as f64) / (u * self.rate);
            sum += rel;
        }
        let log_term0 = d * u.ln() - self.rate.ln();
        (self.scale.ln() - self.rate * x + log_term0 + sum.ln()).exp()
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Integral {
    pub value: f64,
    pub err_estimate: f64,
    pub evaluations: usize,
    pub cutoff: f64,
}

const MAX_EVALUATIONS: usize = 4_000_000;
const MAX_DEPTH: u32 = 48;
const INITIAL_PANELS: usize = 64;

/// Integrates `f` over `[0, inf)` to absolute tolerance `tol`.
///
/// The range is cut at the first `X` (grown geometrically) where the envelope
/// tail drops below `tol / 10`; `[0, X]` is covered by composite Simpson
/// panels that are bisected until the Richardson estimate `|S2 - S1| / 15`
/// meets the panel's share of the remaining tolerance.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(f: F, envelope: &DecayEnvelope, tol: f64) -> Result<Integral> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let tail_budget = tol / 10.0;
    let mut cutoff = (envelope.degree as f64 / envelope.rate).max(1.0);
    let mut tail = envelope.tail(cutoff);
    while tail > tail_budget {
        cutoff *= 1.25;
        if cutoff > 1e7 {
            return Err(Error::NonConvergence { err_estimate: tail, tol });
        }
        tail = envelope.tail(cutoff);
    }

    let local_budget = tol - tail_budget;
    let panel = cutoff / INITIAL_PANELS as f64;
    let mut value = 0.0;
    let mut err = 0.0;
    let mut evaluations = 0usize;
    // explicit stack: (a, b, fa, fm, fb, whole, depth)
    let mut stack: Vec<(f64, f64, f64, f64, f64, f64, u32)> = Vec::new();
    for p in 0..INITIAL_PANELS {
        let a = p as f64 * panel;
        let b = a + panel;
        let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
        evaluations += 3;
        stack.push((a, b, fa, fm, fb, simpson(a, b, fa, fm, fb), 0));
        while let Some((a, b, fa, fm, fb, whole, depth)) = stack.pop() {
            let m = 0.5 * (a + b);
            let (flm, frm) = (f(0.5 * (a + m)), f(0.5 * (m + b)));
            evaluations += 2;
            let left = simpson(a, m, fa, flm, fm);
            let right = simpson(m, b, fm, frm, fb);
            let diff = left + right - whole;
            let allowed = local_budget * (b - a) / cutoff;
            if (diff.abs() <= 15.0 * allowed && depth >= 1) || depth >= MAX_DEPTH {
                value += left + right + diff / 15.0;
                err += diff.abs() / 15.0;
            } else {
                stack.push((m, b, fm, frm, fb, right, depth + 1));
                stack.push((a, m, fa, flm, fm, left, depth + 1));
            }
            if evaluations > MAX_EVALUATIONS {
                return Err(Error::NonConvergence { err_estimate: f64::INFINITY, tol });
            }
        }
    }
    let err_estimate = err + tail;
    if !(err_estimate <= tol) {
        return Err(Error::NonConvergence { err_estimate, tol });
    }
    Ok(Integral { value, err_estimate, evaluations, cutoff })
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // term-by-term evaluation of the defining binomial sum
    fn laguerre_sum(n: usize, alpha: f64, xi: f64) -> f64 {
        (0..=n).map(|m| generalized_binomial(n as f64 + alpha, n - m) * (-xi).powi(m as i32) / factorial(m)).sum()
    }

    // sum of the moduli of the terms: the rounding scale of `laguerre_sum`
    fn laguerre_sum_scale(n: usize, alpha: f64, xi: f64) -> f64 {
        (0..=n).map(|m| (generalized_binomial(n as f64 + alpha, n - m) * xi.powi(m as i32) / factorial(m)).abs()).sum()
    }

    #[test]
    fn laguerre_small_cases() {
        assert_eq!(laguerre(0, 3.7, 5.0), 1.0);
        assert_eq!(laguerre(1, 0.0, 2.0), -1.0);
        // binom(3,2) - binom(3,1) + binom(3,0)/2 = 3 - 3 + 0.5
        assert!((laguerre(2, 1.0, 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn laguerre_integer_alpha_matches_sum() {
        for n in 0..12 {
            for k in 0..8 {
                for &xi in &[0.0, 0.3, 1.0, 4.5, 9.0] {
                    let a = laguerre(n, k as f64, xi);
                    let b = laguerre_sum(n, k as f64, xi);
                    let scale = laguerre_sum_scale(n, k as f64, xi).max(b.abs());
                    assert!((a - b).abs() <= 1e-12 * scale, "n={n} k={k} xi={xi}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn jbracket_values() {
        assert_eq!(jbracket(&[0.0, 0.0]), 1.0);
        assert!((jbracket(&[3.0, 4.0]) - 26f64.sqrt()).abs() < 1e-14);
        let big = jbracket(&[1e8, 0.0]);
        // sqrt(1 + 1e16) = 1e8 * sqrt(1 + 1e-16) = 1e8 + 5e-9
        assert!((big - 1e8).abs() / 1e8 < 1e-12);
        assert!(jbracket(&[1e300, 1e300]).is_finite());
    }

    #[test]
    fn gauss_laguerre_is_exact_on_monomials() {
        for &m in &[8usize, 16, 32] {
            let rule = QuadratureRule::gauss_laguerre(m).unwrap();
            assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
            assert!(rule.weights.iter().all(|&w| w > 0.0));
            for p in 0..2 * m {
                let exact = factorial(p);
                let got = rule.integrate(|x| x.powi(p as i32));
                assert!(((got - exact) / exact).abs() < 1e-12, "m={m} p={p}: {got} vs {exact}");
            }
        }
    }

    #[test]
    fn laguerre_orthogonality() {
        let rule = QuadratureRule::gauss_laguerre(32).unwrap();
        for k in 0..=10 {
            for n in 0..=5 {
                for m in 0..=5 {
                    let v = rule.integrate(|x| x.powi(k) * laguerre(n, k as f64, x) * laguerre(m, k as f64, x));
                    if n != m {
                        assert!(v.abs() < 1e-9 * factorial(n + k as usize), "k={k} n={n} m={m}: {v}");
                    } else {
                        // Gamma(n + k + 1) / n!
                        let norm = factorial(n + k as usize) / factorial(n);
                        assert!((v - norm).abs() < 1e-9 * norm);
                    }
                }
            }
        }
    }

    #[test]
    fn envelope_tail_matches_closed_forms() {
        // int_X^inf e^{-xi} = e^{-X}
        let e = DecayEnvelope::new(1.0, 0, 1.0);
        assert!((e.tail(3.0) - (-3.0f64).exp()).abs() < 1e-15);
        // int_X^inf (1+xi) e^{-xi} = (2 + X) e^{-X}
        let e = DecayEnvelope::new(1.0, 1, 1.0);
        assert!((e.tail(2.0) - 4.0 * (-2.0f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn adaptive_exponentials() {
        let env = DecayEnvelope::new(1.0, 0, 1.0);
        let r = integrate_adaptive(|x| (-x).exp(), &env, 1e-10).unwrap();
        assert!((r.value - 1.0).abs() < 1e-10);
        let env = DecayEnvelope::new(1.0, 1, 1.0);
        let r = integrate_adaptive(|x| x * (-x).exp(), &env, 1e-10).unwrap();
        assert!((r.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn adaptive_landau_integrand_matches_simpson_oracle() {
        let f = |x: f64| (-(1.0 + x).sqrt()).exp() * (-x).exp();
        // composite Simpson on [0, 60] at halving steps until stable to 1e-8
        let simpson_n = |n: usize| {
            let h = 60.0 / n as f64;
            let mut s = f(0.0) + f(60.0);
            for i in 1..n {
                s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            s * h / 3.0
        };
        let mut n = 64;
        let mut prev = simpson_n(n);
        loop {
            n *= 2;
            let cur = simpson_n(n);
            if (cur - prev).abs() < 1e-10 {
                prev = cur;
                break;
            }
            prev = cur;
        }
        let env = DecayEnvelope::new((-1.0f64).exp(), 0, 1.0);
        let r = integrate_adaptive(f, &env, 1e-8).unwrap();
        assert!((r.value - prev).abs() < 1e-8);
        assert!((r.value - 0.263).abs() < 1e-3, "{}", r.value);
    }

    #[test]
    fn adaptive_reports_non_convergence_on_bad_envelope() {
        // the envelope claims almost no decay: cutoff search gives up
        let env = DecayEnvelope::new(1.0, 0, 1e-9);
        assert!(matches!(integrate_adaptive(|x| (-x).exp(), &env, 1e-10), Err(Error::NonConvergence { .. })));
    }

    proptest! {
        #[test]
        fn recurrence_matches_defining_sum(n in 0usize..=20, alpha in 0.0f64..10.0, xi in 0.0f64..50.0) {
            let a = laguerre(n, alpha, xi);
            let b = laguerre_sum(n, alpha, xi);
            // cancellation in the sum costs digits at large xi
            let scale = laguerre_sum_scale(n, alpha, xi);
            prop_assert!((a - b).abs() <= 1e-9 * scale.max(b.abs()).max(1e-300));
        }
    }
}
