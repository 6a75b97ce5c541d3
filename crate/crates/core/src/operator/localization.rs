use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::special_functions::jbracket;

/// Weight `G: [0, inf) -> [1, inf)` with the near-triangle constant `C_G`:
/// `G(|x-y|) <= C_G G(|x-z|) G(|z-y|)`.
#[derive(Clone)]
pub struct LocalizationFunction {
    eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub c_g: f64,
    pub label: String,
}

impl fmt::Debug for LocalizationFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LocalizationFunction").field("label", &self.label).field("c_g", &self.c_g).finish()
    }
}

impl LocalizationFunction {
    pub fn new<F>(label: impl Into<String>, c_g: f64, eval: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        LocalizationFunction { eval: Arc::new(eval), c_g, label: label.into() }
    }

    /// `G(x) = e^{q <x>}`; subadditivity of `<.>` gives `C_G = 1`.
    pub fn exp_japanese(q: f64) -> Self {
        Self::new(format!("exp({q} <x>)"), 1.0, move |x| (q * jbracket(&[x])).exp())
    }

    /// `G(x) = <x>^s` for `s > 0`, with `C_G = 2^s` from `<a + b> <= 2 <a> <b>`.
    pub fn power_japanese(s: f64) -> Self {
        Self::new(format!("<x>^{s}"), 2f64.powf(s), move |x| jbracket(&[x]).powf(s))
    }

    /// `G = 1`. Satisfies the triangle bound but does not diverge, so it is
    /// only useful as a plain Hilbert-Schmidt weight.
    pub fn unit() -> Self {
        Self::new("1", 1.0, |_| 1.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    /// Checks the defining properties on samples: `G >= 1`, monotone on an
    /// evenly spaced radius sweep up to `r_max`, growth between `0` and
    /// `r_max`, and the triangle bound on `triples` random point triples in
    /// the `dim`-ball of radius `r_max`.
    pub fn check(&self, r_max: f64, dim: usize, triples: usize, seed: u64) -> LocalizationCheck {
        let sweep: Vec<f64> = (0..=256).map(|i| self.eval(r_max * i as f64 / 256.0)).collect();
        let at_least_one = sweep.iter().all(|&g| g >= 1.0);
        let nondecreasing = sweep.windows(2).all(|w| w[1] >= w[0]);
        let growth = sweep[256] / sweep[0];

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let point = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..dim).map(|_| rng.gen_range(-r_max..r_max)).collect() };
        let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        let mut worst = 0.0_f64;
        for _ in 0..triples {
            let (x, y, z) = (point(&mut rng), point(&mut rng), point(&mut rng));
            let lhs = self.eval(dist(&x, &y));
            let rhs = self.eval(dist(&x, &z)) * self.eval(dist(&z, &y));
            worst = worst.max(lhs / rhs);
        }
        LocalizationCheck {
            at_least_one,
            nondecreasing,
            growth,
            worst_triangle_ratio: worst,
            triangle_ok: worst <= self.c_g * (1.0 + 1e-12),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalizationCheck {
    pub at_least_one: bool,
    pub nondecreasing: bool,
    /// `G(r_max) / G(0)`.
    pub growth: f64,
    pub worst_triangle_ratio: f64,
    pub triangle_ok: bool,
}

impl LocalizationCheck {
    pub fn passed(&self, min_growth: f64) -> bool {
        self.at_least_one && self.nondecreasing && self.triangle_ok && self.growth >= min_growth
    }
}
