//! Density-of-states diagnostics. A radially localized basis with finite
//! multiplicities and uniformly separated radii forces the trace per unit
//! volume to vanish; the functions here measure both sides on grid data.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::linear_fit;
use crate::operator::{KernelProjection, Ugwb};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceSample {
    pub l: f64,
    /// `Tr(chi_L P) / (2L)^d`.
    pub value: f64,
    /// `Tr(chi_L P)`.
    pub trace: f64,
}

/// `Tr(chi_L P) / (2L)^d` for each `L`, where `Tr(chi_L P)` integrates the
/// kernel diagonal over `[-L, L]^d` with each grid cell weighted by the
/// fraction of it that lies inside the box.
pub fn trace_per_unit_volume(p: &KernelProjection, box_halves: &[f64]) -> Result<Vec<TraceSample>> {
    let grid = p.grid();
    let diag = p.diagonal();
    let w = grid.weight();
    let h = grid.spacing();
    box_halves
        .iter()
        .map(|&l| {
            if !(l > 0.0) {
                return Err(Error::InvalidParameter(format!("box half-width must be positive, got {l}")));
            }
            if l > grid.half_width * (1.0 + 1e-12) {
                return Err(Error::BoxExceedsGrid { l, half_width: grid.half_width });
            }
            let inside = |c: f64| ((c + 0.5 * h).min(l) - (c - 0.5 * h).max(-l)).max(0.0) / h;
            let trace: f64 = (0..grid.len())
                .map(|i| diag[i] * w * grid.coords(i)[..grid.dim].iter().map(|&c| inside(c)).product::<f64>())
                .sum();
            Ok(TraceSample { l, value: trace / (2.0 * l).powi(grid.dim as i32), trace })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitEstimate {
    /// Intercept `a` of `value(L) = a + c/L` over the three largest `L`.
    pub limit: f64,
    pub surface_coefficient: f64,
    /// Slope of `ln value` against `ln L` over all samples, when every value is positive.
    pub power: Option<f64>,
    pub power_r_squared: Option<f64>,
}

pub fn extrapolate_limit(samples: &[TraceSample]) -> Result<LimitEstimate> {
    if samples.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "extrapolation needs at least 3 box sizes, got {}",
            samples.len()
        )));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.l.total_cmp(&b.l));
    let tail: Vec<(f64, f64)> = sorted[sorted.len() - 3..].iter().map(|s| (1.0 / s.l, s.value)).collect();
    let line = linear_fit(&tail);
    let (power, power_r_squared) = if sorted.iter().all(|s| s.value > 0.0) {
        let pts: Vec<(f64, f64)> = sorted.iter().map(|s| (s.l.ln(), s.value.ln())).collect();
        let fit = linear_fit(&pts);
        (Some(fit.slope), Some(fit.r_squared))
    } else {
        (None, None)
    };
    Ok(LimitEstimate { limit: line.intercept, surface_coefficient: line.slope, power, power_r_squared })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapStats {
    pub gaps: Vec<f64>,
    pub min_gap: f64,
    /// Slope of `ln gap_i` against `ln i` (gap `i` sits between radii `i-1` and `i`),
    /// over strictly positive gaps.
    pub trend: f64,
}

pub fn radius_gap_stats(radii: &[f64]) -> Result<GapStats> {
    if radii.len() < 3 {
        return Err(Error::TooFewRadii(radii.len()));
    }
    if radii.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("radii must be sorted increasingly".into()));
    }
    let gaps: Vec<f64> = radii.windows(2).map(|w| w[1] - w[0]).collect();
    let min_gap = gaps.iter().cloned().fold(f64::INFINITY, f64::min);
    let pts: Vec<(f64, f64)> =
        gaps.iter().enumerate().filter(|(_, g)| **g > 0.0).map(|(i, g)| (((i + 1) as f64).ln(), g.ln())).collect();
    let trend = if pts.len() >= 2 { linear_fit(&pts).slope } else { 0.0 };
    Ok(GapStats { gaps, min_gap, trend })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Consistent,
    Inconsistent,
}

/// Smallest extrapolated trace per unit volume, relative to the value at the
/// largest box, that counts as positive.
pub const POSITIVE_LIMIT_FRACTION: f64 = 0.1;
/// Absolute floor below which an extrapolated limit counts as zero.
pub const POSITIVE_LIMIT_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub max_multiplicity: Option<usize>,
    /// `None` when fewer than two radii exist (the infimum is vacuous).
    pub min_gap: Option<f64>,
    /// Gaps at or below this resolution are not bounded away from zero.
    pub resolution: f64,
    pub uniformly_discrete: bool,
    pub limit: LimitEstimate,
    pub limit_positive: bool,
    /// `Tr(chi_L P)` never decreases as `L` grows.
    pub trace_nondecreasing: bool,
    /// `max_L Tr(chi_L P) / L` over the sampled boxes.
    pub max_trace_over_l: f64,
    pub verdict: Verdict,
}

/// Checks that finite multiplicity, uniformly discrete radii and a positive
/// trace per unit volume do not occur together.
pub fn density_consistency_verdict(
    max_multiplicity: Option<usize>,
    radii: &[f64],
    resolution: f64,
    samples: &[TraceSample],
) -> Result<ConsistencyReport> {
    let mut sorted_radii = radii.to_vec();
    sorted_radii.sort_by(f64::total_cmp);
    let min_gap = sorted_radii.windows(2).map(|w| w[1] - w[0]).reduce(f64::min);
    let uniformly_discrete = min_gap.is_none_or(|g| g > resolution);
    let limit = extrapolate_limit(samples)?;
    let mut by_l = samples.to_vec();
    by_l.sort_by(|a, b| a.l.total_cmp(&b.l));
    let last = by_l.last().map(|s| s.value).unwrap_or(0.0);
    let limit_positive = limit.limit > POSITIVE_LIMIT_FLOOR && limit.limit > POSITIVE_LIMIT_FRACTION * last;
    let trace_nondecreasing = by_l.windows(2).all(|w| w[1].trace >= w[0].trace - 1e-12 * w[1].trace.abs().max(1.0));
    let max_trace_over_l = by_l.iter().map(|s| s.trace / s.l).fold(0.0, f64::max);
    let verdict = if max_multiplicity.is_some() && uniformly_discrete && limit_positive {
        Verdict::Inconsistent
    } else {
        Verdict::Consistent
    };
    Ok(ConsistencyReport {
        max_multiplicity,
        min_gap,
        resolution,
        uniformly_discrete,
        limit,
        limit_positive,
        trace_nondecreasing,
        max_trace_over_l,
        verdict,
    })
}

/// [`density_consistency_verdict`] with multiplicities and radii taken from `ugwb` and the
/// resolution set to its grid spacing.
pub fn density_consistency(ugwb: &Ugwb, samples: &[TraceSample]) -> Result<ConsistencyReport> {
    let m = (!ugwb.levels.is_empty()).then(|| ugwb.max_multiplicity());
    density_consistency_verdict(m, &ugwb.radii(), ugwb.grid.spacing(), samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{gaussian_samples, GridSpec};

    #[test]
    fn zero_projection_has_zero_density() {
        let grid = GridSpec::new(2, 4.0, 16).unwrap();
        let t = trace_per_unit_volume(&KernelProjection::zero(grid), &[1.0, 2.0, 4.0]).unwrap();
        assert!(t.iter().all(|s| s.value == 0.0));
        assert!(matches!(
            trace_per_unit_volume(&KernelProjection::zero(grid), &[5.0]),
            Err(Error::BoxExceedsGrid { .. })
        ));
    }

    #[test]
    fn identity_density_is_one_over_weight() {
        let grid = GridSpec::new(2, 4.0, 16).unwrap();
        let t = trace_per_unit_volume(&KernelProjection::identity(grid), &[2.0, 4.0]).unwrap();
        for s in t {
            assert!((s.value - 1.0 / grid.weight()).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_diagonal_gives_exact_density_for_unaligned_boxes() {
        let grid = GridSpec::new(2, 6.0, 64).unwrap();
        let t = trace_per_unit_volume(&KernelProjection::identity(grid), &[2.0, 3.3, 6.0]).unwrap();
        for s in t {
            assert!((s.value * grid.weight() - 1.0).abs() < 1e-12, "{s:?}");
        }
    }

    #[test]
    fn rank_one_density_decays_like_inverse_area() {
        let grid = GridSpec::new(2, 8.0, 64).unwrap();
        let p = KernelProjection::rank_one(grid, &gaussian_samples(&grid, &[0.0, 0.0])).unwrap();
        let t = trace_per_unit_volume(&p, &[3.0, 4.0, 5.0, 6.0, 7.0, 8.0]).unwrap();
        let est = extrapolate_limit(&t).unwrap();
        assert!((est.power.unwrap() + 2.0).abs() < 0.3, "{est:?}");
        assert!(est.limit < POSITIVE_LIMIT_FRACTION * t[t.len() - 1].value, "{est:?}");
    }

    #[test]
    fn gap_statistics() {
        let s = radius_gap_stats(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.min_gap, 1.0);
        assert!(s.trend.abs() < 1e-12);
        let r: Vec<f64> = (1..=100).map(|k| (k as f64).sqrt()).collect();
        let s = radius_gap_stats(&r).unwrap();
        assert!((s.trend + 0.5).abs() < 0.05, "{}", s.trend);
        assert!(matches!(radius_gap_stats(&[1.0, 2.0]), Err(Error::TooFewRadii(2))));
        assert!(radius_gap_stats(&[3.0, 2.0, 1.0]).is_err());
    }

    fn samples(values: &[(f64, f64)]) -> Vec<TraceSample> {
        values.iter().map(|&(l, v)| TraceSample { l, value: v, trace: v * 4.0 * l * l }).collect()
    }

    #[test]
    fn synthetic_violation_is_flagged() {
        let t = samples(&[(2.0, 0.3), (3.0, 0.31), (4.0, 0.315), (5.0, 0.32)]);
        let r = density_consistency_verdict(Some(1), &[1.0, 2.0, 3.0, 4.0], 0.1, &t).unwrap();
        assert_eq!(r.verdict, Verdict::Inconsistent);
        let r = density_consistency_verdict(Some(1), &[1.0, 1.05, 1.08, 1.1], 0.1, &t).unwrap();
        assert_eq!(r.verdict, Verdict::Consistent);
        assert!(!r.uniformly_discrete);
    }

    #[test]
    fn vanishing_density_is_consistent() {
        let t = samples(&[(2.0, 1.0 / 16.0), (3.0, 1.0 / 36.0), (4.0, 1.0 / 64.0), (5.0, 1.0 / 100.0)]);
        let r = density_consistency_verdict(Some(1), &[2.0], 0.1, &t).unwrap();
        assert!(r.min_gap.is_none() && r.uniformly_discrete && !r.limit_positive);
        assert_eq!(r.verdict, Verdict::Consistent);
    }
}
