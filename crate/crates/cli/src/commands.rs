use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use ugwb::analysis::{density_consistency, extrapolate_limit, radius_gap_stats, trace_per_unit_volume, Verdict};
use ugwb::kernel_io::{read_kernel, write_kernel};
use ugwb::landau::{
    default_k_trunc, gram_matrix, lambda_sweep, landau_grid_projection, quadrature_grid, radius_bracket_0k,
    toeplitz_matrix, KernelSource, LandauSpec,
};
use ugwb::lattice::{
    bulk_average, chern_marker, hofstadter_hamiltonian, kernel_decay_fit, model_projection, Boundary, LatticeModel,
    LatticeSpectrum,
};
use ugwb::operator::{
    build_ugwb, EigenStrategy, GridSpec, KernelProjection, LocalizationFunction, Ugwb, UgwbOptions, UgwbReport,
};
use ugwb::Error;

use crate::output::{num, opt, write_atomic, write_json, Csv};
use crate::{
    HofstadterArgs, LandauKernelArgs, LandauSpectrumArgs, LandauValidateArgs, SourceArg, StrategyArg, TraceDensityArgs,
    UgwbArgs,
};

/// Residual tolerance for orthonormality and diagonality checks.
const MATRIX_TOL: f64 = 1e-8;
/// Residual tolerance for hermiticity and idempotency of lattice projections.
const PROJECTION_TOL: f64 = 1e-8;
const TRIANGLE_SAMPLES: usize = 1000;
const COMPARED_EIGENVALUES: usize = 6;

pub struct Context {
    pub seed: u64,
    pub out: PathBuf,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failed { detail: String, report: Option<PathBuf> },
    Runtime(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }

    pub fn json(&self) -> String {
        match self {
            CliError::Usage(d) => error_json("usage", d),
            CliError::Runtime(d) => error_json("runtime", d),
            CliError::Failed { detail, report } => json!({
                "error": "failed_checks",
                "detail": detail,
                "report": report.as_ref().map(|p| p.display().to_string()),
            })
            .to_string(),
        }
    }
}

pub fn error_json(kind: &str, detail: &str) -> String {
    json!({ "error": kind, "detail": detail }).to_string()
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_)
            | Error::GridTooLarge { .. }
            | Error::BoxExceedsGrid { .. }
            | Error::WindowTouchesSpectrum { .. }
            | Error::TooFewRadii(_) => CliError::Usage(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

type Outcome = Result<String, CliError>;

fn finish(checks: &[(&str, bool)], report: PathBuf, summary: String) -> Outcome {
    let failed: Vec<&str> = checks.iter().filter(|(_, ok)| !ok).map(|(name, _)| *name).collect();
    if failed.is_empty() {
        Ok(summary)
    } else {
        Err(CliError::Failed { detail: format!("failed checks: {}", failed.join(", ")), report: Some(report) })
    }
}

fn load_kernel(path: &Path) -> Result<KernelProjection, CliError> {
    let file = File::open(path).map_err(|e| CliError::Usage(format!("cannot open {}: {e}", path.display())))?;
    read_kernel(BufReader::new(file)).map_err(|e| match e {
        Error::KernelFormat(d) => CliError::Usage(format!("{}: {d}", path.display())),
        other => other.into(),
    })
}

fn store_kernel(dir: &Path, name: &str, p: &KernelProjection) -> Result<PathBuf, CliError> {
    let mut bytes = Vec::new();
    write_kernel(&mut bytes, p)?;
    Ok(write_atomic(dir, name, &bytes)?)
}

#[derive(Serialize)]
struct SpectrumRow {
    k: i64,
    lambda: f64,
    lower: Option<f64>,
    upper: Option<f64>,
    radius: f64,
    radius_upper: Option<f64>,
    radius_clamped: bool,
    err_estimate: f64,
}

pub fn landau_spectrum(ctx: &Context, a: &LandauSpectrumArgs) -> Outcome {
    let spec = LandauSpec::new(a.b, a.n, a.q, a.k_max)?;
    if !(a.tol > 0.0) {
        return Err(CliError::Usage(format!("--tol must be positive, got {}", a.tol)));
    }
    let rows: Vec<SpectrumRow> = lambda_sweep(&spec, a.tol)?
        .into_iter()
        .map(|ev| SpectrumRow {
            k: ev.k,
            lambda: ev.lambda,
            lower: ev.lower_bound,
            upper: ev.upper_bound,
            radius: ev.radius,
            // the bracket bounds <r> = sqrt(1 + r^2); converted to a bound on r
            radius_upper: (a.n == 0).then(|| {
                let (_, hi) = radius_bracket_0k(ev.k as usize, a.q, a.b);
                (hi * hi - 1.0).sqrt()
            }),
            radius_clamped: ev.radius_clamped,
            err_estimate: ev.err_estimate,
        })
        .collect();
    let mut csv = Csv::new(&["k", "lambda", "lower", "upper", "radius", "radius_upper"]);
    for r in &rows {
        csv.row(&[r.k.to_string(), num(r.lambda), opt(r.lower), opt(r.upper), num(r.radius), opt(r.radius_upper)]);
    }
    csv.write(&ctx.out, "landau_spectrum.csv")?;
    let bracket_holds = rows.iter().all(|r| match (r.lower, r.upper) {
        (Some(lo), Some(hi)) => r.lambda > lo && r.lambda < hi,
        _ => true,
    });
    let radius_bracket_holds = rows.iter().all(|r| r.radius_upper.is_none_or(|u| !r.radius_clamped && r.radius <= u));
    let report = json!({
        "command": "landau-spectrum",
        "b": a.b, "q": a.q, "n": a.n, "k_max": a.k_max, "tol": a.tol,
        "energy": spec.energy(),
        "rows": rows,
        "checks": { "eigenvalue_bracket": bracket_holds, "radius_bracket": radius_bracket_holds },
    });
    let path = write_json(&ctx.out, "landau_spectrum.json", &report)?;
    finish(
        &[("eigenvalue_bracket", bracket_holds), ("radius_bracket", radius_bracket_holds)],
        path.clone(),
        format!("{} rows written to {}", rows.len(), path.display()),
    )
}

#[derive(Serialize)]
struct EigenvalueComparison {
    exact: f64,
    grid: Option<f64>,
    rel_err: Option<f64>,
}

pub fn landau_validate(ctx: &Context, a: &LandauValidateArgs) -> Outcome {
    let spec = LandauSpec::new(a.b, a.n, a.q, a.k_max)?;
    let k_abs = a.k_max.max(a.n as i64).max(0) as usize;
    let quad = quadrature_grid(a.b, a.n, k_abs)?;
    let gram = gram_matrix(&spec, &quad);
    let gram_residual =
        gram.indexed_iter().map(|((i, j), c)| (c - if i == j { 1.0 } else { 0.0 }).norm()).fold(0.0, f64::max);
    let toeplitz = toeplitz_matrix(&spec)?;
    let toeplitz_off = toeplitz.indexed_iter().filter(|((i, j), _)| i != j).map(|(_, c)| c.norm()).fold(0.0, f64::max);

    let grid = GridSpec::new(2, a.half_width, a.grid)?;
    let p = landau_grid_projection(a.n, a.b, grid, KernelSource::Closed)?;
    let u = build_ugwb(&p, a.q, &UgwbOptions::default())?;
    let report = u.check();

    let mut exact: Vec<f64> = lambda_sweep(&spec, 1e-12)?.iter().map(|e| e.lambda).collect();
    exact.sort_by(|x, y| y.total_cmp(x));
    let flat = flat_lambdas(&u);
    let comparison: Vec<EigenvalueComparison> = exact
        .iter()
        .take(COMPARED_EIGENVALUES)
        .enumerate()
        .map(|(i, &e)| EigenvalueComparison {
            exact: e,
            grid: flat.get(i).copied(),
            rel_err: flat.get(i).map(|g| ((g - e) / e).abs()),
        })
        .collect();

    let g = LocalizationFunction::exp_japanese(a.q).check(a.half_width, 2, TRIANGLE_SAMPLES, ctx.seed);
    let g_ok = g.passed(1.0);
    let checks = [
        ("gram_orthonormality", gram_residual <= MATRIX_TOL),
        ("toeplitz_diagonal", toeplitz_off <= MATRIX_TOL),
        ("ugwb_invariants", report.passed),
        ("localization_function", g_ok),
    ];
    let out = json!({
        "command": "landau-validate",
        "b": a.b, "q": a.q, "n": a.n, "k_max": a.k_max, "grid": a.grid, "half_width": a.half_width,
        "seed": ctx.seed,
        "gram_residual": gram_residual,
        "toeplitz_off_diagonal_max": toeplitz_off,
        "eigenvalues": comparison,
        "ugwb": ugwb_summary(&u, &report),
        "localization_function": g,
        "checks": checks.iter().map(|(k, v)| (k.to_string(), json!(*v))).collect::<serde_json::Map<_, _>>(),
    });
    let path = write_json(&ctx.out, "landau_validate.json", &out)?;
    let max_err = comparison.iter().filter_map(|c| c.rel_err).fold(0.0, f64::max);
    finish(
        &checks,
        path.clone(),
        format!(
            "gram {gram_residual:.2e}, toeplitz {toeplitz_off:.2e}, top eigenvalue error {max_err:.2e}; report {}",
            path.display()
        ),
    )
}

pub fn landau_kernel(ctx: &Context, a: &LandauKernelArgs) -> Outcome {
    let grid = GridSpec::new(2, a.half_width, a.grid)?;
    let source = match a.source {
        SourceArg::Closed => KernelSource::Closed,
        SourceArg::Series => {
            KernelSource::Series { k_trunc: a.k_trunc.unwrap_or_else(|| default_k_trunc(a.n, a.b, a.half_width)) }
        }
    };
    let p = landau_grid_projection(a.n, a.b, grid, source)?;
    let verify = p.verify(PROJECTION_TOL);
    let kernel = store_kernel(&ctx.out, "landau.ugwk", &p)?;
    let out = json!({
        "command": "landau-kernel",
        "b": a.b, "n": a.n, "grid": grid,
        "source": match source { KernelSource::Closed => json!("closed"), KernelSource::Series { k_trunc } => json!({ "series": k_trunc }) },
        "kernel_file": kernel.file_name().map(|f| f.to_string_lossy().into_owned()),
        "hermiticity": verify.hermiticity,
        "idempotency": verify.idempotency,
        "checks": { "hermitian": verify.hermiticity <= PROJECTION_TOL },
    });
    let path = write_json(&ctx.out, "landau_kernel.json", &out)?;
    finish(
        &[("hermitian", verify.hermiticity <= PROJECTION_TOL)],
        path,
        format!("kernel written to {} (idempotency residual {:.2e})", kernel.display(), verify.idempotency),
    )
}

fn flat_lambdas(u: &Ugwb) -> Vec<f64> {
    u.levels.iter().flat_map(|l| std::iter::repeat_n(l.lambda, l.multiplicity())).collect()
}

fn ugwb_summary(u: &Ugwb, r: &UgwbReport) -> serde_json::Value {
    json!({
        "q": u.q,
        "f": u.f_kind,
        "grid": u.grid,
        "strategy": u.strategy,
        "range_rank": u.range_rank,
        "projection_defect": u.projection_defect,
        "levels": r.levels,
        "level_count": u.levels.len(),
        "total_vectors": u.total_vectors(),
        "max_multiplicity": u.max_multiplicity(),
        "m_bound": u.m_bound,
        "hs_norm_sq": u.hs_norm_sq,
        "hs_overflow": u.hs_overflow,
        "beta_margin_ok": u.beta_margin_ok,
        "checks": {
            "strictly_decreasing": r.strictly_decreasing,
            "max_orthonormality_error": r.max_orthonormality_error,
            "max_localization_integral": r.max_localization_integral,
            "localization_bound_holds": r.localization_bound_holds,
            "max_g_localization_ratio": r.max_g_localization_ratio,
            "g_localization_holds": r.g_localization_holds,
            "clamped_levels": r.clamped_levels,
            "passed": r.passed,
        },
    })
}

pub fn ugwb(ctx: &Context, a: &UgwbArgs) -> Outcome {
    let p = load_kernel(&a.input)?;
    let opts = UgwbOptions {
        rel_tol: a.rel_tol,
        floor_rel: a.floor,
        strategy: match a.strategy {
            StrategyArg::Auto => EigenStrategy::Auto,
            StrategyArg::Dense => EigenStrategy::Dense,
            StrategyArg::Compressed => EigenStrategy::RangeCompressed,
        },
        ..UgwbOptions::default()
    };
    if !(a.rel_tol > 0.0 && a.floor >= 0.0) {
        return Err(CliError::Usage("--rel-tol must be positive and --floor nonnegative".into()));
    }
    let u = build_ugwb(&p, a.q, &opts)?;
    let report = u.check();
    let mut csv = Csv::new(&[
        "level",
        "lambda",
        "multiplicity",
        "radius",
        "radius_clamped",
        "max_localization_integral",
        "g_localization_ratio",
        "max_normalization_residual",
    ]);
    for (i, l) in report.levels.iter().enumerate() {
        csv.row(&[
            i.to_string(),
            num(l.lambda),
            l.multiplicity.to_string(),
            num(l.radius),
            l.radius_clamped.to_string(),
            num(l.max_localization_integral),
            num(l.g_localization_ratio),
            num(l.max_normalization_residual),
        ]);
    }
    csv.write(&ctx.out, "ugwb_levels.csv")?;
    let mut out = ugwb_summary(&u, &report);
    out["command"] = json!("ugwb");
    out["input"] = json!(a.input.display().to_string());
    let path = write_json(&ctx.out, "ugwb.json", &out)?;
    finish(
        &[("ugwb_invariants", report.passed)],
        path.clone(),
        format!("{} levels, M = {}; report {}", u.levels.len(), u.m_bound, path.display()),
    )
}

pub fn hofstadter(ctx: &Context, a: &HofstadterArgs) -> Outcome {
    let model = LatticeModel::new(a.size, a.flux, a.boundary)?;
    let spectrum = LatticeSpectrum::new(&hofstadter_hamiltonian(&model))?;
    let (p, (lo, hi)) = model_projection(&model, &spectrum, a.window, a.margin)?;
    let rank = spectrum.values.iter().filter(|&&e| e > lo && e < hi).count();
    let (fit, fit_error) = match kernel_decay_fit(&p) {
        Ok(fit) => (Some(fit), None),
        Err(e @ Error::DegenerateFit { .. }) => (None, Some(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    let p = match fit.and_then(|f| f.decay().filter(|_| f.certified)) {
        Some(d) => p.with_decay(d),
        None => p,
    };
    let verify = p.verify(PROJECTION_TOL);
    let marker = if a.boundary == Boundary::Open {
        let field = chern_marker(&p)?;
        let mut csv = Csv::new(&["x", "y", "marker"]);
        for y in 0..a.size {
            for x in 0..a.size {
                csv.row(&[x.to_string(), y.to_string(), num(field[model.index(x, y)])]);
            }
        }
        csv.write(&ctx.out, "hofstadter_marker.csv")?;
        Some(bulk_average(&field, a.size))
    } else {
        None
    };
    let kernel = store_kernel(&ctx.out, "hofstadter.ugwk", &p)?;
    let out = json!({
        "command": "hofstadter",
        "flux": a.flux.to_string(),
        "size": a.size,
        "boundary": a.boundary,
        "window": [lo, hi],
        "states_in_window": rank,
        "gap": spectrum.gap_at(hi),
        "decay_fit": fit,
        "decay_fit_error": fit_error,
        "decay_attached": p.decay.is_some(),
        "chern_marker_bulk": marker,
        "projection": verify,
        "kernel_file": kernel.file_name().map(|f| f.to_string_lossy().into_owned()),
        "checks": { "projection": verify.passed },
    });
    let path = write_json(&ctx.out, "hofstadter.json", &out)?;
    finish(
        &[("projection", verify.passed)],
        path.clone(),
        format!(
            "{rank} states, gap {:.4}, {}{}; report {}",
            spectrum.gap_at(hi),
            fit.map(|f| format!("beta {:.4} (r2 {:.3})", f.beta, f.r_squared)).unwrap_or_else(|| "no decay fit".into()),
            marker.map(|m| format!(", bulk marker {m:.4}")).unwrap_or_default(),
            path.display()
        ),
    )
}

pub fn trace_density(ctx: &Context, a: &TraceDensityArgs) -> Outcome {
    if a.boxes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Usage("--boxes must be strictly increasing".into()));
    }
    let p = load_kernel(&a.input)?;
    let samples = trace_per_unit_volume(&p, &a.boxes)?;
    let limit = extrapolate_limit(&samples)?;
    let q = a.q.unwrap_or_else(|| p.decay.map(|d| d.beta / 2.0).unwrap_or(1.0));
    let u = build_ugwb(&p, q, &UgwbOptions::default())?;
    let verdict = density_consistency(&u, &samples)?;
    let mut radii = u.radii();
    radii.sort_by(f64::total_cmp);
    let gaps = radius_gap_stats(&radii).ok();
    let mut csv = Csv::new(&["L", "value", "trace"]);
    for s in &samples {
        csv.row(&[num(s.l), num(s.value), num(s.trace)]);
    }
    csv.write(&ctx.out, "trace_density.csv")?;
    let consistent = verdict.verdict == Verdict::Consistent;
    let out = json!({
        "command": "trace-density",
        "input": a.input.display().to_string(),
        "q": q,
        "samples": samples,
        "limit": limit,
        "radius_gaps": gaps.as_ref().map(|g| json!({ "min_gap": g.min_gap, "trend": g.trend, "count": g.gaps.len() })),
        "diagnostic": verdict,
        "checks": { "consistent": consistent, "trace_nondecreasing": verdict.trace_nondecreasing },
    });
    let path = write_json(&ctx.out, "trace_density.json", &out)?;
    finish(
        &[("consistent", consistent), ("trace_nondecreasing", verdict.trace_nondecreasing)],
        path.clone(),
        format!("limit {:.6}, verdict {:?}; report {}", limit.limit, verdict.verdict, path.display()),
    )
}
