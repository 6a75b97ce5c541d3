//! Browser bindings for the Landau and Hofstadter computations.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use ugwb::landau::{lambda_bounds_0k, lambda_sweep, landau_basis_eval, LandauSpec};
use ugwb::lattice::{
    bulk_average, chern_marker, hofstadter_hamiltonian, model_projection, Boundary, Flux, LatticeModel,
    LatticeSpectrum, Window, DEFAULT_GAP_MARGIN,
};

/// Largest lattice side accepted by [`hofstadter_marker`].
pub const MAX_LATTICE: usize = 30;
/// Largest image side accepted by [`landau_density`].
pub const MAX_PIXELS: usize = 400;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

#[derive(Serialize)]
struct Row {
    k: i64,
    lambda: f64,
    lower: Option<f64>,
    upper: Option<f64>,
    radius: f64,
}

/// JSON array of `{k, lambda, lower, upper, radius}` for `k = -n..=k_max`.
#[wasm_bindgen]
pub fn landau_spectrum(b: f64, q: f64, n: usize, k_max: i32) -> Result<String, JsError> {
    let spec = LandauSpec::new(b, n, q, k_max as i64).map_err(js_err)?;
    let rows: Vec<Row> = lambda_sweep(&spec, 1e-10)
        .map_err(js_err)?
        .into_iter()
        .map(|ev| {
            let bounds = (n == 0).then(|| lambda_bounds_0k(ev.k as usize, q, b));
            Row {
                k: ev.k,
                lambda: ev.lambda,
                lower: bounds.map(|b| b.0),
                upper: bounds.map(|b| b.1),
                radius: ev.radius,
            }
        })
        .collect();
    serde_json::to_string(&rows).map_err(js_err)
}

/// `|phi_{n,k}|^2` on a `pixels x pixels` image of `[-half_width, half_width]^2`,
/// row-major from the top.
#[wasm_bindgen]
pub fn landau_density(b: f64, n: usize, k: i32, half_width: f64, pixels: usize) -> Result<Vec<f64>, JsError> {
    if !(b > 0.0 && half_width > 0.0) || pixels == 0 || pixels > MAX_PIXELS {
        return Err(JsError::new("need b > 0, half_width > 0 and 1..=400 pixels"));
    }
    let h = 2.0 * half_width / pixels as f64;
    let mut out = Vec::with_capacity(pixels * pixels);
    for row in 0..pixels {
        let y = half_width - h * (row as f64 + 0.5);
        for col in 0..pixels {
            let x = -half_width + h * (col as f64 + 0.5);
            out.push(landau_basis_eval(b, n, k as i64, &[x, y]).norm_sqr());
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct Marker {
    size: usize,
    window: (f64, f64),
    states: usize,
    gap: f64,
    bulk: f64,
    field: Vec<f64>,
}

/// JSON `{size, window, states, gap, bulk, field}` for the lowest band of the
/// flux `p/q` model on an open `size x size` lattice.
#[wasm_bindgen]
pub fn hofstadter_marker(p: u32, q: u32, size: usize) -> Result<String, JsError> {
    if size > MAX_LATTICE {
        return Err(JsError::new(&format!("lattice side is limited to {MAX_LATTICE} in the browser")));
    }
    let flux = Flux::new(p, q).map_err(js_err)?;
    let model = LatticeModel::new(size, flux, Boundary::Open).map_err(js_err)?;
    let spectrum = LatticeSpectrum::new(&hofstadter_hamiltonian(&model)).map_err(js_err)?;
    let (proj, (lo, hi)) =
        model_projection(&model, &spectrum, Window::AutoLowest, DEFAULT_GAP_MARGIN).map_err(js_err)?;
    let field = chern_marker(&proj).map_err(js_err)?;
    let marker = Marker {
        size,
        window: (lo, hi),
        states: spectrum.values.iter().filter(|&&e| e > lo && e < hi).count(),
        gap: spectrum.gap_at(hi),
        bulk: bulk_average(&field, size),
        field,
    };
    serde_json::to_string(&marker).map_err(js_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectrum_rows_carry_brackets() {
        let rows: serde_json::Value = serde_json::from_str(&landau_spectrum(2.0, 1.0, 0, 3).unwrap()).unwrap();
        assert_eq!(rows.as_array().unwrap().len(), 4);
        let r0 = &rows[0];
        assert!(r0["lower"].as_f64().unwrap() < r0["lambda"].as_f64().unwrap());
    }

    #[test]
    fn density_integrates_to_one() {
        let hw = 6.0;
        let px = 200;
        let d = landau_density(2.0, 0, 2, hw, px).unwrap();
        let cell = (2.0 * hw / px as f64).powi(2);
        assert!((d.iter().sum::<f64>() * cell - 1.0).abs() < 1e-6);
    }

    #[test]
    fn marker_is_near_one() {
        let m: serde_json::Value = serde_json::from_str(&hofstadter_marker(1, 3, 18).unwrap()).unwrap();
        assert!((m["bulk"].as_f64().unwrap().abs() - 1.0).abs() < 0.2);
        assert_eq!(m["field"].as_array().unwrap().len(), 18 * 18);
    }
}
