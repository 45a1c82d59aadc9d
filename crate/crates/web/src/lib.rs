//! wasm-bindgen entry points for the static page in `www/`.
//!
//! Every function returns a flat `Float64Array`; the page slices it into rows.

use gdw_core::bulk_kernel::{kernel_descent_grid, limiting_bulk_params, solve_bulk_geometry};
use gdw_core::ensembles::{compose_gauss_divisible, sample_wigner, ElementLaw, EnsembleSpec, SIGMA2};
use gdw_core::fredholm::{sine_kernel, tw_cdf};
use gdw_core::spectral::{eigenvalues, SpectrumScale};
use wasm_bindgen::prelude::*;

fn spec(n: usize, kappa: f64, law: &str, seed: u64) -> Result<EnsembleSpec, String> {
    let law: ElementLaw = law.parse().map_err(|e| format!("{e}"))?;
    EnsembleSpec::new(n, law, kappa, seed).map_err(|e| e.to_string())
}

fn linspace(from: f64, to: f64, points: usize) -> Vec<f64> {
    let m = points.max(2) - 1;
    (0..=m).map(|i| from + (to - from) * i as f64 / m as f64).collect()
}

/// `[t0, F(t0), t1, F(t1), ...]` for the Tracy-Widom GUE distribution.
#[wasm_bindgen]
pub fn tw_curve(from: f64, to: f64, points: usize) -> Result<Vec<f64>, String> {
    let mut out = Vec::with_capacity(2 * points);
    for t in linspace(from, to, points) {
        out.push(t);
        out.push(tw_cdf(t).map_err(|e| e.to_string())?);
    }
    Ok(out)
}

/// Normalized histogram of the eigenvalues of `W / sqrt(n)` over `bins` cells
/// on `[-r, r]`, `r` the semicircle radius, followed by `r` itself.
#[wasm_bindgen]
pub fn spectrum_histogram(n: usize, kappa: f64, law: &str, seed: u64, bins: usize) -> Result<Vec<f64>, String> {
    let s = spec(n, kappa, law, seed)?;
    let w = compose_gauss_divisible(&s).map_err(|e| e.to_string())?;
    let ev = eigenvalues(&w, SpectrumScale::XOverSqrtN).map_err(|e| e.to_string())?.values;
    let r = 2.0 * (SIGMA2 + kappa).sqrt();
    let bins = bins.max(1);
    let width = 2.0 * r * 1.1 / bins as f64;
    let mut h = vec![0.0; bins];
    for x in ev {
        let k = ((x + 1.1 * r) / width).floor();
        if k >= 0.0 && (k as usize) < bins {
            h[k as usize] += 1.0 / (n as f64 * width);
        }
    }
    h.push(1.1 * r);
    Ok(h)
}

/// Bulk kernel `K(u, 0)` on a grid against the sine kernel:
/// `[u0, K0, sine0, u1, ...]`.
#[wasm_bindgen]
pub fn bulk_kernel_row(n: usize, kappa: f64, law: &str, seed: u64, span: f64, points: usize) -> Result<Vec<f64>, String> {
    let s = spec(n, kappa, law, seed)?;
    if !(kappa > 0.0) {
        return Err("kappa must be positive".into());
    }
    let (delta, _) = limiting_bulk_params(0.0, kappa).map_err(|e| e.to_string())?;
    let nf = n as f64;
    let big_s = kappa * nf;
    let x = sample_wigner(&s).map_err(|e| e.to_string())?;
    let ys = eigenvalues(&x, SpectrumScale::XOverSqrtN).map_err(|e| e.to_string())?.values;
    let nu: Vec<f64> = ys.iter().map(|y| nf * y - delta * big_s).collect();
    let g = solve_bulk_geometry(&nu, big_s).map_err(|e| e.to_string())?;
    let us = linspace(-span, span, points);
    let k = kernel_descent_grid(&g, &us, &[0.0]).map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(3 * us.len());
    for (i, &u) in us.iter().enumerate() {
        out.extend([u, k[i][0], sine_kernel(g.b, u, 0.0)]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tw_curve_is_monotone() {
        let c = tw_curve(-4.0, 2.0, 7).unwrap();
        assert_eq!(c.len(), 14);
        assert!(c.chunks(2).zip(c.chunks(2).skip(1)).all(|(a, b)| b[1] > a[1]));
        assert!((c[9] - 0.9694).abs() < 1e-3);
    }

    #[test]
    fn histogram_has_unit_mass() {
        let h = spectrum_histogram(60, 1.0, "rademacher", 5, 30).unwrap();
        let r = h[30];
        let mass: f64 = h[..30].iter().sum::<f64>() * 2.0 * r / 30.0;
        assert!((mass - 1.0).abs() < 1e-12, "{mass}");
        assert!(spectrum_histogram(10, 1.0, "cauchy", 1, 5).is_err());
    }

    #[test]
    fn kernel_row_tracks_sine() {
        let row = bulk_kernel_row(200, 1.0, "gaussian", 2, 2.0, 5).unwrap();
        assert_eq!(row.len(), 15);
        let mid = &row[6..9];
        assert_eq!(mid[0], 0.0);
        assert!((mid[1] - mid[2]).abs() < 0.1 * mid[2], "{mid:?}");
        assert!(bulk_kernel_row(20, 0.0, "gaussian", 2, 1.0, 3).is_err());
    }
}
