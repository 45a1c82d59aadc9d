//! Edge fixed point `b(nu)`, `a(nu)`, `d(nu)`, the limiting edge constants, the
//! event sets `F_n`, `G_n`, `H_n`, and the kernel near the edge evaluated on the
//! wedge contour through `b` against the vertical line `Re w = b`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quad::{graded_from_zero, Rule};
use crate::spectral::semicircle_average;

pub use crate::airy::{airy, airy_kernel, airy_kernel_integral, airy_pair, airy_prime, AiryCache, AIRY_MAX, AIRY_MIN};

const C0: Complex64 = Complex64::new(0.0, 0.0);
const CI: Complex64 = Complex64::new(0.0, 1.0);
const LOG_CUT: f64 = 40.0;
const MAX_REFINE: usize = 5;
const PREFACTOR: f64 = -1.0 / (4.0 * PI * PI);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeGeometry {
    pub s: f64,
    pub nu: Vec<f64>,
    pub b: f64,
    pub a: f64,
    pub d: f64,
    pub alpha0: f64,
    pub beta0: f64,
    /// `alpha0 <= b - nu_j/S <= beta0` for every `j`.
    pub in_f: bool,
}

fn edge_sum(nu: &[f64], s: f64, b: f64) -> f64 {
    nu.iter().map(|&x| s / (b * s - x).powi(2)).sum()
}

/// Solves `sum S/(bS - nu_j)^2 = 1` on `bS > max nu_j`.
pub fn solve_edge_geometry(nu: &[f64], s: f64, alpha0: f64, beta0: f64) -> Result<EdgeGeometry> {
    if nu.is_empty() || !(s > 0.0) {
        return Err(invalid("need at least one point and S > 0"));
    }
    if !(0.0 < alpha0 && alpha0 < beta0) {
        return Err(invalid("window needs 0 < alpha0 < beta0"));
    }
    let n = nu.len() as f64;
    let top = nu.iter().copied().fold(f64::NEG_INFINITY, f64::max) / s;
    let f = |b: f64| edge_sum(nu, s, b) - 1.0;
    let mut lo = top;
    let mut hi = top + (n / s).sqrt() * 1.01;
    while hi - lo > 1e-6 * hi.abs().max(1e-300) + 1e-300 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut b = 0.5 * (lo + hi);
    for _ in 0..60 {
        let df: f64 = nu.iter().map(|&x| -2.0 * s * s / (b * s - x).powi(3)).sum();
        let mut next = b - f(b) / df;
        if next * s <= nu.iter().copied().fold(f64::NEG_INFINITY, f64::max) {
            next = 0.5 * (b + top);
        }
        let step = (next - b).abs();
        b = next;
        if step <= 1e-15 * b.abs().max(1e-300) {
            break;
        }
    }
    let a = b + nu.iter().map(|&x| 1.0 / (b * s - x)).sum::<f64>();
    let d = nu.iter().map(|&x| s * s / (b * s - x).powi(3)).sum::<f64>().cbrt();
    let in_f = nu.iter().all(|&x| {
        let g = b - x / s;
        alpha0 <= g && g <= beta0
    });
    Ok(EdgeGeometry { s, nu: nu.to_vec(), b, a, d, alpha0, beta0, in_f })
}

impl EdgeGeometry {
    pub fn residual(&self) -> f64 {
        edge_sum(&self.nu, self.s, self.b) - 1.0
    }

    /// `d S^{1/3}`.
    pub fn scale(&self) -> f64 {
        self.d * self.s.cbrt()
    }

    /// `S f(z) = S(z^2/2 - a z) + sum log(Sz - nu_j)`.
    pub fn s_f(&self, z: Complex64) -> Complex64 {
        let s = self.s;
        let logs: Complex64 = self.nu.iter().map(|&x| (s * z - x).ln()).sum();
        s * (0.5 * z * z - self.a * z) + logs
    }

    pub fn re_f(&self, z: Complex64) -> f64 {
        let s = self.s;
        let logs: f64 = self.nu.iter().map(|&x| (s * z - x).norm().ln()).sum();
        (0.5 * z * z - self.a * z).re + logs / s
    }

    /// `f^{(k)}(b)` for `k = 1..=5` in closed form.
    pub fn derivatives(&self) -> [f64; 5] {
        let s = self.s;
        let mut p = [0.0; 5];
        for &x in &self.nu {
            let r = 1.0 / (self.b * s - x);
            p[0] += r;
            p[1] += s * r * r;
            p[2] += s * s * r * r * r;
            p[3] += s * s * s * r.powi(4);
            p[4] += s.powi(4) * r.powi(5);
        }
        [self.b - self.a + p[0], 1.0 - p[1], 2.0 * p[2], -6.0 * p[3], 24.0 * p[4]]
    }
}

/// Limiting edge quantities for `S_n = kappa n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeConstants {
    pub kappa: f64,
    /// Edge location `b0` of the level equation, so that `kappa b0 = (1+2k)/sqrt(1+4k)`.
    pub b0: f64,
    /// `kappa b0 = (1+2k)/sqrt(1+4k)`.
    pub b0_kappa: f64,
    pub gamma_per_n: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub alpha0: f64,
    pub beta0: f64,
    /// Quadrature residuals of the three defining integrals.
    pub residuals: [f64; 3],
}

pub fn edge_constants(kappa: f64) -> Result<EdgeConstants> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(invalid(format!("kappa must be > 0, got {kappa}")));
    }
    let r = (1.0 + 4.0 * kappa).sqrt();
    let y = (1.0 + 2.0 * kappa) / r;
    let b0 = y / kappa;
    let gamma_per_n = r;
    let delta = 0.5 * r;
    let epsilon = (y - 1.0) / 3.0;
    let level = semicircle_average(|x| kappa / (y - x).powi(2)) - 1.0;
    let loc = y + semicircle_average(|x| kappa / (y - x)) - gamma_per_n;
    let cube = semicircle_average(|x| kappa.powi(3) / (y - x).powi(3)) - delta.powi(3);
    let residuals = [level, loc, cube];
    if residuals.iter().any(|v| v.abs() > 1e-8) {
        return Err(Error::Numeric(format!("edge constants fail their defining integrals: {residuals:?}")));
    }
    Ok(EdgeConstants {
        kappa,
        b0,
        b0_kappa: y,
        gamma_per_n,
        delta,
        epsilon,
        alpha0: epsilon / kappa,
        beta0: b0 + (1.0 + 2.0 * epsilon) / kappa,
        residuals,
    })
}

/// `psi_beta(x) = kappa/(kappa beta - x)` on `|x| <= 1+eps`, zero for `|x| >= 1+3eps`,
/// with a quintic Hermite blend in between matching value, slope and curvature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mollifier {
    pub kappa: f64,
    pub beta: f64,
    pub epsilon: f64,
}

impl Mollifier {
    /// Needs the pole `kappa beta` at or beyond `1 + 3 eps`.
    pub fn new(kappa: f64, beta: f64, epsilon: f64) -> Result<Self> {
        if !(kappa > 0.0 && epsilon > 0.0) {
            return Err(invalid("mollifier needs kappa > 0 and eps > 0"));
        }
        if kappa * beta < (1.0 + 3.0 * epsilon) * (1.0 - 1e-14) {
            return Err(Error::Domain(format!("pole kappa*beta = {} inside the support", kappa * beta)));
        }
        Ok(Mollifier { kappa, beta, epsilon })
    }

    fn core(&self, x: f64) -> [f64; 3] {
        let r = 1.0 / (self.kappa * self.beta - x);
        let k = self.kappa;
        [k * r, k * r * r, 2.0 * k * r * r * r]
    }

    /// `(psi, psi', psi'')` at `x`.
    pub fn eval(&self, x: f64) -> [f64; 3] {
        let inner = 1.0 + self.epsilon;
        let outer = 1.0 + 3.0 * self.epsilon;
        let ax = x.abs();
        if ax <= inner {
            return self.core(x);
        }
        if ax >= outer {
            return [0.0; 3];
        }
        let x1 = inner.copysign(x);
        let h = (outer - inner).copysign(x);
        let [g0, g1, g2] = self.core(x1);
        let s = (x - x1) / h;
        let (s2, s3) = (s * s, s * s * s);
        let (s4, s5) = (s3 * s, s3 * s2);
        let h0 = [1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5, -30.0 * s2 + 60.0 * s3 - 30.0 * s4, -60.0 * s + 180.0 * s2 - 120.0 * s3];
        let h1 = [s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5, 1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4, -36.0 * s + 96.0 * s2 - 60.0 * s3];
        let h2 = [
            0.5 * s2 - 1.5 * s3 + 1.5 * s4 - 0.5 * s5,
            s - 4.5 * s2 + 6.0 * s3 - 2.5 * s4,
            1.0 - 9.0 * s + 18.0 * s2 - 10.0 * s3,
        ];
        let p = |k: usize| g0 * h0[k] + g1 * h * h1[k] + g2 * h * h * h2[k];
        [p(0), p(1) / h, p(2) / (h * h)]
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval(x)[0]
    }
}

pub fn mollifier_psi(kappa: f64, beta: f64, epsilon: f64, x: f64) -> Result<f64> {
    Ok(Mollifier::new(kappa, beta, epsilon)?.value(x))
}

/// Precomputed pieces of `G_n` and `H_n` at one `(n, kappa)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeEventParams {
    pub n: usize,
    pub constants: EdgeConstants,
    pub s_n: f64,
    pub gamma_n: f64,
    pub eps_n: f64,
    /// `int phi u` for `phi = psi'_{2b0}, psi_{b0}, psi'_{b0}, psi''_{b0}`.
    pub centers: [f64; 4],
}

impl EdgeEventParams {
    pub fn new(n: usize, kappa: f64) -> Result<Self> {
        if n < 2 {
            return Err(invalid("edge events need n >= 2"));
        }
        let c = edge_constants(kappa)?;
        let (m2, m1) = c.mollifiers()?;
        let centers = [
            semicircle_average(|x| m2.eval(x)[1]),
            semicircle_average(|x| m1.eval(x)[0]),
            semicircle_average(|x| m1.eval(x)[1]),
            semicircle_average(|x| m1.eval(x)[2]),
        ];
        Ok(EdgeEventParams {
            n,
            constants: c,
            s_n: kappa * n as f64,
            gamma_n: n as f64 * c.gamma_per_n,
            eps_n: 1.0 / (n as f64).ln(),
            centers,
        })
    }
}

impl EdgeConstants {
    /// `(psi_{2 b0}, psi_{b0})`.
    pub fn mollifiers(&self) -> Result<(Mollifier, Mollifier)> {
        Ok((Mollifier::new(self.kappa, 2.0 * self.b0, self.epsilon)?, Mollifier::new(self.kappa, self.b0, self.epsilon)?))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeMembership {
    pub in_f: bool,
    pub in_g: bool,
    pub in_h_prime: bool,
    pub in_h: bool,
    /// Centered linear statistics in the order of [`EdgeEventParams::centers`].
    pub stats: [f64; 4],
    /// `(a S_n - gamma_n)/n^{1/3}` and `d kappa^{1/3} - delta`.
    pub location_error: f64,
    pub width_error: f64,
}

/// Membership of `nu` (eigenvalues of `sqrt(n) X`) in `F_n`, `G_n`, `H_n'`, `H_n`.
pub fn membership(nu: &[f64], p: &EdgeEventParams) -> Result<EdgeMembership> {
    let c = &p.constants;
    let n = p.n as f64;
    let g = solve_edge_geometry(nu, p.s_n, c.alpha0, c.beta0)?;
    let location_error = (g.a * p.s_n - p.gamma_n) / n.cbrt();
    let width_error = g.d * c.kappa.cbrt() - c.delta;
    let in_g = g.in_f && location_error.abs() <= p.eps_n && width_error.abs() <= p.eps_n;
    let in_h_prime = nu.iter().all(|&x| (x / n).abs() <= 1.0 + c.epsilon);
    let (m2, m1) = c.mollifiers()?;
    let mut sums = [0.0; 4];
    for &x in nu {
        let t = x / n;
        let e1 = m1.eval(t);
        sums[0] += m2.eval(t)[1];
        sums[1] += e1[0];
        sums[2] += e1[1];
        sums[3] += e1[2];
    }
    let mut stats = [0.0; 4];
    for k in 0..4 {
        stats[k] = sums[k] - n * p.centers[k];
    }
    let thr = n.powf(1.0 / 6.0);
    let in_h = in_h_prime && stats.iter().all(|v| v.abs() <= thr);
    Ok(EdgeMembership { in_f: g.in_f, in_g, in_h_prime, in_h, stats, location_error, width_error })
}

/// Breakpoints in the physical parameter along a ray or half-line from the
/// touching point: geometric grading toward 0, then panels whose width follows
/// the cubic phase, ending where `logmag` is `LOG_CUT` below its running peak.
fn ray_breaks(scale: f64, reach: f64, refine: usize, logmag: impl Fn(f64) -> f64) -> Vec<f64> {
    let unit = 1.0 / scale;
    let div = (1 << refine) as f64;
    let mut br = graded_from_zero(0.5 * unit / div, 0.5 * unit / div, 0.2, 16);
    let mut tau = 0.5 / div;
    let mut peak = logmag(0.0);
    let mut below = 0;
    while below < 3 {
        let w = (0.5f64).min(1.5 / (tau * tau + reach + 1.0)) / div;
        tau += w;
        br.push(tau * unit);
        let lm = logmag(tau * unit);
        peak = peak.max(lm);
        if lm < peak - LOG_CUT {
            below += 1;
        } else {
            below = 0;
        }
        if tau > 1e4 {
            break;
        }
    }
    br
}

/// Nodes of the edge contours for one geometry and refinement level.
pub struct EdgeQuadrature {
    scale: f64,
    zs: Vec<Complex64>,
    /// `dz e^{-S(f(z) - f(b))}`.
    cz: Vec<Complex64>,
    ws: Vec<Complex64>,
    /// `dw e^{S(f(w) - f(b))}`.
    dw: Vec<Complex64>,
    b: f64,
}

impl EdgeQuadrature {
    /// Nodes accurate for `|xi|, |eta| <= reach`.
    pub fn new(g: &EdgeGeometry, reach: f64, refine: usize) -> Self {
        let rule = Rule::new(16);
        let scale = g.scale();
        let b = Complex64::new(g.b, 0.0);
        let fb = g.s_f(b).re;
        let u_reach = reach * scale;
        let mut zs = Vec::new();
        let mut cz = Vec::new();
        // outgoing ray b + t e^{5 pi i/6} and incoming ray b - t e^{i pi/6}, t >= 0
        for (dir, weight) in [(Complex64::from_polar(1.0, 5.0 * PI / 6.0), Complex64::from_polar(1.0, 5.0 * PI / 6.0)), (-Complex64::from_polar(1.0, PI / 6.0), Complex64::from_polar(1.0, PI / 6.0))] {
            let lm = |t: f64| -(g.s_f(b + dir * t).re - fb) + u_reach * (dir.re * t).abs();
            let br = ray_breaks(scale, reach, refine, lm);
            let (ts, wts) = rule.composite(&br);
            for (&t, &wt) in ts.iter().zip(&wts) {
                let z = b + dir * t;
                let e = -(g.s_f(z) - fb);
                if e.re + u_reach * (dir.re * t).abs() > -LOG_CUT - 5.0 {
                    zs.push(z);
                    cz.push(weight * wt * e.exp());
                }
            }
        }
        let mut ws = Vec::new();
        let mut dw = Vec::new();
        let lm = |s: f64| g.s_f(b + CI * s).re - fb;
        let br = ray_breaks(scale, reach, refine, lm);
        let (ss, wss) = rule.composite(&br);
        for sign in [1.0, -1.0] {
            for (&s, &wt) in ss.iter().zip(&wss) {
                let w = b + CI * (sign * s);
                let e = g.s_f(w) - fb;
                if e.re > -LOG_CUT - 5.0 {
                    ws.push(w);
                    dw.push(CI * wt * e.exp());
                }
            }
        }
        EdgeQuadrature { scale, zs, cz, ws, dw, b: g.b }
    }

    pub fn node_counts(&self) -> (usize, usize) {
        (self.zs.len(), self.ws.len())
    }

    fn inner(&self, eta: f64) -> Vec<Complex64> {
        let v = eta * self.scale;
        let dv: Vec<Complex64> = self.ws.iter().zip(&self.dw).map(|(&w, &d)| d * (-v * (w - self.b)).exp()).collect();
        self.zs.iter().map(|&z| self.ws.iter().zip(&dv).map(|(&w, &d)| d / (w - z)).sum()).collect()
    }

    fn outer(&self, xi: f64, y: &[Complex64]) -> Complex64 {
        let u = xi * self.scale;
        let s: Complex64 = self.zs.iter().zip(&self.cz).zip(y).map(|((&z, &c), &yi)| c * (u * (z - self.b)).exp() * yi).sum();
        self.scale * PREFACTOR * s
    }

    /// Scaled, conjugated kernel on the grid `xis x etas`, indexed `[ixi][ieta]`.
    pub fn grid(&self, xis: &[f64], etas: &[f64]) -> Vec<Vec<Complex64>> {
        let cols: Vec<Vec<Complex64>> = crate::par::map_indexed(etas.len(), |j| self.inner(etas[j]));
        xis.iter().map(|&x| cols.iter().map(|y| self.outer(x, y)).collect()).collect()
    }
}

/// `d S^{1/3} e^{(eta - xi) d S^{1/3} b} K(aS + xi d S^{1/3}, aS + eta d S^{1/3})` on a grid.
pub fn edge_kernel_grid(g: &EdgeGeometry, xis: &[f64], etas: &[f64]) -> Result<Vec<Vec<f64>>> {
    if g.residual().abs() > 1e-10 {
        return Err(Error::Domain("geometry does not solve the edge level equation".into()));
    }
    let reach = xis.iter().chain(etas).fold(0.0f64, |a, &x| a.max(x.abs()));
    let mut prev = EdgeQuadrature::new(g, reach, 0).grid(xis, etas);
    for r in 1..=MAX_REFINE {
        let cur = EdgeQuadrature::new(g, reach, r).grid(xis, etas);
        let mut worst = 0.0f64;
        let mut imag = 0.0f64;
        for (rc, rp) in cur.iter().zip(&prev) {
            for (c, p) in rc.iter().zip(rp) {
                worst = worst.max((c - p).norm() / (c.norm() + 1.0));
                imag = imag.max(c.im.abs());
            }
        }
        if worst <= 1e-9 {
            if imag > 1e-7 {
                return Err(Error::Numeric(format!("edge kernel has imaginary part {imag:e}")));
            }
            return Ok(cur.into_iter().map(|row| row.into_iter().map(|c| c.re).collect()).collect());
        }
        prev = cur;
    }
    Err(Error::NoConvergence("edge kernel quadrature did not settle".into()))
}

pub fn edge_kernel_scaled(g: &EdgeGeometry, xi: f64, eta: f64) -> Result<f64> {
    Ok(edge_kernel_grid(g, &[xi], &[eta])?[0][0])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeBoundReport {
    pub holds: bool,
    pub points: usize,
    pub min_margin: f64,
    /// `(contour, parameter, lhs, rhs)` of the first violation.
    pub violation: Option<(String, f64, f64, f64)>,
}

/// Checks `Re f(b+is) - f(b) <= -s^4/(8 beta0^2)` (`|s| <= beta0`), `(beta0^2 - 2s^2)/8`
/// beyond, and the analogous `1/24` bounds for `f(b) - Re f(z(t))` on both rays.
pub fn edge_bound_check(g: &EdgeGeometry, span: f64, points: usize) -> EdgeBoundReport {
    let b0 = g.beta0;
    let fb = g.re_f(Complex64::new(g.b, 0.0));
    let bound = |p: f64, k: f64| {
        if p.abs() <= b0 {
            -p.powi(4) / (k * b0 * b0)
        } else {
            (b0 * b0 - 2.0 * p * p) / k
        }
    };
    let mut rep = EdgeBoundReport { holds: true, points: 0, min_margin: f64::INFINITY, violation: None };
    let m = points.max(2);
    for i in 0..m {
        let p = -span + 2.0 * span * i as f64 / (m - 1) as f64;
        let zray = if p <= 0.0 { Complex64::from_polar(1.0, PI / 6.0) } else { Complex64::from_polar(1.0, 5.0 * PI / 6.0) };
        let checks = [
            ("w", g.re_f(Complex64::new(g.b, p)) - fb, bound(p, 8.0)),
            ("z", fb - g.re_f(g.b + zray * p), bound(p, 24.0)),
        ];
        for (name, lhs, rhs) in checks {
            rep.points += 1;
            let margin = rhs - lhs;
            rep.min_margin = rep.min_margin.min(margin);
            if margin < -1e-11 * (1.0 + lhs.abs() + fb.abs()) && rep.holds {
                rep.holds = false;
                rep.violation = Some((name.into(), p, lhs, rhs));
            }
        }
    }
    rep
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionResiduals {
    pub f1: f64,
    pub f2: f64,
    /// `|f'''(b) - 2 d^3| / (2 d^3)` with `f'''` from the Cauchy integral.
    pub f3_rel: f64,
    pub lambda: f64,
    pub lambda_window: (f64, f64),
    pub lambda_in_window: bool,
    /// Largest `|R(z-b)| / (20 alpha0^-5 |z-b|^5)` on the disc grid.
    pub remainder_ratio: f64,
}

impl ExpansionResiduals {
    pub fn holds(&self) -> bool {
        self.f1.abs() <= 1e-10 && self.f2.abs() <= 1e-10 && self.f3_rel <= 1e-6 && self.lambda_in_window && self.remainder_ratio <= 1.0
    }
}

/// Taylor structure of `f` at `b`: vanishing first and second derivatives,
/// `f''' = 2 d^3`, `lambda` in its window and the quintic remainder bound.
pub fn expansion_check(g: &EdgeGeometry) -> ExpansionResiduals {
    let der = g.derivatives();
    let b = Complex64::new(g.b, 0.0);
    // f''' by the Cauchy integral on |z - b| = r, trapezoid in the angle
    let gap = g.nu.iter().map(|&x| g.b - x / g.s).fold(f64::INFINITY, f64::min);
    let r = 0.5 * gap;
    let m = 64;
    let mut acc = C0;
    for k in 0..m {
        let th = 2.0 * PI * k as f64 / m as f64;
        let e = Complex64::from_polar(1.0, th);
        acc += g.s_f(b + r * e) / g.s * Complex64::from_polar(1.0, -3.0 * th);
    }
    let f3 = 6.0 * (acc / m as f64).re / r.powi(3);
    let d3 = g.d.powi(3);
    let d4 = g.d.powi(4);
    let lambda = -der[3] / (24.0 * d4);
    let (a0, b0) = (g.alpha0, g.beta0);
    let window = ((a0.powf(2.0 / 3.0) / b0).powi(2) / 4.0, (b0.powf(2.0 / 3.0) / a0).powi(2) / 4.0);
    let fb = g.s_f(b) / g.s;
    let mut ratio = 0.0f64;
    let rad = 0.5 * a0;
    for i in 1..=8 {
        for j in 0..16 {
            let h = Complex64::from_polar(rad * i as f64 / 8.0, 2.0 * PI * j as f64 / 16.0);
            let rem = g.s_f(b + h) / g.s - fb - d3 * h * h * h / 3.0 + lambda * d4 * h.powi(4);
            ratio = ratio.max(rem.norm() / (20.0 * a0.powi(-5) * h.norm().powi(5)));
        }
    }
    ExpansionResiduals {
        f1: der[0],
        f2: der[1],
        f3_rel: (f3 - 2.0 * d3).abs() / (2.0 * d3),
        lambda,
        lambda_window: window,
        lambda_in_window: window.0 <= lambda && lambda <= window.1,
        remainder_ratio: ratio,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn degenerate_geometries() {
        let g = solve_edge_geometry(&[0.0], 1.0, 0.5, 2.0).unwrap();
        assert_relative_eq!(g.b, 1.0, epsilon = 1e-13);
        assert_relative_eq!(g.a, 2.0, epsilon = 1e-13);
        assert_relative_eq!(g.d, 1.0, epsilon = 1e-13);
        let (n, k) = (50, 2.0);
        let g = solve_edge_geometry(&vec![0.0; n], k * n as f64, 0.1, 3.0).unwrap();
        assert_relative_eq!(g.b, 1.0 / k.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(g.a, 2.0 / k.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(g.d, k.powf(1.0 / 6.0), epsilon = 1e-12);
        assert!(g.residual().abs() < 1e-12);
    }

    #[test]
    fn constants() {
        let c = edge_constants(2.0).unwrap();
        assert_relative_eq!(c.b0_kappa, 5.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(c.b0 * 2.0, 5.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(c.gamma_per_n, 3.0, epsilon = 1e-15);
        assert_relative_eq!(c.delta, 1.5, epsilon = 1e-15);
        assert_relative_eq!(edge_constants(1.0).unwrap().delta, 5f64.sqrt() / 2.0, epsilon = 1e-15);
        for k in [0.5, 1.0, 2.0] {
            let c = edge_constants(k).unwrap();
            assert!(c.residuals.iter().all(|r| r.abs() < 1e-8));
            assert_relative_eq!(c.b0_kappa, 1.0 + 3.0 * c.epsilon, epsilon = 1e-14);
        }
        assert!(edge_constants(0.0).is_err());
    }

    #[test]
    fn mollifier_shape() {
        let c = edge_constants(1.0).unwrap();
        let m = Mollifier::new(1.0, c.b0, c.epsilon).unwrap();
        assert_relative_eq!(m.value(0.0), 1.0 / c.b0, epsilon = 1e-15);
        assert_eq!(m.value(1.0 + 3.0 * c.epsilon), 0.0);
        assert_eq!(m.value(-1.0 - 3.0 * c.epsilon), 0.0);
        // continuity of value and derivatives across both blend ends
        for x0 in [1.0 + c.epsilon, 1.0 + 3.0 * c.epsilon, -1.0 - c.epsilon, -1.0 - 3.0 * c.epsilon] {
            let (l, r) = (m.eval(x0 - 1e-12), m.eval(x0 + 1e-12));
            for k in 0..3 {
                let tol = [1e-10, 1e-8, 1e-6][k];
                assert!((l[k] - r[k]).abs() < tol, "x0={x0} k={k}: {l:?} {r:?}");
            }
        }
        let mut prev = m.value(-2.0);
        let mut worst = 0.0f64;
        let mut x = -2.0;
        while x < 2.0 {
            x += 1e-6;
            let v = m.value(x);
            worst = worst.max((v - prev).abs());
            prev = v;
        }
        assert!(worst < 1e-4);
        assert!(Mollifier::new(1.0, 1.0, c.epsilon).is_err());
        // derivative consistency inside the blend
        let x = 1.0 + 2.0 * c.epsilon;
        let h = 1e-6;
        let fd = (m.value(x + h) - m.value(x - h)) / (2.0 * h);
        assert!((fd - m.eval(x)[1]).abs() < 1e-6);
    }

    #[test]
    fn f_window_flag() {
        let g = solve_edge_geometry(&[0.0, 0.1, 0.2], 1.0, 0.5, 5.0).unwrap();
        let gmin = g.nu.iter().map(|&x| g.b - x / g.s).fold(f64::INFINITY, f64::min);
        assert_eq!(g.in_f, gmin >= 0.5);
        let tight = solve_edge_geometry(&[0.0, 0.1, 0.2], 1.0, gmin + 0.01, 5.0).unwrap();
        assert!(!tight.in_f);
    }

    #[test]
    fn expansion_for_zero_points() {
        let g = solve_edge_geometry(&[0.0; 10], 10.0, 0.5, 2.0).unwrap();
        let r = expansion_check(&g);
        assert!(r.holds(), "{r:?}");
        assert!(r.f3_rel < 1e-8);
    }

    #[test]
    fn bounds_for_zero_points() {
        let g = solve_edge_geometry(&[0.0; 8], 8.0, 0.9, 1.1).unwrap();
        let r = edge_bound_check(&g, 5.0, 101);
        assert!(r.holds, "{r:?}");
    }

    #[test]
    fn scaled_kernel_matches_reference() {
        let nu = [-0.8, 0.1, 0.6];
        let s = 3.0;
        let g = solve_edge_geometry(&nu, s, 0.05, 10.0).unwrap();
        let sc = g.scale();
        let l = 0.5 * (0.8 / s + g.b).max(0.3);
        let m = g.a.max(l + 0.3);
        for (xi, eta) in [(0.0, 0.0), (0.5, -0.3), (-0.4, 0.8)] {
            let k = edge_kernel_scaled(&g, xi, eta).unwrap();
            let kr = crate::bulk_kernel::kernel_reference(&nu, s, g.a * s + xi * sc, g.a * s + eta * sc, l, m).unwrap();
            let want = sc * ((eta - xi) * sc * g.b).exp() * kr.re;
            assert!((k - want).abs() < 1e-6, "({xi},{eta}): {k} vs {want}");
        }
    }
}
