//! Bulk fixed point `b(nu)`, `D(nu)`, `A(nu)` and the double-contour kernel of
//! non-intersecting Brownian motions, on reference rectangles and on descent
//! contours through the saddles `+-ib`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ensembles::{sample_wigner, EnsembleSpec};
use crate::error::{invalid, Error, Result};
use crate::quad::{graded_interval, uniform_breaks, Rule};
use crate::spectral::{eigenvalues, semicircle_m, SpectrumScale};

pub use crate::fredholm::sine_kernel;

const C0: Complex64 = Complex64::new(0.0, 0.0);
const CI: Complex64 = Complex64::new(0.0, 1.0);
/// Magnitudes below `e^-LOG_CUT` of the peak are dropped from the quadrature.
const LOG_CUT: f64 = 40.0;
const GRADE_RATIO: f64 = 0.2;
const GRADE_LEVELS: usize = 16;
const MAX_REFINE: usize = 6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BulkGeometry {
    pub s: f64,
    pub nu: Vec<f64>,
    pub b: f64,
    pub d: f64,
    pub a: f64,
}

fn level_sum(nu: &[f64], s: f64, b: f64) -> f64 {
    let bs2 = b * b * s * s;
    nu.iter().map(|&x| s / (x * x + bs2)).sum()
}

/// `nu` lies in `B_{n,S}` iff `sum S/nu_j^2 > 1` (infinite when some `nu_j = 0`).
pub fn in_b_ns(nu: &[f64], s: f64) -> bool {
    if !(s > 0.0) {
        return false;
    }
    if nu.iter().any(|&x| x == 0.0) {
        return true;
    }
    nu.iter().map(|&x| s / (x * x)).sum::<f64>() > 1.0
}

pub fn solve_bulk_geometry(nu: &[f64], s: f64) -> Result<BulkGeometry> {
    if nu.is_empty() || !(s > 0.0) {
        return Err(invalid("need at least one point and S > 0"));
    }
    if !in_b_ns(nu, s) {
        return Err(Error::Domain("configuration is not in B_{n,S}".into()));
    }
    let n = nu.len() as f64;
    let f = |b: f64| level_sum(nu, s, b) - 1.0;
    let hi0 = 2.0 * (n / s).sqrt();
    let mut hi = hi0;
    let mut lo = hi0;
    while f(lo) <= 0.0 {
        lo *= 0.5;
        if lo < 1e-300 {
            return Err(Error::Numeric("no bracket for b".into()));
        }
    }
    while f(hi) > 0.0 {
        hi *= 2.0;
    }
    while hi - lo > 1e-6 * hi {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut b = 0.5 * (lo + hi);
    for _ in 0..50 {
        let bs2 = b * b * s * s;
        let df: f64 = nu.iter().map(|&x| -2.0 * b * s * s * s / (x * x + bs2).powi(2)).sum();
        let step = f(b) / df;
        b -= step;
        if step.abs() <= 1e-15 * b {
            break;
        }
    }
    let bs2 = b * b * s * s;
    let d = nu.iter().map(|&x| x / (x * x + bs2)).sum();
    let a = nu.iter().map(|&x| s * s * s * b * b / (x * x + bs2).powi(2)).sum();
    Ok(BulkGeometry { s, nu: nu.to_vec(), b, d, a })
}

impl BulkGeometry {
    pub fn n(&self) -> usize {
        self.nu.len()
    }

    pub fn residual(&self) -> f64 {
        level_sum(&self.nu, self.s, self.b) - 1.0
    }

    /// `S f(z) = S(z^2/2 + D z) + sum log(Sz - nu_j)` with principal logarithms.
    pub fn s_f(&self, z: Complex64) -> Complex64 {
        let s = self.s;
        let logs: Complex64 = self.nu.iter().map(|&x| (s * z - x).ln()).sum();
        s * (0.5 * z * z + self.d * z) + logs
    }

    pub fn re_f(&self, z: Complex64) -> f64 {
        let s = self.s;
        let logs: f64 = self.nu.iter().map(|&x| (s * z - x).norm().ln()).sum();
        (0.5 * z * z + self.d * z).re + logs / s
    }
}

/// Limits `(delta, beta)` of the bulk fixed point at location `d`.
pub fn limiting_bulk_params(d: f64, kappa: f64) -> Result<(f64, f64)> {
    let r = 1.0 + 4.0 * kappa;
    if !(kappa >= 0.0) || d.abs() >= r.sqrt() {
        return Err(Error::Domain(format!("d = {d} is outside the bulk (-{0}, {0})", r.sqrt())));
    }
    Ok((-2.0 * d / r, 2.0 * (r - d * d).sqrt() / r))
}

/// Accumulates `sum_i sum_k c_i d_k / (w_k - z_i)` with the `c` and `d` factors
/// stored as logarithms and normalized by their maxima.
struct LogNodes {
    pts: Vec<Complex64>,
    logs: Vec<Complex64>,
}

impl LogNodes {
    fn new() -> Self {
        LogNodes { pts: Vec::new(), logs: Vec::new() }
    }

    fn push(&mut self, p: Complex64, log: Complex64) {
        self.pts.push(p);
        self.logs.push(log);
    }

    fn max_re(&self) -> f64 {
        self.logs.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Nodes with their factors scaled by `e^-max`, small ones dropped.
    fn scaled(&self, shift: f64) -> (Vec<Complex64>, Vec<Complex64>) {
        let mut p = Vec::with_capacity(self.pts.len());
        let mut v = Vec::with_capacity(self.pts.len());
        for (&z, &l) in self.pts.iter().zip(&self.logs) {
            let e = l - shift;
            if e.re > -LOG_CUT {
                p.push(z);
                v.push(e.exp());
            }
        }
        (p, v)
    }
}

fn double_sum(zs: &[Complex64], cs: &[Complex64], ws: &[Complex64], ds: &[Complex64]) -> Complex64 {
    let mut total = C0;
    for (&z, &c) in zs.iter().zip(cs) {
        let inner: Complex64 = ws.iter().zip(ds).map(|(&w, &d)| d / (w - z)).sum();
        total += c * inner;
    }
    total
}

/// `(1/(2 pi i)^2) = -1/(4 pi^2)`.
const PREFACTOR: f64 = -1.0 / (4.0 * PI * PI);

fn segment_nodes(rule: &Rule, a: Complex64, b: Complex64, panels: usize, mut f: impl FnMut(Complex64, Complex64)) {
    let br = uniform_breaks(0.0, 1.0, panels);
    let (ts, wts) = rule.composite(&br);
    for (t, w) in ts.iter().zip(&wts) {
        f(a + (b - a) * *t, (b - a) * *w);
    }
}

fn check_points(nu: &[f64], s: f64, l: f64, m: f64) -> Result<f64> {
    if !(s > 0.0) || nu.is_empty() {
        return Err(invalid("need at least one point and S > 0"));
    }
    let reach = nu.iter().fold(0.0f64, |acc, &x| acc.max(x.abs())) / s;
    if reach >= l {
        return Err(invalid(format!("contour too small: max |nu_j|/S = {reach} >= L = {l}")));
    }
    if !(m > l) {
        return Err(invalid("the w-line must satisfy M > L"));
    }
    Ok(l - reach)
}

/// Half-length of the `w` line beyond which `log |e^{S w^2/2} prod(Sw - nu)|`
/// is `LOG_CUT` below its peak.
fn line_extent(nu: &[f64], s: f64, m: f64, v: f64) -> f64 {
    let logmag = |y: f64| {
        let w = Complex64::new(m, y);
        (0.5 * s * w * w - v * w).re + nu.iter().map(|&x| (s * w - x).norm().ln()).sum::<f64>()
    };
    let step = 0.1 / s.sqrt().max(1.0);
    let mut peak = logmag(0.0);
    let mut y = 0.0;
    loop {
        y += step;
        let lm = logmag(y);
        peak = peak.max(lm);
        if lm < peak - LOG_CUT - 5.0 {
            return y;
        }
    }
}

fn reference_at(nu: &[f64], s: f64, u: f64, v: f64, l: f64, m: f64, refine: usize) -> Complex64 {
    let rule = Rule::new(16);
    let gap = l - nu.iter().fold(0.0f64, |acc, &x| acc.max(x.abs())) / s;
    let height = 1f64.min(2.0 / s.sqrt());
    let h = 0.5f64.min(gap / 2.0).min((m - l) / 2.0).min(0.5 * height) / (1 << refine) as f64;
    let corners = [
        Complex64::new(-l, -height),
        Complex64::new(l, -height),
        Complex64::new(l, height),
        Complex64::new(-l, height),
    ];
    let log_c = |z: Complex64| -> Complex64 {
        let logs: Complex64 = nu.iter().map(|&x| (s * z - x).ln()).sum();
        -0.5 * s * z * z + u * z - logs
    };
    let mut zn = LogNodes::new();
    for k in 0..4 {
        let (a, b) = (corners[k], corners[(k + 1) % 4]);
        let panels = ((b - a).norm() / h).ceil() as usize;
        segment_nodes(&rule, a, b, panels, |z, dz| zn.push(z, log_c(z) + dz.ln()));
    }
    let log_d = |w: Complex64| -> Complex64 {
        let logs: Complex64 = nu.iter().map(|&x| (s * w - x).ln()).sum();
        0.5 * s * w * w - v * w + logs
    };
    let ext = line_extent(nu, s, m, v);
    let mut wn = LogNodes::new();
    let panels = (2.0 * ext / h).ceil() as usize;
    segment_nodes(&rule, Complex64::new(m, -ext), Complex64::new(m, ext), panels, |w, dw| wn.push(w, log_d(w) + dw.ln()));
    let (mc, md) = (zn.max_re(), wn.max_re());
    let (zs, cs) = zn.scaled(mc);
    let (ws, ds) = wn.scaled(md);
    PREFACTOR * double_sum(&zs, &cs, &ws, &ds) * (mc + md).exp()
}

/// `K^nu_{n,S}(u, v)` from the rescaled double integral over the rectangle with
/// corners `+-L +- ih`, `h = min(1, 2/sqrt(S))`, and the line `Re w = M`, refined until panel halving
/// changes the value by at most `1e-8` relative.
pub fn kernel_reference(nu: &[f64], s: f64, u: f64, v: f64, l: f64, m: f64) -> Result<Complex64> {
    check_points(nu, s, l, m)?;
    let mut prev = reference_at(nu, s, u, v, l, m, 0);
    for r in 1..=MAX_REFINE {
        let cur = reference_at(nu, s, u, v, l, m, r);
        if (cur - prev).norm() <= 1e-8 * cur.norm() + 1e-13 {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::NoConvergence("reference kernel quadrature did not settle".into()))
}

/// Descent-contour nodes for one geometry and refinement level.
pub struct DescentQuadrature {
    geom: BulkGeometry,
    zs: Vec<Complex64>,
    /// `dz e^{-S(f(z) - f0)}`.
    cz: Vec<Complex64>,
    ws: Vec<Complex64>,
    /// `dw e^{S(f(w) - f0)}`.
    dw: Vec<Complex64>,
}

impl DescentQuadrature {
    /// Nodes accurate for `|u|, |v| <= reach`.
    pub fn new(geom: &BulkGeometry, reach: f64, refine: usize) -> Self {
        let rule = Rule::new(16);
        let (b, sa) = (geom.b, geom.s * geom.a);
        let h = (1.0 / sa.sqrt()).min(0.5 / (1.0 + reach)).min(0.5 * b) / (1 << refine) as f64;
        // e^{-SA t^2/6 + reach t} below e^-LOG_CUT
        let q = sa / 6.0;
        let tmax = (reach + (reach * reach + 4.0 * q * LOG_CUT).sqrt()) / (2.0 * q);
        let f0 = geom.s_f(Complex64::new(0.0, b)).re;

        let tb = graded_interval(0.0, tmax, true, false, h, GRADE_RATIO, GRADE_LEVELS);
        let mut tbr: Vec<f64> = tb.iter().rev().map(|t| -t).collect();
        tbr.pop();
        tbr.extend(&tb);
        let (ts, wts) = rule.composite(&tbr);
        let mut zs = Vec::with_capacity(2 * ts.len());
        let mut cz = Vec::with_capacity(2 * ts.len());
        for (sign, orient) in [(1.0, -1.0), (-1.0, 1.0)] {
            for (&t, &wt) in ts.iter().zip(&wts) {
                let r = (t * t / 3.0 + b * b).sqrt();
                let z = Complex64::new(t, sign * r);
                let dz = Complex64::new(1.0, sign * t / (3.0 * r)) * (orient * wt);
                let e = -(geom.s_f(z) - f0);
                if e.re > -LOG_CUT - reach * t.abs() {
                    zs.push(z);
                    cz.push(dz * e.exp());
                }
            }
        }

        let smax = (LOG_CUT / q).sqrt();
        let mut yb = Vec::new();
        let mut push_seg = |a: f64, c: f64, sa_: bool, sb: bool| {
            let seg = graded_interval(a, c, sa_, sb, h, GRADE_RATIO, GRADE_LEVELS);
            if !yb.is_empty() {
                yb.pop();
            }
            yb.extend(seg);
        };
        push_seg(-b - smax, -b, false, true);
        push_seg(-b, 0.0, true, false);
        push_seg(0.0, b, false, true);
        push_seg(b, b + smax, true, false);
        let (ys, wys) = rule.composite(&yb);
        let mut ws = Vec::with_capacity(ys.len());
        let mut dw = Vec::with_capacity(ys.len());
        for (&y, &wy) in ys.iter().zip(&wys) {
            let w = Complex64::new(0.0, y);
            let e = geom.s_f(w) - f0;
            if e.re > -LOG_CUT {
                ws.push(w);
                dw.push(CI * wy * e.exp());
            }
        }
        DescentQuadrature { geom: geom.clone(), zs, cz, ws, dw }
    }

    pub fn node_counts(&self) -> (usize, usize) {
        (self.zs.len(), self.ws.len())
    }

    /// `Y_i(v) = sum_k d_k e^{-v w_k} / (w_k - z_i)`.
    fn inner(&self, v: f64) -> Vec<Complex64> {
        let dv: Vec<Complex64> = self.ws.iter().zip(&self.dw).map(|(&w, &d)| d * (-v * w).exp()).collect();
        self.zs.iter().map(|&z| self.ws.iter().zip(&dv).map(|(&w, &d)| d / (w - z)).sum()).collect()
    }

    fn outer(&self, u: f64, y: &[Complex64]) -> Complex64 {
        let s: Complex64 = self.zs.iter().zip(&self.cz).zip(y).map(|((&z, &c), &yi)| c * (u * z).exp() * yi).sum();
        PREFACTOR * s
    }

    /// `K~(u, v)` of the descent representation.
    pub fn tilde(&self, u: f64, v: f64) -> Complex64 {
        self.outer(u, &self.inner(v))
    }

    /// `K~` on the grid `us x vs`, indexed `[iu][iv]`.
    pub fn tilde_grid(&self, us: &[f64], vs: &[f64]) -> Vec<Vec<Complex64>> {
        let cols: Vec<Vec<Complex64>> = crate::par::map_indexed(vs.len(), |j| self.inner(vs[j]));
        us.iter().map(|&u| cols.iter().map(|y| self.outer(u, y)).collect()).collect()
    }

    pub fn geometry(&self) -> &BulkGeometry {
        &self.geom
    }
}

fn settle_grid(geom: &BulkGeometry, us: &[f64], vs: &[f64]) -> Result<Vec<Vec<f64>>> {
    let reach = us.iter().chain(vs).fold(0.0f64, |a, &x| a.max(x.abs()));
    let mut prev = DescentQuadrature::new(geom, reach, 0).tilde_grid(us, vs);
    for r in 1..=MAX_REFINE {
        let cur = DescentQuadrature::new(geom, reach, r).tilde_grid(us, vs);
        let mut worst = 0.0f64;
        let mut imag = 0.0f64;
        for (rc, rp) in cur.iter().zip(&prev) {
            for (c, p) in rc.iter().zip(rp) {
                worst = worst.max((c - p).norm() / (c.norm() + geom.b / PI));
                imag = imag.max(c.im.abs());
            }
        }
        if worst <= 1e-8 {
            if imag > 1e-7 {
                return Err(Error::Numeric(format!("descent kernel has imaginary part {imag:e}")));
            }
            return Ok(us
                .iter()
                .zip(&cur)
                .map(|(&u, row)| vs.iter().zip(row).map(|(&v, k)| sine_kernel(geom.b, u, v) + k.re).collect())
                .collect());
        }
        prev = cur;
    }
    Err(Error::NoConvergence("descent kernel quadrature did not settle".into()))
}

/// `K^nu_{n,S}(u - SD, v - SD) = sine(b; u, v) + K~(u, v)` on descent contours.
pub fn kernel_descent(geom: &BulkGeometry, u: f64, v: f64) -> Result<f64> {
    Ok(settle_grid(geom, &[u], &[v])?[0][0])
}

/// [`kernel_descent`] on a grid, indexed `[iu][iv]`.
pub fn kernel_descent_grid(geom: &BulkGeometry, us: &[f64], vs: &[f64]) -> Result<Vec<Vec<f64>>> {
    if geom.residual().abs() > 1e-10 {
        return Err(Error::Domain("geometry does not solve the level equation".into()));
    }
    settle_grid(geom, us, vs)
}

/// CSV rows `u,v,K`.
pub fn kernel_field_csv(us: &[f64], vs: &[f64], k: &[Vec<f64>]) -> String {
    let mut s = String::from("u,v,K\n");
    for (iu, &u) in us.iter().enumerate() {
        for (iv, &v) in vs.iter().enumerate() {
            let _ = writeln!(s, "{u},{v},{:.15e}", k[iu][iv]);
        }
    }
    s
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DescentViolation {
    pub contour: String,
    pub param: f64,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DescentBoundReport {
    pub holds: bool,
    pub points: usize,
    /// Smallest `rhs - lhs` seen (negative on violation).
    pub min_margin: f64,
    pub violation: Option<DescentViolation>,
}

/// Checks `Re(f(w+-(s)) - f(+-ib)) <= -A s^2/6` and
/// `Re(f(+-ib) - f(z+-(t))) <= -A t^2/6` on a grid of `points` values of `s` and
/// `t` in `[-span, span]` per contour.
pub fn descent_bound_check_grid(geom: &BulkGeometry, span: f64, points: usize) -> DescentBoundReport {
    let b = geom.b;
    let a6 = geom.a / 6.0;
    let fp = geom.re_f(Complex64::new(0.0, b));
    let fm = geom.re_f(Complex64::new(0.0, -b));
    let tol = |x: f64| 1e-11 * (1.0 + x.abs() + fp.abs());
    let mut rep = DescentBoundReport { holds: true, points: 0, min_margin: f64::INFINITY, violation: None };
    let mut record = |name: &str, p: f64, lhs: f64, rhs: f64| {
        rep.points += 1;
        let margin = rhs - lhs;
        rep.min_margin = rep.min_margin.min(margin);
        if margin < -tol(lhs) && rep.holds {
            rep.holds = false;
            rep.violation = Some(DescentViolation { contour: name.into(), param: p, lhs, rhs });
        }
    };
    let m = points.max(2);
    for k in 0..m {
        let p = -span + 2.0 * span * k as f64 / (m - 1) as f64;
        let rhs = -a6 * p * p;
        if p + b >= 0.0 {
            record("w+", p, geom.re_f(CI * (p + b)) - fp, rhs);
        }
        if -p + b >= 0.0 {
            record("w-", p, geom.re_f(CI * (p - b)) - fm, rhs);
        }
        let r = (p * p / 3.0 + b * b).sqrt();
        record("z+", p, fp - geom.re_f(Complex64::new(p, r)), rhs);
        record("z-", p, fm - geom.re_f(Complex64::new(p, -r)), rhs);
    }
    rep
}

pub fn descent_bound_check(geom: &BulkGeometry) -> DescentBoundReport {
    descent_bound_check_grid(geom, 10.0, 101)
}

/// Monte Carlo estimate of `E_X[m_n(z)]` from stored spectra of `X/sqrt(n)`.
#[derive(Clone, Debug)]
pub struct MeanStieltjes {
    pub spectra: Vec<Vec<f64>>,
}

impl MeanStieltjes {
    /// `replicas` independent samples at `spec.n` and `spec.law`, seeds derived from `spec.seed`.
    pub fn estimate(spec: &EnsembleSpec, replicas: usize) -> Result<Self> {
        if replicas == 0 {
            return Err(invalid("need at least one replica"));
        }
        let spectra: Result<Vec<Vec<f64>>> = crate::par::map_indexed(replicas, |r| {
            let x = sample_wigner(&spec.with_seed(crate::rng::replica_seed(spec.seed, r)))?;
            Ok(eigenvalues(&x, SpectrumScale::XOverSqrtN)?.values)
        })
        .into_iter()
        .collect();
        Ok(MeanStieltjes { spectra: spectra? })
    }

    pub fn from_spectra(spectra: Vec<Vec<f64>>) -> Self {
        MeanStieltjes { spectra }
    }

    /// `(E m_n(z), E m_n'(z))`.
    pub fn eval(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut m = C0;
        let mut dm = C0;
        let mut count = 0.0;
        for ys in &self.spectra {
            for &y in ys {
                let r = (y - z).inv();
                m += r;
                dm += r * r;
            }
            count += ys.len() as f64;
        }
        (m / count, dm / count)
    }

    /// Solves `E m_n(d + kappa z) = z` by Newton from the limiting `delta + beta i`.
    pub fn fixed_point(&self, d: f64, kappa: f64) -> Result<Complex64> {
        let (delta, beta) = limiting_bulk_params(d, kappa)?;
        let mut z = Complex64::new(delta, beta);
        for _ in 0..100 {
            let (m, dm) = self.eval(d + kappa * z);
            let g = m - z;
            let dg = kappa * dm - 1.0;
            let step = g / dg;
            z -= step;
            if z.im <= 0.0 {
                z.im = 1e-3;
            }
            if step.norm() < 1e-14 {
                return Ok(z);
            }
        }
        Err(Error::NoConvergence("fixed point for delta_n + i beta_n".into()))
    }
}

/// Sequences entering the event sets `C_n` and `V_n` at one `(n, d, kappa)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventParams {
    pub n: usize,
    pub d: f64,
    pub kappa: f64,
    pub s_n: f64,
    pub omega_n: f64,
    pub alpha: f64,
    pub delta: f64,
    pub beta: f64,
    pub delta_n: f64,
    pub beta_n: f64,
    /// `c_n = d/kappa + delta_n`; the shifted points are `nu_j = y_j - c_n S_n`.
    pub c_n: f64,
    /// `(tau, E m_n(kappa c_n + kappa tau i))` for the four `tau` of `V_n`.
    pub mean_at_tau: Vec<(f64, Complex64)>,
}

/// A quarter of `(1/2beta) Im m(kc + 2k beta i) - (1/3beta) Im m(kc + 3k beta i)`.
pub fn lemma_alpha(d: f64, kappa: f64) -> Result<f64> {
    let (delta, beta) = limiting_bulk_params(d, kappa)?;
    let kc = d + kappa * delta;
    let m2 = semicircle_m(Complex64::new(kc, 2.0 * kappa * beta)).im / (2.0 * beta);
    let m3 = semicircle_m(Complex64::new(kc, 3.0 * kappa * beta)).im / (3.0 * beta);
    Ok(0.25 * (m2 - m3))
}

impl EventParams {
    pub fn new(n: usize, d: f64, kappa: f64, mean: &MeanStieltjes) -> Result<Self> {
        if !(kappa > 0.0) || n < 2 {
            return Err(invalid("event sets need kappa > 0 and n >= 2"));
        }
        let (delta, beta) = limiting_bulk_params(d, kappa)?;
        let fp = mean.fixed_point(d, kappa)?;
        let c_n = d / kappa + fp.re;
        let taus = [fp.im, 0.5 * beta, 2.0 * beta, 3.0 * beta];
        let mean_at_tau = taus.iter().map(|&t| (t, mean.eval(Complex64::new(kappa * c_n, kappa * t)).0)).collect();
        Ok(EventParams {
            n,
            d,
            kappa,
            s_n: kappa * n as f64,
            omega_n: (n as f64).ln().sqrt(),
            alpha: lemma_alpha(d, kappa)?,
            delta,
            beta,
            delta_n: fp.re,
            beta_n: fp.im,
            c_n,
            mean_at_tau,
        })
    }

    /// `nu_j = y_j - c_n S_n` from eigenvalues of `X/sqrt(n)`.
    pub fn shift(&self, x_over_sqrt_n: &[f64]) -> Vec<f64> {
        let n = self.n as f64;
        x_over_sqrt_n.iter().map(|&x| n * x - self.c_n * self.s_n).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventMembership {
    pub in_b: bool,
    pub in_c: bool,
    pub in_v: bool,
    pub geometry: Option<(f64, f64, f64)>,
}

/// Membership of shifted points in `B_{n,S_n}`, `C_n` and `V_n`.
pub fn event_sets(nu_shifted: &[f64], p: &EventParams) -> EventMembership {
    let s = p.s_n;
    let n = p.n as f64;
    let in_b = in_b_ns(nu_shifted, s);
    let geom = if in_b { solve_bulk_geometry(nu_shifted, s).ok() } else { None };
    let in_c = geom.as_ref().is_some_and(|g| {
        g.a >= p.alpha && (g.b - p.beta_n).abs() <= 1.0 / p.omega_n && (g.d - p.delta_n).abs() <= (p.omega_n * p.alpha / s).sqrt()
    });
    let thr = (p.omega_n / n).sqrt();
    let in_v = p.mean_at_tau.iter().all(|&(tau, mean)| {
        // m_n(kappa c_n + z) = (1/n) sum 1/(nu_j/n - z)
        let z = Complex64::new(0.0, p.kappa * tau);
        let m: Complex64 = nu_shifted.iter().map(|&x| (x / n - z).inv()).sum::<Complex64>() / n;
        (m - mean).norm() <= thr
    });
    EventMembership { in_b, in_c, in_v, geometry: geom.map(|g| (g.b, g.d, g.a)) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::ElementLaw;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn b_membership() {
        assert!(!in_b_ns(&[2.0], 1.0));
        assert!(in_b_ns(&[0.0, 5.0], 1.0));
        let g = solve_bulk_geometry(&[0.0; 6], 3.0).unwrap();
        assert_relative_eq!(g.b, (6.0f64 / 3.0).sqrt(), epsilon = 1e-13);
        assert_relative_eq!(g.a, 1.0, epsilon = 1e-12);
        assert_eq!(g.d, 0.0);
        assert!(solve_bulk_geometry(&[2.0], 1.0).is_err());
    }

    #[test]
    fn limiting_params() {
        assert_eq!(limiting_bulk_params(0.0, 0.0).unwrap(), (0.0, 2.0));
        let (_, b) = limiting_bulk_params(0.0, 1.0).unwrap();
        assert_relative_eq!(b, 2.0 * 5f64.sqrt() / 5.0, epsilon = 1e-15);
        for (d, k) in [(0.3, 1.0), (-1.2, 2.0), (0.5, 0.0)] {
            let (de, be) = limiting_bulk_params(d, k).unwrap();
            let z = Complex64::new(de, be);
            assert!((semicircle_m(d + k * z) - z).norm() < 1e-10);
        }
        assert!(limiting_bulk_params(2.3, 1.0).is_err());
    }

    #[test]
    fn sine_kernel_values() {
        assert_relative_eq!(sine_kernel(1.7, 0.4, 0.4), 1.7 / PI, epsilon = 1e-15);
        assert!(sine_kernel(PI, 1.0, 0.0).abs() < 1e-15);
        assert_eq!(sine_kernel(2.0, 0.3, -1.1), sine_kernel(2.0, -1.1, 0.3));
    }

    #[test]
    fn reference_single_point_closed_form() {
        // one path from 0: K(u, v) = exp(-v^2/2S)/sqrt(2 pi S)
        for (s, u, v) in [(1.0, 0.0, 0.0), (1.0, 0.7, -0.4), (2.5, -1.0, 0.5)] {
            let k = kernel_reference(&[0.0], s, u, v, 0.75, 1.25).unwrap();
            let want = (-v * v / (2.0 * s)).exp() / (2.0 * PI * s).sqrt();
            assert!((k - want).norm() < 1e-9, "{k} vs {want}");
        }
        assert!(kernel_reference(&[3.0], 1.0, 0.0, 0.0, 2.0, 3.0).is_err());
    }

    #[test]
    fn reference_translation_covariance() {
        let y = [0.4, -1.1, 2.3];
        let (s, c) = (2.0, 0.3);
        let nu: Vec<f64> = y.iter().map(|x| x - c * s).collect();
        let (u, v) = (0.2, -0.5);
        let lhs = kernel_reference(&y, s, u + c * s, v + c * s, 2.0, 2.5).unwrap();
        let fac = (((u + c * s).powi(2) - (v + c * s).powi(2) + v * v - u * u) / (2.0 * s)).exp();
        let rhs = fac * kernel_reference(&nu, s, u, v, 2.0, 2.5).unwrap();
        assert!((lhs - rhs).norm() < 1e-8 * rhs.norm().max(1.0), "{lhs} vs {rhs}");
        assert!(lhs.im.abs() < 1e-8);
    }

    #[test]
    fn descent_matches_reference_small() {
        let nu = [-2.0, 0.5, 3.0];
        let s = 5.0;
        let g = solve_bulk_geometry(&nu, s).unwrap();
        for (u, v) in [(0.0, 0.0), (0.3, -0.2), (-0.5, 0.4)] {
            let kd = kernel_descent(&g, u, v).unwrap();
            let kr = kernel_reference(&nu, s, u - s * g.d, v - s * g.d, 1.5, 2.0).unwrap();
            assert!((kd - kr.re).abs() < 1e-6, "u={u} v={v}: {kd} vs {kr}");
        }
    }

    #[test]
    fn descent_bounds_for_zero_points() {
        let g = solve_bulk_geometry(&[0.0; 4], 4.0).unwrap();
        let r = descent_bound_check(&g);
        assert!(r.holds, "{r:?}");
        // base points give equality
        let r0 = descent_bound_check_grid(&g, 0.0, 2);
        assert!(r0.min_margin.abs() < 1e-12);
    }

    #[test]
    fn events_for_gaussian_sample() {
        let spec = EnsembleSpec::new(60, ElementLaw::Gaussian, 1.0, 5).unwrap();
        let mean = MeanStieltjes::estimate(&spec, 8).unwrap();
        let p = EventParams::new(60, 0.0, 1.0, &mean).unwrap();
        assert!((p.beta_n - p.beta).abs() < 0.05);
        assert!((p.alpha - 0.039).abs() < 1e-3);
        let x = sample_wigner(&spec.with_seed(999)).unwrap();
        let ev = eigenvalues(&x, SpectrumScale::XOverSqrtN).unwrap();
        let m = event_sets(&p.shift(&ev.values), &p);
        assert!(m.in_b && m.in_c && m.in_v, "{m:?}");
        // A(nu) below alpha
        let far: Vec<f64> = vec![1e6; 60];
        assert!(!event_sets(&far, &p).in_c);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn level_equation_residual(nu in prop::collection::vec(-50.0f64..50.0, 1..40), s in 0.5f64..80.0) {
            prop_assume!(in_b_ns(&nu, s));
            let g = solve_bulk_geometry(&nu, s).unwrap();
            prop_assert!(g.residual().abs() <= 1e-12);
            prop_assert!(g.a > 0.0 && g.a <= nu.len() as f64 / (g.b * g.b * s) * (1.0 + 1e-12));
        }

        #[test]
        fn symmetric_points_have_zero_d(half in prop::collection::vec(0.1f64..20.0, 1..20), s in 1.0f64..40.0) {
            let nu: Vec<f64> = half.iter().flat_map(|&x| [x, -x]).collect();
            prop_assume!(in_b_ns(&nu, s));
            let g = solve_bulk_geometry(&nu, s).unwrap();
            prop_assert!(g.d.abs() <= 1e-14 * (1.0 + nu.len() as f64 / s));
        }
    }
}
