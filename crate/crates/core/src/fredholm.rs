//! Fredholm determinants by Nyström discretization with Gauss–Legendre nodes.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::airy::{airy_kernel_from_values, airy_pair_unchecked};
use crate::error::{invalid, Error, Result};
use crate::linalg::det_real;
use crate::quad::Rule;

pub const ORDER_CAP: usize = 2048;
pub const TOL_ANALYTIC: f64 = 1e-10;
pub const TOL_CONTOUR: f64 = 1e-6;

/// A real bivariate kernel.
pub trait Kernel: Sync {
    fn eval(&self, x: f64, y: f64) -> f64;

    /// Row-major matrix `K(x_i, x_j)`.
    fn matrix(&self, xs: &[f64]) -> Vec<f64> {
        let m = xs.len();
        let mut out = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                out[i * m + j] = self.eval(xs[i], xs[j]);
            }
        }
        out
    }
}

impl<F: Fn(f64, f64) -> f64 + Sync> Kernel for F {
    fn eval(&self, x: f64, y: f64) -> f64 {
        self(x, y)
    }
}

/// `sin(b(u-v)) / (pi(u-v))`, equal to `b/pi` on the diagonal.
pub fn sine_kernel(b: f64, u: f64, v: f64) -> f64 {
    let h = u - v;
    if h.abs() < 1e-8 {
        // sin(bh)/(pi h) = (b/pi)(1 - (bh)^2/6 + ...)
        return b / PI * (1.0 - (b * h) * (b * h) / 6.0);
    }
    (b * h).sin() / (PI * h)
}

#[derive(Clone, Copy, Debug)]
pub struct SineKernel {
    pub b: f64,
}

impl Kernel for SineKernel {
    fn eval(&self, x: f64, y: f64) -> f64 {
        sine_kernel(self.b, x, y)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct AiryKernel;

impl Kernel for AiryKernel {
    fn eval(&self, x: f64, y: f64) -> f64 {
        crate::airy::airy_kernel(x, y)
    }

    fn matrix(&self, xs: &[f64]) -> Vec<f64> {
        let vals: Vec<(f64, f64)> = xs.iter().map(|&x| airy_pair_unchecked(x)).collect();
        let m = xs.len();
        let mut out = vec![0.0; m * m];
        for i in 0..m {
            for j in i..m {
                let v = airy_kernel_from_values(xs[i], xs[j], vals[i], vals[j]);
                out[i * m + j] = v;
                out[j * m + i] = v;
            }
        }
        out
    }
}

/// Finite-rank kernel `sum_k f_k(x) g_k(y)` with polynomial factors given by
/// ascending coefficient lists.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteRank {
    pub f: Vec<Vec<f64>>,
    pub g: Vec<Vec<f64>>,
}

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

impl Kernel for FiniteRank {
    fn eval(&self, x: f64, y: f64) -> f64 {
        self.f.iter().zip(&self.g).map(|(f, g)| poly(f, x) * poly(g, y)).sum()
    }
}

impl FiniteRank {
    pub fn rank(&self) -> usize {
        self.f.len()
    }

    /// `self - other` as a finite-rank kernel.
    pub fn minus(&self, other: &FiniteRank) -> FiniteRank {
        let mut f = self.f.clone();
        let mut g = self.g.clone();
        for (a, b) in other.f.iter().zip(&other.g) {
            f.push(a.iter().map(|c| -c).collect());
            g.push(b.clone());
        }
        FiniteRank { f, g }
    }

    fn max_degree(&self) -> usize {
        self.f.iter().chain(&self.g).map(|c| c.len()).max().unwrap_or(1)
    }

    /// `int_a^b p(x) q(x) dx`, exact for polynomials.
    fn inner(&self, a: f64, b: f64, p: &[f64], q: &[f64]) -> f64 {
        let rule = Rule::new(self.max_degree() + 2);
        rule.integrate(&[a, b], |x| poly(p, x) * poly(q, x))
    }

    /// Exact `det(I - K)` on `L^2(a, b)` via the `r x r` matrix `delta_kl - <g_k, f_l>`.
    pub fn exact_det(&self, a: f64, b: f64) -> f64 {
        let r = self.rank();
        let mut m = vec![0.0; r * r];
        for k in 0..r {
            for l in 0..r {
                m[k * r + l] = if k == l { 1.0 } else { 0.0 } - self.inner(a, b, &self.g[k], &self.f[l]);
            }
        }
        det_real(r, m)
    }

    pub fn exact_trace(&self, a: f64, b: f64) -> f64 {
        (0..self.rank()).map(|k| self.inner(a, b, &self.f[k], &self.g[k])).sum()
    }

    pub fn exact_hs_norm(&self, a: f64, b: f64) -> f64 {
        let r = self.rank();
        let mut s = 0.0;
        for k in 0..r {
            for l in 0..r {
                s += self.inner(a, b, &self.f[k], &self.f[l]) * self.inner(a, b, &self.g[k], &self.g[l]);
            }
        }
        s.max(0.0).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    /// `[a, b]` split at the interior `breaks` (kernel or weight kinks).
    Interval { a: f64, b: f64, breaks: Vec<f64> },
    /// `(start, inf)` mapped to (0, 1) by `u = exp(-(x - start)/scale)`.
    HalfLine { start: f64, scale: f64 },
}

impl Domain {
    pub fn interval(a: f64, b: f64) -> Self {
        Domain::Interval { a, b, breaks: Vec::new() }
    }

    /// Nodes and weights with about `order` nodes in total.
    pub fn nodes(&self, order: usize) -> (Vec<f64>, Vec<f64>) {
        match self {
            Domain::Interval { a, b, breaks } => {
                let mut br = vec![*a];
                br.extend(breaks.iter().copied().filter(|x| x > a && x < b));
                br.push(*b);
                let per = (order / (br.len() - 1)).max(4);
                Rule::new(per).composite(&br)
            }
            Domain::HalfLine { start, scale } => {
                let (us, ws) = Rule::new(order).composite(&[0.0, 1.0]);
                let xs = us.iter().map(|u| start - scale * u.ln()).collect();
                let wx = us.iter().zip(&ws).map(|(u, w)| scale * w / u).collect();
                (xs, wx)
            }
        }
    }
}

/// A determinant `det(I - phi^{1/2} K phi^{1/2})` on a domain; `phi = 1` when absent.
pub struct FredholmProblem<'a> {
    pub kernel: &'a dyn Kernel,
    pub domain: Domain,
    pub order: usize,
    pub weight: Option<&'a (dyn Fn(f64) -> f64 + Sync)>,
    pub tol: f64,
}

impl<'a> FredholmProblem<'a> {
    pub fn new(kernel: &'a dyn Kernel, domain: Domain) -> Self {
        FredholmProblem { kernel, domain, order: 16, weight: None, tol: TOL_ANALYTIC }
    }

    pub fn with_weight(mut self, w: &'a (dyn Fn(f64) -> f64 + Sync)) -> Self {
        self.weight = Some(w);
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_order(mut self, order: usize) -> Self {
        self.order = order;
        self
    }

    /// Determinant of the node matrix at a fixed order.
    pub fn det_at(&self, order: usize) -> f64 {
        let (xs, ws) = self.domain.nodes(order);
        let m = xs.len();
        let sw: Vec<f64> = xs
            .iter()
            .zip(&ws)
            .map(|(&x, &w)| {
                let phi = self.weight.map_or(1.0, |f| f(x));
                (phi * w).max(0.0).sqrt()
            })
            .collect();
        let mut a = self.kernel.matrix(&xs);
        for i in 0..m {
            for j in 0..m {
                let v = -sw[i] * a[i * m + j] * sw[j];
                a[i * m + j] = if i == j { 1.0 + v } else { v };
            }
        }
        det_real(m, a)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetResult {
    pub value: f64,
    pub order_used: usize,
    pub convergence_gap: f64,
}

/// Doubles the order from `problem.order` until two successive values differ by
/// at most `problem.tol`.
pub fn nystrom_det(problem: &FredholmProblem) -> Result<DetResult> {
    if problem.order < 8 {
        return Err(invalid("Nyström order must be at least 8"));
    }
    let mut m = problem.order;
    let mut prev = problem.det_at(m);
    while m * 2 <= ORDER_CAP {
        m *= 2;
        let cur = problem.det_at(m);
        let gap = (cur - prev).abs();
        if gap <= problem.tol {
            return Ok(DetResult { value: cur, order_used: m, convergence_gap: gap });
        }
        prev = cur;
    }
    Err(Error::NoConvergence(format!("Fredholm determinant not converged at order {ORDER_CAP}")))
}

pub const TW_MIN: f64 = -10.0;
pub const TW_MAX: f64 = 8.0;

/// Scale of the half-line map so that the Airy kernel's effective support
/// `[t, max(t, 0) + 8]` covers `u` down to about `e^-7`.
fn tw_scale(t: f64) -> f64 {
    ((-t).max(0.0) + 8.0) / 7.0
}

/// Tracy–Widom (GUE) distribution `F(t) = det(I - A)` on `L^2(t, inf)`.
pub fn tw_cdf(t: f64) -> Result<f64> {
    tw_cdf_detail(t).map(|r| r.value)
}

pub fn tw_cdf_detail(t: f64) -> Result<DetResult> {
    if !(TW_MIN..=TW_MAX).contains(&t) {
        return Err(invalid(format!("tw_cdf argument {t} outside [{TW_MIN}, {TW_MAX}]")));
    }
    let k = AiryKernel;
    let p = FredholmProblem::new(&k, Domain::HalfLine { start: t, scale: tw_scale(t).max(1.0) });
    let r = nystrom_det(&p)?;
    Ok(DetResult { value: r.value.clamp(0.0, 1.0), ..r })
}

/// `(t, F(t))` rows on a grid.
pub fn tw_table(t0: f64, t1: f64, step: f64) -> Result<Vec<(f64, f64)>> {
    if !(step > 0.0) || t1 < t0 {
        return Err(invalid("tw_table needs t0 <= t1 and step > 0"));
    }
    let count = ((t1 - t0) / step + 1e-9).floor() as usize + 1;
    let ts: Vec<f64> = (0..count).map(|k| t0 + step * k as f64).collect();
    crate::par::map_indexed(ts.len(), |i| tw_cdf(ts[i]).map(|f| (ts[i], f))).into_iter().collect()
}

/// `det(I - phi^{1/2} K phi^{1/2})` with `phi = 1 - exp(-psi)`; the domain must
/// contain the support of `psi`.
pub fn laplace_functional(kernel: &dyn Kernel, psi: &(dyn Fn(f64) -> f64 + Sync), domain: Domain, tol: f64) -> Result<DetResult> {
    let (xs, _) = domain.nodes(256);
    if xs.iter().any(|&x| psi(x) < 0.0) {
        return Err(invalid("psi must be nonnegative"));
    }
    let phi = |x: f64| -(-psi(x)).exp_m1();
    let p = FredholmProblem::new(kernel, domain).with_weight(&phi).with_tol(tol);
    nystrom_det(&p)
}

/// Smooth bump `1 - S(|x|)` on [-1, 1], `S(t) = 6t^5 - 15t^4 + 10t^3`; it is
/// `C^2` with value 1 at the origin.
pub fn bump(x: f64) -> f64 {
    let t = x.abs();
    if t >= 1.0 {
        return 0.0;
    }
    1.0 - t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
}

/// Sine-kernel gap probability of `(-s/2, s/2)` with density `b/pi`.
pub fn sine_gap_probability(b: f64, s: f64) -> Result<DetResult> {
    let k = SineKernel { b };
    nystrom_det(&FredholmProblem::new(&k, Domain::interval(-0.5 * s, 0.5 * s)))
}

/// `||K||_2` on a domain by product quadrature.
pub fn hs_norm(kernel: &dyn Kernel, domain: &Domain, order: usize) -> f64 {
    let (xs, ws) = domain.nodes(order);
    let k = kernel.matrix(&xs);
    let m = xs.len();
    let mut s = 0.0;
    for i in 0..m {
        for j in 0..m {
            s += ws[i] * ws[j] * k[i * m + j] * k[i * m + j];
        }
    }
    s.sqrt()
}

/// `tr K = int K(x, x) dx` by quadrature.
pub fn trace(kernel: &dyn Kernel, domain: &Domain, order: usize) -> f64 {
    let (xs, ws) = domain.nodes(order);
    xs.iter().zip(&ws).map(|(&x, &w)| w * kernel.eval(x, x)).sum()
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PerturbationBound {
    pub lhs: f64,
    /// Right-hand side with `|exp(-(tr A - tr B)) - 1|`.
    pub rhs: f64,
    /// Right-hand side exactly as printed, without the absolute value.
    pub rhs_printed: f64,
    pub holds: bool,
}

/// Both sides of
/// `|det(I-A) - det(I-B)| <= ||A-B|| e^{-tr A + (||A-B|| + 2||B|| + 1)^2/2}
///                          + e^{(||B|| + 1)^2/2 - tr B} |e^{-(tr A - tr B)} - 1|`
/// for finite-rank kernels on `L^2(a, b)`, computed exactly.
pub fn det_perturbation_bound_check(a_k: &FiniteRank, b_k: &FiniteRank, a: f64, b: f64) -> PerturbationBound {
    let da = a_k.exact_det(a, b);
    let db = b_k.exact_det(a, b);
    let diff = a_k.minus(b_k).exact_hs_norm(a, b);
    let nb = b_k.exact_hs_norm(a, b);
    let ta = a_k.exact_trace(a, b);
    let tb = b_k.exact_trace(a, b);
    let first = diff * (-ta + (diff + 2.0 * nb + 1.0).powi(2) / 2.0).exp();
    let pref = ((nb + 1.0).powi(2) / 2.0 - tb).exp();
    let jump = (-(ta - tb)).exp() - 1.0;
    let lhs = (da - db).abs();
    let rhs = first + pref * jump.abs();
    PerturbationBound { lhs, rhs, rhs_printed: first + pref * jump, holds: lhs <= rhs * (1.0 + 1e-12) + 1e-14 }
}
