//! Deterministic self-check suites shared by the command line and the acceptance run.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

use crate::bulk_kernel::{descent_bound_check_grid, in_b_ns, kernel_descent, kernel_reference, solve_bulk_geometry};
use crate::edge_kernel::{edge_bound_check, edge_constants, edge_kernel_scaled, expansion_check, solve_edge_geometry};
use crate::ensembles::{sample_wigner, ElementLaw, EnsembleSpec};
use crate::error::Result;
use crate::experiments::Check;
use crate::fredholm::{det_perturbation_bound_check, nystrom_det, tw_cdf, Domain, FiniteRank, FredholmProblem};
use crate::spectral::{eigenvalues, resolvent_identities_check, SpectrumScale};

/// Largest residual of the resolvent identities and smallest margin of the
/// companion inequalities over `pairs` random `(matrix, z)` with `n <= 12`.
#[derive(Clone, Copy, Debug)]
pub struct IdentityStats {
    pub pairs: usize,
    pub max_identity: f64,
    pub min_margin: f64,
}

pub fn identity_stats(seed: u64, pairs: usize) -> Result<IdentityStats> {
    let mut rng = SplitMix64::seed_from_u64(seed);
    let laws = [ElementLaw::Gaussian, ElementLaw::Rademacher, ElementLaw::Uniform];
    let mut st = IdentityStats { pairs, max_identity: 0.0, min_margin: f64::INFINITY };
    for _ in 0..pairs {
        let n = rng.gen_range(2..=12);
        let law = laws[rng.gen_range(0..laws.len())];
        let h = sample_wigner(&EnsembleSpec::new(n, law, 0.0, rng.gen())?)?;
        let y = rng.gen_range(0.05..2.0) * if rng.gen::<bool>() { 1.0 } else { -1.0 };
        let z = Complex64::new(rng.gen_range(-2.0..2.0), y);
        let r = resolvent_identities_check(&h, z)?;
        st.max_identity = st.max_identity.max(r.identity1).max(r.identity2).max(r.im_beta_identity).max(r.stieltjes_vs_trace);
        st.min_margin = st.min_margin.min(r.margin3).min(r.margin4).min(r.margin5).min(r.margin6);
    }
    Ok(st)
}

pub fn check_identities(seed: u64) -> Result<Vec<Check>> {
    let s = identity_stats(seed, 100)?;
    Ok(vec![
        Check { name: "resolvent identities max residual".into(), value: s.max_identity, bound: 1e-9, pass: s.max_identity <= 1e-9 },
        Check { name: "resolvent inequalities min margin".into(), value: s.min_margin, bound: 0.0, pass: s.min_margin >= -1e-12 },
    ])
}

fn random_bulk_points(rng: &mut SplitMix64, n: usize, s: f64) -> Vec<f64> {
    loop {
        let nu: Vec<f64> = (0..n).map(|_| s * rng.gen_range(-0.6..0.6)).collect();
        if in_b_ns(&nu, s) {
            return nu;
        }
    }
}

/// Worst `|descent - reference|` over `count` random bulk geometries with `n <= 10`.
pub fn bulk_contour_gap(seed: u64, count: usize) -> Result<f64> {
    let mut rng = SplitMix64::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..count {
        let n = rng.gen_range(1..=10);
        let s = n as f64 * rng.gen_range(0.5..3.0);
        let nu = random_bulk_points(&mut rng, n, s);
        let g = solve_bulk_geometry(&nu, s)?;
        let (u, v) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let kd = kernel_descent(&g, u, v)?;
        let top = nu.iter().fold(0.0f64, |m, x| m.max(x.abs())) / s;
        let kr = kernel_reference(&nu, s, u - s * g.d, v - s * g.d, top + 0.15, top + 0.4)?;
        worst = worst.max((kd - kr.re).abs());
    }
    Ok(worst)
}

/// Worst `|scaled edge kernel - reference|` over `count` random geometries with `n <= 5`.
pub fn edge_contour_gap(seed: u64, count: usize) -> Result<f64> {
    let mut rng = SplitMix64::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..count {
        let n = rng.gen_range(1..=5);
        let s = n as f64 * rng.gen_range(0.5..3.0);
        let nu: Vec<f64> = (0..n).map(|_| s * rng.gen_range(-0.8..0.8)).collect();
        let g = solve_edge_geometry(&nu, s, 1e-3, 1e3)?;
        let top = nu.iter().fold(0.0f64, |m, x| m.max(x.abs())) / s;
        let l = top + 0.2;
        let m = l + 0.5;
        let sc = g.scale();
        let (xi, eta) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let k = edge_kernel_scaled(&g, xi, eta)?;
        let kr = kernel_reference(&nu, s, g.a * s + xi * sc, g.a * s + eta * sc, l, m)?;
        let want = sc * ((eta - xi) * sc * g.b).exp() * kr.re;
        worst = worst.max((k - want).abs());
    }
    Ok(worst)
}

pub fn check_contours(seed: u64) -> Result<Vec<Check>> {
    let b = bulk_contour_gap(seed, 20)?;
    let e = edge_contour_gap(seed ^ 0x65, 10)?;
    Ok(vec![
        Check { name: "bulk descent vs reference".into(), value: b, bound: 1e-6, pass: b <= 1e-6 },
        Check { name: "edge contour vs reference".into(), value: e, bound: 1e-6, pass: e <= 1e-6 },
    ])
}

/// Violation counts of the bulk and edge descent bounds over `count` sampled
/// geometries with `points` grid points per contour.
#[derive(Clone, Copy, Debug)]
pub struct BoundStats {
    pub geometries: usize,
    pub bulk_violations: usize,
    pub edge_violations: usize,
    pub lambda_outside: usize,
    pub remainder_violations: usize,
    pub d_outside: usize,
}

pub fn descent_bound_stats(seed: u64, count: usize, points: usize) -> Result<BoundStats> {
    let c = edge_constants(1.0)?;
    let mut st = BoundStats { geometries: count, bulk_violations: 0, edge_violations: 0, lambda_outside: 0, remainder_violations: 0, d_outside: 0 };
    for k in 0..count {
        let n = 20 + 2 * k;
        let x = sample_wigner(&EnsembleSpec::new(n, ElementLaw::Gaussian, 1.0, seed.wrapping_add(k as u64))?)?;
        let ys = eigenvalues(&x, SpectrumScale::XOverSqrtN)?.values;
        let nf = n as f64;
        let nu: Vec<f64> = ys.iter().map(|y| nf * y).collect();
        let g = solve_bulk_geometry(&nu, nf)?;
        st.bulk_violations += (!descent_bound_check_grid(&g, 10.0, points / 2).holds) as usize;
        let e = solve_edge_geometry(&nu, nf, c.alpha0, c.beta0)?;
        let e = if e.in_f {
            e
        } else {
            let gaps: Vec<f64> = nu.iter().map(|v| e.b - v / nf).collect();
            let lo = gaps.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = gaps.iter().copied().fold(0.0, f64::max);
            solve_edge_geometry(&nu, nf, lo, hi)?
        };
        st.edge_violations += (!edge_bound_check(&e, 2.0 * e.beta0, points / 2).holds) as usize;
        let r = expansion_check(&e);
        st.lambda_outside += (!r.lambda_in_window) as usize;
        st.remainder_violations += (r.remainder_ratio > 1.0) as usize;
        let d_ok = e.d >= e.beta0.powf(-1.0 / 3.0) && e.d <= e.alpha0.powf(-1.0 / 3.0);
        st.d_outside += (!d_ok) as usize;
    }
    Ok(st)
}

pub fn check_descent_bounds(seed: u64) -> Result<Vec<Check>> {
    let s = descent_bound_stats(seed, 50, 200)?;
    let count = |name: &str, v: usize| Check { name: name.into(), value: v as f64, bound: 0.0, pass: v == 0 };
    Ok(vec![
        count("bulk descent bound violations", s.bulk_violations),
        count("edge descent bound violations", s.edge_violations),
        count("lambda outside its window", s.lambda_outside),
        count("quintic remainder violations", s.remainder_violations),
        count("d outside [beta0^-1/3, alpha0^-1/3]", s.d_outside),
    ])
}

pub fn random_finite_rank(rng: &mut SplitMix64, max_rank: usize, scale: f64) -> FiniteRank {
    let r = rng.gen_range(0..=max_rank);
    let mut coeffs = || (0..rng.gen_range(1..=3)).map(|_| scale * rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>();
    let f = (0..r).map(|_| coeffs()).collect();
    let g = (0..r).map(|_| coeffs()).collect();
    FiniteRank { f, g }
}

#[derive(Clone, Copy, Debug)]
pub struct FredholmStats {
    pub finite_rank_gap: f64,
    pub tw0: f64,
    pub perturbation_failures: usize,
}

pub fn fredholm_stats(seed: u64) -> Result<FredholmStats> {
    let mut rng = SplitMix64::seed_from_u64(seed);
    let mut gap = 0.0f64;
    for _ in 0..40 {
        let k = random_finite_rank(&mut rng, 5, 1.0);
        let r = nystrom_det(&FredholmProblem::new(&k, Domain::interval(-0.5, 1.5)))?;
        gap = gap.max((r.value - k.exact_det(-0.5, 1.5)).abs());
    }
    let mut failures = 0;
    let mut tested = 0;
    while tested < 100 {
        let a = random_finite_rank(&mut rng, 3, 0.8);
        let b = random_finite_rank(&mut rng, 3, 0.8);
        if a.minus(&b).exact_hs_norm(0.0, 1.0) > 1.0 {
            continue;
        }
        failures += (!det_perturbation_bound_check(&a, &b, 0.0, 1.0).holds) as usize;
        tested += 1;
    }
    Ok(FredholmStats { finite_rank_gap: gap, tw0: tw_cdf(0.0)?, perturbation_failures: failures })
}

pub fn check_fredholm(seed: u64) -> Result<Vec<Check>> {
    let s = fredholm_stats(seed)?;
    let tw = (s.tw0 - 0.9694).abs();
    Ok(vec![
        Check { name: "finite-rank determinant error".into(), value: s.finite_rank_gap, bound: 1e-10, pass: s.finite_rank_gap <= 1e-10 },
        Check { name: "|F_TW(0) - 0.9694|".into(), value: tw, bound: 1e-3, pass: tw <= 1e-3 },
        Check { name: "perturbation bound failures".into(), value: s.perturbation_failures as f64, bound: 0.0, pass: s.perturbation_failures == 0 },
    ])
}
