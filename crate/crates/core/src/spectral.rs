//! Spectra, Stieltjes transforms, the semicircle law and resolvent identities.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ensembles::{HermitianMatrix, SIGMA2};
use crate::error::{invalid, Error, Result};
use crate::linalg::{hermitian_eigenvalues, inverse_complex};
use crate::quad::{uniform_breaks, Rule};

/// Which matrix a spectrum belongs to, relative to the raw sampled matrix `H`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumScale {
    /// `X / sqrt(n)`: semicircle on [-1, 1].
    XOverSqrtN,
    /// `sqrt(n) X`: the points `y_j` (or `nu_j`) on [-n, n].
    SqrtNX,
    /// `sqrt(n) W`: the points `lambda_j`.
    SqrtNW,
}

impl SpectrumScale {
    fn factor(self, n: usize) -> f64 {
        match self {
            SpectrumScale::XOverSqrtN => 1.0 / (n as f64).sqrt(),
            SpectrumScale::SqrtNX | SpectrumScale::SqrtNW => (n as f64).sqrt(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub scale: SpectrumScale,
}

impl Spectrum {
    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn max(&self) -> f64 {
        *self.values.last().expect("nonempty spectrum")
    }

    /// Same eigenvalues expressed in another scale.
    pub fn rescaled(&self, to: SpectrumScale) -> Spectrum {
        let n = self.n();
        let c = to.factor(n) / self.scale.factor(n);
        Spectrum { values: self.values.iter().map(|v| v * c).collect(), scale: to }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,value\n");
        for (i, v) in self.values.iter().enumerate() {
            let _ = writeln!(s, "{i},{v:.17e}");
        }
        s
    }
}

pub fn eigenvalues(h: &HermitianMatrix, scale: SpectrumScale) -> Result<Spectrum> {
    let c = scale.factor(h.n());
    let values = hermitian_eigenvalues(h)?.into_iter().map(|v| v * c).collect();
    Ok(Spectrum { values, scale })
}

/// `(1/n) sum_j 1/(y_j - z)` over eigenvalues of `X/sqrt(n)`.
pub fn stieltjes_mn(spec: &Spectrum, z: Complex64) -> Result<Complex64> {
    if z.im == 0.0 {
        return Err(invalid("stieltjes_mn needs Im z != 0"));
    }
    let ys = spec.rescaled(SpectrumScale::XOverSqrtN);
    Ok(stieltjes_of_points(&ys.values, z))
}

pub(crate) fn stieltjes_of_points(ys: &[f64], z: Complex64) -> Complex64 {
    let s: Complex64 = ys.iter().map(|&y| (y - z).inv()).sum();
    s / ys.len() as f64
}

/// Density of `W/sqrt(n)` in the limit.
pub fn semicircle_density(x: f64, kappa: f64) -> f64 {
    let r2 = 1.0 + 4.0 * kappa;
    2.0 * (r2 - x * x).max(0.0).sqrt() / (PI * r2)
}

/// Semicircle density on [-1, 1].
pub fn wigner_u(x: f64) -> f64 {
    (2.0 / PI) * (1.0 - x * x).max(0.0).sqrt()
}

/// `m(z) = 2(-z + sqrt(z-1) sqrt(z+1))`, the Stieltjes transform of `u`.
pub fn semicircle_transform(z: Complex64) -> Result<Complex64> {
    if !(z.im > 0.0) {
        return Err(invalid("semicircle_transform needs Im z > 0"));
    }
    Ok(semicircle_m(z))
}

/// Same as [`semicircle_transform`] without the domain check; valid off [-1, 1].
pub fn semicircle_m(z: Complex64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    2.0 * (-z + (z - one).sqrt() * (z + one).sqrt())
}

/// `int phi(x) u(x) dx` computed as `(2/pi) int_0^pi phi(cos t) sin^2 t dt`.
pub fn semicircle_average<F: Fn(f64) -> f64>(phi: F) -> f64 {
    let rule = Rule::new(16);
    let v = rule.integrate(&uniform_breaks(0.0, PI, 48), |t| {
        let s = t.sin();
        phi(t.cos()) * s * s
    });
    2.0 / PI * v
}

/// `sum_j phi(nu_j/n) - n int phi u` with `nu` the eigenvalues of `sqrt(n) X`.
pub fn linear_statistic<F: Fn(f64) -> f64>(spec: &Spectrum, phi: F) -> f64 {
    let center = semicircle_average(&phi);
    linear_statistic_centered(spec, &phi, center)
}

/// As [`linear_statistic`] with a precomputed `int phi u`.
pub fn linear_statistic_centered<F: Fn(f64) -> f64>(spec: &Spectrum, phi: F, center: f64) -> f64 {
    let n = spec.n() as f64;
    let xs = spec.rescaled(SpectrumScale::XOverSqrtN);
    xs.values.iter().map(|&x| phi(x)).sum::<f64>() - n * center
}

/// Residuals of the exact resolvent identities and margins of the companion
/// inequalities for one matrix and one spectral parameter.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResolventResiduals {
    /// |tr D - sum_k 1/(x_kk/sqrt n - z - alpha_k^* D_k alpha_k / n)|
    pub identity1: f64,
    /// max_k |tr D - tr D_k - (1 + alpha^* D_k^2 alpha / n)/(x_kk/sqrt n - z - alpha^* D_k alpha / n)|
    pub identity2: f64,
    /// max_k |Im beta_k - v (1 + alpha^* D_k D_k^* alpha / n)|
    pub im_beta_identity: f64,
    /// |m_n(z) - tr D / n| with m_n from the spectrum
    pub stieltjes_vs_trace: f64,
    /// min over k of (lhs - rhs) in the four inequalities; nonnegative when they hold
    pub margin3: f64,
    pub margin4: f64,
    pub margin5: f64,
    pub margin6: f64,
}

impl ResolventResiduals {
    pub fn identities_hold(&self, tol: f64) -> bool {
        self.identity1 <= tol && self.identity2 <= tol && self.im_beta_identity <= tol && self.stieltjes_vs_trace <= tol
    }

    pub fn inequalities_hold(&self, slack: f64) -> bool {
        self.margin3 >= -slack && self.margin4 >= -slack && self.margin5 >= -slack && self.margin6 >= -slack
    }
}

fn resolvent(h: &HermitianMatrix, z: Complex64) -> Result<Vec<Complex64>> {
    let n = h.n();
    let s = 1.0 / (n as f64).sqrt();
    let mut a: Vec<Complex64> = h.as_slice().iter().map(|v| v * s).collect();
    for i in 0..n {
        a[i * n + i] -= z;
    }
    inverse_complex(n, &a)
}

fn quad_form(n: usize, m: &[Complex64], x: &[Complex64], y: &[Complex64]) -> Complex64 {
    // x^* M y
    let mut s = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let row: Complex64 = (0..n).map(|j| m[i * n + j] * y[j]).sum();
        s += x[i].conj() * row;
    }
    s
}

fn matmul(n: usize, a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut c = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            for j in 0..n {
                c[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    c
}

fn adjoint(n: usize, a: &[Complex64]) -> Vec<Complex64> {
    let mut c = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            c[j * n + i] = a[i * n + j].conj();
        }
    }
    c
}

/// Evaluates both sides of the Schur-complement identities for
/// `D = (X/sqrt(n) - z)^{-1}` and its one-row-removed minors `D_k`.
///
/// The off-diagonal column `alpha_k` carries the `1/sqrt(n)` of `X/sqrt(n)`, so the
/// quadratic forms appear divided by `n`.
pub fn resolvent_identities_check(h: &HermitianMatrix, z: Complex64) -> Result<ResolventResiduals> {
    if z.im == 0.0 {
        return Err(invalid("resolvent check needs Im z != 0"));
    }
    let n = h.n();
    if n < 2 {
        return Err(invalid("resolvent check needs n >= 2"));
    }
    let nf = n as f64;
    let sq = nf.sqrt();
    let v = z.im.abs();
    let d = resolvent(h, z)?;
    let tr_d: Complex64 = (0..n).map(|i| d[i * n + i]).sum();
    let spec = eigenvalues(h, SpectrumScale::XOverSqrtN)?;
    let mn = stieltjes_mn(&spec, z)?;

    let mut rhs1 = Complex64::new(0.0, 0.0);
    let mut r = ResolventResiduals {
        identity1: 0.0,
        identity2: 0.0,
        im_beta_identity: 0.0,
        stieltjes_vs_trace: (mn - tr_d / nf).norm(),
        margin3: f64::INFINITY,
        margin4: f64::INFINITY,
        margin5: f64::INFINITY,
        margin6: f64::INFINITY,
    };
    for k in 0..n {
        let hk = h.minor(k);
        let m = n - 1;
        let dk = resolvent_minor(&hk, z, n)?;
        let alpha: Vec<Complex64> = (0..n).filter(|&i| i != k).map(|i| h.get(i, k)).collect();
        let q1 = quad_form(m, &dk, &alpha, &alpha) / nf;
        let dk2 = matmul(m, &dk, &dk);
        let dkdks = matmul(m, &dk, &adjoint(m, &dk));
        let q2 = quad_form(m, &dk2, &alpha, &alpha) / nf;
        let qs = quad_form(m, &dkdks, &alpha, &alpha).re / nf;
        let xkk = h.get(k, k).re / sq;
        let denom = xkk - z - q1;
        rhs1 += denom.inv();
        let tr_dk: Complex64 = (0..m).map(|i| dk[i * m + i]).sum();
        let lhs2 = tr_d - tr_dk;
        let rhs2 = (1.0 + q2) / denom;
        r.identity2 = r.identity2.max((lhs2 - rhs2).norm());

        // beta_k = -x_kk/sqrt n + z + alpha^* D_k alpha / n
        let beta = -denom;
        let sgn = z.im.signum();
        let im_beta = sgn * beta.im;
        r.im_beta_identity = r.im_beta_identity.max((im_beta - v * (1.0 + qs)).abs());
        r.margin3 = r.margin3.min(im_beta - v);
        // beta_k^* = z + sigma^2 tr D_k / n
        let beta_star = z + SIGMA2 * tr_dk / nf;
        r.margin4 = r.margin4.min(sgn * beta_star.im - v);
        r.margin5 = r.margin5.min(1.0 + qs - (1.0 + q2).norm());
        r.margin6 = r.margin6.min(1.0 / v - lhs2.norm());
    }
    r.identity1 = (tr_d - rhs1).norm();
    Ok(r)
}

fn resolvent_minor(hk: &HermitianMatrix, z: Complex64, n_full: usize) -> Result<Vec<Complex64>> {
    let m = hk.n();
    let s = 1.0 / (n_full as f64).sqrt();
    let mut a: Vec<Complex64> = hk.as_slice().iter().map(|v| v * s).collect();
    for i in 0..m {
        a[i * m + i] -= z;
    }
    inverse_complex(m, &a).map_err(|_| Error::Numeric("singular minor resolvent".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{sample_wigner, ElementLaw, EnsembleSpec};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn stieltjes_examples() {
        let zero = Spectrum { values: vec![0.0; 5], scale: SpectrumScale::XOverSqrtN };
        assert!((stieltjes_mn(&zero, c(0.0, 1.0)).unwrap() - c(0.0, 1.0)).norm() < 1e-15);
        let one = Spectrum { values: vec![2.0], scale: SpectrumScale::XOverSqrtN };
        assert!((stieltjes_mn(&one, c(1.0, 1.0)).unwrap() - (c(1.0, -1.0)).inv()).norm() < 1e-15);
        assert!(stieltjes_mn(&one, c(1.0, 0.0)).is_err());
    }

    #[test]
    fn semicircle_values() {
        assert_relative_eq!(semicircle_density(0.0, 0.0), 2.0 / PI, epsilon = 1e-15);
        assert_eq!(semicircle_density(5f64.sqrt(), 1.0), 0.0);
        let m = semicircle_transform(c(0.0, 1.0)).unwrap();
        assert!((m - c(0.0, 2.0 * (2f64.sqrt() - 1.0))).norm() < 1e-14);
        assert!(semicircle_transform(c(0.0, -1.0)).is_err());
        // quadrature oracle for m(z) = int u(x)/(x - z) dx
        for z in [c(0.3, 0.4), c(-1.5, 0.2), c(2.0, 3.0)] {
            let re = semicircle_average(|x| ((x - z).inv()).re);
            let im = semicircle_average(|x| ((x - z).inv()).im);
            assert!((semicircle_m(z) - c(re, im)).norm() < 1e-10, "{z}");
        }
        let total = Rule::new(16).integrate(&uniform_breaks(-5f64.sqrt(), 5f64.sqrt(), 64), |x| semicircle_density(x, 1.0));
        assert_relative_eq!(total, 1.0, epsilon = 1e-5);
        assert_relative_eq!(semicircle_average(|_| 1.0), 1.0, epsilon = 1e-13);
    }

    proptest! {
        #[test]
        fn herglotz(re in -3.0f64..3.0, im in 1e-3f64..3.0) {
            prop_assert!(semicircle_m(c(re, im)).im > 0.0);
        }

        #[test]
        fn empirical_herglotz(seed in 0u64..1000, re in -2.0f64..2.0, im in 1e-2f64..2.0) {
            let x = sample_wigner(&EnsembleSpec::new(8, ElementLaw::Gaussian, 0.0, seed).unwrap()).unwrap();
            let s = eigenvalues(&x, SpectrumScale::XOverSqrtN).unwrap();
            prop_assert!(stieltjes_mn(&s, c(re, im)).unwrap().im > 0.0);
        }
    }

    #[test]
    fn identities_on_random_matrices() {
        for seed in 0..10u64 {
            let n = 3 + (seed as usize % 8);
            let x = sample_wigner(&EnsembleSpec::new(n, ElementLaw::Gaussian, 0.0, seed).unwrap()).unwrap();
            let r = resolvent_identities_check(&x, c(0.3, 0.7)).unwrap();
            assert!(r.identities_hold(1e-10), "{r:?}");
            assert!(r.inequalities_hold(1e-12), "{r:?}");
            let r = resolvent_identities_check(&x, c(-0.2, -0.05)).unwrap();
            assert!(r.identities_hold(1e-9), "{r:?}");
            assert!(r.inequalities_hold(1e-12), "{r:?}");
        }
    }

    #[test]
    fn diagonal_matrix_identity() {
        let h = HermitianMatrix::from_real_symmetric(3, &[1.0, 0.0, 0.0, 0.0, -2.0, 0.0, 0.0, 0.0, 0.5]);
        let r = resolvent_identities_check(&h, c(0.1, 0.4)).unwrap();
        assert!(r.identity1 < 1e-15);
    }

    #[test]
    fn interlacing_of_minor() {
        let x = sample_wigner(&EnsembleSpec::new(9, ElementLaw::Uniform, 0.0, 4).unwrap()).unwrap();
        let full = eigenvalues(&x, SpectrumScale::SqrtNX).unwrap().values;
        let minor = hermitian_eigenvalues(&x.minor(3)).unwrap();
        let s = 9f64.sqrt();
        for i in 0..8 {
            assert!(full[i] <= minor[i] * s + 1e-12 && minor[i] * s <= full[i + 1] + 1e-12);
        }
    }

    #[test]
    fn linear_statistic_examples() {
        let one = Spectrum { values: vec![0.0], scale: SpectrumScale::SqrtNX };
        assert_eq!(linear_statistic(&one, |_| 0.0), 0.0);
        let phi = |x: f64| (-x * x).exp();
        let want = 1.0 - semicircle_average(phi);
        assert_relative_eq!(linear_statistic(&one, phi), want, epsilon = 1e-14);
        // int x^2 u = 1/4
        assert_relative_eq!(semicircle_average(|x| x * x), 0.25, epsilon = 1e-14);
    }
}
