//! Wigner and GUE sampling, and the Gaussian-divisible composition `W = X + sqrt(kappa) V`.
//!
//! Every law is standardized so an off-diagonal entry has independent real and
//! imaginary parts of variance `SIGMA2 / 2` and a diagonal entry has variance `SIGMA2`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::{entry_rng, STREAM_GUE, STREAM_WIGNER};

pub const SIGMA2: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ElementLaw {
    Gaussian,
    Rademacher,
    Uniform,
    StudentT { df: f64 },
    SymmetricPareto { tail_index: f64 },
    /// Point mass at 0; only useful as a degenerate control.
    Zero,
}

impl ElementLaw {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ElementLaw::StudentT { df } => {
                if !(df > 0.0) {
                    return Err(invalid(format!("student_t needs df > 0, got {df}")));
                }
                if df <= 2.0 {
                    return Err(invalid(format!("student_t with df = {df} has infinite variance and cannot be standardized")));
                }
            }
            ElementLaw::SymmetricPareto { tail_index } => {
                if !(tail_index > 0.0) {
                    return Err(invalid(format!("symmetric_pareto needs tail_index > 0, got {tail_index}")));
                }
                if tail_index <= 2.0 {
                    return Err(invalid(format!("symmetric_pareto with tail_index = {tail_index} has infinite variance")));
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn has_finite_fourth_moment(&self) -> bool {
        match *self {
            ElementLaw::StudentT { df } => df > 4.0,
            ElementLaw::SymmetricPareto { tail_index } => tail_index > 4.0,
            _ => true,
        }
    }

    /// Second moment finite but fourth moment infinite.
    pub fn is_heavy_tailed(&self) -> bool {
        !self.has_finite_fourth_moment()
    }

    /// One draw with mean 0 and variance 1.
    pub fn standard_draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ElementLaw::Gaussian => StandardNormal.sample(rng),
            ElementLaw::Rademacher => {
                if rng.gen::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            ElementLaw::Uniform => 3f64.sqrt() * (2.0 * rng.gen::<f64>() - 1.0),
            ElementLaw::StudentT { df } => {
                let t: f64 = StudentT::new(df).expect("validated df").sample(rng);
                t / (df / (df - 2.0)).sqrt()
            }
            ElementLaw::SymmetricPareto { tail_index } => {
                // |X| = U^{-1/a} has E X^2 = a / (a - 2)
                let u: f64 = 1.0 - rng.gen::<f64>();
                let mag = u.powf(-1.0 / tail_index);
                let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                sign * mag / (tail_index / (tail_index - 2.0)).sqrt()
            }
            ElementLaw::Zero => 0.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ElementLaw::Gaussian => "gaussian",
            ElementLaw::Rademacher => "rademacher",
            ElementLaw::Uniform => "uniform",
            ElementLaw::StudentT { .. } => "student_t",
            ElementLaw::SymmetricPareto { .. } => "symmetric_pareto",
            ElementLaw::Zero => "zero",
        }
    }

    pub fn param(&self) -> Option<f64> {
        match *self {
            ElementLaw::StudentT { df } => Some(df),
            ElementLaw::SymmetricPareto { tail_index } => Some(tail_index),
            _ => None,
        }
    }

    pub fn from_parts(name: &str, param: Option<f64>) -> Result<Self> {
        let need = |p: Option<f64>| p.ok_or_else(|| invalid(format!("law {name} needs a parameter, e.g. {name}:5")));
        let law = match name {
            "gaussian" => ElementLaw::Gaussian,
            "rademacher" => ElementLaw::Rademacher,
            "uniform" => ElementLaw::Uniform,
            "student_t" => ElementLaw::StudentT { df: need(param)? },
            "symmetric_pareto" => ElementLaw::SymmetricPareto { tail_index: need(param)? },
            "zero" => ElementLaw::Zero,
            other => return Err(invalid(format!("unknown law '{other}'"))),
        };
        law.validate()?;
        Ok(law)
    }
}

impl fmt::Display for ElementLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.param() {
            Some(p) => write!(f, "{}:{}", self.name(), p),
            None => write!(f, "{}", self.name()),
        }
    }
}

impl FromStr for ElementLaw {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (name, param) = match s.split_once(':') {
            Some((n, p)) => {
                let v: f64 = p.trim().parse().map_err(|_| invalid(format!("bad law parameter '{p}'")))?;
                (n.trim(), Some(v))
            }
            None => (s.trim(), None),
        };
        ElementLaw::from_parts(name, param)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "FlatSpec", try_from = "FlatSpec")]
pub struct EnsembleSpec {
    pub n: usize,
    pub law: ElementLaw,
    pub kappa: f64,
    pub seed: u64,
}

/// Flat key/value form used in config files.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlatSpec {
    pub n: usize,
    pub law: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub law_param: Option<f64>,
    pub kappa: f64,
    pub seed: u64,
}

impl From<EnsembleSpec> for FlatSpec {
    fn from(s: EnsembleSpec) -> Self {
        FlatSpec { n: s.n, law: s.law.name().to_string(), law_param: s.law.param(), kappa: s.kappa, seed: s.seed }
    }
}

impl TryFrom<FlatSpec> for EnsembleSpec {
    type Error = Error;
    fn try_from(f: FlatSpec) -> Result<Self> {
        let spec = EnsembleSpec { n: f.n, law: ElementLaw::from_parts(&f.law, f.law_param)?, kappa: f.kappa, seed: f.seed };
        spec.validate()?;
        Ok(spec)
    }
}

impl EnsembleSpec {
    pub fn new(n: usize, law: ElementLaw, kappa: f64, seed: u64) -> Result<Self> {
        let s = EnsembleSpec { n, law, kappa, seed };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("n must be at least 1"));
        }
        if !(self.kappa >= 0.0) || !self.kappa.is_finite() {
            return Err(invalid(format!("kappa must be finite and >= 0, got {}", self.kappa)));
        }
        self.law.validate()
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        EnsembleSpec { seed, ..self.clone() }
    }

    pub fn with_n(&self, n: usize) -> Self {
        EnsembleSpec { n, ..self.clone() }
    }
}

/// Dense Hermitian matrix, row-major full storage kept exactly conjugate-symmetric.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl HermitianMatrix {
    pub fn zeros(n: usize) -> Self {
        HermitianMatrix { n, data: vec![Complex64::new(0.0, 0.0); n * n] }
    }

    /// Builds from the lower triangle of `full`; the upper triangle is ignored.
    pub fn from_lower(n: usize, full: &[Complex64]) -> Self {
        assert_eq!(full.len(), n * n);
        let mut m = HermitianMatrix::zeros(n);
        for i in 0..n {
            m.set(i, i, full[i * n + i]);
            for j in 0..i {
                m.set(i, j, full[i * n + j]);
            }
        }
        m
    }

    pub fn from_real_symmetric(n: usize, rows: &[f64]) -> Self {
        let c: Vec<Complex64> = rows.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        HermitianMatrix::from_lower(n, &c)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    /// Sets entry (i, j) and its mirror; a diagonal entry keeps only its real part.
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        let n = self.n;
        if i == j {
            self.data[i * n + i] = Complex64::new(v.re, 0.0);
        } else {
            self.data[i * n + j] = v;
            self.data[j * n + i] = v.conj();
        }
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i).re).sum()
    }

    pub fn is_hermitian(&self) -> bool {
        (0..self.n).all(|i| self.get(i, i).im == 0.0 && (0..i).all(|j| self.get(j, i) == self.get(i, j).conj()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, c: f64, other: &HermitianMatrix) -> HermitianMatrix {
        assert_eq!(self.n, other.n);
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b * c).collect();
        HermitianMatrix { n: self.n, data }
    }

    pub fn scaled(&self, c: f64) -> HermitianMatrix {
        HermitianMatrix { n: self.n, data: self.data.iter().map(|a| a * c).collect() }
    }

    /// Principal submatrix with row and column `k` removed.
    pub fn minor(&self, k: usize) -> HermitianMatrix {
        let n = self.n;
        assert!(k < n && n > 1);
        let mut m = HermitianMatrix::zeros(n - 1);
        let idx = |i: usize| if i < k { i } else { i + 1 };
        for i in 0..n - 1 {
            for j in 0..n - 1 {
                m.data[i * (n - 1) + j] = self.get(idx(i), idx(j));
            }
        }
        m
    }
}

fn sample_hermitian<F>(n: usize, seed: u64, stream: u64, mut draw: F) -> HermitianMatrix
where
    F: FnMut(&mut rand_xoshiro::SplitMix64, bool) -> Complex64,
{
    let mut m = HermitianMatrix::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            let mut rng = entry_rng(seed, stream, i, j);
            let v = draw(&mut rng, i == j);
            m.set(i, j, v);
        }
    }
    m
}

pub fn sample_wigner(spec: &EnsembleSpec) -> Result<HermitianMatrix> {
    spec.validate()?;
    let law = spec.law;
    let off = (SIGMA2 / 2.0).sqrt();
    let diag = SIGMA2.sqrt();
    Ok(sample_hermitian(spec.n, spec.seed, STREAM_WIGNER, |rng, is_diag| {
        if is_diag {
            Complex64::new(diag * law.standard_draw(rng), 0.0)
        } else {
            let re = law.standard_draw(rng);
            let im = law.standard_draw(rng);
            Complex64::new(off * re, off * im)
        }
    }))
}

/// GUE with density proportional to `exp(-tr V^2 / 2)`.
pub fn sample_gue(n: usize, seed: u64) -> HermitianMatrix {
    assert!(n >= 1);
    let off = 0.5f64.sqrt();
    sample_hermitian(n, seed, STREAM_GUE, |rng, is_diag| {
        let a: f64 = StandardNormal.sample(rng);
        if is_diag {
            Complex64::new(a, 0.0)
        } else {
            let b: f64 = StandardNormal.sample(rng);
            Complex64::new(off * a, off * b)
        }
    })
}

pub fn compose_gauss_divisible(spec: &EnsembleSpec) -> Result<HermitianMatrix> {
    let x = sample_wigner(spec)?;
    if spec.kappa == 0.0 {
        return Ok(x);
    }
    let v = sample_gue(spec.n, spec.seed);
    Ok(x.add_scaled(spec.kappa.sqrt(), &v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn spec(n: usize, law: ElementLaw, kappa: f64, seed: u64) -> EnsembleSpec {
        EnsembleSpec::new(n, law, kappa, seed).unwrap()
    }

    #[test]
    fn hermitian_exactly() {
        for law in [ElementLaw::Gaussian, ElementLaw::Rademacher, ElementLaw::StudentT { df: 5.0 }] {
            let w = compose_gauss_divisible(&spec(7, law, 0.7, 3)).unwrap();
            assert!(w.is_hermitian());
            assert_eq!(w.get(1, 0), w.get(0, 1).conj());
        }
    }

    #[test]
    fn rademacher_atoms() {
        let x = sample_wigner(&spec(6, ElementLaw::Rademacher, 0.0, 1)).unwrap();
        let a = 1.0 / (2.0 * 2f64.sqrt());
        for i in 0..6 {
            for j in 0..i {
                assert!((x.get(i, j).re.abs() - a).abs() < 1e-15);
                assert!((x.get(i, j).im.abs() - a).abs() < 1e-15);
            }
            assert!((x.get(i, i).re.abs() - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn invalid_laws_rejected() {
        assert!("student_t:0".parse::<ElementLaw>().is_err());
        assert!("student_t:-1".parse::<ElementLaw>().is_err());
        assert!("symmetric_pareto:0".parse::<ElementLaw>().is_err());
        assert!("symmetric_pareto:1.5".parse::<ElementLaw>().is_err());
        assert!("nonsense".parse::<ElementLaw>().is_err());
        assert!("student_t:3".parse::<ElementLaw>().unwrap().is_heavy_tailed());
        assert!(!"student_t:6".parse::<ElementLaw>().unwrap().is_heavy_tailed());
    }

    #[test]
    fn standard_draws_have_unit_variance() {
        let laws = [
            ElementLaw::Gaussian,
            ElementLaw::Rademacher,
            ElementLaw::Uniform,
            ElementLaw::StudentT { df: 9.0 },
            ElementLaw::SymmetricPareto { tail_index: 9.0 },
        ];
        let m = 1_000_000;
        for law in laws {
            let mut rng = rand_xoshiro::SplitMix64::seed_from_u64(11);
            let xs: Vec<f64> = (0..m).map(|_| law.standard_draw(&mut rng)).collect();
            let mean = xs.iter().sum::<f64>() / m as f64;
            let m2 = xs.iter().map(|x| x * x).sum::<f64>() / m as f64;
            let m4 = xs.iter().map(|x| x.powi(4)).sum::<f64>() / m as f64;
            // standard errors: sd(mean) = 1/sqrt(m), sd(m2) = sqrt((m4 - 1)/m)
            assert!(mean.abs() <= 4.0 / (m as f64).sqrt(), "{law}: mean {mean}");
            assert!((m2 - 1.0).abs() <= 4.0 * ((m4 - 1.0).max(1e-12) / m as f64).sqrt() + 1e-12, "{law}: var {m2}");
        }
    }

    #[test]
    fn kappa_zero_is_wigner() {
        let s = spec(5, ElementLaw::Uniform, 0.0, 9);
        assert_eq!(compose_gauss_divisible(&s).unwrap(), sample_wigner(&s).unwrap());
    }

    #[test]
    fn reproducible() {
        let s = spec(9, ElementLaw::Gaussian, 1.0, 42);
        assert_eq!(compose_gauss_divisible(&s).unwrap(), compose_gauss_divisible(&s).unwrap());
        assert_ne!(compose_gauss_divisible(&s).unwrap(), compose_gauss_divisible(&s.with_seed(43)).unwrap());
    }

    #[test]
    fn flat_config_round_trip() {
        let s = spec(12, ElementLaw::StudentT { df: 5.5 }, 0.5, 77);
        let js = serde_json::to_string(&s).unwrap();
        assert!(js.contains("\"law\":\"student_t\""));
        let back: EnsembleSpec = serde_json::from_str(&js).unwrap();
        assert_eq!(back, s);
        assert_eq!("student_t:5.5".parse::<ElementLaw>().unwrap().to_string(), "student_t:5.5");
    }

    #[test]
    fn minor_removes_row_and_column() {
        let x = sample_wigner(&spec(4, ElementLaw::Gaussian, 0.0, 5)).unwrap();
        let m = x.minor(1);
        assert_eq!(m.get(0, 0), x.get(0, 0));
        assert_eq!(m.get(2, 1), x.get(3, 2));
        assert!(m.is_hermitian());
    }
}
