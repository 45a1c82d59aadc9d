//! Airy function from its contour-integral representation and the Airy kernel.
//!
//! `Ai(x) = (1/2pi) int exp(i(x z + z^3/3)) dz` over a horizontal line `Im z = c > 0`.
//! The integrand at `-t` is the conjugate of the integrand at `t`, so only the
//! half-line `t >= 0` is integrated. The height `c` is 1 on [-1, 1], passes through
//! the saddle `i sqrt(x)` for `x > 1`, and shrinks to `1/sqrt|x|` for `x < -1`.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::quad::Rule;

pub const AIRY_MIN: f64 = -15.0;
pub const AIRY_MAX: f64 = 30.0;

fn contour_height(x: f64) -> f64 {
    if x > 1.0 {
        x.sqrt()
    } else if x < -1.0 {
        1.0 / (-x).sqrt()
    } else {
        1.0
    }
}

/// `(Ai(x), Ai'(x))` for `x` in the supported range.
pub fn airy_pair(x: f64) -> Result<(f64, f64)> {
    if !(AIRY_MIN..=AIRY_MAX).contains(&x) {
        return Err(invalid(format!("airy argument {x} outside [{AIRY_MIN}, {AIRY_MAX}]")));
    }
    Ok(airy_pair_unchecked(x))
}

pub fn airy(x: f64) -> Result<f64> {
    airy_pair(x).map(|p| p.0)
}

pub fn airy_prime(x: f64) -> Result<f64> {
    airy_pair(x).map(|p| p.1)
}

/// As [`airy_pair`]; arguments above the range return 0 (the values there are
/// below 1e-48), arguments below it are evaluated anyway.
pub fn airy_pair_unchecked(x: f64) -> (f64, f64) {
    if x > AIRY_MAX {
        return (0.0, 0.0);
    }
    let c = contour_height(x);
    // |integrand| = exp(-x c + c^3/3 - c t^2); stop where it is 1e-18 of its peak times e^{-...}
    let peak = -x * c + c * c * c / 3.0;
    let drop = 42.0 + peak.max(0.0);
    let tmax = (drop / c).sqrt();
    let rule = gl16();
    let (mut ai, mut aip) = (0.0, 0.0);
    let mut t = 0.0;
    while t < tmax {
        // panel width keeps the phase change per panel below ~2 rad
        let freq = (x + t * t - c * c).abs() + 2.0 * c * t + 1.0;
        let h = (2.0 / freq).min(0.5).min(tmax - t).max(1e-6);
        let mid = t + 0.5 * h;
        for (xi, wi) in rule.x.iter().zip(&rule.w) {
            let tt = mid + 0.5 * h * xi;
            let z = Complex64::new(tt, c);
            let e = (Complex64::i() * (x * z + z * z * z / 3.0)).exp();
            let w = 0.5 * h * wi;
            ai += w * e.re;
            aip += w * (Complex64::i() * z * e).re;
        }
        t += h;
    }
    (ai / PI, aip / PI)
}

fn gl16() -> &'static Rule {
    use std::sync::OnceLock;
    static R: OnceLock<Rule> = OnceLock::new();
    R.get_or_init(|| Rule::new(16))
}

/// Airy kernel from `(Ai(x)Ai'(y) - Ai'(x)Ai(y))/(x - y)`; within 1e-5 of the
/// diagonal the closed form `Ai'(m)^2 - m Ai(m)^2` at the midpoint is used, which
/// is the integral form `int_0^inf Ai(m+t)^2 dt` evaluated exactly.
pub fn airy_kernel(x: f64, y: f64) -> f64 {
    let (ax, apx) = airy_pair_unchecked(x);
    let (ay, apy) = airy_pair_unchecked(y);
    airy_kernel_from_values(x, y, (ax, apx), (ay, apy))
}

pub(crate) fn airy_kernel_from_values(x: f64, y: f64, px: (f64, f64), py: (f64, f64)) -> f64 {
    let h = x - y;
    if h.abs() < 1e-5 {
        let m = 0.5 * (x + y);
        let (a, ap) = if h == 0.0 { px } else { airy_pair_unchecked(m) };
        return ap * ap - m * a * a;
    }
    (px.0 * py.1 - px.1 * py.0) / h
}

/// Memoized Airy evaluations keyed by the exact argument.
#[derive(Default)]
pub struct AiryCache {
    map: HashMap<u64, (f64, f64)>,
}

impl AiryCache {
    pub fn pair(&mut self, x: f64) -> (f64, f64) {
        *self.map.entry(x.to_bits()).or_insert_with(|| airy_pair_unchecked(x))
    }
}

/// `int_0^inf Ai(x+t) Ai(y+t) dt` by composite Gauss–Legendre on panels of width
/// 1/4 anchored at `min(x, y)`; grids on a 1/4 lattice reuse cached values.
pub fn airy_kernel_integral(x: f64, y: f64, cache: &mut AiryCache) -> f64 {
    let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
    let shift = hi - lo;
    let rule = gl16();
    let width = 0.25;
    let panels = ((AIRY_MAX - lo) / width).ceil() as usize;
    let mut s = 0.0;
    for p in 0..panels {
        let a = p as f64 * width;
        for (xi, wi) in rule.x.iter().zip(&rule.w) {
            let t = a + 0.5 * width * (1.0 + xi);
            let f = cache.pair(lo + t).0 * cache.pair(lo + t + shift).0;
            s += 0.5 * width * wi * f;
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Maclaurin series oracle, accurate for moderate |x|.
    fn ai_series(x: f64) -> f64 {
        let c1 = 0.355_028_053_887_817_2;
        let c2 = 0.258_819_403_792_806_8;
        let (mut f, mut g) = (0.0, 0.0);
        let mut tf = 1.0;
        let mut tg = x;
        let x3 = x * x * x;
        for k in 0..200 {
            f += tf;
            g += tg;
            let kf = k as f64;
            tf *= x3 / ((3.0 * kf + 2.0) * (3.0 * kf + 3.0));
            tg *= x3 / ((3.0 * kf + 3.0) * (3.0 * kf + 4.0));
            if tf.abs() < 1e-30 && tg.abs() < 1e-30 {
                break;
            }
        }
        c1 * f - c2 * g
    }

    #[test]
    fn value_at_zero() {
        assert!((airy(0.0).unwrap() - 0.3550280539).abs() < 1e-8);
        assert!((airy_prime(0.0).unwrap() + 0.2588194038).abs() < 1e-8);
    }

    #[test]
    fn matches_series() {
        let mut x = -6.0;
        while x <= 4.0 {
            let a = airy(x).unwrap();
            assert!((a - ai_series(x)).abs() < 1e-10, "x={x}: {a} vs {}", ai_series(x));
            x += 0.37;
        }
    }

    #[test]
    fn matches_tabulated_far_values() {
        // high-precision reference values
        let table = [
            (-15.0, 0.278_217_490_870_828_93),
            (-10.0, 0.040_241_238_486_443_191),
            (5.0, 1.083_444_281_360_744_2e-4),
            (10.0, 1.104_753_255_289_868_6e-10),
            (20.0, 1.691_672_868_670_540_3e-27),
        ];
        for (x, want) in table {
            let got = airy(x).unwrap();
            assert!((got - want).abs() < 1e-10, "x={x}: {got} vs {want}");
        }
    }

    #[test]
    fn decays_monotonically() {
        let mut prev = airy(1.0).unwrap();
        for k in 1..30 {
            let v = airy(1.0 + k as f64 * 0.5).unwrap();
            assert!(v > 0.0 && v < prev);
            prev = v;
        }
    }

    #[test]
    fn satisfies_airy_equation() {
        let h = 1e-2;
        for &x in &[-4.0, -1.3, 0.0, 0.7, 2.5] {
            let f = |s: f64| airy(s).unwrap();
            let d2 = (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2.0 * h)) / (12.0 * h * h);
            assert!((d2 - x * f(x)).abs() < 1e-6);
        }
        assert!(airy(31.0).is_err() && airy(-16.0).is_err());
    }

    #[test]
    fn kernel_forms_agree() {
        let mut cache = AiryCache::default();
        assert!((airy_kernel(0.0, 1.0) - airy_kernel_integral(0.0, 1.0, &mut cache)).abs() < 1e-8);
        assert_eq!(airy_kernel(0.3, -1.2), airy_kernel(-1.2, 0.3));
        let mut x = -5.0;
        while x <= 2.0 {
            assert!(airy_kernel(x, x) > 0.0);
            x += 0.25;
        }
    }
}
