//! Gauss–Legendre rules and composite panel layouts.

use std::f64::consts::PI;

/// Nodes and weights of the `m`-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1);
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    for i in 0..(m + 1) / 2 {
        // Tricomi initial guess, then Newton on P_m.
        let k = (i + 1) as f64;
        let mf = m as f64;
        let mut z = (PI * (k - 0.25) / (mf + 0.5)).cos()
            * (1.0 - (mf - 1.0) / (8.0 * mf * mf * mf));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(m, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(m, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = -z;
        x[m - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[m - 1 - i] = wi;
    }
    if m % 2 == 1 {
        x[m / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(m: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if m == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=m {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * z * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// A reusable `m`-point rule.
#[derive(Clone, Debug)]
pub struct Rule {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
}

impl Rule {
    pub fn new(m: usize) -> Self {
        let (x, w) = gauss_legendre(m);
        Rule { x, w }
    }

    /// Nodes/weights of the rule applied on every panel `[breaks[k], breaks[k+1]]`.
    pub fn composite(&self, breaks: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut xs = Vec::with_capacity(self.x.len() * breaks.len());
        let mut ws = Vec::with_capacity(xs.capacity());
        for p in breaks.windows(2) {
            let (a, b) = (p[0], p[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (xi, wi) in self.x.iter().zip(&self.w) {
                xs.push(mid + half * xi);
                ws.push(half * wi);
            }
        }
        (xs, ws)
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, breaks: &[f64], mut f: F) -> f64 {
        let (xs, ws) = self.composite(breaks);
        xs.iter().zip(&ws).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// `panels` equal panels on [a, b].
pub fn uniform_breaks(a: f64, b: f64, panels: usize) -> Vec<f64> {
    let p = panels.max(1);
    (0..=p).map(|k| a + (b - a) * k as f64 / p as f64).collect()
}

/// Breakpoints on [0, len] geometrically graded toward 0: panels
/// `[0, h s^L], [h s^{k+1}, h s^k], ...`, then panels of width at most `h` up to `len`.
pub fn graded_from_zero(len: f64, h: f64, ratio: f64, levels: usize) -> Vec<f64> {
    assert!(len > 0.0 && h > 0.0 && ratio > 0.0 && ratio < 1.0);
    let h = h.min(len);
    let mut br = vec![0.0];
    for k in (0..levels).rev() {
        br.push(h * ratio.powi(k as i32 + 1));
    }
    br.push(h);
    let rest = len - h;
    if rest > 0.0 {
        let p = (rest / h).ceil() as usize;
        for k in 1..=p {
            br.push(h + rest * k as f64 / p as f64);
        }
    }
    br
}

/// Breakpoints on [a, b] graded toward whichever ends are flagged singular.
pub fn graded_interval(a: f64, b: f64, sing_a: bool, sing_b: bool, h: f64, ratio: f64, levels: usize) -> Vec<f64> {
    let len = b - a;
    assert!(len > 0.0);
    match (sing_a, sing_b) {
        (false, false) => uniform_breaks(a, b, (len / h).ceil() as usize),
        (true, false) => graded_from_zero(len, h, ratio, levels).into_iter().map(|t| a + t).collect(),
        (false, true) => {
            let mut v: Vec<f64> = graded_from_zero(len, h, ratio, levels).into_iter().map(|t| b - t).collect();
            v.reverse();
            v
        }
        (true, true) => {
            let mid = 0.5 * (a + b);
            let mut left = graded_interval(a, mid, true, false, h, ratio, levels);
            let right = graded_interval(mid, b, false, true, h, ratio, levels);
            left.pop();
            left.extend(right);
            left
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn weights_sum_to_two() {
        for m in [1, 2, 5, 16, 33, 128, 1024] {
            let (_, w) = gauss_legendre(m);
            assert_relative_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn exact_for_polynomials() {
        let r = Rule::new(8);
        // degree 15 is integrated exactly
        let v = r.integrate(&[0.0, 1.0], |x| x.powi(15));
        assert_relative_eq!(v, 1.0 / 16.0, epsilon = 1e-14);
    }

    #[test]
    fn nodes_sorted_and_symmetric() {
        let (x, _) = gauss_legendre(17);
        for k in 1..17 {
            assert!(x[k] > x[k - 1]);
            assert_relative_eq!(x[k], -x[16 - k], epsilon = 1e-15);
        }
    }

    #[test]
    fn graded_handles_endpoint_singularity() {
        let r = Rule::new(16);
        let br = graded_interval(0.0, 1.0, true, false, 0.25, 0.15, 30);
        let v = r.integrate(&br, |x| 1.0 / x.sqrt());
        assert_relative_eq!(v, 2.0, epsilon = 1e-10);
        let br = graded_interval(-1.0, 1.0, true, true, 0.5, 0.15, 20);
        let v = r.integrate(&br, |x| (1.0 - x * x).sqrt());
        assert_relative_eq!(v, std::f64::consts::FRAC_PI_2, epsilon = 1e-12);
    }
}
