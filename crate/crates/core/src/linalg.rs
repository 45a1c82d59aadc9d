//! Dense kernels: Hermitian tridiagonalization, tridiagonal QL, LU determinant,
//! complex inversion.

use num_complex::Complex64;

use crate::ensembles::HermitianMatrix;
use crate::error::{Error, Result};

const QL_MAX_ITER: usize = 50;

/// Reduces a Hermitian matrix to a real symmetric tridiagonal one by Householder
/// reflections `H = I - tau v v^*` chosen so that each subdiagonal entry is real.
/// Returns `(diagonal, subdiagonal)`.
pub fn tridiagonalize(h: &HermitianMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = h.n();
    // Lower triangle in column-major order: a[i + j*n], i >= j.
    let mut a = vec![Complex64::new(0.0, 0.0); n * n];
    for j in 0..n {
        for i in j..n {
            a[i + j * n] = h.get(i, j);
        }
    }
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n.saturating_sub(1)];
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    let mut w = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n.saturating_sub(1) {
        let m = n - k - 1;
        let col = k * n;
        let alpha = a[k + 1 + col];
        let xnorm2: f64 = (k + 2..n).map(|i| a[i + col].norm_sqr()).sum();
        d[k] = a[k + col].re;
        if xnorm2 == 0.0 && alpha.im == 0.0 {
            e[k] = alpha.re;
            continue;
        }
        let beta = -(alpha.norm_sqr() + xnorm2).sqrt().copysign(alpha.re);
        let tau = Complex64::new((beta - alpha.re) / beta, -alpha.im / beta);
        let scal = (alpha - beta).inv();
        e[k] = beta;
        // v = (1, x[1..] / (alpha - beta)) on indices k+1..n
        let vs = &mut v[..m];
        vs[0] = Complex64::new(1.0, 0.0);
        for i in 1..m {
            vs[i] = a[k + 1 + i + col] * scal;
        }
        // H^* A H with H^* x = beta e1: y = tau A v
        let ws = &mut w[..m];
        ws.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        for jj in 0..m {
            let j = k + 1 + jj;
            let cj = j * n;
            let vj = vs[jj];
            let mut acc = a[j + cj] * vj;
            for ii in jj + 1..m {
                let aij = a[k + 1 + ii + cj];
                ws[ii] += aij * vj;
                acc += aij.conj() * vs[ii];
            }
            ws[jj] += acc;
        }
        for z in ws.iter_mut() {
            *z *= tau;
        }
        // w = y - (tau/2) (y^* v) v
        let ydotv: Complex64 = ws.iter().zip(vs.iter()).map(|(y, x)| y.conj() * x).sum();
        let c = -0.5 * tau * ydotv;
        for i in 0..m {
            ws[i] += c * vs[i];
        }
        // A <- A - v w^* - w v^*  (lower triangle)
        for jj in 0..m {
            let j = k + 1 + jj;
            let cj = j * n;
            let wj = ws[jj].conj();
            let vj = vs[jj].conj();
            for ii in jj..m {
                a[k + 1 + ii + cj] -= vs[ii] * wj + ws[ii] * vj;
            }
            let dd = a[j + cj];
            a[j + cj] = Complex64::new(dd.re, 0.0);
        }
    }
    if n > 0 {
        d[n - 1] = a[(n - 1) + (n - 1) * n].re;
    }
    (d, e)
}

/// Eigenvalues of the symmetric tridiagonal matrix (d, e) by implicit QL with
/// Wilkinson-type shifts. Unsorted on return.
pub fn tridiagonal_eigenvalues(mut d: Vec<f64>, e_in: &[f64]) -> Result<Vec<f64>> {
    let n = d.len();
    if n == 0 {
        return Ok(d);
    }
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(e_in);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > QL_MAX_ITER {
                return Err(Error::Numeric(format!("QL iteration exceeded {QL_MAX_ITER} sweeps for eigenvalue {l}")));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(d)
}

/// Sorted eigenvalues of a Hermitian matrix.
pub fn hermitian_eigenvalues(h: &HermitianMatrix) -> Result<Vec<f64>> {
    let (d, e) = tridiagonalize(h);
    let mut ev = tridiagonal_eigenvalues(d, &e)?;
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(ev)
}

/// Determinant of a real row-major `n x n` matrix by LU with partial pivoting.
pub fn det_real(n: usize, mut a: Vec<f64>) -> f64 {
    assert_eq!(a.len(), n * n);
    let mut det = 1.0;
    for k in 0..n {
        let mut p = k;
        let mut best = a[k * n + k].abs();
        for i in k + 1..n {
            let v = a[i * n + k].abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best == 0.0 {
            return 0.0;
        }
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            det = -det;
        }
        let piv = a[k * n + k];
        det *= piv;
        for i in k + 1..n {
            let f = a[i * n + k] / piv;
            if f != 0.0 {
                for j in k + 1..n {
                    a[i * n + j] -= f * a[k * n + j];
                }
            }
        }
    }
    det
}

/// Inverse of a complex row-major matrix by Gauss–Jordan with partial pivoting.
pub fn inverse_complex(n: usize, a: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut m = a.to_vec();
    let mut inv: Vec<Complex64> = (0..n * n)
        .map(|k| if k / n == k % n { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) })
        .collect();
    for k in 0..n {
        let mut p = k;
        let mut best = m[k * n + k].norm();
        for i in k + 1..n {
            let v = m[i * n + k].norm();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best == 0.0 {
            return Err(Error::Numeric("singular matrix".into()));
        }
        if p != k {
            for j in 0..n {
                m.swap(k * n + j, p * n + j);
                inv.swap(k * n + j, p * n + j);
            }
        }
        let piv = m[k * n + k].inv();
        for j in 0..n {
            m[k * n + j] *= piv;
            inv[k * n + j] *= piv;
        }
        for i in 0..n {
            if i != k {
                let f = m[i * n + k];
                if f != Complex64::new(0.0, 0.0) {
                    for j in 0..n {
                        let mk = m[k * n + j];
                        let ik = inv[k * n + j];
                        m[i * n + j] -= f * mk;
                        inv[i * n + j] -= f * ik;
                    }
                }
            }
        }
    }
    Ok(inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{sample_wigner, ElementLaw, EnsembleSpec};
    use approx::assert_relative_eq;

    #[test]
    fn small_spectra() {
        let h = HermitianMatrix::from_real_symmetric(3, &[3.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0]);
        assert_eq!(hermitian_eigenvalues(&h).unwrap(), vec![1.0, 2.0, 3.0]);
        let h = HermitianMatrix::from_real_symmetric(2, &[0.0, 1.0, 1.0, 0.0]);
        let ev = hermitian_eigenvalues(&h).unwrap();
        assert_relative_eq!(ev[0], -1.0, epsilon = 1e-15);
        assert_relative_eq!(ev[1], 1.0, epsilon = 1e-15);
        // Pauli-y: purely imaginary off-diagonal
        let mut h = HermitianMatrix::zeros(2);
        h.set(1, 0, Complex64::new(0.0, 1.0));
        let ev = hermitian_eigenvalues(&h).unwrap();
        assert_relative_eq!(ev[0], -1.0, epsilon = 1e-15);
        assert_relative_eq!(ev[1], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn matches_nalgebra_oracle() {
        for (n, seed) in [(1, 1), (5, 2), (16, 3), (40, 4)] {
            let x = sample_wigner(&EnsembleSpec::new(n, ElementLaw::Gaussian, 0.0, seed).unwrap()).unwrap();
            let ours = hermitian_eigenvalues(&x).unwrap();
            let m = nalgebra::DMatrix::from_fn(n, n, |i, j| x.get(i, j));
            let mut theirs: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
            theirs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (a, b) in ours.iter().zip(&theirs) {
                assert!((a - b).abs() < 1e-11 * (1.0 + x.frobenius_norm()), "{a} vs {b}");
            }
            let tr: f64 = ours.iter().sum();
            assert!((tr - x.trace()).abs() <= 1e-10 * (1.0 + x.trace().abs()) * n as f64);
        }
    }

    #[test]
    fn det_and_inverse() {
        assert_relative_eq!(det_real(2, vec![1.0, 2.0, 3.0, 4.0]), -2.0, epsilon = 1e-14);
        let a = vec![
            Complex64::new(1.0, 1.0),
            Complex64::new(2.0, 0.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(3.0, 0.5),
        ];
        let inv = inverse_complex(2, &a).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let s: Complex64 = (0..2).map(|k| a[i * 2 + k] * inv[k * 2 + j]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((s - want).norm() < 1e-14);
            }
        }
    }
}
