//! Expansion coefficients of Fredholm determinants of Nyström matrices.
//!
//! For an `n x n` matrix `M`, `det(I + lambda M) = sum_k e_k lambda^k` where
//! `e_k` is the k-th elementary symmetric polynomial of the eigenvalues. The
//! k-th coefficient is exactly the tensor-product quadrature of the k-fold
//! determinant integral, so this is how the series terms are evaluated for
//! all k at once.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::qmath::lu_det_in_place;

/// Row-major product of two `n x n` matrices.
pub fn matmul(a: &[Complex64], b: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for l in 0..n {
            let ail = a[i * n + l];
            if ail == Complex64::new(0.0, 0.0) {
                continue;
            }
            let row = &b[l * n..(l + 1) * n];
            let o = &mut out[i * n..(i + 1) * n];
            for (oj, bj) in o.iter_mut().zip(row) {
                *oj += ail * bj;
            }
        }
    }
    out
}

fn trace_of_product(a: &[Complex64], b: &[Complex64], n: usize) -> Complex64 {
    let mut s = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            s += a[i * n + j] * b[j * n + i];
        }
    }
    s
}

/// `e_1..e_kmax` (kmax <= 4) from power traces via Newton's identities.
pub fn elementary_by_traces(m: &[Complex64], n: usize, kmax: usize) -> Vec<Complex64> {
    assert!(kmax <= 4, "trace route is used for kmax <= 4");
    let zero = Complex64::new(0.0, 0.0);
    let mut p = [zero; 5];
    p[1] = (0..n).map(|i| m[i * n + i]).sum();
    if kmax >= 2 {
        p[2] = trace_of_product(m, m, n);
    }
    if kmax >= 3 {
        let m2 = matmul(m, m, n);
        p[3] = trace_of_product(&m2, m, n);
        if kmax >= 4 {
            p[4] = trace_of_product(&m2, &m2, n);
        }
    }
    let mut e = vec![Complex64::new(1.0, 0.0)];
    for k in 1..=kmax {
        let mut s = zero;
        for i in 1..=k {
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            s += e[k - i] * p[i] * sign;
        }
        e.push(s / k as f64);
    }
    e.remove(0);
    e
}

/// Coefficients `c_0..c_{j-1}` of `det(I + lambda M)` from its values at
/// `j` points on the unit circle. Coefficients beyond `j - 1` alias onto the
/// low ones, so `j` should exceed the number of non-negligible terms.
pub fn coefficients_by_dft(m: &[Complex64], n: usize, j: usize) -> Vec<Complex64> {
    let vals: Vec<Complex64> = (0..j)
        .map(|l| {
            let lam = Complex64::from_polar(1.0, 2.0 * PI * l as f64 / j as f64);
            let mut a: Vec<Complex64> = m.iter().map(|x| x * lam).collect();
            for i in 0..n {
                a[i * n + i] += 1.0;
            }
            lu_det_in_place(&mut a, n)
        })
        .collect();
    (0..j)
        .map(|k| {
            let s: Complex64 = vals
                .iter()
                .enumerate()
                .map(|(l, v)| v * Complex64::from_polar(1.0, -2.0 * PI * (k * l) as f64 / j as f64))
                .sum();
            s / j as f64
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_routes_agree_on_diagonal() {
        // eigenvalues 0.5, -0.2, 0.1: e1 = 0.4, e2 = -0.1 - 0.02 + 0.05, e3 = -0.01
        let n = 3;
        let mut m = vec![Complex64::new(0.0, 0.0); 9];
        for (i, v) in [0.5, -0.2, 0.1].iter().enumerate() {
            m[i * n + i] = Complex64::new(*v, 0.0);
        }
        let e = elementary_by_traces(&m, n, 3);
        let c = coefficients_by_dft(&m, n, 8);
        let want = [0.4, -0.07, -0.01];
        for k in 0..3 {
            assert!((e[k].re - want[k]).abs() < 1e-15);
            assert!((c[k + 1].re - want[k]).abs() < 1e-15);
        }
        assert!((c[0].re - 1.0).abs() < 1e-15);
    }
}
