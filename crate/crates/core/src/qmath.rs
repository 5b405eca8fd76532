//! q-series special functions, dense complex determinants and the Cauchy
//! determinant closed forms.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A deformation parameter strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct QReal(f64);

impl QReal {
    pub fn new(tau: f64) -> Result<Self> {
        if tau > 0.0 && tau < 1.0 {
            Ok(QReal(tau))
        } else {
            Err(Error::Domain(format!("tau must lie in (0,1), got {tau}")))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

/// When to stop an infinite product or series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPolicy {
    pub abs_tol: f64,
    pub max_terms: usize,
}

impl TruncationPolicy {
    pub fn new(abs_tol: f64, max_terms: usize) -> Result<Self> {
        if !(abs_tol > 0.0) || max_terms == 0 {
            return Err(Error::Config(format!(
                "truncation policy needs abs_tol > 0 and max_terms >= 1 (got {abs_tol}, {max_terms})"
            )));
        }
        Ok(TruncationPolicy { abs_tol, max_terms })
    }
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy {
            abs_tol: 1e-16,
            max_terms: 10_000,
        }
    }
}

/// `(a; tau)_inf` together with a bound on the relative error of the
/// truncated tail.
pub fn qpochhammer_with_tail(
    a: Complex64,
    tau: QReal,
    policy: &TruncationPolicy,
) -> Result<(Complex64, f64)> {
    if !(a.re.is_finite() && a.im.is_finite()) {
        return Err(Error::Domain(format!("q-Pochhammer argument not finite: {a}")));
    }
    let tau = tau.get();
    let mut prod = Complex64::new(1.0, 0.0);
    let mut term = a;
    for _ in 0..policy.max_terms {
        let mag = term.norm();
        if mag < policy.abs_tol {
            return Ok((prod, 2.0 * mag / (1.0 - tau)));
        }
        prod *= Complex64::new(1.0, 0.0) - term;
        term *= tau;
    }
    Err(Error::Truncation(format!(
        "({a}; {tau})_inf needs more than {} factors",
        policy.max_terms
    )))
}

/// The q-Pochhammer symbol `prod_{n>=0} (1 - a tau^n)`.
pub fn qpochhammer(a: Complex64, tau: QReal, policy: &TruncationPolicy) -> Result<Complex64> {
    qpochhammer_with_tail(a, tau, policy).map(|(v, _)| v)
}

/// Fast path used inside quadrature loops: default truncation, no error
/// reporting. The argument must be finite.
#[inline]
pub(crate) fn qpoch(a: Complex64, tau: f64) -> Complex64 {
    let mut prod = Complex64::new(1.0 - a.re, -a.im);
    let mut term = a * tau;
    while term.norm_sqr() >= 1e-32 {
        prod *= Complex64::new(1.0 - term.re, -term.im);
        term *= tau;
    }
    prod
}

/// `k_tau! = prod_{a=1}^k (1 - tau^a) / (1 - tau)^k`.
pub fn qfactorial(k: u32, tau: QReal) -> f64 {
    let tau = tau.get();
    let mut out = 1.0;
    let mut ta = 1.0;
    for _ in 0..k {
        ta *= tau;
        out *= (1.0 - ta) / (1.0 - tau);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QExpMode {
    Product,
    Series,
}

/// The q-exponential `e_tau(x)`.
///
/// `Product` evaluates `1/((1-tau)x; tau)_inf` and is valid away from the
/// poles `x = (1-tau)^{-1} tau^{-m}`; `Series` sums `x^k / k_tau!` and needs
/// `|x| < 1`.
pub fn qexp(x: Complex64, tau: QReal, mode: QExpMode, policy: &TruncationPolicy) -> Result<Complex64> {
    let t = tau.get();
    match mode {
        QExpMode::Product => {
            let a = x * (1.0 - t);
            let mut term = a;
            for m in 0..policy.max_terms {
                if term.norm() < policy.abs_tol {
                    break;
                }
                if (Complex64::new(1.0, 0.0) - term).norm() < 1e-14 {
                    return Err(Error::Pole(format!("e_tau has a pole at x = {x} (m = {m})")));
                }
                term *= t;
            }
            let den = qpochhammer(a, tau, policy)?;
            Ok(den.inv())
        }
        QExpMode::Series => {
            if x.norm() >= 1.0 {
                return Err(Error::Domain(format!("q-exp series needs |x| < 1, got |x| = {}", x.norm())));
            }
            // term_k = x^k / k_tau!, built by the ratio x (1-tau)/(1-tau^k)
            let mut sum = Complex64::new(1.0, 0.0);
            let mut term = Complex64::new(1.0, 0.0);
            let mut tk = 1.0;
            for _ in 1..=policy.max_terms {
                tk *= t;
                term *= x * ((1.0 - t) / (1.0 - tk));
                sum += term;
                if term.norm() < policy.abs_tol {
                    return Ok(sum);
                }
            }
            Err(Error::Truncation(format!(
                "q-exp series at |x| = {} needs more than {} terms",
                x.norm(),
                policy.max_terms
            )))
        }
    }
}

/// Dense square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(n: usize, data: Vec<Complex64>) -> Result<Self> {
        if n == 0 || data.len() != n * n {
            return Err(Error::Domain(format!("need a nonempty square matrix, got n={n}, len={}", data.len())));
        }
        if data.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::Domain("matrix has non-finite entries".into()));
        }
        Ok(ComplexMatrix { n, data })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Result<Self> {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self::new(n, data)
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        ComplexMatrix { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }
}

/// Determinant by LU factorization with partial pivoting.
pub fn det_complex(m: &ComplexMatrix) -> Complex64 {
    let mut a = m.data.clone();
    lu_det_in_place(&mut a, m.n)
}

/// Determinant of the row-major `n x n` matrix in `a`, destroying it.
pub fn lu_det_in_place(a: &mut [Complex64], n: usize) -> Complex64 {
    debug_assert_eq!(a.len(), n * n);
    let mut det = Complex64::new(1.0, 0.0);
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col * n + col].norm_sqr();
        for r in col + 1..n {
            let v = a[r * n + col].norm_sqr();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if piv != col {
            for j in 0..n {
                a.swap(col * n + j, piv * n + j);
            }
            det = -det;
        }
        let d = a[col * n + col];
        det *= d;
        let dinv = d.inv();
        for r in col + 1..n {
            let f = a[r * n + col] * dinv;
            if f == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in col + 1..n {
                let v = a[col * n + j];
                a[r * n + j] -= f * v;
            }
        }
    }
    det
}

/// Fixed-size determinant for the tiny matrices in quadrature inner loops.
#[inline]
pub(crate) fn small_det(a: &mut [Complex64], n: usize) -> Complex64 {
    match n {
        1 => a[0],
        2 => a[0] * a[3] - a[1] * a[2],
        3 => {
            a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6])
                + a[2] * (a[3] * a[7] - a[4] * a[6])
        }
        _ => lu_det_in_place(a, n),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CauchyVariant {
    /// `det[1/(x_i - y_j)]`
    Single,
    /// `det[1/((x_i - y_j)(1 - x_i y_j))]`
    Double,
}

/// Product form of the Cauchy determinant (or its double variant).
pub fn cauchy_closed_form(x: &[Complex64], y: &[Complex64], variant: CauchyVariant) -> Result<Complex64> {
    let k = x.len();
    if y.len() != k || k == 0 {
        return Err(Error::Domain(format!("need two nonempty vectors of equal length ({} vs {})", k, y.len())));
    }
    let one = Complex64::new(1.0, 0.0);
    let mut num = one;
    for i in 0..k {
        for j in i + 1..k {
            num *= (x[i] - x[j]) * (y[j] - y[i]);
            if variant == CauchyVariant::Double {
                num *= (one - x[i] * x[j]) * (one - y[i] * y[j]);
            }
        }
    }
    let mut den = one;
    for xi in x {
        for yj in y {
            let d = xi - yj;
            if d.norm() == 0.0 {
                return Err(Error::Pole(format!("coincident points x = y = {xi}")));
            }
            den *= d;
            if variant == CauchyVariant::Double {
                let e = one - xi * yj;
                if e.norm() == 0.0 {
                    return Err(Error::Pole(format!("x y = 1 at x = {xi}, y = {yj}")));
                }
                den *= e;
            }
        }
    }
    Ok(num / den)
}

/// Hadamard's bound: the product of the Euclidean column norms.
pub fn hadamard_bound(m: &ComplexMatrix) -> f64 {
    let n = m.n;
    (0..n)
        .map(|j| (0..n).map(|i| m.get(i, j).norm_sqr()).sum::<f64>().sqrt())
        .product()
}
