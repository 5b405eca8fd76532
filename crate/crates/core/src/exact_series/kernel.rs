use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmath::QReal;

/// `zeta = -(1-tau)^{-1} tau^e e^{i phase}`, stored through its exponent so
/// that huge or tiny values are never formed. `u = (1-tau) zeta`, hence
/// `-u = tau^e e^{i phase}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogZeta {
    pub exponent: f64,
    /// Argument of `-u`, in (-pi, pi). Zero for real negative zeta.
    pub phase: f64,
    /// `(1-tau)^{-1}`.
    pub scale: f64,
}

impl LogZeta {
    pub fn new(exponent: f64, tau: QReal) -> Self {
        LogZeta { exponent, phase: 0.0, scale: 1.0 / (1.0 - tau.get()) }
    }

    /// From an explicit `zeta` off the ray `[0, inf)`.
    pub fn from_zeta(zeta: Complex64, tau: QReal) -> Result<Self> {
        if zeta.im == 0.0 && zeta.re >= 0.0 {
            return Err(Error::Domain(format!("zeta must avoid [0, inf), got {zeta}")));
        }
        let t = tau.get();
        let minus_u = -zeta * (1.0 - t);
        Ok(LogZeta {
            exponent: minus_u.norm().ln() / t.ln(),
            phase: minus_u.arg(),
            scale: 1.0 / (1.0 - t),
        })
    }

    /// `log(-u) = e log tau + i phase`.
    pub fn log_minus_u(&self, tau: QReal) -> Complex64 {
        Complex64::new(self.exponent * tau.get().ln(), self.phase)
    }

    /// The value of zeta, unless it is astronomically large or small.
    pub fn zeta(&self, tau: QReal) -> Option<Complex64> {
        let l = self.log_minus_u(tau);
        if l.re.abs() > 300.0 {
            return None;
        }
        Some(-l.exp() * self.scale)
    }
}

/// Bound on the summands with `|m| > m_cut` of the bilateral kernel sum,
/// assuming `|Im L| <= im_max` for the log-ratio argument `L`.
pub fn kernel_tail_bound(log_tau: f64, phase: f64, im_max: f64, m_cut: usize) -> f64 {
    let a = log_tau.abs();
    let mut s = 0.0;
    for m in m_cut + 1..m_cut + 10_000 {
        let lo = (2.0 * PI * m as f64 - im_max).max(0.0);
        let hi = 2.0 * PI * m as f64 + im_max;
        let b = PI * lo / a;
        let v = if b <= 0.0 { f64::INFINITY } else { 2.0 * PI * (phase.abs() * hi / a).exp() / b.sinh() };
        s += v;
        if v < 1e-30 * s {
            break;
        }
    }
    s
}

/// The smallest truncation whose tail bound is below `tol`, with that bound.
pub fn m_cut_for(log_tau: f64, phase: f64, im_max: f64, tol: f64) -> (usize, f64) {
    let mut m = 1;
    loop {
        let t = kernel_tail_bound(log_tau, phase, im_max, m);
        if t < tol || m >= 2000 {
            return (m, t);
        }
        m += 1;
    }
}

/// `sum_{|m| <= m_cut} pi e^{-2 m pi i e} e^{i phase (L - 2m pi i)/log tau}
/// / sin(-pi (L - 2 m pi i)/log tau)`.
///
/// This is the kernel sum with the common factor `exp(e L)` pulled out, so
/// the caller can fold that factor into its own exponent.
pub fn sine_sum(l: Complex64, exponent: f64, phase: f64, log_tau: f64, m_cut: usize) -> Complex64 {
    let mut s = Complex64::new(0.0, 0.0);
    let mc = m_cut as i64;
    for m in -mc..=mc {
        let lm = l - Complex64::new(0.0, 2.0 * PI * m as f64);
        let arg = lm * (-PI / log_tau);
        // e^{-2 m pi i e}: reduce e mod 1 first to keep the angle small
        let frac = (exponent * m as f64).rem_euclid(1.0);
        let mut num = Complex64::from_polar(PI, -2.0 * PI * frac);
        if phase != 0.0 {
            num *= (Complex64::new(0.0, phase) * lm / log_tau).exp();
        }
        s += num / arg.sin();
    }
    s
}

/// The kernel value with its truncation diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValue {
    pub value: Complex64,
    pub tail_bound: f64,
    pub m_cut: usize,
}

/// `S(w, z; u, tau)` with principal logarithms. `m_cut = None` picks the
/// truncation from the geometric tail bound so that it is below `1e-16`
/// relative to the leading factor.
pub fn s_kernel(w: Complex64, z: Complex64, u: &LogZeta, tau: QReal, m_cut: Option<usize>) -> Result<KernelValue> {
    s_kernel_logs(w.ln(), z.ln(), u, tau, m_cut)
}

/// As [`s_kernel`], with the logarithms supplied by the caller (any branch).
pub fn s_kernel_logs(
    log_w: Complex64,
    log_z: Complex64,
    u: &LogZeta,
    tau: QReal,
    m_cut: Option<usize>,
) -> Result<KernelValue> {
    let lt = tau.get().ln();
    let l = log_z - log_w;
    let ratio = l.re / lt;
    if (ratio - ratio.round()).abs() < 1e-10 {
        return Err(Error::Domain(format!("|z|/|w| = tau^{ratio} hits a pole of the kernel")));
    }
    let (auto_cut, auto_tail) = m_cut_for(lt, u.phase, l.im.abs(), 1e-16);
    let (m_cut, tail) = match m_cut {
        Some(m) => (m, kernel_tail_bound(lt, u.phase, l.im.abs(), m)),
        None => (auto_cut, auto_tail),
    };
    let lead = (l * u.exponent).exp();
    let value = lead * sine_sum(l, u.exponent, u.phase, lt, m_cut);
    Ok(KernelValue { value, tail_bound: tail * lead.norm(), m_cut })
}
