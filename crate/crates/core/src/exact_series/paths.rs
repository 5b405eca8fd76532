//! The two contour parametrizations of the series integrals.
//!
//! Path A integrates over circles `|w| = tau^{-1/4}`, `|z| = tau^{1/2}`.
//! Path B uses `w = e^{t^{-1/3} u}`, `z = e^{t^{-1/3} v}` with `u`, `v` on the
//! steepest-descent Gamma contours, where every factor stays of order one.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::kernel::{m_cut_for, s_kernel, sine_sum, LogZeta};
use super::steepest_f_value as steepest_f;
use crate::asep_sim::AsepParams;
use crate::contour::{CircleContour, Discretized, GammaContour, GammaSide};
use crate::error::{Error, Result};
use crate::qmath::{cauchy_closed_form, det_complex, qpoch, CauchyVariant, ComplexMatrix};

use super::engine::PairTables;

const TWO_PI_I: Complex64 = Complex64::new(0.0, 2.0 * PI);

/// Circle radii `(R_w, R_z)`.
pub fn path_a_radii(tau: f64) -> (f64, f64) {
    (tau.powf(-0.25), tau.sqrt())
}

fn kernel_cut(log_tau: f64, phase: f64) -> usize {
    m_cut_for(log_tau, phase, 2.0 * PI, 1e-17).0
}

/// Shared assembly once nodes and one-pair factors are known.
fn tables_from(
    w: &[Complex64],
    z: &[Complex64],
    tau: f64,
    pair: impl Fn(usize, usize) -> Result<Complex64>,
    c_scale: f64,
) -> Result<PairTables> {
    let (nw, nz) = (w.len(), z.len());
    let mut p = Vec::with_capacity(nw * nz);
    let mut c = Vec::with_capacity(nw * nz);
    for i in 0..nw {
        for j in 0..nz {
            p.push(pair(i, j)?);
            c.push(Complex64::new(c_scale, 0.0) / ((w[i] - z[j]) * (1.0 - w[i] * z[j])));
        }
    }
    let mut x = Vec::with_capacity(nw * nw);
    for a in w {
        for b in w {
            x.push(qpoch(a * b * tau, tau));
        }
    }
    let mut y = Vec::with_capacity(nz * nz);
    for a in z {
        for b in z {
            y.push(qpoch(a * b * tau, tau));
        }
    }
    let mut zinv = Vec::with_capacity(nz * nw);
    for b in z {
        for a in w {
            zinv.push(qpoch(a * b * tau, tau).inv());
        }
    }
    Ok(PairTables { nw, nz, p, c, x, y, zinv })
}

/// Path A inputs: the physical time `time` (so the exponent carries
/// `gamma * time`) and the site `x`.
pub(crate) fn path_a_tables(
    zeta: &LogZeta,
    time: f64,
    x: i64,
    params: &AsepParams,
    nodes_w: usize,
    nodes_z: usize,
) -> Result<PairTables> {
    let tau = params.tau;
    let lt = tau.ln();
    let (rw, rz) = path_a_radii(tau);
    if !(rw > 1.0 && 1.0 > 1.0 / rw && 1.0 / rw > rz && rz > tau * rw) {
        return Err(Error::Config("circle radii violate R_w > 1 > 1/R_w > R_z > tau R_w".into()));
    }
    let cw = CircleContour::new(rw, nodes_w)?.discretize();
    let cz = CircleContour::new(rz, nodes_z)?.discretize();
    let gt = params.gamma * time;
    let m_cut = kernel_cut(lt, zeta.phase);
    let e = zeta.exponent;
    let xm1 = (x - 1) as f64;
    // per-node pieces
    let w_part: Vec<(Complex64, Complex64, Complex64)> = cw
        .iter()
        .map(|(w, dw)| (gt / (1.0 + w) - (1.0 + w).ln() * xm1 - w.ln() * e, qpoch(-w, tau), dw / TWO_PI_I))
        .collect();
    let z_part: Vec<(Complex64, Complex64, Complex64)> = cz
        .iter()
        .map(|(z, dz)| {
            (
                -gt / (1.0 + z) + (1.0 + z).ln() * xm1 + z.ln() * e,
                qpoch(z * z, tau) / qpoch(-z, tau) / (-lt * z),
                dz / TWO_PI_I,
            )
        })
        .collect();
    let (w, z) = (&cw.z, &cz.z);
    let pair = |i: usize, j: usize| {
        let (ew, pw, dw) = w_part[i];
        let (ez, pz, dz) = z_part[j];
        let expo = ew + ez;
        if expo.re > 700.0 {
            return Err(Error::NumericRange(format!("path A exponent {} overflows", expo.re)));
        }
        let l = z[j].ln() - w[i].ln();
        let s = sine_sum(l, e, zeta.phase, lt, m_cut);
        Ok(expo.exp() * pw * pz * s / qpoch(z[j] * w[i] * tau, tau) * dw * dz)
    };
    tables_from(w, z, tau, pair, 1.0)
}

/// The path A integrand `T D B G` at one point, built factor by factor from
/// the definitions (no quadrature weights, no normalization). `x` is the
/// literal formula label, see [`super::formula_site`].
pub fn path_a_integrand(
    w: &[Complex64],
    z: &[Complex64],
    zeta: &LogZeta,
    time: f64,
    x: i64,
    params: &AsepParams,
) -> Result<Complex64> {
    let k = w.len();
    let tau = params.tau;
    let qr = params.qreal();
    let gt = params.gamma * time;
    let mut t_fac = Complex64::new(1.0, 0.0);
    let mut b_fac = Complex64::new(1.0, 0.0);
    for a in 0..k {
        let (wa, za) = (w[a], z[a]);
        t_fac *= (gt / (1.0 + wa) - gt / (1.0 + za)).exp()
            * ((1.0 + za) / (1.0 + wa)).powi((x - 1) as i32)
            * qpoch(-wa, tau)
            * qpoch(za * za, tau)
            / (qpoch(-za, tau) * qpoch(za * wa, tau));
        b_fac *= s_kernel(wa, za, zeta, qr, None)?.value / (-tau.ln() * za);
    }
    let d = det_complex(&ComplexMatrix::from_fn(k, |a, b| (w[a] - z[b]).inv())?);
    let mut g = Complex64::new(1.0, 0.0);
    for a in 0..k {
        for b in a + 1..k {
            g *= qpoch(w[a] * w[b], tau) * qpoch(z[a] * z[b], tau) / (qpoch(z[a] * w[b], tau) * qpoch(w[a] * z[b], tau));
        }
    }
    Ok(t_fac * d * b_fac * g)
}

/// `D` in closed form, for cross-checking the LU determinant.
pub fn path_a_cauchy(w: &[Complex64], z: &[Complex64]) -> Result<Complex64> {
    cauchy_closed_form(w, z, CauchyVariant::Single)
}

/// Gamma-contour settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaGrid {
    pub epsilon: f64,
    pub panel_len: f64,
    pub nodes_per_panel: usize,
}

/// `epsilon_0 = min(0.2, |log tau| / 20)`.
pub fn default_epsilon(tau: f64) -> f64 {
    0.2f64.min(tau.ln().abs() / 20.0)
}

/// The two Gamma contours, discretized, in the scaled variables `u`, `v`.
pub fn gamma_contours(t: f64, grid: &GammaGrid) -> (Discretized, Discretized) {
    let base = GammaContour {
        side: GammaSide::U,
        rho: 0.0,
        epsilon: grid.epsilon,
        t,
        panel_len: grid.panel_len,
        nodes_per_panel: grid.nodes_per_panel,
    };
    let u = base.discretize();
    let v = GammaContour { side: GammaSide::V, rho: -t.cbrt().recip(), ..base }.discretize();
    (u, v)
}

pub(crate) fn check_path_b(t: f64, tau: f64, eps: f64) -> Result<()> {
    if (20.0 * eps).exp() > 1.0 / tau {
        return Err(Error::Config(format!("epsilon {eps} violates e^(20 eps) <= 1/tau for tau = {tau}")));
    }
    if t < 8.0 {
        return Err(Error::Config(format!("path B needs t >= 8, got {t}")));
    }
    Ok(())
}

/// Path B for a general exponent: `t` is the scaled time (`gamma * time`),
/// `x` the site and `zeta` the Laplace variable. In the scaled setting the
/// drift term `r` of the `A_4` factor is the `r~` of the scaling; in general
/// it is `(e + t/4 + (x-1)/2) t^{-1/3}`.
pub(crate) fn path_b_tables(t: f64, x: i64, zeta: &LogZeta, params: &AsepParams, grid: &GammaGrid) -> Result<PairTables> {
    let tau = params.tau;
    let lt = tau.ln();
    check_path_b(t, tau, grid.epsilon)?;
    let (cu, cv) = gamma_contours(t, grid);
    let s = t.cbrt();
    let e = zeta.exponent;
    let xm1 = (x - 1) as f64;
    let r_eff = (e + t / 4.0 + xm1 / 2.0) / s;
    let m_cut = kernel_cut(lt, zeta.phase);
    // u side: exponent t F(U) + (x-1)(U/2 - log(1+e^U)) - r u, and A5's u-part
    let u_part: Vec<(Complex64, Complex64, Complex64)> = cu
        .iter()
        .map(|(u, du)| {
            let uu = u / s;
            let eu = uu.exp();
            (
                steepest_f(uu) * t + (uu * 0.5 - (1.0 + eu).ln()) * xm1 - u * r_eff,
                qpoch(-eu, tau) * eu * s,
                du / TWO_PI_I,
            )
        })
        .collect();
    let v_part: Vec<(Complex64, Complex64, Complex64)> = cv
        .iter()
        .map(|(v, dv)| {
            let vv = v / s;
            let ev = vv.exp();
            (
                -steepest_f(vv) * t + ((1.0 + ev).ln() - vv * 0.5) * xm1 + v * r_eff,
                qpoch(ev * ev, tau) / qpoch(-ev, tau),
                dv / TWO_PI_I,
            )
        })
        .collect();
    let w: Vec<Complex64> = cu.z.iter().map(|u| (u / s).exp()).collect();
    let z: Vec<Complex64> = cv.z.iter().map(|v| (v / s).exp()).collect();
    let pref = 1.0 / (s * -lt);
    let pair = |i: usize, j: usize| {
        let (eu, pu, du) = u_part[i];
        let (ev, pv, dv) = v_part[j];
        let expo = eu + ev;
        if expo.re > 700.0 {
            return Err(Error::NumericRange(format!("path B exponent {} overflows", expo.re)));
        }
        let l = (cv.z[j] - cu.z[i]) / s;
        let a2 = sine_sum(l, e, zeta.phase, lt, m_cut) * pref;
        Ok(expo.exp() * a2 * pu * pv / qpoch(w[i] * z[j] * tau, tau) * du * dv)
    };
    tables_from(&w, &z, tau, pair, 1.0 / (s * s))
}

/// The path B integrand `A_1 .. A_5 B_1 B_2` in the scaled setting, factor by
/// factor from the definitions.
pub fn path_b_integrand(
    u: &[Complex64],
    v: &[Complex64],
    t: f64,
    alpha: f64,
    r_tilde: f64,
    params: &AsepParams,
) -> Complex64 {
    let k = u.len();
    let tau = params.tau;
    let lt = tau.ln();
    let s = t.cbrt();
    let x = (t.powf(2.0 / 3.0) * alpha).floor();
    let theta = t / 4.0 + (x - 1.0) / 2.0 - s * r_tilde;
    let uu: Vec<Complex64> = u.iter().map(|a| a / s).collect();
    let vv: Vec<Complex64> = v.iter().map(|a| a / s).collect();
    let mut a = Complex64::new(1.0, 0.0);
    for i in 0..k {
        let a1 = ((steepest_f(uu[i]) - steepest_f(vv[i])) * t).exp();
        let mut a2 = Complex64::new(0.0, 0.0);
        for m in -40i64..=40 {
            let num = Complex64::from_polar(PI / (s * -lt), 2.0 * PI * m as f64 * theta);
            let arg = (vv[i] - uu[i] - Complex64::new(0.0, 2.0 * PI * m as f64)) * (-PI / lt);
            a2 += num / arg.sin();
        }
        let a3 = ((1.0 + vv[i].exp()) * (-vv[i] / 2.0).exp() / ((1.0 + uu[i].exp()) * (-uu[i] / 2.0).exp()))
            .powi(x as i32 - 1);
        let a4 = (r_tilde * (v[i] - u[i])).exp();
        let (eu, ev) = (uu[i].exp(), vv[i].exp());
        let a5 = s * qpoch(-eu, tau) * qpoch(ev * ev, tau) * eu / (qpoch(-ev, tau) * qpoch(tau * eu * ev, tau));
        a *= a1 * a2 * a3 * a4 * a5;
    }
    let b1 = det_complex(
        &ComplexMatrix::from_fn(k, |i, j| {
            Complex64::new(1.0 / (s * s), 0.0) / ((uu[i].exp() - vv[j].exp()) * (1.0 - (uu[i] + vv[j]).exp()))
        })
        .expect("finite entries"),
    );
    let mut b2 = Complex64::new(1.0, 0.0);
    for i in 0..k {
        for j in i + 1..k {
            b2 *= qpoch(tau * (uu[i] + uu[j]).exp(), tau) * qpoch(tau * (vv[i] + vv[j]).exp(), tau)
                / (qpoch(tau * (uu[i] + vv[j]).exp(), tau) * qpoch(tau * (vv[i] + uu[j]).exp(), tau));
        }
    }
    a * b1 * b2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::QReal;

    fn params() -> AsepParams {
        AsepParams::from_tau(0.005).unwrap()
    }

    #[test]
    fn cauchy_matches_lu_on_circles() {
        let (rw, rz) = path_a_radii(0.005);
        let w: Vec<Complex64> = (0..3).map(|i| Complex64::from_polar(rw, 0.4 + 2.0 * i as f64)).collect();
        let z: Vec<Complex64> = (0..3).map(|i| Complex64::from_polar(rz, -1.0 + 1.7 * i as f64)).collect();
        let d = det_complex(&ComplexMatrix::from_fn(3, |a, b| (w[a] - z[b]).inv()).unwrap());
        let c = path_a_cauchy(&w, &z).unwrap();
        assert!((d - c).norm() < 1e-12 * c.norm());
    }

    #[test]
    fn path_b_integrand_is_path_a_after_substitution() {
        let p = params();
        let (t, alpha, r) = (12.0f64, 0.3, -0.2);
        let x = (t.powf(2.0 / 3.0) * alpha).floor() as i64;
        let e = -t / 4.0 - (x as f64 - 1.0) / 2.0 + t.cbrt() * r;
        let zeta = LogZeta::new(e, QReal::new(0.005).unwrap());
        let s = t.cbrt();
        let u = [Complex64::new(0.2, 0.9), Complex64::new(0.25, -1.3)];
        let v = [Complex64::new(-1.1, 0.4), Complex64::new(-1.3, -0.2)];
        let w: Vec<Complex64> = u.iter().map(|a| (a / s).exp()).collect();
        let z: Vec<Complex64> = v.iter().map(|a| (a / s).exp()).collect();
        let a = path_a_integrand(&w, &z, &zeta, t / p.gamma, x, &p).unwrap();
        let mut jac = Complex64::new(1.0, 0.0);
        for i in 0..2 {
            jac *= w[i] * z[i] / (s * s);
        }
        let b = path_b_integrand(&u, &v, t, alpha, r, &p);
        assert!((a * jac - b).norm() < 1e-10 * b.norm(), "{} vs {}", a * jac, b);
    }

    #[test]
    fn tables_reproduce_literal_integrands() {
        let p = params();
        let qr = p.qreal();
        let zeta = LogZeta::new(-1.7, qr);
        let (time, x) = (3.0, 1);
        let tabs = path_a_tables(&zeta, time, x, &p, 8, 6).unwrap();
        let (rw, rz) = path_a_radii(p.tau);
        let cw = CircleContour::new(rw, 8).unwrap().discretize();
        let cz = CircleContour::new(rz, 6).unwrap().discretize();
        let ij = [(1usize, 4usize), (6, 2)];
        let w: Vec<Complex64> = ij.iter().map(|&(i, _)| cw.z[i]).collect();
        let z: Vec<Complex64> = ij.iter().map(|&(_, j)| cz.z[j]).collect();
        let mut wt = Complex64::new(1.0, 0.0);
        for &(i, j) in &ij {
            wt *= cw.dz[i] * cz.dz[j] / (TWO_PI_I * TWO_PI_I);
        }
        let lit = path_a_integrand(&w, &z, &zeta, time, x, &p).unwrap() * wt;
        let tab = tabs.summand(&ij);
        assert!((lit - tab).norm() < 1e-11 * lit.norm(), "{lit} vs {tab}");

        let (t, alpha, r) = (10.0f64, -0.4, 0.3);
        let xs = (t.powf(2.0 / 3.0) * alpha).floor() as i64;
        let e = -t / 4.0 - (xs as f64 - 1.0) / 2.0 + t.cbrt() * r;
        let grid = GammaGrid { epsilon: 0.1, panel_len: 2.0, nodes_per_panel: 4 };
        let tb = path_b_tables(t, xs, &LogZeta::new(e, qr), &p, &grid).unwrap();
        let (cu, cv) = gamma_contours(t, &grid);
        let ij = [(3usize, 7usize), (10, 1)];
        let u: Vec<Complex64> = ij.iter().map(|&(i, _)| cu.z[i]).collect();
        let v: Vec<Complex64> = ij.iter().map(|&(_, j)| cv.z[j]).collect();
        let mut wt = Complex64::new(1.0, 0.0);
        for &(i, j) in &ij {
            wt *= cu.dz[i] * cv.dz[j] / (TWO_PI_I * TWO_PI_I);
        }
        let lit = path_b_integrand(&u, &v, t, alpha, r, &p) * wt;
        let tab = tb.summand(&ij);
        assert!((lit - tab).norm() < 1e-10 * lit.norm(), "{lit} vs {tab}");
    }

    #[test]
    fn b1_is_double_cauchy() {
        let s = 12f64.cbrt();
        let u = [Complex64::new(0.1, 0.5), Complex64::new(0.2, -0.8), Complex64::new(0.15, 2.0)];
        let v = [Complex64::new(-1.1, 0.3), Complex64::new(-1.2, -1.0), Complex64::new(-1.05, 2.5)];
        let w: Vec<Complex64> = u.iter().map(|a| (a / s).exp()).collect();
        let z: Vec<Complex64> = v.iter().map(|a| (a / s).exp()).collect();
        let lu = det_complex(
            &ComplexMatrix::from_fn(3, |i, j| Complex64::new(1.0 / (s * s), 0.0) / ((w[i] - z[j]) * (1.0 - w[i] * z[j])))
                .unwrap(),
        );
        let closed = cauchy_closed_form(&w, &z, CauchyVariant::Double).unwrap() / (s * s).powi(3);
        assert!((lu - closed).norm() < 1e-10 * closed.norm());
    }
}
