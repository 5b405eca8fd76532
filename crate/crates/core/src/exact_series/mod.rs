//! Exact moments and the tau-Laplace generating series.
//!
//! The series `1 + sum_k H_k(zeta)` is evaluated along two independent
//! contour parametrizations (see [`paths`]); agreement between them is the
//! main internal consistency check.

mod engine;
pub mod kernel;
pub mod moment;
pub mod paths;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use engine::TermEstimate;
pub use kernel::{kernel_tail_bound, m_cut_for, s_kernel, s_kernel_logs, sine_sum, KernelValue, LogZeta};
pub use moment::{moment, moment_factors, MomentFactors, MomentModel, MomentQuad};
pub use paths::{default_epsilon, gamma_contours, path_a_integrand, path_a_radii, path_b_integrand, GammaGrid};

use crate::asep_sim::AsepParams;
use crate::error::{Error, Result};
use crate::qmath::{qpoch, QReal};
use engine::{evaluate_terms, PairTables};

/// The site label the contour formulas take when they are to compute
/// moments of `N_x`, the number of particles at or left of `x`.
///
/// Read literally, the formulas produce `N_{x-1}`: at `t = 0` the `m = 1`
/// integrand at label 2 reduces to `(1 + tau w) / (w (1 - tau w^2))`, whose
/// only enclosed pole gives 1, while `N_2(0) = 1` for the half-flat start.
/// Every entry point that takes a physical `x` goes through this shift;
/// the factor-level functions ([`MomentModel`], the path integrands) keep the
/// literal label.
pub fn formula_site(x: i64) -> i64 {
    x + 1
}

/// The smallness condition on tau under which the series is known to
/// converge absolutely.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauCondition {
    pub rho: f64,
    /// The per-term constant divided by the (non-explicit) bound on `|f|`:
    /// `e tau^{1/8} / (1 - tau^{1/2})`.
    pub a_const: f64,
    pub ok: bool,
}

pub fn tau_small_check(tau: QReal) -> TauCondition {
    let t = tau.get();
    let (t14, t12) = (t.powf(0.25), t.sqrt());
    let num = qpoch(Complex64::new(-t.powf(0.75), 0.0), t).re;
    let den = qpoch(Complex64::new(t14, 0.0), t).re;
    let rho = (t12 + t14) / (1.0 - t12).powi(2) * (num * num) / (den * den);
    let a_const = std::f64::consts::E * t.powf(0.125) / (1.0 - t12);
    TauCondition { rho, a_const, ok: rho < 1.0 }
}

/// `F(z) = 1/(1+e^z) + z/4 - 1/2`, without the pole check.
pub(crate) fn steepest_f_value(z: Complex64) -> Complex64 {
    if z.norm() < 0.1 {
        // odd Taylor series; avoids the cancellation between 1/(1+e^z) and 1/2
        let z2 = z * z;
        let c = [1.0 / 48.0, -1.0 / 480.0, 17.0 / 80640.0, -31.0 / 1451520.0, 691.0 / 319334400.0];
        let mut s = Complex64::new(0.0, 0.0);
        for a in c.iter().rev() {
            s = s * z2 + a;
        }
        return s * z2 * z;
    }
    (1.0 + z.exp()).inv() + z / 4.0 - 0.5
}

/// `F(z) = 1/(1+e^z) + z/4 - 1/2`, the phase function of the steepest
/// descent contours. Behaves like `z^3/48` near zero.
pub fn steepest_f(z: Complex64) -> Result<Complex64> {
    if (1.0 + z.exp()).norm() < 1e-12 {
        return Err(Error::Pole(format!("F has a pole at {z}")));
    }
    Ok(steepest_f_value(z))
}

/// Which contour parametrization to integrate on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Path {
    /// Circles `|w| = tau^{-1/4}`, `|z| = tau^{1/2}`.
    A,
    /// Steepest-descent Gamma contours; needs `gamma * time >= 8`.
    B,
}

/// Quadrature settings for the series terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesQuad {
    /// Trapezoid nodes per circle (path A).
    pub circle_nodes: usize,
    /// `None` picks `min(0.2, |log tau|/20)`.
    pub epsilon: Option<f64>,
    /// Panel length of the Gamma contours, in the scaled variable.
    pub panel_len: f64,
    pub nodes_per_panel: usize,
    /// Samples per term for `k = 3, 4`.
    pub samples: u64,
    pub seed: u64,
    /// A row/column of the pair table is dropped when all its weights are
    /// below this fraction of the largest one.
    pub prune_rel: f64,
    /// Required size of the last term for the series to count as converged.
    pub abs_tol: f64,
}

impl Default for SeriesQuad {
    fn default() -> Self {
        SeriesQuad {
            circle_nodes: 64,
            epsilon: None,
            panel_len: 1.5,
            nodes_per_panel: 12,
            samples: 200_000,
            seed: 1,
            prune_rel: 1e-17,
            abs_tol: 1e-4,
        }
    }
}

impl SeriesQuad {
    pub fn grid(&self, tau: f64) -> GammaGrid {
        GammaGrid {
            epsilon: self.epsilon.unwrap_or_else(|| default_epsilon(tau)),
            panel_len: self.panel_len,
            nodes_per_panel: self.nodes_per_panel,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.circle_nodes < 8 || self.nodes_per_panel < 2 || !(self.panel_len > 0.0) {
            return Err(Error::Config("series quadrature too coarse".into()));
        }
        if self.samples < 2 {
            return Err(Error::Config("need at least two samples".into()));
        }
        Ok(())
    }
}

/// One term of the series as serialized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesTerm {
    pub k: usize,
    pub re: f64,
    pub im: f64,
    pub abs: f64,
    pub quad_error: f64,
}

impl SeriesTerm {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesResult {
    pub terms: Vec<SeriesTerm>,
    /// Real part of `1 + sum H_k`.
    pub total: f64,
    pub total_im: f64,
    /// Running sums `1 + H_1 + ... + H_k`, real parts.
    pub partial_sums: Vec<f64>,
    /// `|H_kmax| / |H_{kmax-1}|`, zero when only one term was computed.
    pub decay_ratio: f64,
    pub converged: bool,
    /// Sum of the per-term error estimates.
    pub quad_error: f64,
    pub tau_condition: TauCondition,
    pub warnings: Vec<String>,
}

fn tables(path: Path, zeta: &LogZeta, time: f64, x: i64, params: &AsepParams, quad: &SeriesQuad, coarse: bool) -> Result<PairTables> {
    let x = formula_site(x);
    match path {
        Path::A => {
            let n = if coarse { quad.circle_nodes / 2 } else { quad.circle_nodes };
            paths::path_a_tables(zeta, time, x, params, n, n)
        }
        Path::B => {
            let mut grid = quad.grid(params.tau);
            if coarse {
                grid.nodes_per_panel = (grid.nodes_per_panel / 2).max(2);
            }
            paths::path_b_tables(params.gamma * time, x, zeta, params, &grid)
        }
    }
}

/// `H_1..H_kmax` with error estimates.
pub fn series_terms(
    zeta: &LogZeta,
    time: f64,
    x: i64,
    params: &AsepParams,
    kmax: usize,
    quad: &SeriesQuad,
    path: Path,
) -> Result<Vec<TermEstimate>> {
    if kmax == 0 || kmax > 4 {
        return Err(Error::Unsupported(format!("series terms are evaluated for 1 <= k <= 4, got {kmax}")));
    }
    quad.validate()?;
    let fine = tables(path, zeta, time, x, params, quad, false)?.pruned(quad.prune_rel);
    let coarse = tables(path, zeta, time, x, params, quad, true)?.pruned(quad.prune_rel);
    Ok(evaluate_terms(&fine, Some(&coarse), kmax, quad.samples, quad.seed))
}

/// `H_k` on the circles; `time` is the unscaled time.
pub fn h_k_path_a(k: usize, zeta: &LogZeta, time: f64, x: i64, params: &AsepParams, quad: &SeriesQuad) -> Result<TermEstimate> {
    Ok(series_terms(zeta, time, x, params, k, quad, Path::A)?[k - 1])
}

/// `H_k` on the Gamma contours in the scaled setting: time `t / gamma`,
/// `x = floor(t^{2/3} alpha)` and the scaled exponent of zeta.
pub fn h_k_path_b(k: usize, t: f64, alpha: f64, r_tilde: f64, params: &AsepParams, quad: &SeriesQuad) -> Result<TermEstimate> {
    let sq = crate::harness::ScaledQuery::new(t, alpha, r_tilde)?;
    let zeta = LogZeta::new(sq.exponent(), params.qreal());
    h_k_path_b_general(k, &zeta, sq.time(params), sq.x(), params, quad)
}

/// `H_k` on the Gamma contours for arbitrary `zeta`, `time`, `x`.
pub fn h_k_path_b_general(
    k: usize,
    zeta: &LogZeta,
    time: f64,
    x: i64,
    params: &AsepParams,
    quad: &SeriesQuad,
) -> Result<TermEstimate> {
    Ok(series_terms(zeta, time, x, params, k, quad, Path::B)?[k - 1])
}

/// `E[e_tau(zeta tau^{N_x(time)})] = 1 + sum_{k<=kmax} H_k(zeta)`.
///
/// When tau fails the smallness condition the terms are still computed but
/// the result carries a warning and is never marked converged.
pub fn tau_laplace(
    zeta: &LogZeta,
    time: f64,
    x: i64,
    params: &AsepParams,
    kmax: usize,
    quad: &SeriesQuad,
    path: Path,
) -> Result<SeriesResult> {
    let cond = tau_small_check(params.qreal());
    let mut warnings = Vec::new();
    if !cond.ok {
        warnings.push(format!("tau_small_check failed, convergence not guaranteed (rho = {:.4})", cond.rho));
    }
    let est = series_terms(zeta, time, x, params, kmax, quad, path)?;
    let mut total = Complex64::new(1.0, 0.0);
    let mut partial_sums = Vec::with_capacity(kmax);
    let mut terms = Vec::with_capacity(kmax);
    let mut quad_error = 0.0;
    for (i, t) in est.iter().enumerate() {
        total += t.value;
        partial_sums.push(total.re);
        quad_error += t.quad_error;
        terms.push(SeriesTerm { k: i + 1, re: t.value.re, im: t.value.im, abs: t.value.norm(), quad_error: t.quad_error });
    }
    let decay_ratio = if kmax >= 2 { terms[kmax - 1].abs / terms[kmax - 2].abs } else { 0.0 };
    let last = terms[kmax - 1].abs;
    if kmax >= 2 && decay_ratio >= 1.0 && last > quad.abs_tol && cond.ok {
        return Err(Error::NonConvergence {
            reason: format!("|H_{kmax}| / |H_{}| = {decay_ratio:.3}", kmax - 1),
            partial_sums,
        });
    }
    let converged = cond.ok && last < quad.abs_tol && (kmax == 1 || decay_ratio < 0.7);
    if !converged && cond.ok {
        warnings.push(format!("series not converged at k = {kmax}: |H_k| = {last:.3e}, ratio {decay_ratio:.3}"));
    }
    if zeta.phase == 0.0 && total.im.abs() > 1e-6 + 5.0 * quad_error {
        return Err(Error::Quadrature(format!("tau-Laplace transform has imaginary part {}", total.im)));
    }
    Ok(SeriesResult {
        terms,
        total: total.re,
        total_im: total.im,
        partial_sums,
        decay_ratio,
        converged,
        quad_error,
        tau_condition: cond,
        warnings,
    })
}

/// `sum_{n>=1} zeta^n (2 pi i)^{-1} oint F(n, w) dw`, truncated once
/// `|zeta|^n < tol`; this is `H_1(zeta)` for `|zeta| < 1`.
pub fn mellin_barnes_h1(zeta: Complex64, time: f64, x: i64, params: &AsepParams, nodes: usize, tol: f64) -> Result<Complex64> {
    if zeta.norm() >= 1.0 {
        return Err(Error::Domain(format!("the n-sum needs |zeta| < 1, got {}", zeta.norm())));
    }
    let model = MomentModel::new(*params, time, formula_site(x));
    let mut s = Complex64::new(0.0, 0.0);
    let mut zn = zeta;
    let mut n = 1u32;
    while zn.norm() >= tol {
        s += zn * moment::composition_integral(&model, &[n], nodes)?;
        zn *= zeta;
        n += 1;
        if n > 2000 {
            return Err(Error::Truncation("Mellin-Barnes n-sum".into()));
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn tau_condition_values() {
        let c = tau_small_check(QReal::new(0.005).unwrap());
        assert!(c.ok && c.rho > 0.5 && c.rho < 1.0, "{c:?}");
        assert!(!tau_small_check(QReal::new(0.05).unwrap()).ok);
        assert!(tau_small_check(QReal::new(1e-8).unwrap()).rho < 0.1);
    }

    #[test]
    fn f_series_matches_closed_form() {
        for z in [Complex64::new(0.09, 0.0), Complex64::new(0.05, 0.07), Complex64::new(-0.02, 0.095)] {
            let direct = (1.0 + z.exp()).inv() + z / 4.0 - 0.5;
            assert!((steepest_f_value(z) - direct).norm() < 1e-15);
        }
        assert_eq!(steepest_f(Complex64::new(0.0, 0.0)).unwrap(), Complex64::new(0.0, 0.0));
        assert!(steepest_f(Complex64::new(0.0, PI)).is_err());
    }

    #[test]
    fn h1_agrees_with_mellin_barnes() {
        let p = AsepParams::from_tau(0.005).unwrap();
        let zeta = Complex64::new(-0.5, 0.0);
        let lz = LogZeta::from_zeta(zeta, p.qreal()).unwrap();
        let mb = mellin_barnes_h1(zeta, 1.0, 0, &p, 64, 1e-14).unwrap();
        let a = h_k_path_a(1, &lz, 1.0, 0, &p, &SeriesQuad::default()).unwrap();
        assert!((a.value - mb).norm() < 1e-6 * mb.norm(), "{} vs {}", a.value, mb);
    }
}
