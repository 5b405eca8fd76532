//! The KPZ-limit experiment: the prelimit tau-Laplace CDF surrogate at the
//! scaled point `(t, alpha, r~)`, evaluated exactly and by Monte Carlo, and
//! its distance to the Airy2->1 one-point law.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::airy::{self, Airy21Query, Airy21Value, AiryQuad};
use crate::asep_sim::{self, AsepParams, McEstimate, SimWindow};
use crate::error::{Error, Result};
use crate::exact_series::kernel::LogZeta;
use crate::exact_series::{tau_laplace, tau_small_check, Path, SeriesQuad, SeriesResult};

/// The scaled bindings of one limit experiment point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledQuery {
    pub t: f64,
    pub alpha: f64,
    pub r_tilde: f64,
}

impl ScaledQuery {
    pub fn new(t: f64, alpha: f64, r_tilde: f64) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() || !alpha.is_finite() || !r_tilde.is_finite() {
            return Err(Error::Config(format!("scaled query needs t > 0 and finite alpha, r~ ({t}, {alpha}, {r_tilde})")));
        }
        Ok(ScaledQuery { t, alpha, r_tilde })
    }

    pub fn x(&self) -> i64 {
        (self.t.powf(2.0 / 3.0) * self.alpha).floor() as i64
    }

    pub fn time(&self, params: &AsepParams) -> f64 {
        self.t / params.gamma
    }

    pub fn exponent(&self) -> f64 {
        zeta_exponent(self)
    }

    pub fn log_zeta(&self, params: &AsepParams) -> LogZeta {
        LogZeta::new(self.exponent(), params.qreal())
    }
}

/// `e` in `zeta = -(1-tau)^{-1} tau^e`:
/// `e = -t/4 - (x - 1)/2 + t^{1/3} r~` with `x = floor(t^{2/3} alpha)`.
pub fn zeta_exponent(sq: &ScaledQuery) -> f64 {
    -0.25 * sq.t - 0.5 * (sq.x() as f64 - 1.0) + sq.t.cbrt() * sq.r_tilde
}

fn require_small_tau(params: &AsepParams) -> Result<()> {
    let cond = tau_small_check(params.qreal());
    if !cond.ok {
        return Err(Error::Domain(format!("tau = {} fails tau_small_check (rho = {:.4})", params.tau, cond.rho)));
    }
    Ok(())
}

/// `E[e_tau(zeta tau^{N_x(t/gamma)})] = 1 + sum_k H_k` at the scaled point.
pub fn prelimit_cdf(sq: &ScaledQuery, params: &AsepParams, k_max: usize, path: Path, quad: &SeriesQuad) -> Result<SeriesResult> {
    require_small_tau(params)?;
    let res = tau_laplace(&sq.log_zeta(params), sq.time(params), sq.x(), params, k_max, quad, path)?;
    let slack = 1e-6 + res.quad_error;
    if !(-slack..=1.0 + slack).contains(&res.total) {
        return Err(Error::NumericRange(format!(
            "prelimit value {} at (t, alpha, r~) = ({}, {}, {}) is outside (0, 1)",
            res.total, sq.t, sq.alpha, sq.r_tilde
        )));
    }
    Ok(res)
}

/// `prod_{j>=0} (1 + tau^{n + e + j})^{-1}` in the log domain, truncated
/// once the factors are within 1e-16 of one.
pub fn laplace_weight(n: u64, exponent: f64, log_tau: f64) -> f64 {
    let mut log_w = 0.0;
    let mut a = n as f64 + exponent;
    loop {
        let l = a * log_tau;
        if l < (1e-16f64).ln() {
            break;
        }
        // ln(1 + tau^a), written to avoid overflow when tau^a is huge
        log_w -= if l > 0.0 { l + (-l).exp().ln_1p() } else { l.exp().ln_1p() };
        a += 1.0;
    }
    log_w.exp()
}

/// Monte Carlo estimate of the prelimit value on the default window for
/// time `t/gamma`.
pub fn mc_prelimit_cdf(sq: &ScaledQuery, params: &AsepParams, n_paths: u64, seed: u64) -> Result<McEstimate> {
    let time = sq.time(params);
    let (x, e, lt) = (sq.x(), sq.exponent(), params.tau.ln());
    let window = SimWindow::default_for_time(time);
    if !window.contains(x) {
        return Err(Error::Domain(format!("x = {x} lies outside the simulation window")));
    }
    asep_sim::mc_expectation(
        |s| laplace_weight(s.particle_count(x).expect("x inside window"), e, lt),
        time,
        params,
        window,
        n_paths,
        seed,
    )
}

/// The Airy2->1 arguments matched to `(alpha, r~)`:
/// `t1 = 2^{-1/3} alpha`, `y1 = 2^{4/3} r~ + 1{alpha <= 0} 2^{-2/3} alpha^2`.
pub fn target_query(alpha: f64, r_tilde: f64) -> Result<Airy21Query> {
    let t1 = alpha / 2f64.cbrt();
    let mut y1 = 2f64.powf(4.0 / 3.0) * r_tilde;
    if alpha <= 0.0 {
        y1 += alpha * alpha / 2f64.powf(2.0 / 3.0);
    }
    Airy21Query::new(t1, y1)
}

/// Settings of a limit experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitConfig {
    pub tau: f64,
    pub t_grid: Vec<f64>,
    pub k_max: usize,
    pub path: Path,
    pub series: SeriesQuad,
    pub airy: AiryQuad,
    /// Monte Carlo paths per grid point; zero skips the simulation.
    pub mc_paths: u64,
    pub mc_seed: u64,
}

impl Default for LimitConfig {
    fn default() -> Self {
        LimitConfig {
            tau: 0.005,
            t_grid: vec![10.0, 20.0, 40.0],
            k_max: 4,
            path: Path::B,
            series: SeriesQuad::default(),
            airy: AiryQuad::default(),
            mc_paths: 0,
            mc_seed: 1,
        }
    }
}

impl LimitConfig {
    fn validate(&self) -> Result<AsepParams> {
        if self.t_grid.is_empty() || self.t_grid.windows(2).any(|w| !(w[0] < w[1])) || !(self.t_grid[0] > 0.0) {
            return Err(Error::Config(format!("t grid must be positive and increasing, got {:?}", self.t_grid)));
        }
        if self.mc_paths == 1 {
            return Err(Error::Config("Monte Carlo needs at least two paths".into()));
        }
        let params = AsepParams::from_tau(self.tau)?;
        require_small_tau(&params)?;
        self.series.validate()?;
        Ok(params)
    }
}

/// One `(t, alpha, r~)` point of a gap report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub t: f64,
    pub alpha: f64,
    pub r_tilde: f64,
    pub x: i64,
    pub exponent: f64,
    pub prelimit: f64,
    pub prelimit_quad_error: f64,
    pub converged: bool,
    pub target: f64,
    pub gap: f64,
    pub mc: Option<McEstimate>,
}

/// The prelimit values along a t grid at fixed `(alpha, r~)` against the
/// Airy2->1 target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub alpha: f64,
    pub r_tilde: f64,
    pub target: Airy21Value,
    pub rows: Vec<GapRow>,
    pub nonincreasing: bool,
    pub warnings: Vec<String>,
}

fn prelimit_row(sq: &ScaledQuery, params: &AsepParams, cfg: &LimitConfig, target: f64) -> Result<(GapRow, Vec<String>)> {
    let res = prelimit_cdf(sq, params, cfg.k_max, cfg.path, &cfg.series)?;
    let mc = if cfg.mc_paths > 0 { Some(mc_prelimit_cdf(sq, params, cfg.mc_paths, cfg.mc_seed)?) } else { None };
    let row = GapRow {
        t: sq.t,
        alpha: sq.alpha,
        r_tilde: sq.r_tilde,
        x: sq.x(),
        exponent: sq.exponent(),
        prelimit: res.total,
        prelimit_quad_error: res.quad_error,
        converged: res.converged,
        target,
        gap: (res.total - target).abs(),
        mc,
    };
    let warnings = res.warnings.iter().map(|w| format!("t = {}: {w}", sq.t)).collect();
    Ok((row, warnings))
}

/// The gap `|prelimit(t) - G(target)|` along `cfg.t_grid` at one
/// `(alpha, r~)`.
pub fn limit_gap(alpha: f64, r_tilde: f64, cfg: &LimitConfig) -> Result<GapReport> {
    Ok(limit_study(&[alpha], &[r_tilde], cfg)?.reports.remove(0))
}

/// Gap reports for every `(alpha, r~)` pair, plus the run settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitStudy {
    pub config: LimitConfig,
    pub reports: Vec<GapReport>,
    pub notes: Vec<String>,
}

/// Every grid point in parallel; results are merged in grid order. With
/// more than one `r~` the prelimit values and the targets must be
/// nondecreasing in `r~` at every `(t, alpha)`, otherwise the grid is
/// refused as a quadrature failure.
pub fn limit_study(alphas: &[f64], r_tildes: &[f64], cfg: &LimitConfig) -> Result<LimitStudy> {
    let params = cfg.validate()?;
    if alphas.is_empty() || r_tildes.is_empty() {
        return Err(Error::Config("empty (alpha, r~) grid".into()));
    }
    if r_tildes.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Config(format!("r~ grid must be increasing, got {r_tildes:?}")));
    }
    let pairs: Vec<(f64, f64)> = alphas.iter().flat_map(|&a| r_tildes.iter().map(move |&r| (a, r))).collect();
    let targets = pairs
        .par_iter()
        .map(|&(a, r)| airy::airy21_cdf(&target_query(a, r)?, usize::MAX, &cfg.airy))
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<(usize, f64)> = (0..pairs.len()).flat_map(|i| cfg.t_grid.iter().map(move |&t| (i, t))).collect();
    let rows = points
        .par_iter()
        .map(|&(i, t)| {
            let (a, r) = pairs[i];
            prelimit_row(&ScaledQuery::new(t, a, r)?, &params, cfg, targets[i].cdf)
        })
        .collect::<Result<Vec<_>>>()?;

    let nt = cfg.t_grid.len();
    let mut reports = Vec::with_capacity(pairs.len());
    let mut rows = rows.into_iter();
    for (i, target) in targets.into_iter().enumerate() {
        let (mut r, mut warnings) = (Vec::with_capacity(nt), Vec::new());
        for (row, w) in rows.by_ref().take(nt) {
            r.push(row);
            warnings.extend(w);
        }
        let nonincreasing = r.windows(2).all(|w| w[1].gap <= w[0].gap);
        reports.push(GapReport { alpha: pairs[i].0, r_tilde: pairs[i].1, target, rows: r, nonincreasing, warnings });
    }

    let nr = r_tildes.len();
    for (ia, group) in reports.chunks(nr).enumerate() {
        let slack = |w: &[&GapReport], j: usize| 1e-6 + w[0].rows[j].prelimit_quad_error + w[1].rows[j].prelimit_quad_error;
        let pair: Vec<&GapReport> = group.iter().collect();
        for w in pair.windows(2) {
            if w[1].target.cdf + 1e-6 + w[0].target.est_error + w[1].target.est_error < w[0].target.cdf {
                return Err(Error::Quadrature(format!(
                    "Airy2->1 target decreases in r~ at alpha = {}: {} -> {}",
                    alphas[ia], w[0].target.cdf, w[1].target.cdf
                )));
            }
            for j in 0..nt {
                if w[1].rows[j].prelimit + slack(w, j) < w[0].rows[j].prelimit {
                    return Err(Error::Quadrature(format!(
                        "prelimit value decreases in r~ at (t, alpha) = ({}, {}): {} -> {}",
                        cfg.t_grid[j], alphas[ia], w[0].rows[j].prelimit, w[1].rows[j].prelimit
                    )));
                }
            }
        }
    }
    let notes = vec![
        "prelimit values approximate P(height fluctuation <= r~); the indicator sharpens at rate t^{1/3}".into(),
        "gaps are reported, not certified: no finite-t rate is available".into(),
    ];
    Ok(LimitStudy { config: cfg.clone(), reports, notes })
}

impl LimitStudy {
    /// One CSV row per `(t, alpha, r~)`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "t", "alpha", "r_tilde", "x", "exponent", "prelimit", "prelimit_quad_error", "converged", "target", "gap", "mc_mean",
            "mc_stderr",
        ])
        .map_err(airy::csv_err)?;
        for rep in &self.reports {
            for r in &rep.rows {
                let (m, s) = r.mc.map_or((String::new(), String::new()), |m| (m.mean.to_string(), m.stderr.to_string()));
                w.write_record([
                    r.t.to_string(),
                    r.alpha.to_string(),
                    r.r_tilde.to_string(),
                    r.x.to_string(),
                    r.exponent.to_string(),
                    r.prelimit.to_string(),
                    r.prelimit_quad_error.to_string(),
                    r.converged.to_string(),
                    r.target.to_string(),
                    r.gap.to_string(),
                    m,
                    s,
                ])
                .map_err(airy::csv_err)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn all_nonincreasing(&self) -> bool {
        self.reports.iter().all(|r| r.nonincreasing)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_examples() {
        let sq = ScaledQuery::new(8.0, 0.0, 0.0).unwrap();
        assert_eq!(zeta_exponent(&sq), -1.5);
        let sq = ScaledQuery::new(8.0, 0.0, 1.0).unwrap();
        assert!((zeta_exponent(&sq) - 0.5).abs() < 1e-15);
        assert!(ScaledQuery::new(0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn weight_matches_direct_product() {
        let tau: f64 = 0.3;
        for (n, e) in [(0u64, 0.5), (3, -2.25), (10, -4.0), (0, -7.5)] {
            let direct: f64 = (0..200).map(|j| 1.0 / (1.0 + tau.powf(n as f64 + e + j as f64))).product();
            let w = laplace_weight(n, e, tau.ln());
            assert!((w - direct).abs() < 1e-12 * direct, "{n} {e}: {w} vs {direct}");
            assert!(w > 0.0 && w < 1.0);
        }
    }

    #[test]
    fn target_mapping() {
        let q = target_query(-1.0, 0.5).unwrap();
        assert!((q.t1 + 2f64.powf(-1.0 / 3.0)).abs() < 1e-15);
        assert!((q.y1 - 2f64.powf(4.0 / 3.0) * 0.5 - 2f64.powf(-2.0 / 3.0)).abs() < 1e-15);
        let q = target_query(1.0, 0.5).unwrap();
        assert!((q.y1 - 2f64.powf(4.0 / 3.0) * 0.5).abs() < 1e-15);
    }

    #[test]
    fn refuses_bad_grids() {
        let cfg = LimitConfig { t_grid: vec![20.0, 10.0], ..LimitConfig::default() };
        assert!(matches!(limit_gap(0.0, 0.0, &cfg), Err(Error::Config(_))));
        let cfg = LimitConfig { tau: 0.5, ..LimitConfig::default() };
        assert!(matches!(limit_gap(0.0, 0.0, &cfg), Err(Error::Domain(_))));
    }
}
