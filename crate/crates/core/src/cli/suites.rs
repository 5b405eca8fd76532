//! Self-checks run by `halfflat validate`. Each check reports the largest
//! error it saw next to its tolerance.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::asep_sim::AsepParams;
use crate::error::Result;
use crate::exact_series::{mellin_barnes_h1, series_terms, LogZeta, Path, SeriesQuad};
use crate::harness::ScaledQuery;
use crate::qmath::{cauchy_closed_form, det_complex, qexp, CauchyVariant, ComplexMatrix, QExpMode, QReal, TruncationPolicy};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub suite: String,
    pub name: String,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

fn check(suite: &str, name: &str, max_error: f64, tolerance: f64) -> Check {
    Check { suite: suite.into(), name: name.into(), max_error, tolerance, passed: max_error < tolerance }
}

fn random_point<R: Rng>(rng: &mut R, radius: f64) -> Complex64 {
    Complex64::from_polar(radius * rng.random::<f64>().sqrt(), std::f64::consts::TAU * rng.random::<f64>())
}

/// Points in the disc of radius 0.9 with `|x_i - y_j| > 0.1`; the radius
/// also keeps `|1 - x_i y_j| >= 0.19`.
pub fn cauchy_configuration<R: Rng>(rng: &mut R, k: usize) -> (Vec<Complex64>, Vec<Complex64>) {
    loop {
        let x: Vec<Complex64> = (0..k).map(|_| random_point(rng, 0.9)).collect();
        let y: Vec<Complex64> = (0..k).map(|_| random_point(rng, 0.9)).collect();
        if x.iter().all(|a| y.iter().all(|b| (a - b).norm() > 0.1)) {
            return (x, y);
        }
    }
}

/// Worst relative error of the LU determinant against the closed form over
/// `configs` random configurations for each `k <= 6`.
pub fn cauchy_max_error(variant: CauchyVariant, configs: usize, seed: u64) -> Result<f64> {
    let mut worst = 0.0f64;
    for k in 1..=6 {
        let mut rng = rng::stream(seed, k as u64);
        for _ in 0..configs {
            let (x, y) = cauchy_configuration(&mut rng, k);
            let m = ComplexMatrix::from_fn(k, |i, j| match variant {
                CauchyVariant::Single => (x[i] - y[j]).inv(),
                CauchyVariant::Double => ((x[i] - y[j]) * (1.0 - x[i] * y[j])).inv(),
            })?;
            let closed = cauchy_closed_form(&x, &y, variant)?;
            worst = worst.max((det_complex(&m) - closed).norm() / closed.norm());
        }
    }
    Ok(worst)
}

/// Product against series form of `e_tau(x)` on `|x| in {0.1, .., 0.9}`,
/// `tau in {0.01, 0.1, 0.5}` and three phases.
pub fn qexp_max_error() -> Result<f64> {
    let policy = TruncationPolicy::default();
    let mut worst = 0.0f64;
    for tau in [0.01, 0.1, 0.5] {
        let q = QReal::new(tau)?;
        for i in 1..=9 {
            for phase in [0.0, 2.0, std::f64::consts::PI] {
                let x = Complex64::from_polar(i as f64 / 10.0, phase);
                let p = qexp(x, q, QExpMode::Product, &policy)?;
                let s = qexp(x, q, QExpMode::Series, &policy)?;
                worst = worst.max((p - s).norm() / s.norm());
            }
        }
    }
    Ok(worst)
}

/// `H_1` at `zeta = -1/2` on the circles against the truncated n-sum.
pub fn mellin_barnes_error(tau: f64, time: f64, x: i64) -> Result<f64> {
    let p = AsepParams::from_tau(tau)?;
    let zeta = Complex64::new(-0.5, 0.0);
    let lz = LogZeta::from_zeta(zeta, p.qreal())?;
    let mb = mellin_barnes_h1(zeta, time, x, &p, 64, 1e-14)?;
    let a = series_terms(&lz, time, x, &p, 1, &SeriesQuad::default(), Path::A)?;
    Ok((a[0].value - mb).norm() / mb.norm())
}

/// Relative differences `|H_k^A - H_k^B| / |H_k^A|`, `k = 1, 2`, at a scaled
/// point.
pub fn path_difference(tau: f64, sq: &ScaledQuery) -> Result<[f64; 2]> {
    let p = AsepParams::from_tau(tau)?;
    let quad = SeriesQuad::default();
    let lz = sq.log_zeta(&p);
    let a = series_terms(&lz, sq.time(&p), sq.x(), &p, 2, &quad, Path::A)?;
    let b = series_terms(&lz, sq.time(&p), sq.x(), &p, 2, &quad, Path::B)?;
    Ok(std::array::from_fn(|k| (a[k].value - b[k].value).norm() / a[k].value.norm()))
}

pub fn identities(seed: u64) -> Result<Vec<Check>> {
    Ok(vec![
        check("identities", "cauchy single, k <= 6, 100 configurations", cauchy_max_error(CauchyVariant::Single, 100, seed)?, 1e-9),
        check("identities", "cauchy double, k <= 6, 100 configurations", cauchy_max_error(CauchyVariant::Double, 100, seed)?, 1e-9),
        check("identities", "q-exponential product vs series", qexp_max_error()?, 1e-10),
        check("identities", "H_1 vs Mellin-Barnes n-sum (tau 0.005, time 1, x 0)", mellin_barnes_error(0.005, 1.0, 0)?, 1e-6),
    ])
}

pub fn paths() -> Result<Vec<Check>> {
    let d = path_difference(0.005, &ScaledQuery::new(12.0, 0.0, 0.0)?)?;
    Ok(vec![
        check("paths", "H_1 path A vs path B (tau 0.005, t 12, alpha 0, r~ 0)", d[0], 1e-4),
        check("paths", "H_2 path A vs path B (tau 0.005, t 12, alpha 0, r~ 0)", d[1], 1e-4),
    ])
}
