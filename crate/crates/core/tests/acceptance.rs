//! Exit criteria. Each test prints one `PASS`/`FAIL` line (written straight to
//! stderr so it shows without `--nocapture`) and then asserts it.

use std::io::Write;
use std::time::{Duration, Instant};

use halfflat::airy::{airy21_cdf, tw1_cdf, tw2_cdf, Airy21Query, AiryQuad, FredholmQuad};
use halfflat::asep_sim::{mc_expectations, AsepParams, SimWindow};
use halfflat::cli::suites;
use halfflat::exact_series::{moment, MomentQuad, Path, SeriesQuad};
use halfflat::harness::{limit_study, mc_prelimit_cdf, prelimit_cdf, LimitConfig, ScaledQuery};
use halfflat::qmath::CauchyVariant;

fn verdict(n: u32, title: &str, ok: bool, detail: &str, elapsed: Duration, limit: Duration) {
    let timed_ok = elapsed <= limit;
    let pass = ok && timed_ok;
    let line = format!(
        "{} criterion {n} ({title}): {detail}; {:.1}s of {}s",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    let _ = writeln!(std::io::stderr(), "{line}");
    assert!(pass, "{line}");
}

#[test]
fn criterion_1_determinant_identities() {
    let start = Instant::now();
    let single = suites::cauchy_max_error(CauchyVariant::Single, 100, 2024).unwrap();
    let double = suites::cauchy_max_error(CauchyVariant::Double, 100, 2024).unwrap();
    verdict(
        1,
        "LU vs Cauchy and double-Cauchy closed forms, k <= 6",
        single < 1e-9 && double < 1e-9,
        &format!("max rel err single {single:.2e}, double {double:.2e} (tol 1e-9)"),
        start.elapsed(),
        Duration::from_secs(5),
    );
}

#[test]
fn criterion_2_q_exponential() {
    let start = Instant::now();
    let err = suites::qexp_max_error().unwrap();
    verdict(
        2,
        "q-exponential product vs series",
        err < 1e-10,
        &format!("max rel err {err:.2e} (tol 1e-10)"),
        start.elapsed(),
        Duration::from_secs(1),
    );
}

#[test]
fn criterion_3_moments_vs_monte_carlo() {
    let start = Instant::now();
    let params = AsepParams::from_tau(0.005).unwrap();
    let (t, x) = (4.0, 0);
    let exact: Vec<f64> = (1..=2).map(|m| moment(m, t, x, &params, &MomentQuad::default()).unwrap()).collect();
    let lt = params.tau.ln();
    let mc = mc_expectations(
        |s| {
            let n = s.particle_count(x).unwrap() as f64;
            [(n * lt).exp(), (2.0 * n * lt).exp()]
        },
        t,
        &params,
        SimWindow::default_for_time(t),
        1_000_000,
        31,
    )
    .unwrap();
    let z: Vec<f64> = (0..2).map(|i| (mc[i].mean - exact[i]).abs() / mc[i].stderr).collect();
    verdict(
        3,
        "moments m = 1, 2 at tau 0.005, t 4, x 0 vs 1e6 paths",
        z.iter().all(|&z| z < 4.0),
        &format!(
            "m=1 exact {:.6} mc {:.6}+-{:.1e} ({:.2} sd); m=2 exact {:.6} mc {:.6}+-{:.1e} ({:.2} sd)",
            exact[0], mc[0].mean, mc[0].stderr, z[0], exact[1], mc[1].mean, mc[1].stderr, z[1]
        ),
        start.elapsed(),
        Duration::from_secs(300),
    );
}

#[test]
fn criterion_4_mellin_barnes() {
    let start = Instant::now();
    let err = suites::mellin_barnes_error(0.005, 1.0, 0).unwrap();
    verdict(
        4,
        "H_1 contour value vs truncated n-sum, zeta = -0.5",
        err < 1e-6,
        &format!("rel err {err:.2e} (tol 1e-6)"),
        start.elapsed(),
        Duration::from_secs(30),
    );
}

#[test]
fn criterion_5_path_a_equals_path_b() {
    let start = Instant::now();
    let d = suites::path_difference(0.005, &ScaledQuery::new(12.0, 0.0, 0.0).unwrap()).unwrap();
    verdict(
        5,
        "path A vs path B, k = 1, 2 at tau 0.005, t 12",
        d.iter().all(|&d| d < 1e-4),
        &format!("rel diff H_1 {:.2e}, H_2 {:.2e} (tol 1e-4)", d[0], d[1]),
        start.elapsed(),
        Duration::from_secs(120),
    );
}

#[test]
fn criterion_6_laplace_vs_monte_carlo() {
    let start = Instant::now();
    let params = AsepParams::from_tau(0.005).unwrap();
    let sq = ScaledQuery::new(10.0, 0.0, 0.0).unwrap();
    let exact = prelimit_cdf(&sq, &params, 4, Path::B, &SeriesQuad::default()).unwrap();
    let mc = mc_prelimit_cdf(&sq, &params, 100_000, 1).unwrap();
    let sigma = (mc.stderr.powi(2) + exact.quad_error.powi(2)).sqrt();
    let z = (mc.mean - exact.total).abs() / sigma;
    verdict(
        6,
        "tau-Laplace series vs weighted Monte Carlo, t 10, 1e5 paths",
        z < 4.0,
        &format!("exact {:.6} mc {:.6}+-{:.1e} ({z:.2} sd)", exact.total, mc.mean, mc.stderr),
        start.elapsed(),
        Duration::from_secs(300),
    );
}

#[test]
fn criterion_7_airy21_properties() {
    let start = Instant::now();
    let quad = AiryQuad::default();
    let fq = FredholmQuad::default();
    let g = |t1: f64, y: f64| airy21_cdf(&Airy21Query::new(t1, y).unwrap(), usize::MAX, &quad).unwrap();

    let (mut in_range, mut monotone, mut goe) = (true, true, true);
    let mut goe_worst = f64::INFINITY;
    for t1 in [-4.0, -2.0, 0.0, 2.0, 4.0] {
        let mut prev = -1.0;
        for y in -3..=3 {
            let v = g(t1, y as f64);
            in_range &= (0.0..=1.0).contains(&v.cdf);
            monotone &= v.cdf >= prev;
            prev = v.cdf;
            let s = 4f64.cbrt() * Airy21Query::new(t1, y as f64).unwrap().y_tilde();
            let f1 = if s < -10.0 { 0.0 } else { tw1_cdf(s, &fq).unwrap() };
            // the bound is checked up to the combined quadrature error
            let slack = v.cdf - f1 + 1e-6 + v.est_error;
            goe_worst = goe_worst.min(v.cdf - f1);
            goe &= slack >= 0.0;
        }
    }
    let mut f2_worst: f64 = 0.0;
    let mut f2_at = 0.0;
    for i in 0..=24 {
        let y = -4.0 + 0.25 * i as f64;
        let d = (g(-6.0, y).cdf - tw2_cdf(y, &fq).unwrap()).abs();
        if d > f2_worst {
            f2_worst = d;
            f2_at = y;
        }
    }
    let f2_ok = f2_worst < 5e-3;
    verdict(
        7,
        "Airy2->1 range, monotonicity, GOE bound, t1 = -6 vs F2",
        in_range && monotone && goe && f2_ok,
        &format!(
            "in [0,1] {in_range}, monotone {monotone}, GOE bound {goe} (min G - F1 {goe_worst:.2e}), \
             max |G(-6,y) - F2(y)| {f2_worst:.2e} at y = {f2_at} (tol 5e-3)"
        ),
        start.elapsed(),
        Duration::from_secs(600),
    );
}

#[test]
fn criterion_8_limit_trend() {
    let start = Instant::now();
    let study = limit_study(&[-1.0, 0.0, 1.0], &[-0.5, 0.0, 0.5], &LimitConfig::default()).unwrap();
    let mut bad = Vec::new();
    for r in &study.reports {
        if !r.nonincreasing {
            let gaps: Vec<String> = r.rows.iter().map(|row| format!("{:.4}", row.gap)).collect();
            bad.push(format!("(alpha {}, r~ {}) gaps [{}]", r.alpha, r.r_tilde, gaps.join(", ")));
        }
    }
    verdict(
        8,
        "gap nonincreasing over t in {10, 20, 40}, nine (alpha, r~)",
        bad.is_empty(),
        &if bad.is_empty() { "all nine nonincreasing".to_string() } else { format!("{} of 9 not monotone: {}", bad.len(), bad.join("; ")) },
        start.elapsed(),
        Duration::from_secs(1800),
    );
}

fn run_cli(args: &[&str], threads: usize, out: &std::path::Path) -> Vec<u8> {
    let threads = threads.to_string();
    let mut full = vec!["halfflat", "--threads", &threads, "--out", out.to_str().unwrap()];
    full.extend_from_slice(args);
    assert_eq!(halfflat::cli::main_with_args(full), 0, "{args:?}");
    std::fs::read(out).unwrap()
}

#[test]
fn criterion_9_determinism() {
    let start = Instant::now();
    let commands: [&[&str]; 5] = [
        &["simulate", "--t", "6", "--npaths", "64", "--seed", "5"],
        &["moment", "--m", "1", "--t", "2", "--npaths", "5000", "--seed", "5", "--format", "csv"],
        &["laplace", "--t", "12", "--alpha", "0.5", "--rtilde", "0", "--kmax", "4", "--samples", "20000", "--seed", "5"],
        &["airy21", "--t1", "1", "--ny", "5"],
        &["limit", "--tgrid", "10", "--alpha", "0", "--rtilde", "0", "--npaths", "3000", "--seed", "5", "--format", "csv"],
    ];
    let dir = std::env::temp_dir().join(format!("halfflat-determinism-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let mut mismatches = Vec::new();
    for (i, args) in commands.iter().enumerate() {
        let reference = run_cli(args, 1, &dir.join(format!("c{i}-ref")));
        for threads in [1, 4, 8] {
            if run_cli(args, threads, &dir.join(format!("c{i}-{threads}"))) != reference {
                mismatches.push(format!("{} with {threads} threads", args[0]));
            }
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
    verdict(
        9,
        "byte-identical outputs across 1, 4, 8 threads",
        mismatches.is_empty(),
        &if mismatches.is_empty() { "5 commands x 4 runs identical".to_string() } else { format!("differs: {}", mismatches.join(", ")) },
        start.elapsed(),
        Duration::from_secs(600),
    );
}
