//! Cross-checks between independent routes to the same quantity.

use halfflat::airy::{airy21_cdf, Airy21Query, AiryQuad};
use halfflat::asep_sim::AsepParams;
use halfflat::exact_series::{h_k_path_a, h_k_path_b, moment, MomentQuad, Path, SeriesQuad};
use halfflat::harness::{prelimit_cdf, ScaledQuery};

#[test]
fn moments_are_decreasing_in_m() {
    // tau^{m N} decreases in m because N >= 0
    let params = AsepParams::from_tau(0.005).unwrap();
    let q = MomentQuad::default();
    let v: Vec<f64> = (0..=3).map(|m| moment(m, 2.0, 0, &params, &q).unwrap()).collect();
    assert_eq!(v[0], 1.0);
    for w in v.windows(2) {
        assert!(w[1] < w[0] && w[1] > 0.0, "{v:?}");
    }
}

#[test]
fn small_time_moment_matches_initial_condition() {
    // at t = 0 the count N_x of the half-flat start is x / 2 for even x >= 0
    let params = AsepParams::from_tau(0.2).unwrap();
    let q = MomentQuad::default();
    for x in [0i64, 2, 4, 8] {
        let exact = params.tau.powi((x / 2) as i32);
        let v = moment(1, 1e-9, x, &params, &q).unwrap();
        assert!((v - exact).abs() < 1e-6, "x {x}: {v} vs {exact}");
    }
}

#[test]
fn first_terms_agree_across_paths() {
    let params = AsepParams::from_tau(0.005).unwrap();
    let sq = ScaledQuery::new(12.0, 0.5, 0.0).unwrap();
    let quad = SeriesQuad::default();
    let zeta = sq.log_zeta(&params);
    let a = h_k_path_a(1, &zeta, sq.time(&params), sq.x(), &params, &quad).unwrap();
    let b = h_k_path_b(1, 12.0, 0.5, 0.0, &params, &quad).unwrap();
    assert!((a.value - b.value).norm() < 1e-6 * a.value.norm(), "{:?} vs {:?}", a.value, b.value);
}

#[test]
fn prelimit_is_a_cdf_in_r_tilde() {
    let params = AsepParams::from_tau(0.005).unwrap();
    let quad = SeriesQuad::default();
    let mut prev = 0.0;
    for r in [-1.0, -0.5, 0.0, 0.5, 1.0] {
        let v = prelimit_cdf(&ScaledQuery::new(10.0, 0.0, r).unwrap(), &params, 4, Path::B, &quad).unwrap();
        assert!(v.total >= prev && v.total <= 1.0 + 1e-6, "r {r}: {}", v.total);
        assert!(v.converged);
        prev = v.total;
    }
}

#[test]
fn airy21_stable_under_refinement() {
    let q = Airy21Query::new(1.0, -1.0).unwrap();
    let base = airy21_cdf(&q, usize::MAX, &AiryQuad::default()).unwrap();
    let fine = AiryQuad { nodes_per_panel: 2 * AiryQuad::default().nodes_per_panel, ..AiryQuad::default() };
    let refined = airy21_cdf(&q, usize::MAX, &fine).unwrap();
    assert!((base.cdf - refined.cdf).abs() < 1e-8, "{} vs {}", base.cdf, refined.cdf);
}

#[test]
fn airy21_nonincreasing_in_t1() {
    let quad = AiryQuad::default();
    for y in [-2.0, -1.0, 0.0] {
        let mut prev = f64::INFINITY;
        for t1 in [0.0, 1.0, 2.0, 4.0] {
            let v = airy21_cdf(&Airy21Query::new(t1, y).unwrap(), usize::MAX, &quad).unwrap();
            assert!(v.cdf <= prev + 1e-6 + v.est_error, "y {y}, t1 {t1}: {} after {prev}", v.cdf);
            prev = v.cdf;
        }
    }
}
