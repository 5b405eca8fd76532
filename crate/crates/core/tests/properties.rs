use halfflat::asep_sim::{init_half_flat, simulate_to, AsepParams, SimWindow};
use halfflat::harness::{laplace_weight, zeta_exponent, ScaledQuery};
use halfflat::qmath::{
    cauchy_closed_form, det_complex, hadamard_bound, qexp, qfactorial, qpochhammer, CauchyVariant, ComplexMatrix,
    QExpMode, QReal, TruncationPolicy,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

proptest! {
    #[test]
    fn qpochhammer_shift(re in -0.9f64..0.9, im in -0.9f64..0.9, tau in 0.001f64..0.9) {
        let tau = QReal::new(tau).unwrap();
        let p = TruncationPolicy::default();
        let a = c(re, im);
        let lhs = qpochhammer(a, tau, &p).unwrap();
        let rhs = (1.0 - a) * qpochhammer(a * tau.get(), tau, &p).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
    }

    #[test]
    fn qfactorial_nondecreasing(k in 0u32..40, tau in 0.001f64..0.99) {
        let tau = QReal::new(tau).unwrap();
        prop_assert!(qfactorial(k + 1, tau) >= qfactorial(k, tau));
    }

    #[test]
    fn qexp_modes_agree(r in 0.05f64..0.85, phase in 0.0f64..std::f64::consts::TAU, tau in 0.005f64..0.6) {
        let tau = QReal::new(tau).unwrap();
        let p = TruncationPolicy::default();
        let x = Complex64::from_polar(r, phase);
        let a = qexp(x, tau, QExpMode::Product, &p).unwrap();
        let b = qexp(x, tau, QExpMode::Series, &p).unwrap();
        prop_assert!((a - b).norm() <= 1e-10 * a.norm());
    }

    #[test]
    fn hadamard_bounds_determinant(entries in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 16)) {
        let m = ComplexMatrix::new(4, entries.into_iter().map(|(a, b)| c(a, b)).collect()).unwrap();
        prop_assert!(det_complex(&m).norm() <= hadamard_bound(&m) * (1.0 + 1e-12));
    }

    #[test]
    fn cauchy_matches_lu(seed in 0u64..1000, k in 1usize..=6) {
        // points on two disjoint circles keep the matrix well conditioned
        let x: Vec<Complex64> = (0..k).map(|i| Complex64::from_polar(0.3, (seed as f64) + i as f64 * 1.1)).collect();
        let y: Vec<Complex64> = (0..k).map(|i| Complex64::from_polar(0.8, (seed as f64) * 0.7 + i as f64 * 1.3)).collect();
        for variant in [CauchyVariant::Single, CauchyVariant::Double] {
            let m = ComplexMatrix::from_fn(k, |i, j| match variant {
                CauchyVariant::Single => 1.0 / (x[i] - y[j]),
                CauchyVariant::Double => 1.0 / ((x[i] - y[j]) * (1.0 - x[i] * y[j])),
            })
            .unwrap();
            let closed = cauchy_closed_form(&x, &y, variant).unwrap();
            prop_assert!((det_complex(&m) - closed).norm() <= 1e-9 * closed.norm().max(1e-300));
        }
    }

    #[test]
    fn exponent_increasing_in_r_tilde(t in 1.0f64..60.0, alpha in -2.0f64..2.0, r in -2.0f64..2.0, dr in 0.01f64..1.0) {
        let lo = zeta_exponent(&ScaledQuery::new(t, alpha, r).unwrap());
        let hi = zeta_exponent(&ScaledQuery::new(t, alpha, r + dr).unwrap());
        prop_assert!(hi > lo);
    }

    #[test]
    fn weight_is_a_probability_and_increasing_in_n(n in 0u64..200, e in -30.0f64..30.0, tau in 0.001f64..0.5) {
        let lt = tau.ln();
        let w = laplace_weight(n, e, lt);
        prop_assert!((0.0..=1.0).contains(&w));
        prop_assert!(laplace_weight(n + 1, e, lt) >= w);
    }

    #[test]
    fn height_matches_flux(seed in 0u64..500, t in 0.0f64..6.0, tau in 0.01f64..0.9) {
        let params = AsepParams::from_tau(tau).unwrap();
        let window = SimWindow::default_for_time(t);
        let s = simulate_to(&init_half_flat(window), t, &params, seed);
        for x in -10..=10 {
            prop_assert_eq!(s.height(x).unwrap(), s.height_from_flux(x).unwrap());
        }
        prop_assert_eq!(s.n_particles(), init_half_flat(window).n_particles());
    }
}
