//! Property-based invariants.

use proptest::prelude::*;

use nfl_core::cli::ExperimentConfig;
use nfl_core::envelope::{poly_deriv, poly_eval, quintic_hermite};
use nfl_core::evolution::{self, check_comparison};
use nfl_core::fronts::{self, interface_locations};
use nfl_core::kernel::{ConvWeights, FieldState, Kernel};
use nfl_core::nonlinearity::{Homogeneous, Nonlinearity};

fn kernel_strategy() -> impl Strategy<Value = Kernel> {
    prop_oneof![
        (0.5f64..2.0).prop_map(|s| Kernel::gaussian(s).unwrap()),
        (0.5f64..2.0).prop_map(|r| Kernel::bump(r).unwrap()),
    ]
}

fn family_strategy() -> impl Strategy<Value = Homogeneous> {
    prop_oneof![
        (0.2f64..3.0).prop_map(|f0| Homogeneous::kpp(f0).unwrap()),
        (0.05f64..0.9, 0.5f64..6.0).prop_map(|(t, a)| Homogeneous::ignition(t, a).unwrap()),
        (0.05f64..0.95).prop_map(|t| Homogeneous::bistable(t).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn convolution_preserves_constants(k in kernel_strategy(), c in 0.0f64..1.0) {
        let dx = k.width() / 10.0;
        let s = FieldState::constant(-5.0, dx, 101, c).unwrap();
        let out = ConvWeights::new(&k, dx).unwrap().apply(&s);
        for v in out {
            prop_assert!((v - c).abs() < 1e-12);
        }
    }

    #[test]
    fn convolution_is_monotone(k in kernel_strategy(), bumps in prop::collection::vec(0.0f64..0.2, 81)) {
        let dx = k.width() / 10.0;
        let u = FieldState::from_fn(-4.0, dx, 81, 1.0, 0.0, |x| 0.5 * (1.0 - x.tanh())).unwrap();
        let vals: Vec<f64> = u.values.iter().zip(&bumps).map(|(a, b)| (a + b).min(1.0)).collect();
        let v = FieldState::new(u.x0, dx, vals, 1.0, 0.0, 0.0).unwrap();
        let w = ConvWeights::new(&k, dx).unwrap();
        let (ju, jv) = (w.apply(&u), w.apply(&v));
        for i in 0..ju.len() {
            prop_assert!(ju[i] <= jv[i] + 1e-15);
        }
    }

    #[test]
    fn kernel_is_symmetric(k in kernel_strategy(), x in -3.0f64..3.0) {
        prop_assert_eq!(k.eval(x), k.eval(-x));
    }

    #[test]
    fn reactions_vanish_at_states(h in family_strategy()) {
        prop_assert_eq!(h.raw(0.0).0, 0.0);
        prop_assert!(h.raw(1.0).0.abs() < 1e-15);
        prop_assert!(h.reflect().raw(0.0).0.abs() < 1e-15);
        prop_assert_eq!(h.reflect().reflect(), h);
    }

    #[test]
    fn quintic_interpolates(h in 0.1f64..5.0, y0 in -3.0f64..3.0, d0 in -3.0f64..3.0, y1 in -3.0f64..3.0, d1 in -3.0f64..3.0) {
        let c = quintic_hermite(h, (y0, d0, 0.0), (y1, d1, 0.0));
        let scale = 1.0 + y1.abs() + d1.abs();
        prop_assert!((poly_eval(&c, 0.0) - y0).abs() < 1e-12);
        prop_assert!((poly_eval(&c, h) - y1).abs() < 1e-9 * scale);
        prop_assert!((poly_deriv(&c, h) - d1).abs() < 1e-9 * scale / h.min(1.0));
    }

    #[test]
    fn level_crossings_ordered(center in -3.0f64..3.0, width in 0.3f64..3.0, lo in 0.05f64..0.45, gap in 0.05f64..0.45) {
        let s = FieldState::from_fn(-10.0, 0.1, 201, 1.0, 0.0, |x| 0.5 * (1.0 - ((x - center) / width).tanh())).unwrap();
        let hi = lo + gap;
        let (am, ap) = interface_locations(&s, lo).unwrap();
        let (bm, bp) = interface_locations(&s, hi).unwrap();
        // monotone profile: both crossings coincide and higher levels sit further left
        prop_assert!((am - ap).abs() < 1e-12 && (bm - bp).abs() < 1e-12);
        prop_assert!(bp <= ap);
        let exact = center + width * (1.0 - 2.0 * lo).atanh();
        prop_assert!((ap - exact).abs() < 0.01);
    }

    #[test]
    fn fit_certifies_noisy_linear_trace(speed in 0.2f64..3.0, noise in prop::collection::vec(-0.5f64..0.5, 60)) {
        let times: Vec<f64> = (0..60).map(|k| k as f64 * 0.5).collect();
        let x: Vec<f64> = times.iter().zip(&noise).map(|(t, e)| speed * t + e).collect();
        let fit = fronts::fit_propagation_bounds(&times, &x).unwrap();
        prop_assert!(fit.certified && fit.c1 > 0.0 && fit.c1 <= fit.c2);
        prop_assert!(fronts::verify_propagation_bounds(&times, &x, &fit).1.is_none());
    }

    #[test]
    fn config_round_trips(sigma in 0.2f64..3.0, theta in 0.05f64..0.95, seed in any::<u64>()) {
        let text = format!(
            r#"{{"version":1,"experiment":"validate","kernel":{{"family":"gaussian","sigma":{sigma}}},
               "nonlinearity":{{"kind":"homogeneous","family":"bistable","theta":{theta}}},"seed":{seed}}}"#
        );
        let c = ExperimentConfig::from_json(&text).unwrap();
        let back = ExperimentConfig::from_json(&c.to_json()).unwrap();
        prop_assert_eq!(&c, &back);
        prop_assert_eq!(c.hash(), back.hash());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn comparison_preserved(h in family_strategy(), shift in 0.0f64..3.0, lift in 0.0f64..0.2) {
        let k = Kernel::gaussian(1.0).unwrap();
        let grid = evolution::Grid { x0: -10.0, dx: 0.1, n: 201 };
        let u0 = FieldState::from_fn(grid.x0, grid.dx, grid.n, 1.0, 0.0, |x| 0.5 * (1.0 - x.tanh())).unwrap();
        let v0 = FieldState::from_fn(grid.x0, grid.dx, grid.n, 1.0, 0.0, |x| (0.5 * (1.0 - (x - shift).tanh()) + lift * (-x * x).exp()).min(1.0)).unwrap();
        let nl: Nonlinearity = h.into();
        let rep = check_comparison(&u0, &v0, 2.0, 0.05, &nl, &k).unwrap();
        prop_assert!(rep.pass, "{:?}", rep);
    }

    #[test]
    fn constant_states_are_fixed(h in family_strategy(), one in any::<bool>()) {
        let k = Kernel::gaussian(1.0).unwrap();
        let c = if one { 1.0 } else { 0.0 };
        let s = FieldState::constant(-5.0, 0.1, 101, c).unwrap();
        let nl: Nonlinearity = h.into();
        let next = evolution::step(&s, 0.1, &nl, &k).unwrap();
        prop_assert!(next.values.iter().all(|&v| (v - c).abs() < 1e-14));
    }
}
