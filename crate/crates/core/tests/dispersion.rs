use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use semiwave::dispersion::{mu_q, DispersionFunction, RootOptions, SpeedOptions};
use semiwave::error::Error;
use semiwave::kernels::{Kernel, SpatialLaw, TemporalLaw};

fn bench() -> Kernel {
    Kernel::separable(TemporalLaw::Exponential { rate: 1.0 }, SpatialLaw::Gaussian { mean: 0.0, variance: 1.0 })
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    // With no delay and no dispersal ℛ is the parabola z² - cz + (p - q).
    #[test]
    fn local_speed_is_kpp(q in 0.05..2.0f64, extra in 0.1..3.0f64) {
        let p = q + extra;
        let chi = DispersionFunction::new(q, p, Kernel::local()).unwrap();
        let c = chi.minimal_speed_auto(&SpeedOptions::default()).unwrap();
        prop_assert!((c.c_min - 2.0 * extra.sqrt()).abs() < 1e-7);
        prop_assert!((c.lambda_tangent - extra.sqrt()).abs() < 1e-3);
    }

    // Above the minimal speed there are two roots straddling the tangent point.
    #[test]
    fn roots_exist_above_minimal_speed(factor in 1.05..3.0f64) {
        let chi = DispersionFunction::new(1.0, 2.0, bench()).unwrap();
        let s = chi.minimal_speed_auto(&SpeedOptions::default()).unwrap();
        let r = chi.positive_roots(factor * s.c_min, &RootOptions::default()).unwrap();
        prop_assert_eq!(r.roots.len(), 2);
        prop_assert!(r.roots[0] < s.lambda_tangent && s.lambda_tangent < r.roots[1]);
        for z in &r.roots {
            prop_assert!(chi.eval(*z, factor * s.c_min).unwrap().abs() < 1e-8);
        }
    }

    // ℛ(0, c) = p - q for every speed.
    #[test]
    fn value_at_origin(c in -3.0..5.0f64) {
        let chi = DispersionFunction::new(0.5, 1.7, bench()).unwrap();
        prop_assert!((chi.eval(0.0, c).unwrap() - 1.2).abs() < 1e-14);
    }
}

#[test]
fn no_roots_below_minimal_speed() {
    let chi = DispersionFunction::new(1.0, 2.0, bench()).unwrap();
    let r = chi.positive_roots(1.0, &RootOptions::default()).unwrap();
    assert!(!r.has_root());
    assert!(r.min_value > 0.0);
    assert!(r.scan_hi <= mu_q(1.0, 1.0));
}

#[test]
fn speed_increases_with_birth_rate() {
    let speeds: Vec<f64> = [1.5, 2.0, 3.0, 5.0]
        .iter()
        .map(|&p| {
            DispersionFunction::new(1.0, p, bench())
                .unwrap()
                .minimal_speed_auto(&SpeedOptions::default())
                .unwrap()
                .c_min
        })
        .collect();
    assert!(speeds.windows(2).all(|w| w[1] > w[0]), "{speeds:?}");
}

#[test]
fn bracket_must_straddle() {
    let chi = DispersionFunction::new(1.0, 2.0, Kernel::local()).unwrap();
    let err = chi.minimal_speed((3.0, 4.0), &SpeedOptions::default()).unwrap_err();
    assert!(matches!(err, Error::BadBracket { .. }));
    let ok = chi.minimal_speed((1.0, 4.0), &SpeedOptions::default()).unwrap();
    assert_abs_diff_eq!(ok.c_min, 2.0, epsilon = 1e-8);
}

#[test]
fn requires_p_above_q() {
    assert!(DispersionFunction::new(2.0, 1.0, Kernel::local()).is_err());
    assert!(DispersionFunction::new(0.0, 1.0, Kernel::local()).is_err());
}

#[test]
fn identity_check_rejects_small_beta() {
    let chi = DispersionFunction::new(1.0, 2.0, bench()).unwrap();
    assert!(chi.chi_identity_check(0.5, 1.0, &[0.1]).is_err());
}
