use approx::assert_relative_eq;
use proptest::prelude::*;

use semiwave::kernels::{Atom, Kernel, SpatialLaw, SupportBox, TemporalLaw};
use semiwave::profile::K2Convolution;

fn temporal() -> impl Strategy<Value = TemporalLaw> {
    prop_oneof![
        (0.3..3.0f64).prop_map(|rate| TemporalLaw::Exponential { rate }),
        (0.5..4.0f64, 0.5..3.0f64).prop_map(|(shape, rate)| TemporalLaw::Gamma { shape, rate }),
        (0.0..2.0f64).prop_map(TemporalLaw::discrete),
    ]
}

fn spatial() -> impl Strategy<Value = SpatialLaw> {
    prop_oneof![
        (-1.0..1.0f64, 0.2..2.0f64).prop_map(|(mean, variance)| SpatialLaw::Gaussian { mean, variance }),
        (-1.0..1.0f64, 0.3..1.5f64).prop_map(|(mean, scale)| SpatialLaw::Laplace { mean, scale }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn closed_form_matches_quadrature(t in temporal(), s in spatial(), c in 0.2..3.0f64, frac in 0.0..0.8f64) {
        let k = Kernel::separable(t, s).unwrap();
        let z = frac * k.domain(c).usable_hi().min(2.0);
        let exact = k.closed_form_transform(z, c).unwrap();
        let quad = k.transform_quadrature(z, c, 1e-10).unwrap();
        prop_assert!((exact - quad).abs() <= 1e-7 * exact.max(1.0), "{exact} vs {quad}");
    }

    #[test]
    fn transform_is_one_at_origin_and_log_convex(t in temporal(), s in spatial(), c in 0.2..3.0f64) {
        let k = Kernel::separable(t, s).unwrap();
        prop_assert!((k.transform(0.0, c).unwrap() - 1.0).abs() < 1e-14);
        let hi = k.domain(c).usable_hi().min(2.0);
        let (a, b) = (0.2 * hi, 0.6 * hi);
        let m = 0.5 * (a + b);
        let l = |z: f64| k.transform(z, c).unwrap().ln();
        prop_assert!(l(m) <= 0.5 * (l(a) + l(b)) + 1e-12);
    }

    #[test]
    fn discrete_k2_has_unit_mass(t in temporal(), s in spatial(), c in 0.2..3.0f64) {
        let k = Kernel::separable(t, s).unwrap();
        let conv = K2Convolution::new(&k.projection(c), 0.02, 4000).unwrap();
        let total: f64 = conv.weights().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }
}

#[test]
fn projection_mass_is_one_for_each_family() {
    let ks = [
        Kernel::marine(0.02, 100.0, 0.001).unwrap(),
        Kernel::separable(TemporalLaw::Exponential { rate: 1.0 }, SpatialLaw::Gaussian { mean: 0.0, variance: 1.0 })
            .unwrap(),
        Kernel::separable(TemporalLaw::discrete(0.5), SpatialLaw::Laplace { mean: 0.3, scale: 0.7 }).unwrap(),
        Kernel::separable(TemporalLaw::Gamma { shape: 2.0, rate: 1.0 }, SpatialLaw::Dirac { at: 0.0 }).unwrap(),
    ];
    for k in ks {
        let m = k.projection(1.3).mass(1e-9).unwrap();
        assert_relative_eq!(m, 1.0, epsilon = 1e-6);
    }
}

#[test]
fn marine_mass_and_closed_form() {
    let k = Kernel::marine(0.02, 100.0, 0.001).unwrap();
    assert_relative_eq!(k.mass(1e-8).unwrap(), 1.0, epsilon = 1e-6);
    let (c, z) = (2.0, 0.01);
    let closed = 0.001 / (0.001 + (c - 0.02) * z - 100.0 * z * z);
    assert_relative_eq!(k.transform(z, c).unwrap(), closed, max_relative = 1e-14);
}

#[test]
fn domain_is_enforced() {
    let k = Kernel::marine(0.02, 100.0, 0.001).unwrap();
    let hi = k.abscissa(3.0);
    assert!(k.transform(0.995 * hi, 3.0).is_err());
    assert!(k.transform(-0.1, 3.0).is_err());
    assert!(k.transform(0.5 * hi, 3.0).is_ok());
}

#[test]
fn custom_kernel_uses_quadrature() {
    // Exp(2) delay with a uniform displacement on [-1, 1].
    let density = |s: f64, w: f64| if w.abs() <= 1.0 { 2.0 * (-2.0 * s).exp() * 0.5 } else { 0.0 };
    let support = SupportBox { s_max: 20.0, w_min: -1.0, w_max: 1.0 };
    let k = Kernel::custom(density, |c: f64| if c < 0.0 { 2.0 / -c } else { f64::INFINITY }, support).unwrap();
    assert!(!k.has_closed_form());
    let (z, c): (f64, f64) = (0.4, 1.0);
    let exact = 2.0 / (2.0 + z * c) * z.sinh() / z;
    assert_relative_eq!(k.transform(z, c).unwrap(), exact, max_relative = 1e-7);
}

#[test]
fn invalid_laws_are_rejected() {
    assert!(Kernel::separable(TemporalLaw::Exponential { rate: -1.0 }, SpatialLaw::Dirac { at: 0.0 }).is_err());
    assert!(Kernel::separable(TemporalLaw::Atoms { atoms: vec![] }, SpatialLaw::Dirac { at: 0.0 }).is_err());
    let bad = TemporalLaw::Atoms {
        atoms: vec![Atom { at: 1.0, weight: 0.4 }, Atom { at: 2.0, weight: 0.4 }],
    };
    assert!(Kernel::separable(bad, SpatialLaw::Dirac { at: 0.0 }).is_err());
    assert!(Kernel::marine(0.02, 0.0, 0.001).is_err());
}
