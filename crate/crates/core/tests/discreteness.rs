use proptest::prelude::*;
use ssr_core::discreteness::{max_relative_error, ratio_general, ratio_power_law, DiscretenessKernel};

const GAMMAS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
const EPSILONS: [f64; 6] = [0.01, 0.02, 0.05, 0.1, 0.2, 0.5];

#[test]
fn quadrature_equals_closed_form_on_grid() {
    for g in GAMMAS {
        for e in EPSILONS {
            let q = ratio_general(DiscretenessKernel::PowerLaw { gamma: g }, e, 1.0, None).unwrap();
            let c = ratio_power_law(g, e).unwrap();
            assert!((q - c).abs() < 1e-10, "gamma {g} eps {e}: {q} vs {c}");
            assert!(c <= max_relative_error(e).unwrap() + 1e-12);
        }
    }
}

#[test]
fn one_day_in_a_month() {
    let b = max_relative_error(1.0 / 20.0).unwrap();
    assert!((b - 1.0256).abs() < 1e-4);
}

#[test]
fn half_of_the_bound_at_gamma_one_half() {
    // Slope of (ratio - 1) in eps near zero, by least squares through the origin.
    let eps: Vec<f64> = (1..=8).map(|j| 1e-4 * j as f64).collect();
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &e in &eps {
        let y = ratio_power_law(0.5, e).unwrap() - 1.0;
        sxy += e * y;
        sxx += e * e;
    }
    let slope = sxy / sxx;
    assert!((slope - 0.25).abs() < 1e-3, "{slope}");
    let bound_slope = (max_relative_error(1e-4).unwrap() - 1.0) / 1e-4;
    assert!((slope / bound_slope - 0.5).abs() < 1e-3);
}

#[test]
fn second_order_remainder_is_stable() {
    let c: Vec<f64> = [0.04, 0.02, 0.01]
        .iter()
        .map(|&e| (ratio_power_law(0.5, e).unwrap() - (1.0 + 0.25 * e)) / (e * e))
        .collect();
    assert!(c.windows(2).all(|w| (w[1] / w[0] - 1.0).abs() < 0.05), "{c:?}");
}

proptest! {
    #[test]
    fn bound_is_never_violated(gamma in 0.0f64..0.99, eps in 1e-4f64..0.99) {
        let r = ratio_power_law(gamma, eps).unwrap();
        prop_assert!(r > 0.0);
        prop_assert!(r >= 1.0 - 1e-15);
        prop_assert!(r <= max_relative_error(eps).unwrap() + 1e-12);
    }

    #[test]
    fn quadrature_matches_closed_form(gamma in 0.0f64..0.95, eps in 1e-3f64..0.9, tau in 0.05f64..5.0) {
        let q = ratio_general(DiscretenessKernel::PowerLaw { gamma }, eps * tau, tau, None).unwrap();
        prop_assert!((q - ratio_power_law(gamma, eps).unwrap()).abs() < 1e-10);
    }
}
