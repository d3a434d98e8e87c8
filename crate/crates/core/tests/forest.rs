use ssr_core::forest::{
    heston_lambda0_expansion, ssr_next_to_leading, ssr_second_order, tree_values, CatalogKind, TreeId,
};
use ssr_core::model::{ForwardVarianceCurve, Kernel, ModelParams};
use ssr_core::numerics::QuadratureSpec;
use ssr_core::ssr::{ssr_afv, ssr_heston};
use ssr_core::Error;
use statrs::function::gamma::gamma;

fn flat(v: f64) -> ForwardVarianceCurve {
    ForwardVarianceCurve::flat(v).unwrap()
}

#[test]
fn rough_catalog_at_alpha_one_is_heston() {
    let p = ModelParams::new(1.0, 0.4, 0.0, -0.65, 0.04, 0.04).unwrap();
    for tau in [0.01, 0.3, 2.0] {
        let r = tree_values(CatalogKind::RoughLambda0, &p, &flat(0.04), tau).unwrap();
        let h = tree_values(CatalogKind::HestonLambda0, &p, &flat(0.04), tau).unwrap();
        for t in TreeId::ALL {
            assert!((r.value(t) - h.value(t)).abs() <= 1e-14 * h.value(t).abs(), "{t}");
            if let Some(d) = h.dxi(t) {
                assert!((r.dxi(t).unwrap() - d).abs() <= 1e-14 * d.abs(), "{t}");
            }
        }
        let nl_r = ssr_next_to_leading(&r).unwrap();
        let nl_h = ssr_next_to_leading(&h).unwrap();
        assert!((nl_r - nl_h).abs() < 1e-13);
    }
}

#[test]
fn rough_catalog_entries() {
    let (alpha, nu, rho, v, tau) = (0.6, 0.4, -0.8, 0.025, 0.3);
    let p = ModelParams::new(alpha, nu, 0.0, rho, v, v).unwrap();
    let c = tree_values(CatalogKind::RoughLambda0, &p, &flat(v), tau).unwrap();
    let want = rho * nu / gamma(2.0 + alpha) * v * tau.powf(alpha + 1.0);
    assert!((c.value(TreeId::MX) - want).abs() < 1e-14 * want.abs());
    let h = tree_values(CatalogKind::HestonLambda0, &ModelParams { alpha: 1.0, ..p }, &flat(v), tau).unwrap();
    let want = rho * nu.powi(3) * v * tau.powi(4) / 8.0;
    assert!((h.value(TreeId::XMM) - want).abs() < 1e-15 * want.abs());
}

#[test]
fn afv_pattern_relates_dxi_to_tau_derivative() {
    // rho V D^xi T = d/dtau (T ⋄ X) for a flat curve.
    for alpha in [0.6, 0.8, 1.0] {
        let p = ModelParams::new(alpha, 0.4, 0.0, -0.7, 0.03, 0.03).unwrap();
        let tau = 0.4;
        let h = 1e-5;
        let at = |t| tree_values(CatalogKind::RoughLambda0, &p, &flat(0.03), t).unwrap();
        let c = at(tau);
        for (tree, joined) in [(TreeId::M, TreeId::MX), (TreeId::MX, TreeId::MXX), (TreeId::MM, TreeId::MMX), (TreeId::MXX, TreeId::MXXX)] {
            let deriv = (at(tau + h).value(joined) - at(tau - h).value(joined)) / (2.0 * h);
            let lhs = p.rho * 0.03 * c.dxi(tree).unwrap();
            assert!((lhs - deriv).abs() < 1e-8 * lhs.abs(), "alpha {alpha} {tree}: {lhs} vs {deriv}");
        }
    }
}

#[test]
fn second_order_heston_quotient() {
    let p = ModelParams::new(1.0, 0.4, 0.0, -0.65, 0.04, 0.04).unwrap();
    for tau in [0.01, 0.5, 2.0] {
        let c = tree_values(CatalogKind::HestonLambda0, &p, &flat(0.04), tau).unwrap();
        let x = p.rho * p.nu * tau;
        let want = 2.0 * (1.0 + x / 4.0) / (1.0 + x / 3.0);
        assert!((ssr_second_order(&c).unwrap() - want).abs() < 1e-14);
    }
    let p0 = ModelParams { rho: 0.0, ..p };
    let c = tree_values(CatalogKind::HestonLambda0, &p0, &flat(0.04), 0.1).unwrap();
    assert!(matches!(ssr_second_order(&c), Err(Error::DegenerateSkew(_))));
    assert!(matches!(ssr_next_to_leading(&c), Err(Error::DegenerateSkew(_))));
}

#[test]
fn next_to_leading_reproduces_heston_expansion() {
    let (nu, rho, v) = (0.4, -0.65, 0.04);
    let p = ModelParams::new(1.0, nu, 0.0, rho, v, v).unwrap();
    let tau = 0.01;
    let c = tree_values(CatalogKind::HestonLambda0, &p, &flat(v), tau).unwrap();
    let nl = ssr_next_to_leading(&c).unwrap();
    let ex = heston_lambda0_expansion(nu, rho, v, tau);
    println!("next-to-leading {nl} expansion {ex}");
    assert!((nl - ex).abs() < 5e-5 * ex);
}

#[test]
fn catalog_preconditions() {
    let p = ModelParams::new(0.6, 0.4, 1.0, -0.65, 0.04, 0.04).unwrap();
    assert!(matches!(tree_values(CatalogKind::RoughLambda0, &p, &flat(0.04), 0.1), Err(Error::Unsupported(_))));
    let p = ModelParams { lambda: 0.0, ..p };
    let curve = ForwardVarianceCurve::exponential_decay(0.04, 0.02, 1.0).unwrap();
    assert!(matches!(tree_values(CatalogKind::RoughLambda0, &p, &curve, 0.1), Err(Error::Unsupported(_))));
    assert!(matches!(tree_values(CatalogKind::HestonLambda0, &p, &flat(0.04), 0.1), Err(Error::Unsupported(_))));
}

#[test]
fn heston_exact_minus_expansion_is_quadratic() {
    let p = ModelParams::new(1.0, 0.4, 0.0, -0.65, 0.04, 0.04).unwrap();
    let spec = QuadratureSpec { abs_tol: 1e-13, rel_tol: 1e-12, ..Default::default() };
    let k: Vec<f64> = [0.02, 0.04, 0.08]
        .iter()
        .map(|&t| (ssr_heston(&p, t, &spec).unwrap().ssr - heston_lambda0_expansion(0.4, -0.65, 0.04, t)).abs() / (t * t))
        .collect();
    println!("K {k:?}");
    assert!(k.windows(2).all(|w| (w[1] / w[0] - 1.0).abs() < 0.25), "{k:?}");
}

#[test]
fn forest_tracks_numerics_at_short_maturity() {
    let spec = QuadratureSpec::default();
    for h in [0.1, 0.3, 0.5] {
        let p = ModelParams::from_hurst(h, 0.4, 0.0, -0.8, 0.025, 0.025).unwrap();
        let kernel = Kernel::power_law(p.alpha, p.nu).unwrap();
        let rel: Vec<f64> = [0.01, 0.005, 0.002, 0.001]
            .iter()
            .map(|&tau| {
                let num = ssr_afv(&p, &kernel, &flat(0.025), tau, &spec).unwrap().ssr;
                let c = tree_values(CatalogKind::RoughLambda0, &p, &flat(0.025), tau).unwrap();
                (ssr_next_to_leading(&c).unwrap() - num).abs() / num
            })
            .collect();
        assert!(rel.iter().all(|r| *r < 0.02), "H {h}: {rel:?}");
        // For small H the dropped terms decay like tau^{4 alpha - 2}, so shrinking sets in late.
        let start = if h < 0.2 { 1 } else { 0 };
        assert!(rel[start..].windows(2).all(|w| w[1] < w[0]), "H {h}: {rel:?}");
    }
}

#[test]
fn expansions_share_the_short_time_limit() {
    for alpha in [0.6, 0.8, 1.0] {
        let p = ModelParams::new(alpha, 0.4, 0.0, -0.8, 0.025, 0.025).unwrap();
        let c = tree_values(CatalogKind::RoughLambda0, &p, &flat(0.025), 1e-12).unwrap();
        assert!((ssr_second_order(&c).unwrap() - (alpha + 1.0)).abs() < 1e-3);
        assert!((ssr_next_to_leading(&c).unwrap() - (alpha + 1.0)).abs() < 2e-2);
    }
}
