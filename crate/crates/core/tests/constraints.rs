use num_complex::Complex64;
use proptest::prelude::*;
use ssr_core::charfn::{heston_cd, AfvCharFn};
use ssr_core::model::{ForwardVarianceCurve, Kernel, ModelParams};
use ssr_core::riccati::RiccatiGrid;

const ZEROS: [Complex64; 2] = [Complex64 { re: 0.0, im: 0.0 }, Complex64 { re: 0.0, im: -1.0 }];
const ALPHAS: [f64; 4] = [0.55, 0.6, 0.8, 1.0];
const NUS: [f64; 3] = [0.2, 0.4, 1.0];
const LAMBDAS: [f64; 3] = [0.0, 1.0, 2.0];
const RHOS: [f64; 4] = [-0.9, -0.65, 0.0, 0.5];

fn kernels(alpha: f64, nu: f64, lambda: f64) -> Vec<Kernel> {
    let mut ks = vec![Kernel::mittag_leffler(alpha, nu, lambda).unwrap()];
    if lambda == 0.0 {
        ks.push(Kernel::power_law(alpha, nu).unwrap());
    }
    if alpha == 1.0 {
        ks.push(Kernel::exponential(nu, lambda).unwrap());
    }
    ks
}

#[test]
fn afv_exponent_vanishes_at_constraint_points() {
    let curves = [
        ForwardVarianceCurve::flat(0.025).unwrap(),
        ForwardVarianceCurve::exponential_decay(0.045, 0.025, 7.0).unwrap(),
        ForwardVarianceCurve::tabulated(&[(0.5, 0.02), (1.0, 0.03), (2.0, 0.04)]).unwrap(),
    ];
    let grid = RiccatiGrid::new(128, 2.0).unwrap();
    let mut worst: f64 = 0.0;
    for alpha in ALPHAS {
        for nu in NUS {
            for lambda in LAMBDAS {
                for rho in RHOS {
                    for kernel in kernels(alpha, nu, lambda) {
                        for curve in &curves {
                            let engine = AfvCharFn::new(rho, &kernel, curve, grid).unwrap();
                            for a in ZEROS {
                                let sol = engine.solve(a).unwrap();
                                for n in 0..=grid.n_steps() {
                                    let (psi, dpsi) = engine.at_node(&sol, n);
                                    worst = worst.max(psi.norm()).max(dpsi.norm());
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    assert!(worst <= 1e-10, "{worst}");
}

#[test]
fn heston_exponent_vanishes_at_constraint_points() {
    for nu in NUS {
        for lambda in LAMBDAS {
            for rho in RHOS {
                let p = ModelParams::new(1.0, nu, lambda, rho, 0.04, 0.025).unwrap();
                for tau in [1e-4, 0.01, 0.5, 2.0, 10.0] {
                    for a in ZEROS {
                        let cd = heston_cd(&p, tau, a).unwrap();
                        assert!(cd.psi(p.v0, p.vbar).norm() <= 1e-10, "nu {nu} lambda {lambda} rho {rho} tau {tau} a {a}");
                    }
                }
            }
        }
    }
}

proptest! {
    #[test]
    fn heston_exponent_is_a_characteristic_exponent(
        u in 0.0f64..50.0,
        nu in 0.05f64..1.5,
        lambda in 0.0f64..3.0,
        rho in -0.95f64..0.95,
        tau in 0.01f64..3.0,
    ) {
        let p = ModelParams::new(1.0, nu, lambda, rho, 0.03, 0.04).unwrap();
        let plus = heston_cd(&p, tau, Complex64::new(u, 0.0)).unwrap().psi(p.v0, p.vbar);
        let minus = heston_cd(&p, tau, Complex64::new(-u, 0.0)).unwrap().psi(p.v0, p.vbar);
        prop_assert!((plus - minus.conj()).norm() <= 1e-10 * (1.0 + plus.norm()));
        prop_assert!(plus.re <= 1e-10);
    }

    #[test]
    fn afv_exponent_is_bounded_on_the_real_axis(
        u in 0.0f64..20.0,
        alpha in 0.55f64..1.0,
        rho in -0.9f64..0.9,
    ) {
        let kernel = Kernel::power_law(alpha, 0.4).unwrap();
        let curve = ForwardVarianceCurve::flat(0.025).unwrap();
        let engine = AfvCharFn::new(rho, &kernel, &curve, RiccatiGrid::new(64, 1.0).unwrap()).unwrap();
        let (psi, _) = engine.eval(Complex64::new(u, 0.0), 1.0).unwrap();
        prop_assert!(psi.re <= 1e-10, "{psi}");
        let (conj, _) = engine.eval(Complex64::new(-u, 0.0), 1.0).unwrap();
        prop_assert!((psi - conj.conj()).norm() <= 1e-10 * (1.0 + psi.norm()));
    }
}
