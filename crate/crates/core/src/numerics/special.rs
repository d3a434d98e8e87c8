use num_complex::Complex64;
use statrs::function::gamma::{gamma, ln_gamma};
use std::f64::consts::PI;

/// `exp(z) - 1` without cancellation for small `|z|`.
pub fn cexpm1(z: Complex64) -> Complex64 {
    if z.norm() > 0.5 {
        return z.exp() - 1.0;
    }
    let half_sin = (0.5 * z.im).sin();
    let re = z.re.exp_m1() * z.im.cos() - 2.0 * half_sin * half_sin;
    let im = z.re.exp() * z.im.sin();
    Complex64::new(re, im)
}

/// `ln(1 + z)` on the principal branch, accurate for small `|z|`.
pub fn clog1p(z: Complex64) -> Complex64 {
    if z.norm() > 0.5 {
        return (z + 1.0).ln();
    }
    let re = 0.5 * (2.0 * z.re + z.re * z.re + z.im * z.im).ln_1p();
    let im = z.im.atan2(1.0 + z.re);
    Complex64::new(re, im)
}

/// `sin(pi x)` with exact zeros at the integers.
pub fn sin_pi(x: f64) -> f64 {
    let r = x - 2.0 * (0.5 * x).floor();
    if r == 0.0 || r == 1.0 {
        return 0.0;
    }
    if r <= 0.5 {
        (PI * r).sin()
    } else if r <= 1.5 {
        -(PI * (r - 1.0)).sin()
    } else {
        (PI * (r - 2.0)).sin()
    }
}

/// `1 / Gamma(x)` on the whole real line, zero at the non-positive integers.
pub fn rgamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        return 0.0;
    }
    if x < 0.5 {
        return sin_pi(x) / PI * gamma_pos(1.0 - x);
    }
    if x > 170.0 {
        return (-ln_gamma(x)).exp();
    }
    1.0 / gamma(x)
}

fn gamma_pos(x: f64) -> f64 {
    if x > 171.0 {
        ln_gamma(x).exp()
    } else {
        gamma(x)
    }
}

/// `(1 - e^{-x}) / x = int_0^1 e^{-x t} dt`.
pub fn decay_phi1(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        return 1.0 - 0.5 * x;
    }
    -(-x).exp_m1() / x
}

/// `(1 - (1 + x) e^{-x}) / x^2 = int_0^1 t e^{-x t} dt`.
pub fn decay_phi2(x: f64) -> f64 {
    if x.abs() < 0.5 {
        // sum_k (-x)^k / (k! (k + 2))
        let mut term = 1.0;
        let mut sum = 0.5;
        for k in 1..40 {
            term *= -x / k as f64;
            let t = term / (k as f64 + 2.0);
            sum += t;
            if t.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        return sum;
    }
    (1.0 - (1.0 + x) * (-x).exp()) / (x * x)
}

/// `(x - 1 + e^{-x}) / x^2 = int_0^1 (1 - t) e^{-x t} dt`.
pub fn decay_phi3(x: f64) -> f64 {
    if x.abs() < 0.5 {
        // sum_k (-x)^k / (k + 2)!
        let mut term = 0.5;
        let mut sum = 0.5;
        for k in 1..40 {
            term *= -x / (k as f64 + 2.0);
            sum += term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        return sum;
    }
    (x + (-x).exp_m1()) / (x * x)
}
