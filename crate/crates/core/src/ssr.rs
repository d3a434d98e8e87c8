//! ATM skew, spot-vol regression beta and the skew-stickiness ratio from characteristic functions.
//!
//! With `phi(a) = exp psi(a - i/2)` and `q = a^2 + 1/4`, all three come from half-line integrals
//!
//! ```text
//! S    = -e^{Sigma/8} sqrt(2/pi) / sqrt(tau) * int a Im[phi] / q
//! beta = -rho e^{Sigma/8} sqrt(2/pi) / sqrt(tau) * int Re[D^xi psi phi] / q
//! R    = rho * int Re[D^xi psi phi] / q  /  int a Im[phi] / q
//! ```
//!
//! where `Sigma` is the ATM total implied variance.

use crate::charfn::{heston_cd, AfvCharFn};
use crate::error::{domain, Error, Result};
use crate::model::{ForwardVarianceCurve, Kernel, ModelParams};
use crate::numerics::{find_root_bracketed, integrate_finite, integrate_lewis_vec, QuadratureSpec};
use crate::smile::bs_price;
use num_complex::Complex64;
use std::f64::consts::{FRAC_1_PI, PI};
use std::fmt::Write as _;
use std::io::Write;

/// Total variance bracket for the ATM inversion.
pub const SIGMA_BRACKET: (f64, f64) = (1e-12, 16.0);
pub const DEGENERATE_SKEW: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsrPoint {
    pub tau: f64,
    pub skew: f64,
    pub beta: f64,
    pub ssr: f64,
    pub sigma_atm: f64,
    pub total_var: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TermStructure {
    pub points: Vec<SsrPoint>,
    pub label: String,
    pub params: ModelParams,
    pub curve: ForwardVarianceCurve,
}

impl TermStructure {
    pub fn new(label: impl Into<String>, params: ModelParams, curve: ForwardVarianceCurve, points: Vec<SsrPoint>) -> Result<Self> {
        if points.windows(2).any(|w| !(w[1].tau > w[0].tau)) {
            return domain("term structure maturities must be strictly increasing".to_string());
        }
        Ok(TermStructure { points, label: label.into(), params, curve })
    }

    pub const CSV_HEADER: &'static str = "tau,sigma_atm,skew,beta,ssr";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for p in &self.points {
            let _ = writeln!(s, "{},{},{},{},{}", fmt17(p.tau), fmt17(p.sigma_atm), fmt17(p.skew), fmt17(p.beta), fmt17(p.ssr));
        }
        s
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }
}

/// Seventeen significant digits, enough to round-trip any double.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Maturities spaced evenly in `log tau` on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && n >= 2) {
        return domain(format!("invalid log grid [{lo}, {hi}] with {n} points"));
    }
    let r = (hi / lo).ln();
    let mut g: Vec<f64> = (0..n).map(|i| lo * (r * i as f64 / (n - 1) as f64).exp()).collect();
    g[n - 1] = hi;
    Ok(g)
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau.is_finite()) {
        return domain(format!("maturity must be positive, got {tau}"));
    }
    Ok(())
}

fn invert_atm(price: f64) -> Result<f64> {
    find_root_bracketed(|s| bs_price(0.0, s) - price, SIGMA_BRACKET.0, SIGMA_BRACKET.1, 0.0)
}

fn control_variance(psi0: Complex64) -> Result<f64> {
    let w0 = -8.0 * psi0.re;
    if !(w0 > 0.0 && w0.is_finite()) {
        return domain(format!("characteristic exponent gives total variance {w0}"));
    }
    Ok(w0)
}

/// ATM total implied variance `Sigma` from `u -> psi(u - i/2)`.
pub fn atm_total_variance<F>(mut psi: F, spec: &QuadratureSpec) -> Result<f64>
where
    F: FnMut(f64) -> Result<Complex64>,
{
    let w0 = control_variance(psi(0.0)?)?;
    let i = integrate_lewis_vec(
        1,
        |u, out| {
            let q = u * u + 0.25;
            out[0] = (psi(u)?.exp() - (-0.5 * q * w0).exp()).re / q;
            Ok(())
        },
        spec,
    )?;
    invert_atm(bs_price(0.0, w0) - FRAC_1_PI * i[0])
}

fn prefactor(tau: f64, sigma2tau: f64) -> f64 {
    (sigma2tau / 8.0).exp() * (2.0 / PI).sqrt() / tau.sqrt()
}

pub fn skew_from_cf<F>(mut psi: F, tau: f64, sigma2tau: f64, spec: &QuadratureSpec) -> Result<f64>
where
    F: FnMut(f64) -> Result<Complex64>,
{
    check_tau(tau)?;
    let i = integrate_lewis_vec(
        1,
        |u, out| {
            out[0] = u * psi(u)?.exp().im / (u * u + 0.25);
            Ok(())
        },
        spec,
    )?;
    Ok(-prefactor(tau, sigma2tau) * i[0])
}

pub fn beta_from_cf<F, G>(
    mut psi: F,
    mut dxi_psi: G,
    rho: f64,
    tau: f64,
    sigma2tau: f64,
    spec: &QuadratureSpec,
) -> Result<f64>
where
    F: FnMut(f64) -> Result<Complex64>,
    G: FnMut(f64) -> Result<Complex64>,
{
    check_tau(tau)?;
    if rho == 0.0 {
        return Ok(0.0);
    }
    let i = integrate_lewis_vec(
        1,
        |u, out| {
            out[0] = (dxi_psi(u)? * psi(u)?.exp()).re / (u * u + 0.25);
            Ok(())
        },
        spec,
    )?;
    Ok(-rho * prefactor(tau, sigma2tau) * i[0])
}

/// SSR point from `u -> (psi(u - i/2), D^xi psi(u - i/2))`.
///
/// Sigma, skew and beta share one set of quadrature nodes, so each node costs a single
/// evaluation of the callable. The SSR is the ratio of the two integrals and beta is
/// recovered as `ssr * skew`.
pub fn ssr_general<F>(mut cf: F, rho: f64, tau: f64, spec: &QuadratureSpec) -> Result<SsrPoint>
where
    F: FnMut(f64) -> Result<(Complex64, Complex64)>,
{
    check_tau(tau)?;
    let w0 = control_variance(cf(0.0)?.0)?;
    let i = integrate_lewis_vec(
        3,
        |u, out| {
            let q = u * u + 0.25;
            let (psi, dxi) = cf(u)?;
            let phi = psi.exp();
            out[0] = (phi - (-0.5 * q * w0).exp()).re / q;
            out[1] = u * phi.im / q;
            out[2] = (dxi * phi).re / q;
            Ok(())
        },
        spec,
    )?;
    if !(i[1].abs() >= DEGENERATE_SKEW) {
        return Err(Error::DegenerateSkew(i[1]));
    }
    let total_var = invert_atm(bs_price(0.0, w0) - FRAC_1_PI * i[0])?;
    let ssr = rho * i[2] / i[1];
    let skew = -prefactor(tau, total_var) * i[1];
    Ok(SsrPoint { tau, skew, beta: ssr * skew, ssr, sigma_atm: (total_var / tau).sqrt(), total_var })
}

/// SSR of an AFV model on the default Riccati grid ending at `tau`.
pub fn ssr_afv(
    params: &ModelParams,
    kernel: &Kernel,
    curve: &ForwardVarianceCurve,
    tau: f64,
    spec: &QuadratureSpec,
) -> Result<SsrPoint> {
    check_tau(tau)?;
    let engine = AfvCharFn::for_maturity(params.rho, kernel, curve, tau)?;
    ssr_afv_with(&engine, params.rho, tau, spec)
}

/// SSR from a prepared AFV engine; `tau` must be one of its grid nodes.
pub fn ssr_afv_with(engine: &AfvCharFn, rho: f64, tau: f64, spec: &QuadratureSpec) -> Result<SsrPoint> {
    let n = engine.node(tau)?;
    ssr_general(
        |u| {
            let sol = engine.solve(Complex64::new(u, -0.5))?;
            Ok(engine.at_node(&sol, n))
        },
        rho,
        tau,
        spec,
    )
}

pub fn ssr_afv_term_structure(
    params: &ModelParams,
    kernel: &Kernel,
    curve: &ForwardVarianceCurve,
    taus: &[f64],
    spec: &QuadratureSpec,
    label: &str,
) -> Result<TermStructure> {
    let points = taus.iter().map(|&t| ssr_afv(params, kernel, curve, t, spec)).collect::<Result<Vec<_>>>()?;
    TermStructure::new(label, *params, curve.clone(), points)
}

/// Classical Heston SSR from the closed-form `C` and `D`.
pub fn ssr_heston(params: &ModelParams, tau: f64, spec: &QuadratureSpec) -> Result<SsrPoint> {
    if params.alpha != 1.0 {
        return Err(Error::Unsupported(format!("classical Heston needs alpha = 1, got {}", params.alpha)));
    }
    ssr_general(
        |u| {
            let cd = heston_cd(params, tau, Complex64::new(u, -0.5))?;
            Ok((cd.psi(params.v0, params.vbar), params.nu * cd.d))
        },
        params.rho,
        tau,
        spec,
    )
}

pub fn ssr_heston_term_structure(params: &ModelParams, taus: &[f64], spec: &QuadratureSpec, label: &str) -> Result<TermStructure> {
    let points = taus.iter().map(|&t| ssr_heston(params, t, spec)).collect::<Result<Vec<_>>>()?;
    let curve = ForwardVarianceCurve::exponential_decay(params.v0, params.vbar, params.lambda)?;
    TermStructure::new(label, *params, curve, points)
}

/// `int_0^tau xi(s) K1(tau - s) ds`.
fn curve_against_cumulative(kernel: &Kernel, tau: f64, e: &dyn Fn(f64) -> Result<f64>) -> Result<f64> {
    // K1(tau - s) has an algebraic cusp at s = tau; geometric breakpoints resolve it.
    let mut bps: Vec<f64> = (1..30).map(|j| tau * (1.0 - 0.5f64.powi(j))).collect();
    bps.insert(0, 0.0);
    bps.push(tau);
    let err = std::cell::Cell::new(None);
    let v = integrate_finite(
        |s| {
            let r = e(s).and_then(|x| Ok(x * kernel.cumulative(tau - s)?));
            r.unwrap_or_else(|er| {
                err.set(Some(er));
                f64::NAN
            })
        },
        &bps,
        0.0,
        1e-13,
    )?;
    match err.take() {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// Leading-order SSR `M K1(tau) / int_0^tau xi(s) K1(tau - s) ds` with `M = int_0^tau xi`.
///
/// For a flat curve the level cancels and this reduces to `tau K1 / K2`.
pub fn ssr_leading_order(kernel: &Kernel, curve: &ForwardVarianceCurve, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    if curve.flat_level().is_some() {
        return Ok(tau * kernel.cumulative(tau)? / kernel.double_cumulative(tau)?);
    }
    let m = curve.integral(tau)?;
    let den = curve_against_cumulative(kernel, tau, &|s| curve.eval(s))?;
    Ok(m * kernel.cumulative(tau)? / den)
}

/// Leading-order SSR for a model with vol-of-vol function `f`:
/// `M sqrt(V) f_0 K1(tau) / (V int_0^tau e(s) K1(tau - s) ds)` with `e(s) = E[sqrt(V_s) f_s]`.
///
/// The AFV case is `f_0 = sqrt(V)` and `e = xi`.
pub fn ssr_leading_order_general(
    kernel: &Kernel,
    curve: &ForwardVarianceCurve,
    v0: f64,
    f0: f64,
    e: impl Fn(f64) -> Result<f64>,
    tau: f64,
) -> Result<f64> {
    check_tau(tau)?;
    if !(v0 > 0.0) {
        return domain(format!("spot variance must be positive, got {v0}"));
    }
    let m = curve.integral(tau)?;
    let den = curve_against_cumulative(kernel, tau, &e)?;
    Ok(m * v0.sqrt() * f0 * kernel.cumulative(tau)? / (v0 * den))
}

/// Short-time limit `tau d/dtau log K2(tau)` by a centered difference in `log tau`.
pub fn ssr_short_time_limit(kernel: &Kernel, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    let h = 1e-4f64;
    let up = kernel.double_cumulative(tau * h.exp())?.ln();
    let down = kernel.double_cumulative(tau * (-h).exp())?.ln();
    Ok((up - down) / (2.0 * h))
}
