//! Black–Scholes machinery, Lewis call pricing, the bump-and-reprice beta and smile calibration.
//!
//! Prices are normalized: spot and forward equal 1, `k = log(K / F)`, `w` is total variance.

use crate::charfn::{heston_cd, AfvCharFn};
use crate::error::{domain, Error, Result};
use crate::model::{ForwardVarianceCurve, Kernel, ModelParams};
use crate::numerics::{find_root_bracketed, integrate_lewis_vec, nelder_mead, NelderMeadOptions, QuadratureSpec};
use crate::riccati::RiccatiGrid;
use num_complex::Complex64;
use std::f64::consts::{FRAC_1_PI, PI, SQRT_2};

pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

pub fn bs_price(k: f64, w: f64) -> f64 {
    if w <= 0.0 {
        return (1.0 - k.exp()).max(0.0);
    }
    let s = w.sqrt();
    let d1 = -k / s + 0.5 * s;
    norm_cdf(d1) - k.exp() * norm_cdf(d1 - s)
}

/// `dBS/dsigma` at `k = 0`: `e^{-w/8} sqrt(tau / 2 pi)`.
pub fn atm_vega(sigma2tau: f64, tau: f64) -> f64 {
    (-sigma2tau / 8.0).exp() * (tau / (2.0 * PI)).sqrt()
}

/// Total implied variance `w` with `bs_price(k, w) = price`.
pub fn implied_total_variance(price: f64, k: f64) -> Result<f64> {
    let intrinsic = (1.0 - k.exp()).max(0.0);
    if !(price > intrinsic && price < 1.0) {
        return domain(format!("price {price} outside the no-arbitrage band ({intrinsic}, 1) at k = {k}"));
    }
    let mut hi = 1.0;
    while bs_price(k, hi) <= price {
        hi *= 4.0;
        if hi > 1e6 {
            return domain(format!("price {price} too close to 1 to invert at k = {k}"));
        }
    }
    find_root_bracketed(|w| bs_price(k, w) - price, 0.0, hi, 0.0)
}

pub fn implied_vol(price: f64, k: f64, tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return domain(format!("maturity must be positive, got {tau}"));
    }
    Ok((implied_total_variance(price, k)? / tau).sqrt())
}

/// Lewis prices for several log-strikes from one characteristic exponent `u -> psi(u - i/2)`.
///
/// The Black–Scholes exponent with the same `psi(-i/2)` is subtracted as a control variate.
pub fn lewis_calls<F>(mut psi: F, ks: &[f64], spec: &QuadratureSpec) -> Result<Vec<f64>>
where
    F: FnMut(f64) -> Result<Complex64>,
{
    let w0 = -8.0 * psi(0.0)?.re;
    if w0 == 0.0 {
        return Ok(ks.iter().map(|&k| bs_price(k, 0.0)).collect());
    }
    if !(w0 > 0.0 && w0.is_finite()) {
        return domain(format!("characteristic exponent gives total variance {w0}"));
    }
    let ints = integrate_lewis_vec(
        ks.len(),
        |u, out| {
            let q = u * u + 0.25;
            let diff = psi(u)?.exp() - (-0.5 * q * w0).exp();
            for (o, &k) in out.iter_mut().zip(ks) {
                *o = (Complex64::from_polar(1.0, -u * k) * diff).re / q;
            }
            Ok(())
        },
        spec,
    )?;
    Ok(ks
        .iter()
        .zip(&ints)
        .map(|(&k, i)| bs_price(k, w0) - (0.5 * k).exp() * FRAC_1_PI * i)
        .collect())
}

pub fn lewis_call<F>(psi: F, k: f64, spec: &QuadratureSpec) -> Result<f64>
where
    F: FnMut(f64) -> Result<Complex64>,
{
    Ok(lewis_calls(psi, &[k], spec)?[0])
}

/// `u -> psi(u - i/2)` for classical Heston.
pub fn heston_exponent(params: &ModelParams, tau: f64) -> impl Fn(f64) -> Result<Complex64> + '_ {
    move |u| Ok(heston_cd(params, tau, Complex64::new(u, -0.5))?.psi(params.v0, params.vbar))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmilePoint {
    pub k: f64,
    pub iv: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmileSlice {
    pub tau: f64,
    pub points: Vec<SmilePoint>,
}

impl SmileSlice {
    pub fn strikes(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.k).collect()
    }
}

fn to_slice(tau: f64, ks: &[f64], prices: &[f64]) -> Result<SmileSlice> {
    let points = ks
        .iter()
        .zip(prices)
        .map(|(&k, &c)| Ok(SmilePoint { k, iv: implied_vol(c, k, tau)?, tau }))
        .collect::<Result<Vec<_>>>()?;
    Ok(SmileSlice { tau, points })
}

/// Implied-vol smiles of an AFV model at several maturities, all grid nodes of `grid`.
///
/// One Riccati solve per quadrature node serves every maturity and strike.
pub fn afv_smiles(
    rho: f64,
    kernel: &Kernel,
    curve: &ForwardVarianceCurve,
    grid: RiccatiGrid,
    slices: &[(f64, Vec<f64>)],
    spec: &QuadratureSpec,
) -> Result<Vec<SmileSlice>> {
    let engine = AfvCharFn::new(rho, kernel, curve, grid)?;
    let nodes = slices.iter().map(|(tau, _)| engine.node(*tau)).collect::<Result<Vec<_>>>()?;
    let psis_at = |u: f64| -> Result<Vec<Complex64>> {
        let sol = engine.solve(Complex64::new(u, -0.5))?;
        Ok(nodes.iter().map(|&n| engine.at_node(&sol, n).0).collect())
    };
    let w0: Vec<f64> = psis_at(0.0)?.iter().map(|p| -8.0 * p.re).collect();
    if let Some(w) = w0.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
        return domain(format!("characteristic exponent gives total variance {w}"));
    }
    let dim: usize = slices.iter().map(|(_, ks)| ks.len()).sum();
    let ints = integrate_lewis_vec(
        dim,
        |u, out| {
            let q = u * u + 0.25;
            let psis = psis_at(u)?;
            let mut c = 0;
            for (j, (_, ks)) in slices.iter().enumerate() {
                let diff = psis[j].exp() - (-0.5 * q * w0[j]).exp();
                for &k in ks {
                    out[c] = (Complex64::from_polar(1.0, -u * k) * diff).re / q;
                    c += 1;
                }
            }
            Ok(())
        },
        spec,
    )?;
    let mut c = 0;
    let mut out = Vec::with_capacity(slices.len());
    for (j, (tau, ks)) in slices.iter().enumerate() {
        let prices: Vec<f64> = ks
            .iter()
            .map(|&k| {
                let p = bs_price(k, w0[j]) - (0.5 * k).exp() * FRAC_1_PI * ints[c];
                c += 1;
                p
            })
            .collect();
        out.push(to_slice(*tau, ks, &prices)?);
    }
    Ok(out)
}

pub fn heston_smile(params: &ModelParams, tau: f64, ks: &[f64], spec: &QuadratureSpec) -> Result<SmileSlice> {
    let prices = lewis_calls(heston_exponent(params, tau), ks, spec)?;
    to_slice(tau, ks, &prices)
}

/// Beta from Bergomi's bump recipe `rho nu (dC/dV) / vega`, with a half-bump consistency check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaBump {
    pub beta: f64,
    pub beta_half_bump: f64,
    pub relative_change: f64,
    /// Set when halving the bump moves beta by more than `1e-6` relative.
    pub nonlinear: bool,
}

pub const DEFAULT_BUMP: f64 = 1e-5;

fn bump_spec() -> QuadratureSpec {
    QuadratureSpec { abs_tol: 1e-14, rel_tol: 1e-13, truncation_threshold: 1e-17, ..QuadratureSpec::default() }
}

pub fn beta_bump_oracle(params: &ModelParams, tau: f64, bump: f64) -> Result<BetaBump> {
    if params.alpha != 1.0 {
        return Err(Error::Unsupported("the bump recipe needs classical Heston (alpha = 1)".into()));
    }
    if !(bump > 0.0 && bump < params.v0) {
        return domain(format!("bump must lie in (0, v0), got {bump}"));
    }
    let spec = bump_spec();
    let price = |v0: f64| {
        let p = ModelParams { v0, ..*params };
        lewis_call(heston_exponent(&p, tau), 0.0, &spec)
    };
    let sigma2tau = implied_total_variance(price(params.v0)?, 0.0)?;
    let scale = params.rho * params.nu / atm_vega(sigma2tau, tau);
    let beta_at = |h: f64| -> Result<f64> { Ok(scale * (price(params.v0 + h)? - price(params.v0 - h)?) / (2.0 * h)) };
    let beta = beta_at(bump)?;
    let beta_half_bump = beta_at(0.5 * bump)?;
    let relative_change = if beta == 0.0 { 0.0 } else { ((beta_half_bump - beta) / beta).abs() };
    Ok(BetaBump { beta, beta_half_bump, relative_change, nonlinear: relative_change > 1e-6 })
}

/// Settings shared by target generation and calibration.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSetup {
    pub rho: f64,
    pub xi: f64,
    pub maturities: Vec<f64>,
    pub grid_steps: usize,
    pub strikes_per_slice: usize,
    /// Strikes span `+- width * sigma_atm * sqrt(tau)`.
    pub width: f64,
    pub spec: QuadratureSpec,
    pub optimizer: NelderMeadOptions,
}

impl Default for CalibrationSetup {
    fn default() -> Self {
        CalibrationSetup {
            rho: -0.65,
            xi: 0.025,
            maturities: vec![1.0 / 12.0, 0.25, 0.5, 1.0],
            grid_steps: 576,
            strikes_per_slice: 11,
            width: 2.0,
            spec: QuadratureSpec::default(),
            // f_tol is in vol units: 1e-8 is a millionth of a basis point.
            optimizer: NelderMeadOptions { max_evals: 250, x_tol: 1e-6, f_tol: 1e-8, restarts: 2 },
        }
    }
}

impl CalibrationSetup {
    fn grid(&self) -> Result<RiccatiGrid> {
        let tau_max = self.maturities.iter().cloned().fold(0.0, f64::max);
        RiccatiGrid::new(self.grid_steps, tau_max)
    }

    /// Smiles of the rough Heston model `(h, nu, lambda)` on a flat curve at the given strikes.
    pub fn model_smiles(&self, h: f64, nu: f64, lambda: f64, strikes: &[Vec<f64>]) -> Result<Vec<SmileSlice>> {
        let kernel = Kernel::mittag_leffler(h + 0.5, nu, lambda)?;
        let curve = ForwardVarianceCurve::flat(self.xi)?;
        let slices: Vec<(f64, Vec<f64>)> =
            self.maturities.iter().cloned().zip(strikes.iter().cloned()).collect();
        afv_smiles(self.rho, &kernel, &curve, self.grid()?, &slices, &self.spec)
    }

    /// Reference smiles on strikes `+- width * sigma_atm * sqrt(tau)` of the reference model itself.
    pub fn targets(&self, h: f64, nu: f64, lambda: f64) -> Result<Vec<SmileSlice>> {
        let atm = self.model_smiles(h, nu, lambda, &vec![vec![0.0]; self.maturities.len()])?;
        let m = self.strikes_per_slice;
        let strikes: Vec<Vec<f64>> = atm
            .iter()
            .map(|s| {
                let half = self.width * s.points[0].iv * s.tau.sqrt();
                (0..m).map(|i| -half + 2.0 * half * i as f64 / (m - 1) as f64).collect()
            })
            .collect();
        self.model_smiles(h, nu, lambda, &strikes)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationResult {
    pub lambda_fixed: f64,
    pub h_fit: f64,
    pub nu_fit: f64,
    /// RMS implied-vol error.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub const H_BOUNDS: (f64, f64) = (0.01, 0.5);

/// `(lambda, H, nu)` sets quoted as giving nearly identical smiles at `rho = -0.65`.
pub const REFERENCE_SETS: [(f64, f64, f64); 3] = [(0.0, 0.10, 0.40), (1.0, 0.223, 0.481), (2.0, 0.302, 0.647)];
pub const NU_BOUNDS: (f64, f64) = (0.05, 2.0);

/// RMS implied-vol distance between the model `(h, nu, lambda)` and the targets.
pub fn smile_rms(setup: &CalibrationSetup, h: f64, nu: f64, lambda: f64, targets: &[SmileSlice]) -> Result<f64> {
    let strikes: Vec<Vec<f64>> = targets.iter().map(SmileSlice::strikes).collect();
    let model = setup.model_smiles(h, nu, lambda, &strikes)?;
    let (mut sum, mut count) = (0.0, 0usize);
    for (m, t) in model.iter().zip(targets) {
        for (pm, pt) in m.points.iter().zip(&t.points) {
            sum += (pm.iv - pt.iv).powi(2);
            count += 1;
        }
    }
    Ok((sum / count as f64).sqrt())
}

/// Fits `(H, nu)` at fixed `lambda` and `rho` to target smiles by bounded simplex descent.
pub fn calibrate_smile(
    lambda_fixed: f64,
    targets: &[SmileSlice],
    init: (f64, f64),
    setup: &CalibrationSetup,
) -> Result<CalibrationResult> {
    if targets.len() != setup.maturities.len()
        || targets.iter().zip(&setup.maturities).any(|(t, m)| (t.tau - m).abs() > 1e-12)
    {
        return domain("targets must match the setup maturities".to_string());
    }
    let objective = |x: &[f64]| match smile_rms(setup, x[0], x[1], lambda_fixed, targets) {
        // Parameters whose smiles cannot be inverted are simply poor fits.
        Err(Error::Domain(_)) | Err(Error::NotBracketed { .. }) => Ok(f64::INFINITY),
        other => other,
    };
    let m = nelder_mead(
        objective,
        &[init.0, init.1],
        &[0.05, 0.1],
        &[H_BOUNDS.0, NU_BOUNDS.0],
        &[H_BOUNDS.1, NU_BOUNDS.1],
        &setup.optimizer,
    )?;
    Ok(CalibrationResult {
        lambda_fixed,
        h_fit: m.x[0],
        nu_fit: m.x[1],
        objective: m.f,
        iterations: m.evals,
        converged: m.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn black_scholes_values() {
        assert_eq!(bs_price(0.3, 0.0), 0.0);
        assert!((bs_price(-0.3, 0.0) - (1.0 - (-0.3f64).exp())).abs() < 1e-16);
        let w: f64 = 0.04;
        assert!((bs_price(0.0, w) - (2.0 * norm_cdf(0.5 * w.sqrt()) - 1.0)).abs() < 1e-16);
        // 50-digit evaluations of the normal-CDF expression.
        assert!((bs_price(0.1, 0.04) - 0.041481688460718323007).abs() < 1e-15);
        assert!((bs_price(0.0, 0.04) - 0.079655674554057962931).abs() < 1e-15);
    }

    #[test]
    fn implied_vol_round_trips() {
        assert!((implied_vol(bs_price(0.0, 0.04), 0.0, 1.0).unwrap() - 0.2).abs() < 1e-12);
        assert!((implied_vol(bs_price(0.1, 0.09), 0.1, 0.25).unwrap() - 0.6).abs() < 1e-12);
        assert!(implied_vol(1.0, 0.0, 1.0).is_err());
        assert!(implied_vol(0.0, 0.0, 1.0).is_err());
        assert!(implied_vol(0.01, -0.5, 1.0).is_err());
    }

    #[test]
    fn vega_matches_finite_difference() {
        let (tau, s) = (0.7, 0.3);
        let h = 1e-6;
        let fd = (bs_price(0.0, (s + h) * (s + h) * tau) - bs_price(0.0, (s - h) * (s - h) * tau)) / (2.0 * h);
        assert!((fd - atm_vega(s * s * tau, tau)).abs() < 1e-8);
    }

    #[test]
    fn lewis_reproduces_black_scholes() {
        let w = 0.04;
        let spec = QuadratureSpec::default();
        for k in [-0.3, 0.0, 0.1, 0.4] {
            let c = lewis_call(|u| Ok(Complex64::new(-0.5 * (u * u + 0.25) * w, 0.0)), k, &spec).unwrap();
            assert!((c - bs_price(k, w)).abs() < 1e-10);
        }
        let zero = |_: f64| Ok(Complex64::new(0.0, 0.0));
        assert_eq!(lewis_call(zero, 0.2, &spec).unwrap(), 0.0);
        assert!((lewis_call(zero, -0.2, &spec).unwrap() - (1.0 - (-0.2f64).exp())).abs() < 1e-16);
    }

    #[test]
    fn lewis_heston_matches_plain_trapezoid() {
        let p = ModelParams::new(1.0, 0.4, 1.0, -0.65, 0.04, 0.04).unwrap();
        let (tau, k) = (0.25, 0.1);
        let c = lewis_call(heston_exponent(&p, tau), k, &QuadratureSpec::default()).unwrap();
        // Plain trapezoid on the uncontrolled Lewis integrand.
        let psi = heston_exponent(&p, tau);
        let (h, n) = (0.005, 200_000);
        let mut s = 0.0;
        for j in 0..=n {
            let u = j as f64 * h;
            let f = (Complex64::from_polar(1.0, -u * k) * psi(u).unwrap().exp()).re / (u * u + 0.25);
            s += if j == 0 || j == n { 0.5 * f } else { f };
        }
        let trap = 1.0 - (0.5 * k).exp() * FRAC_1_PI * s * h;
        assert!((c - trap).abs() < 1e-9, "{c} vs {trap}");
    }

    #[test]
    fn bump_oracle_vanishes_without_correlation() {
        let p = ModelParams::new(1.0, 0.4, 1.0, 0.0, 0.04, 0.04).unwrap();
        let b = beta_bump_oracle(&p, 0.5, DEFAULT_BUMP).unwrap();
        assert_eq!(b.beta, 0.0);
        let rough = ModelParams::new(0.6, 0.4, 1.0, 0.0, 0.04, 0.04).unwrap();
        assert!(matches!(beta_bump_oracle(&rough, 0.5, DEFAULT_BUMP), Err(Error::Unsupported(_))));
    }

    #[test]
    fn afv_smile_agrees_with_heston_prices() {
        let p = ModelParams::new(1.0, 0.4, 1.0, -0.65, 0.04, 0.04).unwrap();
        let kernel = Kernel::exponential(p.nu, p.lambda).unwrap();
        let curve = ForwardVarianceCurve::flat(0.04).unwrap();
        let ks = vec![-0.1, 0.0, 0.1];
        let spec = QuadratureSpec::default();
        let afv = afv_smiles(p.rho, &kernel, &curve, RiccatiGrid::new(2048, 0.5).unwrap(), &[(0.5, ks.clone())], &spec)
            .unwrap();
        let hes = heston_smile(&p, 0.5, &ks, &spec).unwrap();
        for (a, b) in afv[0].points.iter().zip(&hes.points) {
            assert!((a.iv - b.iv).abs() < 1e-6, "{a:?} vs {b:?}");
        }
    }
}
