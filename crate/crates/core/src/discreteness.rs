//! Bias of the spot-vol regression coefficient estimated over a finite window `delta`.
//!
//! With a constant physical variance forecast,
//!
//! ```text
//! beta^delta / beta = [int_0^delta K1(tau - s) ds / int_0^delta (tau - s) ds] * tau / K1(tau)
//! ```
//!
//! where `K1` is the cumulative kernel. This is bounded by `1 / (1 - eps / 2)` with `eps = delta / tau`.

use crate::error::{domain, Result};
use crate::model::Kernel;
use crate::numerics::integrate_finite;

/// Kernel whose cumulative enters the ratio; `PowerLaw` is `u^{-gamma}` up to a constant.
#[derive(Debug, Clone, Copy)]
pub enum DiscretenessKernel<'a> {
    Model(&'a Kernel),
    PowerLaw { gamma: f64 },
}

impl DiscretenessKernel<'_> {
    fn cumulative(&self, u: f64) -> Result<f64> {
        match self {
            DiscretenessKernel::Model(k) => k.cumulative(u),
            DiscretenessKernel::PowerLaw { gamma } => Ok(u.powf(1.0 - gamma) / (1.0 - gamma)),
        }
    }

    fn validate(&self) -> Result<()> {
        if let DiscretenessKernel::PowerLaw { gamma } = self {
            check_gamma(*gamma)?;
        }
        Ok(())
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.0..1.0).contains(&gamma) {
        return domain(format!("gamma must lie in [0, 1), got {gamma}"));
    }
    Ok(())
}

fn check_epsilon(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return domain(format!("epsilon = delta / tau must lie in (0, 1), got {eps}"));
    }
    Ok(())
}

/// `beta^delta / beta` by quadrature over the window.
///
/// `forecast` is `s -> E^P[V_s]`; `None` means constant.
pub fn ratio_general(
    kernel: DiscretenessKernel<'_>,
    delta: f64,
    tau: f64,
    forecast: Option<&dyn Fn(f64) -> f64>,
) -> Result<f64> {
    kernel.validate()?;
    if !(delta > 0.0 && tau > delta && tau.is_finite()) {
        return domain(format!("need 0 < delta < tau, got delta = {delta}, tau = {tau}"));
    }
    let ev = |s: f64| forecast.map_or(1.0, |f| f(s));
    let mut err = None;
    let num = integrate_finite(
        |s| match kernel.cumulative(tau - s) {
            Ok(k) => ev(s) * k,
            Err(e) => {
                err = Some(e);
                f64::NAN
            }
        },
        &[0.0, delta],
        0.0,
        1e-14,
    )?;
    if let Some(e) = err {
        return Err(e);
    }
    let den = integrate_finite(|s| ev(s) * (tau - s), &[0.0, delta], 0.0, 1e-14)?;
    Ok(num / den * tau / kernel.cumulative(tau)?)
}

/// Closed form for `kappa(u) = A u^{-gamma}`.
pub fn ratio_power_law(gamma: f64, epsilon: f64) -> Result<f64> {
    check_gamma(gamma)?;
    check_epsilon(epsilon)?;
    let l = (-epsilon).ln_1p();
    let top = -((2.0 - gamma) * l).exp_m1();
    let bottom = epsilon * (2.0 - epsilon);
    Ok(top / bottom / (1.0 - 0.5 * gamma))
}

/// Upper bound `1 / (1 - eps / 2)` on the ratio.
pub fn max_relative_error(epsilon: f64) -> Result<f64> {
    if !(0.0..2.0).contains(&epsilon) {
        return domain(format!("epsilon must lie in [0, 2), got {epsilon}"));
    }
    Ok(1.0 / (1.0 - 0.5 * epsilon))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscretenessReport {
    pub gamma: f64,
    pub epsilon: f64,
    pub ratio: f64,
    pub bound: f64,
    /// `1 + gamma eps / 2`.
    pub first_order: f64,
}

pub fn power_law_report(gamma: f64, epsilon: f64) -> Result<DiscretenessReport> {
    Ok(DiscretenessReport {
        gamma,
        epsilon,
        ratio: ratio_power_law(gamma, epsilon)?,
        bound: max_relative_error(epsilon)?,
        first_order: 1.0 + 0.5 * gamma * epsilon,
    })
}

pub const REPORT_CSV_HEADER: &str = "gamma,epsilon,ratio,bound,first_order";

pub fn reports_to_csv(reports: &[DiscretenessReport]) -> String {
    let mut s = format!("{REPORT_CSV_HEADER}\n");
    for r in reports {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            crate::ssr::fmt17(r.gamma),
            crate::ssr::fmt17(r.epsilon),
            crate::ssr::fmt17(r.ratio),
            crate::ssr::fmt17(r.bound),
            crate::ssr::fmt17(r.first_order)
        ));
    }
    s
}
