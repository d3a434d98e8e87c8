use super::params::ModelParams;
use crate::error::{domain, Error, Result};
use crate::numerics::gauss::gl16;
use crate::numerics::special::{decay_phi1, decay_phi2, decay_phi3, rgamma};
use crate::numerics::MittagLeffler;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelKind {
    PowerLaw,
    MittagLeffler,
    Exponential,
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "power_law" => Ok(KernelKind::PowerLaw),
            "mittag_leffler" => Ok(KernelKind::MittagLeffler),
            "exponential" => Ok(KernelKind::Exponential),
            other => Err(Error::Config {
                key: "kernel".into(),
                message: format!(
                    "unknown kernel `{other}` (expected power_law, mittag_leffler or exponential)"
                ),
            }),
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelKind::PowerLaw => "power_law",
            KernelKind::MittagLeffler => "mittag_leffler",
            KernelKind::Exponential => "exponential",
        })
    }
}

/// Volatility kernel `kappa` driving `d xi_t(u) = kappa(u - t) sqrt(V_t) dW_t`.
///
/// * power law: `nu tau^(alpha-1) / Gamma(alpha)`
/// * Mittag-Leffler: `nu tau^(alpha-1) E_{alpha,alpha}(-lambda tau^alpha)`
/// * exponential: `nu exp(-lambda tau)` (classical Heston)
#[derive(Debug, Clone)]
pub struct Kernel {
    kind: KernelKind,
    alpha: f64,
    nu: f64,
    lambda: f64,
    // E_{alpha,alpha}, E_{alpha,alpha+1}, E_{alpha,alpha+2}
    ml: Option<Box<[MittagLeffler; 3]>>,
}

impl Kernel {
    pub fn new(kind: KernelKind, params: &ModelParams) -> Result<Self> {
        match kind {
            KernelKind::PowerLaw => Self::power_law(params.alpha, params.nu),
            KernelKind::MittagLeffler => Self::mittag_leffler(params.alpha, params.nu, params.lambda),
            KernelKind::Exponential => Self::exponential(params.nu, params.lambda),
        }
    }

    pub fn power_law(alpha: f64, nu: f64) -> Result<Self> {
        check_alpha_nu(alpha, nu)?;
        Ok(Kernel { kind: KernelKind::PowerLaw, alpha, nu, lambda: 0.0, ml: None })
    }

    pub fn mittag_leffler(alpha: f64, nu: f64, lambda: f64) -> Result<Self> {
        check_alpha_nu(alpha, nu)?;
        check_lambda(lambda)?;
        let ml = Box::new([
            MittagLeffler::new(alpha, alpha)?,
            MittagLeffler::new(alpha, alpha + 1.0)?,
            MittagLeffler::new(alpha, alpha + 2.0)?,
        ]);
        Ok(Kernel { kind: KernelKind::MittagLeffler, alpha, nu, lambda, ml: Some(ml) })
    }

    pub fn exponential(nu: f64, lambda: f64) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return domain(format!("kernel nu must be positive, got {nu}"));
        }
        check_lambda(lambda)?;
        Ok(Kernel { kind: KernelKind::Exponential, alpha: 1.0, nu, lambda, ml: None })
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    fn ml(&self, i: usize) -> &MittagLeffler {
        &self.ml.as_ref().expect("Mittag-Leffler kernel carries its functions")[i]
    }

    /// `kappa(tau)` for `tau > 0`.
    pub fn eval(&self, tau: f64) -> Result<f64> {
        if !(tau > 0.0 && tau.is_finite()) {
            return domain(format!("kernel argument must be positive, got {tau}"));
        }
        Ok(match self.kind {
            KernelKind::PowerLaw => self.nu * tau.powf(self.alpha - 1.0) * rgamma(self.alpha),
            KernelKind::Exponential => self.nu * (-self.lambda * tau).exp(),
            KernelKind::MittagLeffler => {
                let x = -self.lambda * tau.powf(self.alpha);
                self.nu * tau.powf(self.alpha - 1.0) * self.ml(0).eval(x)?
            }
        })
    }

    /// `int_0^tau kappa(s) ds`.
    pub fn cumulative(&self, tau: f64) -> Result<f64> {
        check_tau(tau)?;
        if tau == 0.0 {
            return Ok(0.0);
        }
        Ok(match self.kind {
            KernelKind::PowerLaw => self.nu * tau.powf(self.alpha) * rgamma(self.alpha + 1.0),
            KernelKind::Exponential => self.nu * tau * decay_phi1(self.lambda * tau),
            KernelKind::MittagLeffler => {
                let x = -self.lambda * tau.powf(self.alpha);
                self.nu * tau.powf(self.alpha) * self.ml(1).eval(x)?
            }
        })
    }

    /// `int_0^tau ds int_0^s kappa(u) du`.
    pub fn double_cumulative(&self, tau: f64) -> Result<f64> {
        check_tau(tau)?;
        if tau == 0.0 {
            return Ok(0.0);
        }
        Ok(match self.kind {
            KernelKind::PowerLaw => tau * self.cumulative(tau)? / (self.alpha + 1.0),
            KernelKind::Exponential => self.nu * tau * tau * decay_phi3(self.lambda * tau),
            KernelKind::MittagLeffler => {
                let x = -self.lambda * tau.powf(self.alpha);
                self.nu * tau.powf(self.alpha + 1.0) * self.ml(2).eval(x)?
            }
        })
    }

    /// Cell moments `(int kappa, int kappa(u) (u - u0) / w)` over `[u0, u0 + w]`.
    ///
    /// These are the product-integration weights for piecewise-linear integrands.
    pub fn cell_moments(&self, u0: f64, w: f64) -> Result<(f64, f64)> {
        if !(u0 >= 0.0 && w > 0.0 && u0.is_finite() && w.is_finite()) {
            return domain(format!("invalid kernel cell [{u0}, {u0} + {w}]"));
        }
        match self.kind {
            KernelKind::PowerLaw => Ok(self.power_law_moments(u0, w)),
            KernelKind::Exponential => {
                let scale = self.nu * (-self.lambda * u0).exp() * w;
                let x = self.lambda * w;
                Ok((scale * decay_phi1(x), scale * decay_phi2(x)))
            }
            KernelKind::MittagLeffler => {
                if u0 == 0.0 {
                    let k1 = self.cumulative(w)?;
                    let k2 = self.double_cumulative(w)?;
                    return Ok((k1, k1 - k2 / w));
                }
                let mut i0 = 0.0;
                let mut i1 = 0.0;
                for (u, wt) in gl16().mapped(u0, u0 + w) {
                    let k = self.eval(u)?;
                    i0 += wt * k;
                    i1 += wt * k * (u - u0) / w;
                }
                Ok((i0, i1))
            }
        }
    }

    fn power_law_moments(&self, u0: f64, w: f64) -> (f64, f64) {
        let a = self.alpha;
        let c = self.nu * rgamma(a);
        if u0 == 0.0 {
            let wa = w.powf(a);
            return (c * wa / a, c * wa / (a + 1.0));
        }
        let r = w / u0;
        let base = c * u0.powf(a);
        let i0 = base * (a * r.ln_1p()).exp_m1() / a;
        // ((1+r)^(a+1) - 1)/(a+1) - ((1+r)^a - 1)/a, which cancels to O(r^2) for small r.
        let d = if r <= 0.25 {
            let mut cp = 1.0;
            let mut cq = 1.0;
            let mut sum = 0.0;
            let mut rj = r;
            for j in 1..80 {
                let jf = j as f64;
                cp *= (a + 1.0 - jf) / (jf + 1.0);
                cq *= (a - jf) / (jf + 1.0);
                rj *= r;
                let term = (cp - cq) * rj;
                sum += term;
                if term.abs() < 1e-18 * sum.abs() {
                    break;
                }
            }
            sum
        } else {
            let lr = r.ln_1p();
            ((a + 1.0) * lr).exp_m1() / (a + 1.0) - (a * lr).exp_m1() / a
        };
        (i0, base * d / r)
    }
}

fn check_alpha_nu(alpha: f64, nu: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return domain(format!("kernel alpha must lie in (0, 1], got {alpha}"));
    }
    if !(nu > 0.0 && nu.is_finite()) {
        return domain(format!("kernel nu must be positive, got {nu}"));
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return domain(format!("kernel lambda must be non-negative, got {lambda}"));
    }
    Ok(())
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return domain(format!("maturity must be non-negative, got {tau}"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::integrate_finite;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn power_law_alpha_one_is_constant() {
        let k = Kernel::power_law(1.0, 0.4).unwrap();
        assert!((k.eval(2.0).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn mittag_leffler_example() {
        // nu tau^(alpha-1) E_{0.6,0.6}(-0.5^0.6) with the E value from a 30-digit series.
        let k = Kernel::mittag_leffler(0.6, 0.481, 1.0).unwrap();
        let want = 0.481 * 0.5f64.powf(-0.4) * 0.25843518635140868605;
        assert!(rel(k.eval(0.5).unwrap(), want) < 1e-12);
    }

    #[test]
    fn lambda_zero_mittag_leffler_is_power_law() {
        let ml = Kernel::mittag_leffler(0.7, 0.3, 0.0).unwrap();
        let pl = Kernel::power_law(0.7, 0.3).unwrap();
        for tau in [1e-6, 1e-3, 0.1, 1.0, 10.0] {
            assert!(rel(ml.eval(tau).unwrap(), pl.eval(tau).unwrap()) < 1e-12);
            assert!(rel(ml.cumulative(tau).unwrap(), pl.cumulative(tau).unwrap()) < 1e-12);
            assert!(rel(ml.double_cumulative(tau).unwrap(), pl.double_cumulative(tau).unwrap()) < 1e-12);
        }
    }

    #[test]
    fn cumulative_examples() {
        let k = Kernel::power_law(0.6, 1.0).unwrap();
        // nu tau^alpha / Gamma(alpha + 1) = 1 / Gamma(1.6)
        assert!(rel(k.cumulative(1.0).unwrap(), 1.1191749540701222511) < 1e-14);
        assert_eq!(k.cumulative(0.0).unwrap(), 0.0);
        let e = Kernel::exponential(0.4, 0.0).unwrap();
        assert!((e.cumulative(2.0).unwrap() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn mittag_leffler_cumulative_matches_quadrature() {
        // Substituting s = t^(1/alpha) removes the endpoint singularity of kappa.
        let k = Kernel::mittag_leffler(0.6, 1.0, 2.0).unwrap();
        let a = 0.6;
        let q = integrate_finite(
            |t: f64| {
                if t <= 0.0 {
                    return 0.0;
                }
                let s = t.powf(1.0 / a);
                k.eval(s).unwrap() * s.powf(1.0 - a) / a
            },
            &[0.0, 0.25, 0.5, 1.0],
            1e-15,
            1e-13,
        )
        .unwrap();
        assert!(rel(k.cumulative(1.0).unwrap(), q) < 1e-11, "{} vs {q}", k.cumulative(1.0).unwrap());
    }

    #[test]
    fn cell_moments_sum_to_cumulative() {
        let kernels = [
            Kernel::power_law(0.6, 0.4).unwrap(),
            Kernel::mittag_leffler(0.6, 0.4, 1.5).unwrap(),
            Kernel::exponential(0.4, 2.0).unwrap(),
        ];
        for k in &kernels {
            let n = 200;
            let w = 1.5 / n as f64;
            let mut s0 = 0.0;
            let mut s1 = 0.0;
            for m in 0..n {
                let (i0, i1) = k.cell_moments(m as f64 * w, w).unwrap();
                s0 += i0;
                s1 += i0 * m as f64 * w + i1 * w;
            }
            // Second sum is int_0^T u kappa(u) du = T K1(T) - K2(T).
            let t = 1.5;
            let k1 = k.cumulative(t).unwrap();
            let k2 = k.double_cumulative(t).unwrap();
            assert!(rel(s0, k1) < 1e-12, "{:?}: {s0} vs {k1}", k.kind());
            assert!(rel(s1, t * k1 - k2) < 1e-11, "{:?}", k.kind());
        }
    }

    #[test]
    fn power_law_moments_small_and_large_ratio_agree() {
        let k = Kernel::power_law(0.55, 1.0).unwrap();
        let (a0, a1) = k.power_law_moments(1.0, 0.2499999);
        let (b0, b1) = k.power_law_moments(1.0, 0.2500001);
        assert!(rel(a0, b0) < 1e-6 && rel(a1, b1) < 1e-6);
        let q1 = gl16().integrate(1.0, 1.25, |u| k.eval(u).unwrap() * (u - 1.0) / 0.25);
        let (_, c1) = k.power_law_moments(1.0, 0.25);
        assert!(rel(c1, q1) < 1e-14);
    }

    #[test]
    fn cumulative_derivative_matches_kernel() {
        for k in [
            Kernel::power_law(0.6, 0.4).unwrap(),
            Kernel::mittag_leffler(0.6, 0.4, 1.0).unwrap(),
            Kernel::exponential(0.4, 1.0).unwrap(),
        ] {
            for tau in [0.05, 0.3, 1.0, 3.0] {
                let h = 1e-5 * tau;
                let d = (k.cumulative(tau + h).unwrap() - k.cumulative(tau - h).unwrap()) / (2.0 * h);
                assert!(rel(d, k.eval(tau).unwrap()) < 1e-6);
            }
        }
    }

    #[test]
    fn rejects_non_positive_argument() {
        let k = Kernel::power_law(0.6, 0.4).unwrap();
        assert!(k.eval(0.0).is_err());
        assert!(k.cumulative(-1.0).is_err());
    }
}
