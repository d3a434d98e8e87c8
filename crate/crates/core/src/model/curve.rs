use crate::error::{domain, Error, Result};
use crate::numerics::special::{decay_phi1, decay_phi2};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CurveKind {
    Flat,
    ExponentialDecay,
    Tabulated,
}

impl FromStr for CurveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "flat" => Ok(CurveKind::Flat),
            "exponential_decay" => Ok(CurveKind::ExponentialDecay),
            "tabulated" => Ok(CurveKind::Tabulated),
            other => Err(Error::Config {
                key: "curve.kind".into(),
                message: format!(
                    "unknown curve kind `{other}` (expected flat, exponential_decay or tabulated)"
                ),
            }),
        }
    }
}

impl fmt::Display for CurveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CurveKind::Flat => "flat",
            CurveKind::ExponentialDecay => "exponential_decay",
            CurveKind::Tabulated => "tabulated",
        })
    }
}

/// Forward variance curve `u -> xi_t(t + u)` as a function of time ahead.
#[derive(Debug, Clone, PartialEq)]
pub enum ForwardVarianceCurve {
    Flat {
        level: f64,
    },
    /// `(v0 - vbar) exp(-lambda u) + vbar`
    ExponentialDecay {
        v0: f64,
        vbar: f64,
        lambda: f64,
    },
    /// Piecewise constant: `xi[i]` on `(maturities[i-1], maturities[i]]`, with the first
    /// piece starting at zero.
    Tabulated {
        maturities: Vec<f64>,
        xi: Vec<f64>,
    },
}

impl ForwardVarianceCurve {
    pub fn flat(level: f64) -> Result<Self> {
        if !(level > 0.0 && level.is_finite()) {
            return domain(format!("flat curve level must be positive, got {level}"));
        }
        Ok(ForwardVarianceCurve::Flat { level })
    }

    pub fn exponential_decay(v0: f64, vbar: f64, lambda: f64) -> Result<Self> {
        if !(v0 > 0.0 && v0.is_finite()) {
            return domain(format!("curve v0 must be positive, got {v0}"));
        }
        if !(vbar >= 0.0 && vbar.is_finite()) {
            return domain(format!("curve vbar must be non-negative, got {vbar}"));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return domain(format!("curve lambda must be non-negative, got {lambda}"));
        }
        Ok(ForwardVarianceCurve::ExponentialDecay { v0, vbar, lambda })
    }

    pub fn tabulated(points: &[(f64, f64)]) -> Result<Self> {
        if points.is_empty() {
            return domain("tabulated curve needs at least one point");
        }
        let mut prev = 0.0;
        for &(t, x) in points {
            if !(t > prev && t.is_finite()) {
                return domain(format!(
                    "tabulated maturities must be positive and strictly increasing, got {t} after {prev}"
                ));
            }
            if !(x > 0.0 && x.is_finite()) {
                return domain(format!("tabulated forward variance must be positive, got {x} at {t}"));
            }
            prev = t;
        }
        Ok(ForwardVarianceCurve::Tabulated {
            maturities: points.iter().map(|p| p.0).collect(),
            xi: points.iter().map(|p| p.1).collect(),
        })
    }

    pub fn kind(&self) -> CurveKind {
        match self {
            ForwardVarianceCurve::Flat { .. } => CurveKind::Flat,
            ForwardVarianceCurve::ExponentialDecay { .. } => CurveKind::ExponentialDecay,
            ForwardVarianceCurve::Tabulated { .. } => CurveKind::Tabulated,
        }
    }

    /// The level if the curve is constant.
    pub fn flat_level(&self) -> Option<f64> {
        match self {
            ForwardVarianceCurve::Flat { level } => Some(*level),
            ForwardVarianceCurve::ExponentialDecay { v0, vbar, lambda } => {
                if v0 == vbar || *lambda == 0.0 {
                    Some(*v0)
                } else {
                    None
                }
            }
            ForwardVarianceCurve::Tabulated { xi, .. } => {
                if xi.iter().all(|x| x == &xi[0]) {
                    Some(xi[0])
                } else {
                    None
                }
            }
        }
    }

    /// The curve multiplied by a positive constant.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return domain(format!("curve scale must be positive, got {c}"));
        }
        Ok(match self {
            ForwardVarianceCurve::Flat { level } => ForwardVarianceCurve::Flat { level: c * level },
            ForwardVarianceCurve::ExponentialDecay { v0, vbar, lambda } => {
                ForwardVarianceCurve::ExponentialDecay { v0: c * v0, vbar: c * vbar, lambda: *lambda }
            }
            ForwardVarianceCurve::Tabulated { maturities, xi } => ForwardVarianceCurve::Tabulated {
                maturities: maturities.clone(),
                xi: xi.iter().map(|x| c * x).collect(),
            },
        })
    }

    /// The curve seen `s` later: `u -> xi(s + u)`.
    pub fn shifted(&self, s: f64) -> Result<Self> {
        if !(s >= 0.0 && s.is_finite()) {
            return domain(format!("curve shift must be non-negative, got {s}"));
        }
        match self {
            ForwardVarianceCurve::Flat { .. } => Ok(self.clone()),
            ForwardVarianceCurve::ExponentialDecay { vbar, lambda, .. } => {
                Ok(ForwardVarianceCurve::ExponentialDecay { v0: self.eval(s)?, vbar: *vbar, lambda: *lambda })
            }
            ForwardVarianceCurve::Tabulated { maturities, xi } => {
                let last = *maturities.last().unwrap();
                if s >= last {
                    return domain(format!("shift {s} leaves no table beyond the last maturity {last}"));
                }
                let pts: Vec<(f64, f64)> = maturities
                    .iter()
                    .zip(xi)
                    .filter(|(t, _)| **t > s)
                    .map(|(t, x)| (t - s, *x))
                    .collect();
                Self::tabulated(&pts)
            }
        }
    }

    /// `xi_t(t + u)`.
    pub fn eval(&self, u: f64) -> Result<f64> {
        if !(u >= 0.0 && u.is_finite()) {
            return domain(format!("time ahead must be non-negative, got {u}"));
        }
        match self {
            ForwardVarianceCurve::Flat { level } => Ok(*level),
            ForwardVarianceCurve::ExponentialDecay { v0, vbar, lambda } => {
                let decay = -lambda * u;
                Ok(v0 * decay.exp() - vbar * decay.exp_m1())
            }
            ForwardVarianceCurve::Tabulated { maturities, xi } => {
                let last = *maturities.last().unwrap();
                if u > last {
                    return domain(format!("time ahead {u} is beyond the last tabulated maturity {last}"));
                }
                let i = maturities.partition_point(|t| *t < u);
                Ok(xi[i])
            }
        }
    }

    /// `int_0^tau xi(u) du`, the total forward variance `M`.
    pub fn integral(&self, tau: f64) -> Result<f64> {
        if !(tau >= 0.0 && tau.is_finite()) {
            return domain(format!("maturity must be non-negative, got {tau}"));
        }
        if tau == 0.0 {
            return Ok(0.0);
        }
        Ok(self.cell_moments(0.0, tau)?.0)
    }

    /// Cell moments `(int xi, int xi(u) (u - u0) / w)` over `[u0, u0 + w]`.
    pub fn cell_moments(&self, u0: f64, w: f64) -> Result<(f64, f64)> {
        if !(u0 >= 0.0 && w > 0.0 && u0.is_finite() && w.is_finite()) {
            return domain(format!("invalid curve cell [{u0}, {u0} + {w}]"));
        }
        match self {
            ForwardVarianceCurve::Flat { level } => Ok((level * w, 0.5 * level * w)),
            ForwardVarianceCurve::ExponentialDecay { v0, vbar, lambda } => {
                let amp = (v0 - vbar) * (-lambda * u0).exp() * w;
                let x = lambda * w;
                Ok((vbar * w + amp * decay_phi1(x), 0.5 * vbar * w + amp * decay_phi2(x)))
            }
            ForwardVarianceCurve::Tabulated { maturities, xi } => {
                let u1 = u0 + w;
                let last = *maturities.last().unwrap();
                if u1 > last * (1.0 + 1e-12) {
                    return domain(format!("cell end {u1} is beyond the last tabulated maturity {last}"));
                }
                let mut i0 = 0.0;
                let mut i1 = 0.0;
                let mut lo = 0.0f64;
                for (t, x) in maturities.iter().zip(xi) {
                    let a = lo.max(u0);
                    let b = t.min(u1);
                    if b > a {
                        i0 += x * (b - a);
                        i1 += x * ((b - u0).powi(2) - (a - u0).powi(2)) / (2.0 * w);
                    }
                    lo = *t;
                    if lo >= u1 {
                        break;
                    }
                }
                Ok((i0, i1))
            }
        }
    }
}
