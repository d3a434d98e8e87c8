use super::gauss::{gl10, GaussLegendre};
use crate::error::{Error, Result};

/// Tolerances for the half-line integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
    /// Truncation is declared once `|f(a)| * max(a, 1)` drops below this at two successive probes.
    pub truncation_threshold: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            abs_tol: 1e-10,
            rel_tol: 1e-9,
            max_panels: 4000,
            truncation_threshold: 1e-13,
        }
    }
}

struct Panel {
    a: f64,
    b: f64,
    left: Vec<f64>,
    right: Vec<f64>,
    value: Vec<f64>,
    err: Vec<f64>,
}

fn gl_panel<F>(rule: &GaussLegendre, a: f64, b: f64, dim: usize, f: &mut F, buf: &mut [f64]) -> Result<Vec<f64>>
where
    F: FnMut(f64, &mut [f64]) -> Result<()>,
{
    let mut acc = vec![0.0; dim];
    for (x, w) in rule.mapped(a, b) {
        f(x, buf)?;
        for (s, v) in acc.iter_mut().zip(buf.iter()) {
            *s += w * v;
        }
    }
    Ok(acc)
}

fn make_panel<F>(a: f64, b: f64, whole: Vec<f64>, dim: usize, f: &mut F, buf: &mut [f64]) -> Result<Panel>
where
    F: FnMut(f64, &mut [f64]) -> Result<()>,
{
    let rule = gl10();
    let m = 0.5 * (a + b);
    let left = gl_panel(rule, a, m, dim, f, buf)?;
    let right = gl_panel(rule, m, b, dim, f, buf)?;
    // GL-10 error scales as h^20, so the Richardson factor is 2^20 - 1.
    let factor = 1.0 / ((1u64 << 20) as f64 - 1.0);
    let mut value = vec![0.0; dim];
    let mut err = vec![0.0; dim];
    for c in 0..dim {
        let halves = left[c] + right[c];
        let diff = halves - whole[c];
        value[c] = halves + diff * factor;
        err[c] = diff.abs();
    }
    Ok(Panel { a, b, left, right, value, err })
}

/// Locates the truncation point of a half-line integrand by geometric probing at `0.5 * 2^k`.
pub fn truncation_point<F>(dim: usize, f: &mut F, threshold: f64) -> Result<f64>
where
    F: FnMut(f64, &mut [f64]) -> Result<()>,
{
    let mut buf = vec![0.0; dim];
    let mut small_run = 0;
    let mut p = 0.5;
    for _ in 0..64 {
        f(p, &mut buf)?;
        let mag = buf.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !mag.is_finite() {
            return Err(Error::Domain(format!("integrand is not finite at a = {p}")));
        }
        if mag * p.max(1.0) < threshold {
            small_run += 1;
            if small_run == 2 {
                return Ok(p);
            }
        } else {
            small_run = 0;
        }
        p *= 2.0;
    }
    Err(Error::Domain("integrand does not decay on the half line".into()))
}

/// Integrates a vector-valued function over `[0, inf)`, sharing nodes across components.
///
/// Every component must meet `abs_tol` or `rel_tol` against its own total.
pub fn integrate_lewis_vec<F>(dim: usize, mut f: F, spec: &QuadratureSpec) -> Result<Vec<f64>>
where
    F: FnMut(f64, &mut [f64]) -> Result<()>,
{
    let a_max = truncation_point(dim, &mut f, spec.truncation_threshold)?;
    let mut edges = vec![0.0, 0.5];
    while *edges.last().unwrap() < a_max {
        let last = *edges.last().unwrap();
        edges.push(last * 2.0);
    }
    integrate_panels_vec(dim, &edges, f, spec)
}

/// Globally adaptive Gauss–Legendre integration over the given initial panels.
pub fn integrate_panels_vec<F>(dim: usize, edges: &[f64], mut f: F, spec: &QuadratureSpec) -> Result<Vec<f64>>
where
    F: FnMut(f64, &mut [f64]) -> Result<()>,
{
    let mut buf = vec![0.0; dim];
    let mut panels = Vec::with_capacity(edges.len() * 4);
    for w in edges.windows(2) {
        let whole = gl_panel(gl10(), w[0], w[1], dim, &mut f, &mut buf)?;
        panels.push(make_panel(w[0], w[1], whole, dim, &mut f, &mut buf)?);
    }
    loop {
        let mut total = vec![0.0; dim];
        let mut err = vec![0.0; dim];
        for p in &panels {
            for c in 0..dim {
                total[c] += p.value[c];
                err[c] += p.err[c];
            }
        }
        let tol: Vec<f64> = total
            .iter()
            .map(|t| spec.abs_tol.max(spec.rel_tol * t.abs()))
            .collect();
        let worst_component = (0..dim)
            .map(|c| (c, err[c] / tol[c]))
            .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if worst_component.1 <= 1.0 {
            return Ok(total);
        }
        if panels.len() >= spec.max_panels {
            let c = worst_component.0;
            return Err(Error::Quadrature {
                panels: panels.len(),
                partial: total[c],
                error_estimate: err[c],
            });
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let s = (0..dim).map(|c| p.err[c] / tol[c]).fold(0.0, f64::max);
                (i, s)
            })
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        let p = panels.swap_remove(idx);
        let m = 0.5 * (p.a + p.b);
        if !(m > p.a && m < p.b) || (p.b - p.a) < 1e-14 * p.b.abs().max(1.0) {
            let c = worst_component.0;
            return Err(Error::Quadrature {
                panels: panels.len() + 1,
                partial: total[c],
                error_estimate: err[c],
            });
        }
        panels.push(make_panel(p.a, m, p.left, dim, &mut f, &mut buf)?);
        panels.push(make_panel(m, p.b, p.right, dim, &mut f, &mut buf)?);
    }
}

/// Scalar convenience wrapper over [`integrate_lewis_vec`].
pub fn integrate_lewis(mut f: impl FnMut(f64) -> f64, spec: &QuadratureSpec) -> Result<f64> {
    integrate_lewis_vec(
        1,
        |a, out: &mut [f64]| {
            out[0] = f(a);
            Ok(())
        },
        spec,
    )
    .map(|v| v[0])
}

/// Adaptive integration of a scalar function over a finite interval with optional breakpoints.
pub fn integrate_finite(
    mut f: impl FnMut(f64) -> f64,
    breakpoints: &[f64],
    abs_tol: f64,
    rel_tol: f64,
) -> Result<f64> {
    let spec = QuadratureSpec {
        abs_tol,
        rel_tol,
        max_panels: 2000,
        truncation_threshold: 0.0,
    };
    integrate_panels_vec(
        1,
        breakpoints,
        |x, out: &mut [f64]| {
            out[0] = f(x);
            Ok(())
        },
        &spec,
    )
    .map(|v| v[0])
}
