//! Characteristic exponents `psi(tau; a) = log E[exp(i a X_tau)]` of the log-spot.
//!
//! The AFV route integrates the Riccati solution against the forward variance curve,
//! `psi = int_0^tau xi(u) g(tau - u) du`; its Malliavin-type sensitivity is
//! `D^xi psi = (kappa * g)(tau)`. The classical Heston route uses the closed form.

use crate::error::{domain, Error, Result};
use crate::model::{ForwardVarianceCurve, Kernel, ModelParams};
use crate::numerics::special::{cexpm1, clog1p};
use crate::riccati::{kconv_at, ConvolutionWeights, RiccatiGrid, RiccatiSolution, RiccatiSolver};
use num_complex::Complex64;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Closed-form Heston coefficients: `psi = D V_t + C Vbar`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HestonCD {
    pub c: Complex64,
    pub d: Complex64,
    pub tau: f64,
    pub a: Complex64,
}

impl HestonCD {
    pub fn psi(&self, v0: f64, vbar: f64) -> Complex64 {
        self.d * v0 + self.c * vbar
    }
}

/// Heston `C` and `D` in the formulation whose logarithm never crosses its branch cut.
///
/// `D' = -a(a+i)/2 - (lambda - i rho nu a) D + nu^2 D^2 / 2`, `C' = lambda D`, both zero at 0.
pub fn heston_cd(params: &ModelParams, tau: f64, a: Complex64) -> Result<HestonCD> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return domain(format!("maturity must be non-negative, got {tau}"));
    }
    let zero = Complex64::new(0.0, 0.0);
    let ahat = -0.5 * a * (a + I);
    // At a = 0 and a = -i the Riccati forcing vanishes and so does the solution; the
    // closed form would divide by beta + d = 0 there when lambda <= rho nu.
    if tau == 0.0 || ahat == zero {
        return Ok(HestonCD { c: zero, d: zero, tau, a });
    }
    let nu = params.nu;
    let lambda = params.lambda;
    let beta = lambda - I * params.rho * nu * a;
    let d = (beta * beta - 2.0 * ahat * nu * nu).sqrt();
    let bd = beta + d;
    if bd.norm() == 0.0 {
        return Err(Error::Unsupported(format!("degenerate Heston discriminant at a = {a}")));
    }
    let r_minus = 2.0 * ahat / bd;
    // g2 = (beta - d) / (beta + d), written without the cancellation in beta - d.
    let g2 = 2.0 * ahat * nu * nu / (bd * bd);
    let one_minus_e = -cexpm1(-d * tau);
    let dd = r_minus * one_minus_e / ((1.0 - g2) + g2 * one_minus_e);
    let c = lambda * (r_minus * tau - 2.0 / (nu * nu) * clog1p(g2 * one_minus_e / (1.0 - g2)));
    Ok(HestonCD { c, d: dd, tau, a })
}

/// An AFV characteristic exponent at one maturity and Fourier argument.
#[derive(Debug, Clone, Copy)]
pub struct CharExponentAfv<'a> {
    pub kernel: &'a Kernel,
    pub curve: &'a ForwardVarianceCurve,
    pub riccati: &'a RiccatiSolution,
    pub tau: f64,
}

/// `int_0^tau xi(u) g(tau - u) du` with `g` piecewise linear on the solver grid.
pub fn psi_afv(ce: &CharExponentAfv<'_>) -> Result<Complex64> {
    let grid = ce.riccati.grid;
    let n = node_of(&grid, ce.tau)?;
    let w = ConvolutionWeights::from_moments(&RiccatiGrid::new(grid.n_steps(), grid.tau_max())?, |u0, h| {
        ce.curve.cell_moments(u0, h)
    })?;
    Ok(w.convolve(&ce.riccati.g, n))
}

/// `D^xi psi = (kappa * g)(tau)`.
pub fn dxi_psi_afv(ce: &CharExponentAfv<'_>) -> Result<Complex64> {
    kconv_at(ce.riccati, ce.kernel, ce.tau)
}

fn node_of(grid: &RiccatiGrid, tau: f64) -> Result<usize> {
    grid.node_index(tau).ok_or(Error::GridMismatch { tau, step: grid.step() })
}

/// Riccati solver plus curve weights, evaluating `(psi, D^xi psi)` at grid maturities.
#[derive(Debug, Clone)]
pub struct AfvCharFn {
    solver: RiccatiSolver,
    curve_weights: ConvolutionWeights,
}

impl AfvCharFn {
    pub fn new(rho: f64, kernel: &Kernel, curve: &ForwardVarianceCurve, grid: RiccatiGrid) -> Result<Self> {
        let solver = RiccatiSolver::new(rho, kernel, grid)?;
        let curve_weights = ConvolutionWeights::from_moments(&grid, |u0, h| curve.cell_moments(u0, h))?;
        Ok(AfvCharFn { solver, curve_weights })
    }

    /// Engine for a single maturity on the default grid.
    pub fn for_maturity(rho: f64, kernel: &Kernel, curve: &ForwardVarianceCurve, tau: f64) -> Result<Self> {
        Self::new(rho, kernel, curve, RiccatiGrid::for_maturity(tau)?)
    }

    pub fn grid(&self) -> &RiccatiGrid {
        self.solver.grid()
    }

    pub fn solve(&self, a: Complex64) -> Result<RiccatiSolution> {
        self.solver.solve(a)
    }

    pub fn node(&self, tau: f64) -> Result<usize> {
        node_of(self.solver.grid(), tau)
    }

    /// `(psi, D^xi psi)` at grid node `n`.
    pub fn at_node(&self, sol: &RiccatiSolution, n: usize) -> (Complex64, Complex64) {
        (self.curve_weights.convolve(&sol.g, n), sol.kconv_g[n])
    }

    /// `(psi, D^xi psi)` at maturity `tau`, which must be a grid node.
    pub fn eval(&self, a: Complex64, tau: f64) -> Result<(Complex64, Complex64)> {
        let n = self.node(tau)?;
        let sol = self.solve(a)?;
        Ok(self.at_node(&sol, n))
    }
}
