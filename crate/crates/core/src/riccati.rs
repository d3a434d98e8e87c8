//! Convolution Riccati equation
//! `g(tau; a) = -a(a+i)/2 + i rho a (kappa * g)(tau; a) + (kappa * g)(tau; a)^2 / 2`.
//!
//! The solver uses product integration on a uniform grid: `g` is piecewise linear between
//! nodes and the kernel is integrated exactly against each linear piece. Each step is
//! implicit in the new value and is solved in closed form from the quadratic it satisfies.

use crate::error::{domain, Error, Result};
use crate::model::{Kernel, ModelParams};
use num_complex::Complex64;

pub const DEFAULT_STEPS_PER_UNIT: usize = 512;
pub const MIN_STEPS: usize = 256;
pub const OVERFLOW_GUARD: f64 = 1e10;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Uniform grid `tau_j = j * tau_max / n_steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiccatiGrid {
    n_steps: usize,
    tau_max: f64,
}

impl RiccatiGrid {
    pub fn new(n_steps: usize, tau_max: f64) -> Result<Self> {
        if n_steps < 8 {
            return domain(format!("Riccati grid needs at least 8 steps, got {n_steps}"));
        }
        if !(tau_max > 0.0 && tau_max.is_finite()) {
            return domain(format!("Riccati grid horizon must be positive, got {tau_max}"));
        }
        Ok(RiccatiGrid { n_steps, tau_max })
    }

    /// `max(min_steps, ceil(per_unit * tau_max))` steps.
    pub fn with_density(tau_max: f64, per_unit: usize, min_steps: usize) -> Result<Self> {
        let n = ((per_unit as f64 * tau_max).ceil() as usize).max(min_steps);
        Self::new(n, tau_max)
    }

    /// The default grid for a single maturity.
    pub fn for_maturity(tau: f64) -> Result<Self> {
        Self::with_density(tau, DEFAULT_STEPS_PER_UNIT, MIN_STEPS)
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn tau_max(&self) -> f64 {
        self.tau_max
    }

    pub fn step(&self) -> f64 {
        self.tau_max / self.n_steps as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        if j == self.n_steps {
            self.tau_max
        } else {
            j as f64 * self.step()
        }
    }

    /// Index of the node at `tau`, if `tau` is a node up to rounding.
    pub fn node_index(&self, tau: f64) -> Option<usize> {
        let x = tau / self.step();
        let j = x.round();
        if j >= 0.0 && j <= self.n_steps as f64 && (x - j).abs() <= 1e-9 * x.max(1.0) {
            Some(j as usize)
        } else {
            None
        }
    }
}

/// Product-integration weights for `int_0^{tau_n} f(tau_n - u) v(u) du`-type sums with
/// `v` piecewise linear. `p[m]` and `q[m]` weight the two ends of cell `m`.
#[derive(Debug, Clone)]
pub struct ConvolutionWeights {
    p: Vec<f64>,
    q: Vec<f64>,
}

impl ConvolutionWeights {
    /// Builds the weights from cell moments `(int f, int f(u) (u - u0)/w)` on `[m h, (m+1) h]`.
    pub fn from_moments(
        grid: &RiccatiGrid,
        mut moments: impl FnMut(f64, f64) -> Result<(f64, f64)>,
    ) -> Result<Self> {
        let n = grid.n_steps();
        let h = grid.step();
        let mut p = Vec::with_capacity(n);
        let mut q = Vec::with_capacity(n);
        for m in 0..n {
            let (i0, i1) = moments(m as f64 * h, h)?;
            p.push(i0 - i1);
            q.push(i1);
        }
        Ok(ConvolutionWeights { p, q })
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    /// `sum_{m<n} [v_{n-m} p_m + v_{n-1-m} q_m]`, i.e. the convolution at node `n`.
    pub fn convolve(&self, v: &[Complex64], n: usize) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for m in 0..n {
            acc += v[n - m] * self.p[m] + v[n - 1 - m] * self.q[m];
        }
        acc
    }
}

/// `g` and `kappa * g` at the grid nodes for one Fourier argument.
#[derive(Debug, Clone)]
pub struct RiccatiSolution {
    pub a: Complex64,
    pub rho: f64,
    pub grid: RiccatiGrid,
    pub g: Vec<Complex64>,
    pub kconv_g: Vec<Complex64>,
}

/// A solver with precomputed kernel weights, reusable across Fourier arguments.
#[derive(Debug, Clone)]
pub struct RiccatiSolver {
    rho: f64,
    kernel: Kernel,
    grid: RiccatiGrid,
    weights: ConvolutionWeights,
    // combined history weights, reversed: wrev[i] = p[n - i] + q[n - i - 1]
    wrev: Vec<f64>,
}

impl RiccatiSolver {
    pub fn new(rho: f64, kernel: &Kernel, grid: RiccatiGrid) -> Result<Self> {
        if !(rho.abs() <= 1.0) {
            return domain(format!("rho must lie in [-1, 1], got {rho}"));
        }
        let weights = ConvolutionWeights::from_moments(&grid, |u0, w| kernel.cell_moments(u0, w))?;
        let n = grid.n_steps();
        let mut wrev = vec![0.0; n + 1];
        for k in 1..n {
            wrev[n - k] = weights.p[k] + weights.q[k - 1];
        }
        Ok(RiccatiSolver { rho, kernel: kernel.clone(), grid, weights, wrev })
    }

    pub fn grid(&self) -> &RiccatiGrid {
        &self.grid
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn solve(&self, a: Complex64) -> Result<RiccatiSolution> {
        if !(a.re.is_finite() && a.im.is_finite()) {
            return domain(format!("Fourier argument must be finite, got {a}"));
        }
        let n = self.grid.n_steps();
        let c0 = -0.5 * a * (a + I);
        if !c0.norm().is_finite() {
            return Err(Error::Divergence { node: 0, tau: 0.0, magnitude: c0.norm() });
        }
        // g scales like |a|^2, so blow-up is judged relative to the forcing term.
        let guard = OVERFLOW_GUARD * c0.norm().max(1.0);
        let ira = I * self.rho * a;
        let w = self.weights.p[0];
        let b = 1.0 - ira * w;
        let mut g_re = vec![0.0; n + 1];
        let mut g_im = vec![0.0; n + 1];
        let mut g = Vec::with_capacity(n + 1);
        let mut hs = Vec::with_capacity(n + 1);
        g_re[0] = c0.re;
        g_im[0] = c0.im;
        g.push(c0);
        hs.push(Complex64::new(0.0, 0.0));
        for step in 1..=n {
            let wslice = &self.wrev[n - step + 1..n];
            let (mut kr, mut ki) = (0.0, 0.0);
            for ((gr, gi), wt) in g_re[1..step].iter().zip(&g_im[1..step]).zip(wslice) {
                kr += gr * wt;
                ki += gi * wt;
            }
            let known = Complex64::new(kr, ki) + c0 * self.weights.q[step - 1];
            let h = implicit_step(b, w, known, c0);
            let gn = c0 + ira * h + 0.5 * h * h;
            let mag = gn.norm();
            if !(mag <= guard) {
                return Err(Error::Divergence { node: step, tau: self.grid.node(step), magnitude: mag });
            }
            g_re[step] = gn.re;
            g_im[step] = gn.im;
            g.push(gn);
            hs.push(h);
        }
        Ok(RiccatiSolution { a, rho: self.rho, grid: self.grid, g, kconv_g: hs })
    }

    /// `(kappa * g)(tau)` anywhere on `[0, tau_max]`; see [`kconv_at`].
    pub fn kconv_at(&self, sol: &RiccatiSolution, tau: f64) -> Result<Complex64> {
        kconv_at(sol, &self.kernel, tau)
    }
}

// Solves h = known + w g(h), g(h) = c0 + i rho a h + h^2/2, on the root that tends to
// `known + w c0` as w -> 0 (square root taken in the half-plane of b).
fn implicit_step(b: Complex64, w: f64, known: Complex64, c0: Complex64) -> Complex64 {
    let num = known + w * c0;
    let disc = b * b - 2.0 * w * num;
    let mut sq = disc.sqrt();
    if (sq * b.conj()).re < 0.0 {
        sq = -sq;
    }
    2.0 * num / (b + sq)
}

/// Solves the Riccati equation for a single Fourier argument.
pub fn solve_riccati(
    params: &ModelParams,
    kernel: &Kernel,
    grid: RiccatiGrid,
    a: Complex64,
) -> Result<RiccatiSolution> {
    RiccatiSolver::new(params.rho, kernel, grid)?.solve(a)
}

/// `(kappa * g)(tau)` consistent with the solver's product integration.
///
/// At nodes the stored value is returned; between nodes a partial implicit step of
/// length `tau - tau_n` is taken from the last node.
pub fn kconv_at(sol: &RiccatiSolution, kernel: &Kernel, tau: f64) -> Result<Complex64> {
    let grid = &sol.grid;
    if !(tau >= 0.0 && tau <= grid.tau_max() * (1.0 + 1e-12)) {
        return domain(format!("tau = {tau} is outside the Riccati grid [0, {}]", grid.tau_max()));
    }
    if let Some(j) = grid.node_index(tau) {
        return Ok(sol.kconv_g[j]);
    }
    let h = grid.step();
    let n = (tau / h).floor() as usize;
    let delta = tau - n as f64 * h;
    let mut known = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let m = n - 1 - i;
        let (i0, i1) = kernel.cell_moments(delta + m as f64 * h, h)?;
        known += sol.g[i + 1] * (i0 - i1) + sol.g[i] * i1;
    }
    let (i0, i1) = kernel.cell_moments(0.0, delta)?;
    known += sol.g[n] * i1;
    let w = i0 - i1;
    let a = sol.a;
    let c0 = -0.5 * a * (a + I);
    let b = 1.0 - I * sol.rho * a * w;
    Ok(implicit_step(b, w, known, c0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rough() -> (ModelParams, Kernel) {
        let p = ModelParams::new(0.6, 0.4, 0.0, -0.65, 0.025, 0.025).unwrap();
        let k = Kernel::power_law(0.6, 0.4).unwrap();
        (p, k)
    }

    #[test]
    fn grid_nodes() {
        let g = RiccatiGrid::new(576, 1.0).unwrap();
        assert_eq!(g.node_index(1.0 / 12.0), Some(48));
        assert_eq!(g.node_index(0.25), Some(144));
        assert_eq!(g.node_index(1.0), Some(576));
        assert_eq!(g.node_index(0.3), None);
        assert_eq!(RiccatiGrid::for_maturity(0.1).unwrap().n_steps(), 256);
        assert_eq!(RiccatiGrid::for_maturity(2.0).unwrap().n_steps(), 1024);
        assert!(RiccatiGrid::new(4, 1.0).is_err());
    }

    #[test]
    fn initial_values() {
        let (p, k) = rough();
        let a = Complex64::new(1.0, -0.5);
        let s = solve_riccati(&p, &k, RiccatiGrid::new(64, 1.0).unwrap(), a).unwrap();
        assert_eq!(s.g[0], -0.5 * a * (a + I));
        assert_eq!(s.kconv_g[0], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn constraint_zeros_are_exact() {
        let (p, k) = rough();
        for a in [Complex64::new(0.0, 0.0), Complex64::new(0.0, -1.0)] {
            let s = solve_riccati(&p, &k, RiccatiGrid::new(128, 1.0).unwrap(), a).unwrap();
            assert!(s.g.iter().all(|z| z.norm() <= 1e-12));
            assert!(s.kconv_g.iter().all(|z| z.norm() <= 1e-12));
        }
    }

    #[test]
    fn discrete_fixed_point_holds() {
        let (p, k) = rough();
        let a = Complex64::new(2.0, -0.5);
        let grid = RiccatiGrid::new(100, 0.5).unwrap();
        let s = solve_riccati(&p, &k, grid, a).unwrap();
        let w = ConvolutionWeights::from_moments(&grid, |u0, h| k.cell_moments(u0, h)).unwrap();
        for n in [1, 7, 50, 100] {
            let h = w.convolve(&s.g, n);
            assert!((h - s.kconv_g[n]).norm() < 1e-13);
            let g = -0.5 * a * (a + I) + I * p.rho * a * h + 0.5 * h * h;
            assert!((g - s.g[n]).norm() < 1e-12);
        }
    }

    #[test]
    fn conjugate_symmetry() {
        let (p, k) = rough();
        let grid = RiccatiGrid::new(200, 1.0).unwrap();
        let s1 = solve_riccati(&p, &k, grid, Complex64::new(3.0, -0.5)).unwrap();
        let s2 = solve_riccati(&p, &k, grid, Complex64::new(-3.0, -0.5)).unwrap();
        for (x, y) in s1.g.iter().zip(&s2.g) {
            assert!((x - y.conj()).norm() <= 1e-12 * x.norm().max(1.0));
        }
    }

    #[test]
    fn kconv_at_nodes_and_between() {
        let (p, k) = rough();
        let a = Complex64::new(1.0, -0.5);
        let coarse = solve_riccati(&p, &k, RiccatiGrid::new(128, 1.0).unwrap(), a).unwrap();
        let fine = solve_riccati(&p, &k, RiccatiGrid::new(256, 1.0).unwrap(), a).unwrap();
        assert_eq!(kconv_at(&coarse, &k, 0.0).unwrap(), Complex64::new(0.0, 0.0));
        assert_eq!(kconv_at(&coarse, &k, 0.5).unwrap(), coarse.kconv_g[64]);
        let mid = 65.0 / 256.0 + 0.5 / 128.0 - 0.5 / 256.0;
        let x = kconv_at(&coarse, &k, 129.0 / 256.0).unwrap();
        let diff = (x - fine.kconv_g[129]).norm();
        let node_diff = (coarse.kconv_g[64] - fine.kconv_g[128]).norm();
        assert!(diff <= 4.0 * node_diff.max(1e-12), "{diff} vs {node_diff}");
        assert!(kconv_at(&coarse, &k, mid).is_ok());
        assert!(kconv_at(&coarse, &k, 1.5).is_err());
    }

    #[test]
    fn divergence_is_reported() {
        let (p, k) = rough();
        let r = solve_riccati(&p, &k, RiccatiGrid::new(16, 1.0).unwrap(), Complex64::new(1e160, -0.5));
        assert!(matches!(r, Err(Error::Divergence { node: 0, .. })), "{r:?}");
        assert!(solve_riccati(&p, &k, RiccatiGrid::new(16, 1.0).unwrap(), Complex64::new(2e5, -0.5)).is_ok());
    }
}
