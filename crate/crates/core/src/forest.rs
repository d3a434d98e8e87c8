//! Diamond-tree forest expansion of the cumulant generating function up to the third forest,
//! closed-form tree values for flat-curve Heston and rough Heston with `lambda = 0`, and the
//! forest expansions of the SSR.
//!
//! Coefficients are polynomials in `a` whose entries are dyadic rationals times powers of `i`,
//! so `f64` arithmetic on them is exact and polynomial equality can be tested with `==`.

use crate::error::{domain, Error, Result};
use crate::model::{ForwardVarianceCurve, ModelParams};
use crate::numerics::rgamma;
use num_complex::Complex64;
use std::fmt;
use std::ops::{Add, Mul};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

pub const MAX_LEVEL: usize = 3;

/// The trees of the first four forests. `XMM` is `(M ⋄ X) ⋄ M`, `MMX` is `(M ⋄ M) ⋄ X`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TreeId {
    M,
    MX,
    MM,
    MXX,
    XMM,
    MMX,
    MXXX,
}

impl TreeId {
    pub const ALL: [TreeId; 7] = [TreeId::M, TreeId::MX, TreeId::MM, TreeId::MXX, TreeId::XMM, TreeId::MMX, TreeId::MXXX];

    pub fn name(self) -> &'static str {
        match self {
            TreeId::M => "M",
            TreeId::MX => "MX",
            TreeId::MM => "MM",
            TreeId::MXX => "MXX",
            TreeId::XMM => "XMM",
            TreeId::MMX => "MMX",
            TreeId::MXXX => "MXXX",
        }
    }

    /// Number of leaves, counting `M = X ⋄ X` as two.
    pub fn leaves(self) -> usize {
        match self {
            TreeId::M => 2,
            TreeId::MX => 3,
            TreeId::MM | TreeId::MXX => 4,
            _ => 5,
        }
    }
}

impl fmt::Display for TreeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Operand of a diamond product: the log-spot `X` or a catalogued tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Node {
    X,
    Tree(TreeId),
}

/// Root-joins two operands. Commutative; products outside the catalog are unsupported.
pub fn diamond(a: Node, b: Node) -> Result<TreeId> {
    use Node::{Tree, X};
    use TreeId::*;
    let joined = |p: Node, q: Node| match (p, q) {
        (X, X) => Some(M),
        (Tree(M), X) => Some(MX),
        (Tree(M), Tree(M)) => Some(MM),
        (Tree(MX), X) => Some(MXX),
        (Tree(MX), Tree(M)) => Some(XMM),
        (Tree(MM), X) => Some(MMX),
        (Tree(MXX), X) => Some(MXXX),
        _ => None,
    };
    joined(a, b)
        .or_else(|| joined(b, a))
        .ok_or_else(|| Error::Unsupported(format!("diamond product {a:?} ⋄ {b:?} is outside the tree catalog")))
}

/// Dense polynomial in `a`; `coeffs[k]` multiplies `a^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    coeffs: Vec<Complex64>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.last() == Some(&ZERO) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn constant(c: Complex64) -> Self {
        Poly::new(vec![c])
    }

    /// The monomial `a`.
    pub fn a() -> Self {
        Poly::new(vec![ZERO, ONE])
    }

    /// `a + i`.
    pub fn a_plus_i() -> Self {
        Poly::new(vec![I, ONE])
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Poly::new(self.coeffs.iter().map(|x| x * c).collect())
    }

    pub fn pow(&self, n: u32) -> Self {
        (0..n).fold(Poly::constant(ONE), |acc, _| &acc * self)
    }

    pub fn eval(&self, a: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, c| acc * a + c)
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let get = |p: &Poly, k: usize| p.coeffs.get(k).copied().unwrap_or(ZERO);
        Poly::new((0..n).map(|k| get(self, k) + get(rhs, k)).collect())
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.is_zero() || rhs.is_zero() {
            return Poly::new(Vec::new());
        }
        let mut out = vec![ZERO; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, x) in self.coeffs.iter().enumerate() {
            for (j, y) in rhs.coeffs.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        Poly::new(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestTerm {
    pub level: usize,
    pub tree: TreeId,
    pub coeff: Poly,
}

fn collect_terms(level: usize, parts: Vec<(TreeId, Poly)>) -> Vec<ForestTerm> {
    let mut out: Vec<ForestTerm> = Vec::new();
    for (tree, coeff) in parts {
        match out.iter_mut().find(|t| t.tree == tree) {
            Some(t) => t.coeff = &t.coeff + &coeff,
            None => out.push(ForestTerm { level, tree, coeff }),
        }
    }
    out.retain(|t| !t.coeff.is_zero());
    out.sort_by_key(|t| t.tree);
    out
}

/// Forests `F_0 ..= F_max_level` from the quadratic recursion
/// `F_l = 1/2 sum_j F_{l-2-j} ⋄ F_j + i a (X ⋄ F_{l-1})`, `F_0 = -a(a+i)/2 M`.
pub fn expand_forest(max_level: usize) -> Result<Vec<ForestTerm>> {
    if max_level > MAX_LEVEL {
        return Err(Error::Unsupported(format!("forests beyond level {MAX_LEVEL} are not catalogued")));
    }
    let a = Poly::a();
    let ia = a.scale(I);
    let f0 = (&a * &Poly::a_plus_i()).scale(Complex64::new(-0.5, 0.0));
    let mut forests: Vec<Vec<ForestTerm>> = vec![vec![ForestTerm { level: 0, tree: TreeId::M, coeff: f0 }]];
    for level in 1..=max_level {
        let mut parts = Vec::new();
        for j in 0..level.saturating_sub(1) {
            for s in &forests[level - 2 - j] {
                for t in &forests[j] {
                    let tree = diamond(Node::Tree(s.tree), Node::Tree(t.tree))?;
                    parts.push((tree, (&s.coeff * &t.coeff).scale(Complex64::new(0.5, 0.0))));
                }
            }
        }
        for t in &forests[level - 1] {
            parts.push((diamond(Node::X, Node::Tree(t.tree))?, &ia * &t.coeff));
        }
        forests.push(collect_terms(level, parts));
    }
    Ok(forests.into_iter().flatten().collect())
}

/// True iff every coefficient vanishes at `a = 0` and `a = -i`.
pub fn forest_constraints_check(terms: &[ForestTerm]) -> bool {
    terms.iter().all(|t| t.coeff.eval(ZERO) == ZERO && t.coeff.eval(-I) == ZERO)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CatalogKind {
    HestonLambda0,
    RoughLambda0,
}

/// Closed-form tree values and the four `D^xi` values entering the SSR expansions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeCatalog {
    pub kind: CatalogKind,
    pub tau: f64,
    pub rho: f64,
    values: [f64; 7],
    dxi: [f64; 4],
}

impl TreeCatalog {
    pub fn value(&self, t: TreeId) -> f64 {
        self.values[t as usize]
    }

    /// `D^xi T`, available for `M`, `MX`, `MM` and `MXX`.
    pub fn dxi(&self, t: TreeId) -> Option<f64> {
        self.dxi.get(t as usize).copied()
    }
}

/// Tree values for a flat curve with `lambda = 0`.
pub fn tree_values(kind: CatalogKind, params: &ModelParams, curve: &ForwardVarianceCurve, tau: f64) -> Result<TreeCatalog> {
    if params.lambda != 0.0 {
        return Err(Error::Unsupported(format!("tree catalogs need lambda = 0, got {}", params.lambda)));
    }
    let v = curve
        .flat_level()
        .ok_or_else(|| Error::Unsupported("tree catalogs need a flat forward variance curve".into()))?;
    if !(tau > 0.0) {
        return domain(format!("maturity must be positive, got {tau}"));
    }
    let (nu, rho) = (params.nu, params.rho);
    let (values, dxi) = match kind {
        CatalogKind::HestonLambda0 => {
            if params.alpha != 1.0 {
                return Err(Error::Unsupported("the Heston catalog needs alpha = 1".into()));
            }
            let t2 = tau * tau;
            let t3 = t2 * tau;
            let t4 = t3 * tau;
            (
                [
                    v * tau,
                    0.5 * rho * nu * v * t2,
                    nu * nu * v * t3 / 3.0,
                    rho * rho * nu * nu * v * t3 / 6.0,
                    rho * nu.powi(3) * v * t4 / 8.0,
                    rho * nu.powi(3) * v * t4 / 12.0,
                    rho.powi(3) * nu.powi(3) * v * t4 / 24.0,
                ],
                [nu * tau, 0.5 * rho * nu * nu * t2, nu.powi(3) * t3 / 3.0, rho * rho * nu.powi(3) * t3 / 6.0],
            )
        }
        CatalogKind::RoughLambda0 => {
            let al = params.alpha;
            let g = |x: f64| 1.0 / rgamma(x);
            let ta = tau.powf(al);
            let t2a = tau.powf(2.0 * al);
            let t3a = tau.powf(3.0 * al);
            (
                [
                    v * tau,
                    rho * nu * v * ta * tau * rgamma(2.0 + al),
                    nu * nu * v * rgamma(1.0 + al).powi(2) * t2a * tau / (2.0 * al + 1.0),
                    rho * rho * nu * nu * v * rgamma(2.0 + 2.0 * al) * t2a * tau,
                    rho * nu.powi(3) * v * rgamma(1.0 + al) * rgamma(1.0 + 2.0 * al) * t3a * tau / (3.0 * al + 1.0),
                    rho * nu.powi(3) * v * g(1.0 + 2.0 * al) * rgamma(1.0 + al).powi(2) * rgamma(2.0 + 3.0 * al) * t3a * tau,
                    rho.powi(3) * nu.powi(3) * v * rgamma(2.0 + 3.0 * al) * t3a * tau,
                ],
                [
                    nu * rgamma(1.0 + al) * ta,
                    rho * nu * nu * rgamma(1.0 + 2.0 * al) * t2a,
                    nu.powi(3) * rgamma(1.0 + al).powi(2) * g(1.0 + 2.0 * al) * rgamma(1.0 + 3.0 * al) * t3a,
                    rho * rho * nu.powi(3) * rgamma(1.0 + 3.0 * al) * t3a,
                ],
            )
        }
    };
    Ok(TreeCatalog { kind, tau, rho, values, dxi })
}

fn ratio(rho: f64, m: f64, num: f64, den: f64) -> Result<f64> {
    if den == 0.0 || !den.is_finite() {
        return Err(Error::DegenerateSkew(den));
    }
    Ok(rho * m * num / den)
}

/// Second order in the forest expansion: `M rho D^xi{M + MX/2} / {MX + MXX}`.
pub fn ssr_second_order(c: &TreeCatalog) -> Result<f64> {
    use TreeId::*;
    let d = |t| c.dxi(t).unwrap();
    ratio(c.rho, c.value(M), d(M) + 0.5 * d(MX), c.value(MX) + c.value(MXX))
}

/// Next-to-leading order in `tau`.
///
/// Terms dropped relative to the kept ones are `O(tau^{min(2 alpha, 3 alpha - 1)})`
/// in the numerator and denominator brackets.
pub fn ssr_next_to_leading(c: &TreeCatalog) -> Result<f64> {
    use TreeId::*;
    let v = |t| c.value(t);
    let d = |t| c.dxi(t).unwrap();
    let m = v(M);
    let (m2, m3) = (m * m, m * m * m);
    let num = d(M) + 0.5 * d(MX) - d(MM) / (4.0 * m) - d(MXX) / m - v(MX) * d(M) / (4.0 * m)
        + 1.5 / m2 * v(MX) * d(MX)
        + 3.0 / (8.0 * m2) * d(M) * v(MM)
        + 1.5 / m2 * d(M) * v(MXX)
        - 15.0 / (8.0 * m3) * d(M) * v(MX).powi(2);
    let den = v(MX) + v(MXX) - 0.75 / m * v(MX).powi(2) - 105.0 / (24.0 * m3) * v(MX).powi(3)
        + 15.0 / (8.0 * m2) * v(MM) * v(MX)
        + 7.5 / m2 * v(MX) * v(MXX)
        - 0.75 / m * v(MMX)
        - 1.5 / m * v(XMM)
        - 3.0 / m * v(MXXX);
    ratio(c.rho, m, num, den)
}

/// The classical Heston `lambda = 0` expansion of the SSR to first order in `tau`.
pub fn heston_lambda0_expansion(nu: f64, rho: f64, v: f64, tau: f64) -> f64 {
    let x = nu * nu * tau / v;
    let num = 1.0 + nu * rho * tau / 8.0 + x / 24.0 - rho * rho * x / 96.0;
    let den = 1.0 - rho * nu * tau / 24.0 + x / 8.0 - 3.0 * rho * rho * x / 32.0;
    2.0 * num / den
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn factors(s: Complex64, pa: u32, pai: u32) -> Poly {
        (&Poly::a().pow(pa) * &Poly::a_plus_i().pow(pai)).scale(s)
    }

    fn level(terms: &[ForestTerm], l: usize) -> Vec<(TreeId, Poly)> {
        terms.iter().filter(|t| t.level == l).map(|t| (t.tree, t.coeff.clone())).collect()
    }

    #[test]
    fn forests_match_displayed_polynomials() {
        let f = expand_forest(3).unwrap();
        assert_eq!(level(&f, 0), vec![(TreeId::M, factors(c(-0.5, 0.0), 1, 1))]);
        assert_eq!(level(&f, 1), vec![(TreeId::MX, factors(c(0.0, -0.5), 2, 1))]);
        assert_eq!(
            level(&f, 2),
            vec![(TreeId::MM, factors(c(0.125, 0.0), 2, 2)), (TreeId::MXX, factors(c(0.5, 0.0), 3, 1))]
        );
        assert_eq!(
            level(&f, 3),
            vec![
                (TreeId::XMM, factors(c(0.0, 0.25), 3, 2)),
                (TreeId::MMX, factors(c(0.0, 0.125), 3, 2)),
                (TreeId::MXXX, factors(c(0.0, 0.5), 4, 1)),
            ]
        );
        assert!(matches!(expand_forest(4), Err(Error::Unsupported(_))));
    }

    #[test]
    fn constraint_zeros() {
        let mut f = expand_forest(3).unwrap();
        assert!(forest_constraints_check(&f));
        assert!(forest_constraints_check(&expand_forest(0).unwrap()));
        f[2].coeff = &f[2].coeff + &Poly::constant(ONE);
        assert!(!forest_constraints_check(&f));
    }

    #[test]
    fn leaves_grow_with_level() {
        for t in expand_forest(3).unwrap() {
            assert_eq!(t.tree.leaves(), t.level + 2);
        }
    }

    #[test]
    fn diamond_is_commutative_and_closed() {
        for p in [Node::X, Node::Tree(TreeId::M), Node::Tree(TreeId::MX)] {
            for q in [Node::X, Node::Tree(TreeId::M), Node::Tree(TreeId::MM)] {
                if let Ok(t) = diamond(p, q) {
                    assert_eq!(diamond(q, p).unwrap(), t);
                }
            }
        }
        assert!(diamond(Node::Tree(TreeId::MM), Node::Tree(TreeId::MM)).is_err());
    }

    #[test]
    fn poly_arithmetic() {
        let p = factors(ONE, 1, 1);
        assert_eq!(p.coeffs(), &[ZERO, I, ONE]);
        assert_eq!(p.degree(), Some(2));
        assert_eq!(p.eval(c(2.0, 0.0)), c(4.0, 2.0));
    }
}
