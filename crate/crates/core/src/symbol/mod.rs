//! Operator symbols `P(x,ξ) = Σ a_α(x) ξ^α` and the expression language for
//! their coefficients.

mod expr;
mod parser;

pub use expr::CoefExpr;
pub use parser::{parse_operator, ParseError, ParseErrorKind};

use crate::rational::Rat;
use num::complex::Complex64;
use num::Zero;
use std::fmt;

/// Exponent multi-index in `ℤ₊ⁿ`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    pub fn unit(n: usize, axis: usize, order: u32) -> Self {
        let mut v = vec![0; n];
        v[axis] = order;
        MultiIndex(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Total order `|α| = Σ α_j`.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&a| a == 0)
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    /// Componentwise `self ≤ other`.
    pub fn leq(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// Exact dot product with a rational vector.
    pub fn dot_rat(&self, a: &[Rat]) -> Rat {
        self.0
            .iter()
            .zip(a)
            .map(|(&ai, r)| Rat::from_integer(ai.into()) * r)
            .fold(Rat::zero(), |acc, x| acc + x)
    }

    pub fn dot_f64(&self, a: &[f64]) -> f64 {
        self.0.iter().zip(a).map(|(&ai, &r)| ai as f64 * r).sum()
    }

    /// `ξ^α` as a float.
    pub fn monomial(&self, xi: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(xi)
            .map(|(&a, &x)| x.powi(a as i32))
            .product()
    }

    /// Falling factorial `Π_j γ_j (γ_j-1) … (γ_j-β_j+1)` for `∂_ξ^β ξ^γ`.
    /// Zero when `β ≰ γ`.
    pub fn falling_factorial(&self, beta: &MultiIndex) -> f64 {
        let mut f = 1.0;
        for (&g, &b) in self.0.iter().zip(&beta.0) {
            if b > g {
                return 0.0;
            }
            for k in 0..b {
                f *= (g - k) as f64;
            }
        }
        f
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

/// One term `a_α(x) ξ^α` of an operator symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coef: CoefExpr,
    pub alpha: MultiIndex,
}

/// A differential operator symbol in normalized form: a sum of terms with
/// pairwise distinct exponents and coefficients that are not symbolically
/// zero. Terms are kept sorted by exponent for deterministic output.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSymbol {
    n: usize,
    terms: Vec<Term>,
}

impl OperatorSymbol {
    /// Builds a normalized symbol: merges duplicate exponents and prunes
    /// coefficients that vanish at the fixed zero-test sample points.
    pub fn new(n: usize, raw_terms: Vec<(CoefExpr, MultiIndex)>) -> Self {
        let mut map: std::collections::BTreeMap<MultiIndex, CoefExpr> =
            std::collections::BTreeMap::new();
        for (coef, alpha) in raw_terms {
            debug_assert_eq!(alpha.len(), n);
            match map.remove(&alpha) {
                Some(existing) => {
                    map.insert(alpha, CoefExpr::add(existing, coef));
                }
                None => {
                    map.insert(alpha, coef);
                }
            }
        }
        let terms = map
            .into_iter()
            .filter(|(_, coef)| !coef.is_symbolically_zero(n))
            .map(|(alpha, coef)| Term { coef, alpha })
            .collect();
        OperatorSymbol { n, terms }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// True when no coefficient mentions an `x` variable.
    pub fn is_constant_coefficient(&self) -> bool {
        self.terms.iter().all(|t| !t.coef.mentions_variable())
    }

    /// `P(x,ξ) = Σ a_α(x) ξ^α`.
    pub fn eval(&self, x: &[f64], xi: &[f64]) -> Complex64 {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(xi.len(), self.n);
        self.terms
            .iter()
            .map(|t| t.coef.eval(x) * t.alpha.monomial(xi))
            .sum()
    }

    /// Symbol with every coefficient replaced by its mixed partial `∂_x^α`.
    /// Terms whose differentiated coefficient vanishes are dropped.
    pub fn x_derivative(&self, alpha: &MultiIndex) -> OperatorSymbol {
        let terms = self
            .terms
            .iter()
            .map(|t| (t.coef.diff_multi(alpha), t.alpha.clone()))
            .collect();
        OperatorSymbol::new(self.n, terms)
    }

    /// `Σ_γ a_γ(x) ∂_ξ^β(ξ^γ)` evaluated at `(x,ξ)`.
    pub fn eval_xi_derivative(&self, beta: &MultiIndex, x: &[f64], xi: &[f64]) -> Complex64 {
        self.terms
            .iter()
            .filter_map(|t| {
                let ff = t.alpha.falling_factorial(beta);
                if ff == 0.0 {
                    return None;
                }
                let shifted = MultiIndex(
                    t.alpha
                        .0
                        .iter()
                        .zip(&beta.0)
                        .map(|(g, b)| g - b)
                        .collect(),
                );
                Some(t.coef.eval(x) * ff * shifted.monomial(xi))
            })
            .sum()
    }

    /// Mixed derivative `∂_x^α ∂_ξ^β P` at `(x,ξ)`.
    pub fn eval_derivative(
        &self,
        alpha: &MultiIndex,
        beta: &MultiIndex,
        x: &[f64],
        xi: &[f64],
    ) -> Complex64 {
        self.x_derivative(alpha).eval_xi_derivative(beta, x, xi)
    }

    /// Scales every coefficient by a rational constant.
    pub fn scale(&self, factor: Rat) -> OperatorSymbol {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                (
                    CoefExpr::mul(CoefExpr::Const(factor.clone()), t.coef.clone()),
                    t.alpha.clone(),
                )
            })
            .collect();
        OperatorSymbol::new(self.n, terms)
    }

    /// Keeps only terms with exponents in `keep`.
    pub fn restrict_to(&self, keep: &[MultiIndex]) -> OperatorSymbol {
        let terms = self
            .terms
            .iter()
            .filter(|t| keep.contains(&t.alpha))
            .map(|t| (t.coef.clone(), t.alpha.clone()))
            .collect();
        OperatorSymbol::new(self.n, terms)
    }
}

impl fmt::Display for OperatorSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, term) in self.terms.iter().enumerate() {
            let (neg, body) = term_display(term);
            if i == 0 {
                if neg {
                    write!(f, "-{body}")?;
                } else {
                    write!(f, "{body}")?;
                }
            } else if neg {
                write!(f, " - {body}")?;
            } else {
                write!(f, " + {body}")?;
            }
        }
        Ok(())
    }
}

fn deriv_display(alpha: &MultiIndex) -> String {
    let mut parts = Vec::new();
    for (j, &a) in alpha.0.iter().enumerate() {
        if a == 1 {
            parts.push(format!("D{}", j + 1));
        } else if a > 1 {
            parts.push(format!("D{}^{}", j + 1, a));
        }
    }
    parts.join("*")
}

fn term_display(term: &Term) -> (bool, String) {
    let (neg, coef) = term.coef.split_sign();
    let body = if term.alpha.is_zero() {
        coef.display_with_parens(false)
    } else if coef.is_one() {
        deriv_display(&term.alpha)
    } else {
        format!(
            "{}*{}",
            coef.display_with_parens(true),
            deriv_display(&term.alpha)
        )
    };
    (neg, body)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat_int;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex(v.to_vec())
    }

    #[test]
    fn eval_laplacian() {
        let p = parse_operator("D1^2 + D2^2", 2).unwrap();
        let v = p.eval(&[0.0, 0.0], &[1.0, 1.0]);
        assert_eq!(v, Complex64::new(2.0, 0.0));
    }

    #[test]
    fn eval_heat_symbol() {
        let p = parse_operator("i*D1 + D2^2", 2).unwrap();
        let v = p.eval(&[0.0, 0.0], &[1.0, 1.0]);
        assert!((v - Complex64::new(1.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn eval_no_constant_term_at_zero() {
        let p = parse_operator("x1*D1 + sin(x2)*D2^3", 2).unwrap();
        let v = p.eval(&[0.7, -0.3], &[0.0, 0.0]);
        assert_eq!(v, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn xi_derivative_falling_factorial() {
        let p = parse_operator("D1^2 + D2^2", 2).unwrap();
        let v = p.eval_derivative(&mi(&[0, 0]), &mi(&[1, 0]), &[0.0, 0.0], &[3.0, 5.0]);
        assert_eq!(v.re, 6.0);
        assert_eq!(v.im, 0.0);
    }

    #[test]
    fn x_derivative_of_constant_coefficients() {
        let p = parse_operator("D1^2 + 3*D2", 2).unwrap();
        let d = p.x_derivative(&mi(&[1, 0]));
        assert!(d.is_zero());
    }

    #[test]
    fn mixed_derivative_x1_d1() {
        let p = parse_operator("x1*D1", 1).unwrap();
        let v = p.eval_derivative(&mi(&[1]), &mi(&[1]), &[2.0], &[7.0]);
        assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn derivative_at_zero_orders_is_eval() {
        let p = parse_operator("x1*D1 + cos(x2)*D2^2 + 5", 2).unwrap();
        let x = [0.3, -0.8];
        let xi = [1.7, 2.9];
        let a = p.eval(&x, &xi);
        let b = p.eval_derivative(&mi(&[0, 0]), &mi(&[0, 0]), &x, &xi);
        assert_eq!(a, b);
    }

    #[test]
    fn normalization_merges_and_prunes() {
        let p = parse_operator("D1 + D1 + 0*D2", 2).unwrap();
        assert_eq!(p.terms().len(), 1);
        assert_eq!(p.terms()[0].alpha, mi(&[1, 0]));
        let v = p.eval(&[0.0, 0.0], &[1.0, 0.0]);
        assert_eq!(v.re, 2.0);
    }

    #[test]
    fn scale_by_rational() {
        let p = parse_operator("D1^2", 1).unwrap();
        let q = p.scale(rat_int(-3));
        let v = q.eval(&[0.0], &[2.0]);
        assert_eq!(v.re, -12.0);
    }

    #[test]
    fn display_round_trip_structural() {
        let p = parse_operator("2*D1^2 - sin(x1)*D2 + 1/2", 2).unwrap();
        let printed = p.to_string();
        let q = parse_operator(&printed, 2).unwrap();
        assert_eq!(p, q);
    }
}
