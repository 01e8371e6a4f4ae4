//! Coefficient expressions: closed-form functions of `x_1..x_n` built from
//! rationals, the imaginary unit, `{+, -, *, ^}` and `{sin, cos, exp}`.
//!
//! Every expression in this class is entire in each variable, so it belongs
//! to every Gevrey class with index ≥ 1; the class is also closed under
//! differentiation, which keeps symbol derivatives exact.

use crate::rational::{rat_to_f64, Rat};
use crate::symbol::MultiIndex;
use num::complex::Complex64;
use num::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;

/// Seed of the fixed sample sequence used for symbolic-zero detection.
const ZERO_TEST_SEED: u64 = 0x6e77_746f_6e5f_7a74;
const ZERO_TEST_POINTS: usize = 20;
const ZERO_TEST_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub enum CoefExpr {
    Const(Rat),
    /// The imaginary unit.
    I,
    /// `x_{index+1}` (zero-based storage, one-based surface syntax).
    Var(usize),
    Add(Box<CoefExpr>, Box<CoefExpr>),
    Sub(Box<CoefExpr>, Box<CoefExpr>),
    Mul(Box<CoefExpr>, Box<CoefExpr>),
    Pow(Box<CoefExpr>, u32),
    Sin(Box<CoefExpr>),
    Cos(Box<CoefExpr>),
    Exp(Box<CoefExpr>),
}

impl CoefExpr {
    pub fn zero() -> Self {
        CoefExpr::Const(Rat::zero())
    }

    pub fn one() -> Self {
        CoefExpr::Const(Rat::one())
    }

    pub fn is_zero_literal(&self) -> bool {
        matches!(self, CoefExpr::Const(r) if r.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self, CoefExpr::Const(r) if r.is_one())
    }

    /// Constructors with the light folding needed to keep derivatives small.
    pub fn add(a: CoefExpr, b: CoefExpr) -> CoefExpr {
        match (a, b) {
            (a, b) if a.is_zero_literal() => b,
            (a, b) if b.is_zero_literal() => a,
            (CoefExpr::Const(x), CoefExpr::Const(y)) => CoefExpr::Const(x + y),
            (a, b) => CoefExpr::Add(Box::new(a), Box::new(b)),
        }
    }

    pub fn sub(a: CoefExpr, b: CoefExpr) -> CoefExpr {
        match (a, b) {
            (a, b) if b.is_zero_literal() => a,
            (CoefExpr::Const(x), CoefExpr::Const(y)) => CoefExpr::Const(x - y),
            (a, b) => CoefExpr::Sub(Box::new(a), Box::new(b)),
        }
    }

    pub fn mul(a: CoefExpr, b: CoefExpr) -> CoefExpr {
        match (a, b) {
            (a, _) if a.is_zero_literal() => CoefExpr::zero(),
            (_, b) if b.is_zero_literal() => CoefExpr::zero(),
            (a, b) if a.is_one() => b,
            (a, b) if b.is_one() => a,
            (CoefExpr::Const(x), CoefExpr::Const(y)) => CoefExpr::Const(x * y),
            (a, b) => CoefExpr::Mul(Box::new(a), Box::new(b)),
        }
    }

    pub fn pow(base: CoefExpr, k: u32) -> CoefExpr {
        match k {
            0 => CoefExpr::one(),
            1 => base,
            _ => match base {
                CoefExpr::Const(r) => {
                    CoefExpr::Const(num::pow::pow(r, k as usize))
                }
                base => CoefExpr::Pow(Box::new(base), k),
            },
        }
    }

    /// Negation that `split_sign` can invert exactly.
    pub fn neg(self) -> CoefExpr {
        match self {
            CoefExpr::Const(r) => CoefExpr::Const(-r),
            CoefExpr::Mul(a, b) => match *a {
                CoefExpr::Const(r) => CoefExpr::mul(CoefExpr::Const(-r), *b),
                a => CoefExpr::Mul(
                    Box::new(CoefExpr::Const(-Rat::one())),
                    Box::new(CoefExpr::Mul(Box::new(a), b)),
                ),
            },
            e => CoefExpr::Mul(Box::new(CoefExpr::Const(-Rat::one())), Box::new(e)),
        }
    }

    /// Splits a leading negative constant off the expression, for printing.
    /// Returns `(true, -self)` when the leading constant is negative.
    pub fn split_sign(&self) -> (bool, CoefExpr) {
        let neg = match self {
            CoefExpr::Const(r) => r.is_negative(),
            CoefExpr::Mul(a, _) => matches!(&**a, CoefExpr::Const(r) if r.is_negative()),
            _ => false,
        };
        if neg {
            (true, self.clone().neg())
        } else {
            (false, self.clone())
        }
    }

    /// Evaluation at a real point; the result is complex because of `i`.
    pub fn eval(&self, x: &[f64]) -> Complex64 {
        match self {
            CoefExpr::Const(r) => Complex64::new(rat_to_f64(r), 0.0),
            CoefExpr::I => Complex64::new(0.0, 1.0),
            CoefExpr::Var(j) => Complex64::new(x[*j], 0.0),
            CoefExpr::Add(a, b) => a.eval(x) + b.eval(x),
            CoefExpr::Sub(a, b) => a.eval(x) - b.eval(x),
            CoefExpr::Mul(a, b) => a.eval(x) * b.eval(x),
            CoefExpr::Pow(a, k) => a.eval(x).powu(*k),
            CoefExpr::Sin(a) => a.eval(x).sin(),
            CoefExpr::Cos(a) => a.eval(x).cos(),
            CoefExpr::Exp(a) => a.eval(x).exp(),
        }
    }

    /// Exact partial derivative with respect to `x_{var+1}`.
    pub fn diff(&self, var: usize) -> CoefExpr {
        match self {
            CoefExpr::Const(_) | CoefExpr::I => CoefExpr::zero(),
            CoefExpr::Var(j) => {
                if *j == var {
                    CoefExpr::one()
                } else {
                    CoefExpr::zero()
                }
            }
            CoefExpr::Add(a, b) => CoefExpr::add(a.diff(var), b.diff(var)),
            CoefExpr::Sub(a, b) => CoefExpr::sub(a.diff(var), b.diff(var)),
            CoefExpr::Mul(a, b) => CoefExpr::add(
                CoefExpr::mul(a.diff(var), (**b).clone()),
                CoefExpr::mul((**a).clone(), b.diff(var)),
            ),
            CoefExpr::Pow(a, k) => CoefExpr::mul(
                CoefExpr::mul(
                    CoefExpr::Const(Rat::from_integer((*k).into())),
                    CoefExpr::pow((**a).clone(), k - 1),
                ),
                a.diff(var),
            ),
            CoefExpr::Sin(a) => CoefExpr::mul(CoefExpr::Cos(a.clone()), a.diff(var)),
            CoefExpr::Cos(a) => {
                CoefExpr::mul(CoefExpr::Sin(a.clone()), a.diff(var)).neg()
            }
            CoefExpr::Exp(a) => CoefExpr::mul(CoefExpr::Exp(a.clone()), a.diff(var)),
        }
    }

    /// Mixed partial `∂^α`.
    pub fn diff_multi(&self, alpha: &MultiIndex) -> CoefExpr {
        let mut e = self.clone();
        for (var, &k) in alpha.0.iter().enumerate() {
            for _ in 0..k {
                e = e.diff(var);
                if e.is_zero_literal() {
                    return e;
                }
            }
        }
        e
    }

    pub fn mentions_variable(&self) -> bool {
        match self {
            CoefExpr::Const(_) | CoefExpr::I => false,
            CoefExpr::Var(_) => true,
            CoefExpr::Add(a, b) | CoefExpr::Sub(a, b) | CoefExpr::Mul(a, b) => {
                a.mentions_variable() || b.mentions_variable()
            }
            CoefExpr::Pow(a, _) | CoefExpr::Sin(a) | CoefExpr::Cos(a) | CoefExpr::Exp(a) => {
                a.mentions_variable()
            }
        }
    }

    /// Numeric zero test: evaluates at a fixed seeded sample of points in
    /// `[-1,1]^n` and declares zero when every value is below 1e-13. Exact
    /// zero testing of this expression class is not needed at desk scale;
    /// the fixed seed keeps the decision deterministic.
    pub fn is_symbolically_zero(&self, n: usize) -> bool {
        if self.is_zero_literal() {
            return true;
        }
        if !self.mentions_variable() {
            return self.eval(&vec![0.0; n.max(1)]).norm() < ZERO_TEST_TOL;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(ZERO_TEST_SEED);
        let mut x = vec![0.0; n];
        for _ in 0..ZERO_TEST_POINTS {
            for xj in x.iter_mut() {
                *xj = rng.gen_range(-1.0..1.0);
            }
            if self.eval(&x).norm() >= ZERO_TEST_TOL {
                return false;
            }
        }
        true
    }

    fn precedence(&self) -> u8 {
        match self {
            CoefExpr::Add(..) | CoefExpr::Sub(..) => 1,
            CoefExpr::Mul(..) => 2,
            CoefExpr::Pow(..) => 3,
            CoefExpr::Const(r) if r.is_negative() => 2,
            _ => 4,
        }
    }

    /// Renders the expression; wraps it in parentheses when it would bind
    /// weaker than a product around it.
    pub fn display_with_parens(&self, in_product: bool) -> String {
        let s = self.to_string();
        if in_product && self.precedence() < 2 {
            format!("({s})")
        } else {
            s
        }
    }
}

impl fmt::Display for CoefExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoefExpr::Const(r) => write!(f, "{}", crate::rational::rat_to_string(r)),
            CoefExpr::I => write!(f, "i"),
            CoefExpr::Var(j) => write!(f, "x{}", j + 1),
            CoefExpr::Add(a, b) => write!(f, "{a} + {b}"),
            CoefExpr::Sub(a, b) => {
                let rhs = b.display_with_parens(true);
                write!(f, "{a} - {rhs}")
            }
            CoefExpr::Mul(a, b) => {
                let lhs = a.display_with_parens(true);
                let rhs = if b.precedence() <= 2 {
                    format!("({b})")
                } else {
                    b.to_string()
                };
                write!(f, "{lhs}*{rhs}")
            }
            CoefExpr::Pow(a, k) => {
                let base = if a.precedence() < 4 {
                    format!("({a})")
                } else {
                    a.to_string()
                };
                write!(f, "{base}^{k}")
            }
            CoefExpr::Sin(a) => write!(f, "sin({a})"),
            CoefExpr::Cos(a) => write!(f, "cos({a})"),
            CoefExpr::Exp(a) => write!(f, "exp({a})"),
        }
    }
}
