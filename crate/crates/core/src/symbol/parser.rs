//! Recursive-descent parser for the operator expression language.
//!
//! ```text
//! operator := sum
//! sum      := product (("+"|"-") product)*
//! product  := factor ("*" factor)*
//! factor   := atom ("^" nat)? | deriv
//! deriv    := "D" nat ("^" nat)? | "D^(" nat ("," nat)* ")"
//! atom     := number | "i" | "x" nat
//!           | ("sin"|"cos"|"exp") "(" sum ")" | "(" sum ")"
//! number   := decimal | nat "/" nat
//! ```
//!
//! Whitespace is insignificant. A leading unary minus is accepted on any
//! factor. Products must list coefficient factors before derivative factors;
//! `D1*x1` is rejected rather than normalized by operator composition.

use super::expr::CoefExpr;
use super::{MultiIndex, OperatorSymbol};
use crate::rational::Rat;
use num::bigint::BigInt;
use num::Zero;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    IndexOutOfRange { index: usize, dim: usize },
    DerivBeforeCoefficient,
    DerivInsideFunction,
    PowerOfDerivative,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub pos: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ParseErrorKind::Syntax(msg) => write!(f, "syntax error at byte {}: {}", self.pos, msg),
            ParseErrorKind::IndexOutOfRange { index, dim } => write!(
                f,
                "index out of range at byte {}: {} exceeds dimension {}",
                self.pos, index, dim
            ),
            ParseErrorKind::DerivBeforeCoefficient => write!(
                f,
                "at byte {}: derivative factor precedes a coefficient factor \
                 (write coefficients before derivatives)",
                self.pos
            ),
            ParseErrorKind::DerivInsideFunction => write!(
                f,
                "at byte {}: derivative factors are not allowed inside function arguments",
                self.pos
            ),
            ParseErrorKind::PowerOfDerivative => write!(
                f,
                "at byte {}: a parenthesized expression containing derivatives \
                 cannot be raised to a power",
                self.pos
            ),
        }
    }
}

type TermList = Vec<(CoefExpr, MultiIndex)>;

/// Parses `text` into a normalized operator symbol in dimension `n`.
pub fn parse_operator(text: &str, n: usize) -> Result<OperatorSymbol, ParseError> {
    if n == 0 {
        return Err(ParseError {
            pos: 0,
            kind: ParseErrorKind::Syntax("dimension must be positive".into()),
        });
    }
    let mut p = Parser {
        bytes: text.as_bytes(),
        pos: 0,
        n,
    };
    let terms = p.parse_sum()?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return Err(p.syntax("unexpected trailing input"));
    }
    Ok(OperatorSymbol::new(n, terms))
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    n: usize,
}

impl<'a> Parser<'a> {
    fn syntax(&self, msg: &str) -> ParseError {
        ParseError {
            pos: self.pos,
            kind: ParseErrorKind::Syntax(msg.into()),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.syntax(&format!("expected '{}'", c as char)))
        }
    }

    fn parse_sum(&mut self) -> Result<TermList, ParseError> {
        let mut terms = self.parse_product()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    terms.extend(self.parse_product()?);
                }
                Some(b'-') => {
                    self.pos += 1;
                    let rhs = self.parse_product()?;
                    terms.extend(rhs.into_iter().map(|(c, a)| (c.neg(), a)));
                }
                _ => return Ok(terms),
            }
        }
    }

    fn parse_product(&mut self) -> Result<TermList, ParseError> {
        let mut acc = self.parse_factor()?;
        loop {
            self.skip_ws();
            if !self.eat(b'*') {
                return Ok(acc);
            }
            self.skip_ws();
            let factor_pos = self.pos;
            let factor = self.parse_factor()?;
            acc = mul_term_lists(acc, factor, factor_pos)?;
        }
    }

    fn parse_factor(&mut self) -> Result<TermList, ParseError> {
        self.skip_ws();
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                let inner = self.parse_factor()?;
                Ok(inner.into_iter().map(|(c, a)| (c.neg(), a)).collect())
            }
            Some(b'(') => {
                self.pos += 1;
                let inner = self.parse_sum()?;
                self.skip_ws();
                self.expect(b')')?;
                self.parse_optional_power(inner)
            }
            Some(c) if c.is_ascii_digit() => {
                let num = self.parse_number()?;
                let list = vec![(num, MultiIndex::zero(self.n))];
                self.parse_optional_power(list)
            }
            Some(c) if c.is_ascii_alphabetic() => self.parse_ident(),
            Some(c) => Err(self.syntax(&format!("unexpected character '{}'", c as char))),
            None => Err(self.syntax("unexpected end of input")),
        }
    }

    /// `^ nat` after an atom. The base must be derivative-free.
    fn parse_optional_power(&mut self, base: TermList) -> Result<TermList, ParseError> {
        self.skip_ws();
        if !self.eat(b'^') {
            return Ok(base);
        }
        let pow_pos = self.pos - 1;
        let k = self.parse_nat()?;
        let expr = term_list_to_expr(base, pow_pos, ParseErrorKind::PowerOfDerivative)?;
        Ok(vec![(
            CoefExpr::pow(expr, k),
            MultiIndex::zero(self.n),
        )])
    }

    fn parse_ident(&mut self) -> Result<TermList, ParseError> {
        let start = self.pos;
        while self
            .peek()
            .map(|c| c.is_ascii_alphabetic())
            .unwrap_or(false)
        {
            self.pos += 1;
        }
        let word = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        match word {
            "D" => self.parse_deriv(start),
            "x" => {
                let axis = self.parse_axis_index(start)?;
                let var = CoefExpr::Var(axis);
                let list = vec![(var, MultiIndex::zero(self.n))];
                self.parse_optional_power(list)
            }
            "i" => Ok(vec![(CoefExpr::I, MultiIndex::zero(self.n))]),
            "sin" | "cos" | "exp" => {
                self.skip_ws();
                self.expect(b'(')?;
                let arg_pos = self.pos;
                let inner = self.parse_sum()?;
                self.skip_ws();
                self.expect(b')')?;
                let arg =
                    term_list_to_expr(inner, arg_pos, ParseErrorKind::DerivInsideFunction)?;
                let expr = match word {
                    "sin" => CoefExpr::Sin(Box::new(arg)),
                    "cos" => CoefExpr::Cos(Box::new(arg)),
                    _ => CoefExpr::Exp(Box::new(arg)),
                };
                let list = vec![(expr, MultiIndex::zero(self.n))];
                self.parse_optional_power(list)
            }
            _ => Err(ParseError {
                pos: start,
                kind: ParseErrorKind::Syntax(format!("unknown identifier '{word}'")),
            }),
        }
    }

    fn parse_deriv(&mut self, start: usize) -> Result<TermList, ParseError> {
        self.skip_ws();
        if self.peek() == Some(b'^') {
            // Multi-index form D^(a1,...,an).
            self.pos += 1;
            self.skip_ws();
            self.expect(b'(')?;
            let mut entries = Vec::new();
            loop {
                self.skip_ws();
                entries.push(self.parse_nat()?);
                self.skip_ws();
                if self.eat(b',') {
                    continue;
                }
                self.expect(b')')?;
                break;
            }
            if entries.len() != self.n {
                return Err(ParseError {
                    pos: start,
                    kind: ParseErrorKind::Syntax(format!(
                        "multi-index has {} entries but the dimension is {}",
                        entries.len(),
                        self.n
                    )),
                });
            }
            return Ok(vec![(CoefExpr::one(), MultiIndex(entries))]);
        }
        let axis = self.parse_axis_index(start)?;
        self.skip_ws();
        let order = if self.eat(b'^') { self.parse_nat()? } else { 1 };
        Ok(vec![(
            CoefExpr::one(),
            MultiIndex::unit(self.n, axis, order),
        )])
    }

    /// One-based axis index following `D` or `x`; returns the zero-based axis.
    fn parse_axis_index(&mut self, start: usize) -> Result<usize, ParseError> {
        let idx_pos = self.pos;
        let idx = self.parse_nat()? as usize;
        if idx == 0 || idx > self.n {
            return Err(ParseError {
                pos: if idx == 0 { idx_pos } else { start },
                kind: ParseErrorKind::IndexOutOfRange {
                    index: idx,
                    dim: self.n,
                },
            });
        }
        Ok(idx - 1)
    }

    fn parse_nat(&mut self) -> Result<u32, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.peek().map(|c| c.is_ascii_digit()).unwrap_or(false) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.syntax("expected a number"));
        }
        let digits = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        digits.parse::<u32>().map_err(|_| ParseError {
            pos: start,
            kind: ParseErrorKind::Syntax("number too large".into()),
        })
    }

    /// `nat`, `nat/nat` or `nat.digits`, folded into an exact rational.
    fn parse_number(&mut self) -> Result<CoefExpr, ParseError> {
        let int_digits = self.parse_digits()?;
        match self.peek() {
            Some(b'/') => {
                self.pos += 1;
                self.skip_ws();
                let den_pos = self.pos;
                let den_digits = self.parse_digits()?;
                let num: BigInt = int_digits.parse().unwrap();
                let den: BigInt = den_digits.parse().unwrap();
                if den.is_zero() {
                    return Err(ParseError {
                        pos: den_pos,
                        kind: ParseErrorKind::Syntax("zero denominator".into()),
                    });
                }
                Ok(CoefExpr::Const(Rat::new(num, den)))
            }
            Some(b'.') => {
                self.pos += 1;
                let frac_digits = self.parse_digits()?;
                let int: BigInt = int_digits.parse().unwrap();
                let frac: BigInt = frac_digits.parse().unwrap();
                let den = BigInt::from(10u32).pow(frac_digits.len() as u32);
                Ok(CoefExpr::Const(
                    Rat::from_integer(int) + Rat::new(frac, den),
                ))
            }
            _ => Ok(CoefExpr::Const(Rat::from_integer(
                int_digits.parse().unwrap(),
            ))),
        }
    }

    fn parse_digits(&mut self) -> Result<String, ParseError> {
        let start = self.pos;
        while self.peek().map(|c| c.is_ascii_digit()).unwrap_or(false) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.syntax("expected digits"));
        }
        Ok(std::str::from_utf8(&self.bytes[start..self.pos])
            .unwrap()
            .to_string())
    }
}

fn mul_term_lists(a: TermList, b: TermList, b_pos: usize) -> Result<TermList, ParseError> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for (ca, aa) in &a {
        for (cb, ab) in &b {
            if !aa.is_zero() && !cb.is_one() {
                return Err(ParseError {
                    pos: b_pos,
                    kind: ParseErrorKind::DerivBeforeCoefficient,
                });
            }
            out.push((CoefExpr::mul(ca.clone(), cb.clone()), aa.add(ab)));
        }
    }
    Ok(out)
}

fn term_list_to_expr(
    list: TermList,
    pos: usize,
    kind: ParseErrorKind,
) -> Result<CoefExpr, ParseError> {
    let mut acc = CoefExpr::zero();
    for (coef, alpha) in list {
        if !alpha.is_zero() {
            return Err(ParseError { pos, kind });
        }
        acc = CoefExpr::add(acc, coef);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat_int;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex(v.to_vec())
    }

    #[test]
    fn laplacian_terms() {
        let p = parse_operator("D1^2 + D2^2", 2).unwrap();
        let alphas: Vec<_> = p.terms().iter().map(|t| t.alpha.clone()).collect();
        assert_eq!(alphas, vec![mi(&[0, 2]), mi(&[2, 0])]);
        assert!(p.terms().iter().all(|t| t.coef.is_one()));
    }

    #[test]
    fn heat_terms() {
        let p = parse_operator("i*D1 + D2^2", 2).unwrap();
        assert_eq!(p.terms().len(), 2);
        let first = p.terms().iter().find(|t| t.alpha == mi(&[1, 0])).unwrap();
        assert_eq!(first.coef, CoefExpr::I);
    }

    #[test]
    fn deriv_before_coefficient_rejected() {
        let err = parse_operator("D1*x1", 1).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::DerivBeforeCoefficient);
        let err = parse_operator("D1*2", 1).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::DerivBeforeCoefficient);
        assert!(parse_operator("x1*D1*D2", 2).is_ok());
    }

    #[test]
    fn index_out_of_range() {
        let err = parse_operator("D3", 2).unwrap_err();
        assert_eq!(
            err.kind,
            ParseErrorKind::IndexOutOfRange { index: 3, dim: 2 }
        );
        let err = parse_operator("x5*D1", 2).unwrap_err();
        assert_eq!(
            err.kind,
            ParseErrorKind::IndexOutOfRange { index: 5, dim: 2 }
        );
    }

    #[test]
    fn syntax_error_carries_position() {
        let err = parse_operator("D1 + @", 1).unwrap_err();
        assert_eq!(err.pos, 5);
        assert!(matches!(err.kind, ParseErrorKind::Syntax(_)));
    }

    #[test]
    fn multi_index_form() {
        let p = parse_operator("D^(1,2)", 2).unwrap();
        assert_eq!(p.terms()[0].alpha, mi(&[1, 2]));
        assert!(parse_operator("D^(1,2)", 3).is_err());
    }

    #[test]
    fn numbers_exact() {
        let p = parse_operator("2.5*D1 + 1/3", 1).unwrap();
        let c = p
            .terms()
            .iter()
            .find(|t| t.alpha == mi(&[1]))
            .unwrap()
            .coef
            .clone();
        assert_eq!(c, CoefExpr::Const(crate::rational::rat(5, 2)));
    }

    #[test]
    fn derivative_inside_function_rejected() {
        let err = parse_operator("sin(D1)", 1).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::DerivInsideFunction);
    }

    #[test]
    fn power_of_derivative_sum_rejected() {
        let err = parse_operator("(D1 + D2)^2", 2).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::PowerOfDerivative);
        // A derivative-free parenthesized power is a plain coefficient.
        let p = parse_operator("(x1 + 1)^2*D1", 1).unwrap();
        assert_eq!(p.terms().len(), 1);
    }

    #[test]
    fn zero_terms_pruned() {
        let p = parse_operator("0*D1 + D2", 2).unwrap();
        assert_eq!(p.terms().len(), 1);
        assert_eq!(p.terms()[0].alpha, mi(&[0, 1]));
    }

    #[test]
    fn unary_minus_and_constants() {
        let p = parse_operator("-D1 + 2", 1).unwrap();
        let d = p.terms().iter().find(|t| t.alpha == mi(&[1])).unwrap();
        assert_eq!(d.coef, CoefExpr::Const(rat_int(-1)));
        let c = p.terms().iter().find(|t| t.alpha == mi(&[0])).unwrap();
        assert_eq!(c.coef, CoefExpr::Const(rat_int(2)));
    }

    #[test]
    fn whitespace_insensitive() {
        let a = parse_operator("x1 * D1 ^ 2 + sin( x1 ) * D2", 2).unwrap();
        let b = parse_operator("x1*D1^2+sin(x1)*D2", 2).unwrap();
        assert_eq!(a, b);
    }
}
