//! Small expression parsers: linear class expressions (`3D-E1-E2`, `c1+2F`)
//! and closed-form integer expressions in the registry variables `b` and `s`
//! (`2^(2*b+2-s)`, `(-1)^(b+1)*2^(b+1)`).

use num_bigint::BigInt;
use num_traits::{One, Signed};

use crate::{Error, Result};

/// One additive term of a linear class expression.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearTerm {
    pub coefficient: BigInt,
    /// `None` for a bare integer term.
    pub symbol: Option<String>,
    /// Symbolic multiplier, as the `b` in `b*F`. Registry patterns use it;
    /// concrete class expressions reject it.
    pub param: Option<String>,
}

struct Scanner<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
}

impl<'a> Scanner<'a> {
    fn new(s: &'a str) -> Self {
        Scanner { chars: s.chars().peekable() }
    }

    fn skip_ws(&mut self) {
        while matches!(self.chars.peek(), Some(c) if c.is_whitespace()) {
            self.chars.next();
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.next()
    }

    fn number(&mut self) -> BigInt {
        let mut digits = String::new();
        while matches!(self.chars.peek(), Some(c) if c.is_ascii_digit()) {
            digits.push(self.chars.next().unwrap());
        }
        digits.parse().expect("digit run parses as integer")
    }

    fn ident(&mut self) -> String {
        let mut name = String::new();
        while matches!(self.chars.peek(), Some(c) if c.is_ascii_alphanumeric() || *c == '_') {
            name.push(self.chars.next().unwrap());
        }
        name
    }
}

/// Parse `± k? '*'? symbol | ± k` terms joined by `+`/`-`.
pub fn parse_linear_expression(input: &str) -> Result<Vec<LinearTerm>> {
    let mut sc = Scanner::new(input);
    let mut terms = Vec::new();
    let mut first = true;
    loop {
        let mut sign = BigInt::one();
        match sc.peek() {
            None if first => return Err(Error::Parse("empty class expression".into())),
            None => break,
            Some('+') => {
                sc.bump();
            }
            Some('-') => {
                sc.bump();
                sign = -sign;
            }
            Some(_) if first => {}
            Some(c) => {
                return Err(Error::Parse(format!("expected + or - before `{c}` in `{input}`")))
            }
        }
        first = false;
        let mut coef = sign;
        let mut symbol = None;
        match sc.peek() {
            Some(c) if c.is_ascii_digit() => {
                coef *= sc.number();
                if sc.peek() == Some('*') {
                    sc.bump();
                }
                match sc.peek() {
                    Some(c) if c.is_ascii_alphabetic() => symbol = Some(sc.ident()),
                    _ => {}
                }
            }
            Some(c) if c.is_ascii_alphabetic() => symbol = Some(sc.ident()),
            other => {
                return Err(Error::Parse(format!(
                    "unexpected token {other:?} in class expression `{input}`"
                )))
            }
        }
        // a symbol may itself multiply a second symbol, as in `b*F`
        let mut param = None;
        if symbol.is_some() && sc.peek() == Some('*') {
            sc.bump();
            match sc.peek() {
                Some(c) if c.is_ascii_alphabetic() => {
                    param = symbol;
                    symbol = Some(sc.ident());
                }
                other => {
                    return Err(Error::Parse(format!(
                        "unexpected token {other:?} after `*` in `{input}`"
                    )))
                }
            }
        }
        terms.push(LinearTerm { coefficient: coef, symbol, param });
    }
    if terms.is_empty() {
        return Err(Error::Parse("empty class expression".into()));
    }
    Ok(terms)
}

/// Arithmetic expression in integer variables, with `+  -  *  ^` and parentheses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ValueExpr {
    Const(BigInt),
    Var(String),
    Neg(Box<ValueExpr>),
    Add(Box<ValueExpr>, Box<ValueExpr>),
    Sub(Box<ValueExpr>, Box<ValueExpr>),
    Mul(Box<ValueExpr>, Box<ValueExpr>),
    Pow(Box<ValueExpr>, Box<ValueExpr>),
}

impl ValueExpr {
    pub fn parse(input: &str) -> Result<ValueExpr> {
        let mut sc = Scanner::new(input);
        let e = parse_sum(&mut sc, input)?;
        if sc.peek().is_some() {
            return Err(Error::Parse(format!("trailing input in value expression `{input}`")));
        }
        Ok(e)
    }

    pub fn eval(&self, vars: &[(&str, i64)]) -> Result<BigInt> {
        match self {
            ValueExpr::Const(c) => Ok(c.clone()),
            ValueExpr::Var(name) => vars
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, v)| BigInt::from(*v))
                .ok_or_else(|| Error::Parse(format!("unbound variable `{name}`"))),
            ValueExpr::Neg(e) => Ok(-e.eval(vars)?),
            ValueExpr::Add(a, b) => Ok(a.eval(vars)? + b.eval(vars)?),
            ValueExpr::Sub(a, b) => Ok(a.eval(vars)? - b.eval(vars)?),
            ValueExpr::Mul(a, b) => Ok(a.eval(vars)? * b.eval(vars)?),
            ValueExpr::Pow(a, b) => {
                let base = a.eval(vars)?;
                let exp = b.eval(vars)?;
                pow_int(&base, &exp)
            }
        }
    }
}

/// base^exp with integer exponent; negative exponents are only defined for ±1.
pub fn pow_int(base: &BigInt, exp: &BigInt) -> Result<BigInt> {
    if exp.is_negative() {
        if base.abs().is_one() {
            let odd = (exp % 2i32).abs().is_one();
            return Ok(if base.is_negative() && odd { -BigInt::one() } else { base.abs() });
        }
        return Err(Error::Validation(format!("negative exponent {exp} for base {base}")));
    }
    let e = u32::try_from(exp)
        .map_err(|_| Error::Validation(format!("exponent {exp} too large")))?;
    Ok(base.pow(e))
}

fn parse_sum(sc: &mut Scanner, input: &str) -> Result<ValueExpr> {
    let mut acc = parse_product(sc, input)?;
    loop {
        match sc.peek() {
            Some('+') => {
                sc.bump();
                let rhs = parse_product(sc, input)?;
                acc = ValueExpr::Add(Box::new(acc), Box::new(rhs));
            }
            Some('-') => {
                sc.bump();
                let rhs = parse_product(sc, input)?;
                acc = ValueExpr::Sub(Box::new(acc), Box::new(rhs));
            }
            _ => return Ok(acc),
        }
    }
}

fn parse_product(sc: &mut Scanner, input: &str) -> Result<ValueExpr> {
    let mut acc = parse_power(sc, input)?;
    while sc.peek() == Some('*') {
        sc.bump();
        let rhs = parse_power(sc, input)?;
        acc = ValueExpr::Mul(Box::new(acc), Box::new(rhs));
    }
    Ok(acc)
}

fn parse_power(sc: &mut Scanner, input: &str) -> Result<ValueExpr> {
    let base = parse_atom(sc, input)?;
    if sc.peek() == Some('^') {
        sc.bump();
        // right-associative
        let exp = parse_power(sc, input)?;
        return Ok(ValueExpr::Pow(Box::new(base), Box::new(exp)));
    }
    Ok(base)
}

fn parse_atom(sc: &mut Scanner, input: &str) -> Result<ValueExpr> {
    match sc.peek() {
        Some('(') => {
            sc.bump();
            let e = parse_sum(sc, input)?;
            if sc.bump() != Some(')') {
                return Err(Error::Parse(format!("missing `)` in `{input}`")));
            }
            Ok(e)
        }
        Some('-') => {
            sc.bump();
            Ok(ValueExpr::Neg(Box::new(parse_atom(sc, input)?)))
        }
        Some(c) if c.is_ascii_digit() => {
            sc.skip_ws();
            Ok(ValueExpr::Const(sc.number()))
        }
        Some(c) if c.is_ascii_alphabetic() => {
            sc.skip_ws();
            Ok(ValueExpr::Var(sc.ident()))
        }
        other => Err(Error::Parse(format!("unexpected token {other:?} in `{input}`"))),
    }
}
