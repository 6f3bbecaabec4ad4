//! Exact expression arithmetic over rationals.
//!
//! Powers the calculator tool and every task verifier: parsing is strict
//! (no implicit multiplication, no trailing input) and evaluation is exact
//! rational arithmetic with integer exponents. Variables may carry a
//! subscript (`a_n`, `a_{n+1}`, `b_1`) which is itself an expression that
//! must evaluate to an integer index.

use crate::error::ExprError;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// A variable reference: plain (`n`) or subscripted (`a_n`, `a_{n+1}`).
#[derive(Debug, Clone, PartialEq)]
pub struct VarRef {
    pub name: String,
    pub index: Option<Box<Expr>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(BigRational),
    Var(VarRef),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

/// An equation `lhs = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Equation {
    pub lhs: Expr,
    pub rhs: Expr,
}

/// Resolves variables during evaluation. `index` is `None` for plain
/// variables like `n`.
pub trait VarEnv {
    fn resolve(&self, name: &str, index: Option<&BigInt>) -> Option<BigRational>;
}

/// Environment that binds nothing; evaluation fails on any variable.
pub struct NoVars;

impl VarEnv for NoVars {
    fn resolve(&self, _: &str, _: Option<&BigInt>) -> Option<BigRational> {
        None
    }
}

impl<F> VarEnv for F
where
    F: Fn(&str, Option<&BigInt>) -> Option<BigRational>,
{
    fn resolve(&self, name: &str, index: Option<&BigInt>) -> Option<BigRational> {
        self(name, index)
    }
}

const MAX_EXPONENT: i64 = 4096;

impl Expr {
    pub fn eval(&self, env: &dyn VarEnv) -> Result<BigRational, ExprError> {
        match self {
            Expr::Num(r) => Ok(r.clone()),
            Expr::Var(v) => {
                let index = match &v.index {
                    None => None,
                    Some(ix) => {
                        let val = ix.eval(env)?;
                        if !val.is_integer() {
                            return Err(ExprError::Malformed(format!(
                                "subscript of {} is not an integer",
                                v.name
                            )));
                        }
                        Some(val.to_integer())
                    }
                };
                env.resolve(&v.name, index.as_ref())
                    .ok_or_else(|| ExprError::UnboundVariable(v.render()))
            }
            Expr::Neg(e) => Ok(-e.eval(env)?),
            Expr::Bin(op, a, b) => {
                let x = a.eval(env)?;
                match op {
                    BinOp::Add => Ok(x + b.eval(env)?),
                    BinOp::Sub => Ok(x - b.eval(env)?),
                    BinOp::Mul => Ok(x * b.eval(env)?),
                    BinOp::Div => {
                        let y = b.eval(env)?;
                        if y.is_zero() {
                            return Err(ExprError::DivideByZero);
                        }
                        Ok(x / y)
                    }
                    BinOp::Pow => {
                        let e = b.eval(env)?;
                        if !e.is_integer() {
                            return Err(ExprError::NonIntegerExponent(render_rational(&e)));
                        }
                        let e = e
                            .to_integer()
                            .to_i64()
                            .filter(|k| k.abs() <= MAX_EXPONENT)
                            .ok_or_else(|| ExprError::ExponentRange(render_rational(&e)))?;
                        pow_rational(&x, e)
                    }
                }
            }
        }
    }

    /// Names of all variables referenced, subscripts flattened away.
    pub fn variable_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(v) => {
                out.push(v.name.clone());
                if let Some(ix) = &v.index {
                    ix.collect_vars(out);
                }
            }
            Expr::Neg(e) => e.collect_vars(out),
            Expr::Bin(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }
}

fn pow_rational(base: &BigRational, exp: i64) -> Result<BigRational, ExprError> {
    if exp == 0 {
        return Ok(BigRational::one());
    }
    if base.is_zero() {
        if exp < 0 {
            return Err(ExprError::DivideByZero);
        }
        return Ok(BigRational::zero());
    }
    let mut acc = BigRational::one();
    for _ in 0..exp.unsigned_abs() {
        acc *= base;
    }
    if exp < 0 {
        acc = acc.recip();
    }
    Ok(acc)
}

impl VarRef {
    fn render(&self) -> String {
        match &self.index {
            None => self.name.clone(),
            Some(ix) => format!("{}_{{{}}}", self.name, ix),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(r) => write!(f, "{}", render_rational(r)),
            Expr::Var(v) => write!(f, "{}", v.render()),
            Expr::Neg(e) => write!(f, "-({e})"),
            Expr::Bin(op, a, b) => {
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({a} {sym} {b})")
            }
        }
    }
}

/// Renders a rational canonically: integers bare, otherwise `p/q`.
pub fn render_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.to_integer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses a standalone rational written as an expression without variables
/// (accepts `-3`, `13/10`, `2.5`).
pub fn parse_rational(text: &str) -> Result<BigRational, ExprError> {
    parse_expr(text)?.eval(&NoVars)
}

/// Parses an expression; rejects trailing input.
pub fn parse_expr(text: &str) -> Result<Expr, ExprError> {
    let mut p = Parser::new(text)?;
    let e = p.expr()?;
    p.expect_end()?;
    Ok(e)
}

/// Parses `lhs = rhs`.
pub fn parse_equation(text: &str) -> Result<Equation, ExprError> {
    let mut parts = text.splitn(2, '=');
    let lhs = parts.next().unwrap_or("");
    let rhs = parts
        .next()
        .ok_or_else(|| ExprError::Malformed("expected `=` in equation".into()))?;
    if rhs.contains('=') {
        return Err(ExprError::Malformed("more than one `=` in equation".into()));
    }
    Ok(Equation {
        lhs: parse_expr(lhs)?,
        rhs: parse_expr(rhs)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(BigRational),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Underscore,
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn new(text: &str) -> Result<Self, ExprError> {
        Ok(Parser {
            toks: tokenize(text)?,
            pos: 0,
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ExprError> {
        match self.bump() {
            Some(t) if t == want => Ok(()),
            other => Err(ExprError::Malformed(format!(
                "expected {what}, found {other:?}"
            ))),
        }
    }

    fn expect_end(&self) -> Result<(), ExprError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(ExprError::Malformed(format!(
                "unexpected trailing input starting at {t:?}"
            ))),
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    lhs = Expr::Bin(BinOp::Add, Box::new(lhs), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.bump();
                    lhs = Expr::Bin(BinOp::Sub, Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    lhs = Expr::Bin(BinOp::Mul, Box::new(lhs), Box::new(self.factor()?));
                }
                Some(Tok::Slash) => {
                    self.bump();
                    lhs = Expr::Bin(BinOp::Div, Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    // Right-associative power binds tighter than unary minus on the left,
    // so -2^2 = -(2^2).
    fn factor(&mut self) -> Result<Expr, ExprError> {
        if let Some(Tok::Minus) = self.peek() {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let base = self.atom()?;
        if let Some(Tok::Caret) = self.peek() {
            self.bump();
            let exp = self.factor()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        match self.bump() {
            Some(Tok::Num(r)) => Ok(Expr::Num(r)),
            Some(Tok::Ident(name)) => {
                let index = if let Some(Tok::Underscore) = self.peek() {
                    self.bump();
                    Some(Box::new(self.subscript()?))
                } else {
                    None
                };
                Ok(Expr::Var(VarRef { name, index }))
            }
            Some(Tok::LParen) => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "closing parenthesis")?;
                Ok(e)
            }
            other => Err(ExprError::Malformed(format!(
                "expected a number, variable or parenthesized expression, found {other:?}"
            ))),
        }
    }

    fn subscript(&mut self) -> Result<Expr, ExprError> {
        match self.bump() {
            Some(Tok::LBrace) => {
                let e = self.expr()?;
                self.expect(Tok::RBrace, "closing brace")?;
                Ok(e)
            }
            Some(Tok::Num(r)) => Ok(Expr::Num(r)),
            Some(Tok::Ident(name)) => Ok(Expr::Var(VarRef { name, index: None })),
            other => Err(ExprError::Malformed(format!(
                "expected subscript after `_`, found {other:?}"
            ))),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<Tok>, ExprError> {
    let mut toks = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                toks.push(Tok::Plus);
                i += 1;
            }
            '-' => {
                toks.push(Tok::Minus);
                i += 1;
            }
            '*' => {
                toks.push(Tok::Star);
                i += 1;
            }
            '/' => {
                toks.push(Tok::Slash);
                i += 1;
            }
            '^' => {
                toks.push(Tok::Caret);
                i += 1;
            }
            '(' => {
                toks.push(Tok::LParen);
                i += 1;
            }
            ')' => {
                toks.push(Tok::RParen);
                i += 1;
            }
            '{' => {
                toks.push(Tok::LBrace);
                i += 1;
            }
            '}' => {
                toks.push(Tok::RBrace);
                i += 1;
            }
            '_' => {
                toks.push(Tok::Underscore);
                i += 1;
            }
            '0'..='9' => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let mut frac_digits = 0usize;
                if i < chars.len() && chars[i] == '.' {
                    i += 1;
                    let fs = i;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                    frac_digits = i - fs;
                    if frac_digits == 0 {
                        return Err(ExprError::Malformed(format!(
                            "digits required after decimal point at offset {start}"
                        )));
                    }
                }
                let digits: String = chars[start..i].iter().filter(|c| **c != '.').collect();
                let numer: BigInt = digits
                    .parse()
                    .map_err(|_| ExprError::Malformed(format!("bad number at offset {start}")))?;
                let denom = BigInt::from(10u32).pow(frac_digits as u32);
                toks.push(Tok::Num(BigRational::new(numer, denom)));
            }
            c if c.is_ascii_alphabetic() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                    i += 1;
                }
                toks.push(Tok::Ident(chars[start..i].iter().collect()));
            }
            other => {
                return Err(ExprError::Malformed(format!(
                    "unexpected character {other:?} at offset {i}"
                )))
            }
        }
    }
    Ok(toks)
}

/// Convenience: exact value of a closed arithmetic expression.
/// This is the calculator tool's entry point.
pub fn evaluate_closed(text: &str) -> Result<BigRational, ExprError> {
    parse_expr(text)?.eval(&NoVars)
}

pub fn big_rational(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn big_int_rational(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn eval(s: &str) -> BigRational {
        evaluate_closed(s).unwrap()
    }

    #[test]
    fn quartic_at_two_is_negative_7680() {
        assert_eq!(
            eval("3*2^4 - 69*2^3 + 1284*2^2 - 4212*2 - 3888"),
            big_int_rational(-7680)
        );
    }

    #[test]
    fn simple_subtraction() {
        assert_eq!(eval("13-10"), big_int_rational(3));
    }

    #[test]
    fn division_by_zero_is_rejected() {
        assert_eq!(evaluate_closed("1/0"), Err(ExprError::DivideByZero));
        assert_eq!(evaluate_closed("2^(0-1)*0^(0-2)"), Err(ExprError::DivideByZero));
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(eval("2+3*4"), big_int_rational(14));
        assert_eq!(eval("2^3^2"), big_int_rational(512));
        assert_eq!(eval("-2^2"), big_int_rational(-4));
        assert_eq!(eval("(2+3)*4"), big_int_rational(20));
        assert_eq!(eval("1-2-3"), big_int_rational(-4));
        assert_eq!(eval("8/2/2"), big_int_rational(2));
    }

    #[test]
    fn decimals_are_exact() {
        assert_eq!(eval("2.5"), big_rational(5, 2));
        assert_eq!(eval("0.1+0.2"), big_rational(3, 10));
    }

    #[test]
    fn negative_exponent() {
        assert_eq!(eval("2^(0-3)"), big_rational(1, 8));
        assert_eq!(eval("(2/3)^(0-2)"), big_rational(9, 4));
    }

    #[test]
    fn trailing_input_rejected() {
        assert!(matches!(
            evaluate_closed("1, 2, 3"),
            Err(ExprError::Malformed(_))
        ));
        assert!(matches!(evaluate_closed(""), Err(ExprError::Malformed(_))));
        assert!(matches!(evaluate_closed("2 3"), Err(ExprError::Malformed(_))));
    }

    #[test]
    fn subscripted_variables() {
        let e = parse_expr("a_{n+1} - a_n - b_2").unwrap();
        let env = |name: &str, index: Option<&BigInt>| -> Option<BigRational> {
            let ix = index?.to_i64()?;
            match name {
                "a" => Some(big_int_rational(10 * ix)),
                "b" => Some(big_int_rational(ix)),
                _ => None,
            }
        };
        // with n = 4: a_5 - a_4 - b_2 = 50 - 40 - 2
        let full = |name: &str, index: Option<&BigInt>| -> Option<BigRational> {
            if name == "n" && index.is_none() {
                return Some(big_int_rational(4));
            }
            env(name, index)
        };
        assert_eq!(e.eval(&full).unwrap(), big_int_rational(8));
    }

    #[test]
    fn unbound_variable_reported() {
        let e = parse_expr("q + 1").unwrap();
        assert!(matches!(e.eval(&NoVars), Err(ExprError::UnboundVariable(_))));
    }

    #[test]
    fn equation_parsing() {
        let eq = parse_equation("a_{n+1}/(n+1) = a_n/n + 1/2^n").unwrap();
        assert_eq!(eq.lhs.variable_names(), vec!["a".to_string(), "n".to_string()]);
        assert!(parse_equation("1 + 2").is_err());
        assert!(parse_equation("1 = 2 = 3").is_err());
    }

    #[test]
    fn zero_power_zero_is_one() {
        assert_eq!(eval("0^0"), big_int_rational(1));
    }

    // Independent oracle: build random expression trees, evaluate them
    // directly in test code, then check the parser+evaluator agrees on the
    // rendered string.
    #[test]
    fn parser_matches_direct_tree_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);
        let mut checked = 0;
        for _ in 0..400 {
            let tree = random_tree(&mut rng, 0);
            let direct = direct_eval(&tree);
            let rendered = render(&tree);
            let parsed = evaluate_closed(&rendered);
            match direct {
                Some(v) => {
                    assert_eq!(parsed.as_ref().ok(), Some(&v), "expr: {rendered}");
                    checked += 1;
                }
                None => assert!(parsed.is_err(), "expr: {rendered}"),
            }
        }
        assert!(checked > 200);
    }

    enum T {
        Leaf(i64),
        Node(BinOp, Box<T>, Box<T>),
    }

    fn random_tree(rng: &mut ChaCha8Rng, depth: usize) -> T {
        if depth >= 4 || rng.random_bool(0.35) {
            return T::Leaf(rng.random_range(-20..=20));
        }
        let op = match rng.random_range(0..5) {
            0 => BinOp::Add,
            1 => BinOp::Sub,
            2 => BinOp::Mul,
            3 => BinOp::Div,
            _ => BinOp::Pow,
        };
        let rhs = if op == BinOp::Pow {
            Box::new(T::Leaf(rng.random_range(0..=4)))
        } else {
            Box::new(random_tree(rng, depth + 1))
        };
        T::Node(op, Box::new(random_tree(rng, depth + 1)), rhs)
    }

    fn direct_eval(t: &T) -> Option<BigRational> {
        match t {
            T::Leaf(v) => Some(big_int_rational(*v)),
            T::Node(op, a, b) => {
                let x = direct_eval(a)?;
                let y = direct_eval(b)?;
                match op {
                    BinOp::Add => Some(x + y),
                    BinOp::Sub => Some(x - y),
                    BinOp::Mul => Some(x * y),
                    BinOp::Div => {
                        if y.is_zero() {
                            None
                        } else {
                            Some(x / y)
                        }
                    }
                    BinOp::Pow => {
                        let e = y.to_integer().to_i64()?;
                        pow_rational(&x, e).ok()
                    }
                }
            }
        }
    }

    fn render(t: &T) -> String {
        match t {
            T::Leaf(v) => {
                if *v < 0 {
                    format!("(0-{})", -v)
                } else {
                    v.to_string()
                }
            }
            T::Node(op, a, b) => {
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                format!("({} {} {})", render(a), sym, render(b))
            }
        }
    }
}
