//! Recursive-descent parser.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | atom ('^' factor)?
//! atom   := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! Numbers are integers or decimals and are read exactly; `p/q` is ordinary
//! division, so `-r^2/2` means `-(r^2)/2`. `ζ` is accepted for `zeta` and `λ`
//! for `lambda`. The extra call form `antideriv(var, integrand, re[, im[, upper]])`
//! reads back formal antiderivatives.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{Pow, Zero};
use thiserror::Error;

use super::{normalize, Expr, Node, Q};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    UnknownFunction(String),
    UnbalancedParens,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    /// Character offset of the offending token.
    pub offset: usize,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ParseErrorKind::Syntax(msg) => write!(f, "syntax error at offset {}: {msg}", self.offset),
            ParseErrorKind::UnknownFunction(name) => {
                write!(f, "unknown function `{name}` at offset {}", self.offset)
            }
            ParseErrorKind::UnbalancedParens => {
                write!(f, "unbalanced parentheses at offset {}", self.offset)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Q),
    Ident(String),
    Op(char),
}

struct Lexer;

impl Lexer {
    fn run(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
        let chars: Vec<char> = src.chars().collect();
        let mut out = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            if c.is_whitespace() {
                i += 1;
            } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(char::is_ascii_digit)) {
                let start = i;
                let mut int = String::new();
                while i < chars.len() && chars[i].is_ascii_digit() {
                    int.push(chars[i]);
                    i += 1;
                }
                let mut frac = String::new();
                if i < chars.len() && chars[i] == '.' {
                    i += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        frac.push(chars[i]);
                        i += 1;
                    }
                }
                let digits = format!("{int}{frac}");
                let n: BigInt = digits.parse().map_err(|_| ParseError {
                    kind: ParseErrorKind::Syntax("malformed number".into()),
                    offset: start,
                })?;
                let den = Pow::pow(BigInt::from(10), frac.len() as u32);
                out.push((Tok::Num(Q::new(n, den)), start));
            } else if c.is_alphabetic() || c == '_' {
                let start = i;
                let mut name = String::new();
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    name.push(chars[i]);
                    i += 1;
                }
                let name = match name.as_str() {
                    "ζ" => "zeta".to_string(),
                    "λ" => "lambda".to_string(),
                    _ => name,
                };
                out.push((Tok::Ident(name), start));
            } else if "+-*/^(),".contains(c) {
                out.push((Tok::Op(c), i));
                i += 1;
            } else {
                return Err(ParseError {
                    kind: ParseErrorKind::Syntax(format!("unexpected character `{c}`")),
                    offset: i,
                });
            }
        }
        Ok(out)
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
    depth: usize,
}

/// Parses an expression. Identifiers `x`, `r`, `zeta` become variables; all
/// other identifiers become parameters.
pub fn parse(src: &str) -> Result<Expr, ParseError> {
    let toks = Lexer::run(src)?;
    let mut p = Parser { toks, pos: 0, end: src.chars().count(), depth: 0 };
    let e = p.expr()?;
    if let Some((t, off)) = p.toks.get(p.pos) {
        let kind = if *t == Tok::Op(')') {
            ParseErrorKind::UnbalancedParens
        } else {
            ParseErrorKind::Syntax("unexpected trailing input".into())
        };
        return Err(ParseError { kind, offset: *off });
    }
    Ok(e)
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(_, o)| *o).unwrap_or(self.end)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Op(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn syntax(&self, msg: &str) -> ParseError {
        ParseError { kind: ParseErrorKind::Syntax(msg.into()), offset: self.offset() }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut terms = vec![self.term()?];
        loop {
            if self.eat('+') {
                terms.push(self.term()?);
            } else if self.eat('-') {
                terms.push(-self.term()?);
            } else {
                break;
            }
        }
        Ok(Expr::add(terms))
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.factor()?;
        loop {
            if self.eat('*') {
                acc = Expr::mul(vec![acc, self.factor()?]);
            } else if self.eat('/') {
                acc = Expr::mul(vec![acc, self.factor()?.recip()]);
            } else {
                break;
            }
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.eat('-') {
            return Ok(-self.factor()?);
        }
        let base = self.atom()?;
        if self.eat('^') {
            let exponent = self.factor()?;
            return Ok(Expr::pow(base, exponent));
        }
        Ok(base)
    }

    fn close(&mut self) -> Result<(), ParseError> {
        if self.eat(')') {
            self.depth -= 1;
            Ok(())
        } else if self.pos >= self.toks.len() {
            Err(ParseError { kind: ParseErrorKind::UnbalancedParens, offset: self.end })
        } else {
            Err(self.syntax("expected `)`"))
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let off = self.offset();
        match self.peek().cloned() {
            Some(Tok::Num(q)) => {
                self.pos += 1;
                Ok(Expr::q(q))
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                self.depth += 1;
                let e = self.expr()?;
                self.close()?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if self.eat('(') {
                    self.depth += 1;
                    let mut args = vec![self.expr()?];
                    while self.eat(',') {
                        args.push(self.expr()?);
                    }
                    self.close()?;
                    self.call(&name, args, off)
                } else {
                    Ok(Expr::symbol(&name))
                }
            }
            Some(Tok::Op(')')) => Err(ParseError { kind: ParseErrorKind::UnbalancedParens, offset: off }),
            Some(Tok::Op(c)) => Err(self.syntax(&format!("unexpected `{c}`"))),
            None => Err(self.syntax("unexpected end of input")),
        }
    }

    fn call(&self, name: &str, mut args: Vec<Expr>, off: usize) -> Result<Expr, ParseError> {
        let arity = |n: usize| -> Result<(), ParseError> {
            if args.len() == n {
                Ok(())
            } else {
                Err(ParseError {
                    kind: ParseErrorKind::Syntax(format!("`{name}` takes {n} argument(s)")),
                    offset: off,
                })
            }
        };
        let unary = |f: fn(Expr) -> Expr, args: &mut Vec<Expr>| f(args.pop().unwrap());
        match name {
            "exp" => arity(1).map(|_| unary(Expr::exp, &mut args)),
            "ln" | "log" => arity(1).map(|_| unary(Expr::ln, &mut args)),
            "sqrt" => arity(1).map(|_| unary(Expr::sqrt, &mut args)),
            "sin" => arity(1).map(|_| unary(Expr::sin, &mut args)),
            "cos" => arity(1).map(|_| unary(Expr::cos, &mut args)),
            "tan" => arity(1).map(|_| unary(Expr::tan, &mut args)),
            "antideriv" => self.antideriv(args, off),
            _ => Err(ParseError { kind: ParseErrorKind::UnknownFunction(name.to_string()), offset: off }),
        }
    }

    fn antideriv(&self, args: Vec<Expr>, off: usize) -> Result<Expr, ParseError> {
        let bad = |msg: &str| ParseError { kind: ParseErrorKind::Syntax(msg.to_string()), offset: off };
        if !(3..=5).contains(&args.len()) {
            return Err(bad("`antideriv` takes 3 to 5 arguments"));
        }
        let var = match args[0].node() {
            Node::Var(v) | Node::Param(v) => v.clone(),
            _ => return Err(bad("first `antideriv` argument must be a name")),
        };
        let rational = |e: &Expr| normalize(e).as_rational().cloned().ok_or_else(|| bad("base point must be a rational number"));
        let re = rational(&args[2])?;
        let im = match args.get(3) {
            Some(e) => rational(e)?,
            None => Q::zero(),
        };
        let mut ad = super::AntiDeriv {
            var: var.clone(),
            integrand: args[1].clone(),
            base_re: re,
            base_im: im,
            upper: Expr::symbol(&var),
        };
        if let Some(u) = args.get(4) {
            ad.upper = u.clone();
        }
        Ok(Expr::antideriv_node(ad))
    }
}
