//! Expressions in the single variable `s`.
//!
//! Grammar, lowest to highest precedence:
//!
//! ```text
//! expr    := term (('+' | '-') term)*          left associative
//! term    := unary (('*' | '/') unary)*        left associative
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?                 right associative
//! atom    := number | 's' | func '(' expr ')' | '(' expr ')'
//! func    := 'ln' | 'exp' | 'sqrt'
//! number  := digits ['.' digits] [('e' | 'E') ['+' | '-'] digits]
//! ```
//!
//! Whitespace is insignificant.

use std::fmt;

use crate::error::{Error, Result};
use crate::jet::Jet2;
use crate::scalar::{lit, Real};

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Constant(f64),
    Variable,
    Negate(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Ln(Box<Expr>),
    Exp(Box<Expr>),
    Sqrt(Box<Expr>),
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr> {
        parse(text)
    }

    /// True when the expression does not mention `s`.
    pub fn is_constant(&self) -> bool {
        use Expr::*;
        match self {
            Constant(_) => true,
            Variable => false,
            Negate(a) | Ln(a) | Exp(a) | Sqrt(a) => a.is_constant(),
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) | Pow(a, b) => {
                a.is_constant() && b.is_constant()
            }
        }
    }

    /// Replaces every occurrence of `s` by `inner`.
    pub fn compose(&self, inner: &Expr) -> Expr {
        use Expr::*;
        let rec = |e: &Expr| Box::new(e.compose(inner));
        match self {
            Constant(c) => Constant(*c),
            Variable => inner.clone(),
            Negate(a) => Negate(rec(a)),
            Ln(a) => Ln(rec(a)),
            Exp(a) => Exp(rec(a)),
            Sqrt(a) => Sqrt(rec(a)),
            Add(a, b) => Add(rec(a), rec(b)),
            Sub(a, b) => Sub(rec(a), rec(b)),
            Mul(a, b) => Mul(rec(a), rec(b)),
            Div(a, b) => Div(rec(a), rec(b)),
            Pow(a, b) => Pow(rec(a), rec(b)),
        }
    }

    /// Value, first and second derivative with respect to `s`.
    pub fn eval_jet<T: Real>(&self, s: T) -> Result<Jet2<T>> {
        let j = self.unchecked_jet(s)?;
        if !j.is_finite() {
            return Err(Error::Domain {
                s: s.to_f64().unwrap_or(f64::NAN),
                message: "non-finite result".into(),
            });
        }
        Ok(j)
    }

    /// Value only. Succeeds where the value is finite even if a derivative
    /// overflows, e.g. `ln(s - 1 + 1e-300)` at `s = 1`.
    pub fn eval<T: Real>(&self, s: T) -> Result<T> {
        let v = self.unchecked_jet(s)?.v;
        if !v.is_finite() {
            return Err(Error::Domain {
                s: s.to_f64().unwrap_or(f64::NAN),
                message: "non-finite result".into(),
            });
        }
        Ok(v)
    }

    fn unchecked_jet<T: Real>(&self, s: T) -> Result<Jet2<T>> {
        let s_f64 = s.to_f64().unwrap_or(f64::NAN);
        if !(s > T::zero()) || !s.is_finite() {
            return Err(Error::Domain {
                s: s_f64,
                message: "functions are defined for s > 0 only".into(),
            });
        }
        self.jet(Jet2::variable(s), s_f64)
    }

    fn jet<T: Real>(&self, x: Jet2<T>, s: f64) -> Result<Jet2<T>> {
        use Expr::*;
        let domain = |message: &str| Error::Domain {
            s,
            message: message.to_string(),
        };
        Ok(match self {
            Constant(c) => Jet2::constant(lit(*c)),
            Variable => x,
            Negate(a) => -a.jet(x, s)?,
            Add(a, b) => a.jet(x, s)? + b.jet(x, s)?,
            Sub(a, b) => a.jet(x, s)? - b.jet(x, s)?,
            Mul(a, b) => a.jet(x, s)? * b.jet(x, s)?,
            Div(a, b) => {
                let num = a.jet(x, s)?;
                let den = b.jet(x, s)?;
                if den.v == T::zero() {
                    return Err(domain("division by zero"));
                }
                num / den
            }
            Ln(a) => {
                let u = a.jet(x, s)?;
                if !(u.v > T::zero()) {
                    return Err(domain("ln of a non-positive value"));
                }
                u.ln()
            }
            Sqrt(a) => {
                let u = a.jet(x, s)?;
                if !(u.v > T::zero()) {
                    return Err(domain("sqrt of a non-positive value"));
                }
                u.sqrt()
            }
            Exp(a) => a.jet(x, s)?.exp(),
            Pow(a, b) => {
                let base = a.jet(x, s)?;
                let exponent = b.jet(x, s)?;
                if b.is_constant() {
                    let p = exponent.v;
                    if base.v == T::zero() && p < T::zero() {
                        return Err(domain("zero raised to a negative power"));
                    }
                    if base.v < T::zero() && p.fract() != T::zero() {
                        return Err(domain("negative base with non-integer exponent"));
                    }
                    base.powf(p)
                } else {
                    if !(base.v > T::zero()) {
                        return Err(domain("variable exponent requires a positive base"));
                    }
                    base.pow(exponent)
                }
            }
        })
    }
}

impl fmt::Display for Expr {
    /// Fully parenthesized form that parses back to an equivalent tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Expr::*;
        match self {
            Constant(c) if *c < 0.0 => write!(f, "(-{})", -c),
            Constant(c) => write!(f, "{c}"),
            Variable => write!(f, "s"),
            Negate(a) => write!(f, "(-{a})"),
            Add(a, b) => write!(f, "({a} + {b})"),
            Sub(a, b) => write!(f, "({a} - {b})"),
            Mul(a, b) => write!(f, "({a} * {b})"),
            Div(a, b) => write!(f, "({a} / {b})"),
            Pow(a, b) => write!(f, "({a} ^ {b})"),
            Ln(a) => write!(f, "ln({a})"),
            Exp(a) => write!(f, "exp({a})"),
            Sqrt(a) => write!(f, "sqrt({a})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        let start = i;
        let simple = match b {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(t) = simple {
            out.push((t, start));
            i += 1;
        } else if b.is_ascii_whitespace() {
            i += 1;
        } else if b.is_ascii_digit() || b == b'.' {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let lexeme = &text[start..i];
            let value: f64 = lexeme.parse().map_err(|_| Error::Syntax {
                offset: start,
                message: format!("malformed number `{lexeme}`"),
            })?;
            out.push((Tok::Num(value), start));
        } else if b.is_ascii_alphabetic() || b == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(text[start..i].to_string()), start));
        } else {
            let ch = text[start..].chars().next().unwrap_or('?');
            return Err(Error::Syntax {
                offset: start,
                message: format!("unexpected character `{ch}`"),
            });
        }
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if t != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(what))
        }
    }

    fn unexpected(&self, what: &str) -> Error {
        let found = match self.peek() {
            Tok::End => "end of input".to_string(),
            Tok::Num(x) => format!("number {x}"),
            Tok::Ident(name) => format!("`{name}`"),
            t => format!("{t:?}"),
        };
        Error::Syntax {
            offset: self.offset(),
            message: format!("expected {what}, found {found}"),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Tok::Slash => {
                    self.bump();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Expr::Negate(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let exponent = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let offset = self.offset();
        match self.peek().clone() {
            Tok::Num(x) => {
                self.bump();
                Ok(Expr::Constant(x))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                let wrap: fn(Box<Expr>) -> Expr = match name.as_str() {
                    "s" => return Ok(Expr::Variable),
                    "ln" => Expr::Ln,
                    "exp" => Expr::Exp,
                    "sqrt" => Expr::Sqrt,
                    _ => return Err(Error::UnknownIdentifier { name, offset }),
                };
                self.expect(Tok::LParen, &format!("`(` after `{name}`"))?;
                let arg = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(wrap(Box::new(arg)))
            }
            _ => Err(self.unexpected("a number, `s`, a function call or `(`")),
        }
    }
}

/// Parses `text` into an [`Expr`].
pub fn parse(text: &str) -> Result<Expr> {
    let toks = tokenize(text)?;
    if toks.len() == 1 {
        return Err(Error::Syntax {
            offset: 0,
            message: "empty expression".into(),
        });
    }
    let mut p = Parser { toks, pos: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.unexpected("an operator or end of input"));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use Expr::*;

    #[test]
    fn parses_negated_log() {
        assert_eq!(
            parse("-ln(s)").unwrap(),
            Negate(Box::new(Ln(Box::new(Variable))))
        );
    }

    #[test]
    fn power_is_right_associative() {
        let e = parse("2^3^2").unwrap();
        assert_eq!(
            e,
            Pow(
                Box::new(Constant(2.0)),
                Box::new(Pow(Box::new(Constant(3.0)), Box::new(Constant(2.0))))
            )
        );
        assert_eq!(e.eval(1.7).unwrap(), 512.0);
    }

    #[test]
    fn additive_is_left_associative() {
        let e = parse("1 - s + s").unwrap();
        assert_eq!(
            e,
            Add(
                Box::new(Sub(Box::new(Constant(1.0)), Box::new(Variable))),
                Box::new(Variable)
            )
        );
        assert_eq!(e.eval(0.3).unwrap(), 1.0);
        assert_eq!(parse("8/4/2").unwrap().eval(1.0).unwrap(), 1.0);
    }

    #[test]
    fn unary_minus_binds_looser_than_power() {
        assert_eq!(parse("-2^2").unwrap().eval(1.0).unwrap(), -4.0);
        assert_eq!(parse("2^-1").unwrap().eval(1.0).unwrap(), 0.5);
        assert_eq!(parse("--s").unwrap().eval(3.0).unwrap(), 3.0);
    }

    #[test]
    fn numbers_and_whitespace() {
        assert_eq!(parse(" 1.5e2 ").unwrap(), Constant(150.0));
        assert_eq!(parse("2.5E-1").unwrap(), Constant(0.25));
        assert_eq!(parse(".5").unwrap(), Constant(0.5));
        assert_eq!(parse("3.").unwrap(), Constant(3.0));
        assert_eq!(
            parse("\t s*  2").unwrap(),
            Mul(Box::new(Variable), Box::new(Constant(2.0)))
        );
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        match parse("1 + * 2") {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("unexpected {other:?}"),
        }
        match parse("(s + 1") {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 6),
            other => panic!("unexpected {other:?}"),
        }
        match parse("s $ 2") {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse(""), Err(Error::Syntax { offset: 0, .. })));
        assert!(matches!(parse("   "), Err(Error::Syntax { .. })));
        assert!(matches!(
            parse("ln s"),
            Err(Error::Syntax { offset: 3, .. })
        ));
        assert!(matches!(parse("s s"), Err(Error::Syntax { offset: 2, .. })));
    }

    #[test]
    fn unknown_identifiers() {
        match parse("2*x") {
            Err(Error::UnknownIdentifier { name, offset }) => {
                assert_eq!(name, "x");
                assert_eq!(offset, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse("log(s)"),
            Err(Error::UnknownIdentifier { .. })
        ));
    }

    #[test]
    fn jets_of_examples() {
        let j = parse("-ln(s)").unwrap().eval_jet(2.0).unwrap();
        assert_eq!(j, Jet2::new(-std::f64::consts::LN_2, -0.5, 0.25));
        let j = parse("s").unwrap().eval_jet(5.0).unwrap();
        assert_eq!(j, Jet2::new(5.0, 1.0, 0.0));
    }

    #[test]
    fn domain_errors() {
        let dom = |src: &str, s: f64| {
            matches!(parse(src).unwrap().eval_jet(s), Err(Error::Domain { .. }))
        };
        assert!(dom("s", 0.0));
        assert!(dom("s", -1.0));
        assert!(dom("ln(s - 2)", 1.0));
        assert!(dom("sqrt(s - 1)", 1.0));
        assert!(dom("1/(s - 1)", 1.0));
        assert!(dom("(s - 1)^(-1)", 1.0));
        assert!(dom("(s - 2)^0.5", 1.0));
        assert!(dom("(s - 2)^s", 1.0));
        assert!(dom("exp(exp(s))", 100.0));
        // integer exponent of a negative base is fine
        assert_eq!(parse("(s - 2)^3").unwrap().eval(1.0).unwrap(), -1.0);
    }

    #[test]
    fn variable_exponent_uses_exp_ln() {
        // d/ds s^s = s^s (ln s + 1)
        let j = parse("s^s").unwrap().eval_jet(2.0f64).unwrap();
        assert!((j.v - 4.0).abs() < 1e-14);
        assert!((j.d1 - 4.0 * (2f64.ln() + 1.0)).abs() < 1e-13);
        let d2 = 4.0 * ((2f64.ln() + 1.0).powi(2) + 0.5);
        assert!((j.d2 - d2).abs() < 1e-12);
    }

    #[test]
    fn compose_scales_argument() {
        let f = parse("-ln(s)").unwrap();
        let g = f.compose(&parse("2*s").unwrap());
        assert!((g.eval(3.0).unwrap() + 6f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn display_round_trips() {
        for src in [
            "-ln(s)",
            "2^3^2",
            "1 - s + s",
            "(s+1)/(s-3)*exp(-s)",
            "sqrt(s)^-1.5",
        ] {
            let e = parse(src).unwrap();
            assert_eq!(parse(&e.to_string()).unwrap(), e, "{src}");
        }
    }
}
