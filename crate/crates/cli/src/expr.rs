//! Function expressions: `cos(1+2*pi*(x+y)+5*sin(pi*z))`, `sin(th)^2*cos(lam)`.
//!
//! Precedence, from loosest: `+ -`, `* /`, unary minus, `^` (right-associative).
//! So `-x^2` is `-(x^2)` and `2^3^2` is `2^9`.

use std::fmt;

use num_complex::Complex64;
use spherekit::sphere_domain::{sph_to_cart, SphPoint};
use spherekit::SphereSource;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coords {
    Cart,
    Sph,
}

impl fmt::Display for Coords {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Coords::Cart => "cart",
            Coords::Sph => "sph",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
    Z,
    Lam,
    Th,
}

impl Var {
    fn coords(self) -> Coords {
        match self {
            Var::X | Var::Y | Var::Z => Coords::Cart,
            Var::Lam | Var::Th => Coords::Sph,
        }
    }

    fn slot(self) -> usize {
        match self {
            Var::X | Var::Lam => 0,
            Var::Y | Var::Th => 1,
            Var::Z => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
    Sinh,
    Cosh,
}

impl Func {
    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            _ => return None,
        })
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Tan => v.tan(),
            Func::Exp => v.exp(),
            Func::Log => v.ln(),
            Func::Sqrt => v.sqrt(),
            Func::Abs => v.abs(),
            Func::Sinh => v.sinh(),
            Func::Cosh => v.cosh(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Var(Var),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

impl Node {
    fn eval(&self, v: &[f64; 3]) -> f64 {
        match self {
            Node::Num(x) => *x,
            Node::Var(var) => v[var.slot()],
            Node::Neg(a) => -a.eval(v),
            Node::Bin(op, a, b) => {
                let (a, b) = (a.eval(v), b.eval(v));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => a.powf(b),
                }
            }
            Node::Call(f, a) => f.apply(a.eval(v)),
        }
    }
}

/// A parsed expression and the variable set it uses (`None` for constants).
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub root: Node,
    pub coords: Option<Coords>,
}

impl Expr {
    /// Evaluates with `(x, y, z)` or `(lam, th, _)`, depending on the variable set.
    pub fn eval(&self, v: [f64; 3]) -> f64 {
        self.root.eval(&v)
    }

    /// Value at a point of the sphere in spherical coordinates.
    pub fn eval_sph(&self, lambda: f64, theta: f64) -> f64 {
        match self.coords {
            Some(Coords::Sph) => self.eval([lambda, theta, 0.0]),
            _ => {
                let p = sph_to_cart(SphPoint::new(lambda, theta));
                self.eval([p.x, p.y, p.z])
            }
        }
    }
}

impl SphereSource for Expr {
    fn value(&self, lambda: f64, theta: f64) -> Complex64 {
        Complex64::new(self.eval_sph(lambda, theta), 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("unexpected character '{0}'")]
    UnexpectedChar(char),
    #[error("unknown identifier '{0}'")]
    UnknownIdent(String),
    #[error("'{0}' is a function and needs an argument in parentheses")]
    MissingCall(String),
    #[error("expected '{0}'")]
    Expected(char),
    #[error("invalid number '{0}'")]
    BadNumber(String),
    #[error("variable '{var}' mixes spherical and Cartesian coordinates")]
    MixedVariables { var: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("at offset {offset}: {kind}")]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<(usize, Tok)>,
    pos: usize,
    coords: Option<Coords>,
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == b'.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            // exponent only when followed by digits, so `2*e` and `2e` stay distinguishable
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            let v = text.parse::<f64>().map_err(|_| ParseError {
                offset: start,
                kind: ParseErrorKind::BadNumber(text.to_string()),
            })?;
            out.push((start, Tok::Num(v)));
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(src[start..i].to_string())));
        } else if b"+-*/^()".contains(&c) {
            out.push((i, Tok::Op(c as char)));
            i += 1;
        } else {
            let ch = src[i..].chars().next().unwrap_or('?');
            return Err(ParseError {
                offset: i,
                kind: ParseErrorKind::UnexpectedChar(ch),
            });
        }
    }
    Ok(out)
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.src.len(), |(o, _)| *o)
    }

    fn err<T>(&self, kind: ParseErrorKind) -> Result<T, ParseError> {
        Err(ParseError {
            offset: self.offset(),
            kind,
        })
    }

    fn unexpected<T>(&self) -> Result<T, ParseError> {
        match self.peek() {
            None => self.err(ParseErrorKind::UnexpectedEnd),
            Some(Tok::Op(c)) => self.err(ParseErrorKind::UnexpectedChar(*c)),
            Some(Tok::Num(_)) | Some(Tok::Ident(_)) => {
                let (o, _) = self.toks[self.pos];
                let ch = self.src[o..].chars().next().unwrap_or('?');
                self.err(ParseErrorKind::UnexpectedChar(ch))
            }
        }
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat('+') {
                BinOp::Add
            } else if self.eat('-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat('*') {
                BinOp::Mul
            } else if self.eat('/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if self.eat('-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.atom()?;
        if self.eat('^') {
            // the exponent may carry its own sign: 2^-1
            let exp = self.unary()?;
            return Ok(Node::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        let start = self.offset();
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Node::Num(v))
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(')') {
                    return self.err(ParseErrorKind::Expected(')'));
                }
                Ok(inner)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if let Some(f) = Func::from_name(&name) {
                    if !self.eat('(') {
                        return Err(ParseError {
                            offset: start,
                            kind: ParseErrorKind::MissingCall(name),
                        });
                    }
                    let arg = self.expr()?;
                    if !self.eat(')') {
                        return self.err(ParseErrorKind::Expected(')'));
                    }
                    return Ok(Node::Call(f, Box::new(arg)));
                }
                let var = match name.as_str() {
                    "pi" => return Ok(Node::Num(std::f64::consts::PI)),
                    "e" => return Ok(Node::Num(std::f64::consts::E)),
                    "x" => Var::X,
                    "y" => Var::Y,
                    "z" => Var::Z,
                    "lam" => Var::Lam,
                    "th" => Var::Th,
                    _ => {
                        return Err(ParseError {
                            offset: start,
                            kind: ParseErrorKind::UnknownIdent(name),
                        })
                    }
                };
                match self.coords {
                    Some(c) if c != var.coords() => {
                        return Err(ParseError {
                            offset: start,
                            kind: ParseErrorKind::MixedVariables { var: name },
                        })
                    }
                    _ => self.coords = Some(var.coords()),
                }
                Ok(Node::Var(var))
            }
            _ => self.unexpected(),
        }
    }
}

pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser {
        src: text,
        toks,
        pos: 0,
        coords: None,
    };
    let root = p.expr()?;
    if p.pos != p.toks.len() {
        return p.unexpected();
    }
    Ok(Expr {
        root,
        coords: p.coords,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn ev(s: &str, v: [f64; 3]) -> f64 {
        parse_expr(s).unwrap().eval(v)
    }

    #[test]
    fn test_function_matches_closed_form() {
        let e = parse_expr("cos(1+2*pi*(x+y)+5*sin(pi*z))").unwrap();
        assert_eq!(e.coords, Some(Coords::Cart));
        for &(x, y, z) in &[(0.1, 0.2, 0.3), (-0.7, 0.5, 0.1), (0.0, 0.0, 1.0)] {
            let want = (1.0 + 2.0 * PI * (x + y) + 5.0 * (PI * z).sin()).cos();
            assert_eq!(e.eval([x, y, z]), want);
        }
    }

    #[test]
    fn precedence() {
        assert_eq!(ev("1+2*3", [0.0; 3]), 7.0);
        assert_eq!(ev("-2^2", [0.0; 3]), -4.0);
        assert_eq!(ev("2^3^2", [0.0; 3]), 512.0);
        assert_eq!(ev("2^-1", [0.0; 3]), 0.5);
        assert_eq!(ev("8/4/2", [0.0; 3]), 1.0);
        assert_eq!(ev("1-2-3", [0.0; 3]), -4.0);
        assert_eq!(ev("-x*-y", [2.0, 3.0, 0.0]), 6.0);
        assert_eq!(ev("2e-1 + 1.5E1", [0.0; 3]), 15.2);
        assert_eq!(ev("2*e", [0.0; 3]), 2.0 * std::f64::consts::E);
    }

    #[test]
    fn functions() {
        let v = [0.3, 0.0, 0.0];
        assert_eq!(ev("sinh(x)+cosh(x)", v), 0.3f64.sinh() + 0.3f64.cosh());
        assert_eq!(ev("log(exp(x))", v), 0.3f64.exp().ln());
        assert_eq!(ev("sqrt(abs(-x))", v), 0.3f64.sqrt());
        assert_eq!(ev("tan(x)", v), 0.3f64.tan());
    }

    #[test]
    fn spherical_variables() {
        let e = parse_expr("sin(th)^2*cos(lam)").unwrap();
        assert_eq!(e.coords, Some(Coords::Sph));
        assert!((e.eval_sph(0.4, 1.1) - 1.1f64.sin().powi(2) * 0.4f64.cos()).abs() < 1e-15);
        assert_eq!(parse_expr("3*pi").unwrap().coords, None);
    }

    #[test]
    fn error_offsets() {
        let e = parse_expr("x+").unwrap_err();
        assert_eq!(e.offset, 2);
        assert_eq!(e.kind, ParseErrorKind::UnexpectedEnd);

        let e = parse_expr("sin(lam)*x").unwrap_err();
        assert_eq!(e.offset, 9);
        assert!(matches!(e.kind, ParseErrorKind::MixedVariables { .. }));

        assert_eq!(parse_expr("foo(x)").unwrap_err().offset, 0);
        assert_eq!(
            parse_expr("(x+1").unwrap_err().kind,
            ParseErrorKind::Expected(')')
        );
        assert_eq!(parse_expr("x $ y").unwrap_err().offset, 2);
        assert_eq!(parse_expr("x y").unwrap_err().offset, 2);
        assert!(matches!(
            parse_expr("sin x").unwrap_err().kind,
            ParseErrorKind::MissingCall(_)
        ));
    }
}
