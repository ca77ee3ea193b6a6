//! Expression strings over a small fixed vocabulary.
//!
//! Grammar (usual precedence, `^` right associative):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | constant | variable | func '(' args ')' | '(' expr ')'
//! ```
//!
//! Functions: `sin cos exp log abs sqrt min max pow`. Constants: `pi`, `e`.
//! Variables: `x`, `x1..x3` (state), `xi`, `xi1..xi3` (frequency), `z`, `z1..z3`
//! (jump size), `s` (Bernstein argument) and the norms `norm_x`, `norm_xi`, `norm_z`.
//! `x`, `xi` and `z` alias the first coordinate.

use std::fmt;

use crate::error::{FellerError, Result};
use crate::scalar::{norm, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X(usize),
    Xi(usize),
    Z(usize),
    NormX,
    NormXi,
    NormZ,
    S,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Abs,
    Sqrt,
    Min,
    Max,
    Pow,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Self::Sin,
            "cos" => Self::Cos,
            "exp" => Self::Exp,
            "log" => Self::Log,
            "abs" => Self::Abs,
            "sqrt" => Self::Sqrt,
            "min" => Self::Min,
            "max" => Self::Max,
            "pow" => Self::Pow,
            _ => return None,
        })
    }

    fn arity(self) -> usize {
        match self {
            Self::Min | Self::Max | Self::Pow => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Const(f64),
    Var(Var),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

/// Values bound to the expression variables.
#[derive(Debug, Clone, Copy)]
pub struct Bindings<'a, T> {
    pub x: &'a [T],
    pub xi: &'a [T],
    pub z: &'a [T],
    pub s: T,
}

impl<'a, T: Scalar> Bindings<'a, T> {
    pub fn state(x: &'a [T]) -> Self {
        Self { x, xi: &[], z: &[], s: T::zero() }
    }

    pub fn symbol(x: &'a [T], xi: &'a [T]) -> Self {
        Self { x, xi, z: &[], s: T::zero() }
    }
}

/// A parsed expression.
#[derive(Clone, PartialEq)]
pub struct Expr {
    source: String,
    root: Node,
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({:?})", self.source)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl Expr {
    pub fn parse(source: &str) -> Result<Self> {
        let mut parser = Parser { src: source.as_bytes(), pos: 0 };
        let root = parser.expr()?;
        parser.skip_ws();
        if parser.pos != parser.src.len() {
            return Err(parser.error("unexpected trailing input"));
        }
        Ok(Self { source: source.to_string(), root })
    }

    pub fn constant(v: f64) -> Self {
        Self { source: format!("{v}"), root: Node::Const(v) }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval<T: Scalar>(&self, b: &Bindings<'_, T>) -> T {
        eval_node(&self.root, b)
    }

    /// Every variable referenced by the expression.
    pub fn variables(&self) -> Vec<Var> {
        let mut out = Vec::new();
        collect_vars(&self.root, &mut out);
        out.dedup();
        out
    }

    pub fn depends_on_state(&self) -> bool {
        self.variables().iter().any(|v| matches!(v, Var::X(_) | Var::NormX))
    }

    /// Largest coordinate index (1-based) referenced in any vector variable.
    pub fn max_coordinate(&self) -> usize {
        self.variables()
            .iter()
            .filter_map(|v| match v {
                Var::X(i) | Var::Xi(i) | Var::Z(i) => Some(i + 1),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Rejects expressions whose variables fall outside `allowed` or
    /// whose coordinates exceed the dimension.
    pub fn check(&self, dimension: usize, allowed: &[VarKind]) -> Result<()> {
        if self.max_coordinate() > dimension {
            return Err(FellerError::config(format!(
                "expression `{}` references coordinate {} in dimension {}",
                self.source,
                self.max_coordinate(),
                dimension
            )));
        }
        for v in self.variables() {
            let kind = VarKind::of(v);
            if !allowed.contains(&kind) {
                return Err(FellerError::config(format!(
                    "expression `{}` may not reference {:?} variables",
                    self.source, kind
                )));
            }
        }
        Ok(())
    }
}

/// Variable families, used to restrict which variables an expression may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    State,
    Frequency,
    Jump,
    Argument,
}

impl VarKind {
    fn of(v: Var) -> Self {
        match v {
            Var::X(_) | Var::NormX => Self::State,
            Var::Xi(_) | Var::NormXi => Self::Frequency,
            Var::Z(_) | Var::NormZ => Self::Jump,
            Var::S => Self::Argument,
        }
    }
}

fn collect_vars(node: &Node, out: &mut Vec<Var>) {
    match node {
        Node::Const(_) => {}
        Node::Var(v) => {
            if !out.contains(v) {
                out.push(*v)
            }
        }
        Node::Neg(a) => collect_vars(a, out),
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
            collect_vars(a, out);
            collect_vars(b, out);
        }
        Node::Call(_, args) => args.iter().for_each(|a| collect_vars(a, out)),
    }
}

fn coord<T: Scalar>(v: &[T], i: usize) -> T {
    v.get(i).copied().unwrap_or_else(T::zero)
}

fn eval_node<T: Scalar>(node: &Node, b: &Bindings<'_, T>) -> T {
    match node {
        Node::Const(c) => T::lit(*c),
        Node::Var(v) => match *v {
            Var::X(i) => coord(b.x, i),
            Var::Xi(i) => coord(b.xi, i),
            Var::Z(i) => coord(b.z, i),
            Var::NormX => norm(b.x),
            Var::NormXi => norm(b.xi),
            Var::NormZ => norm(b.z),
            Var::S => b.s,
        },
        Node::Neg(a) => -eval_node(a, b),
        Node::Add(l, r) => eval_node(l, b) + eval_node(r, b),
        Node::Sub(l, r) => eval_node(l, b) - eval_node(r, b),
        Node::Mul(l, r) => eval_node(l, b) * eval_node(r, b),
        Node::Div(l, r) => eval_node(l, b) / eval_node(r, b),
        Node::Pow(l, r) => power(eval_node(l, b), eval_node(r, b)),
        Node::Call(f, args) => {
            let a = eval_node(&args[0], b);
            match f {
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Exp => a.exp(),
                Func::Log => a.ln(),
                Func::Abs => a.abs(),
                Func::Sqrt => a.sqrt(),
                Func::Min => a.min(eval_node(&args[1], b)),
                Func::Max => a.max(eval_node(&args[1], b)),
                Func::Pow => power(a, eval_node(&args[1], b)),
            }
        }
    }
}

/// `base^exp` with integer exponents handled exactly (so `(-2)^2 = 4`) and `0^p = 0` for `p > 0`.
fn power<T: Scalar>(base: T, exp: T) -> T {
    if exp == exp.round() && exp.abs() <= T::lit(64.0) {
        return base.powi(exp.to_i32().unwrap_or(0));
    }
    if base == T::zero() && exp > T::zero() {
        return T::zero();
    }
    base.powf(exp)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> FellerError {
        FellerError::Expression { offset: self.pos, message: message.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(b'/') {
                lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat(b'-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let exp = self.unary()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.identifier(),
            Some(_) => Err(self.error("unexpected character")),
        }
    }

    fn number(&mut self) -> Result<Node> {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.') {
            self.pos += 1;
        }
        if self.pos < self.src.len() && (self.src[self.pos] == b'e' || self.src[self.pos] == b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.src.len() && (self.src[self.pos] == b'+' || self.src[self.pos] == b'-') {
                self.pos += 1;
            }
            if self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            } else {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        text.parse::<f64>()
            .map(Node::Const)
            .map_err(|_| FellerError::Expression { offset: start, message: format!("bad number `{text}`") })
    }

    fn identifier(&mut self) -> Result<Node> {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        if let Some(func) = Func::from_name(name) {
            if !self.eat(b'(') {
                return Err(self.error("expected `(` after function name"));
            }
            let mut args = vec![self.expr()?];
            while self.eat(b',') {
                args.push(self.expr()?);
            }
            if !self.eat(b')') {
                return Err(self.error("expected `)` after arguments"));
            }
            if args.len() != func.arity() {
                return Err(FellerError::Expression {
                    offset: start,
                    message: format!("`{name}` takes {} argument(s), got {}", func.arity(), args.len()),
                });
            }
            return Ok(Node::Call(func, args));
        }
        let var = match name {
            "pi" => return Ok(Node::Const(std::f64::consts::PI)),
            "e" => return Ok(Node::Const(std::f64::consts::E)),
            "x" => Var::X(0),
            "xi" => Var::Xi(0),
            "z" => Var::Z(0),
            "s" => Var::S,
            "norm_x" => Var::NormX,
            "norm_xi" => Var::NormXi,
            "norm_z" => Var::NormZ,
            _ => indexed_var(name).ok_or_else(|| FellerError::Expression {
                offset: start,
                message: format!("unknown identifier `{name}`"),
            })?,
        };
        Ok(Node::Var(var))
    }
}

fn indexed_var(name: &str) -> Option<Var> {
    let (prefix, digits) = if let Some(d) = name.strip_prefix("xi") {
        ("xi", d)
    } else if let Some(d) = name.strip_prefix('x') {
        ("x", d)
    } else if let Some(d) = name.strip_prefix('z') {
        ("z", d)
    } else {
        return None;
    };
    let idx: usize = digits.parse().ok()?;
    if !(1..=3).contains(&idx) {
        return None;
    }
    Some(match prefix {
        "xi" => Var::Xi(idx - 1),
        "x" => Var::X(idx - 1),
        _ => Var::Z(idx - 1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval1(src: &str, x: f64, xi: f64) -> f64 {
        Expr::parse(src).unwrap().eval(&Bindings::symbol(&[x], &[xi]))
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(eval1("1 + 2 * 3", 0.0, 0.0), 7.0);
        assert_eq!(eval1("2 ^ 3 ^ 2", 0.0, 0.0), 512.0);
        assert_eq!(eval1("-2 ^ 2", 0.0, 0.0), -4.0);
        assert_eq!(eval1("(1 - 4) / 3", 0.0, 0.0), -1.0);
    }

    #[test]
    fn vocabulary() {
        let v = eval1("1.5 + 0.3*sin(x)", std::f64::consts::FRAC_PI_2, 0.0);
        assert!((v - 1.8).abs() < 1e-15);
        assert_eq!(eval1("max(abs(xi), 2) + min(1, 3)", 0.0, -5.0), 6.0);
        assert!((eval1("exp(log(7))", 0.0, 0.0) - 7.0).abs() < 1e-14);
        assert_eq!(eval1("pow(norm_xi, 2)", 0.0, -3.0), 9.0);
        assert!((eval1("1e-3 * 2.5E2", 0.0, 0.0) - 0.25).abs() < 1e-15);
        assert!((eval1("pi", 0.0, 0.0) - std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn rejects_garbage() {
        assert!(Expr::parse("1 +").is_err());
        assert!(Expr::parse("foo(1)").is_err());
        assert!(Expr::parse("sin 1").is_err());
        assert!(Expr::parse("max(1)").is_err());
        assert!(Expr::parse("x4").is_err());
        assert!(Expr::parse("(1").is_err());
    }

    #[test]
    fn variable_introspection() {
        let e = Expr::parse("norm_xi^2 * (2 + sin(x2))").unwrap();
        assert!(e.depends_on_state());
        assert_eq!(e.max_coordinate(), 2);
        assert!(e.check(1, &[VarKind::State, VarKind::Frequency]).is_err());
        assert!(e.check(2, &[VarKind::Frequency]).is_err());
        assert!(e.check(2, &[VarKind::State, VarKind::Frequency]).is_ok());
        assert!(!Expr::parse("abs(xi)").unwrap().depends_on_state());
    }

    #[test]
    fn generic_over_f32() {
        let e = Expr::parse("s^0.5").unwrap();
        let b = Bindings { x: &[], xi: &[], z: &[], s: 4.0f32 };
        assert_eq!(e.eval(&b), 2.0f32);
    }
}
