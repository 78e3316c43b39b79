//! Expression trees over a small whitelist of real-analytic primitives.
//!
//! Formulas are written in ordinary infix form over the single variable `x`:
//! `+ - * / ^` (integer exponents only), `exp`, `tanh`, `step` (a C∞ smooth
//! step from 0 at `t <= 0` to 1 at `t >= 1`) and `flat(k, t)`, the flat
//! function `t^-k exp(-1/t)` for `t > 0` and `0` otherwise. `step` is built
//! from `flat` and only exists so that potentials can be blended to constants
//! outside a bounded region.
//!
//! Derivatives are available in two forms: [`Expr::derivative`] returns an
//! exact symbolic tree, and [`Expr::taylor`] propagates truncated Taylor
//! series through the tree, which is what the validators use to read off
//! high-order derivatives at a point without expression swell.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use num_traits::Float;

/// Default cap on the order accepted by [`Expr::derivative`].
pub const DEFAULT_MAX_ORDER: usize = 12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("derivative order {requested} exceeds the cap {cap}")]
    OrderCap { requested: usize, cap: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Const(f64),
    X,
    Neg(Expr),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    Powi(Expr, i32),
    Exp(Expr),
    Tanh(Expr),
    Step(Expr),
    Flat(u32, Expr),
}

/// Immutable, cheaply clonable expression in the variable `x`.
#[derive(Clone, PartialEq)]
pub struct Expr(Arc<Node>);

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

impl Expr {
    fn new(node: Node) -> Self {
        Expr(Arc::new(node))
    }

    pub fn constant(c: f64) -> Self {
        Self::new(Node::Const(c))
    }

    pub fn x() -> Self {
        Self::new(Node::X)
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    pub fn parse(text: &str) -> Result<Self, ExprError> {
        Parser::new(text).parse_all()
    }

    /// Value of a constant tree, `None` if the tree mentions `x`.
    pub fn as_const(&self) -> Option<f64> {
        match *self.0 {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn neg(&self) -> Self {
        match &*self.0 {
            Node::Const(c) => Self::constant(-c),
            Node::Neg(inner) => inner.clone(),
            _ => Self::new(Node::Neg(self.clone())),
        }
    }

    pub fn add(&self, rhs: &Expr) -> Self {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) => Self::constant(a + b),
            (Some(a), _) if a == 0.0 => rhs.clone(),
            (_, Some(b)) if b == 0.0 => self.clone(),
            _ => Self::new(Node::Add(self.clone(), rhs.clone())),
        }
    }

    pub fn sub(&self, rhs: &Expr) -> Self {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) => Self::constant(a - b),
            (Some(a), _) if a == 0.0 => rhs.neg(),
            (_, Some(b)) if b == 0.0 => self.clone(),
            _ => Self::new(Node::Sub(self.clone(), rhs.clone())),
        }
    }

    pub fn mul(&self, rhs: &Expr) -> Self {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) => Self::constant(a * b),
            (Some(a), _) | (_, Some(a)) if a == 0.0 => Self::zero(),
            (Some(a), _) if a == 1.0 => rhs.clone(),
            (_, Some(b)) if b == 1.0 => self.clone(),
            (Some(a), _) if a == -1.0 => rhs.neg(),
            (_, Some(b)) if b == -1.0 => self.neg(),
            _ => Self::new(Node::Mul(self.clone(), rhs.clone())),
        }
    }

    pub fn div(&self, rhs: &Expr) -> Self {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) => Self::constant(a / b),
            (Some(a), _) if a == 0.0 => Self::zero(),
            (_, Some(b)) if b == 1.0 => self.clone(),
            _ => Self::new(Node::Div(self.clone(), rhs.clone())),
        }
    }

    pub fn powi(&self, n: i32) -> Self {
        match (self.as_const(), n) {
            (_, 0) => Self::one(),
            (_, 1) => self.clone(),
            (Some(c), _) => Self::constant(c.powi(n)),
            _ => Self::new(Node::Powi(self.clone(), n)),
        }
    }

    pub fn exp(&self) -> Self {
        match self.as_const() {
            Some(c) => Self::constant(c.exp()),
            None => Self::new(Node::Exp(self.clone())),
        }
    }

    pub fn tanh(&self) -> Self {
        match self.as_const() {
            Some(c) => Self::constant(c.tanh()),
            None => Self::new(Node::Tanh(self.clone())),
        }
    }

    /// Smooth step: 0 for `t <= 0`, 1 for `t >= 1`, C∞ in between.
    pub fn step(&self) -> Self {
        match self.as_const() {
            Some(c) => Self::constant(smooth_step(c)),
            None => Self::new(Node::Step(self.clone())),
        }
    }

    /// `t^-k exp(-1/t)` for `t > 0`, zero otherwise.
    pub fn flat(&self, k: u32) -> Self {
        match self.as_const() {
            Some(c) => Self::constant(flat_value(k, c)),
            None => Self::new(Node::Flat(k, self.clone())),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &*self.0 {
            Node::Const(c) => *c,
            Node::X => x,
            Node::Neg(a) => -a.eval(x),
            Node::Add(a, b) => a.eval(x) + b.eval(x),
            Node::Sub(a, b) => a.eval(x) - b.eval(x),
            Node::Mul(a, b) => a.eval(x) * b.eval(x),
            Node::Div(a, b) => a.eval(x) / b.eval(x),
            Node::Powi(a, n) => a.eval(x).powi(*n),
            Node::Exp(a) => a.eval(x).exp(),
            Node::Tanh(a) => a.eval(x).tanh(),
            Node::Step(a) => smooth_step(a.eval(x)),
            Node::Flat(k, a) => flat_value(*k, a.eval(x)),
        }
    }

    /// Exact first derivative.
    pub fn diff(&self) -> Expr {
        match &*self.0 {
            Node::Const(_) => Expr::zero(),
            Node::X => Expr::one(),
            Node::Neg(a) => a.diff().neg(),
            Node::Add(a, b) => a.diff().add(&b.diff()),
            Node::Sub(a, b) => a.diff().sub(&b.diff()),
            Node::Mul(a, b) => a.diff().mul(b).add(&a.mul(&b.diff())),
            Node::Div(a, b) => {
                if let Some(c) = b.as_const() {
                    return a.diff().div(&Expr::constant(c));
                }
                a.diff().mul(b).sub(&a.mul(&b.diff())).div(&b.powi(2))
            }
            Node::Powi(a, n) => Expr::constant(*n as f64).mul(&a.powi(n - 1)).mul(&a.diff()),
            Node::Exp(a) => a.diff().mul(self),
            Node::Tanh(a) => a.diff().mul(&Expr::one().sub(&self.powi(2))),
            Node::Step(t) => {
                // step = f(t) / (f(t) + f(1-t)) with f = flat_0
                let u = Expr::one().sub(t);
                let f_t = t.flat(0);
                let f_u = u.flat(0);
                let df_t = t.flat(2);
                let df_u = u.flat(2);
                let num = df_t.mul(&f_u).add(&f_t.mul(&df_u));
                t.diff().mul(&num.div(&f_t.add(&f_u).powi(2)))
            }
            Node::Flat(k, t) => {
                // d/dt t^-k e^{-1/t} = t^-(k+2) e^{-1/t} - k t^-(k+1) e^{-1/t}
                let inner = if *k == 0 {
                    t.flat(2)
                } else {
                    t.flat(k + 2)
                        .sub(&Expr::constant(*k as f64).mul(&t.flat(k + 1)))
                };
                t.diff().mul(&inner)
            }
        }
    }

    /// Exact `n`-th derivative, refusing orders above `cap`.
    pub fn derivative_capped(&self, n: usize, cap: usize) -> Result<Expr, ExprError> {
        if n > cap {
            return Err(ExprError::OrderCap { requested: n, cap });
        }
        let mut e = self.clone();
        for _ in 0..n {
            e = e.diff();
        }
        Ok(e)
    }

    pub fn derivative(&self, n: usize) -> Result<Expr, ExprError> {
        self.derivative_capped(n, DEFAULT_MAX_ORDER)
    }

    /// Taylor coefficients `e^(j)(x0) / j!` for `j = 0..=order`.
    pub fn taylor(&self, x0: f64, order: usize) -> Vec<f64> {
        let n = order + 1;
        self.jet(x0, n).0
    }

    /// Derivative values `e^(j)(x0)` for `j = 0..=order`.
    pub fn derivatives_at(&self, x0: f64, order: usize) -> Vec<f64> {
        let mut c = self.taylor(x0, order);
        let mut fact = 1.0;
        for (j, v) in c.iter_mut().enumerate() {
            if j > 0 {
                fact *= j as f64;
            }
            *v *= fact;
        }
        c
    }

    fn jet(&self, x0: f64, n: usize) -> Jet {
        match &*self.0 {
            Node::Const(c) => Jet::constant(*c, n),
            Node::X => {
                let mut v = vec![0.0; n];
                v[0] = x0;
                if n > 1 {
                    v[1] = 1.0;
                }
                Jet(v)
            }
            Node::Neg(a) => a.jet(x0, n).scale(-1.0),
            Node::Add(a, b) => a.jet(x0, n).add(&b.jet(x0, n)),
            Node::Sub(a, b) => a.jet(x0, n).add(&b.jet(x0, n).scale(-1.0)),
            Node::Mul(a, b) => a.jet(x0, n).mul(&b.jet(x0, n)),
            Node::Div(a, b) => a.jet(x0, n).div(&b.jet(x0, n)),
            Node::Powi(a, p) => a.jet(x0, n).powi(*p),
            Node::Exp(a) => a.jet(x0, n).exp(),
            Node::Tanh(a) => a.jet(x0, n).tanh(),
            Node::Step(a) => {
                let t = a.jet(x0, n);
                let u = Jet::constant(1.0, n).add(&t.clone().scale(-1.0));
                let ft = t.flat(0);
                let fu = u.flat(0);
                ft.div(&ft.add(&fu))
            }
            Node::Flat(k, a) => a.jet(x0, n).flat(*k),
        }
    }

    fn precedence(&self) -> u8 {
        match &*self.0 {
            Node::Add(..) | Node::Sub(..) => 1,
            Node::Mul(..) | Node::Div(..) => 2,
            Node::Neg(_) => 3,
            Node::Powi(..) => 4,
            _ => 5,
        }
    }
}

pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = flat_value(0, t);
        let b = flat_value(0, 1.0 - t);
        a / (a + b)
    }
}

fn flat_value(k: u32, t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp() * t.powi(-(k as i32))
    }
}

/// Truncated Taylor series (coefficients, not derivatives).
#[derive(Debug, Clone)]
struct Jet(Vec<f64>);

impl Jet {
    fn constant(c: f64, n: usize) -> Self {
        let mut v = vec![0.0; n];
        v[0] = c;
        Jet(v)
    }

    fn len(&self) -> usize {
        self.0.len()
    }

    fn scale(mut self, s: f64) -> Self {
        self.0.iter_mut().for_each(|v| *v *= s);
        self
    }

    fn add(&self, o: &Jet) -> Jet {
        Jet(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }

    fn mul(&self, o: &Jet) -> Jet {
        let n = self.len();
        let mut out = vec![0.0; n];
        for i in 0..n {
            if self.0[i] == 0.0 {
                continue;
            }
            for j in 0..n - i {
                out[i + j] += self.0[i] * o.0[j];
            }
        }
        Jet(out)
    }

    fn div(&self, o: &Jet) -> Jet {
        let n = self.len();
        let mut q = vec![0.0; n];
        for k in 0..n {
            let mut s = self.0[k];
            for j in 1..=k {
                s -= o.0[j] * q[k - j];
            }
            q[k] = s / o.0[0];
        }
        Jet(q)
    }

    fn powi(&self, p: i32) -> Jet {
        let n = self.len();
        if p < 0 {
            return Jet::constant(1.0, n).div(&self.powi(-p));
        }
        let mut result = Jet::constant(1.0, n);
        let mut base = self.clone();
        let mut e = p as u32;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    fn exp(&self) -> Jet {
        let n = self.len();
        let mut e = vec![0.0; n];
        e[0] = self.0[0].exp();
        for k in 1..n {
            let mut s = 0.0;
            for j in 1..=k {
                s += j as f64 * self.0[j] * e[k - j];
            }
            e[k] = s / k as f64;
        }
        Jet(e)
    }

    fn tanh(&self) -> Jet {
        let n = self.len();
        let mut t = vec![0.0; n];
        let mut s = vec![0.0; n];
        t[0] = self.0[0].tanh();
        s[0] = 1.0 - t[0] * t[0];
        for k in 1..n {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += j as f64 * self.0[j] * s[k - j];
            }
            t[k] = acc / k as f64;
            let mut sq = 0.0;
            for i in 0..=k {
                sq += t[i] * t[k - i];
            }
            s[k] = -sq;
        }
        Jet(t)
    }

    fn flat(&self, k: u32) -> Jet {
        let n = self.len();
        if self.0[0] <= 0.0 {
            return Jet(vec![0.0; n]);
        }
        let r = Jet::constant(1.0, n).div(self);
        r.powi(k as i32).mul(&r.clone().scale(-1.0).exp())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wrap = |f: &mut fmt::Formatter<'_>, e: &Expr, min: u8| -> fmt::Result {
            if e.precedence() < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        match &*self.0 {
            Node::Const(c) => {
                if *c < 0.0 || c.is_sign_negative() {
                    write!(f, "({c:?})")
                } else {
                    write!(f, "{c:?}")
                }
            }
            Node::X => write!(f, "x"),
            Node::Neg(a) => {
                write!(f, "-")?;
                wrap(f, a, 4)
            }
            Node::Add(a, b) => {
                wrap(f, a, 1)?;
                write!(f, " + ")?;
                wrap(f, b, 2)
            }
            Node::Sub(a, b) => {
                wrap(f, a, 1)?;
                write!(f, " - ")?;
                wrap(f, b, 2)
            }
            Node::Mul(a, b) => {
                wrap(f, a, 2)?;
                write!(f, "*")?;
                wrap(f, b, 3)
            }
            Node::Div(a, b) => {
                wrap(f, a, 2)?;
                write!(f, "/")?;
                wrap(f, b, 3)
            }
            Node::Powi(a, n) => {
                wrap(f, a, 5)?;
                if *n < 0 {
                    write!(f, "^({n})")
                } else {
                    write!(f, "^{n}")
                }
            }
            Node::Exp(a) => write!(f, "exp({a})"),
            Node::Tanh(a) => write!(f, "tanh({a})"),
            Node::Step(a) => write!(f, "step({a})"),
            Node::Flat(k, a) => write!(f, "flat({k}, {a})"),
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser {
            src,
            bytes: src.as_bytes(),
            pos: 0,
        }
    }

    fn err<T>(&self, offset: usize, message: &str) -> Result<T, ExprError> {
        Err(ExprError::Syntax {
            offset,
            message: message.to_string(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
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

    fn expect(&mut self, c: u8) -> Result<(), ExprError> {
        if self.eat(c) {
            Ok(())
        } else {
            let at = self.pos;
            self.err(at, &alloc::format!("expected `{}`", c as char))
        }
    }

    fn parse_all(mut self) -> Result<Expr, ExprError> {
        let e = self.expr()?;
        if self.peek().is_some() {
            let at = self.pos;
            return self.err(at, "unexpected trailing input");
        }
        Ok(e)
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::new(Node::Add(lhs, self.term()?));
            } else if self.eat(b'-') {
                lhs = Expr::new(Node::Sub(lhs, self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::new(Node::Mul(lhs, self.unary()?));
            } else if self.eat(b'/') {
                lhs = Expr::new(Node::Div(lhs, self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat(b'-') {
            let inner = self.unary()?;
            return Ok(match inner.as_const() {
                Some(c) => Expr::constant(-c),
                None => Expr::new(Node::Neg(inner)),
            });
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let n = self.integer_exponent()?;
            return Ok(Expr::new(Node::Powi(base, n)));
        }
        Ok(base)
    }

    fn integer_exponent(&mut self) -> Result<i32, ExprError> {
        let paren = self.eat(b'(');
        let neg = self.eat(b'-');
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err(start, "expected an integer exponent");
        }
        let v: i32 = match self.src[start..self.pos].parse() {
            Ok(v) => v,
            Err(_) => return self.err(start, "exponent out of range"),
        };
        if paren {
            self.expect(b')')?;
        }
        Ok(if neg { -v } else { v })
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let Some(c) = self.peek() else {
            let at = self.pos;
            return self.err(at, "unexpected end of input");
        };
        if c == b'(' {
            self.pos += 1;
            let e = self.expr()?;
            self.expect(b')')?;
            return Ok(e);
        }
        if c.is_ascii_digit() || c == b'.' {
            return self.number();
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = self.pos;
            while self.pos < self.bytes.len()
                && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'_')
            {
                self.pos += 1;
            }
            let name = &self.src[start..self.pos];
            return match name {
                "x" => Ok(Expr::x()),
                "exp" | "tanh" | "step" => {
                    self.expect(b'(')?;
                    let arg = self.expr()?;
                    self.expect(b')')?;
                    Ok(Expr::new(match name {
                        "exp" => Node::Exp(arg),
                        "tanh" => Node::Tanh(arg),
                        _ => Node::Step(arg),
                    }))
                }
                "flat" => {
                    self.expect(b'(')?;
                    self.skip_ws();
                    let kstart = self.pos;
                    let k = self.integer_exponent()?;
                    if k < 0 {
                        return self.err(kstart, "flat order must be non-negative");
                    }
                    self.expect(b',')?;
                    let arg = self.expr()?;
                    self.expect(b')')?;
                    Ok(Expr::new(Node::Flat(k as u32, arg)))
                }
                _ => Err(ExprError::UnknownIdentifier {
                    name: name.to_string(),
                    offset: start,
                }),
            };
        }
        let at = self.pos;
        self.err(at, &alloc::format!("unexpected character `{}`", c as char))
    }

    fn number(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        let b = self.bytes;
        while self.pos < b.len() && (b[self.pos].is_ascii_digit() || b[self.pos] == b'.') {
            self.pos += 1;
        }
        if self.pos < b.len() && (b[self.pos] == b'e' || b[self.pos] == b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < b.len() && (b[self.pos] == b'+' || b[self.pos] == b'-') {
                self.pos += 1;
            }
            let digits = self.pos;
            while self.pos < b.len() && b[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if digits == self.pos {
                self.pos = save;
            }
        }
        match self.src[start..self.pos].parse::<f64>() {
            Ok(v) => Ok(Expr::constant(v)),
            Err(_) => self.err(start, "malformed number"),
        }
    }
}

/// Boxed closure view of an expression, handy for quadrature callbacks.
pub fn as_fn(e: &Expr) -> Box<dyn Fn(f64) -> f64 + Send + Sync + '_> {
    Box::new(move |x| e.eval(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    #[test]
    fn parses_polynomial_and_products() {
        let e = p("x^2 - 2*x");
        assert_eq!(e.eval(3.0), 3.0);
        assert_eq!(e.to_string(), "x^2 - 2.0*x");
        let t = p("4*tanh(x)");
        assert!((t.eval(0.5) - 4.0 * 0.5f64.tanh()).abs() < 1e-15);
        assert!(matches!(&*t.0, Node::Mul(..)));
    }

    #[test]
    fn syntax_error_reports_offset() {
        match Expr::parse("x + ") {
            Err(ExprError::Syntax { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            Expr::parse("sin(x)"),
            Err(ExprError::UnknownIdentifier { offset: 0, .. })
        ));
        assert!(Expr::parse("x^1.5").is_err());
        assert!(Expr::parse("(x").is_err());
    }

    #[test]
    fn print_parse_round_trip() {
        for s in [
            "x^2 - 2*x",
            "-(x - 1)^(-2)*exp(-x^2)/3",
            "4*tanh(x) - (x^2 - 2*x)",
            "(1 - step((x - 3.1)/1))*(x^2 - 2*x) + step((x - 3.1)/1)*3.6",
            "flat(3, x + 1e-3)",
            "2.5e-3 - -x",
        ] {
            let e = p(s);
            let again = p(&e.to_string());
            assert_eq!(e, again, "{s} -> {e}");
            for x in [-1.3, 0.2, 2.7, 3.5] {
                let (a, b) = (e.eval(x), again.eval(x));
                assert!(a == b || (a.is_nan() && b.is_nan()));
            }
        }
    }

    #[test]
    fn symbolic_derivatives() {
        let d = p("x^2 - 2*x").derivative(1).unwrap();
        for x in [-2.0, 0.0, 1.5] {
            assert!((d.eval(x) - (2.0 * x - 2.0)).abs() < 1e-14);
        }
        let d = p("tanh(x)").derivative(1).unwrap();
        for x in [-2.0, 0.0, 1.5] {
            let t = x.tanh();
            assert!((d.eval(x) - (1.0 - t * t)).abs() < 1e-15);
        }
        assert_eq!(p("x^3").derivative(3).unwrap().eval(0.0), 6.0);
        assert!(matches!(
            p("x").derivative(13),
            Err(ExprError::OrderCap {
                requested: 13,
                cap: 12
            })
        ));
    }

    #[test]
    fn jets_agree_with_symbolic_derivatives() {
        let e = p("exp(-x^2/2)*tanh(3*x - 1)/(2 + x^2) + step(x/2 + 0.5)");
        for x0 in [-0.7, 0.0, 0.4] {
            let jet = e.derivatives_at(x0, 5);
            for (n, &v) in jet.iter().enumerate() {
                let s = e.derivative(n).unwrap().eval(x0);
                assert!(
                    (s - v).abs() <= 1e-10 * (1.0 + v.abs()),
                    "order {n} at {x0}: {s} vs {v}"
                );
            }
        }
    }

    #[test]
    fn step_is_flat_outside_unit_interval() {
        let e = p("step(x)");
        assert_eq!(e.eval(-0.5), 0.0);
        assert_eq!(e.eval(1.5), 1.0);
        assert!((e.eval(0.5) - 0.5).abs() < 1e-15);
        let d = e.derivatives_at(-0.1, 6);
        assert!(d.iter().all(|&v| v == 0.0));
        let d = e.derivatives_at(1.2, 6);
        assert_eq!(d[0], 1.0);
        assert!(d[1..].iter().all(|&v| v == 0.0));
    }
}
