//! Coefficient expressions in the two variables `x` and `t`.
//!
//! Expressions are parsed from text (see [`parse`]), evaluated in IEEE double
//! precision with domain errors reported instead of propagated as NaN, and
//! differentiated symbolically. Only literal arithmetic is folded; no other
//! simplification is attempted.

mod diff;
mod eval;
mod lexer;
mod parser;

use std::fmt;
use std::sync::Arc;

pub use lexer::{tokenize, Token, TokenKind};
pub use parser::parse;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    X,
    T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

/// Expression tree. Subtrees are shared through `Arc`, so cloning is cheap and
/// values can be read from several threads.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Neg(Arc<Expr>),
    Func(Func, Arc<Expr>),
    Binary(BinOp, Arc<Expr>, Arc<Expr>),
}

impl Expr {
    pub fn constant(value: f64) -> Expr {
        Expr::Const(value)
    }

    pub fn x() -> Expr {
        Expr::Var(Var::X)
    }

    pub fn t() -> Expr {
        Expr::Var(Var::T)
    }

    pub fn zero() -> Expr {
        Expr::Const(0.0)
    }

    /// Value of the expression if it contains no variables.
    pub fn as_constant(&self) -> Option<f64> {
        if self.depends_on(Var::X) || self.depends_on(Var::T) {
            return None;
        }
        self.eval(0.0, 0.0).ok()
    }

    pub fn is_zero(&self) -> bool {
        self.as_constant() == Some(0.0)
    }

    pub fn depends_on(&self, var: Var) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(v) => *v == var,
            Expr::Neg(a) | Expr::Func(_, a) => a.depends_on(var),
            Expr::Binary(_, a, b) => a.depends_on(var) || b.depends_on(var),
        }
    }

    /// Replaces every occurrence of `var` by the literal `value`.
    pub fn substitute(&self, var: Var, value: f64) -> Expr {
        match self {
            Expr::Const(_) => self.clone(),
            Expr::Var(v) if *v == var => Expr::Const(value),
            Expr::Var(_) => self.clone(),
            Expr::Neg(a) => Expr::Neg(Arc::new(a.substitute(var, value))),
            Expr::Func(f, a) => Expr::Func(*f, Arc::new(a.substitute(var, value))),
            Expr::Binary(op, a, b) => Expr::Binary(
                *op,
                Arc::new(a.substitute(var, value)),
                Arc::new(b.substitute(var, value)),
            ),
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Neg(a) | Expr::Func(_, a) => 1 + a.size(),
            Expr::Binary(_, a, b) => 1 + a.size() + b.size(),
        }
    }
}

impl From<f64> for Expr {
    fn from(v: f64) -> Self {
        Expr::Const(v)
    }
}

// Builders with literal folding, shared by differentiation and the
// manufactured-problem construction.
impl Expr {
    pub fn add(a: Expr, b: Expr) -> Expr {
        match (a.as_literal(), b.as_literal()) {
            (Some(x), Some(y)) => Expr::Const(x + y),
            (Some(x), _) if x == 0.0 => b,
            (_, Some(y)) if y == 0.0 => a,
            _ => Expr::Binary(BinOp::Add, Arc::new(a), Arc::new(b)),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (a.as_literal(), b.as_literal()) {
            (Some(x), Some(y)) => Expr::Const(x - y),
            (Some(x), _) if x == 0.0 => Expr::neg(b),
            (_, Some(y)) if y == 0.0 => a,
            _ => Expr::Binary(BinOp::Sub, Arc::new(a), Arc::new(b)),
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (a.as_literal(), b.as_literal()) {
            (Some(x), Some(y)) => Expr::Const(x * y),
            (Some(x), _) | (_, Some(x)) if x == 0.0 => Expr::Const(0.0),
            (Some(x), _) if x == 1.0 => b,
            (_, Some(y)) if y == 1.0 => a,
            _ => Expr::Binary(BinOp::Mul, Arc::new(a), Arc::new(b)),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        match (a.as_literal(), b.as_literal()) {
            (Some(x), Some(y)) if y != 0.0 => Expr::Const(x / y),
            (Some(x), _) if x == 0.0 => Expr::Const(0.0),
            (_, Some(y)) if y == 1.0 => a,
            _ => Expr::Binary(BinOp::Div, Arc::new(a), Arc::new(b)),
        }
    }

    pub fn pow(a: Expr, b: Expr) -> Expr {
        match (a.as_literal(), b.as_literal()) {
            (Some(x), Some(y)) if x.powf(y).is_finite() => Expr::Const(x.powf(y)),
            (_, Some(y)) if y == 1.0 => a,
            (_, Some(y)) if y == 0.0 => Expr::Const(1.0),
            _ => Expr::Binary(BinOp::Pow, Arc::new(a), Arc::new(b)),
        }
    }

    pub fn neg(a: Expr) -> Expr {
        match a.as_literal() {
            Some(x) => Expr::Const(-x),
            None => Expr::Neg(Arc::new(a)),
        }
    }

    pub fn func(f: Func, a: Expr) -> Expr {
        Expr::Func(f, Arc::new(a))
    }

    fn as_literal(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }
}

/// Fully parenthesized output that parses back to an identical tree value.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) => {
                write!(f, "(-{:?})", -c)
            }
            Expr::Const(c) => write!(f, "{c:?}"),
            Expr::Var(Var::X) => f.write_str("x"),
            Expr::Var(Var::T) => f.write_str("t"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Func(func, a) => write!(f, "{}({a})", func.name()),
            Expr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
        }
    }
}
