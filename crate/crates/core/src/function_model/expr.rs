use std::fmt;

use crate::function_model::fmt_num;

/// Expression tree in the single variable `x`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Abs(Box<Expr>),
}

impl Expr {
    /// Raw evaluation; the caller decides what to do with non-finite results.
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var => x,
            Expr::Neg(e) => -e.eval(x),
            Expr::Add(l, r) => l.eval(x) + r.eval(x),
            Expr::Sub(l, r) => l.eval(x) - r.eval(x),
            Expr::Mul(l, r) => l.eval(x) * r.eval(x),
            Expr::Div(l, r) => l.eval(x) / r.eval(x),
            Expr::Pow(l, r) => l.eval(x).powf(r.eval(x)),
            Expr::Sin(e) => e.eval(x).sin(),
            Expr::Cos(e) => e.eval(x).cos(),
            Expr::Abs(e) => e.eval(x).abs(),
        }
    }
}

// Fully parenthesized so that parsing the output rebuilds the same tree.
// Negative constants print as `(-c)`, which the parser folds back into a constant.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) if c.is_sign_negative() => write!(f, "(-{})", fmt_num(-c)),
            Expr::Const(c) => f.write_str(&fmt_num(*c)),
            Expr::Var => f.write_str("x"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Add(l, r) => write!(f, "({l}+{r})"),
            Expr::Sub(l, r) => write!(f, "({l}-{r})"),
            Expr::Mul(l, r) => write!(f, "({l}*{r})"),
            Expr::Div(l, r) => write!(f, "({l}/{r})"),
            Expr::Pow(l, r) => write!(f, "({l}^{r})"),
            Expr::Sin(e) => write!(f, "sin({e})"),
            Expr::Cos(e) => write!(f, "cos({e})"),
            Expr::Abs(e) => write!(f, "abs({e})"),
        }
    }
}
