//! Symbolic scalar fields: expression trees with exact differentiation,
//! conservative simplification and IEEE-double evaluation.
//!
//! Every smooth coefficient function in the library (anchor components,
//! structure functions, multiplier candidates, right-hand sides) is an
//! [`Expr`] over some [`Chart`](crate::chart::Chart). Expressions are
//! immutable after construction; evaluation is pure and reentrant.

mod parse;

pub use parse::{parse, ParseError};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// A point assigns a value to every coordinate it mentions.
pub type Point = BTreeMap<String, f64>;

/// Expression tree over named coordinates.
///
/// Exponents of `Pow` are integers (negative allowed); the function set is
/// fixed to `exp`, `log`, `sin`, `cos`, `sqrt`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(String),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Pow(Box<Expr>, i32),
    Exp(Box<Expr>),
    Log(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Sqrt(Box<Expr>),
}

/// Evaluation failure: a coordinate missing from the point, or a domain
/// violation (division by zero, log of a nonpositive value, square root of
/// a negative value, non-finite result). Domain violations report the
/// offending subexpression rather than propagating NaN.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum EvalError {
    #[error("point does not assign coordinate `{0}`")]
    MissingCoordinate(String),
    #[error("division by zero in `{0}`")]
    DivByZero(String),
    #[error("log of nonpositive value in `{0}`")]
    LogDomain(String),
    #[error("sqrt of negative value in `{0}`")]
    SqrtDomain(String),
    #[error("non-finite result in `{0}`")]
    NonFinite(String),
}

impl Expr {
    pub fn constant(c: f64) -> Expr {
        Expr::Const(c)
    }

    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn zero() -> Expr {
        Expr::Const(0.0)
    }

    pub fn one() -> Expr {
        Expr::Const(1.0)
    }

    pub fn is_const_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == 0.0)
    }

    pub fn is_const_one(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == 1.0)
    }

    pub fn add(self, rhs: Expr) -> Expr {
        Expr::Add(Box::new(self), Box::new(rhs)).simplify()
    }

    pub fn sub(self, rhs: Expr) -> Expr {
        Expr::Sub(Box::new(self), Box::new(rhs)).simplify()
    }

    pub fn mul(self, rhs: Expr) -> Expr {
        Expr::Mul(Box::new(self), Box::new(rhs)).simplify()
    }

    pub fn div(self, rhs: Expr) -> Expr {
        Expr::Div(Box::new(self), Box::new(rhs)).simplify()
    }

    pub fn neg(self) -> Expr {
        Expr::Neg(Box::new(self)).simplify()
    }

    pub fn scale(self, c: f64) -> Expr {
        Expr::Const(c).mul(self)
    }

    /// Set of coordinate names appearing in the expression.
    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_variables(&mut out);
        out
    }

    fn collect_variables(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(name) => {
                out.insert(name.clone());
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.collect_variables(out);
                b.collect_variables(out);
            }
            Expr::Neg(a)
            | Expr::Pow(a, _)
            | Expr::Exp(a)
            | Expr::Log(a)
            | Expr::Sin(a)
            | Expr::Cos(a)
            | Expr::Sqrt(a) => a.collect_variables(out),
        }
    }

    /// Exact symbolic partial derivative with respect to `var`, simplified.
    pub fn differentiate(&self, var: &str) -> Expr {
        self.diff_inner(var).simplify()
    }

    fn diff_inner(&self, var: &str) -> Expr {
        match self {
            Expr::Const(_) => Expr::zero(),
            Expr::Var(name) => {
                if name == var {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Expr::Add(a, b) => Expr::Add(Box::new(a.diff_inner(var)), Box::new(b.diff_inner(var))),
            Expr::Sub(a, b) => Expr::Sub(Box::new(a.diff_inner(var)), Box::new(b.diff_inner(var))),
            Expr::Mul(a, b) => {
                let da = a.diff_inner(var);
                let db = b.diff_inner(var);
                Expr::Add(
                    Box::new(Expr::Mul(Box::new(da), b.clone())),
                    Box::new(Expr::Mul(a.clone(), Box::new(db))),
                )
            }
            Expr::Div(a, b) => {
                // (a/b)' = a'/b - a b'/b^2
                let da = a.diff_inner(var);
                let db = b.diff_inner(var);
                Expr::Sub(
                    Box::new(Expr::Div(Box::new(da), b.clone())),
                    Box::new(Expr::Div(
                        Box::new(Expr::Mul(a.clone(), Box::new(db))),
                        Box::new(Expr::Pow(b.clone(), 2)),
                    )),
                )
            }
            Expr::Neg(a) => Expr::Neg(Box::new(a.diff_inner(var))),
            Expr::Pow(a, k) => {
                // k a^(k-1) a'
                let da = a.diff_inner(var);
                Expr::Mul(
                    Box::new(Expr::Mul(
                        Box::new(Expr::Const(f64::from(*k))),
                        Box::new(Expr::Pow(a.clone(), k - 1)),
                    )),
                    Box::new(da),
                )
            }
            Expr::Exp(a) => Expr::Mul(Box::new(self.clone()), Box::new(a.diff_inner(var))),
            Expr::Log(a) => Expr::Div(Box::new(a.diff_inner(var)), a.clone()),
            Expr::Sin(a) => Expr::Mul(Box::new(Expr::Cos(a.clone())), Box::new(a.diff_inner(var))),
            Expr::Cos(a) => Expr::Neg(Box::new(Expr::Mul(
                Box::new(Expr::Sin(a.clone())),
                Box::new(a.diff_inner(var)),
            ))),
            Expr::Sqrt(a) => {
                // a' / (2 sqrt(a))
                Expr::Div(
                    Box::new(a.diff_inner(var)),
                    Box::new(Expr::Mul(
                        Box::new(Expr::Const(2.0)),
                        Box::new(Expr::Sqrt(a.clone())),
                    )),
                )
            }
        }
    }

    /// Evaluate at a point. Every variable of the expression must be
    /// assigned; domain violations are errors, not NaNs.
    pub fn evaluate(&self, point: &Point) -> Result<f64, EvalError> {
        let v = match self {
            Expr::Const(c) => *c,
            Expr::Var(name) => *point
                .get(name)
                .ok_or_else(|| EvalError::MissingCoordinate(name.clone()))?,
            Expr::Add(a, b) => a.evaluate(point)? + b.evaluate(point)?,
            Expr::Sub(a, b) => a.evaluate(point)? - b.evaluate(point)?,
            Expr::Mul(a, b) => a.evaluate(point)? * b.evaluate(point)?,
            Expr::Div(a, b) => {
                let den = b.evaluate(point)?;
                if den == 0.0 {
                    return Err(EvalError::DivByZero(self.to_string()));
                }
                a.evaluate(point)? / den
            }
            Expr::Neg(a) => -a.evaluate(point)?,
            Expr::Pow(a, k) => {
                let base = a.evaluate(point)?;
                if base == 0.0 && *k < 0 {
                    return Err(EvalError::DivByZero(self.to_string()));
                }
                base.powi(*k)
            }
            Expr::Exp(a) => a.evaluate(point)?.exp(),
            Expr::Log(a) => {
                let x = a.evaluate(point)?;
                if x <= 0.0 {
                    return Err(EvalError::LogDomain(self.to_string()));
                }
                x.ln()
            }
            Expr::Sin(a) => a.evaluate(point)?.sin(),
            Expr::Cos(a) => a.evaluate(point)?.cos(),
            Expr::Sqrt(a) => {
                let x = a.evaluate(point)?;
                if x < 0.0 {
                    return Err(EvalError::SqrtDomain(self.to_string()));
                }
                x.sqrt()
            }
        };
        if !v.is_finite() {
            return Err(EvalError::NonFinite(self.to_string()));
        }
        Ok(v)
    }

    /// Replace coordinates by expressions (used by pullbacks and by
    /// restriction to a submanifold). Names absent from the map are kept.
    pub fn substitute(&self, map: &BTreeMap<String, Expr>) -> Expr {
        let out = match self {
            Expr::Const(_) => self.clone(),
            Expr::Var(name) => map.get(name).cloned().unwrap_or_else(|| self.clone()),
            Expr::Add(a, b) => Expr::Add(Box::new(a.substitute(map)), Box::new(b.substitute(map))),
            Expr::Sub(a, b) => Expr::Sub(Box::new(a.substitute(map)), Box::new(b.substitute(map))),
            Expr::Mul(a, b) => Expr::Mul(Box::new(a.substitute(map)), Box::new(b.substitute(map))),
            Expr::Div(a, b) => Expr::Div(Box::new(a.substitute(map)), Box::new(b.substitute(map))),
            Expr::Neg(a) => Expr::Neg(Box::new(a.substitute(map))),
            Expr::Pow(a, k) => Expr::Pow(Box::new(a.substitute(map)), *k),
            Expr::Exp(a) => Expr::Exp(Box::new(a.substitute(map))),
            Expr::Log(a) => Expr::Log(Box::new(a.substitute(map))),
            Expr::Sin(a) => Expr::Sin(Box::new(a.substitute(map))),
            Expr::Cos(a) => Expr::Cos(Box::new(a.substitute(map))),
            Expr::Sqrt(a) => Expr::Sqrt(Box::new(a.substitute(map))),
        };
        out.simplify()
    }

    /// Conservative structural simplification: constant folding, neutral
    /// and absorbing elements, `x - x`, double negation and `Pow` collapse.
    /// Idempotent; no ring-complete normalization is attempted.
    pub fn simplify(&self) -> Expr {
        match self {
            Expr::Const(_) | Expr::Var(_) => self.clone(),
            Expr::Add(a, b) => simplify_node(Expr::Add(
                Box::new(a.simplify()),
                Box::new(b.simplify()),
            )),
            Expr::Sub(a, b) => simplify_node(Expr::Sub(
                Box::new(a.simplify()),
                Box::new(b.simplify()),
            )),
            Expr::Mul(a, b) => simplify_node(Expr::Mul(
                Box::new(a.simplify()),
                Box::new(b.simplify()),
            )),
            Expr::Div(a, b) => simplify_node(Expr::Div(
                Box::new(a.simplify()),
                Box::new(b.simplify()),
            )),
            Expr::Neg(a) => simplify_node(Expr::Neg(Box::new(a.simplify()))),
            Expr::Pow(a, k) => simplify_node(Expr::Pow(Box::new(a.simplify()), *k)),
            Expr::Exp(a) => simplify_node(Expr::Exp(Box::new(a.simplify()))),
            Expr::Log(a) => simplify_node(Expr::Log(Box::new(a.simplify()))),
            Expr::Sin(a) => simplify_node(Expr::Sin(Box::new(a.simplify()))),
            Expr::Cos(a) => simplify_node(Expr::Cos(Box::new(a.simplify()))),
            Expr::Sqrt(a) => simplify_node(Expr::Sqrt(Box::new(a.simplify()))),
        }
    }

    /// Top-level additive terms, used by the scale-aware zero test: the
    /// residual of a large cancelling sum is judged relative to the size of
    /// its summands.
    pub fn additive_terms(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        self.collect_terms(&mut out);
        out
    }

    fn collect_terms<'a>(&'a self, out: &mut Vec<&'a Expr>) {
        match self {
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                a.collect_terms(out);
                b.collect_terms(out);
            }
            Expr::Neg(a) => a.collect_terms(out),
            other => out.push(other),
        }
    }
}

/// One local rewriting pass on a node whose children are already
/// simplified. Loops until the node stops changing, so `simplify` is
/// idempotent.
fn simplify_node(mut e: Expr) -> Expr {
    loop {
        let next = rewrite(&e);
        match next {
            Some(n) if n != e => e = n,
            _ => return e,
        }
    }
}

fn rewrite(e: &Expr) -> Option<Expr> {
    Some(match e {
        Expr::Add(a, b) => match (a.as_ref(), b.as_ref()) {
            (Expr::Const(x), Expr::Const(y)) => Expr::Const(x + y),
            (Expr::Const(z), _) if *z == 0.0 => b.as_ref().clone(),
            (_, Expr::Const(z)) if *z == 0.0 => a.as_ref().clone(),
            _ => return None,
        },
        Expr::Sub(a, b) => match (a.as_ref(), b.as_ref()) {
            (Expr::Const(x), Expr::Const(y)) => Expr::Const(x - y),
            (_, Expr::Const(z)) if *z == 0.0 => a.as_ref().clone(),
            (Expr::Const(z), _) if *z == 0.0 => Expr::Neg(b.clone()),
            (_, Expr::Neg(inner)) => {
                simplify_node(Expr::Add(a.clone(), inner.clone()))
            }
            _ if a == b => Expr::zero(),
            _ => return None,
        },
        Expr::Mul(a, b) => match (a.as_ref(), b.as_ref()) {
            (Expr::Const(x), Expr::Const(y)) => Expr::Const(x * y),
            (Expr::Const(z), _) | (_, Expr::Const(z)) if *z == 0.0 => Expr::zero(),
            (Expr::Const(o), _) if *o == 1.0 => b.as_ref().clone(),
            (_, Expr::Const(o)) if *o == 1.0 => a.as_ref().clone(),
            (Expr::Const(m), _) if *m == -1.0 => Expr::Neg(b.clone()),
            (_, Expr::Const(m)) if *m == -1.0 => Expr::Neg(a.clone()),
            // fold constant chains and hoist negations
            (Expr::Const(x), Expr::Mul(ba, bb)) => match ba.as_ref() {
                Expr::Const(y) => simplify_node(Expr::Mul(
                    Box::new(Expr::Const(x * y)),
                    bb.clone(),
                )),
                _ => return None,
            },
            (Expr::Neg(inner), _) => Expr::Neg(Box::new(simplify_node(Expr::Mul(
                inner.clone(),
                b.clone(),
            )))),
            (_, Expr::Neg(inner)) => Expr::Neg(Box::new(simplify_node(Expr::Mul(
                a.clone(),
                inner.clone(),
            )))),
            _ => return None,
        },
        Expr::Div(a, b) => match (a.as_ref(), b.as_ref()) {
            (Expr::Const(x), Expr::Const(y)) if *y != 0.0 => Expr::Const(x / y),
            (Expr::Const(z), _) if *z == 0.0 => Expr::zero(),
            (_, Expr::Const(o)) if *o == 1.0 => a.as_ref().clone(),
            _ => return None,
        },
        Expr::Neg(a) => match a.as_ref() {
            Expr::Const(c) if *c == 0.0 => Expr::zero(),
            Expr::Const(c) => Expr::Const(-c),
            Expr::Neg(inner) => inner.as_ref().clone(),
            _ => return None,
        },
        Expr::Pow(a, k) => match (a.as_ref(), k) {
            (_, 0) => Expr::one(),
            (_, 1) => a.as_ref().clone(),
            (Expr::Const(c), k) if !(*c == 0.0 && *k < 0) => Expr::Const(c.powi(*k)),
            (Expr::Pow(inner, m), k) => match m.checked_mul(*k) {
                Some(mk) => Expr::Pow(inner.clone(), mk),
                None => return None,
            },
            _ => return None,
        },
        Expr::Exp(a) => match a.as_ref() {
            Expr::Const(c) => Expr::Const(c.exp()),
            _ => return None,
        },
        Expr::Log(a) => match a.as_ref() {
            Expr::Const(c) if *c > 0.0 => Expr::Const(c.ln()),
            _ => return None,
        },
        Expr::Sin(a) => match a.as_ref() {
            Expr::Const(c) => Expr::Const(c.sin()),
            _ => return None,
        },
        Expr::Cos(a) => match a.as_ref() {
            Expr::Const(c) => Expr::Const(c.cos()),
            _ => return None,
        },
        Expr::Sqrt(a) => match a.as_ref() {
            Expr::Const(c) if *c >= 0.0 => Expr::Const(c.sqrt()),
            _ => return None,
        },
        Expr::Const(_) | Expr::Var(_) => return None,
    })
}

// Printing uses enough parentheses that `parse(print(e))` recovers the
// tree shape (checked by a property test, modulo simplification of
// negative constant literals).
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_prec(self, f, 0)
    }
}

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => 1,
        Expr::Mul(..) | Expr::Div(..) => 2,
        Expr::Neg(..) => 3,
        Expr::Pow(..) => 4,
        _ => 5,
    }
}

fn write_prec(e: &Expr, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
    let prec = precedence(e);
    let parens = prec < min;
    if parens {
        write!(f, "(")?;
    }
    match e {
        Expr::Const(c) => write!(f, "{c}")?,
        Expr::Var(name) => write!(f, "{name}")?,
        Expr::Add(a, b) => {
            write_prec(a, f, 1)?;
            write!(f, " + ")?;
            write_prec(b, f, 2)?;
        }
        Expr::Sub(a, b) => {
            write_prec(a, f, 1)?;
            write!(f, " - ")?;
            write_prec(b, f, 2)?;
        }
        Expr::Mul(a, b) => {
            write_prec(a, f, 2)?;
            write!(f, "*")?;
            write_prec(b, f, 3)?;
        }
        Expr::Div(a, b) => {
            write_prec(a, f, 2)?;
            write!(f, "/")?;
            write_prec(b, f, 3)?;
        }
        Expr::Neg(a) => {
            write!(f, "-")?;
            write_prec(a, f, 4)?;
        }
        Expr::Pow(a, k) => {
            write_prec(a, f, 5)?;
            write!(f, "^{k}")?;
        }
        Expr::Exp(a) => write!(f, "exp({a})")?,
        Expr::Log(a) => write!(f, "log({a})")?,
        Expr::Sin(a) => write!(f, "sin({a})")?,
        Expr::Cos(a) => write!(f, "cos({a})")?,
        Expr::Sqrt(a) => write!(f, "sqrt({a})")?,
    }
    if parens {
        write!(f, ")")?;
    }
    Ok(())
}
