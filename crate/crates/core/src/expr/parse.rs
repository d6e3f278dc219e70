//! Recursive-descent parser for the expression grammar:
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := '-' factor | power
//! power  := atom ('^' integer)?
//! atom   := number | ident | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! Identifiers must be chart coordinates or one of the function names
//! `exp`, `log`, `sin`, `cos`, `sqrt`. Exponents are integer literals.

use thiserror::Error;

use super::Expr;
use crate::chart::Chart;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ParseError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown variable `{name}` at position {pos}")]
    UnknownVariable { name: String, pos: usize },
    #[error("non-integer exponent at position {pos}")]
    NonIntegerExponent { pos: usize },
}

const FUNCTIONS: [&str; 5] = ["exp", "log", "sin", "cos", "sqrt"];

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    chart: &'a Chart,
}

/// Parse `src` as an expression over the coordinates of `chart`.
pub fn parse(src: &str, chart: &Chart) -> Result<Expr, ParseError> {
    if src.trim().is_empty() {
        return Err(ParseError::Syntax {
            pos: 0,
            msg: "empty expression".to_string(),
        });
    }
    let mut p = Parser {
        src: src.as_bytes(),
        pos: 0,
        chart,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(ParseError::Syntax {
            pos: p.pos,
            msg: format!("unexpected `{}`", p.src[p.pos] as char),
        });
    }
    Ok(e)
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = Expr::Add(Box::new(lhs), Box::new(rhs));
                }
                Some(b'-') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(rhs));
                }
                Some(b'/') => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    lhs = Expr::Div(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            let inner = self.factor()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let k = self.integer()?;
            return Ok(Expr::Pow(Box::new(base), k));
        }
        Ok(base)
    }

    fn integer(&mut self) -> Result<i32, ParseError> {
        self.skip_ws();
        let start = self.pos;
        if self.src.get(self.pos) == Some(&b'-') {
            self.pos += 1;
        }
        let digits_start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == digits_start {
            return Err(ParseError::NonIntegerExponent { pos: start });
        }
        // A fractional exponent like 2.5 is rejected explicitly.
        if self.src.get(self.pos) == Some(&b'.') {
            return Err(ParseError::NonIntegerExponent { pos: start });
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse::<i32>()
            .map_err(|_| ParseError::NonIntegerExponent { pos: start })
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(ParseError::Syntax {
                        pos: self.pos,
                        msg: "expected `)`".to_string(),
                    });
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            Some(c) => Err(ParseError::Syntax {
                pos: self.pos,
                msg: format!("unexpected `{}`", c as char),
            }),
            None => Err(ParseError::Syntax {
                pos: self.pos,
                msg: "unexpected end of input".to_string(),
            }),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
        }
        if matches!(self.src.get(self.pos), Some(b'e') | Some(b'E')) {
            // Exponent part only if followed by digits (with optional sign);
            // otherwise the `e` belongs to a following identifier.
            let mut look = self.pos + 1;
            if matches!(self.src.get(look), Some(b'+') | Some(b'-')) {
                look += 1;
            }
            if self.src.get(look).is_some_and(|c| c.is_ascii_digit()) {
                self.pos = look;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse::<f64>()
            .map(Expr::Const)
            .map_err(|_| ParseError::Syntax {
                pos: start,
                msg: format!("invalid number `{text}`"),
            })
    }

    fn ident(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap().to_string();
        if self.peek() == Some(b'(') {
            if !FUNCTIONS.contains(&name.as_str()) {
                return Err(ParseError::Syntax {
                    pos: start,
                    msg: format!("unknown function `{name}`"),
                });
            }
            self.pos += 1;
            let arg = self.expr()?;
            if self.peek() != Some(b')') {
                return Err(ParseError::Syntax {
                    pos: self.pos,
                    msg: "expected `)`".to_string(),
                });
            }
            self.pos += 1;
            let arg = Box::new(arg);
            return Ok(match name.as_str() {
                "exp" => Expr::Exp(arg),
                "log" => Expr::Log(arg),
                "sin" => Expr::Sin(arg),
                "cos" => Expr::Cos(arg),
                _ => Expr::Sqrt(arg),
            });
        }
        if !self.chart.has_coord(&name) {
            return Err(ParseError::UnknownVariable { name, pos: start });
        }
        Ok(Expr::Var(name))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::Chart;

    #[test]
    fn parses_single_variable() {
        let chart = Chart::new(&["t", "r"]);
        assert_eq!(parse("r", &chart).unwrap(), Expr::var("r"));
    }

    #[test]
    fn parses_radial_rhs() {
        // first right-hand side of the planar radial system
        let chart = Chart::new(&["x", "y"]);
        let e = parse("x + y*(x^2+y^2)", &chart).unwrap();
        let expect = Expr::Add(
            Box::new(Expr::var("x")),
            Box::new(Expr::Mul(
                Box::new(Expr::var("y")),
                Box::new(Expr::Add(
                    Box::new(Expr::Pow(Box::new(Expr::var("x")), 2)),
                    Box::new(Expr::Pow(Box::new(Expr::var("y")), 2)),
                )),
            )),
        );
        assert_eq!(e, expect);
    }

    #[test]
    fn syntax_error_position() {
        let chart = Chart::new(&["x"]);
        match parse("2*", &chart) {
            Err(ParseError::Syntax { pos, .. }) => assert_eq!(pos, 2),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_variable() {
        let chart = Chart::new(&["x"]);
        assert!(matches!(
            parse("x + z", &chart),
            Err(ParseError::UnknownVariable { .. })
        ));
    }

    #[test]
    fn non_integer_exponent() {
        let chart = Chart::new(&["x"]);
        assert!(matches!(
            parse("x^2.5", &chart),
            Err(ParseError::NonIntegerExponent { .. })
        ));
        assert!(matches!(
            parse("x^y", &chart),
            Err(ParseError::NonIntegerExponent { .. })
        ));
    }

    #[test]
    fn negative_exponent_and_unary_minus() {
        let chart = Chart::new(&["x"]);
        assert_eq!(
            parse("x^-2", &chart).unwrap(),
            Expr::Pow(Box::new(Expr::var("x")), -2)
        );
        // unary minus binds looser than ^
        assert_eq!(
            parse("-x^2", &chart).unwrap(),
            Expr::Neg(Box::new(Expr::Pow(Box::new(Expr::var("x")), 2)))
        );
    }

    #[test]
    fn scientific_notation_vs_identifier() {
        let chart = Chart::new(&["x"]);
        assert_eq!(parse("1e-3", &chart).unwrap(), Expr::Const(1e-3));
        assert_eq!(
            parse("2*exp(x)", &chart).unwrap(),
            Expr::Mul(
                Box::new(Expr::Const(2.0)),
                Box::new(Expr::Exp(Box::new(Expr::var("x"))))
            )
        );
    }
}
