//! Recursive-descent parser for the function mini-language:
//!
//! ```text
//! power(alpha=<r>,b=<r>) | chainsaw | poly(<r>{,<r>}[,lo=<r>,hi=<r>])
//!   | pwl((<r>,<r>){,(<r>,<r>)}) | expr(<expression>, lo=<r>, hi=<r>)
//! ```

use crate::error::{Error, Result};
use crate::function_model::expr::Expr;
use crate::function_model::{Interval, RealFunction};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    LParen,
    RParen,
    Comma,
    Eq,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            b'=' => Tok::Eq,
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
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
                let text = &src[start..i];
                let v: f64 = text.parse().map_err(|_| Error::Parse {
                    position: start,
                    expected: format!("a number, found `{text}`"),
                })?;
                out.push((Tok::Num(v), start));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(src[start..i].to_ascii_lowercase()), start));
                continue;
            }
            _ => {
                return Err(Error::Parse {
                    position: start,
                    expected: format!("a token, found `{}`", &src[start..].chars().next().unwrap()),
                })
            }
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::End, src.len()));
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
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &str) -> Result<T> {
        Err(Error::Parse {
            position: self.offset(),
            expected: format!("{expected}, found {}", self.peek().describe()),
        })
    }

    fn expect(&mut self, tok: Tok) -> Result<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.fail(&tok.describe())
        }
    }

    fn expect_ident(&mut self, name: &str) -> Result<()> {
        match self.peek() {
            Tok::Ident(s) if s == name => {
                self.bump();
                Ok(())
            }
            _ => self.fail(&format!("`{name}`")),
        }
    }

    fn number(&mut self) -> Result<f64> {
        let neg = match self.peek() {
            Tok::Minus => {
                self.bump();
                true
            }
            Tok::Plus => {
                self.bump();
                false
            }
            _ => false,
        };
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(if neg { -v } else { v })
            }
            _ => self.fail("a number"),
        }
    }

    fn keyed_number(&mut self, key: &str) -> Result<f64> {
        self.expect_ident(key)?;
        self.expect(Tok::Eq)?;
        self.number()
    }

    fn function(&mut self) -> Result<RealFunction> {
        let start = self.offset();
        let name = match self.bump() {
            Tok::Ident(s) => s,
            t => {
                return Err(Error::Parse {
                    position: start,
                    expected: format!(
                        "one of power, chainsaw, poly, pwl, expr, found {}",
                        t.describe()
                    ),
                })
            }
        };
        let f = match name.as_str() {
            "chainsaw" => RealFunction::chainsaw(),
            "power" => {
                self.expect(Tok::LParen)?;
                let alpha = self.keyed_number("alpha")?;
                self.expect(Tok::Comma)?;
                let b = self.keyed_number("b")?;
                self.expect(Tok::RParen)?;
                RealFunction::power(alpha, b).map_err(|e| self.semantic(start, e))?
            }
            "poly" => {
                self.expect(Tok::LParen)?;
                let mut coeffs = vec![self.number()?];
                let mut domain = None;
                while *self.peek() == Tok::Comma {
                    self.bump();
                    if matches!(self.peek(), Tok::Ident(s) if s == "lo") {
                        let lo = self.keyed_number("lo")?;
                        self.expect(Tok::Comma)?;
                        let hi = self.keyed_number("hi")?;
                        domain = Some((lo, hi));
                        break;
                    }
                    coeffs.push(self.number()?);
                }
                self.expect(Tok::RParen)?;
                let f = RealFunction::polynomial(coeffs);
                match domain {
                    Some((lo, hi)) => {
                        let d = Interval::new(lo, hi).map_err(|e| self.semantic(start, e))?;
                        f.with_domain(d).map_err(|e| self.semantic(start, e))?
                    }
                    None => f,
                }
            }
            "pwl" => {
                self.expect(Tok::LParen)?;
                let mut pts = vec![self.pair()?];
                while *self.peek() == Tok::Comma {
                    self.bump();
                    pts.push(self.pair()?);
                }
                self.expect(Tok::RParen)?;
                RealFunction::piecewise_linear(pts).map_err(|e| self.semantic(start, e))?
            }
            "expr" => {
                self.expect(Tok::LParen)?;
                let e = self.expr()?;
                self.expect(Tok::Comma)?;
                let lo = self.keyed_number("lo")?;
                self.expect(Tok::Comma)?;
                let hi = self.keyed_number("hi")?;
                self.expect(Tok::RParen)?;
                let d = Interval::new(lo, hi).map_err(|e| self.semantic(start, e))?;
                RealFunction::expression(e, d)
            }
            other => {
                return Err(Error::Parse {
                    position: start,
                    expected: format!("one of power, chainsaw, poly, pwl, expr, found `{other}`"),
                })
            }
        };
        Ok(f)
    }

    fn semantic(&self, position: usize, e: Error) -> Error {
        Error::Parse {
            position,
            expected: format!("a well-formed function ({e})"),
        }
    }

    fn pair(&mut self) -> Result<(f64, f64)> {
        self.expect(Tok::LParen)?;
        let x = self.number()?;
        self.expect(Tok::Comma)?;
        let y = self.number()?;
        self.expect(Tok::RParen)?;
        Ok((x, y))
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
            return Ok(match self.unary()? {
                Expr::Const(c) => Expr::Const(-c),
                e => Expr::Neg(Box::new(e)),
            });
        }
        self.power()
    }

    // `^` is right-associative and binds tighter than unary minus on its left.
    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let exp = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Const(v))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) => match name.as_str() {
                "x" => {
                    self.bump();
                    Ok(Expr::Var)
                }
                "pi" => {
                    self.bump();
                    Ok(Expr::Const(std::f64::consts::PI))
                }
                "sin" | "cos" | "abs" => {
                    self.bump();
                    self.expect(Tok::LParen)?;
                    let e = Box::new(self.expr()?);
                    self.expect(Tok::RParen)?;
                    Ok(match name.as_str() {
                        "sin" => Expr::Sin(e),
                        "cos" => Expr::Cos(e),
                        _ => Expr::Abs(e),
                    })
                }
                _ => self.fail("`x`, `pi`, sin, cos, abs, a number or `(`"),
            },
            _ => self.fail("`x`, `pi`, sin, cos, abs, a number or `(`"),
        }
    }
}

/// Parses a function specification.
pub fn parse_function(spec: &str) -> Result<RealFunction> {
    let mut p = Parser {
        toks: lex(spec)?,
        pos: 0,
    };
    let f = p.function()?;
    if *p.peek() != Tok::End {
        return p.fail("end of input");
    }
    Ok(f)
}

/// Parses a bare expression in `x`.
pub fn parse_expr(src: &str) -> Result<Expr> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return p.fail("end of input");
    }
    Ok(e)
}
