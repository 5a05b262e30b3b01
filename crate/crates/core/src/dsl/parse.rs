use std::sync::Arc;

use num_complex::Complex64;

use super::expr::{Expr, Slot, Var};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num { value: f64, imag: bool },
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

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    offset: usize,
}

fn syntax(offset: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        offset,
        message: message.into(),
    }
}

fn lex(src: &str) -> Result<Vec<Token>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let ch = bytes[i];
        if ch.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let single = match ch {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Token {
                tok,
                offset: start + 1,
            });
            i += 1;
            continue;
        }
        if ch.is_ascii_digit() || ch == b'.' {
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
            let text = &src[start..i];
            let value: f64 = text
                .parse()
                .map_err(|_| syntax(start + 1, format!("malformed number `{text}`")))?;
            let mut imag = false;
            if i < bytes.len() && bytes[i] == b'i' {
                let next = bytes.get(i + 1).copied();
                if !next.is_some_and(|b| b.is_ascii_alphanumeric() || b == b'_') {
                    imag = true;
                    i += 1;
                }
            }
            out.push(Token {
                tok: Tok::Num { value, imag },
                offset: start + 1,
            });
            continue;
        }
        if ch.is_ascii_alphabetic() || ch == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Ident(src[start..i].to_string()),
                offset: start + 1,
            });
            continue;
        }
        let bad = src[start..].chars().next().unwrap_or('?');
        return Err(syntax(start + 1, format!("unexpected character `{bad}`")));
    }
    out.push(Token {
        tok: Tok::End,
        offset: src.len() + 1,
    });
    Ok(out)
}

/// Which bare numeric literal a term consists of, if any.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Literal {
    None,
    Real,
    Imag { signed: bool },
}

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
    dim: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let idx = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[idx].tok
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].offset
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(syntax(self.offset(), format!("expected {what}")))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let (mut lhs, mut lit) = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => Tok::Plus,
                Tok::Minus => Tok::Minus,
                _ => break,
            };
            self.bump();
            let (rhs, rlit) = self.term()?;
            lhs = match (lit, rlit, lhs.as_const(), rhs.as_const()) {
                (Literal::Real, Literal::Imag { signed: false }, Some(a), Some(b)) => {
                    if op == Tok::Plus {
                        Expr::Const(a + b)
                    } else {
                        Expr::Const(a - b)
                    }
                }
                _ if op == Tok::Plus => Expr::Add(Arc::new(lhs), Arc::new(rhs)),
                _ => Expr::Sub(Arc::new(lhs), Arc::new(rhs)),
            };
            lit = Literal::None;
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<(Expr, Literal)> {
        let (mut lhs, mut lit) = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Star => Tok::Star,
                Tok::Slash => Tok::Slash,
                _ => break,
            };
            self.bump();
            let (rhs, _) = self.factor()?;
            lhs = if op == Tok::Star {
                Expr::Mul(Arc::new(lhs), Arc::new(rhs))
            } else {
                Expr::Div(Arc::new(lhs), Arc::new(rhs))
            };
            lit = Literal::None;
        }
        Ok((lhs, lit))
    }

    fn factor(&mut self) -> Result<(Expr, Literal)> {
        if *self.peek() == Tok::Minus {
            self.bump();
            if let Tok::Num { value, imag } = *self.peek() {
                if *self.peek_at(1) != Tok::Caret {
                    self.bump();
                    let c = if imag {
                        Complex64::new(0.0, -value)
                    } else {
                        Complex64::new(-value, 0.0)
                    };
                    let lit = if imag {
                        Literal::Imag { signed: true }
                    } else {
                        Literal::Real
                    };
                    return Ok((Expr::Const(c), lit));
                }
            }
            let (inner, _) = self.factor()?;
            return Ok((Expr::Neg(Arc::new(inner)), Literal::None));
        }
        let (base, lit) = self.base()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let e = self.exponent()?;
            return Ok((Expr::Pow(Arc::new(base), Arc::new(e)), Literal::None));
        }
        Ok((base, lit))
    }

    fn exponent(&mut self) -> Result<Expr> {
        let start = self.offset();
        match self.peek().clone() {
            Tok::Minus => {
                self.bump();
                match self.bump().tok {
                    Tok::Num { value, imag: false } => Ok(Expr::real(-value)),
                    _ => Err(Error::NonRealExponent { offset: start }),
                }
            }
            Tok::Num { value, imag } => {
                self.bump();
                if imag {
                    return Err(Error::NonRealExponent { offset: start });
                }
                Ok(Expr::real(value))
            }
            Tok::Ident(_) => {
                let (e, _) = self.base()?;
                if !e.is_real_scalar() {
                    return Err(Error::NonRealExponent { offset: start });
                }
                Ok(e)
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                if !e.is_real_scalar() {
                    return Err(Error::NonRealExponent { offset: start });
                }
                Ok(e)
            }
            _ => Err(syntax(start, "expected exponent")),
        }
    }

    fn base(&mut self) -> Result<(Expr, Literal)> {
        let tok = self.bump();
        match tok.tok {
            Tok::Num { value, imag } => {
                if imag {
                    Ok((
                        Expr::Const(Complex64::new(0.0, value)),
                        Literal::Imag { signed: false },
                    ))
                } else {
                    Ok((Expr::real(value), Literal::Real))
                }
            }
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok((e, Literal::None))
            }
            Tok::Ident(name) => {
                if *self.peek() == Tok::LParen {
                    let ctor: fn(Arc<Expr>) -> Expr = match name.as_str() {
                        "log" => Expr::Log,
                        "exp" => Expr::Exp,
                        _ => {
                            return Err(Error::UnknownIdentifier {
                                name,
                                offset: tok.offset,
                            })
                        }
                    };
                    self.bump();
                    let arg = self.expr()?;
                    self.expect(Tok::RParen, "`)`")?;
                    return Ok((ctor(Arc::new(arg)), Literal::None));
                }
                if name == "log" || name == "exp" {
                    return Err(syntax(
                        self.offset(),
                        format!("`{name}` needs a parenthesised argument"),
                    ));
                }
                if let Some(v) = parse_var(&name) {
                    if v.index == 0 || v.index > self.dim {
                        return Err(Error::VariableOutOfRange {
                            name,
                            offset: tok.offset,
                            dim: self.dim,
                        });
                    }
                    return Ok((Expr::Var(v), Literal::None));
                }
                Ok((Expr::Param(Arc::from(name.as_str())), Literal::None))
            }
            Tok::End => Err(syntax(tok.offset, "unexpected end of input")),
            other => Err(syntax(tok.offset, format!("unexpected token {other:?}"))),
        }
    }
}

fn parse_var(name: &str) -> Option<Var> {
    let (slot, digits) = if let Some(rest) = name.strip_prefix("wb") {
        (Slot::Wb, rest)
    } else if let Some(rest) = name.strip_prefix('z') {
        (Slot::Z, rest)
    } else {
        return None;
    };
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok().map(|index| Var { slot, index })
}

/// Parses a kernel expression over `z1..z{dim}`, `wb1..wb{dim}`.
pub fn parse(src: &str, dim: usize) -> Result<Expr> {
    let toks = lex(src)?;
    let mut p = Parser {
        toks: &toks,
        pos: 0,
        dim,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(syntax(p.offset(), "unexpected trailing input"));
    }
    Ok(e)
}
