use std::fmt::{self, Write};

use num_complex::Complex64;

use super::expr::Expr;

const SUM: u8 = 1;
const PRODUCT: u8 = 2;
const UNARY: u8 = 3;
const POWER: u8 = 4;
const ATOM: u8 = 5;

enum ConstShape {
    Real,
    Imag,
    Complex,
}

fn shape(c: Complex64) -> ConstShape {
    if c.im == 0.0 {
        ConstShape::Real
    } else if c.re == 0.0 {
        ConstShape::Imag
    } else {
        ConstShape::Complex
    }
}

fn const_prec(c: Complex64) -> u8 {
    match shape(c) {
        ConstShape::Real if c.re.is_sign_negative() => UNARY,
        ConstShape::Imag if c.im.is_sign_negative() => UNARY,
        _ => ATOM,
    }
}

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Const(c) => const_prec(*c),
        Expr::Var(_) | Expr::Param(_) | Expr::Log(_) | Expr::Exp(_) => ATOM,
        Expr::Pow(..) => POWER,
        Expr::Neg(_) => UNARY,
        Expr::Mul(..) | Expr::Div(..) => PRODUCT,
        Expr::Add(..) | Expr::Sub(..) => SUM,
    }
}

fn write_const(c: Complex64, out: &mut impl Write) -> fmt::Result {
    match shape(c) {
        ConstShape::Real if c.re.is_sign_negative() => write!(out, "-{}", -c.re),
        ConstShape::Real => write!(out, "{}", c.re),
        ConstShape::Imag if c.im.is_sign_negative() => write!(out, "-{}i", -c.im),
        ConstShape::Imag => write!(out, "{}i", c.im),
        ConstShape::Complex => {
            let re = if c.re < 0.0 {
                format!("-{}", -c.re)
            } else {
                format!("{}", c.re)
            };
            if c.im.is_sign_negative() {
                write!(out, "({re} - {}i)", -c.im)
            } else {
                write!(out, "({re} + {}i)", c.im)
            }
        }
    }
}

fn write_at(e: &Expr, min: u8, out: &mut impl Write) -> fmt::Result {
    if prec(e) < min {
        out.write_char('(')?;
        write_expr(e, out)?;
        out.write_char(')')
    } else {
        write_expr(e, out)
    }
}

fn is_real_const(e: &Expr) -> bool {
    matches!(e, Expr::Const(c) if matches!(shape(*c), ConstShape::Real))
}

fn is_unsigned_imag(e: &Expr) -> bool {
    matches!(e, Expr::Const(c) if matches!(shape(*c), ConstShape::Imag) && !c.im.is_sign_negative())
}

fn write_expr(e: &Expr, out: &mut impl Write) -> fmt::Result {
    match e {
        Expr::Const(c) => write_const(*c, out),
        Expr::Var(v) => write!(out, "{v}"),
        Expr::Param(p) => out.write_str(p),
        Expr::Add(a, b) | Expr::Sub(a, b) => {
            write_at(a, SUM, out)?;
            out.write_str(if matches!(e, Expr::Add(..)) {
                " + "
            } else {
                " - "
            })?;
            // keep `1 + (2i)` from reading back as one complex literal
            if is_real_const(a) && is_unsigned_imag(b) {
                write_at(b, ATOM + 1, out)
            } else {
                write_at(b, PRODUCT, out)
            }
        }
        Expr::Mul(a, b) | Expr::Div(a, b) => {
            write_at(a, PRODUCT, out)?;
            out.write_char(if matches!(e, Expr::Mul(..)) { '*' } else { '/' })?;
            write_at(b, UNARY, out)
        }
        Expr::Neg(a) => {
            out.write_char('-')?;
            match &**a {
                Expr::Const(c) if const_prec(*c) == ATOM => {
                    out.write_char('(')?;
                    write_const(*c, out)?;
                    out.write_char(')')
                }
                inner => write_at(inner, UNARY, out),
            }
        }
        Expr::Pow(b, x) => {
            write_at(b, ATOM, out)?;
            out.write_char('^')?;
            match &**x {
                Expr::Const(c) if const_prec(*c) == ATOM && c.im == 0.0 => write_const(*c, out),
                Expr::Param(p) => out.write_str(p),
                other => {
                    out.write_char('(')?;
                    write_expr(other, out)?;
                    out.write_char(')')
                }
            }
        }
        Expr::Log(a) => {
            out.write_str("log(")?;
            write_expr(a, out)?;
            out.write_char(')')
        }
        Expr::Exp(a) => {
            out.write_str("exp(")?;
            write_expr(a, out)?;
            out.write_char(')')
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(self, f)
    }
}
