use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Slot {
    /// Holomorphic `z_i`.
    Z,
    /// Antiholomorphic `wb_i`, evaluated at `conj(w_i)`.
    Wb,
}

/// A variable `z_i` or `wb_i`, with 1-based index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    pub slot: Slot,
    pub index: usize,
}

impl Var {
    pub fn z(index: usize) -> Self {
        Var {
            slot: Slot::Z,
            index,
        }
    }

    pub fn wb(index: usize) -> Self {
        Var {
            slot: Slot::Wb,
            index,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.slot {
            Slot::Z => write!(f, "z{}", self.index),
            Slot::Wb => write!(f, "wb{}", self.index),
        }
    }
}

pub type ParameterBinding = BTreeMap<String, f64>;

/// Expression tree. Children are shared, so derivative trees reuse subtrees.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(Complex64),
    Var(Var),
    Param(Arc<str>),
    Add(Arc<Expr>, Arc<Expr>),
    Sub(Arc<Expr>, Arc<Expr>),
    Mul(Arc<Expr>, Arc<Expr>),
    Div(Arc<Expr>, Arc<Expr>),
    Neg(Arc<Expr>),
    /// Exponent is real and free of variables.
    Pow(Arc<Expr>, Arc<Expr>),
    Log(Arc<Expr>),
    Exp(Arc<Expr>),
}

impl Expr {
    pub fn real(v: f64) -> Self {
        Expr::Const(Complex64::new(v, 0.0))
    }

    pub fn constant(c: Complex64) -> Self {
        Expr::Const(c)
    }

    pub fn var(v: Var) -> Self {
        Expr::Var(v)
    }

    pub fn z(i: usize) -> Self {
        Expr::Var(Var::z(i))
    }

    pub fn wb(i: usize) -> Self {
        Expr::Var(Var::wb(i))
    }

    pub fn param(name: &str) -> Self {
        Expr::Param(Arc::from(name))
    }

    pub fn as_const(&self) -> Option<Complex64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == Complex64::new(0.0, 0.0))
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == Complex64::new(1.0, 0.0))
    }

    /// Visits every node, parents before children.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Const(_) | Expr::Var(_) | Expr::Param(_) => {}
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => {
                a.walk(f);
                b.walk(f);
            }
            Expr::Neg(a) | Expr::Log(a) | Expr::Exp(a) => a.walk(f),
        }
    }

    pub fn contains_slot(&self, slot: Slot) -> bool {
        let mut found = false;
        self.walk(&mut |e| {
            if let Expr::Var(v) = e {
                found |= v.slot == slot;
            }
        });
        found
    }

    pub fn is_variable_free(&self) -> bool {
        let mut free = true;
        self.walk(&mut |e| free &= !matches!(e, Expr::Var(_)));
        free
    }

    /// Variable-free with every constant real.
    pub fn is_real_scalar(&self) -> bool {
        let mut ok = true;
        self.walk(&mut |e| match e {
            Expr::Var(_) => ok = false,
            Expr::Const(c) if c.im != 0.0 => ok = false,
            _ => {}
        });
        ok
    }

    /// Largest variable index, 0 for a constant.
    pub fn max_index(&self) -> usize {
        let mut m = 0;
        self.walk(&mut |e| {
            if let Expr::Var(v) = e {
                m = m.max(v.index);
            }
        });
        m
    }

    pub fn params(&self) -> Vec<String> {
        let mut names = std::collections::BTreeSet::new();
        self.walk(&mut |e| {
            if let Expr::Param(p) = e {
                names.insert(p.to_string());
            }
        });
        names.into_iter().collect()
    }

    /// Number of nodes counted as a tree (shared subtrees counted each time).
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |_| n += 1);
        n
    }

    /// Replaces every variable through `f`, rebuilding with the folding constructors.
    pub fn map_vars(&self, f: &impl Fn(Var) -> Expr) -> Expr {
        match self {
            Expr::Const(_) | Expr::Param(_) => self.clone(),
            Expr::Var(v) => f(*v),
            Expr::Add(a, b) => add(a.map_vars(f), b.map_vars(f)),
            Expr::Sub(a, b) => sub(a.map_vars(f), b.map_vars(f)),
            Expr::Mul(a, b) => mul(a.map_vars(f), b.map_vars(f)),
            Expr::Div(a, b) => div(a.map_vars(f), b.map_vars(f)),
            Expr::Neg(a) => neg(a.map_vars(f)),
            Expr::Pow(a, e) => pow(a.map_vars(f), (**e).clone()),
            Expr::Log(a) => log(a.map_vars(f)),
            Expr::Exp(a) => exp(a.map_vars(f)),
        }
    }

    /// `conj(f(w, z))`: swaps the `z` and `wb` slots and conjugates constants.
    pub fn reflect(&self) -> Expr {
        let r = |e: &Arc<Expr>| Arc::new(e.reflect());
        match self {
            Expr::Const(c) => Expr::Const(c.conj()),
            Expr::Var(v) => Expr::Var(Var {
                slot: match v.slot {
                    Slot::Z => Slot::Wb,
                    Slot::Wb => Slot::Z,
                },
                index: v.index,
            }),
            Expr::Param(_) => self.clone(),
            Expr::Add(a, b) => Expr::Add(r(a), r(b)),
            Expr::Sub(a, b) => Expr::Sub(r(a), r(b)),
            Expr::Mul(a, b) => Expr::Mul(r(a), r(b)),
            Expr::Div(a, b) => Expr::Div(r(a), r(b)),
            Expr::Neg(a) => Expr::Neg(r(a)),
            Expr::Pow(a, e) => Expr::Pow(r(a), e.clone()),
            Expr::Log(a) => Expr::Log(r(a)),
            Expr::Exp(a) => Expr::Exp(r(a)),
        }
    }

    /// Substitutes named parameters by real constants.
    pub fn bind(&self, params: &ParameterBinding) -> Expr {
        match self {
            Expr::Param(p) => match params.get(&**p) {
                Some(v) => Expr::real(*v),
                None => self.clone(),
            },
            Expr::Const(_) | Expr::Var(_) => self.clone(),
            Expr::Add(a, b) => add(a.bind(params), b.bind(params)),
            Expr::Sub(a, b) => sub(a.bind(params), b.bind(params)),
            Expr::Mul(a, b) => mul(a.bind(params), b.bind(params)),
            Expr::Div(a, b) => div(a.bind(params), b.bind(params)),
            Expr::Neg(a) => neg(a.bind(params)),
            Expr::Pow(a, e) => pow(a.bind(params), e.bind(params)),
            Expr::Log(a) => log(a.bind(params)),
            Expr::Exp(a) => exp(a.bind(params)),
        }
    }
}

impl From<f64> for Expr {
    fn from(v: f64) -> Self {
        Expr::real(v)
    }
}

impl From<Var> for Expr {
    fn from(v: Var) -> Self {
        Expr::Var(v)
    }
}

fn c(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

// Folding constructors: constant arithmetic and 0/1 elimination only.

pub fn add(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => Expr::Const(x + y),
        _ if a.is_zero() => b,
        _ if b.is_zero() => a,
        _ => Expr::Add(Arc::new(a), Arc::new(b)),
    }
}

pub fn sub(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => Expr::Const(x - y),
        _ if b.is_zero() => a,
        _ if a.is_zero() => neg(b),
        _ => Expr::Sub(Arc::new(a), Arc::new(b)),
    }
}

pub fn mul(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => Expr::Const(x * y),
        _ if a.is_zero() || b.is_zero() => Expr::Const(c(0.0)),
        _ if a.is_one() => b,
        _ if b.is_one() => a,
        (Some(x), _) if x == c(-1.0) => neg(b),
        (_, Some(y)) if y == c(-1.0) => neg(a),
        _ => Expr::Mul(Arc::new(a), Arc::new(b)),
    }
}

pub fn div(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) if y != c(0.0) => Expr::Const(x / y),
        _ if a.is_zero() => Expr::Const(c(0.0)),
        _ if b.is_one() => a,
        _ => Expr::Div(Arc::new(a), Arc::new(b)),
    }
}

pub fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(x) => Expr::Const(-x),
        Expr::Neg(inner) => (*inner).clone(),
        other => Expr::Neg(Arc::new(other)),
    }
}

pub fn pow(base: Expr, exponent: Expr) -> Expr {
    if exponent.is_zero() {
        return Expr::real(1.0);
    }
    if exponent.is_one() {
        return base;
    }
    if base.is_one() {
        return base;
    }
    Expr::Pow(Arc::new(base), Arc::new(exponent))
}

pub fn log(a: Expr) -> Expr {
    if a.is_one() {
        return Expr::real(0.0);
    }
    Expr::Log(Arc::new(a))
}

pub fn exp(a: Expr) -> Expr {
    if a.is_zero() {
        return Expr::real(1.0);
    }
    Expr::Exp(Arc::new(a))
}
