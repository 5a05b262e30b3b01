//! Wirtinger differentiation, evaluation and a finite-difference oracle.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::dsl::{add, div, mul, neg, pow, sub, Expr, ParameterBinding, Slot, Var};
use crate::{Error, Result};

pub const ORDER_CAP: usize = 8;

/// Multi-index of derivative orders in the `z` and `wb` slots, 0-based positions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DerivativeIndex {
    pub z: Vec<usize>,
    pub wb: Vec<usize>,
}

impl DerivativeIndex {
    pub fn zero(dim: usize) -> Self {
        DerivativeIndex {
            z: vec![0; dim],
            wb: vec![0; dim],
        }
    }

    /// Adds `n` derivatives in `z_i` (1-based `i`).
    pub fn dz(mut self, i: usize, n: usize) -> Self {
        self.grow(i);
        self.z[i - 1] += n;
        self
    }

    /// Adds `n` derivatives in `wb_i` (1-based `i`).
    pub fn dwb(mut self, i: usize, n: usize) -> Self {
        self.grow(i);
        self.wb[i - 1] += n;
        self
    }

    fn grow(&mut self, i: usize) {
        if self.z.len() < i {
            self.z.resize(i, 0);
            self.wb.resize(i, 0);
        }
    }

    pub fn total_order(&self) -> usize {
        self.z.iter().chain(&self.wb).sum()
    }

    /// Variables to differentiate by, with multiplicity: z first, then wb.
    pub fn steps(&self) -> impl Iterator<Item = Var> + '_ {
        let zs = self
            .z
            .iter()
            .enumerate()
            .flat_map(|(i, &n)| std::iter::repeat(Var::z(i + 1)).take(n));
        let ws = self
            .wb
            .iter()
            .enumerate()
            .flat_map(|(i, &n)| std::iter::repeat(Var::wb(i + 1)).take(n));
        zs.chain(ws)
    }

    /// Drops one order from the last nonzero component.
    fn predecessor(&self) -> Option<(DerivativeIndex, Var)> {
        let mut p = self.clone();
        if let Some(i) = p.wb.iter().rposition(|&n| n > 0) {
            p.wb[i] -= 1;
            return Some((p, Var::wb(i + 1)));
        }
        if let Some(i) = p.z.iter().rposition(|&n| n > 0) {
            p.z[i] -= 1;
            return Some((p, Var::z(i + 1)));
        }
        None
    }

    fn normalized(&self) -> DerivativeIndex {
        let mut p = self.clone();
        while p.z.last() == Some(&0) && p.wb.last() == Some(&0) {
            p.z.pop();
            p.wb.pop();
        }
        p
    }
}

/// First partial derivative in one variable.
pub fn partial(e: &Expr, v: Var) -> Expr {
    match e {
        Expr::Const(_) | Expr::Param(_) => Expr::real(0.0),
        Expr::Var(w) => Expr::real(if *w == v { 1.0 } else { 0.0 }),
        Expr::Add(a, b) => add(partial(a, v), partial(b, v)),
        Expr::Sub(a, b) => sub(partial(a, v), partial(b, v)),
        Expr::Mul(a, b) => add(
            mul(partial(a, v), (**b).clone()),
            mul((**a).clone(), partial(b, v)),
        ),
        Expr::Div(a, b) => {
            let da = partial(a, v);
            let db = partial(b, v);
            if db.is_zero() {
                div(da, (**b).clone())
            } else {
                div(
                    sub(mul(da, (**b).clone()), mul((**a).clone(), db)),
                    pow((**b).clone(), Expr::real(2.0)),
                )
            }
        }
        Expr::Neg(a) => neg(partial(a, v)),
        Expr::Pow(base, x) => {
            let db = partial(base, v);
            if db.is_zero() {
                return Expr::real(0.0);
            }
            let lowered = pow((**base).clone(), sub((**x).clone(), Expr::real(1.0)));
            mul(mul((**x).clone(), lowered), db)
        }
        Expr::Log(a) => log_partial(a, v),
        Expr::Exp(a) => mul(e.clone(), partial(a, v)),
    }
}

/// `d log(u)`, split over products, quotients, powers and exp.
fn log_partial(u: &Expr, v: Var) -> Expr {
    match u {
        Expr::Mul(a, b) => add(log_partial(a, v), log_partial(b, v)),
        Expr::Div(a, b) => sub(log_partial(a, v), log_partial(b, v)),
        Expr::Pow(b, x) => mul((**x).clone(), log_partial(b, v)),
        Expr::Exp(a) => partial(a, v),
        Expr::Neg(a) => log_partial(a, v),
        Expr::Const(_) | Expr::Param(_) => Expr::real(0.0),
        other => {
            let d = partial(other, v);
            if d.is_zero() {
                d
            } else {
                div(d, other.clone())
            }
        }
    }
}

pub fn differentiate(e: &Expr, idx: &DerivativeIndex) -> Result<Expr> {
    let order = idx.total_order();
    if order > ORDER_CAP {
        return Err(Error::OrderCapExceeded {
            order,
            cap: ORDER_CAP,
        });
    }
    Ok(idx.steps().fold(e.clone(), |acc, v| partial(&acc, v)))
}

/// Lazily built table of derivatives of one expression, reusing lower orders.
#[derive(Debug, Clone)]
pub struct DerivativeTable {
    root: Expr,
    cache: HashMap<DerivativeIndex, Expr>,
}

impl DerivativeTable {
    pub fn new(root: Expr) -> Self {
        DerivativeTable {
            root,
            cache: HashMap::new(),
        }
    }

    pub fn root(&self) -> &Expr {
        &self.root
    }

    pub fn get(&mut self, idx: &DerivativeIndex) -> Result<Expr> {
        let order = idx.total_order();
        if order > ORDER_CAP {
            return Err(Error::OrderCapExceeded {
                order,
                cap: ORDER_CAP,
            });
        }
        let key = idx.normalized();
        if let Some(e) = self.cache.get(&key) {
            return Ok(e.clone());
        }
        let e = match key.predecessor() {
            None => self.root.clone(),
            Some((prev, v)) => partial(&self.get(&prev)?, v),
        };
        self.cache.insert(key, e.clone());
        Ok(e)
    }

    pub fn eval(
        &mut self,
        idx: &DerivativeIndex,
        at: &EvalPoint,
        params: &ParameterBinding,
    ) -> Result<Complex64> {
        evaluate(&self.get(idx)?, at, params)
    }
}

/// Point `(z, w)`; `wb_i` evaluates to `conj(w_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalPoint {
    pub z: Vec<Complex64>,
    pub w: Vec<Complex64>,
}

impl EvalPoint {
    pub fn new(z: Vec<Complex64>, w: Vec<Complex64>) -> Self {
        EvalPoint { z, w }
    }

    pub fn diagonal(z: &[Complex64]) -> Self {
        EvalPoint {
            z: z.to_vec(),
            w: z.to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.z.len()
    }
}

struct Env<'a> {
    z: &'a [Complex64],
    wb: Vec<Complex64>,
    params: &'a ParameterBinding,
}

fn is_integer(x: f64) -> bool {
    x.fract() == 0.0 && x.abs() <= i32::MAX as f64
}

fn power(base: Complex64, x: f64) -> Result<Complex64> {
    if is_integer(x) {
        let n = x as i32;
        if n < 0 && base == Complex64::new(0.0, 0.0) {
            return Err(Error::DivisionByZero);
        }
        return Ok(base.powi(n));
    }
    if !(base.re > 0.0) {
        return Err(Error::Domain(format!(
            "non-integer power of {base} with Re <= 0"
        )));
    }
    Ok(base.powf(x))
}

fn eval_in(e: &Expr, env: &Env) -> Result<Complex64> {
    Ok(match e {
        Expr::Const(c) => *c,
        Expr::Var(v) => {
            let (vals, len) = match v.slot {
                Slot::Z => (env.z, env.z.len()),
                Slot::Wb => (&env.wb[..], env.wb.len()),
            };
            *vals.get(v.index - 1).ok_or(Error::DimensionMismatch {
                expected: v.index,
                found: len,
            })?
        }
        Expr::Param(p) => Complex64::new(
            *env.params
                .get(&**p)
                .ok_or_else(|| Error::UnboundParameter(p.to_string()))?,
            0.0,
        ),
        Expr::Add(a, b) => eval_in(a, env)? + eval_in(b, env)?,
        Expr::Sub(a, b) => eval_in(a, env)? - eval_in(b, env)?,
        Expr::Mul(a, b) => eval_in(a, env)? * eval_in(b, env)?,
        Expr::Div(a, b) => {
            let d = eval_in(b, env)?;
            if d == Complex64::new(0.0, 0.0) {
                return Err(Error::DivisionByZero);
            }
            eval_in(a, env)? / d
        }
        Expr::Neg(a) => -eval_in(a, env)?,
        Expr::Pow(b, x) => {
            let xv = eval_in(x, env)?;
            if xv.im != 0.0 {
                return Err(Error::NonRealExponent { offset: 0 });
            }
            power(eval_in(b, env)?, xv.re)?
        }
        Expr::Log(a) => {
            let v = eval_in(a, env)?;
            if v == Complex64::new(0.0, 0.0) {
                return Err(Error::LogOfZero);
            }
            v.ln()
        }
        Expr::Exp(a) => eval_in(a, env)?.exp(),
    })
}

pub fn evaluate(e: &Expr, at: &EvalPoint, params: &ParameterBinding) -> Result<Complex64> {
    if at.z.len() != at.w.len() {
        return Err(Error::DimensionMismatch {
            expected: at.z.len(),
            found: at.w.len(),
        });
    }
    let env = Env {
        z: &at.z,
        wb: at.w.iter().map(|w| w.conj()).collect(),
        params,
    };
    eval_in(e, &env)
}

/// Value of `K(z, z)`, required to be a positive real.
pub fn diagonal_value(kernel: &Expr, z: &[Complex64], params: &ParameterBinding) -> Result<f64> {
    let k = evaluate(kernel, &EvalPoint::diagonal(z), params)?;
    if !(k.re > 0.0) || k.im.abs() > 1e-12 * k.re.abs().max(1.0) {
        return Err(Error::NonPositiveMetric {
            value: format!("{k}"),
        });
    }
    Ok(k.re)
}

/// `dbar_i d_j log K` at the diagonal point `z`, through
/// `(K dbar_i d_j K - d_j K dbar_i K) / K^2`.
pub fn mixed_log_derivative(
    kernel: &Expr,
    i: usize,
    j: usize,
    z: &[Complex64],
    params: &ParameterBinding,
) -> Result<Complex64> {
    let mut table = DerivativeTable::new(kernel.clone());
    mixed_log_from_table(&mut table, i, j, z, params)
}

pub(crate) fn mixed_log_from_table(
    table: &mut DerivativeTable,
    i: usize,
    j: usize,
    z: &[Complex64],
    params: &ParameterBinding,
) -> Result<Complex64> {
    let m = z.len();
    if i == 0 || j == 0 || i > m || j > m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: i.max(j),
        });
    }
    let k = diagonal_value(table.root(), z, params)?;
    let at = EvalPoint::diagonal(z);
    let base = DerivativeIndex::zero(m);
    let dj = table.eval(&base.clone().dz(j, 1), &at, params)?;
    let di = table.eval(&base.clone().dwb(i, 1), &at, params)?;
    let dij = table.eval(&base.dz(j, 1).dwb(i, 1), &at, params)?;
    Ok((dij * k - dj * di) / (k * k))
}

fn binomial_f(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, t| acc * (n - t) as f64 / (t + 1) as f64)
}

fn shifted(at: &EvalPoint, offsets: &[(Var, f64)]) -> EvalPoint {
    let mut p = at.clone();
    for &(v, t) in offsets {
        let slot = match v.slot {
            Slot::Z => &mut p.z,
            Slot::Wb => &mut p.w,
        };
        slot[v.index - 1] += t;
    }
    p
}

fn stencil(
    e: &Expr,
    vars: &[(Var, usize)],
    at: &EvalPoint,
    params: &ParameterBinding,
    h: f64,
) -> Result<Complex64> {
    let mut total = Complex64::new(0.0, 0.0);
    let mut ks = vec![0usize; vars.len()];
    loop {
        let mut weight = 1.0;
        let mut offsets = Vec::with_capacity(vars.len());
        for (&(v, n), &k) in vars.iter().zip(&ks) {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            weight *= sign * binomial_f(n, k) / h.powi(n as i32);
            offsets.push((v, (n as f64 / 2.0 - k as f64) * h));
        }
        total += evaluate(e, &shifted(at, &offsets), params)? * weight;
        let mut pos = 0;
        loop {
            if pos == ks.len() {
                return Ok(total);
            }
            ks[pos] += 1;
            if ks[pos] <= vars[pos].1 {
                break;
            }
            ks[pos] = 0;
            pos += 1;
        }
    }
}

/// Central-difference estimate of a mixed Wirtinger derivative.
///
/// `z_i` is perturbed along the real axis, and `wb_i` through a real shift of `w_i`.
/// The step grows as `step * 10^(n-1)` with total order `n`, and one Richardson
/// extrapolation removes the `h^2` term.
pub fn fd_mixed_derivative(
    e: &Expr,
    idx: &DerivativeIndex,
    at: &EvalPoint,
    params: &ParameterBinding,
    step: f64,
) -> Result<Complex64> {
    let n = idx.total_order();
    if n == 0 {
        return evaluate(e, at, params);
    }
    let h = step * 10f64.powi(n as i32 - 1);
    let vars: Vec<(Var, usize)> = idx
        .z
        .iter()
        .enumerate()
        .map(|(i, &k)| (Var::z(i + 1), k))
        .chain(idx.wb.iter().enumerate().map(|(i, &k)| (Var::wb(i + 1), k)))
        .filter(|&(_, k)| k > 0)
        .collect();
    if vars.iter().any(|(v, _)| v.index > at.dim()) {
        return Err(Error::DimensionMismatch {
            expected: idx.z.len(),
            found: at.dim(),
        });
    }
    for (v, _) in &vars {
        for s in [-4.0, -2.0, 2.0, 4.0] {
            match evaluate(e, &shifted(at, &[(*v, s * h)]), params) {
                Ok(_) => {}
                Err(Error::Domain(_) | Error::DivisionByZero | Error::LogOfZero) => {
                    return Err(Error::InsufficientMargin)
                }
                Err(other) => return Err(other),
            }
        }
    }
    let coarse = stencil(e, &vars, at, params, h)?;
    let fine = stencil(e, &vars, at, params, h / 2.0)?;
    Ok((fine * 4.0 - coarse) / 3.0)
}
