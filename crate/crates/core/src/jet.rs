//! Jet kernels, the Toeplitz module action, curvature and the canonical connection.

use num_complex::Complex64;

use crate::calc::{
    diagonal_value, mixed_log_from_table, DerivativeIndex, DerivativeTable, EvalPoint,
};
use crate::dsl::{log, mul, Expr, ParameterBinding, Slot};
use crate::linalg::{binomial, czero, max_abs_vec_diff, CMatrix};
use crate::{Error, Result};

/// `(JK)_{l,j} = d1^l dbar1^j K` at a point pair.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixKernelValue {
    pub matrix: CMatrix,
    pub order: usize,
    pub point: EvalPoint,
}

pub fn jet_kernel(
    kernel: &Expr,
    k: usize,
    at: &EvalPoint,
    params: &ParameterBinding,
) -> Result<MatrixKernelValue> {
    let mut table = DerivativeTable::new(kernel.clone());
    jet_kernel_from_table(&mut table, k, at, params)
}

pub(crate) fn jet_kernel_from_table(
    table: &mut DerivativeTable,
    k: usize,
    at: &EvalPoint,
    params: &ParameterBinding,
) -> Result<MatrixKernelValue> {
    if k == 0 {
        return Err(Error::InvalidParameters(
            "jet order k must be at least 1".into(),
        ));
    }
    let mut matrix = CMatrix::zeros(k, k);
    for l in 0..k {
        for j in 0..k {
            let idx = DerivativeIndex::zero(at.dim()).dz(1, l).dwb(1, j);
            matrix[(l, j)] = table.eval(&idx, at, params)?;
        }
    }
    Ok(MatrixKernelValue {
        matrix,
        order: k,
        point: at.clone(),
    })
}

/// `calJ f`: entry `(l, j) = binom(l, j) d1^{l-j} f`, lower triangular.
#[derive(Debug, Clone, PartialEq)]
pub struct ToeplitzJetMatrix(pub CMatrix);

impl ToeplitzJetMatrix {
    /// From the sequence `f, d1 f, d1^2 f, ...`.
    pub fn from_derivatives(d: &[Complex64]) -> Self {
        let k = d.len();
        ToeplitzJetMatrix(CMatrix::from_fn(k, k, |l, j| {
            if j <= l {
                d[l - j] * binomial(l, j)
            } else {
                czero()
            }
        }))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    /// The column `[d1^l (f s)]` predicted from `[d1^l s]`.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.0.nrows())
            .map(|l| (0..self.0.ncols()).map(|j| self.0[(l, j)] * v[j]).sum())
            .collect()
    }
}

/// Point for holomorphic evaluation: the `wb` slot is never read.
fn holo_point(z: &[Complex64]) -> EvalPoint {
    EvalPoint::diagonal(z)
}

/// `d1^n f(z)` for `n < k`.
pub fn normal_derivatives(
    f: &Expr,
    k: usize,
    z: &[Complex64],
    params: &ParameterBinding,
) -> Result<Vec<Complex64>> {
    let mut table = DerivativeTable::new(f.clone());
    (0..k)
        .map(|n| {
            table.eval(
                &DerivativeIndex::zero(z.len()).dz(1, n),
                &holo_point(z),
                params,
            )
        })
        .collect()
}

pub fn toeplitz_jet_matrix(
    f: &Expr,
    k: usize,
    z: &[Complex64],
    params: &ParameterBinding,
) -> Result<ToeplitzJetMatrix> {
    if f.contains_slot(Slot::Wb) {
        return Err(Error::NotHolomorphic);
    }
    Ok(ToeplitzJetMatrix::from_derivatives(&normal_derivatives(
        f, k, z, params,
    )?))
}

pub fn curvature_matrix(
    kernel: &Expr,
    z: &[Complex64],
    params: &ParameterBinding,
) -> Result<CMatrix> {
    let m = z.len();
    let mut table = DerivativeTable::new(kernel.clone());
    let mut out = CMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            out[(i, j)] = mixed_log_from_table(&mut table, i + 1, j + 1, z, params)?;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureSplit {
    pub trans: f64,
    pub tan: CMatrix,
    pub angle: Vec<Complex64>,
}

pub fn curvature_split(full: &CMatrix) -> CurvatureSplit {
    let m = full.nrows();
    CurvatureSplit {
        trans: full[(0, 0)].re,
        tan: full.view((1, 1), (m - 1, m - 1)).into_owned(),
        angle: (1..m).map(|j| full[(0, j)]).collect(),
    }
}

impl CurvatureSplit {
    pub fn reassemble(&self) -> CMatrix {
        let m = self.tan.nrows() + 1;
        CMatrix::from_fn(m, m, |i, j| match (i, j) {
            (0, 0) => Complex64::new(self.trans, 0.0),
            (0, j) => self.angle[j - 1],
            (i, 0) => self.angle[i - 1].conj(),
            (i, j) => self.tan[(i - 1, j - 1)],
        })
    }

    /// Second fundamental form rebuilt from the split:
    /// `-trans^{-1/2} [trans, conj(angle)]`.
    pub fn second_fundamental_form(&self) -> Result<Vec<Complex64>> {
        if !(self.trans > 0.0) {
            return Err(Error::VanishingTransverseCurvature(self.trans));
        }
        let s = self.trans.sqrt();
        Ok(std::iter::once(Complex64::new(-s, 0.0))
            .chain(self.angle.iter().map(|a| -a.conj() / s))
            .collect())
    }

    /// Largest entry-wise gap to another split.
    pub fn distance(&self, other: &CurvatureSplit) -> f64 {
        let tan = if self.tan.is_empty() {
            0.0
        } else {
            crate::linalg::max_abs_diff(&self.tan, &other.tan)
        };
        (self.trans - other.trans)
            .abs()
            .max(tan)
            .max(max_abs_vec_diff(&self.angle, &other.angle))
    }
}

/// Symbolic `log h` derivatives shared by the second fundamental form and the connection.
struct LogJets {
    table: DerivativeTable,
    at: EvalPoint,
    m: usize,
}

impl LogJets {
    fn new(kernel: &Expr, z: &[Complex64], params: &ParameterBinding) -> Result<Self> {
        diagonal_value(kernel, z, params)?;
        Ok(LogJets {
            table: DerivativeTable::new(log(kernel.clone())),
            at: EvalPoint::diagonal(z),
            m: z.len(),
        })
    }

    fn d(
        &mut self,
        z: &[(usize, usize)],
        wb: &[(usize, usize)],
        params: &ParameterBinding,
    ) -> Result<Complex64> {
        let mut idx = DerivativeIndex::zero(self.m);
        for &(i, n) in z {
            idx = idx.dz(i, n);
        }
        for &(i, n) in wb {
            idx = idx.dwb(i, n);
        }
        self.table.eval(&idx, &self.at, params)
    }

    fn transverse(&mut self, params: &ParameterBinding) -> Result<f64> {
        let t = self.d(&[(1, 1)], &[(1, 1)], params)?.re;
        if !(t > 0.0) {
            return Err(Error::VanishingTransverseCurvature(t));
        }
        Ok(t)
    }
}

/// `-dbar_i d1 log h / (d1 dbar1 log h)^{1/2}` for `i = 1..m`.
pub fn second_fundamental_form(
    kernel: &Expr,
    z: &[Complex64],
    params: &ParameterBinding,
) -> Result<Vec<Complex64>> {
    let mut jets = LogJets::new(kernel, z, params)?;
    let root = jets.transverse(params)?.sqrt();
    (1..=z.len())
        .map(|i| Ok(-jets.d(&[(1, 1)], &[(i, 1)], params)? / root))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OneForm {
    pub dz: Vec<Complex64>,
    pub dzbar: Vec<Complex64>,
}

impl OneForm {
    fn zero(m: usize) -> Self {
        OneForm {
            dz: vec![czero(); m],
            dzbar: vec![czero(); m],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionMatrix {
    pub theta: [[OneForm; 2]; 2],
}

impl ConnectionMatrix {
    /// Largest coefficient of `theta + theta*`, zero for a metric connection.
    pub fn compatibility_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let a = &self.theta[i][j];
                let b = &self.theta[j][i];
                for k in 0..a.dz.len() {
                    worst = worst
                        .max((a.dz[k] + b.dzbar[k].conj()).norm())
                        .max((a.dzbar[k] + b.dz[k].conj()).norm());
                }
            }
        }
        worst
    }
}

pub fn connection_matrix(
    kernel: &Expr,
    z: &[Complex64],
    params: &ParameterBinding,
) -> Result<ConnectionMatrix> {
    let m = z.len();
    let mut jets = LogJets::new(kernel, z, params)?;
    let root = jets.transverse(params)?.sqrt();

    let mut t11 = OneForm::zero(m);
    let mut t12 = OneForm::zero(m);
    let mut t21 = OneForm::zero(m);
    for i in 1..=m {
        t11.dz[i - 1] = jets.d(&[(i, 1)], &[], params)? * 0.5;
        t11.dzbar[i - 1] = -jets.d(&[], &[(i, 1)], params)? * 0.5;
        t12.dzbar[i - 1] = -jets.d(&[(1, 1)], &[(i, 1)], params)? / root;
        t21.dz[i - 1] = jets.d(&[(i, 1)], &[(1, 1)], params)? / root;
    }

    // theta22 = (1/2)(d - dbar) log(h T) with T = d1 dbar1 log h
    let trans_expr = jets
        .table
        .get(&DerivativeIndex::zero(m).dz(1, 1).dwb(1, 1))?;
    let ht = mul(kernel.clone(), trans_expr);
    let mut ht_table = DerivativeTable::new(ht);
    let at = EvalPoint::diagonal(z);
    let v = ht_table.eval(&DerivativeIndex::zero(m), &at, params)?;
    let mut t22 = OneForm::zero(m);
    for i in 1..=m {
        t22.dz[i - 1] = ht_table.eval(&DerivativeIndex::zero(m).dz(i, 1), &at, params)? / v * 0.5;
        t22.dzbar[i - 1] =
            -ht_table.eval(&DerivativeIndex::zero(m).dwb(i, 1), &at, params)? / v * 0.5;
    }
    Ok(ConnectionMatrix {
        theta: [[t11, t12], [t21, t22]],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameChange {
    pub ok: bool,
    pub residual: f64,
}

pub const FRAME_CHANGE_TOL: f64 = 1e-12;

/// Checks `J(g s) = (calJ g) J(s)` for the normal jets at a point pair.
pub fn frame_change_check(
    g: &Expr,
    s: &Expr,
    k: usize,
    at: &EvalPoint,
    params: &ParameterBinding,
) -> Result<FrameChange> {
    let jg = toeplitz_jet_matrix(g, k, &at.z, params)?;
    let mut gs = DerivativeTable::new(mul(g.clone(), s.clone()));
    let mut st = DerivativeTable::new(s.clone());
    let mut left = Vec::with_capacity(k);
    let mut right_in = Vec::with_capacity(k);
    for l in 0..k {
        let idx = DerivativeIndex::zero(at.dim()).dz(1, l);
        left.push(gs.eval(&idx, at, params)?);
        right_in.push(st.eval(&idx, at, params)?);
    }
    let right = jg.apply(&right_in);
    let residual = max_abs_vec_diff(&left, &right);
    let scale = 1.0 + crate::linalg::max_abs_vec(&left);
    Ok(FrameChange {
        ok: residual <= FRAME_CHANGE_TOL * scale,
        residual,
    })
}
