//! Order-k equivalence along the slice `{z1 = 0}` and the rank-2 curvature invariants.

use num_complex::Complex64;

use crate::calc::{diagonal_value, evaluate, DerivativeIndex, DerivativeTable, EvalPoint};
use crate::dsl::{log, sub, Expr, ParameterBinding, Slot};
use crate::jet::{
    curvature_matrix, curvature_split, jet_kernel, toeplitz_jet_matrix, CurvatureSplit,
    ToeplitzJetMatrix,
};
use crate::linalg::{factorial, max_abs, max_abs_diff, CMatrix};
use crate::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-8;

fn slice_point(zprime: &[Complex64]) -> Vec<Complex64> {
    std::iter::once(Complex64::new(0.0, 0.0))
        .chain(zprime.iter().copied())
        .collect()
}

/// Blocks of `D_k log(rho~/rho)` at `(0, z')`.
#[derive(Debug, Clone, PartialEq)]
pub struct DkResult {
    pub order: usize,
    pub point: Vec<Complex64>,
    /// `dbar_i d_j`, `i, j = 2..m`.
    pub tan_block: CMatrix,
    /// `row_vectors[j-1][i] = dbar_{i+2} d1^j`.
    pub row_vectors: Vec<Vec<Complex64>>,
    /// `col_vectors[i-1][j] = dbar1^i d_{j+2}`.
    pub col_vectors: Vec<Vec<Complex64>>,
    /// `dbar1^i d1^j`, `i, j = 1..k-1`.
    pub scalar_block: CMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BlockResiduals {
    pub tan: f64,
    pub row: f64,
    pub col: f64,
    pub scalar: f64,
}

impl BlockResiduals {
    pub fn max(&self) -> f64 {
        self.tan.max(self.row).max(self.col).max(self.scalar)
    }

    fn merge(self, o: BlockResiduals) -> BlockResiduals {
        BlockResiduals {
            tan: self.tan.max(o.tan),
            row: self.row.max(o.row),
            col: self.col.max(o.col),
            scalar: self.scalar.max(o.scalar),
        }
    }
}

fn max_vecs(v: &[Vec<Complex64>]) -> f64 {
    v.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
}

impl DkResult {
    pub fn residuals(&self) -> BlockResiduals {
        BlockResiduals {
            tan: max_abs(&self.tan_block),
            row: max_vecs(&self.row_vectors),
            col: max_vecs(&self.col_vectors),
            scalar: max_abs(&self.scalar_block),
        }
    }
}

/// Applies `D_k` to `log(rho_tilde / rho)` at `(0, z')`.
pub fn dk_apply(
    rho: &Expr,
    rho_tilde: &Expr,
    k: usize,
    zprime: &[Complex64],
    params: &ParameterBinding,
) -> Result<DkResult> {
    if k == 0 {
        return Err(Error::InvalidParameters(
            "order k must be at least 1".into(),
        ));
    }
    let z = slice_point(zprime);
    let m = z.len();
    diagonal_value(rho, &z, params)?;
    diagonal_value(rho_tilde, &z, params)?;
    let g = sub(log(rho_tilde.clone()), log(rho.clone()));
    let mut table = DerivativeTable::new(g);
    let at = EvalPoint::diagonal(&z);
    let zero = DerivativeIndex::zero(m);
    let mut d = |idx: DerivativeIndex| table.eval(&idx, &at, params);

    let t = m - 1;
    let mut tan_block = CMatrix::zeros(t, t);
    for i in 0..t {
        for j in 0..t {
            tan_block[(i, j)] = d(zero.clone().dwb(i + 2, 1).dz(j + 2, 1))?;
        }
    }
    let mut row_vectors = Vec::with_capacity(k.saturating_sub(1));
    let mut col_vectors = Vec::with_capacity(k.saturating_sub(1));
    for n in 1..k {
        row_vectors.push(
            (0..t)
                .map(|i| d(zero.clone().dwb(i + 2, 1).dz(1, n)))
                .collect::<Result<Vec<_>>>()?,
        );
        col_vectors.push(
            (0..t)
                .map(|j| d(zero.clone().dwb(1, n).dz(j + 2, 1)))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    let s = k - 1;
    let mut scalar_block = CMatrix::zeros(s, s);
    for i in 0..s {
        for j in 0..s {
            scalar_block[(i, j)] = d(zero.clone().dwb(1, i + 1).dz(1, j + 1))?;
        }
    }
    Ok(DkResult {
        order: k,
        point: z,
        tan_block,
        row_vectors,
        col_vectors,
        scalar_block,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Equivalent,
    NotEquivalent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    pub verdict: Verdict,
    pub residuals: BlockResiduals,
    pub per_sample: Vec<BlockResiduals>,
    pub samples: Vec<Vec<Complex64>>,
    pub tol: f64,
    pub order: usize,
}

impl EquivalenceReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.max()
    }
}

pub fn order_k_equivalent(
    a: &Expr,
    b: &Expr,
    k: usize,
    samples: &[Vec<Complex64>],
    tol: f64,
    params: &ParameterBinding,
) -> Result<EquivalenceReport> {
    if samples.is_empty() {
        return Err(Error::InvalidParameters(
            "at least one sample point is required".into(),
        ));
    }
    let per_sample = samples
        .iter()
        .enumerate()
        .map(|(index, zp)| {
            dk_apply(a, b, k, zp, params)
                .map(|r| r.residuals())
                .map_err(|e| Error::AtSample {
                    index,
                    source: Box::new(e),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    let residuals = per_sample
        .iter()
        .copied()
        .fold(BlockResiduals::default(), BlockResiduals::merge);
    let verdict = if residuals.max() <= tol {
        Verdict::Equivalent
    } else {
        Verdict::NotEquivalent
    };
    Ok(EquivalenceReport {
        verdict,
        residuals,
        per_sample,
        samples: samples.to_vec(),
        tol,
        order: k,
    })
}

/// Curvature split at `(0, z')`.
pub fn rank2_invariants(
    kernel: &Expr,
    zprime: &[Complex64],
    params: &ParameterBinding,
) -> Result<CurvatureSplit> {
    if zprime.is_empty() {
        return Err(Error::NoTangentialDirections);
    }
    Ok(curvature_split(&curvature_matrix(
        kernel,
        &slice_point(zprime),
        params,
    )?))
}

/// Taylor coefficients `d1^p psi / p!`, `p < k`, as expressions.
pub fn taylor_generators(psi: &Expr, k: usize) -> Result<Vec<Expr>> {
    let m = psi.max_index().max(1);
    let mut table = DerivativeTable::new(psi.clone());
    (0..k)
        .map(|p| {
            let d = table.get(&DerivativeIndex::zero(m).dz(1, p))?;
            Ok(crate::dsl::div(d, Expr::real(factorial(p))))
        })
        .collect()
}

/// Lower-triangular Toeplitz `Psi` with `psi_p` on sub-diagonal `p`, moved into the
/// derivative frame: `(D^{-1} Psi D)_{l,j} = l!/j! psi_{l-j}` with `D = diag(1/l!)`.
pub fn toeplitz_frame(psi: &[Complex64], k: usize) -> CMatrix {
    CMatrix::from_fn(k, k, |l, j| {
        if j <= l {
            let g = psi.get(l - j).copied().unwrap_or_default();
            g * (factorial(l) / factorial(j))
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

fn eval_generators(
    psi: &[Expr],
    z: &[Complex64],
    params: &ParameterBinding,
) -> Result<Vec<Complex64>> {
    psi.iter()
        .map(|e| {
            if e.contains_slot(Slot::Wb) {
                return Err(Error::NotHolomorphic);
            }
            evaluate(e, &EvalPoint::diagonal(z), params)
        })
        .collect()
}

/// `max |J rho~ - Psi J rho Psi*|` at `(0, z')`.
pub fn toeplitz_congruence_check(
    a: &Expr,
    b: &Expr,
    psi: &[Expr],
    k: usize,
    zprime: &[Complex64],
    params: &ParameterBinding,
) -> Result<f64> {
    let z = slice_point(zprime);
    let at = EvalPoint::diagonal(&z);
    let ja = jet_kernel(a, k, &at, params)?.matrix;
    let jb = jet_kernel(b, k, &at, params)?.matrix;
    let frame = toeplitz_frame(&eval_generators(psi, &z, params)?, k);
    Ok(max_abs_diff(&jb, &(&frame * ja * frame.adjoint())))
}

/// `max |Psi calJf - calJf Psi|` for the Toeplitz `Psi` built from `psi` at `z`.
pub fn intertwine_check(
    psi: &[Expr],
    f: &Expr,
    k: usize,
    z: &[Complex64],
    params: &ParameterBinding,
) -> Result<f64> {
    let frame = toeplitz_frame(&eval_generators(psi, z, params)?, k);
    let jf = toeplitz_jet_matrix(f, k, z, params)?;
    Ok(commutator_residual(&frame, &jf))
}

/// `max |Psi calJf - calJf Psi|` for an arbitrary `Psi`.
pub fn commutator_residual(psi: &CMatrix, jf: &ToeplitzJetMatrix) -> f64 {
    max_abs_diff(&(psi * jf.matrix()), &(jf.matrix() * psi))
}

/// `h_ij = d1^i dbar1^j h` at `(0, z')` for `i, j` in `{0, 1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricCoeffs {
    pub h00: Complex64,
    pub h10: Complex64,
    pub h01: Complex64,
    pub h11: Complex64,
}

impl MetricCoeffs {
    pub fn as_matrix(&self) -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[self.h00, self.h01, self.h10, self.h11])
    }

    pub fn from_matrix(h: &CMatrix) -> Self {
        MetricCoeffs {
            h00: h[(0, 0)],
            h01: h[(0, 1)],
            h10: h[(1, 0)],
            h11: h[(1, 1)],
        }
    }

    /// `(h11 h00 - |h10|^2) / h00^2`.
    pub fn transverse_curvature(&self) -> Complex64 {
        (self.h11 * self.h00 - self.h10 * self.h01) / (self.h00 * self.h00)
    }

    pub fn distance(&self, o: &MetricCoeffs) -> f64 {
        max_abs_diff(&self.as_matrix(), &o.as_matrix())
    }
}

pub fn metric_coeffs(
    kernel: &Expr,
    zprime: &[Complex64],
    params: &ParameterBinding,
) -> Result<MetricCoeffs> {
    let z = slice_point(zprime);
    diagonal_value(kernel, &z, params)?;
    Ok(MetricCoeffs::from_matrix(
        &jet_kernel(kernel, 2, &EvalPoint::diagonal(&z), params)?.matrix,
    ))
}

/// Metric coefficients after the frame change `s0 -> alpha (s0 + beta s1)`.
pub fn apply_metric_relations(h: &MetricCoeffs, alpha: Complex64, beta: Complex64) -> MetricCoeffs {
    let a2 = alpha.norm_sqr();
    MetricCoeffs {
        h00: h.h00 * a2,
        h10: (h.h10 + beta * h.h00) * a2,
        h01: (h.h01 + beta.conj() * h.h00) * a2,
        h11: (h.h11 + beta.conj() * h.h10 + beta * h.h01 + h.h00 * beta.norm_sqr()) * a2,
    }
}

pub fn rank2_metric_relations(
    h: &MetricCoeffs,
    alpha: &Expr,
    beta: &Expr,
    zprime: &[Complex64],
    params: &ParameterBinding,
) -> Result<MetricCoeffs> {
    if !(h.h00.re > 0.0) {
        return Err(Error::NonPositiveMetric {
            value: format!("{}", h.h00),
        });
    }
    let g = eval_generators(&[alpha.clone(), beta.clone()], &slice_point(zprime), params)?;
    Ok(apply_metric_relations(h, g[0], g[1]))
}
