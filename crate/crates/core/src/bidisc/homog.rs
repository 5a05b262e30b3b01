use num_complex::Complex64;

use crate::calc::{evaluate, DerivativeIndex, DerivativeTable, EvalPoint};
use crate::dsl::{mul, pow, sub, Expr, ParameterBinding};
use crate::linalg::{creal, CMatrix};
use crate::{Error, Result};

/// Disc automorphism `phi(z) = e^{i theta} (z - a) / (1 - conj(a) z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mobius {
    pub a: Complex64,
    pub theta: f64,
}

impl Mobius {
    pub fn new(a: Complex64, theta: f64) -> Result<Self> {
        if !(a.norm() < 1.0) {
            return Err(Error::OutsideDisc(format!("{a}")));
        }
        Ok(Mobius { a, theta })
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        Complex64::from_polar(1.0, self.theta) * (z - self.a) / (1.0 - self.a.conj() * z)
    }

    pub fn inverse(&self, w: Complex64) -> Complex64 {
        let r = Complex64::from_polar(1.0, -self.theta);
        (r * w + self.a) / (1.0 + self.a.conj() * r * w)
    }

    /// Derivative of the inverse map at `w`.
    pub fn inverse_derivative(&self, w: Complex64) -> Complex64 {
        let r = Complex64::from_polar(1.0, -self.theta);
        let d = 1.0 + self.a.conj() * r * w;
        r * (1.0 - self.a.norm_sqr()) / (d * d)
    }
}

/// `D* K(phi^{-1}(z)) D` with `D = diag((phi_i^{-1})'(z_i))`.
pub fn mobius_pullback_curvature<F>(curv: F, maps: &[Mobius], z: &[Complex64]) -> Result<CMatrix>
where
    F: Fn(&[Complex64]) -> Result<CMatrix>,
{
    if maps.len() != z.len() {
        return Err(Error::DimensionMismatch {
            expected: z.len(),
            found: maps.len(),
        });
    }
    let pre: Vec<Complex64> = maps.iter().zip(z).map(|(m, &w)| m.inverse(w)).collect();
    let d: Vec<Complex64> = maps
        .iter()
        .zip(z)
        .map(|(m, &w)| m.inverse_derivative(w))
        .collect();
    let k = curv(&pre)?;
    Ok(CMatrix::from_fn(z.len(), z.len(), |i, j| {
        d[i].conj() * k[(i, j)] * d[j]
    }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogBundleParams {
    alpha: f64,
    delta: f64,
    beta: f64,
}

impl HomogBundleParams {
    pub fn new(alpha: f64, delta: f64, beta: f64) -> Result<Self> {
        let ok = alpha > 0.0 && delta > 0.0 && alpha * delta - beta * beta > 0.0;
        if !ok || !beta.is_finite() || !alpha.is_finite() || !delta.is_finite() {
            return Err(Error::InvalidParameters(format!(
                "need alpha > 0, delta > 0 and alpha*delta - beta^2 > 0, got ({alpha}, {delta}, {beta})"
            )));
        }
        Ok(HomogBundleParams { alpha, delta, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `(a, b, c) = (alpha + delta + 2 beta, alpha - delta, alpha + delta - 2 beta)`.
    pub fn abc(&self) -> (f64, f64, f64) {
        (
            self.alpha + self.delta + 2.0 * self.beta,
            self.alpha - self.delta,
            self.alpha + self.delta - 2.0 * self.beta,
        )
    }
}

fn one_minus(i: usize, j: usize) -> Expr {
    sub(Expr::real(1.0), mul(Expr::z(i), Expr::wb(j)))
}

/// `((1 - z1 wb2)(1 - z2 wb1))^(-beta) (1 - z1 wb1)^(-alpha) (1 - z2 wb2)^(-delta)`.
pub fn homog_bundle_metric(params: &HomogBundleParams) -> Expr {
    let cross = pow(
        mul(one_minus(1, 2), one_minus(2, 1)),
        Expr::real(-params.beta),
    );
    let diag = mul(
        pow(one_minus(1, 1), Expr::real(-params.alpha)),
        pow(one_minus(2, 2), Expr::real(-params.delta)),
    );
    if params.beta == 0.0 {
        diag
    } else {
        mul(cross, diag)
    }
}

/// `dbar_i d_j h(0)` of the normalized metric, the jet metric at the origin.
pub fn homog_jet_metric_at_origin(params: &HomogBundleParams) -> Result<CMatrix> {
    let mut t = DerivativeTable::new(homog_bundle_metric(params));
    let at = EvalPoint::diagonal(&[creal(0.0), creal(0.0)]);
    let p = ParameterBinding::new();
    let mut out = CMatrix::zeros(2, 2);
    for i in 0..2 {
        for j in 0..2 {
            out[(i, j)] = t.eval(
                &DerivativeIndex::zero(2).dwb(i + 1, 1).dz(j + 1, 1),
                &at,
                &p,
            )?;
        }
    }
    Ok(out)
}

/// Closed form of the curvature in `(u1, u2)` at `(u1, 0)`.
pub fn homog_curvature_restriction(params: &HomogBundleParams, u1: Complex64) -> Result<CMatrix> {
    let x = u1.norm_sqr();
    if !(x < 1.0) {
        return Err(Error::OutsideDisc(format!("{u1}")));
    }
    let (a, b, c) = params.abc();
    let s = (1.0 - x).powi(-2);
    Ok(CMatrix::from_row_slice(
        2,
        2,
        &[a, b, b, c].map(|v| creal(v * s)),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogMetricCoeffs {
    pub a00: f64,
    pub a10: Complex64,
    pub a11: f64,
}

pub fn solve_homog_metric_coeffs(
    a: f64,
    b: f64,
    c: f64,
    u1: Complex64,
) -> Result<HomogMetricCoeffs> {
    let x = u1.norm_sqr();
    if !(x < 1.0) {
        return Err(Error::OutsideDisc(format!("{u1}")));
    }
    let q = 1.0 - x;
    let a00 = q.powf(-a);
    Ok(HomogMetricCoeffs {
        a00,
        a10: u1.conj() * b * q.powf(-a - 1.0),
        a11: a00 * q.powi(-2) * (c + b * b * x),
    })
}

/// `(a, b, c)` recovered from the coefficient formulas through the curvature relations,
/// with the derivatives taken by the symbolic engine.
pub fn recover_homog_abc(a: f64, b: f64, c: f64, u1: Complex64) -> Result<(f64, f64, f64)> {
    let coeffs = solve_homog_metric_coeffs(a, b, c, u1)?;
    let q = 1.0 - u1.norm_sqr();
    let p = ParameterBinding::new();
    let at = EvalPoint::diagonal(&[u1]);
    let base = one_minus(1, 1);
    let a00 = pow(base.clone(), Expr::real(-a));
    let a10 = mul(
        mul(Expr::real(b), Expr::wb(1)),
        pow(base, Expr::real(-a - 1.0)),
    );

    let mut log_a00 = DerivativeTable::new(crate::dsl::log(a00.clone()));
    let r11 = log_a00.eval(&DerivativeIndex::zero(1).dz(1, 1).dwb(1, 1), &at, &p)?;

    let dbar = DerivativeIndex::zero(1).dwb(1, 1);
    let v00 = evaluate(&a00, &at, &p)?;
    let v10 = evaluate(&a10, &at, &p)?;
    let d00 = DerivativeTable::new(a00).eval(&dbar, &at, &p)?;
    let d10 = DerivativeTable::new(a10).eval(&dbar, &at, &p)?;
    let r12 = (v00 * d10 - v10 * d00) / (v00 * v00);

    let r22 = (coeffs.a11 * v00 - v10 * v10.conj()) / (v00 * v00);
    let scale = q * q;
    Ok((r11.re * scale, r12.re * scale, r22.re * scale))
}
