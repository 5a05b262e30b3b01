//! The quotient of the weighted bidisc module by functions vanishing to order two on the
//! diagonal: closed forms, a brute-force monomial oracle, and the homogeneous bundles.

mod homog;

pub use homog::*;

use std::fmt::Write;

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::calc::{evaluate, partial, EvalPoint};
use crate::dsl::{Expr, ParameterBinding, Slot, Var};
use crate::linalg::{creal, spectral_norm, CMatrix};
use crate::{Error, Result};

pub const BRUTE_FORCE_MAX_DEGREE: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModuleParams {
    lambda: f64,
    mu: f64,
}

impl ModuleParams {
    pub fn new(lambda: f64, mu: f64) -> Result<Self> {
        if !(lambda > 0.0 && mu > 0.0 && lambda.is_finite() && mu.is_finite()) {
            return Err(Error::InvalidParameters(format!(
                "lambda and mu must be positive, got ({lambda}, {mu})"
            )));
        }
        Ok(ModuleParams { lambda, mu })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    fn s(&self) -> f64 {
        self.lambda + self.mu
    }

    /// The bidisc kernel `(1 - z1 wb1)^(-lambda) (1 - z2 wb2)^(-mu)`.
    pub fn kernel(&self) -> Expr {
        crate::dsl::product_kernel(&[self.lambda, self.mu])
    }
}

/// Coefficient of `x^n` in `(1 - x)^(-lam)`, zero for negative `n`.
pub fn binom_neg(lam: f64, n: i64) -> f64 {
    if n < 0 {
        return 0.0;
    }
    (0..n).fold(1.0, |acc, t| acc * (lam + t as f64) / (t + 1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GramData {
    pub p: usize,
    pub norm_g1_sq: f64,
    pub inner_g1_g2: f64,
    pub norm_g2_sq: f64,
    pub norm_f2_sq: f64,
}

impl GramData {
    pub fn determinant(&self) -> f64 {
        self.norm_g1_sq * self.norm_g2_sq - self.inner_g1_g2 * self.inner_g1_g2
    }
}

pub fn gram_data(params: &ModuleParams, p: usize) -> GramData {
    let (s, mu) = (params.s(), params.mu);
    let p = p as i64;
    let g1 = binom_neg(s, p);
    let inner = mu * binom_neg(s + 1.0, p - 1);
    let g2 = mu * (binom_neg(s + 2.0, p - 1) + mu * binom_neg(s + 2.0, p - 2));
    GramData {
        p: p as usize,
        norm_g1_sq: g1,
        inner_g1_g2: inner,
        norm_g2_sq: g2,
        norm_f2_sq: g1 * (g1 * g2 - inner * inner),
    }
}

/// Right-hand side of the Gram determinant identity,
/// `lambda mu / (lambda + mu) * binom(s, p) * binom(s + 2, p - 1)`.
pub fn gram_determinant_closed_form(params: &ModuleParams, p: usize) -> f64 {
    let s = params.s();
    params.lambda * params.mu / s * binom_neg(s, p as i64) * binom_neg(s + 2.0, p as i64 - 1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftBlock {
    pub p: usize,
    pub m1: Matrix2<f64>,
    pub m2: Matrix2<f64>,
}

impl ShiftBlock {
    pub fn alpha(&self) -> f64 {
        self.m1[(0, 0)]
    }

    pub fn beta1(&self) -> f64 {
        self.m1[(1, 0)]
    }

    pub fn beta2(&self) -> f64 {
        self.m2[(1, 0)]
    }

    pub fn eta(&self) -> f64 {
        self.m1[(1, 1)]
    }

    /// `(M1 - M2) / 2`, the `u2` part.
    pub fn q1(&self) -> Matrix2<f64> {
        (self.m1 - self.m2) * 0.5
    }

    /// `(M1 + M2) / 2`, the `u1` part.
    pub fn q2(&self) -> Matrix2<f64> {
        (self.m1 + self.m2) * 0.5
    }

    pub fn distance(&self, other: &ShiftBlock) -> f64 {
        (self.m1 - other.m1).amax().max((self.m2 - other.m2).amax())
    }
}

pub fn shift_blocks(params: &ModuleParams, p: usize) -> ShiftBlock {
    let (l, m, s) = (params.lambda, params.mu, params.s());
    let pi = p as i64;
    let alpha = (binom_neg(s, pi) / binom_neg(s, pi + 1)).sqrt();
    let common = (s + 1.0).sqrt() / ((s + p as f64) * (s + p as f64 + 1.0)).sqrt();
    let beta1 = (m / l).sqrt() * common;
    let beta2 = -(l / m).sqrt() * common;
    let eta = (binom_neg(s + 2.0, pi - 1) / binom_neg(s + 2.0, pi)).sqrt();
    ShiftBlock {
        p,
        m1: Matrix2::new(alpha, 0.0, beta1, eta),
        m2: Matrix2::new(alpha, 0.0, beta2, eta),
    }
}

/// CSV with columns `p,alpha_p,beta_p1,eta_p,beta_p2`.
pub fn shift_table_csv(params: &ModuleParams, p_max: usize) -> String {
    let mut out = String::from("p,alpha_p,beta_p1,eta_p,beta_p2\n");
    for p in 0..=p_max {
        let b = shift_blocks(params, p);
        let _ = writeln!(
            out,
            "{p},{:.16e},{:.16e},{:.16e},{:.16e}",
            b.alpha(),
            b.beta1(),
            b.eta(),
            b.beta2()
        );
    }
    out
}

/// Polynomial of homogeneous degree `p`: `coeffs[l]` multiplies `z1^(p-l) z2^l`.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousPoly {
    pub p: usize,
    pub coeffs: Vec<f64>,
}

/// Basis vectors of one degree of the quotient and the raw Gram numbers behind them.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeBasis {
    pub p: usize,
    pub e1: HomogeneousPoly,
    /// Absent at degree 0, where `f_0^(2) = 0`.
    pub e2: Option<HomogeneousPoly>,
    pub gram: GramData,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceQuotient {
    pub params: ModuleParams,
    pub p_max: usize,
    /// Degrees `0..=p_max + 1`.
    pub basis: Vec<DegreeBasis>,
    /// Degrees `0..=p_max`.
    pub blocks: Vec<ShiftBlock>,
}

struct MonomialSpace {
    params: ModuleParams,
}

impl MonomialSpace {
    fn weight(&self, p: usize, l: usize) -> f64 {
        1.0 / (binom_neg(self.params.lambda, (p - l) as i64) * binom_neg(self.params.mu, l as i64))
    }

    fn inner(&self, p: usize, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .enumerate()
            .map(|(l, (x, y))| x * y * self.weight(p, l))
            .sum()
    }
}

fn scaled(v: &[f64], s: f64) -> Vec<f64> {
    v.iter().map(|x| x * s).collect()
}

pub fn brute_force_quotient(params: &ModuleParams, p_max: usize) -> Result<BruteForceQuotient> {
    if p_max > BRUTE_FORCE_MAX_DEGREE {
        return Err(Error::DegreeOverflow {
            requested: p_max,
            limit: BRUTE_FORCE_MAX_DEGREE,
        });
    }
    let space = MonomialSpace { params: *params };
    let mut basis = Vec::with_capacity(p_max + 2);
    for p in 0..=p_max + 1 {
        let raw: Vec<f64> = (0..=p).map(|l| 1.0 / space.weight(p, l)).collect();
        let g2: Vec<f64> = raw.iter().enumerate().map(|(l, c)| l as f64 * c).collect();
        let n11 = space.inner(p, &raw, &raw);
        let n12 = space.inner(p, &raw, &g2);
        let n22 = space.inner(p, &g2, &g2);
        let f2: Vec<f64> = raw
            .iter()
            .zip(&g2)
            .map(|(a, b)| n12 * a - n11 * b)
            .collect();
        let nf = space.inner(p, &f2, &f2);
        let values = [n11, n12, n22, nf];
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::DegreeOverflow {
                requested: p_max,
                limit: p,
            });
        }
        basis.push(DegreeBasis {
            p,
            e1: HomogeneousPoly {
                p,
                coeffs: scaled(&raw, 1.0 / n11.sqrt()),
            },
            e2: (p > 0).then(|| HomogeneousPoly {
                p,
                coeffs: scaled(&f2, 1.0 / nf.sqrt()),
            }),
            gram: GramData {
                p,
                norm_g1_sq: n11,
                inner_g1_g2: n12,
                norm_g2_sq: n22,
                norm_f2_sq: nf,
            },
        });
    }
    let blocks = (0..=p_max)
        .map(|p| {
            let (cur, next) = (&basis[p], &basis[p + 1]);
            let from: [Option<&HomogeneousPoly>; 2] = [Some(&cur.e1), cur.e2.as_ref()];
            let to = [&next.e1, next.e2.as_ref().expect("degree >= 1 has e2")];
            let mut m1 = Matrix2::zeros();
            let mut m2 = Matrix2::zeros();
            for (c, src) in from.iter().enumerate() {
                let Some(src) = src else { continue };
                // z1 keeps the z2-power, z2 raises it
                let mut by_z1 = src.coeffs.clone();
                by_z1.push(0.0);
                let mut by_z2 = vec![0.0];
                by_z2.extend_from_slice(&src.coeffs);
                for (r, dst) in to.iter().enumerate() {
                    m1[(r, c)] = space.inner(p + 1, &by_z1, &dst.coeffs);
                    m2[(r, c)] = space.inner(p + 1, &by_z2, &dst.coeffs);
                }
            }
            ShiftBlock { p, m1, m2 }
        })
        .collect();
    Ok(BruteForceQuotient {
        params: *params,
        p_max,
        basis,
        blocks,
    })
}

impl BruteForceQuotient {
    /// `(value on the diagonal, d/dz2 on the diagonal)` coefficients of `e1`, `e2`.
    pub fn frame_image(&self, p: usize) -> FrameImage {
        let image = |poly: &HomogeneousPoly| {
            [
                poly.coeffs.iter().sum::<f64>(),
                poly.coeffs
                    .iter()
                    .enumerate()
                    .map(|(l, c)| l as f64 * c)
                    .sum(),
            ]
        };
        let b = &self.basis[p];
        FrameImage {
            p,
            e1: image(&b.e1),
            e2: b.e2.as_ref().map_or([0.0, 0.0], image),
        }
    }
}

/// Images `(coefficient of z^p, coefficient of z^(p-1))` of `e_p^(1)` and `e_p^(2)`
/// under `f -> (f, d/dz2 f)` restricted to the diagonal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameImage {
    pub p: usize,
    pub e1: [f64; 2],
    pub e2: [f64; 2],
}

pub fn jet_frame_image(params: &ModuleParams, p: usize) -> FrameImage {
    let (l, m, s) = (params.lambda, params.mu, params.s());
    let pi = p as i64;
    FrameImage {
        p,
        e1: [
            binom_neg(s, pi).sqrt(),
            m * (p as f64 / s).sqrt() * binom_neg(s + 1.0, pi - 1).sqrt(),
        ],
        e2: [0.0, (l * m / s).sqrt() * binom_neg(s + 2.0, pi - 1).sqrt()],
    }
}

fn check_disc(z: Complex64) -> Result<f64> {
    let x = z.norm_sqr();
    if !(x < 1.0) {
        return Err(Error::OutsideDisc(format!("{z}")));
    }
    Ok(x)
}

/// Sum over `p <= p_max` of `v v*` for the frame images evaluated at `z`.
pub fn frame_image_series(params: &ModuleParams, z: Complex64, p_max: usize) -> Result<CMatrix> {
    check_disc(z)?;
    let mut k = CMatrix::zeros(2, 2);
    for p in 0..=p_max {
        let img = jet_frame_image(params, p);
        let zp = z.powi(p as i32);
        let zp1 = if p == 0 {
            creal(0.0)
        } else {
            z.powi(p as i32 - 1)
        };
        for coeffs in [img.e1, img.e2] {
            let v = [zp * coeffs[0], zp1 * coeffs[1]];
            for i in 0..2 {
                for j in 0..2 {
                    k[(i, j)] += v[i] * v[j].conj();
                }
            }
        }
    }
    Ok(k)
}

/// Closed form of the restricted matrix kernel `K_Q(z, z)`.
pub fn quotient_kernel_restricted(params: &ModuleParams, z: Complex64) -> Result<CMatrix> {
    let x = check_disc(z)?;
    let (l, m, s) = (params.lambda, params.mu, params.s());
    let q = 1.0 - x;
    let k11 = q.powf(-s);
    let off = m * q.powf(-(s + 1.0));
    let d = q.powf(-(s + 1.0)) + (s + 1.0) * x * q.powf(-(s + 2.0));
    let k22 = m * m / s * d + m * l / s * q.powf(-(s + 2.0));
    Ok(CMatrix::from_row_slice(
        2,
        2,
        &[creal(k11), z * off, z.conj() * off, creal(k22)],
    ))
}

/// Index of `e_p^(c)` in the truncated quotient basis `e_0^(1), e_1^(1), e_1^(2), ...`.
fn slot(p: usize, c: usize) -> usize {
    if p == 0 {
        0
    } else {
        1 + 2 * (p - 1) + c
    }
}

/// Truncated `M1`, `M2` on degrees `0..=p_max`, assembled from the closed-form blocks.
pub fn truncated_shift_operators(params: &ModuleParams, p_max: usize) -> (CMatrix, CMatrix) {
    let n = 1 + 2 * p_max;
    let mut m1 = CMatrix::zeros(n, n);
    let mut m2 = CMatrix::zeros(n, n);
    for p in 0..p_max {
        let b = shift_blocks(params, p);
        let cols = if p == 0 { 1 } else { 2 };
        for c in 0..cols {
            for r in 0..2 {
                m1[(slot(p + 1, r), slot(p, c))] = creal(b.m1[(r, c)]);
                m2[(slot(p + 1, r), slot(p, c))] = creal(b.m2[(r, c)]);
            }
        }
    }
    (m1, m2)
}

/// `d1^n f(0) / n!` for `n <= max`, by repeated symbolic differentiation in `z1`.
fn taylor_at_zero(f: &Expr, max: usize, params: &ParameterBinding) -> Result<Vec<Complex64>> {
    if f.contains_slot(Slot::Wb) || f.max_index() > 1 {
        return Err(Error::InvalidParameters(
            "module action expects a holomorphic expression in z1 only".into(),
        ));
    }
    let origin = EvalPoint::diagonal(&[creal(0.0)]);
    let mut out = Vec::with_capacity(max + 1);
    let mut d = f.clone();
    let mut fact = 1.0;
    for n in 0..=max {
        if n > 0 {
            fact *= n as f64;
            d = partial(&d, Var::z(1));
        }
        if d.is_zero() {
            out.resize(max + 1, creal(0.0));
            break;
        }
        out.push(evaluate(&d, &origin, params)? / fact);
    }
    Ok(out)
}

fn apply_series(coeffs: &[Complex64], q: &CMatrix) -> CMatrix {
    let n = q.nrows();
    let mut acc = CMatrix::zeros(n, n);
    let mut power = CMatrix::identity(n, n);
    for c in coeffs {
        acc += &power * *c;
        power = &power * q;
    }
    acc
}

/// Action of `f = f0(u1) + f1(u1) u2 + ...` on the truncated quotient, as
/// `f0(Q2) + f1(Q2) Q1`. `f0` and `f1` are written in the variable `z1` (standing for `u1`).
pub fn quotient_module_action(
    f0: &Expr,
    f1: &Expr,
    params: &ModuleParams,
    p_max: usize,
    bindings: &ParameterBinding,
) -> Result<CMatrix> {
    let (m1, m2) = truncated_shift_operators(params, p_max);
    let q1 = (&m1 - &m2).scale(0.5);
    let q2 = (&m1 + &m2).scale(0.5);
    let a0 = taylor_at_zero(f0, p_max, bindings)?;
    let a1 = taylor_at_zero(f1, p_max, bindings)?;
    Ok(apply_series(&a0, &q2) + apply_series(&a1, &q2) * q1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionReport {
    pub p_max: usize,
    pub norm_m1: f64,
    pub norm_m2: f64,
}

impl ContractionReport {
    pub fn is_contraction(&self, slack: f64) -> bool {
        self.norm_m1 <= 1.0 + slack && self.norm_m2 <= 1.0 + slack
    }
}

/// Largest singular values of the truncated shift operators. Exploratory only.
pub fn contraction_report(params: &ModuleParams, p_max: usize) -> ContractionReport {
    let (m1, m2) = truncated_shift_operators(params, p_max + 1);
    ContractionReport {
        p_max,
        norm_m1: spectral_norm(&m1),
        norm_m2: spectral_norm(&m2),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationResiduals {
    /// `|sum_{a,b <= cap} c_a c_b (z1 wb1)^a (z2 wb2)^b - K(z, w)|`.
    pub series: f64,
    /// `|M_i* k_w - conj(w_i) k_w|` in the orthonormal monomial basis, `i = 1, 2`.
    pub eigen: [f64; 2],
}

pub fn truncated_kernel_check(
    params: &ModuleParams,
    cap: usize,
    z: [Complex64; 2],
    w: [Complex64; 2],
) -> Result<TruncationResiduals> {
    for v in z.iter().chain(&w) {
        check_disc(*v)?;
    }
    let cl: Vec<f64> = (0..=cap + 1)
        .map(|n| binom_neg(params.lambda, n as i64))
        .collect();
    let cm: Vec<f64> = (0..=cap + 1)
        .map(|n| binom_neg(params.mu, n as i64))
        .collect();
    let x1 = z[0] * w[0].conj();
    let x2 = z[1] * w[1].conj();
    let s1: Complex64 = (0..=cap).map(|a| x1.powi(a as i32) * cl[a]).sum();
    let s2: Complex64 = (0..=cap).map(|b| x2.powi(b as i32) * cm[b]).sum();
    let exact = evaluate(
        &params.kernel(),
        &EvalPoint::new(z.to_vec(), w.to_vec()),
        &ParameterBinding::new(),
    )?;
    let series = (s1 * s2 - exact).norm();

    // k_w has coordinates sqrt(c_a c_b) conj(w1)^a conj(w2)^b; M1* lowers a with
    // weight sqrt(c_a / c_{a+1}), and the top degree falls out of the truncation.
    let kw = |a: usize, b: usize| {
        w[0].conj().powi(a as i32) * w[1].conj().powi(b as i32) * (cl[a] * cm[b]).sqrt()
    };
    let mut eigen = [0.0f64; 2];
    for a in 0..=cap {
        for b in 0..=cap {
            let target1 = w[0].conj() * kw(a, b);
            let got1 = if a < cap {
                kw(a + 1, b) * (cl[a] / cl[a + 1]).sqrt()
            } else {
                creal(0.0)
            };
            let target2 = w[1].conj() * kw(a, b);
            let got2 = if b < cap {
                kw(a, b + 1) * (cm[b] / cm[b + 1]).sqrt()
            } else {
                creal(0.0)
            };
            eigen[0] += (got1 - target1).norm_sqr();
            eigen[1] += (got2 - target2).norm_sqr();
        }
    }
    Ok(TruncationResiduals {
        series,
        eigen: eigen.map(f64::sqrt),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p11() -> ModuleParams {
        ModuleParams::new(1.0, 1.0).unwrap()
    }

    #[test]
    fn binom_neg_values() {
        assert_eq!(binom_neg(1.0, 7), 1.0);
        assert_eq!(binom_neg(2.0, 3), 4.0);
        assert_eq!(binom_neg(3.0, -1), 0.0);
        assert_eq!(binom_neg(0.3, 0), 1.0);
    }

    #[test]
    fn gram_at_degree_one() {
        let g = gram_data(&p11(), 1);
        assert_eq!(
            (g.norm_g1_sq, g.inner_g1_g2, g.norm_g2_sq, g.norm_f2_sq),
            (2.0, 1.0, 1.0, 2.0)
        );
        assert_eq!(gram_data(&p11(), 0).norm_f2_sq, 0.0);
        assert_eq!(gram_determinant_closed_form(&p11(), 1), 1.0);
    }

    #[test]
    fn anchors() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let b0 = shift_blocks(&p11(), 0);
        assert!((b0.alpha() - h).abs() < 1e-15 && (b0.beta1() - h).abs() < 1e-15);
        assert!((shift_blocks(&p11(), 1).eta() - 0.5).abs() < 1e-15);
        let bf = brute_force_quotient(&p11(), 2).unwrap();
        assert!(bf.blocks[0].distance(&b0) < 1e-14);
        let e2 = bf.basis[1].e2.as_ref().unwrap();
        assert!((e2.coeffs[0] - h).abs() < 1e-15 && (e2.coeffs[1] + h).abs() < 1e-15);
    }

    #[test]
    fn overflow_is_reported() {
        assert!(matches!(
            brute_force_quotient(&p11(), 61),
            Err(Error::DegreeOverflow { .. })
        ));
    }

    #[test]
    fn kernel_at_origin() {
        let p = ModuleParams::new(0.7, 2.5).unwrap();
        let k = quotient_kernel_restricted(&p, creal(0.0)).unwrap();
        assert!((k[(1, 1)].re - 2.5).abs() < 1e-14 && k[(0, 0)] == creal(1.0));
        assert!(quotient_kernel_restricted(&p, creal(1.0)).is_err());
    }

    #[test]
    fn truncated_operator_shape() {
        let (m1, _) = truncated_shift_operators(&p11(), 3);
        assert_eq!(m1.shape(), (7, 7));
        assert_eq!(truncated_shift_operators(&p11(), 0).0.shape(), (1, 1));
    }

    #[test]
    fn csv_header() {
        let csv = shift_table_csv(&p11(), 3);
        assert!(csv.starts_with("p,alpha_p,beta_p1,eta_p,beta_p2\n0,7.0710678118654"));
        assert_eq!(csv.lines().count(), 5);
    }
}
