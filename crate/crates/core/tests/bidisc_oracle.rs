use jetq_core::bidisc::{
    brute_force_quotient, contraction_report, frame_image_series, gram_data,
    gram_determinant_closed_form, homog_bundle_metric, homog_curvature_restriction,
    jet_frame_image, mobius_pullback_curvature, quotient_kernel_restricted, quotient_module_action,
    recover_homog_abc, shift_blocks, truncated_kernel_check, truncated_shift_operators,
    HomogBundleParams, Mobius, ModuleParams,
};
use jetq_core::calc::EvalPoint;
use jetq_core::dsl::{mul, AffineMap, Expr, ParameterBinding};
use jetq_core::jet::{curvature_matrix, jet_kernel};
use jetq_core::linalg::{creal, hermitian_defect, is_psd, max_abs, max_abs_diff, CMatrix};
use jetq_core::Complex64;
use proptest::prelude::*;

fn params(l: f64, m: f64) -> ModuleParams {
    ModuleParams::new(l, m).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

fn disc_point(r: f64) -> impl Strategy<Value = Complex64> {
    (0.0..r, 0.0..std::f64::consts::TAU).prop_map(|(rho, t)| Complex64::from_polar(rho, t))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gram_determinant_identity(l in 0.1..5.0f64, m in 0.1..5.0f64, p in 0..40usize) {
        let q = params(l, m);
        prop_assert!(rel(gram_data(&q, p).determinant(), gram_determinant_closed_form(&q, p)) < 1e-10);
    }

    #[test]
    fn oracle_reproduces_closed_forms(l in 0.2..4.0f64, m in 0.2..4.0f64) {
        let q = params(l, m);
        let oracle = brute_force_quotient(&q, 8).unwrap();
        for (b, basis) in oracle.blocks.iter().zip(&oracle.basis) {
            prop_assert!(b.distance(&shift_blocks(&q, b.p)) < 1e-8, "p = {}", b.p);
            let (o, c) = (basis.gram, gram_data(&q, basis.p));
            prop_assert!(rel(o.norm_g1_sq, c.norm_g1_sq) < 1e-10);
            prop_assert!(rel(o.inner_g1_g2, c.inner_g1_g2) < 1e-10);
            prop_assert!(rel(o.norm_g2_sq, c.norm_g2_sq) < 1e-10);
            prop_assert!(rel(o.norm_f2_sq, c.norm_f2_sq) < 1e-10);
        }
    }

    #[test]
    fn oracle_frame_images_match_up_to_sign(l in 0.2..4.0f64, m in 0.2..4.0f64, p in 0..8usize) {
        let q = params(l, m);
        let oracle = brute_force_quotient(&q, 8).unwrap().frame_image(p);
        let closed = jet_frame_image(&q, p);
        for (a, b) in [(oracle.e1, closed.e1), (oracle.e2, closed.e2)] {
            for i in 0..2 {
                prop_assert!((a[i].abs() - b[i].abs()).abs() < 1e-10 * (1.0 + b[i].abs()));
            }
        }
        prop_assert!((oracle.e1[0] - closed.e1[0]).abs() < 1e-10 * closed.e1[0]);
    }

    #[test]
    fn restricted_kernel_triangle(l in 0.3..3.0f64, m in 0.3..3.0f64, z in disc_point(0.5)) {
        let q = params(l, m);
        let closed = quotient_kernel_restricted(&q, z).unwrap();
        let kernel = AffineMap::diagonal_normal_first().apply(&q.kernel());
        let jet = jet_kernel(&kernel, 2, &EvalPoint::diagonal(&[creal(0.0), z]), &ParameterBinding::new()).unwrap();
        let scale = max_abs(&closed);
        prop_assert!(max_abs_diff(&closed, &jet.matrix) < 1e-10 * scale);
        prop_assert!(max_abs_diff(&closed, &frame_image_series(&q, z, 300).unwrap()) < 1e-6);
        prop_assert!(hermitian_defect(&closed) == 0.0 && is_psd(&closed, 0.0));
    }

    #[test]
    fn curvature_is_mobius_invariant(l in 0.3..3.0f64, m in 0.3..3.0f64, a1 in disc_point(0.7), a2 in disc_point(0.7), t1 in 0.0..6.3f64, t2 in 0.0..6.3f64, z1 in disc_point(0.6), z2 in disc_point(0.6)) {
        let kernel = params(l, m).kernel();
        let none = ParameterBinding::new();
        let field = |z: &[Complex64]| curvature_matrix(&kernel, z, &none);
        let maps = [Mobius::new(a1, t1).unwrap(), Mobius::new(a2, t2).unwrap()];
        let z = [z1, z2];
        let pulled = mobius_pullback_curvature(field, &maps, &z).unwrap();
        prop_assert!(max_abs_diff(&pulled, &field(&z).unwrap()) < 1e-9);
    }

    #[test]
    fn homogeneous_curvature_closed_form(alpha in 0.3..3.0f64, delta in 0.3..3.0f64, s in -0.95..0.95f64, u1 in disc_point(0.6)) {
        let p = HomogBundleParams::new(alpha, delta, s * (alpha * delta).sqrt()).unwrap();
        let kernel = AffineMap::u_coordinates().apply(&homog_bundle_metric(&p));
        let symbolic = curvature_matrix(&kernel, &[u1, creal(0.0)], &ParameterBinding::new()).unwrap();
        prop_assert!(max_abs_diff(&symbolic, &homog_curvature_restriction(&p, u1).unwrap()) < 1e-9);
        let (a, b, c) = p.abc();
        let (ra, rb, rc) = recover_homog_abc(a, b, c, u1).unwrap();
        prop_assert!((ra - a).abs().max((rb - b).abs()).max((rc - c).abs()) < 1e-9);
    }
}

#[test]
fn q1_squares_to_zero_and_q2_is_diagonal_for_equal_weights() {
    for (l, m) in [(1.0, 1.0), (2.5, 2.5), (1.0, 2.0)] {
        let (m1, m2) = truncated_shift_operators(&params(l, m), 12);
        let q1 = (&m1 - &m2).scale(0.5);
        assert_eq!(max_abs(&(&q1 * &q1)), 0.0);
        for p in 1..12 {
            let b = shift_blocks(&params(l, m), p).q2();
            let off = b[(1, 0)].abs();
            if l == m {
                assert!(off < 1e-15, "({l}, {m}) p = {p}: {off}");
            } else {
                assert!(off > 1e-3);
            }
        }
    }
}

#[test]
fn module_action_of_coordinates() {
    let q = params(1.0, 2.0);
    let none = ParameterBinding::new();
    let n = 10;
    let (m1, m2) = truncated_shift_operators(&q, n);
    let q1 = (&m1 - &m2).scale(0.5);
    let q2 = (&m1 + &m2).scale(0.5);
    let zero = Expr::real(0.0);
    let one = Expr::real(1.0);
    let u1 = Expr::z(1);

    let act = |f0: &Expr, f1: &Expr| quotient_module_action(f0, f1, &q, n, &none).unwrap();
    assert!(max_abs_diff(&act(&u1, &zero), &q2) < 1e-15);
    assert!(max_abs_diff(&act(&zero, &one), &q1) < 1e-15);
    // z1 = u1 + u2
    assert!(max_abs_diff(&act(&u1, &one), &m1) < 1e-15);

    // z1 z2 = u1^2 - u2^2, and u2^2 acts as zero on the quotient
    let z1z2 = act(&mul(u1.clone(), u1), &zero);
    let product = &m1 * &m2;
    let dim = 1 + 2 * (n - 2);
    let lhs = z1z2.columns(0, dim).into_owned();
    let rhs = product.columns(0, dim).into_owned();
    assert!(max_abs_diff(&lhs, &rhs) < 1e-12);
}

#[test]
fn truncated_hardy_kernel() {
    let q = params(1.0, 1.0);
    let zero = [creal(0.0); 2];
    assert_eq!(
        truncated_kernel_check(&q, 10, zero, zero).unwrap().series,
        0.0
    );
    let half = [creal(0.5); 2];
    assert!(truncated_kernel_check(&q, 60, half, half).unwrap().series < 1e-7);
    let w = [creal(0.4), creal(0.2)];
    let r = truncated_kernel_check(&q, 80, half, w).unwrap();
    assert!(r.eigen.iter().all(|&e| e < 1e-6), "{:?}", r.eigen);
}

#[test]
fn contraction_report_is_finite() {
    for (l, m) in [(1.0, 1.0), (1.0, 2.0), (0.5, 3.0), (3.0, 3.0)] {
        let r = contraction_report(&params(l, m), 20);
        println!(
            "({l}, {m}) p_max 20: |M1| = {:.6}, |M2| = {:.6}",
            r.norm_m1, r.norm_m2
        );
        assert!(r.norm_m1.is_finite() && r.norm_m2.is_finite());
    }
}

#[test]
fn homogeneous_bundle_without_cross_term_is_the_bidisc() {
    let p = HomogBundleParams::new(1.5, 0.5, 0.0).unwrap();
    let want = CMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0].map(creal));
    let got = homog_curvature_restriction(&p, creal(0.0)).unwrap();
    assert_eq!(got, want);
    let kernel = AffineMap::u_coordinates().apply(&params(1.5, 0.5).kernel());
    let u1 = Complex64::new(0.3, -0.2);
    let direct = curvature_matrix(&kernel, &[u1, creal(0.0)], &ParameterBinding::new()).unwrap();
    assert!(max_abs_diff(&direct, &homog_curvature_restriction(&p, u1).unwrap()) < 1e-12);
}
