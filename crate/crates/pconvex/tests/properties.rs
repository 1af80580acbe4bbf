//! Property tests for the algebraic invariants of the restricted-trace
//! machinery and the profile functions.

use proptest::prelude::*;

use pconvex::field::ExprField;
use pconvex::field::ScalarField;
use pconvex::levi::{levi_form, ComplexStructure};
use pconvex::linalg::{
    dot, eigh, min_trace_p, norm, orthonormalize, random_frame, sub, trace_on_plane, Frame,
    SymMatrix,
};
use pconvex::synthesis::phi_func;

fn sym_matrix(n: usize) -> impl Strategy<Value = SymMatrix> {
    prop::collection::vec(-5.0..5.0f64, n * n)
        .prop_map(move |entries| SymMatrix::new(n, entries).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn symmetrization_is_exact(entries in prop::collection::vec(-5.0..5.0f64, 16)) {
        let q = SymMatrix::new(4, entries).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                prop_assert_eq!(q.get(i, j), q.get(j, i));
            }
        }
    }

    #[test]
    fn restricted_trace_dominates_eigenvalue_sum(
        q in sym_matrix(5),
        p in 1usize..5,
        seed in 0u64..1000,
    ) {
        let frame = random_frame(5, p, seed).unwrap();
        let t = trace_on_plane(&q, &frame).unwrap();
        let m = min_trace_p(&q, p).unwrap();
        prop_assert!(t >= m - 1e-10, "trace {} below min {}", t, m);
        // The bottom eigenframe attains the bound.
        let eigframe = eigh(&q).unwrap().bottom_frame(p).unwrap();
        let attained = trace_on_plane(&q, &eigframe).unwrap();
        prop_assert!((attained - m).abs() <= 1e-10);
    }

    #[test]
    fn eigh_reconstructs_and_is_orthonormal(q in sym_matrix(7)) {
        let spec = eigh(&q).unwrap();
        let mut resid2 = 0.0;
        for (lam, v) in spec.eigenvalues.iter().zip(&spec.eigenvectors) {
            let r = sub(&q.mul_vec(v), &v.iter().map(|x| lam * x).collect::<Vec<_>>());
            resid2 += dot(&r, &r);
        }
        prop_assert!(resid2.sqrt() <= 1e-10 * q.frobenius_norm().max(1.0));
        for (i, vi) in spec.eigenvectors.iter().enumerate() {
            prop_assert!((norm(vi) - 1.0).abs() <= 1e-10);
            for vj in spec.eigenvectors.iter().skip(i + 1) {
                prop_assert!(dot(vi, vj).abs() <= 1e-10);
            }
        }
        // Ascending order.
        for w in spec.eigenvalues.windows(2) {
            prop_assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn full_plane_trace_is_matrix_trace(q in sym_matrix(6)) {
        let m = min_trace_p(&q, 6).unwrap();
        prop_assert!((m - q.trace()).abs() <= 1e-12);
    }

    #[test]
    fn orthonormalize_spans_same_plane(
        coeffs in prop::collection::vec(-2.0..2.0f64, 4),
        seed in 0u64..1000,
    ) {
        // Mixing a frame by an invertible 2×2 keeps the plane projector.
        let (a, b, c, d) = (coeffs[0], coeffs[1], coeffs[2], coeffs[3]);
        prop_assume!((a * d - b * c).abs() > 0.1);
        let f = random_frame(4, 2, seed).unwrap();
        let v = &f.vectors()[0];
        let w = &f.vectors()[1];
        let mixed = vec![
            v.iter().zip(w).map(|(x, y)| a * x + b * y).collect::<Vec<_>>(),
            v.iter().zip(w).map(|(x, y)| c * x + d * y).collect::<Vec<_>>(),
        ];
        let g = orthonormalize(&mixed).unwrap();
        let diff = f.projector().add_scaled(-1.0, &g.projector());
        prop_assert!(diff.frobenius_norm() <= 1e-10);
    }

    #[test]
    fn zero_mean_curvature_forces_nonpositive_gauss(
        a in -3.0..3.0f64,
        b in -3.0..3.0f64,
    ) {
        // Restricted 2×2 form with trace 0: K = det = −a² − b² ≤ 0.
        let q = SymMatrix::new(2, vec![a, b, b, -a]).unwrap();
        let h = q.trace();
        let k = q.get(0, 0) * q.get(1, 1) - q.get(0, 1) * q.get(1, 0);
        prop_assert!(h.abs() <= 1e-15);
        prop_assert!(k <= 1e-10);
    }

    #[test]
    fn levi_form_is_plane_trace(
        entries in prop::collection::vec(-3.0..3.0f64, 16),
        dir in prop::collection::vec(-1.0..1.0f64, 4),
    ) {
        prop_assume!(norm(&dir) > 0.1);
        // Quadratic field ½ xᵀQx with exactly the given Hessian.
        let q = SymMatrix::new(4, entries).unwrap();
        struct Quad(SymMatrix);
        impl ScalarField for Quad {
            fn dim(&self) -> usize { 4 }
            fn value(&self, x: &[f64]) -> pconvex::Result<f64> { Ok(0.5 * self.0.quad_form(x)) }
            fn hessian(&self, _x: &[f64]) -> pconvex::Result<SymMatrix> { Ok(self.0.clone()) }
        }
        let exact = Quad(q.clone());
        let l = levi_form(&exact, &[0.0; 4], &dir).unwrap();
        let j = ComplexStructure::new(4).unwrap();
        let v: Vec<f64> = { let n = norm(&dir); dir.iter().map(|x| x / n).collect() };
        let frame = Frame::new(vec![v.clone(), j.apply(&v)]).unwrap();
        let t = trace_on_plane(&q, &frame).unwrap();
        prop_assert!((l - t).abs() <= 1e-10);
    }

    #[test]
    fn phi_clamps_hold_for_all_depths(c in -2.0..-0.01f64) {
        let phi = phi_func(c).unwrap();
        prop_assert!((phi.value(c) - 2.0 * c / 3.0).abs() <= 1e-14);
        prop_assert!((phi.value(0.5 * c) - 0.5 * c).abs() <= 1e-14);
        prop_assert!(phi.value(0.0).abs() <= 1e-14);
        for i in 0..200 {
            let t = 2.0 * c + (1.0 - 2.0 * c) * i as f64 / 199.0;
            prop_assert!(phi.d2(t) >= -1e-10);
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&phi.d1(t)));
        }
    }

    #[test]
    fn parsed_quadratics_evaluate_exactly(
        a in -4.0..4.0f64,
        b in -4.0..4.0f64,
        x in -2.0..2.0f64,
        y in -2.0..2.0f64,
    ) {
        let src = format!("{a} * x^2 + {b} * x * y - y^2");
        let f = ExprField::parse(&src, 2).unwrap();
        let want = a * x * x + b * x * y - y * y;
        let got = f.value(&[x, y]).unwrap();
        prop_assert!((got - want).abs() <= 1e-10 * (1.0 + want.abs()));
        let g = f.gradient(&[x, y]).unwrap();
        prop_assert!((g[0] - (2.0 * a * x + b * y)).abs() <= 1e-10 * (1.0 + g[0].abs()));
        prop_assert!((g[1] - (b * x - 2.0 * y)).abs() <= 1e-10 * (1.0 + g[1].abs()));
    }
}
