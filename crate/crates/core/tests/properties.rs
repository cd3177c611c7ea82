mod common;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use symred::action::{check_field_invariance, check_isometry, check_symplectomorphism, generator, generator_along, GroupActionSpec};
use symred::geom::{
    fd_jacobian, inner, kernel_basis, orthonormalize, sqrt_inverse_spd, ChartPoint, FdConfig,
    TensorFieldSpec,
};
use symred::holomorphy::{almost_complex_residual, cauchy_riemann_residual, ChartedMap};
use symred::reduction::{reduced_metric, reduced_structures_at};
use symred::scenarios::{hopf, parse_expr, BinOp, Expr, Func};
use symred::structures::{
    build_compatible_triple, check_closed, check_compatibility, compatible_structure_at, CompatibleTriple,
};

fn matrix(rows: usize, cols: usize, range: f64) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-range..range, rows * cols).prop_map(move |v| DMatrix::from_vec(rows, cols, v))
}

fn point(n: usize) -> impl Strategy<Value = ChartPoint> {
    prop::collection::vec(-1.0..1.0f64, n).prop_map(|v| ChartPoint::new(v).unwrap())
}

fn pair(n: usize) -> impl Strategy<Value = (DMatrix<f64>, DMatrix<f64>)> {
    any::<u64>().prop_map(move |seed| common::random_pair(&mut ChaCha8Rng::seed_from_u64(seed), n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fd_jacobian_is_exact_on_affine_maps(
        (a, b, p) in (1usize..5, 1usize..5).prop_flat_map(|(r, c)| (matrix(r, c, 1.0), matrix(r, 1, 1.0), point(c))),
        step in 1e-6..1e-3f64,
        order in prop::sample::select(vec![2u8, 4]),
    ) {
        let cfg = FdConfig::new(step, order).unwrap();
        let map = |x: &[f64]| (&a * DVector::from_column_slice(x) + &b).as_slice().to_vec();
        let d = fd_jacobian(map, &p, &cfg).unwrap();
        prop_assert!(common::max_abs(&(d - &a)) < 1e-10);
    }

    #[test]
    fn kernel_vectors_are_null_and_orthonormal(m in (1usize..4, 2usize..6).prop_flat_map(|(r, c)| matrix(r, c, 2.0))) {
        let tol = 1e-10;
        let basis = kernel_basis(&m, tol).unwrap();
        prop_assert!(basis.len() >= m.ncols().saturating_sub(m.nrows()));
        for (i, v) in basis.iter().enumerate() {
            prop_assert!((&m * v).norm() < 10.0 * tol * m.norm().max(1.0));
            for (j, u) in basis.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                prop_assert!((u.dot(v) - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn orthonormalize_is_idempotent(
        (vs, g) in (2usize..6).prop_flat_map(|n| (prop::collection::vec(matrix(n, 1, 1.0), 1..n), matrix(n, n, 1.0)))
    ) {
        let n = g.nrows();
        let g = &g * g.transpose() + DMatrix::identity(n, n);
        let vs: Vec<DVector<f64>> = vs.into_iter().map(|m| m.column(0).into_owned()).collect();
        let once = orthonormalize(&vs, &g, 1e-9);
        let twice = orthonormalize(&once, &g, 1e-9);
        prop_assert_eq!(once.len(), twice.len());
        for (a, b) in once.iter().zip(&twice) {
            prop_assert!((a - b).amax() < 1e-12);
        }
        for (i, a) in once.iter().enumerate() {
            for (j, b) in once.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                prop_assert!((inner(a, &g, b) - expected).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn inverse_square_root_commutes(m in (1usize..7).prop_flat_map(|n| matrix(n, n, 1.0))) {
        let n = m.nrows();
        let spd = &m * m.transpose() + DMatrix::identity(n, n) * 0.1;
        let s = sqrt_inverse_spd(&spd).unwrap();
        prop_assert!((&s * &spd - &spd * &s).norm() < 1e-10);
        prop_assert!((&s * &spd * &s - DMatrix::identity(n, n)).norm() < 1e-9);
    }

    #[test]
    fn compatible_structure_properties((w, g0) in (1usize..5).prop_flat_map(|k| pair(2 * k))) {
        let n = w.nrows();
        let c = compatible_structure_at(&w, &g0).unwrap();
        prop_assert!((&c.j * &c.j + DMatrix::identity(n, n)).norm() < 1e-9);
        prop_assert!(common::max_abs(&(&w * &c.j - &c.g)) < 1e-9);
        prop_assert!(c.g.clone().cholesky().is_some());
        // feeding g back in reproduces J
        let again = compatible_structure_at(&w, &c.g).unwrap();
        prop_assert!(common::max_abs(&(&again.j - &c.j)) < 1e-9);
        prop_assert!(common::max_abs(&(&c.j - common::polar_oracle(&w, &g0))) < 1e-8);
    }

    #[test]
    fn compatibility_is_scale_invariant((w, g0) in pair(4), scale in 0.01..100.0f64, p in point(4)) {
        let c = compatible_structure_at(&w, &g0).unwrap();
        let triple = |s: f64| CompatibleTriple {
            omega: TensorFieldSpec::constant(4, &w * s),
            metric: TensorFieldSpec::constant(4, &c.g * s),
            acs: TensorFieldSpec::constant(4, c.j.clone()),
        };
        let base = check_compatibility(&triple(1.0), std::slice::from_ref(&p), 1e-9).unwrap();
        let scaled = check_compatibility(&triple(scale), std::slice::from_ref(&p), 1e-9 * scale).unwrap();
        prop_assert!(base.passed && scaled.passed);
    }

    #[test]
    fn constant_forms_are_closed((w, _) in (1usize..4).prop_flat_map(|k| pair(2 * k)), seed in any::<u64>()) {
        let n = w.nrows();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<ChartPoint> = (0..3)
            .map(|_| ChartPoint::new((0..n).map(|_| rand::Rng::random_range(&mut rng, -2.0..2.0)).collect()).unwrap())
            .collect();
        let r = check_closed(&TensorFieldSpec::constant(n, w), &pts, &FdConfig::default(), 1e-9).unwrap();
        prop_assert!(r.passed, "{}", r.max_residual);
    }

    #[test]
    fn torus_generators_are_linear(xi in prop::collection::vec(-2.0..2.0f64, 2), p in point(4)) {
        let cfg = FdConfig::default();
        let torus = GroupActionSpec::new(2, 4, |t, p| {
            let mut q = p.to_vec();
            for k in 0..2 {
                let (s, c) = t[k].sin_cos();
                q[2 * k] = c * p[2 * k] - s * p[2 * k + 1];
                q[2 * k + 1] = s * p[2 * k] + c * p[2 * k + 1];
            }
            q
        });
        let combined = generator_along(&torus, &xi, &p, &cfg).unwrap().components;
        let parts = generator(&torus, 0, &p, &cfg).unwrap().components * xi[0]
            + generator(&torus, 1, &p, &cfg).unwrap().components * xi[1];
        prop_assert!((combined - parts).amax() < 1e-8);
    }

    #[test]
    fn invariant_inputs_give_invariant_structure(d in prop::collection::vec(0.5..3.0f64, 2), theta in 0.0..6.3f64, p in point(4)) {
        let cfg = FdConfig::default();
        let action = GroupActionSpec::unitary_circle(2, 16);
        let g0 = DMatrix::from_diagonal(&DVector::from_vec(vec![d[0], d[0], d[1], d[1]]));
        let omega = TensorFieldSpec::constant(4, common::omega_std(4));
        let triple = build_compatible_triple(&omega, &TensorFieldSpec::constant(4, g0), std::slice::from_ref(&p)).unwrap();
        let params = vec![vec![theta]];
        let pts = std::slice::from_ref(&p);
        prop_assert!(check_isometry(&action, &triple.metric, &params, pts, &cfg, 1e-6).unwrap().passed);
        prop_assert!(check_symplectomorphism(&action, &triple.omega, &params, pts, &cfg, 1e-6).unwrap().passed);
        prop_assert!(check_field_invariance(&triple.acs, &action, &params, pts, &cfg, 1e-6).unwrap().passed);
    }

    #[test]
    fn cauchy_riemann_matches_almost_complex(
        coeffs in prop::collection::vec(-1.0..1.0f64, 6),
        conj in any::<bool>(),
        p in point(2),
    ) {
        // a + b z + c z^2, optionally composed with conjugation
        let poly = move |x: &[f64]| {
            let (u, v) = (x[0], if conj { -x[1] } else { x[1] });
            let (re2, im2) = (u * u - v * v, 2.0 * u * v);
            vec![
                coeffs[0] + coeffs[2] * u - coeffs[3] * v + coeffs[4] * re2 - coeffs[5] * im2,
                coeffs[1] + coeffs[2] * v + coeffs[3] * u + coeffs[4] * im2 + coeffs[5] * re2,
            ]
        };
        let cfg = FdConfig::default();
        let map = ChartedMap::standard(2, 2, poly).unwrap();
        let cr = cauchy_riemann_residual(&map, &p, &cfg).unwrap();
        let ac = almost_complex_residual(&map, &p, &cfg).unwrap();
        let tol = 1e-8;
        prop_assert_eq!(cr <= tol, ac <= 2.0 * 2f64.sqrt() * tol);
        prop_assert!(ac <= 2.0 * 2f64.sqrt() * cr + 1e-12);
    }

    #[test]
    fn hopf_reduced_metric_is_fiber_independent(w in prop::collection::vec(-1.4..1.4f64, 2), theta in 0.0..6.3f64) {
        let cfg = FdConfig::default();
        let s = hopf();
        let x = ChartPoint::new(w).unwrap();
        let h0 = reduced_metric(&s, &x, &cfg).unwrap();
        let moved = reduced_structures_at(&s, &x, &[theta], &cfg).unwrap();
        prop_assert!(common::max_abs(&(&moved.h_beta - &h0)) < 1e-5);
        prop_assert!(h0.clone().cholesky().is_some());
    }
}

fn expr_strategy() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0u32..1000, 0u32..4).prop_map(|(m, e)| Expr::Num(m as f64 / 10f64.powi(e as i32))),
        prop::sample::select(vec!["x1", "x2", "t1", "w3", "pi"]).prop_map(|s| Expr::Var(s.to_string())),
    ];
    leaf.prop_recursive(6, 48, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (prop::sample::select(Func::ALL.to_vec()), inner.clone()).prop_map(|(f, e)| Expr::Call(f, Box::new(e))),
            (
                prop::sample::select(vec![BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Pow]),
                inner.clone(),
                inner
            )
                .prop_map(|(op, l, r)| Expr::bin(op, l, r)),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn print_parse_round_trip(e in expr_strategy()) {
        let printed = e.to_string();
        let back = parse_expr(&printed).unwrap();
        prop_assert_eq!(back, e);
    }

    #[test]
    fn parser_never_panics(bytes in prop::collection::vec(any::<u8>(), 0..64)) {
        let text = String::from_utf8_lossy(&bytes);
        let _ = parse_expr(&text);
        let _ = symred::scenarios::parse_scenario(&text);
    }
}
