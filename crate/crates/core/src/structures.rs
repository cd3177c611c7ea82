//! Sample-based validation of metrics, symplectic forms and almost complex
//! structures, and the polar-decomposition construction of compatible
//! triples.
//!
//! Conventions: `omega(u, v) = u^T W v`, `g(u, v) = u^T G v`, and `J` acts on
//! component vectors. Compatibility `omega(u, J v) = g(u, v)` is then the
//! matrix identity `W J = G`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geom::{
    eval_field, fd_directional, max_abs, min_symmetric_eigenvalue, sqrt_inverse_spd, sqrt_spd, ChartPoint,
    FdConfig, TangentVector, TensorFieldSpec,
};
use crate::report::{ResidualTracker, StructureCheckResult};

/// Default tolerance for algebraic identities.
pub const ALGEBRAIC_TOL: f64 = 1e-8;
/// Default tolerance for identities that go through finite differences.
pub const FD_IDENTITY_TOL: f64 = 1e-5;

/// A symplectic form, a metric and an almost complex structure that are
/// meant to satisfy `W J = G`.
#[derive(Debug, Clone)]
pub struct CompatibleTriple {
    pub omega: TensorFieldSpec,
    pub metric: TensorFieldSpec,
    pub acs: TensorFieldSpec,
}

fn square_at(field: &TensorFieldSpec, p: &ChartPoint, what: &str) -> Result<DMatrix<f64>> {
    let m = eval_field(field, p)?;
    if !m.is_square() || m.nrows() != p.dim() {
        return Err(Error::DimensionMismatch {
            context: what.to_string(),
            expected: p.dim(),
            found: m.nrows(),
        });
    }
    Ok(m)
}

/// Penalty that pushes a residual above `tol` whenever `margin <= tol`.
fn positivity_penalty(margin: f64, tol: f64) -> f64 {
    if margin > tol {
        0.0
    } else {
        tol + (tol - margin)
    }
}

/// Symmetric and positive definite (smallest eigenvalue above `tol`).
pub fn check_metric(g: &TensorFieldSpec, points: &[ChartPoint], tol: f64) -> Result<StructureCheckResult> {
    let mut t = ResidualTracker::new("metric symmetric positive definite", tol);
    for p in points {
        let m = square_at(g, p, "metric")?;
        let asym = max_abs(&(&m - m.transpose()));
        let lmin = min_symmetric_eigenvalue(&m);
        t.record(asym + positivity_penalty(lmin, tol), p);
    }
    Ok(t.finish())
}

/// Antisymmetric with `|det W| > tol`.
pub fn check_symplectic_pointwise(
    w: &TensorFieldSpec,
    points: &[ChartPoint],
    tol: f64,
) -> Result<StructureCheckResult> {
    if w.chart_dim() % 2 == 1 {
        return Err(Error::OddDimension(w.chart_dim()));
    }
    let mut t = ResidualTracker::new("symplectic form antisymmetric nondegenerate", tol);
    for p in points {
        let m = square_at(w, p, "symplectic form")?;
        let asym = max_abs(&(&m + m.transpose()));
        let det = m.determinant().abs();
        t.record(asym + positivity_penalty(det, tol), p);
    }
    Ok(t.finish())
}

/// `d omega = 0`: the cyclic sum `d_i W_jk + d_j W_ki + d_k W_ij` over all
/// triples of distinct indices.
pub fn check_closed(
    w: &TensorFieldSpec,
    points: &[ChartPoint],
    cfg: &FdConfig,
    tol: f64,
) -> Result<StructureCheckResult> {
    let mut t = ResidualTracker::new("symplectic form closed", tol);
    for p in points {
        let n = p.dim();
        let partials = (0..n)
            .map(|i| fd_directional(w, p, &TangentVector::basis(p.clone(), i), cfg))
            .collect::<Result<Vec<_>>>()?;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    let s = partials[i][(j, k)] + partials[j][(k, i)] + partials[k][(i, j)];
                    worst = worst.max(s.abs());
                }
            }
        }
        t.record(worst, p);
    }
    Ok(t.finish())
}

/// `J^2 = -I`, Frobenius norm.
pub fn check_acs(j: &TensorFieldSpec, points: &[ChartPoint], tol: f64) -> Result<StructureCheckResult> {
    let mut t = ResidualTracker::new("almost complex structure J^2 = -I", tol);
    for p in points {
        let m = square_at(j, p, "almost complex structure")?;
        let n = m.nrows();
        t.record((&m * &m + DMatrix::identity(n, n)).norm(), p);
    }
    Ok(t.finish())
}

/// `omega(u, J v) = g(u, v)`, i.e. `max |W J - G|`.
pub fn check_compatibility(
    triple: &CompatibleTriple,
    points: &[ChartPoint],
    tol: f64,
) -> Result<StructureCheckResult> {
    let mut t = ResidualTracker::new("compatibility omega(u, Jv) = g(u, v)", tol);
    for p in points {
        let (w, g, j) = triple_at(triple, p)?;
        t.record(max_abs(&(&w * &j - &g)), p);
    }
    Ok(t.finish())
}

/// The second form of compatibility, `omega(u, v) = g(J u, v)`, i.e.
/// `max |J^T G - W|`. Equivalent to [`check_compatibility`] whenever `G` is
/// symmetric and `J^2 = -I`.
pub fn check_compatibility_alt(
    triple: &CompatibleTriple,
    points: &[ChartPoint],
    tol: f64,
) -> Result<StructureCheckResult> {
    let mut t = ResidualTracker::new("compatibility omega(u, v) = g(Ju, v)", tol);
    for p in points {
        let (w, g, j) = triple_at(triple, p)?;
        t.record(max_abs(&(j.transpose() * &g - &w)), p);
    }
    Ok(t.finish())
}

fn triple_at(triple: &CompatibleTriple, p: &ChartPoint) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
    Ok((
        square_at(&triple.omega, p, "symplectic form")?,
        square_at(&triple.metric, p, "metric")?,
        square_at(&triple.acs, p, "almost complex structure")?,
    ))
}

/// Pointwise pieces of the compatible-triple construction.
#[derive(Debug, Clone, PartialEq)]
pub struct CompatiblePointwise {
    /// `omega(X, Y) = g0(A X, Y)`.
    pub a: DMatrix<f64>,
    pub j: DMatrix<f64>,
    /// `g(u, v) = omega(u, J v)`.
    pub g: DMatrix<f64>,
}

/// Endomorphism `A` with `omega(X, Y) = g0(A X, Y)`, i.e. `A = -G0^{-1} W`.
pub fn endomorphism_from_forms(omega: &DMatrix<f64>, g0: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let lu = g0.clone().lu();
    let inv_w = lu
        .solve(omega)
        .ok_or(Error::NotSpd { min_eigenvalue: 0.0 })?;
    Ok(-inv_w)
}

/// `J = P^{-1} A` with `P = sqrt(-A^2)` taken in the `g0` inner product.
///
/// Works in `g0`-orthonormal coordinates: with `R = g0^{1/2}`, `B = R A R^{-1}`
/// is skew-symmetric, its orthogonal polar factor is `B (-B^2)^{-1/2}`, and
/// conjugating back gives `J`.
pub fn compatible_structure_at(omega: &DMatrix<f64>, g0: &DMatrix<f64>) -> Result<CompatiblePointwise> {
    let a = endomorphism_from_forms(omega, g0)?;
    let r = sqrt_spd(g0)?;
    let r_inv = sqrt_inverse_spd(g0)?;
    let b = &r * &a * &r_inv;
    let b = (&b - b.transpose()) * 0.5;
    let minus_b2 = -(&b * &b);
    let polar = &b * sqrt_inverse_spd(&minus_b2)?;
    let j = &r_inv * polar * &r;
    let g = omega * &j;
    Ok(CompatiblePointwise { a, j, g })
}

/// Build `(omega, g, J)` from a symplectic form and any metric `g0`.
///
/// The construction is validated at `probe` points so degenerate input
/// surfaces as [`Error::NotSpd`] here rather than as NaN later.
pub fn build_compatible_triple(
    w: &TensorFieldSpec,
    g0: &TensorFieldSpec,
    probe: &[ChartPoint],
) -> Result<CompatibleTriple> {
    for p in probe {
        let wm = square_at(w, p, "symplectic form")?;
        let gm = square_at(g0, p, "metric")?;
        compatible_structure_at(&wm, &gm)?;
    }
    let n = w.chart_dim();
    let build = |w: TensorFieldSpec, g0: TensorFieldSpec, pick: fn(CompatiblePointwise) -> DMatrix<f64>| {
        TensorFieldSpec::square(n, move |p| {
            compatible_structure_at(&w.raw(p), &g0.raw(p))
                .map(pick)
                .unwrap_or_else(|_| DMatrix::from_element(n, n, f64::NAN))
        })
    };
    Ok(CompatibleTriple {
        omega: w.clone(),
        metric: build(w.clone(), g0.clone(), |c| c.g),
        acs: build(w.clone(), g0.clone(), |c| c.j),
    })
}

/// Field `A` with `omega(X, Y) = g(A X, Y)`.
pub fn endomorphism_field(w: &TensorFieldSpec, g: &TensorFieldSpec) -> TensorFieldSpec {
    let (w, g) = (w.clone(), g.clone());
    let n = w.chart_dim();
    TensorFieldSpec::square(n, move |p| {
        endomorphism_from_forms(&w.raw(p), &g.raw(p)).unwrap_or_else(|_| DMatrix::from_element(n, n, f64::NAN))
    })
}

#[cfg(test)]
mod tests {
    use nalgebra::DVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::geom::{standard_acs, standard_symplectic};

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(v))
    }

    fn pts(dim: usize) -> Vec<ChartPoint> {
        (0..5)
            .map(|k| ChartPoint::new((0..dim).map(|i| (k * dim + i) as f64 * 0.37 - 1.0).collect()).unwrap())
            .collect()
    }

    #[test]
    fn metric_examples() {
        let p = pts(4);
        let r = check_metric(&TensorFieldSpec::constant(4, DMatrix::identity(4, 4)), &p, 1e-8).unwrap();
        assert!(r.passed);
        assert_eq!(r.max_residual, 0.0);
        assert!(check_metric(&TensorFieldSpec::constant(4, diag(&[1.0, 1.0, 4.0, 4.0])), &p, 1e-8).unwrap().passed);
        let bad = TensorFieldSpec::constant(2, standard_symplectic(2));
        assert!(!check_metric(&bad, &pts(2), 1e-8).unwrap().passed);
    }

    #[test]
    fn symplectic_examples() {
        let p = pts(4);
        let r = check_symplectic_pointwise(&TensorFieldSpec::constant(4, standard_symplectic(4)), &p, 1e-8).unwrap();
        assert!(r.passed);
        assert!((standard_symplectic(4).determinant() - 1.0).abs() < 1e-15);
        let zero = TensorFieldSpec::constant(4, DMatrix::zeros(4, 4));
        assert!(!check_symplectic_pointwise(&zero, &p, 1e-8).unwrap().passed);
        let scaled = TensorFieldSpec::square(2, |x| standard_symplectic(2) * (1.0 + x[0] * x[0]));
        assert!(check_symplectic_pointwise(&scaled, &pts(2), 1e-8).unwrap().passed);
        let odd = TensorFieldSpec::constant(3, DMatrix::zeros(3, 3));
        assert_eq!(
            check_symplectic_pointwise(&odd, &pts(3), 1e-8).unwrap_err(),
            Error::OddDimension(3)
        );
    }

    #[test]
    fn closedness_examples() {
        let cfg = FdConfig::default();
        let p = pts(4);
        let r = check_closed(&TensorFieldSpec::constant(4, standard_symplectic(4)), &p, &cfg, 1e-5).unwrap();
        assert!(r.max_residual < 1e-9);
        // x2 dx1^dy1 + dx2^dy2 with coordinates (x1, y1, x2, y2)
        let w = TensorFieldSpec::square(4, |x| {
            let mut m = standard_symplectic(4);
            m[(0, 1)] = x[2];
            m[(1, 0)] = -x[2];
            m
        });
        let r = check_closed(&w, &p, &cfg, 1e-5).unwrap();
        assert!((r.max_residual - 1.0).abs() < 1e-8);
        assert!(!r.passed);
        let area = TensorFieldSpec::square(2, |x| standard_symplectic(2) * (1.0 + x[0] * x[0]));
        let r = check_closed(&area, &pts(2), &cfg, 1e-5).unwrap();
        assert_eq!(r.max_residual, 0.0);
    }

    #[test]
    fn acs_examples() {
        let p = pts(4);
        assert!(check_acs(&TensorFieldSpec::constant(4, standard_acs(4)), &p, 1e-8).unwrap().passed);
        let r = check_acs(&TensorFieldSpec::constant(4, DMatrix::identity(4, 4)), &p, 1e-8).unwrap();
        assert!((r.max_residual - 4.0).abs() < 1e-15); // |2 I_4|_F
        let r = check_acs(&TensorFieldSpec::constant(4, standard_acs(4) * 0.5), &p, 1e-8).unwrap();
        assert!((r.max_residual - 0.75 * 2.0).abs() < 1e-15);
    }

    #[test]
    fn compatibility_examples() {
        let triple = |w: DMatrix<f64>, g: DMatrix<f64>, j: DMatrix<f64>| {
            let n = w.nrows();
            CompatibleTriple {
                omega: TensorFieldSpec::constant(n, w),
                metric: TensorFieldSpec::constant(n, g),
                acs: TensorFieldSpec::constant(n, j),
            }
        };
        let t = triple(standard_symplectic(2), DMatrix::identity(2, 2), standard_acs(2));
        assert!(check_compatibility(&t, &pts(2), 1e-8).unwrap().passed);
        let t = triple(standard_symplectic(4), diag(&[1.0, 1.0, 4.0, 4.0]), standard_acs(4));
        let r = check_compatibility(&t, &pts(4), 1e-8).unwrap();
        assert!((r.max_residual - 3.0).abs() < 1e-15);
        let t = triple(standard_symplectic(4) * 2.0, DMatrix::identity(4, 4) * 2.0, standard_acs(4));
        assert!(check_compatibility(&t, &pts(4), 1e-8).unwrap().passed);
        assert!(check_compatibility_alt(&t, &pts(4), 1e-8).unwrap().passed);
    }

    #[test]
    fn standard_construction_recovers_coordinate_j() {
        let c = compatible_structure_at(&standard_symplectic(4), &DMatrix::identity(4, 4)).unwrap();
        assert!(max_abs(&(c.j - standard_acs(4))) < 1e-14);
        assert!(max_abs(&(c.g - DMatrix::identity(4, 4))) < 1e-14);

        let c = compatible_structure_at(&standard_symplectic(4), &diag(&[1.0, 1.0, 4.0, 4.0])).unwrap();
        assert!(max_abs(&(c.j - standard_acs(4))) < 1e-14);
        assert!(max_abs(&(c.g - DMatrix::identity(4, 4))) < 1e-14);
    }

    #[test]
    fn degenerate_omega_is_not_spd() {
        let mut w = standard_symplectic(4);
        w[(2, 3)] = 0.0;
        w[(3, 2)] = 0.0;
        let err = compatible_structure_at(&w, &DMatrix::identity(4, 4)).unwrap_err();
        assert!(matches!(err, Error::NotSpd { .. }));
    }

    #[test]
    fn metric_branch_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 6;
        let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let w = &m - m.transpose() + standard_symplectic(n) * 2.0;
        let l = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let g0 = &l * l.transpose() + DMatrix::identity(n, n);
        let first = compatible_structure_at(&w, &g0).unwrap();
        let second = compatible_structure_at(&w, &first.g).unwrap();
        assert!(max_abs(&(&first.j - &second.j)) < 1e-9);
    }

    #[test]
    fn build_triple_field_passes_checks() {
        let w = TensorFieldSpec::square(4, |x| standard_symplectic(4) * (1.0 + x[0] * x[0]));
        let g0 = TensorFieldSpec::square(4, |x| diag(&[1.0 + x[1] * x[1], 2.0, 1.0, 3.0]));
        let p = pts(4);
        let t = build_compatible_triple(&w, &g0, &p).unwrap();
        assert!(check_acs(&t.acs, &p, 1e-9).unwrap().passed);
        assert!(check_compatibility(&t, &p, 1e-9).unwrap().passed);
        assert!(check_metric(&t.metric, &p, 1e-9).unwrap().passed);
    }
}
