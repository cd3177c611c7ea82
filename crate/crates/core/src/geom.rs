//! Charts, tangent vectors, evaluable tensor fields and the small dense
//! linear algebra every other module leans on.
//!
//! Coordinates of complex charts are interleaved as `(x1, y1, x2, y2, ...)`.
//! Bilinear forms are stored as matrices acting by `u^T M v`; endomorphism
//! fields act on component vectors from the left.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of a single coordinate chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint(Vec<f64>);

impl ChartPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("chart point".into()));
        }
        Ok(ChartPoint(coords))
    }

    pub fn origin(dim: usize) -> Self {
        ChartPoint(vec![0.0; dim])
    }

    pub fn from_dvector(v: &DVector<f64>) -> Result<Self> {
        Self::new(v.iter().copied().collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn to_dvector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.0)
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// A tangent vector together with the point it is attached to.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub base: ChartPoint,
    pub components: DVector<f64>,
}

impl TangentVector {
    pub fn new(base: ChartPoint, components: DVector<f64>) -> Result<Self> {
        if components.len() != base.dim() {
            return Err(Error::DimensionMismatch {
                context: "tangent vector".into(),
                expected: base.dim(),
                found: components.len(),
            });
        }
        if components.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("tangent vector".into()));
        }
        Ok(TangentVector { base, components })
    }

    /// Coordinate basis vector `e_index` at `base`.
    pub fn basis(base: ChartPoint, index: usize) -> Self {
        let mut components = DVector::zeros(base.dim());
        components[index] = 1.0;
        TangentVector { base, components }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldShape {
    Scalar,
    Vector(usize),
    Matrix(usize, usize),
}

impl FieldShape {
    fn dims(self) -> (usize, usize) {
        match self {
            FieldShape::Scalar => (1, 1),
            FieldShape::Vector(n) => (n, 1),
            FieldShape::Matrix(r, c) => (r, c),
        }
    }
}

type FieldFn = dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync;

/// A deterministic, evaluable field over a chart of dimension `chart_dim`.
///
/// Scalars are returned as `1x1` matrices and vectors as columns.
#[derive(Clone)]
pub struct TensorFieldSpec {
    chart_dim: usize,
    shape: FieldShape,
    eval: Arc<FieldFn>,
}

impl fmt::Debug for TensorFieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TensorFieldSpec")
            .field("chart_dim", &self.chart_dim)
            .field("shape", &self.shape)
            .finish_non_exhaustive()
    }
}

impl TensorFieldSpec {
    pub fn matrix<F>(chart_dim: usize, rows: usize, cols: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    {
        TensorFieldSpec {
            chart_dim,
            shape: FieldShape::Matrix(rows, cols),
            eval: Arc::new(f),
        }
    }

    /// Square `n x n` matrix field on an `n`-dimensional chart.
    pub fn square<F>(chart_dim: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    {
        Self::matrix(chart_dim, chart_dim, chart_dim, f)
    }

    pub fn constant(chart_dim: usize, value: DMatrix<f64>) -> Self {
        let (rows, cols) = value.shape();
        Self::matrix(chart_dim, rows, cols, move |_| value.clone())
    }

    pub fn scalar<F>(chart_dim: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        TensorFieldSpec {
            chart_dim,
            shape: FieldShape::Scalar,
            eval: Arc::new(move |p| DMatrix::from_element(1, 1, f(p))),
        }
    }

    pub fn vector<F>(chart_dim: usize, len: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> DVector<f64> + Send + Sync + 'static,
    {
        TensorFieldSpec {
            chart_dim,
            shape: FieldShape::Vector(len),
            eval: Arc::new(move |p| {
                let v = f(p);
                DMatrix::from_column_slice(v.len(), 1, v.as_slice())
            }),
        }
    }

    pub fn chart_dim(&self) -> usize {
        self.chart_dim
    }

    pub fn shape(&self) -> FieldShape {
        self.shape
    }

    /// Evaluate without the shape and finiteness checks of [`eval_field`].
    pub(crate) fn raw(&self, p: &[f64]) -> DMatrix<f64> {
        (self.eval)(p)
    }

    pub fn eval(&self, p: &ChartPoint) -> Result<DMatrix<f64>> {
        eval_field(self, p)
    }

    pub fn eval_scalar(&self, p: &ChartPoint) -> Result<f64> {
        Ok(eval_field(self, p)?[(0, 0)])
    }
}

/// Central-difference configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdConfig {
    pub step: f64,
    pub order: u8,
}

impl Default for FdConfig {
    fn default() -> Self {
        FdConfig {
            step: 1e-5,
            order: 4,
        }
    }
}

impl FdConfig {
    pub fn new(step: f64, order: u8) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::DegenerateInput(format!("finite-difference step {step}")));
        }
        if order != 2 && order != 4 {
            return Err(Error::DegenerateInput(format!(
                "finite-difference order {order} (supported: 2, 4)"
            )));
        }
        Ok(FdConfig { step, order })
    }

    /// Central stencil: the derivative is `sum(w * (f(x + o h) - f(x - o h))) / h`.
    fn stencil(&self) -> &'static [(f64, f64)] {
        match self.order {
            2 => &[(1.0, 0.5)],
            _ => &[(1.0, 8.0 / 12.0), (2.0, -1.0 / 12.0)],
        }
    }
}

fn check_finite(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

pub fn eval_field(field: &TensorFieldSpec, p: &ChartPoint) -> Result<DMatrix<f64>> {
    if p.dim() != field.chart_dim {
        return Err(Error::DimensionMismatch {
            context: "field evaluation point".into(),
            expected: field.chart_dim,
            found: p.dim(),
        });
    }
    let value = field.raw(p.coords());
    let expected = field.shape.dims();
    if value.shape() != expected {
        return Err(Error::DimensionMismatch {
            context: "field value".into(),
            expected: expected.0 * expected.1,
            found: value.len(),
        });
    }
    check_finite(&value, "field value")?;
    Ok(value)
}

/// Jacobian of `map` at `p`: entry `(j, i)` approximates `d map_j / d x_i`.
pub fn fd_jacobian<F>(map: F, p: &ChartPoint, cfg: &FdConfig) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = p.dim();
    let h = cfg.step;
    let mut x = p.coords().to_vec();
    let mut columns: Vec<DVector<f64>> = Vec::with_capacity(n);
    let mut rows = None;
    for i in 0..n {
        let mut col: Option<DVector<f64>> = None;
        for &(offset, weight) in cfg.stencil() {
            x[i] = p.coords()[i] + offset * h;
            let fwd = map(&x);
            x[i] = p.coords()[i] - offset * h;
            let bwd = map(&x);
            let acc = col.get_or_insert_with(|| DVector::zeros(fwd.len()));
            if acc.len() != fwd.len() || bwd.len() != fwd.len() {
                return Err(Error::DimensionMismatch {
                    context: "mapped point".into(),
                    expected: acc.len(),
                    found: if bwd.len() != fwd.len() { bwd.len() } else { fwd.len() },
                });
            }
            for ((a, f), b) in acc.iter_mut().zip(&fwd).zip(&bwd) {
                *a += weight * (f - b);
            }
        }
        x[i] = p.coords()[i];
        let col = col.expect("stencil is non-empty") / h;
        rows = Some(col.len());
        columns.push(col);
    }
    let rows = match rows {
        Some(r) => r,
        None => map(p.coords()).len(),
    };
    let jac = DMatrix::from_fn(rows, n, |j, i| columns[i][j]);
    check_finite(&jac, "finite-difference Jacobian")?;
    Ok(jac)
}

/// Directional derivative of `field` at `p` along `dir`.
pub fn fd_directional(
    field: &TensorFieldSpec,
    p: &ChartPoint,
    dir: &TangentVector,
    cfg: &FdConfig,
) -> Result<DMatrix<f64>> {
    if dir.components.len() != p.dim() {
        return Err(Error::DimensionMismatch {
            context: "direction".into(),
            expected: p.dim(),
            found: dir.components.len(),
        });
    }
    if dir.components.norm() == 0.0 {
        return Err(Error::DegenerateInput("zero direction".into()));
    }
    eval_field(field, p)?;
    let (r, c) = field.shape.dims();
    let mut acc = DMatrix::zeros(r, c);
    let mut x = vec![0.0; p.dim()];
    for &(offset, weight) in cfg.stencil() {
        for (k, xk) in x.iter_mut().enumerate() {
            *xk = p.coords()[k] + offset * cfg.step * dir.components[k];
        }
        let fwd = field.raw(&x);
        for (k, xk) in x.iter_mut().enumerate() {
            *xk = p.coords()[k] - offset * cfg.step * dir.components[k];
        }
        acc += (fwd - field.raw(&x)) * weight;
    }
    acc /= cfg.step;
    check_finite(&acc, "directional derivative")?;
    Ok(acc)
}

/// Orthonormal basis of the null space of `mat`.
///
/// Singular values below `rank_tol * sigma_max` count as zero. Vectors are
/// ordered by singular-value index.
pub fn kernel_basis(mat: &DMatrix<f64>, rank_tol: f64) -> Result<Vec<DVector<f64>>> {
    check_finite(mat, "kernel input")?;
    Ok(kernel_with_rank(mat, rank_tol).0)
}

/// Like [`kernel_basis`], but requires full row rank (a submersion at the
/// point); otherwise fails with [`Error::DegenerateInput`].
pub fn regular_kernel_basis(mat: &DMatrix<f64>, rank_tol: f64) -> Result<Vec<DVector<f64>>> {
    check_finite(mat, "kernel input")?;
    let (kernel, rank) = kernel_with_rank(mat, rank_tol);
    if rank < mat.nrows() {
        return Err(Error::DegenerateInput(format!(
            "rank {rank} below the {} rows required",
            mat.nrows()
        )));
    }
    Ok(kernel)
}

fn kernel_with_rank(mat: &DMatrix<f64>, rank_tol: f64) -> (Vec<DVector<f64>>, usize) {
    let (m, n) = mat.shape();
    if n == 0 {
        return (Vec::new(), 0);
    }
    // Pad wide matrices with zero rows so the SVD returns a full V.
    let padded = if m < n {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (m, n)).copy_from(mat);
        p
    } else {
        mat.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let sigma = &svd.singular_values;
    let sigma_max = sigma.iter().cloned().fold(0.0, f64::max);
    let mut kernel = Vec::new();
    let mut rank = 0;
    for (k, &s) in sigma.iter().enumerate() {
        if sigma_max > 0.0 && s > rank_tol * sigma_max {
            rank += 1;
        } else {
            kernel.push(v_t.row(k).transpose());
        }
    }
    (kernel, rank)
}

/// Gram-Schmidt with respect to the inner product `u^T metric v`.
///
/// Vectors whose norm drops below `tol` after projection are discarded.
pub fn orthonormalize(vectors: &[DVector<f64>], metric: &DMatrix<f64>, tol: f64) -> Vec<DVector<f64>> {
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut w = v.clone();
        // two sweeps of modified Gram-Schmidt
        for _ in 0..2 {
            for q in &out {
                let c = inner(q, metric, &w);
                w.axpy(-c, q, 1.0);
            }
        }
        let norm = inner(&w, metric, &w).max(0.0).sqrt();
        if norm >= tol {
            out.push(w / norm);
        }
    }
    out
}

/// [`orthonormalize`] on tangent vectors sharing one base point.
pub fn orthonormalize_tangent(vectors: &[TangentVector], metric: &DMatrix<f64>, tol: f64) -> Vec<TangentVector> {
    let Some(first) = vectors.first() else {
        return Vec::new();
    };
    let raw: Vec<_> = vectors.iter().map(|v| v.components.clone()).collect();
    orthonormalize(&raw, metric, tol)
        .into_iter()
        .map(|components| TangentVector {
            base: first.base.clone(),
            components,
        })
        .collect()
}

/// `u^T m v`.
pub fn inner(u: &DVector<f64>, m: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    (u.transpose() * m * v)[(0, 0)]
}

/// Symmetric positive definite `S` with `S S = mat^-1`.
pub fn sqrt_inverse_spd(mat: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    spd_power(mat, -0.5)
}

/// Symmetric positive definite square root of `mat`.
pub fn sqrt_spd(mat: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    spd_power(mat, 0.5)
}

fn spd_power(mat: &DMatrix<f64>, power: f64) -> Result<DMatrix<f64>> {
    check_finite(mat, "SPD input")?;
    if !mat.is_square() {
        return Err(Error::DimensionMismatch {
            context: "SPD matrix".into(),
            expected: mat.nrows(),
            found: mat.ncols(),
        });
    }
    let sym = (mat + mat.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        return Err(Error::NotSpd { min_eigenvalue: min });
    }
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.powf(power)));
    let out = &eig.eigenvectors * d * eig.eigenvectors.transpose();
    Ok((&out + out.transpose()) * 0.5)
}

/// Smallest eigenvalue of the symmetric part of `mat`.
pub fn min_symmetric_eigenvalue(mat: &DMatrix<f64>) -> f64 {
    let sym = (mat + mat.transpose()) * 0.5;
    SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Largest absolute entry.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Smallest singular value (0 for an empty matrix).
pub fn sigma_min(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Block-diagonal `[[0, 1], [-1, 0]]` per complex plane: `dx^i ^ dy^i`.
pub fn standard_symplectic(dim: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(dim, dim);
    for k in (0..dim.saturating_sub(1)).step_by(2) {
        m[(k, k + 1)] = 1.0;
        m[(k + 1, k)] = -1.0;
    }
    m
}

/// Block-diagonal `[[0, -1], [1, 0]]`: `J d/dx^i = d/dy^i`.
pub fn standard_acs(dim: usize) -> DMatrix<f64> {
    -standard_symplectic(dim)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(c: &[f64]) -> ChartPoint {
        ChartPoint::new(c.to_vec()).unwrap()
    }

    #[test]
    fn eval_constant_identity() {
        let f = TensorFieldSpec::constant(3, DMatrix::identity(3, 3));
        assert_eq!(eval_field(&f, &pt(&[1.0, 2.0, 3.0])).unwrap(), DMatrix::identity(3, 3));
    }

    #[test]
    fn eval_point_dependent() {
        let f = TensorFieldSpec::square(2, |p| DMatrix::from_diagonal(&DVector::from_vec(vec![p[0] * p[0], 1.0])));
        let v = eval_field(&f, &pt(&[2.0, 0.0])).unwrap();
        assert_eq!(v, DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0])));
    }

    #[test]
    fn eval_standard_omega_r4() {
        let f = TensorFieldSpec::constant(4, standard_symplectic(4));
        let v = eval_field(&f, &pt(&[0.3, -1.0, 2.0, 0.0])).unwrap();
        #[rustfmt::skip]
        let expected = DMatrix::from_row_slice(4, 4, &[
            0.0, 1.0, 0.0, 0.0,
            -1.0, 0.0, 0.0, 0.0,
            0.0, 0.0, 0.0, 1.0,
            0.0, 0.0, -1.0, 0.0,
        ]);
        assert_eq!(v, expected);
    }

    #[test]
    fn eval_rejects_nan_and_wrong_dim() {
        let f = TensorFieldSpec::scalar(1, |p| (p[0]).ln());
        assert!(matches!(eval_field(&f, &pt(&[-1.0])), Err(Error::NonFinite(_))));
        assert!(matches!(
            eval_field(&f, &pt(&[1.0, 2.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn jacobian_identity_and_linear() {
        let cfg = FdConfig::default();
        let id = fd_jacobian(|x| x.to_vec(), &pt(&[0.4, -3.0]), &cfg).unwrap();
        assert!(max_abs(&(id - DMatrix::identity(2, 2))) < 1e-10);
        let lin = fd_jacobian(
            |x| vec![x[0] + 2.0 * x[1], 3.0 * x[0] + 4.0 * x[1]],
            &pt(&[0.0, 0.0]),
            &cfg,
        )
        .unwrap();
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert!(max_abs(&(lin - a)) < 1e-10);
    }

    #[test]
    fn jacobian_of_z_squared() {
        let j = fd_jacobian(
            |x| vec![x[0] * x[0] - x[1] * x[1], 2.0 * x[0] * x[1]],
            &pt(&[1.0, 1.0]),
            &FdConfig::default(),
        )
        .unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[2.0, -2.0, 2.0, 2.0]);
        assert!(max_abs(&(j - expected)) < 1e-8);
    }

    #[test]
    fn jacobian_nonfinite() {
        let r =fd_jacobian(|x| vec![(x[0]).sqrt()], &pt(&[0.0]), &FdConfig::default());
        assert!(matches!(r, Err(Error::NonFinite(_))));
    }

    #[test]
    fn directional_examples() {
        let cfg = FdConfig::default();
        let c = TensorFieldSpec::constant(2, DMatrix::from_element(2, 2, 3.0));
        let d = fd_directional(&c, &pt(&[1.0, 1.0]), &TangentVector::basis(pt(&[1.0, 1.0]), 0), &cfg).unwrap();
        assert_eq!(d, DMatrix::zeros(2, 2));

        let prod = TensorFieldSpec::scalar(2, |p| p[0] * p[1]);
        let base = pt(&[1.0, 2.0]);
        let d = fd_directional(&prod, &base, &TangentVector::basis(base.clone(), 0), &cfg).unwrap();
        assert!((d[(0, 0)] - 2.0).abs() < 1e-10);

        let mu = TensorFieldSpec::scalar(4, |p| 0.5 * p.iter().map(|v| v * v).sum::<f64>());
        let base = pt(&[1.0, 0.0, 0.0, 0.0]);
        let d = fd_directional(&mu, &base, &TangentVector::basis(base.clone(), 1), &cfg).unwrap();
        assert!(d[(0, 0)].abs() < 1e-10);
    }

    #[test]
    fn directional_rejects_zero_direction() {
        let f = TensorFieldSpec::scalar(2, |p| p[0]);
        let base = pt(&[0.0, 0.0]);
        let zero = TangentVector::new(base.clone(), DVector::zeros(2)).unwrap();
        assert!(matches!(
            fd_directional(&f, &base, &zero, &FdConfig::default()),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn kernel_examples() {
        let row = DMatrix::from_row_slice(1, 4, &[1.0, 0.0, 0.0, 0.0]);
        let k = kernel_basis(&row, 1e-8).unwrap();
        assert_eq!(k.len(), 3);
        for (i, a) in k.iter().enumerate() {
            assert!(a[0].abs() < 1e-12);
            for (j, b) in k.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((a.dot(b) - expected).abs() < 1e-12);
            }
        }
        assert!(kernel_basis(&DMatrix::identity(2, 2), 1e-8).unwrap().is_empty());
        assert_eq!(kernel_basis(&DMatrix::zeros(2, 2), 1e-8).unwrap().len(), 2);
        assert!(matches!(
            regular_kernel_basis(&DMatrix::zeros(1, 2), 1e-8),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn orthonormalize_examples() {
        let e = |a: f64, b: f64| DVector::from_vec(vec![a, b]);
        let id = DMatrix::identity(2, 2);
        let out = orthonormalize(&[e(1.0, 0.0), e(0.0, 1.0)], &id, 1e-12);
        assert_eq!(out, vec![e(1.0, 0.0), e(0.0, 1.0)]);
        let out = orthonormalize(&[e(1.0, 0.0), e(1.0, 1.0)], &id, 1e-12);
        assert!((&out[1] - e(0.0, 1.0)).norm() < 1e-15);
        let g = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0]));
        let out = orthonormalize(&[e(1.0, 0.0)], &g, 1e-12);
        assert!((&out[0] - e(0.5, 0.0)).norm() < 1e-15);
        // dependent vectors are dropped
        let out = orthonormalize(&[e(1.0, 1.0), e(2.0, 2.0)], &id, 1e-10);
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn sqrt_inverse_examples() {
        let id = DMatrix::<f64>::identity(3, 3);
        assert!(max_abs(&(sqrt_inverse_spd(&id).unwrap() - &id)) < 1e-15);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 9.0]));
        let s = sqrt_inverse_spd(&d).unwrap();
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 1.0 / 3.0]));
        assert!(max_abs(&(s - expected)) < 1e-15);
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let s = sqrt_inverse_spd(&m).unwrap();
        assert!(max_abs(&(&s * &s * &m - DMatrix::identity(2, 2))) < 1e-10);
        assert!(max_abs(&(&s * &m - &m * &s)) < 1e-10);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(sqrt_inverse_spd(&bad), Err(Error::NotSpd { .. })));
    }

    #[test]
    fn standard_structures() {
        let w = standard_symplectic(4);
        let j = standard_acs(4);
        assert_eq!(&w * &j, DMatrix::identity(4, 4));
        assert_eq!(&j * &j, -DMatrix::identity(4, 4));
        // J d/dx1 = d/dy1
        assert_eq!(j.column(0).iter().copied().collect::<Vec<_>>(), vec![0.0, 1.0, 0.0, 0.0]);
    }
}
