//! Lie group actions in a chart: infinitesimal generators, invariance
//! checks, the momentum-map condition and invariant-metric averaging.
//!
//! Group elements are addressed by Lie algebra parameter vectors through a
//! fixed exponential chart. The built-in groups (circles, tori, translations)
//! are abelian, so `flow(s, flow(t, p)) = flow(s + t, p)`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geom::{eval_field, fd_jacobian, max_abs, ChartPoint, FdConfig, TangentVector, TensorFieldSpec};
use crate::report::{ResidualTracker, StructureCheckResult};

type FlowFn = dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync;

/// A group action `(params, p) -> Phi_exp(params)(p)`.
#[derive(Clone)]
pub struct GroupActionSpec {
    pub group_dim: usize,
    pub chart_dim: usize,
    flow: Arc<FlowFn>,
    pub algebra_basis: Vec<String>,
    /// Parameter vectors with weights summing to 1; empty for noncompact
    /// groups.
    pub quadrature: Vec<(Vec<f64>, f64)>,
    pub abelian: bool,
    /// Period of each parameter direction (`None` for noncompact ones).
    pub periods: Vec<Option<f64>>,
}

impl fmt::Debug for GroupActionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GroupActionSpec")
            .field("group_dim", &self.group_dim)
            .field("chart_dim", &self.chart_dim)
            .field("algebra_basis", &self.algebra_basis)
            .field("quadrature_points", &self.quadrature.len())
            .field("abelian", &self.abelian)
            .finish_non_exhaustive()
    }
}

impl GroupActionSpec {
    pub fn new<F>(group_dim: usize, chart_dim: usize, flow: F) -> Self
    where
        F: Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        GroupActionSpec {
            group_dim,
            chart_dim,
            flow: Arc::new(flow),
            algebra_basis: (1..=group_dim).map(|i| format!("t{i}")).collect(),
            quadrature: Vec::new(),
            abelian: true,
            periods: vec![None; group_dim],
        }
    }

    /// Declare every parameter direction periodic and install the uniform
    /// tensor-product rule with `points_per_circle` nodes per direction.
    pub fn with_torus_quadrature(mut self, periods: &[f64], points_per_circle: usize) -> Self {
        self.periods = periods.iter().map(|&p| Some(p)).collect();
        self.quadrature = torus_quadrature(periods, points_per_circle);
        self
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Self {
        self.algebra_basis = labels;
        self
    }

    pub fn nonabelian(mut self) -> Self {
        self.abelian = false;
        self
    }

    pub fn apply(&self, params: &[f64], p: &[f64]) -> Vec<f64> {
        (self.flow)(params, p)
    }

    pub fn apply_point(&self, params: &[f64], p: &ChartPoint) -> Result<ChartPoint> {
        ChartPoint::new(self.apply(params, p.coords()))
    }

    /// Jacobian of `Phi_a` at `p`.
    pub fn differential(&self, params: &[f64], p: &ChartPoint, cfg: &FdConfig) -> Result<DMatrix<f64>> {
        fd_jacobian(|x| self.apply(params, x), p, cfg)
    }

    /// Circle `e^{-i theta} z` acting diagonally on `C^n = R^{2n}`.
    pub fn unitary_circle(complex_dim: usize, points_per_circle: usize) -> Self {
        GroupActionSpec::new(1, 2 * complex_dim, |t, p| rotate_planes(p, -t[0]))
            .with_torus_quadrature(&[2.0 * PI], points_per_circle)
            .with_labels(vec!["theta".into()])
    }

    /// Counterclockwise rotations of the plane.
    pub fn plane_rotation(points_per_circle: usize) -> Self {
        GroupActionSpec::new(1, 2, |t, p| rotate_planes(p, t[0]))
            .with_torus_quadrature(&[2.0 * PI], points_per_circle)
            .with_labels(vec!["theta".into()])
    }

    /// Translations along the listed coordinate axes.
    pub fn translation(chart_dim: usize, axes: Vec<usize>) -> Self {
        let k = axes.len();
        GroupActionSpec::new(k, chart_dim, move |t, p| {
            let mut q = p.to_vec();
            for (s, &axis) in t.iter().zip(&axes) {
                q[axis] += s;
            }
            q
        })
    }

    /// Dilations `p -> e^t p`.
    pub fn dilation(chart_dim: usize) -> Self {
        GroupActionSpec::new(1, chart_dim, |t, p| p.iter().map(|x| x * t[0].exp()).collect())
    }
}

/// Rotate every `(x, y)` plane by `angle`.
fn rotate_planes(p: &[f64], angle: f64) -> Vec<f64> {
    let (s, c) = angle.sin_cos();
    let mut q = p.to_vec();
    for k in (0..p.len().saturating_sub(1)).step_by(2) {
        q[k] = c * p[k] - s * p[k + 1];
        q[k + 1] = s * p[k] + c * p[k + 1];
    }
    q
}

/// Uniform tensor-product rule on a torus with the given periods.
pub fn torus_quadrature(periods: &[f64], points_per_circle: usize) -> Vec<(Vec<f64>, f64)> {
    let k = periods.len();
    let total = points_per_circle.pow(k as u32);
    if total == 0 {
        return Vec::new();
    }
    let weight = 1.0 / total as f64;
    (0..total)
        .map(|mut idx| {
            let params = periods
                .iter()
                .map(|period| {
                    let j = idx % points_per_circle;
                    idx /= points_per_circle;
                    period * j as f64 / points_per_circle as f64
                })
                .collect();
            (params, weight)
        })
        .collect()
}

/// Momentum map components together with the level `beta`.
#[derive(Debug, Clone)]
pub struct MomentumMapSpec {
    pub components: Vec<TensorFieldSpec>,
    pub beta: Vec<f64>,
}

impl MomentumMapSpec {
    pub fn new(components: Vec<TensorFieldSpec>, beta: Vec<f64>) -> Self {
        MomentumMapSpec { components, beta }
    }

    pub fn value(&self, p: &ChartPoint) -> Result<DVector<f64>> {
        let vals = self
            .components
            .iter()
            .map(|c| c.eval_scalar(p))
            .collect::<Result<Vec<_>>>()?;
        Ok(DVector::from_vec(vals))
    }

    fn raw(&self, p: &[f64]) -> Vec<f64> {
        self.components.iter().map(|c| c.raw(p)[(0, 0)]).collect()
    }

    /// `|mu(p) - beta|`.
    pub fn level_residual(&self, p: &ChartPoint) -> Result<f64> {
        let v = self.value(p)?;
        Ok(v.iter().zip(&self.beta).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
    }

    /// `d mu` at `p` (rows are component gradients).
    pub fn jacobian(&self, p: &ChartPoint, cfg: &FdConfig) -> Result<DMatrix<f64>> {
        fd_jacobian(|x| self.raw(x), p, cfg)
    }
}

/// `xi_M(p) = d/dt Phi(exp(t xi), p)` at `t = 0` for the basis element
/// `xi_index`.
pub fn generator(action: &GroupActionSpec, xi_index: usize, p: &ChartPoint, cfg: &FdConfig) -> Result<TangentVector> {
    if xi_index >= action.group_dim {
        return Err(Error::DimensionMismatch {
            context: "Lie algebra index".into(),
            expected: action.group_dim,
            found: xi_index,
        });
    }
    let mut xi = vec![0.0; action.group_dim];
    xi[xi_index] = 1.0;
    generator_along(action, &xi, p, cfg)
}

/// Generator of an arbitrary Lie algebra element `xi`.
pub fn generator_along(action: &GroupActionSpec, xi: &[f64], p: &ChartPoint, cfg: &FdConfig) -> Result<TangentVector> {
    let curve = |t: &[f64]| {
        let params: Vec<f64> = xi.iter().map(|x| x * t[0]).collect();
        action.apply(&params, p.coords())
    };
    let d = fd_jacobian(curve, &ChartPoint::origin(1), cfg)?;
    TangentVector::new(p.clone(), d.column(0).into_owned())
}

/// All basis generators at `p` as the columns of an `n x k` matrix.
pub fn generator_matrix(action: &GroupActionSpec, p: &ChartPoint, cfg: &FdConfig) -> Result<DMatrix<f64>> {
    let cols = (0..action.group_dim)
        .map(|i| generator(action, i, p, cfg).map(|v| v.components))
        .collect::<Result<Vec<_>>>()?;
    Ok(DMatrix::from_fn(p.dim(), cols.len(), |r, c| cols[c][r]))
}

/// `flow(0, p) = p`.
pub fn check_identity_axiom(action: &GroupActionSpec, points: &[ChartPoint], tol: f64) -> Result<StructureCheckResult> {
    let zero = vec![0.0; action.group_dim];
    let mut t = ResidualTracker::new("action identity axiom", tol);
    for p in points {
        let q = action.apply_point(&zero, p)?;
        let r = q.coords().iter().zip(p.coords()).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        t.record(r, p);
    }
    Ok(t.finish())
}

/// Pullback of a bilinear form field: `max |D^T F(Phi_a p) D - F(p)|`.
fn check_pullback(
    name: &str,
    action: &GroupActionSpec,
    form: &TensorFieldSpec,
    params: &[Vec<f64>],
    points: &[ChartPoint],
    cfg: &FdConfig,
    tol: f64,
) -> Result<StructureCheckResult> {
    let mut t = ResidualTracker::new(name, tol);
    for p in points {
        let here = eval_field(form, p)?;
        for a in params {
            let d = action.differential(a, p, cfg)?;
            let there = eval_field(form, &action.apply_point(a, p)?)?;
            t.record(max_abs(&(d.transpose() * there * &d - &here)), p);
        }
    }
    Ok(t.finish())
}

/// `g_m(u, v) = g_{Phi_a m}(D u, D v)` at every sampled `a` and `m`.
pub fn check_isometry(
    action: &GroupActionSpec,
    g: &TensorFieldSpec,
    params: &[Vec<f64>],
    points: &[ChartPoint],
    cfg: &FdConfig,
    tol: f64,
) -> Result<StructureCheckResult> {
    check_pullback("action preserves metric", action, g, params, points, cfg, tol)
}

/// `Phi_a^* omega = omega`.
pub fn check_symplectomorphism(
    action: &GroupActionSpec,
    w: &TensorFieldSpec,
    params: &[Vec<f64>],
    points: &[ChartPoint],
    cfg: &FdConfig,
    tol: f64,
) -> Result<StructureCheckResult> {
    check_pullback("action preserves symplectic form", action, w, params, points, cfg, tol)
}

/// Hamiltonian condition `omega(xi_M, .) = d mu_xi` for each basis element.
///
/// With `omega(u, v) = u^T W v` the covector `omega(xi_M, .)` has components
/// `W^T xi_M`; the residual is its Euclidean distance to `grad mu_xi`.
pub fn momentum_residual(
    action: &GroupActionSpec,
    mu: &MomentumMapSpec,
    w: &TensorFieldSpec,
    points: &[ChartPoint],
    cfg: &FdConfig,
    tol: f64,
) -> Result<StructureCheckResult> {
    if mu.components.len() != action.group_dim {
        return Err(Error::DimensionMismatch {
            context: "momentum map components".into(),
            expected: action.group_dim,
            found: mu.components.len(),
        });
    }
    let mut t = ResidualTracker::new("momentum map omega(xi_M, .) = d mu_xi", tol);
    for p in points {
        let wm = eval_field(w, p)?;
        let dmu = mu.jacobian(p, cfg)?;
        let mut worst: f64 = 0.0;
        for i in 0..action.group_dim {
            let xi = generator(action, i, p, cfg)?.components;
            let lhs = wm.transpose() * xi;
            let grad = dmu.row(i).transpose();
            worst = worst.max((lhs - grad).norm());
        }
        t.record(worst, p);
    }
    Ok(t.finish())
}

/// Equivariance for abelian groups: `mu(Phi_a p) = mu(p)`.
pub fn check_momentum_invariance(
    action: &GroupActionSpec,
    mu: &MomentumMapSpec,
    params: &[Vec<f64>],
    points: &[ChartPoint],
    tol: f64,
) -> Result<StructureCheckResult> {
    if !action.abelian {
        return Err(Error::UnsupportedNonabelian);
    }
    let mut t = ResidualTracker::new("momentum map invariant", tol);
    for p in points {
        let here = mu.value(p)?;
        for a in params {
            let there = mu.value(&action.apply_point(a, p)?)?;
            t.record((there - &here).amax(), p);
        }
    }
    Ok(t.finish())
}

/// Group average of the pulled-back metric:
/// `sum_a w_a D_a^T G0(Phi_a p) D_a` over the action's quadrature rule.
pub fn average_metric(g0: &TensorFieldSpec, action: &GroupActionSpec, cfg: &FdConfig) -> Result<TensorFieldSpec> {
    if action.quadrature.is_empty() {
        return Err(Error::NoQuadrature);
    }
    let total: f64 = action.quadrature.iter().map(|(_, w)| w).sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::DegenerateInput(format!("quadrature weights sum to {total}")));
    }
    let (g0, action, cfg) = (g0.clone(), action.clone(), *cfg);
    let n = g0.chart_dim();
    Ok(TensorFieldSpec::square(n, move |p| {
        let point = match ChartPoint::new(p.to_vec()) {
            Ok(point) => point,
            Err(_) => return DMatrix::from_element(n, n, f64::NAN),
        };
        let mut acc = DMatrix::zeros(n, n);
        for (a, weight) in &action.quadrature {
            let Ok(d) = action.differential(a, &point, &cfg) else {
                return DMatrix::from_element(n, n, f64::NAN);
            };
            let there = g0.raw(&action.apply(a, p));
            acc += d.transpose() * there * &d * *weight;
        }
        (&acc + acc.transpose()) * 0.5
    }))
}

/// Invariance of an endomorphism field: `D F(p) = F(Phi_a p) D`.
pub fn check_field_invariance(
    field: &TensorFieldSpec,
    action: &GroupActionSpec,
    params: &[Vec<f64>],
    points: &[ChartPoint],
    cfg: &FdConfig,
    tol: f64,
) -> Result<StructureCheckResult> {
    let mut t = ResidualTracker::new("endomorphism field invariant", tol);
    for p in points {
        let here = eval_field(field, p)?;
        for a in params {
            let d = action.differential(a, p, cfg)?;
            let there = eval_field(field, &action.apply_point(a, p)?)?;
            t.record(max_abs(&(&d * &here - there * &d)), p);
        }
    }
    Ok(t.finish())
}
