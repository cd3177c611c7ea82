//! Level sets of the momentum map, the vertical/horizontal splitting, and the
//! reduced metric, symplectic form and almost complex structure.
//!
//! The projection `pi: mu^{-1}(beta) -> M_beta` is never formed as a map. The
//! quotient only has coordinates through a local section `sigma`, so `d pi`
//! is realized pointwise: the pushforward `d sigma(e_i)` projected onto the
//! horizontal space is the horizontal lift of `e_i`, and `d pi(u)` solves
//! `P_H u = sum_i c_i lift_i` for `c`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::action::{generator_matrix, GroupActionSpec, MomentumMapSpec};
use crate::error::{Error, Result};
use crate::geom::{
    eval_field, fd_jacobian, inner, max_abs, orthonormalize, regular_kernel_basis, sigma_min, ChartPoint,
    FdConfig, TensorFieldSpec,
};
use crate::report::{CheckRecord, ResidualTracker, StructureCheckResult};
use crate::structures::CompatibleTriple;

type SectionFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// Local section of the quotient map, landing in the level set.
#[derive(Clone)]
pub struct SectionMap {
    pub quotient_dim: usize,
    pub chart_dim: usize,
    map: Arc<SectionFn>,
}

impl fmt::Debug for SectionMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SectionMap")
            .field("quotient_dim", &self.quotient_dim)
            .field("chart_dim", &self.chart_dim)
            .finish_non_exhaustive()
    }
}

impl SectionMap {
    pub fn new<F>(quotient_dim: usize, chart_dim: usize, map: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        SectionMap {
            quotient_dim,
            chart_dim,
            map: Arc::new(map),
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (self.map)(x)
    }
}

/// Where quotient sample points are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SampleRegion {
    /// Uniform in the Euclidean ball of this radius.
    Ball { radius: f64 },
    /// Uniform in the cube `[lo, hi]^q`.
    Box { lo: f64, hi: f64 },
}

impl SampleRegion {
    pub fn sample<R: Rng>(&self, rng: &mut R, dim: usize) -> Vec<f64> {
        match *self {
            SampleRegion::Box { lo, hi } => (0..dim).map(|_| rng.random_range(lo..=hi)).collect(),
            SampleRegion::Ball { radius } => {
                if dim == 0 {
                    return Vec::new();
                }
                loop {
                    let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-radius..=radius)).collect();
                    if v.iter().map(|c| c * c).sum::<f64>() <= radius * radius {
                        return v;
                    }
                }
            }
        }
    }
}

/// Tolerances used by the reduction pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReductionTolerances {
    /// `|mu - beta|` for points that must lie on the level.
    pub constraint: f64,
    /// Identities that go through several finite differences.
    pub geometric: f64,
    /// Pointwise algebraic identities.
    pub algebraic: f64,
    /// Hypotheses on the ambient data (compatibility, isometry, ...).
    pub hypothesis: f64,
    /// Relative singular-value threshold for rank decisions.
    pub rank: f64,
}

impl Default for ReductionTolerances {
    fn default() -> Self {
        ReductionTolerances {
            constraint: 1e-9,
            geometric: 1e-5,
            algebraic: 1e-8,
            hypothesis: 1e-6,
            rank: 1e-8,
        }
    }
}

/// One reduction instance: ambient structures, the action, the momentum
/// level and a section of the quotient.
#[derive(Debug, Clone)]
pub struct ReductionScenario {
    pub name: String,
    pub chart_dim: usize,
    pub omega: TensorFieldSpec,
    pub metric: TensorFieldSpec,
    pub acs: TensorFieldSpec,
    pub action: GroupActionSpec,
    pub mu: MomentumMapSpec,
    pub quotient_dim: usize,
    pub section: SectionMap,
    /// Group parameters used when comparing points along a fiber.
    pub fiber_params: Vec<Vec<f64>>,
    pub quotient_region: SampleRegion,
    /// Quotient points always included in sample sets.
    pub sample_points: Vec<ChartPoint>,
    pub tolerances: ReductionTolerances,
}

impl ReductionScenario {
    pub fn group_dim(&self) -> usize {
        self.action.group_dim
    }

    pub fn triple(&self) -> CompatibleTriple {
        CompatibleTriple {
            omega: self.omega.clone(),
            metric: self.metric.clone(),
            acs: self.acs.clone(),
        }
    }

    /// `sigma(x)`, checked to lie on the level.
    pub fn section_point(&self, x: &ChartPoint) -> Result<ChartPoint> {
        if x.dim() != self.quotient_dim {
            return Err(Error::DimensionMismatch {
                context: "quotient point".into(),
                expected: self.quotient_dim,
                found: x.dim(),
            });
        }
        let m = ChartPoint::new(self.section.apply(x.coords()))?;
        if m.dim() != self.chart_dim {
            return Err(Error::DimensionMismatch {
                context: "section output".into(),
                expected: self.chart_dim,
                found: m.dim(),
            });
        }
        let residual = self.mu.level_residual(&m)?;
        if residual > self.tolerances.constraint {
            return Err(Error::SectionNotOnLevel {
                point: x.coords().to_vec(),
                residual,
            });
        }
        Ok(m)
    }

    /// `Phi_a(sigma(x))`.
    pub fn fiber_point(&self, x: &ChartPoint, params: &[f64]) -> Result<ChartPoint> {
        let m = self.section_point(x)?;
        self.action.apply_point(params, &m)
    }

    /// Seeded quotient sample points.
    pub fn sample_quotient<R: Rng>(&self, rng: &mut R, count: usize) -> Vec<ChartPoint> {
        (0..count)
            .map(|_| ChartPoint::new(self.quotient_region.sample(rng, self.quotient_dim)).expect("finite sample"))
            .collect()
    }

    /// A random group parameter: uniform over a period for compact
    /// directions, uniform in `[-1, 1]` otherwise.
    pub fn sample_group_param<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.action
            .periods
            .iter()
            .map(|p| match p {
                Some(period) => rng.random_range(0.0..*period),
                None => rng.random_range(-1.0..=1.0),
            })
            .collect()
    }

    /// Structural validation. Hard inconsistencies are errors; soft ones come
    /// back as warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        let n = self.chart_dim;
        let k = self.group_dim();
        if n % 2 == 1 {
            return Err(Error::OddDimension(n));
        }
        let fields = [("omega", &self.omega), ("metric", &self.metric), ("acs", &self.acs)];
        for (name, f) in fields {
            if f.chart_dim() != n {
                return Err(Error::Validation(format!(
                    "{name} is defined on a {}-dimensional chart, scenario has {n}",
                    f.chart_dim()
                )));
            }
        }
        if self.mu.components.len() != k || self.mu.beta.len() != k {
            return Err(Error::Validation(format!(
                "momentum map needs {k} components and a level of length {k}"
            )));
        }
        if self.action.chart_dim != n || self.section.chart_dim != n || self.section.quotient_dim != self.quotient_dim {
            return Err(Error::Validation("action or section dimensions disagree with the chart".into()));
        }
        let mut warnings = Vec::new();
        if 2 * k > n {
            return Err(Error::Validation(format!("group of dimension {k} is too large for a {n}-dimensional chart")));
        }
        if self.quotient_dim != n - 2 * k {
            warnings.push(format!(
                "quotient dimension {} differs from dim M - dim G - dim G_beta = {}",
                self.quotient_dim,
                n - 2 * k
            ));
        }
        Ok(warnings)
    }
}

/// Gauss-Newton projection onto `mu^{-1}(beta)` (minimum-norm steps).
///
/// A level is declared non-regular when the momentum differential loses
/// rank along the iteration: its smallest singular value falls below
/// `1e-8` relative to its largest, or below `1e-3` of its size at the guess.
pub fn project_to_level(mu: &MomentumMapSpec, guess: &ChartPoint, tol: f64, max_iter: usize) -> Result<ChartPoint> {
    let cfg = FdConfig::default();
    let beta = DVector::from_column_slice(&mu.beta);
    let mut m = guess.clone();
    let mut residual = mu.value(&m)? - &beta;
    if residual.norm() <= tol {
        return Ok(m);
    }
    let scale = {
        let d = mu.jacobian(&m, &cfg)?;
        d.singular_values().iter().cloned().fold(0.0, f64::max)
    };
    if scale == 0.0 {
        return Err(Error::NotRegularValue { sigma_min: 0.0 });
    }
    for _ in 0..max_iter {
        let d = mu.jacobian(&m, &cfg)?;
        let sv = d.singular_values();
        let smax = sv.iter().cloned().fold(0.0, f64::max);
        let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        if smin <= 1e-8 * smax || smin < 1e-3 * scale {
            return Err(Error::NotRegularValue { sigma_min: smin });
        }
        let normal = &d * d.transpose();
        let y = normal
            .lu()
            .solve(&residual)
            .ok_or(Error::NotRegularValue { sigma_min: smin })?;
        let step = d.transpose() * y;
        m = ChartPoint::from_dvector(&(m.to_dvector() - step))?;
        residual = mu.value(&m)? - &beta;
        if residual.norm() <= tol {
            return Ok(m);
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: residual.norm(),
    })
}

/// `T_m mu^{-1}(beta) = H_m + V_m` at a point of the level.
#[derive(Debug, Clone)]
pub struct SplitTangentSpace {
    pub base: ChartPoint,
    /// Euclidean-orthonormal basis of `ker d mu`.
    pub level_tangent: Vec<DVector<f64>>,
    /// Infinitesimal generators at the base point.
    pub vertical: Vec<DVector<f64>>,
    /// `g`-orthonormal basis of the `g`-orthogonal complement of the vertical
    /// space inside `ker d mu`.
    pub horizontal: Vec<DVector<f64>>,
    pub metric: DMatrix<f64>,
    /// `d mu` at the base point.
    pub momentum_differential: DMatrix<f64>,
}

impl SplitTangentSpace {
    /// `g`-orthogonal projection onto the horizontal space.
    pub fn project_horizontal(&self, u: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(u.len());
        for h in &self.horizontal {
            out.axpy(inner(h, &self.metric, u), h, 1.0);
        }
        out
    }

    /// `g`-norm of the part of `u` outside the horizontal space.
    pub fn horizontal_defect(&self, u: &DVector<f64>) -> f64 {
        let rest = u - self.project_horizontal(u);
        inner(&rest, &self.metric, &rest).max(0.0).sqrt()
    }

    /// `g`-distance from `u` to the vertical space.
    pub fn vertical_distance(&self, u: &DVector<f64>) -> f64 {
        distance_to_span(u, &self.vertical, &self.metric)
    }
}

/// `g`-distance from `u` to `span(basis)`.
pub fn distance_to_span(u: &DVector<f64>, basis: &[DVector<f64>], metric: &DMatrix<f64>) -> f64 {
    let q = orthonormalize(basis, metric, 1e-12);
    let mut rest = u.clone();
    for b in &q {
        rest.axpy(-inner(b, metric, &rest), b, 1.0);
    }
    inner(&rest, metric, &rest).max(0.0).sqrt()
}

/// Split the level-set tangent space at `m`.
pub fn split_tangent(scen: &ReductionScenario, m: &ChartPoint, cfg: &FdConfig) -> Result<SplitTangentSpace> {
    let tol = scen.tolerances;
    let residual = scen.mu.level_residual(m)?;
    if residual > 1e-8 {
        return Err(Error::NotOnLevel { residual });
    }
    let dmu = scen.mu.jacobian(m, cfg)?;
    let level_tangent = regular_kernel_basis(&dmu, tol.rank).map_err(|_| Error::NotRegularValue {
        sigma_min: sigma_min(&dmu),
    })?;
    let gens = generator_matrix(&scen.action, m, cfg)?;
    let smin = sigma_min(&gens);
    if scen.group_dim() > 0 && smin <= 1e-8 {
        return Err(Error::ActionNotFree { sigma_min: smin });
    }
    let vertical: Vec<DVector<f64>> = gens.column_iter().map(|c| c.into_owned()).collect();
    for v in &vertical {
        let leak = (&dmu * v).norm() / v.norm();
        if leak > 1e-8 {
            return Err(Error::GeneratorsNotTangent { residual: leak });
        }
    }
    let metric = eval_field(&scen.metric, m)?;
    let vq = orthonormalize(&vertical, &metric, 1e-12);
    let candidates: Vec<DVector<f64>> = level_tangent
        .iter()
        .map(|u| {
            let mut w = u.clone();
            for b in &vq {
                w.axpy(-inner(b, &metric, &w), b, 1.0);
            }
            w
        })
        .collect();
    // Dependent candidates (one per vertical direction) collapse to ~0.
    let horizontal = orthonormalize(&candidates, &metric, 1e-6);
    Ok(SplitTangentSpace {
        base: m.clone(),
        level_tangent,
        vertical,
        horizontal,
        metric,
        momentum_differential: dmu,
    })
}

/// Horizontal lifts of the quotient coordinate vectors at `Phi_a(sigma(x))`.
#[derive(Debug, Clone)]
pub struct HorizontalLifts {
    pub quotient_point: ChartPoint,
    pub split: SplitTangentSpace,
    /// `lifts[i]` is the horizontal vector with `d pi(lifts[i]) = e_i`.
    pub lifts: Vec<DVector<f64>>,
    /// `coords[(j, i)] = g(h_j, lift_i)` in the horizontal orthonormal basis.
    coords: DMatrix<f64>,
    /// `max |d pi(lift_i) - e_i|` after the solve.
    pub solve_residual: f64,
}

impl HorizontalLifts {
    pub fn point(&self) -> &ChartPoint {
        &self.split.base
    }

    /// `d pi(u)` for a level-tangent vector `u` (vertical parts are killed).
    pub fn push_forward(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        let q = self.lifts.len();
        if q == 0 {
            return Ok(DVector::zeros(0));
        }
        let b = DVector::from_iterator(q, self.split.horizontal.iter().map(|h| inner(h, &self.split.metric, u)));
        self.coords
            .clone()
            .lu()
            .solve(&b)
            .ok_or(Error::RankDeficientLift { sigma_min: 0.0 })
    }

    /// Matrix of a bilinear form on the lifts: `(lift_i^T F lift_j)`.
    pub fn gram(&self, form: &DMatrix<f64>) -> DMatrix<f64> {
        let q = self.lifts.len();
        DMatrix::from_fn(q, q, |i, j| inner(&self.lifts[i], form, &self.lifts[j]))
    }
}

/// Lifts at the fiber point `Phi_a(sigma(x))`: the pushforward of the
/// transported section `Phi_a o sigma` projected onto the horizontal space.
pub fn horizontal_lifts(
    scen: &ReductionScenario,
    x: &ChartPoint,
    params: &[f64],
    cfg: &FdConfig,
) -> Result<HorizontalLifts> {
    let m = scen.fiber_point(x, params)?;
    let split = split_tangent(scen, &m, cfg)?;
    let q = scen.quotient_dim;
    if split.horizontal.len() != q {
        return Err(Error::RankDeficientLift { sigma_min: 0.0 });
    }
    let transported = |w: &[f64]| scen.action.apply(params, &scen.section.apply(w));
    let dsec = if q == 0 {
        DMatrix::zeros(scen.chart_dim, 0)
    } else {
        fd_jacobian(transported, x, cfg)?
    };
    let lifts: Vec<DVector<f64>> = dsec
        .column_iter()
        .map(|c| split.project_horizontal(&c.into_owned()))
        .collect();
    let coords = DMatrix::from_fn(q, q, |j, i| inner(&split.horizontal[j], &split.metric, &lifts[i]));
    if q > 0 {
        let smin = sigma_min(&coords);
        let smax = coords.singular_values().iter().cloned().fold(0.0, f64::max);
        if smin <= scen.tolerances.rank * smax.max(f64::MIN_POSITIVE) {
            return Err(Error::RankDeficientLift { sigma_min: smin });
        }
    }
    let mut out = HorizontalLifts {
        quotient_point: x.clone(),
        split,
        lifts,
        coords,
        solve_residual: 0.0,
    };
    let mut worst: f64 = 0.0;
    for (i, l) in out.lifts.iter().enumerate() {
        let c = out.push_forward(l)?;
        for (j, v) in c.iter().enumerate() {
            let e = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((v - e).abs());
        }
    }
    out.solve_residual = worst;
    Ok(out)
}

/// Reduced metric, symplectic form and almost complex structure candidate at
/// one quotient point, computed through one fiber point.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedStructures {
    pub point: ChartPoint,
    pub h_beta: DMatrix<f64>,
    pub omega_beta: DMatrix<f64>,
    /// Columns `d pi(J_M lift_i)`.
    pub j_beta: DMatrix<f64>,
    /// Largest relative `g`-norm of the non-horizontal part of `J_M lift_i`.
    pub leak: f64,
}

impl ReducedStructures {
    pub fn leak_flagged(&self, tol: f64) -> bool {
        self.leak > tol
    }
}

/// Reduced structures computed at `Phi_a(sigma(x))`.
pub fn reduced_structures_at(
    scen: &ReductionScenario,
    x: &ChartPoint,
    params: &[f64],
    cfg: &FdConfig,
) -> Result<ReducedStructures> {
    let lifts = horizontal_lifts(scen, x, params, cfg)?;
    let m = lifts.point().clone();
    let g = &lifts.split.metric;
    let w = eval_field(&scen.omega, &m)?;
    let j = eval_field(&scen.acs, &m)?;
    let q = lifts.lifts.len();
    let h_beta = lifts.gram(g);
    let omega_beta = lifts.gram(&w);
    let mut j_beta = DMatrix::zeros(q, q);
    let mut leak: f64 = 0.0;
    for (i, l) in lifts.lifts.iter().enumerate() {
        let jl = &j * l;
        let size = inner(&jl, g, &jl).max(0.0).sqrt();
        if size > 0.0 {
            leak = leak.max(lifts.split.horizontal_defect(&jl) / size);
        }
        j_beta.set_column(i, &lifts.push_forward(&jl)?);
    }
    Ok(ReducedStructures {
        point: x.clone(),
        h_beta,
        omega_beta,
        j_beta,
        leak,
    })
}

fn identity_params(scen: &ReductionScenario) -> Vec<f64> {
    vec![0.0; scen.group_dim()]
}

/// `h_x(v, w) = g(lift v, lift w)` at `sigma(x)`.
pub fn reduced_metric(scen: &ReductionScenario, x: &ChartPoint, cfg: &FdConfig) -> Result<DMatrix<f64>> {
    let lifts = horizontal_lifts(scen, x, &identity_params(scen), cfg)?;
    Ok(lifts.gram(&lifts.split.metric))
}

/// `omega_beta([u], [v]) = omega(u, v)` on horizontal lifts at `sigma(x)`.
pub fn reduced_symplectic(scen: &ReductionScenario, x: &ChartPoint, cfg: &FdConfig) -> Result<DMatrix<f64>> {
    let lifts = horizontal_lifts(scen, x, &identity_params(scen), cfg)?;
    let w = eval_field(&scen.omega, lifts.point())?;
    Ok(lifts.gram(&w))
}

/// Pushforward candidate `J_beta e_i = d pi(J_M lift_i)` with its leak.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedAcs {
    pub matrix: DMatrix<f64>,
    pub leak: f64,
    pub vertical_leak: bool,
}

pub fn reduced_acs(scen: &ReductionScenario, x: &ChartPoint, cfg: &FdConfig) -> Result<ReducedAcs> {
    let r = reduced_structures_at(scen, x, &identity_params(scen), cfg)?;
    Ok(ReducedAcs {
        vertical_leak: r.leak_flagged(scen.tolerances.geometric),
        matrix: r.j_beta,
        leak: r.leak,
    })
}

/// Pushforward of vertical vectors by `Phi_a` stays vertical: relative
/// `g`-distance from `D_a xi_M(m)` to the vertical space at `Phi_a(m)`.
pub fn check_vertical_ad_invariance(
    scen: &ReductionScenario,
    m: &ChartPoint,
    params: &[f64],
    cfg: &FdConfig,
    tol: f64,
) -> Result<StructureCheckResult> {
    let here = split_tangent(scen, m, cfg)?;
    let target = scen.action.apply_point(params, m)?;
    let there = split_tangent(scen, &target, cfg)?;
    let d = scen.action.differential(params, m, cfg)?;
    let mut t = ResidualTracker::new("pushforward of vertical is vertical", tol);
    for xi in &here.vertical {
        let u = &d * xi;
        let size = inner(&u, &there.metric, &u).sqrt();
        t.record(there.vertical_distance(&u) / size, m);
    }
    Ok(t.finish())
}

/// Checks that make up the Riemannian submersion verification.
#[derive(Debug, Clone)]
pub struct SubmersionReport {
    /// `|h_x via sigma - h_x via Phi_a o sigma|`.
    pub fiber_independence: StructureCheckResult,
    /// Horizontal vectors `g`-orthogonal to vertical ones and tangent to the
    /// level.
    pub orthogonality: StructureCheckResult,
    /// Dimension bookkeeping of the splitting and the quotient.
    pub dimensions: StructureCheckResult,
    /// `d pi(lift_i) = e_i` after the lift solve.
    pub lift_solve: StructureCheckResult,
    /// Reduced metric symmetric positive definite.
    pub metric_spd: StructureCheckResult,
}

impl SubmersionReport {
    pub fn passed(&self) -> bool {
        self.records().iter().all(|r| r.passed)
    }

    pub fn records(&self) -> Vec<CheckRecord> {
        vec![
            CheckRecord::from_result(
                self.fiber_independence.clone(),
                "h_x(v, w) = g(v~, w~) independent of the fibre point",
            ),
            CheckRecord::from_result(self.orthogonality.clone(), "T_m mu^-1(beta) = H_m (+) V_m orthogonal"),
            CheckRecord::from_result(self.dimensions.clone(), "dim M_beta = dim M - dim G - dim G_beta"),
            CheckRecord::from_result(self.lift_solve.clone(), "d pi_m restricted to H_m is an isomorphism"),
            CheckRecord::from_result(self.metric_spd.clone(), "reduced metric positive definite"),
        ]
    }
}

pub fn verify_submersion(
    scen: &ReductionScenario,
    xs: &[ChartPoint],
    fiber_params: &[Vec<f64>],
    cfg: &FdConfig,
    tol: f64,
) -> Result<SubmersionReport> {
    let n = scen.chart_dim;
    let k = scen.group_dim();
    let tols = scen.tolerances;
    let mut fiber = ResidualTracker::new("fiber independence of reduced metric", tol);
    let mut ortho = ResidualTracker::new("splitting orthogonality", tols.algebraic);
    let mut dims = ResidualTracker::new("dimension counts", 0.0);
    let mut solve = ResidualTracker::new("horizontal lift solve", 1e-10);
    let mut spd = ResidualTracker::new("reduced metric SPD", tols.algebraic);
    let zero = identity_params(scen);
    for x in xs {
        let base = horizontal_lifts(scen, x, &zero, cfg)?;
        let h0 = base.gram(&base.split.metric);
        let asym = max_abs(&(&h0 - h0.transpose()));
        let lmin = if h0.is_empty() { f64::INFINITY } else { crate::geom::min_symmetric_eigenvalue(&h0) };
        spd.record(asym + if lmin > tols.algebraic { 0.0 } else { 2.0 * tols.algebraic - lmin }, x);
        for a in fiber_params {
            let moved = horizontal_lifts(scen, x, a, cfg)?;
            let h = moved.gram(&moved.split.metric);
            fiber.record(max_abs(&(h - &h0)), x);
            solve.record(moved.solve_residual, x);

            let split = &moved.split;
            let mut worst: f64 = 0.0;
            for hv in &split.horizontal {
                for v in &split.vertical {
                    let vn = inner(v, &split.metric, v).sqrt();
                    worst = worst.max((inner(hv, &split.metric, v) / vn).abs());
                }
                worst = worst.max((&split.momentum_differential * hv).amax());
            }
            ortho.record(worst, x);

            let expected_h = n.saturating_sub(2 * k);
            let count_defect = split.level_tangent.len().abs_diff(n - k)
                + split.vertical.len().abs_diff(k)
                + split.horizontal.len().abs_diff(expected_h)
                + scen.quotient_dim.abs_diff(expected_h);
            dims.record(count_defect as f64, x);
        }
    }
    Ok(SubmersionReport {
        fiber_independence: fiber.finish(),
        orthogonality: ortho.finish(),
        dimensions: dims.finish(),
        lift_solve: solve.finish(),
        metric_spd: spd.finish(),
    })
}

#[derive(Debug, Clone)]
pub struct ReductionIdentityReport {
    /// `|omega(m)(u, v) - omega_beta(d pi u, d pi v)|` on level-tangent pairs.
    pub identity: StructureCheckResult,
    /// `|omega(m)(xi_M, k)|` for vertical `xi_M` and level-tangent `k`.
    pub degeneracy: StructureCheckResult,
    /// Reduced symplectic form antisymmetric and nondegenerate.
    pub nondegenerate: StructureCheckResult,
}

impl ReductionIdentityReport {
    pub fn passed(&self) -> bool {
        self.identity.passed && self.degeneracy.passed && self.nondegenerate.passed
    }

    pub fn records(&self) -> Vec<CheckRecord> {
        vec![
            CheckRecord::from_result(self.identity.clone(), "pi_beta* omega_beta = i_beta* omega"),
            CheckRecord::from_result(self.degeneracy.clone(), "(T_m mu^-1(beta))^omega = T_m(G.m)"),
            CheckRecord::from_result(self.nondegenerate.clone(), "omega_beta antisymmetric nondegenerate"),
        ]
    }
}

/// Sample `samples` level points `Phi_a(sigma(x))` and level-tangent pairs
/// from a seeded generator and compare `omega` with the reduced form.
pub fn verify_reduction_identity<R: Rng>(
    scen: &ReductionScenario,
    rng: &mut R,
    samples: usize,
    cfg: &FdConfig,
    tol: f64,
) -> Result<ReductionIdentityReport> {
    let tols = scen.tolerances;
    let mut identity = ResidualTracker::new("reduced symplectic identity", tol);
    let mut degeneracy = ResidualTracker::new("vertical omega-degeneracy", tols.algebraic);
    let mut nondeg = ResidualTracker::new("reduced symplectic nondegenerate", tols.algebraic);
    let zero = identity_params(scen);
    for _ in 0..samples {
        let x = scen.sample_quotient(rng, 1).remove(0);
        let a = scen.sample_group_param(rng);
        let base = horizontal_lifts(scen, &x, &zero, cfg)?;
        let w0 = eval_field(&scen.omega, base.point())?;
        let omega_beta = base.gram(&w0);
        let asym = max_abs(&(&omega_beta + omega_beta.transpose()));
        let det = omega_beta.determinant().abs();
        nondeg.record(asym + if det > tols.algebraic { 0.0 } else { 2.0 * tols.algebraic - det }, &x);

        let lifts = horizontal_lifts(scen, &x, &a, cfg)?;
        let m = lifts.point().clone();
        let w = eval_field(&scen.omega, &m)?;
        let basis = &lifts.split.level_tangent;
        let combo = |rng: &mut R| {
            let mut u = DVector::zeros(scen.chart_dim);
            for b in basis {
                u.axpy(rng.random_range(-1.0..=1.0), b, 1.0);
            }
            u
        };
        let u = combo(rng);
        let v = combo(rng);
        let lhs = inner(&u, &w, &v);
        let (pu, pv) = (lifts.push_forward(&u)?, lifts.push_forward(&v)?);
        let rhs = if pu.is_empty() { 0.0 } else { inner(&pu, &omega_beta, &pv) };
        identity.record((lhs - rhs).abs(), &m);

        let mut worst: f64 = 0.0;
        for xi in &lifts.split.vertical {
            let xi = xi / xi.norm();
            for kv in basis {
                worst = worst.max(inner(&xi, &w, kv).abs());
            }
        }
        degeneracy.record(worst, &m);
    }
    Ok(ReductionIdentityReport {
        identity: identity.finish(),
        degeneracy: degeneracy.finish(),
        nondegenerate: nondeg.finish(),
    })
}

/// Per-sample numbers of the main-theorem check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MainTheoremSample {
    pub x: Vec<f64>,
    /// `max_a |J_beta via Phi_a o sigma - J_beta via sigma|`: how far
    /// `d pi o J_M = J_beta o d pi` is from holding with a single `J_beta`.
    pub acm_residual: f64,
    /// Relative size of the part of `J_M lift_i` leaving the horizontal space.
    pub leak_residual: f64,
    /// `|Omega_beta J_beta - H_beta|`.
    pub compat_residual: f64,
    /// `|J_beta^2 + I|_F`.
    pub acs_residual: f64,
    /// Hypotheses on `M`: `|W J - G|` on the fiber and fiber dependence of
    /// the reduced metric.
    pub hypothesis_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MainTheoremReport {
    pub tolerance: f64,
    pub samples: Vec<MainTheoremSample>,
    /// `acm <= tol` exactly when `compat <= tol`, at every sample.
    pub iff_holds: bool,
    /// First sample where one side holds and the other does not.
    pub witness: Option<Vec<f64>>,
    /// Some hypothesis of the theorem fails on the scenario.
    pub hypothesis_violation: bool,
    /// `true` when the almost-complex-mapping side holds everywhere.
    pub positive_branch: bool,
}

impl MainTheoremReport {
    fn max_of(&self, f: impl Fn(&MainTheoremSample) -> f64) -> (f64, Vec<f64>) {
        self.samples
            .iter()
            .fold((0.0, Vec::new()), |(best, at), s| if f(s) > best || at.is_empty() { (f(s), s.x.clone()) } else { (best, at) })
    }

    pub fn records(&self) -> Vec<CheckRecord> {
        let tol = self.tolerance;
        let row = |name: &str, anchor: &str, f: &dyn Fn(&MainTheoremSample) -> f64| {
            let (r, at) = self.max_of(f);
            CheckRecord {
                name: name.into(),
                anchor: anchor.into(),
                max_residual: r,
                tolerance: tol,
                passed: r <= tol,
                worst_point: at,
                samples: self.samples.len(),
                note: None,
            }
        };
        let mut iff = CheckRecord {
            name: "main theorem equivalence".into(),
            anchor: "omega_beta = g_beta(J_beta ., .) iff pi is an almost complex mapping".into(),
            max_residual: if self.iff_holds { 0.0 } else { 1.0 },
            tolerance: 0.5,
            passed: self.iff_holds,
            worst_point: self.witness.clone().unwrap_or_default(),
            samples: self.samples.len(),
            note: None,
        };
        let branch = if self.positive_branch { "positive branch" } else { "negative branch" };
        iff.note = Some(if self.hypothesis_violation {
            format!("{branch}; hypothesis violation: ambient triple incompatible or metric not invariant")
        } else {
            branch.to_string()
        });
        vec![
            row("almost complex mapping defect", "pi_* o J_M = J_beta o pi_*", &|s| s.acm_residual),
            row("J_M preserves horizontal space", "J_M H(M) = H(M)", &|s| s.leak_residual),
            row("reduced compatibility", "omega_beta([X],[Y]) = g_beta(J_beta[X],[Y])", &|s| s.compat_residual),
            row("reduced J squared", "J_beta^2 = -id", &|s| s.acs_residual),
            iff,
        ]
    }
}

/// Measure both sides of the main theorem at each quotient sample.
pub fn verify_main_theorem(
    scen: &ReductionScenario,
    xs: &[ChartPoint],
    fiber_params: &[Vec<f64>],
    cfg: &FdConfig,
    tol: f64,
) -> Result<MainTheoremReport> {
    let zero = identity_params(scen);
    let mut samples = Vec::with_capacity(xs.len());
    for x in xs {
        let base = reduced_structures_at(scen, x, &zero, cfg)?;
        let q = base.h_beta.nrows();
        let compat = max_abs(&(&base.omega_beta * &base.j_beta - &base.h_beta));
        let acs = (&base.j_beta * &base.j_beta + DMatrix::identity(q, q)).norm();
        let mut acm: f64 = 0.0;
        let mut leak = base.leak;
        let mut hypothesis: f64 = 0.0;
        for a in fiber_params {
            let moved = reduced_structures_at(scen, x, a, cfg)?;
            acm = acm.max(max_abs(&(&moved.j_beta - &base.j_beta)));
            leak = leak.max(moved.leak);
            hypothesis = hypothesis.max(max_abs(&(&moved.h_beta - &base.h_beta)));
            let m = scen.fiber_point(x, a)?;
            let (w, g, j) = (
                eval_field(&scen.omega, &m)?,
                eval_field(&scen.metric, &m)?,
                eval_field(&scen.acs, &m)?,
            );
            hypothesis = hypothesis.max(max_abs(&(w * j - g)));
        }
        samples.push(MainTheoremSample {
            x: x.coords().to_vec(),
            acm_residual: acm,
            leak_residual: leak,
            compat_residual: compat,
            acs_residual: acs,
            hypothesis_residual: hypothesis,
        });
    }
    let witness = samples
        .iter()
        .find(|s| (s.acm_residual <= tol) != (s.compat_residual <= tol))
        .map(|s| s.x.clone());
    Ok(MainTheoremReport {
        tolerance: tol,
        iff_holds: witness.is_none(),
        witness,
        hypothesis_violation: samples.iter().any(|s| s.hypothesis_residual > scen.tolerances.hypothesis),
        positive_branch: samples.iter().all(|s| s.acm_residual <= tol),
        samples,
    })
}

/// Group parameters `{0, pi/3, pi}` per direction for compact groups, and
/// `{0, 1/3, 1}` shifts for noncompact ones.
pub fn default_fiber_params(action: &GroupActionSpec) -> Vec<Vec<f64>> {
    [0.0, 1.0 / 3.0, 1.0]
        .iter()
        .map(|s| {
            action
                .periods
                .iter()
                .map(|p| match p {
                    Some(_) => s * PI,
                    None => *s,
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{standard_acs, standard_symplectic};
    use crate::scenarios::{builtin, hopf, linear_translation, noninvariant_metric_hopf, skewed_metric_hopf};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pt(c: &[f64]) -> ChartPoint {
        ChartPoint::new(c.to_vec()).unwrap()
    }

    fn close(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> bool {
        a.shape() == b.shape() && max_abs(&(a - b)) < tol
    }

    /// Span equality through projection ranks.
    fn same_span(a: &[DVector<f64>], b: &[DVector<f64>]) -> bool {
        let id = DMatrix::identity(a[0].len(), a[0].len());
        a.len() == b.len() && b.iter().all(|v| distance_to_span(v, a, &id) < 1e-8)
    }

    #[test]
    fn projection_examples() {
        let s = hopf();
        let m = project_to_level(&s.mu, &pt(&[1.1, 0.0, 0.0, 0.0]), 1e-12, 50).unwrap();
        assert!((m.to_dvector() - pt(&[1.0, 0.0, 0.0, 0.0]).to_dvector()).norm() < 1e-9);

        let on = pt(&[0.0, 0.6, 0.8, 0.0]);
        assert_eq!(project_to_level(&s.mu, &on, 1e-9, 50).unwrap(), on);

        let mut zero = s.mu.clone();
        zero.beta = vec![0.0];
        assert!(matches!(
            project_to_level(&zero, &pt(&[0.1, 0.0, 0.0, 0.0]), 1e-12, 50),
            Err(Error::NotRegularValue { .. })
        ));
    }

    #[test]
    fn split_examples() {
        let cfg = FdConfig::default();
        let e = |i: usize| DVector::from_fn(4, |j, _| if i == j { 1.0 } else { 0.0 });

        let s = hopf();
        let sp = split_tangent(&s, &pt(&[1.0, 0.0, 0.0, 0.0]), &cfg).unwrap();
        assert_eq!(sp.level_tangent.len(), 3);
        assert!((&sp.vertical[0] + e(1)).norm() < 1e-10);
        assert!(same_span(&sp.horizontal, &[e(2), e(3)]));

        let l = linear_translation();
        let sp = split_tangent(&l, &ChartPoint::origin(4), &cfg).unwrap();
        assert!(same_span(&sp.vertical, &[e(0)]));
        assert!(same_span(&sp.horizontal, &[e(2), e(3)]));

        assert!(matches!(
            split_tangent(&s, &pt(&[2.0, 0.0, 0.0, 0.0]), &cfg),
            Err(Error::NotOnLevel { .. })
        ));
    }

    #[test]
    fn vertical_transport() {
        let cfg = FdConfig::default();
        let s = hopf();
        let r = check_vertical_ad_invariance(&s, &pt(&[1.0, 0.0, 0.0, 0.0]), &[PI / 3.0], &cfg, 1e-8).unwrap();
        assert!(r.passed, "{r:?}");

        let l = linear_translation();
        let r = check_vertical_ad_invariance(&l, &pt(&[0.3, 0.0, -1.0, 2.0]), &[5.0], &cfg, 1e-12).unwrap();
        assert_eq!(r.max_residual, 0.0);

        // a horizontal vector standing in for the vertical basis
        let sp = split_tangent(&s, &pt(&[1.0, 0.0, 0.0, 0.0]), &cfg).unwrap();
        let d = distance_to_span(&sp.vertical[0], &sp.horizontal[..1], &sp.metric);
        assert!(d > 0.5);
    }

    #[test]
    fn hopf_reduced_structures_at_the_pole_and_at_one() {
        let cfg = FdConfig::default();
        let s = hopf();
        let w2 = standard_symplectic(2);
        let i2 = DMatrix::identity(2, 2);
        assert!(close(&reduced_metric(&s, &pt(&[0.0, 0.0]), &cfg).unwrap(), &i2, 1e-6));
        assert!(close(&reduced_metric(&s, &pt(&[1.0, 0.0]), &cfg).unwrap(), &(&i2 * 0.25), 1e-5));
        assert!(close(&reduced_symplectic(&s, &pt(&[0.0, 0.0]), &cfg).unwrap(), &w2, 1e-6));
        assert!(close(&reduced_symplectic(&s, &pt(&[1.0, 0.0]), &cfg).unwrap(), &(&w2 * 0.25), 1e-5));
        let j = reduced_acs(&s, &pt(&[0.0, 0.0]), &cfg).unwrap();
        assert!(close(&j.matrix, &standard_acs(2), 1e-6));
        assert!(!j.vertical_leak);
    }

    #[test]
    fn linear_reduced_structures_are_flat() {
        let cfg = FdConfig::default();
        let l = linear_translation();
        let x = pt(&[0.4, -0.9]);
        assert!(close(&reduced_metric(&l, &x, &cfg).unwrap(), &DMatrix::identity(2, 2), 1e-10));
        assert!(close(&reduced_symplectic(&l, &x, &cfg).unwrap(), &standard_symplectic(2), 1e-10));
        assert!(close(&reduced_acs(&l, &x, &cfg).unwrap().matrix, &standard_acs(2), 1e-10));
    }

    #[test]
    fn skewed_metric_keeps_j_but_stretches_h() {
        let cfg = FdConfig::default();
        let s = skewed_metric_hopf();
        let r = reduced_structures_at(&s, &pt(&[0.0, 0.0]), &[0.0], &cfg).unwrap();
        assert!(close(&r.j_beta, &standard_acs(2), 1e-6));
        assert!(close(&r.h_beta, &(DMatrix::identity(2, 2) * 4.0), 1e-6));
        assert!(close(&r.omega_beta, &standard_symplectic(2), 1e-6));
    }

    #[test]
    fn submersion_reports() {
        let cfg = FdConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = hopf();
        let xs = s.sample_quotient(&mut rng, 20);
        let r = verify_submersion(&s, &xs, &s.fiber_params, &cfg, 1e-6).unwrap();
        assert!(r.passed(), "{:#?}", r.records());

        let l = linear_translation();
        let xs = l.sample_quotient(&mut rng, 5);
        let r = verify_submersion(&l, &xs, &l.fiber_params, &cfg, 1e-10).unwrap();
        assert!(r.passed(), "{:#?}", r.records());

        let bad = noninvariant_metric_hopf();
        let xs = bad.sample_quotient(&mut rng, 5);
        let r = verify_submersion(&bad, &xs, &bad.fiber_params, &cfg, 1e-5).unwrap();
        assert!(r.fiber_independence.max_residual > 1e-3);
        assert!(!r.passed());
    }

    #[test]
    fn reduction_identity_reports() {
        let cfg = FdConfig::default();
        for (s, tol) in [(hopf(), 1e-6), (linear_translation(), 1e-10)] {
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let r = verify_reduction_identity(&s, &mut rng, 50, &cfg, tol).unwrap();
            assert!(r.passed(), "{}: {:#?}", s.name, r.records());
        }
    }

    #[test]
    fn main_theorem_branches() {
        let cfg = FdConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = hopf();
        let xs = s.sample_quotient(&mut rng, 10);
        let r = verify_main_theorem(&s, &xs, &s.fiber_params, &cfg, 1e-6).unwrap();
        assert!(r.iff_holds && r.positive_branch && !r.hypothesis_violation, "{r:#?}");
        for smp in &r.samples {
            assert!(smp.acm_residual < 1e-6 && smp.compat_residual < 1e-6 && smp.acs_residual < 1e-6);
        }

        let l = linear_translation();
        let r = verify_main_theorem(&l, &[pt(&[0.2, 0.7])], &l.fiber_params, &cfg, 1e-10).unwrap();
        assert!(r.iff_holds && r.positive_branch);

        let k = skewed_metric_hopf();
        let r = verify_main_theorem(&k, &[ChartPoint::origin(2)], &k.fiber_params, &cfg, 1e-5).unwrap();
        assert!((r.samples[0].compat_residual - 3.0).abs() < 1e-6);
        assert!(r.hypothesis_violation);
        assert!(!r.iff_holds);
    }

    #[test]
    fn zero_dimensional_quotient() {
        let cfg = FdConfig::default();
        let s = builtin("euclidean_r2n").unwrap();
        let x = ChartPoint::origin(0);
        assert_eq!(reduced_metric(&s, &x, &cfg).unwrap().shape(), (0, 0));
        let r = verify_main_theorem(&s, &[x], &s.fiber_params, &cfg, 1e-8).unwrap();
        assert!(r.iff_holds);
    }

    #[test]
    fn validation_warns_on_quotient_dimension() {
        let mut s = hopf();
        assert!(s.validate().unwrap().is_empty());
        s.quotient_dim = 3;
        s.section = SectionMap::new(3, 4, |w| vec![1.0, 0.0, w[0], w[1]]);
        assert_eq!(s.validate().unwrap().len(), 1);
    }

    #[test]
    fn section_off_level_is_reported() {
        let mut s = hopf();
        s.section = SectionMap::new(2, 4, |w| vec![2.0, 0.0, w[0], w[1]]);
        assert!(matches!(
            reduced_metric(&s, &ChartPoint::origin(2), &FdConfig::default()),
            Err(Error::SectionNotOnLevel { .. })
        ));
    }
}
