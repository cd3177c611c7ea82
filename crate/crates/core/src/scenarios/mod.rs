//! Built-in scenarios and scenario files.

mod expr;
mod file;

use std::path::Path;

use nalgebra::DMatrix;

pub use expr::{eval_constant, parse_expr, BinOp, Expr, Func};
pub use file::{parse_scenario, ScenarioFile, Value};

use crate::action::{GroupActionSpec, MomentumMapSpec};
use crate::error::{Error, Result};
use crate::geom::{standard_acs, standard_symplectic, ChartPoint, TensorFieldSpec};
use crate::reduction::{default_fiber_params, ReductionScenario, ReductionTolerances, SampleRegion, SectionMap};

pub const BUILTIN_NAMES: [&str; 5] = [
    "euclidean_r2n",
    "hopf",
    "linear_translation",
    "skewed_metric_hopf",
    "noninvariant_metric_hopf",
];

const QUADRATURE_POINTS: usize = 64;

fn half_norm_squared(n: usize) -> TensorFieldSpec {
    TensorFieldSpec::scalar(n, |p| 0.5 * p.iter().map(|x| x * x).sum::<f64>())
}

/// `(1, 0, w) / sqrt(1 + |w|^2)`: a section of `S^{2n-1} -> CP^{n-1}` over the
/// chart `z_1 != 0`, landing on the unit sphere.
fn sphere_section(complex_dim: usize) -> SectionMap {
    let q = 2 * complex_dim - 2;
    SectionMap::new(q, 2 * complex_dim, |w| {
        let s = (1.0 + w.iter().map(|x| x * x).sum::<f64>()).sqrt();
        let mut m = vec![1.0 / s, 0.0];
        m.extend(w.iter().map(|x| x / s));
        m
    })
}

fn circle_scenario(name: &str, complex_dim: usize, metric: TensorFieldSpec) -> ReductionScenario {
    let n = 2 * complex_dim;
    let action = GroupActionSpec::unitary_circle(complex_dim, QUADRATURE_POINTS);
    ReductionScenario {
        name: name.to_string(),
        chart_dim: n,
        omega: TensorFieldSpec::constant(n, standard_symplectic(n)),
        metric,
        acs: TensorFieldSpec::constant(n, standard_acs(n)),
        fiber_params: default_fiber_params(&action),
        action,
        mu: MomentumMapSpec::new(vec![half_norm_squared(n)], vec![0.5]),
        quotient_dim: n - 2,
        section: sphere_section(complex_dim),
        quotient_region: SampleRegion::Ball { radius: 2.0 },
        sample_points: Vec::new(),
        tolerances: ReductionTolerances::default(),
    }
}

/// `C^n` with the diagonal circle action, reduced at `|z| = 1`.
pub fn euclidean_r2n(complex_dim: usize) -> Result<ReductionScenario> {
    if complex_dim == 0 {
        return Err(Error::UnknownScenario("euclidean_r2n:0".into()));
    }
    let n = 2 * complex_dim;
    let name = if complex_dim == 1 {
        "euclidean_r2n".to_string()
    } else {
        format!("euclidean_r2n:{complex_dim}")
    };
    Ok(circle_scenario(&name, complex_dim, TensorFieldSpec::constant(n, DMatrix::identity(n, n))))
}

pub fn hopf() -> ReductionScenario {
    circle_scenario("hopf", 2, TensorFieldSpec::constant(4, DMatrix::identity(4, 4)))
}

/// Hopf data with `g = diag(1, 1, 4, 4)`: still invariant, no longer
/// compatible with `omega` and `J`.
pub fn skewed_metric_hopf() -> ReductionScenario {
    let g = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1.0, 4.0, 4.0]));
    circle_scenario("skewed_metric_hopf", 2, TensorFieldSpec::constant(4, g))
}

/// Hopf data with `g = diag(1 + x2^2, 1, 1, 1)`, which the circle does not
/// preserve.
pub fn noninvariant_metric_hopf() -> ReductionScenario {
    let g = TensorFieldSpec::square(4, |p| {
        let mut g = DMatrix::identity(4, 4);
        g[(0, 0)] = 1.0 + p[1] * p[1];
        g
    });
    circle_scenario("noninvariant_metric_hopf", 2, g)
}

/// `R^4 = T^*R^2` with coordinates `(q1, p1, q2, p2)`, translations in `q1`,
/// `mu = p1`, level `0`. The quotient is the `(q2, p2)` plane.
pub fn linear_translation() -> ReductionScenario {
    let action = GroupActionSpec::translation(4, vec![0]);
    ReductionScenario {
        name: "linear_translation".into(),
        chart_dim: 4,
        omega: TensorFieldSpec::constant(4, standard_symplectic(4)),
        metric: TensorFieldSpec::constant(4, DMatrix::identity(4, 4)),
        acs: TensorFieldSpec::constant(4, standard_acs(4)),
        fiber_params: default_fiber_params(&action),
        action,
        mu: MomentumMapSpec::new(vec![TensorFieldSpec::scalar(4, |p| p[1])], vec![0.0]),
        quotient_dim: 2,
        section: SectionMap::new(2, 4, |w| vec![0.0, 0.0, w[0], w[1]]),
        quotient_region: SampleRegion::Box { lo: -1.0, hi: 1.0 },
        sample_points: Vec::new(),
        tolerances: ReductionTolerances::default(),
    }
}

/// Look up a built-in scenario. `euclidean_r2n:N` selects `C^N`.
pub fn builtin(name: &str) -> Result<ReductionScenario> {
    if let Some(n) = name.strip_prefix("euclidean_r2n:") {
        let n: usize = n.parse().map_err(|_| Error::UnknownScenario(name.to_string()))?;
        return euclidean_r2n(n);
    }
    match name {
        "euclidean_r2n" => euclidean_r2n(1),
        "hopf" => Ok(hopf()),
        "linear_translation" => Ok(linear_translation()),
        "skewed_metric_hopf" => Ok(skewed_metric_hopf()),
        "noninvariant_metric_hopf" => Ok(noninvariant_metric_hopf()),
        _ => Err(Error::UnknownScenario(name.to_string())),
    }
}

/// A built-in name, or else a path to a scenario file.
pub fn resolve(name_or_path: &str) -> Result<ReductionScenario> {
    match builtin(name_or_path) {
        Err(Error::UnknownScenario(_)) if Path::new(name_or_path).is_file() => {
            let text = std::fs::read(name_or_path)
                .map_err(|e| Error::Validation(format!("cannot read {name_or_path}: {e}")))?;
            parse_scenario(&String::from_utf8_lossy(&text))?.compile()
        }
        other => other,
    }
}

/// One point of the level, used as a default probe: `sigma(0)`.
pub fn base_point(scen: &ReductionScenario) -> Result<ChartPoint> {
    scen.section_point(&ChartPoint::origin(scen.quotient_dim))
}
