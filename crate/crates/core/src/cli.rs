//! Running verification suites on a scenario and assembling the report.

use std::fmt;
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::action::{
    check_field_invariance, check_identity_axiom, check_isometry, check_momentum_invariance, check_symplectomorphism,
    momentum_residual,
};
use crate::error::{Error, Result};
use crate::geom::{ChartPoint, FdConfig};
use crate::holomorphy::{almost_complex_residual, cauchy_riemann_residual, ChartedMap};
use crate::reduction::{
    check_vertical_ad_invariance, verify_main_theorem, verify_reduction_identity, verify_submersion, ReductionScenario,
};
use crate::report::{CheckRecord, ResidualTracker, StructureCheckResult, SuiteReport, VerificationReport};
use crate::scenarios::resolve;
use crate::structures::{check_acs, check_closed, check_compatibility, check_metric, check_symplectic_pointwise};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Suite {
    Structures,
    Action,
    Reduction,
    MainTheorem,
    Holomorphy,
}

impl Suite {
    /// Execution order.
    pub const ALL: [Suite; 5] = [
        Suite::Structures,
        Suite::Action,
        Suite::Reduction,
        Suite::MainTheorem,
        Suite::Holomorphy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Structures => "structures",
            Suite::Action => "action",
            Suite::Reduction => "reduction",
            Suite::MainTheorem => "main-theorem",
            Suite::Holomorphy => "holomorphy",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| format!("unknown suite `{s}` (expected one of: structures, action, reduction, main-theorem, holomorphy)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Built-in name or path to a scenario file.
    pub scenario: String,
    pub suites: Vec<Suite>,
    pub seed: u64,
    pub samples: usize,
    /// `(name, value)` with name one of `constraint`, `geometric`,
    /// `algebraic`, `hypothesis`, `rank`.
    pub tolerances: Vec<(String, f64)>,
    pub fd: FdConfig,
}

impl RunConfig {
    pub fn new(scenario: impl Into<String>) -> Self {
        RunConfig {
            scenario: scenario.into(),
            suites: Suite::ALL.to_vec(),
            seed: 1,
            samples: 20,
            tolerances: Vec::new(),
            fd: FdConfig::default(),
        }
    }
}

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

fn apply_overrides(scen: &mut ReductionScenario, overrides: &[(String, f64)]) -> Result<()> {
    for (name, value) in overrides {
        if !(value.is_finite() && *value > 0.0) {
            return Err(Error::Validation(format!("tolerance {name} must be positive, got {value}")));
        }
        let t = &mut scen.tolerances;
        let slot = match name.as_str() {
            "constraint" => &mut t.constraint,
            "geometric" => &mut t.geometric,
            "algebraic" => &mut t.algebraic,
            "hypothesis" => &mut t.hypothesis,
            "rank" => &mut t.rank,
            _ => return Err(Error::Validation(format!("unknown tolerance `{name}`"))),
        };
        *slot = *value;
    }
    Ok(())
}

/// Quotient samples, their level points and one random group element each.
struct Samples {
    quotient: Vec<ChartPoint>,
    level: Vec<ChartPoint>,
    params: Vec<Vec<f64>>,
}

fn draw_samples(scen: &ReductionScenario, seed: u64, count: usize) -> Result<Samples> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut quotient = scen.sample_points.clone();
    quotient.extend(scen.sample_quotient(&mut rng, count));
    let level = quotient.iter().map(|x| scen.section_point(x)).collect::<Result<Vec<_>>>()?;
    let params = quotient.iter().map(|_| scen.sample_group_param(&mut rng)).collect();
    Ok(Samples { quotient, level, params })
}

fn record(result: Result<StructureCheckResult>, name: &str, anchor: &str, tol: f64) -> CheckRecord {
    match result {
        Ok(r) => CheckRecord::from_result(r, anchor),
        Err(e) => CheckRecord::errored(name, anchor, tol, &e),
    }
}

fn structures_suite(scen: &ReductionScenario, s: &Samples, fd: &FdConfig) -> SuiteReport {
    let t = scen.tolerances;
    let pts = &s.level;
    let triple = scen.triple();
    SuiteReport::new(
        Suite::Structures.name(),
        vec![
            record(check_metric(&scen.metric, pts, t.algebraic), "metric", "g symmetric positive definite", t.algebraic),
            record(
                check_symplectic_pointwise(&scen.omega, pts, t.algebraic),
                "symplectic",
                "omega antisymmetric nondegenerate",
                t.algebraic,
            ),
            record(check_closed(&scen.omega, pts, fd, t.geometric), "closed", "d omega = 0", t.geometric),
            record(check_acs(&scen.acs, pts, t.algebraic), "acs", "J^2 = -id", t.algebraic),
            record(
                check_compatibility(&triple, pts, t.hypothesis),
                "compatibility",
                "omega(u, J v) = g(u, v)",
                t.hypothesis,
            ),
        ],
    )
}

fn action_suite(scen: &ReductionScenario, s: &Samples, fd: &FdConfig) -> SuiteReport {
    let t = scen.tolerances;
    let (pts, params) = (&s.level, &scen.fiber_params);
    let a = &scen.action;
    let transport = (|| {
        let mut tr = ResidualTracker::new("pushforward of vertical is vertical", t.algebraic);
        for (m, p) in pts.iter().zip(&s.params) {
            let r = check_vertical_ad_invariance(scen, m, p, fd, t.algebraic)?;
            tr.record(r.max_residual, m);
        }
        Ok(tr.finish())
    })();
    let invariance = record(
        check_momentum_invariance(a, &scen.mu, params, pts, t.constraint),
        "momentum invariance",
        "mu(Phi_a m) = Ad*_a mu(m)",
        t.constraint,
    );
    SuiteReport::new(
        Suite::Action.name(),
        vec![
            record(check_identity_axiom(a, pts, t.algebraic), "identity", "Phi_e = id", t.algebraic),
            record(
                check_isometry(a, &scen.metric, params, pts, fd, t.hypothesis),
                "isometry",
                "Phi_a* g = g",
                t.hypothesis,
            ),
            record(
                check_symplectomorphism(a, &scen.omega, params, pts, fd, t.hypothesis),
                "symplectomorphism",
                "Phi_a* omega = omega",
                t.hypothesis,
            ),
            record(
                momentum_residual(a, &scen.mu, &scen.omega, pts, fd, t.hypothesis),
                "momentum",
                "omega(xi_M, .) = d mu_xi",
                t.hypothesis,
            ),
            invariance,
            record(
                check_field_invariance(&scen.acs, a, params, pts, fd, t.hypothesis),
                "J invariance",
                "Phi_a* J = J Phi_a*",
                t.hypothesis,
            ),
            record(transport, "vertical transport", "(Phi_a)_* xi_M(m) = (Ad_a xi)_M(Phi_a m)", t.algebraic),
        ],
    )
}

fn reduction_suite(scen: &ReductionScenario, s: &Samples, seed: u64, fd: &FdConfig) -> SuiteReport {
    let t = scen.tolerances;
    let mut checks = match verify_submersion(scen, &s.quotient, &scen.fiber_params, fd, t.geometric) {
        Ok(r) => r.records(),
        Err(e) => vec![CheckRecord::errored(
            "riemannian submersion",
            "pi_beta is a Riemannian submersion",
            t.geometric,
            &e,
        )],
    };
    // a separate stream so adding suites never shifts these samples
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    match verify_reduction_identity(scen, &mut rng, s.quotient.len(), fd, t.geometric) {
        Ok(r) => checks.extend(r.records()),
        Err(e) => checks.push(CheckRecord::errored(
            "reduced symplectic identity",
            "pi_beta* omega_beta = i_beta* omega",
            t.geometric,
            &e,
        )),
    }
    SuiteReport::new(Suite::Reduction.name(), checks)
}

fn main_theorem_suite(scen: &ReductionScenario, s: &Samples, fd: &FdConfig) -> SuiteReport {
    let tol = scen.tolerances.geometric;
    let checks = match verify_main_theorem(scen, &s.quotient, &scen.fiber_params, fd, tol) {
        Ok(r) => r.records(),
        Err(e) => vec![CheckRecord::errored(
            "main theorem equivalence",
            "omega_beta = g_beta(J_beta ., .) iff pi is an almost complex mapping",
            tol,
            &e,
        )],
    };
    SuiteReport::new(Suite::MainTheorem.name(), checks)
}

fn holomorphy_suite(scen: &ReductionScenario, s: &Samples, fd: &FdConfig) -> SuiteReport {
    let t = scen.tolerances;
    let n = scen.chart_dim;
    let mut acm = ResidualTracker::new("action is almost complex", t.hypothesis);
    let mut cr = ResidualTracker::new("Cauchy-Riemann equations", t.hypothesis);
    let mut standard = true;
    let mut failure = None;
    for (m, a) in s.level.iter().zip(&s.params) {
        let action = scen.action.clone();
        let a2 = a.clone();
        let map = match ChartedMap::new(scen.acs.clone(), scen.acs.clone(), move |p| action.apply(&a2, p)) {
            Ok(map) => map,
            Err(e) => {
                failure = Some(e);
                break;
            }
        };
        match almost_complex_residual(&map, m, fd) {
            Ok(r) => acm.record(r, m),
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
        if standard {
            match cauchy_riemann_residual(&map, m, fd) {
                Ok(r) => cr.record(r, m),
                Err(Error::NotStandardStructure) => standard = false,
                Err(e) => {
                    failure = Some(e);
                    break;
                }
            }
        }
    }
    let acm_anchor = "phi_* o J_1 = J_2 o phi_*";
    let cr_anchor = "du/dx = dv/dy, dv/dx = -du/dy";
    let checks = match failure {
        Some(e) => vec![CheckRecord::errored("action is almost complex", acm_anchor, t.hypothesis, &e)],
        None if standard => vec![
            CheckRecord::from_result(acm.finish(), acm_anchor),
            CheckRecord::from_result(cr.finish(), cr_anchor),
        ],
        None => {
            let skipped = CheckRecord {
                name: "Cauchy-Riemann equations".into(),
                anchor: cr_anchor.into(),
                max_residual: 0.0,
                tolerance: t.hypothesis,
                passed: true,
                worst_point: Vec::new(),
                samples: 0,
                note: Some(format!("skipped: J is not the standard structure on R^{n}")),
            };
            vec![CheckRecord::from_result(acm.finish(), acm_anchor), skipped]
        }
    };
    SuiteReport::new(Suite::Holomorphy.name(), checks)
}

/// Run the configured suites. Errors here mean the run could not start
/// (unknown scenario, parse or validation failure); failed checks are
/// reported inside the returned report.
pub fn run(cfg: &RunConfig) -> Result<VerificationReport> {
    if cfg.suites.is_empty() {
        return Err(Error::Validation("at least one suite is required".into()));
    }
    if cfg.samples == 0 {
        return Err(Error::Validation("samples must be at least 1".into()));
    }
    let mut scen = resolve(&cfg.scenario)?;
    apply_overrides(&mut scen, &cfg.tolerances)?;
    let warnings = scen.validate()?;
    let samples = draw_samples(&scen, cfg.seed, cfg.samples)?;
    let mut suites = Vec::new();
    for suite in Suite::ALL.into_iter().filter(|s| cfg.suites.contains(s)) {
        suites.push(match suite {
            Suite::Structures => structures_suite(&scen, &samples, &cfg.fd),
            Suite::Action => action_suite(&scen, &samples, &cfg.fd),
            Suite::Reduction => reduction_suite(&scen, &samples, cfg.seed, &cfg.fd),
            Suite::MainTheorem => main_theorem_suite(&scen, &samples, &cfg.fd),
            Suite::Holomorphy => holomorphy_suite(&scen, &samples, &cfg.fd),
        });
    }
    let passed = suites.iter().all(|s| s.passed);
    Ok(VerificationReport {
        scenario: scen.name.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed,
        samples: samples.quotient.len(),
        generated_at_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        warnings,
        suites,
        passed,
    })
}

pub fn exit_code(report: &VerificationReport) -> i32 {
    if report.passed {
        EXIT_PASS
    } else {
        EXIT_CHECK_FAILED
    }
}

pub fn render(report: &VerificationReport, format: Format) -> String {
    match format {
        Format::Text => report.to_text(),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
    }
}
