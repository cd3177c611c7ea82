use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Everything that can go wrong while evaluating fields or running checks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite value encountered in {0}")]
    NonFinite(String),
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        found: usize,
    },
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("matrix is not symmetric positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotSpd { min_eigenvalue: f64 },
    #[error("symplectic structures need an even dimension, got {0}")]
    OddDimension(usize),
    #[error("Gauss-Newton projection did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("level is not a regular value: smallest singular value of the momentum differential is {sigma_min:e}")]
    NotRegularValue { sigma_min: f64 },
    #[error("point is not on the level set (|mu - beta| = {residual:e})")]
    NotOnLevel { residual: f64 },
    #[error("action is not free at the point: smallest generator singular value {sigma_min:e}")]
    ActionNotFree { sigma_min: f64 },
    #[error("infinitesimal generators are not tangent to the level set (|dmu xi| = {residual:e})")]
    GeneratorsNotTangent { residual: f64 },
    #[error("section does not land on the level set at {point:?} (|mu - beta| = {residual:e})")]
    SectionNotOnLevel { point: Vec<f64>, residual: f64 },
    #[error("horizontal lift system is rank deficient (smallest singular value {sigma_min:e})")]
    RankDeficientLift { sigma_min: f64 },
    #[error("momentum equivariance for nonabelian groups needs a coadjoint representation")]
    UnsupportedNonabelian,
    #[error("group action has no quadrature rule (noncompact group?)")]
    NoQuadrature,
    #[error("almost complex structure is not the standard coordinate structure at the point")]
    NotStandardStructure,
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("invalid scenario: {0}")]
    Validation(String),
}

/// Syntax error with a 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub expected: Vec<String>,
    pub found: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at line {}, column {}: ", self.line, self.column)?;
        match self.expected.as_slice() {
            [] => write!(f, "unexpected {}", self.found),
            [one] => write!(f, "expected {one}, found {}", self.found),
            many => write!(f, "expected one of {}, found {}", many.join(", "), self.found),
        }
    }
}
