//! Numerical verification of symplectic reduction with compatible almost
//! complex structures.

pub mod action;
pub mod error;
pub mod geom;
pub mod holomorphy;
pub mod reduction;
pub mod report;
pub mod structures;

pub use error::{Error, ParseError, Result};
pub use geom::{ChartPoint, FdConfig, TangentVector, TensorFieldSpec};
pub mod scenarios;
pub mod cli;

// The guide's snippets run as doctests so they cannot drift from the API.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/structures.md")]
    pub struct Structures;
    #[doc = include_str!("../../../book/src/actions.md")]
    pub struct Actions;
    #[doc = include_str!("../../../book/src/reduction.md")]
    pub struct Reduction;
    #[doc = include_str!("../../../book/src/scenario-format.md")]
    pub struct ScenarioFormat;
    #[doc = include_str!("../../../book/src/cli.md")]
    pub struct Cli;
}
