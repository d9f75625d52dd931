//! Secure constructive-interference precoding with distributed antenna
//! selection.
//!
//! [`scenario`] draws deployments and channels, [`ci`] holds the wedge
//! geometry, [`robust`] compiles uncertain wedge constraints into cone
//! blocks, [`conic`] is the program model and solver backend, [`precoder`]
//! builds and solves the four variants with antenna selection, [`oracle`]
//! checks solutions independently and [`harness`] runs experiments and
//! writes CSV files. The guide in `book/` walks through each piece.

pub mod ci;
pub mod conic;
pub mod config;
pub mod error;
pub mod harness;
pub mod robust;
pub mod scenario;
pub mod oracle;
pub mod precoder;

pub use config::ScenarioConfig;
pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/ci-geometry.md")]
    pub struct CiGeometry;
    #[doc = include_str!("../../../book/src/robust-constraints.md")]
    pub struct RobustConstraints;
    #[doc = include_str!("../../../book/src/programs.md")]
    pub struct Programs;
    #[doc = include_str!("../../../book/src/selection.md")]
    pub struct Selection;
    #[doc = include_str!("../../../book/src/oracles.md")]
    pub struct Oracles;
    #[doc = include_str!("../../../book/src/experiments.md")]
    pub struct Experiments;
}
