//! Branching Brownian motion laboratory: an exact simulator, an F-KPP solver
//! in the moving frame, samplers of the limiting extremal process, and the
//! statistics used to cross-check them.

pub mod error;
pub mod genealogy;
pub mod model;
pub mod rng;
pub mod simulator;
pub mod special;
pub mod moments;
pub mod ensemble;
pub mod fkpp;
pub mod stats;
pub mod extremal;
pub mod config;
pub mod io;
pub mod experiments;

pub use error::{Error, Result};
pub use genealogy::{Fate, GenealogySnapshot, PruningPolicy};
pub use model::{superpose, Direction, Estimate, Normalization, Path, Phi, PointMeasure};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/simulator.md")]
    mod simulator {}
    #[doc = include_str!("../../../book/src/fkpp.md")]
    mod fkpp {}
    #[doc = include_str!("../../../book/src/extremal.md")]
    mod extremal {}
    #[doc = include_str!("../../../book/src/moments_stats.md")]
    mod moments_stats {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/acceptance.md")]
    mod acceptance {}
}
