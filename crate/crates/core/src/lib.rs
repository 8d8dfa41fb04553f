//! Equivariant Lefschetz numbers of the De Rham complex on model manifolds.

pub mod checks;
pub mod complexes;
pub mod error;
pub mod geometry;
pub mod lefschetz;
pub mod numerics;
pub mod oscillatory;
pub mod parametrix;
pub mod spectral;

pub use error::{Error, Result};
