//! Spectral controllability tests and finite-rank feedback stabilization
//! for semidiscretized parabolic systems.

pub mod criteria;
pub mod error;
pub mod io;
pub mod models;
pub mod numeric;
pub mod report;
pub mod rectangle;
pub mod riccati;
pub mod schur;
pub mod simulate;
pub mod spectral;
pub mod stabilize;

pub use error::{Error, Result};
