//! Intuitionistic fuzzy metric spaces: t-norm algebra, axiom audits,
//! contraction checks and Picard fixed-point solving.

pub mod contraction;
pub mod error;
pub mod report;
pub mod sampling;
pub mod solver;
pub mod space;
pub mod tnorm;

pub use error::{Error, Result};
