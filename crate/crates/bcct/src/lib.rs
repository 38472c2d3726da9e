pub mod boundary_calculus;
pub mod circle_sets;
pub mod cutoff;
pub mod dbr;
pub mod error;
pub mod factors;
pub mod fixtures;
pub mod spaces;
pub mod transforms;

pub use error::{Error, Result};
