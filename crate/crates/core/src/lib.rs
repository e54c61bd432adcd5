//! Exact tools for s-almost t-intersecting families of k-subsets: set
//! primitives, predicates, closed-form bounds, extremal constructions and an
//! exhaustive search engine.

pub mod constructions;
pub mod error;
pub mod formulas;
pub mod predicates;
pub mod search;
pub mod sets;

pub use error::{Error, Result};
pub use sets::{Family, KSubset, Params};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
