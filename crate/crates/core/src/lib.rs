//! Invariant measures, recurrence and Green functions for Markov chains on
//! rooted trees whose jumps go to the parent or into the current subtree.

pub mod classify;
pub mod cli;
pub mod contfrac;
pub mod error;
pub mod fixtures;
pub mod gw;
pub mod invariant;
pub mod io;
pub mod kernel;
pub mod linalg;
pub mod measure;
pub mod oracle;
pub mod scalar;
pub mod selftest;
pub mod series;
pub mod sternbrocot;
pub mod tree;

pub use error::{Error, Result};
pub use kernel::Kernel;
pub use measure::Measure;
pub use scalar::{Scalar, Q};
pub use tree::{FiniteTree, NodeWord, Ray, TreeSource, Truncation};
