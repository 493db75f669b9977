//! K-functionals and real interpolation norms for discrete Besov
//! hierarchical sequence spaces on truncated dyadic grids.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod grid;
pub mod interp;
pub mod oracle;
pub mod par;
pub mod solver;
pub mod spaces;

pub use error::{Error, Result};
