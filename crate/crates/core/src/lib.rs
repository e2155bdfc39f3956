//! Reduced Lagrange multiplier coupling of a background finite element
//! discretization with thin circular inclusions.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod coupling;
mod error;
pub mod experiments;
pub mod fem;
pub mod full_order;
pub mod io;
pub mod mesh;
pub mod modal;
pub mod solver;

pub use error::{Error, Result};
pub use mesh::{BoxDomain, CellIndex, Point, StructuredMesh};
