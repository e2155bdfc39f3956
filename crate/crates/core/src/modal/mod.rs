//! Inclusions, Fourier modes on their boundaries, and the reduction and
//! extension operators between boundary traces and modal coefficients.

mod basis;
mod inclusion;
mod operators;
mod quadrature;

pub use basis::{ModalBasis, Mode};
pub use inclusion::{validate_inclusions, Axis, Inclusion};
pub use operators::{
    extend_at, modal_extend, modal_project, modal_project_fn, num_multipliers, weighted_averages,
};
pub use quadrature::{AxialMesh, BoundaryPoint, BoundaryQuadrature, QuadratureOptions};
