//! Continuous Q1 finite elements on structured meshes.

mod assembly;
mod norms;
mod quadrature;
mod space;
mod sparse;

pub use assembly::{
    assemble_load, assemble_mass, assemble_stiffness, assemble_stiffness_plus_mass,
    assemble_uniform, element_mass, element_stiffness, DirichletValues,
};
pub use norms::{error_norms, fe_norms, ErrorNorms, FieldFn, ScalarField, Zero};
pub use quadrature::{gauss_legendre_unit, QuadratureRule};
pub use space::{shape_gradients, shape_values, FeFunction, FeSpace};
pub use sparse::CsrMatrix;
