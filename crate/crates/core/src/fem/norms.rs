use super::quadrature::QuadratureRule;
use super::space::{shape_gradients, shape_values, FeFunction};
use crate::mesh::Point;

/// A scalar field with a gradient, used as the reference in error norms.
pub trait ScalarField: Sync {
    fn value(&self, p: &Point) -> f64;
    fn gradient(&self, p: &Point) -> Point;
}

/// Adapter turning two closures into a [`ScalarField`].
pub struct FieldFn<V, G> {
    pub value: V,
    pub gradient: G,
}

impl<V, G> ScalarField for FieldFn<V, G>
where
    V: Fn(&Point) -> f64 + Sync,
    G: Fn(&Point) -> Point + Sync,
{
    fn value(&self, p: &Point) -> f64 {
        (self.value)(p)
    }

    fn gradient(&self, p: &Point) -> Point {
        (self.gradient)(p)
    }
}

/// The zero field.
pub struct Zero;

impl ScalarField for Zero {
    fn value(&self, _: &Point) -> f64 {
        0.0
    }

    fn gradient(&self, _: &Point) -> Point {
        [0.0; 3]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    pub l2: f64,
    pub h1_semi: f64,
}

/// `L2` and `H1`-seminorm of `u_h - exact`, integrated cell by cell with the
/// 3-point tensor Gauss rule.
pub fn error_norms(u: &FeFunction, exact: &dyn ScalarField) -> ErrorNorms {
    let space = u.space();
    let mesh = space.mesh();
    let dim = mesh.dim();
    let q = QuadratureRule::tensor_gauss(dim, 3);
    let k = space.dofs_per_cell();
    let vol = mesh.cell_volume();
    let h: Vec<f64> = (0..dim).map(|d| mesh.h_axis(d)).collect();

    let tables: Vec<([f64; 8], [Point; 8])> = q
        .points()
        .iter()
        .map(|t| {
            let mut v = [0.0; 8];
            let mut g = [[0.0; 3]; 8];
            shape_values(dim, t, &mut v);
            shape_gradients(dim, t, &mut g);
            (v, g)
        })
        .collect();

    let coeffs = u.coeffs();
    let mut l2 = 0.0;
    let mut h1 = 0.0;
    let mut dofs = [0usize; 8];
    for c in 0..mesh.num_cells() {
        let cell = mesh.cell_from_linear(c);
        let lo = mesh.cell_lower_corner(cell);
        space.cell_dofs(cell, &mut dofs);
        let mut cell_l2 = 0.0;
        let mut cell_h1 = 0.0;
        for (qi, (t, w)) in q.iter().enumerate() {
            let (vals, grads) = &tables[qi];
            let mut x = [0.0; 3];
            for d in 0..dim {
                x[d] = lo[d] + t[d] * h[d];
            }
            let mut uh = 0.0;
            let mut guh = [0.0; 3];
            for a in 0..k {
                let ca = coeffs[dofs[a]];
                uh += vals[a] * ca;
                for d in 0..dim {
                    guh[d] += grads[a][d] / h[d] * ca;
                }
            }
            let e = uh - exact.value(&x);
            let ge = exact.gradient(&x);
            cell_l2 += w * e * e;
            cell_h1 += w * (0..dim).map(|d| (guh[d] - ge[d]).powi(2)).sum::<f64>();
        }
        l2 += vol * cell_l2;
        h1 += vol * cell_h1;
    }
    ErrorNorms {
        l2: l2.sqrt(),
        h1_semi: h1.sqrt(),
    }
}

/// Norms of a finite element function itself.
pub fn fe_norms(u: &FeFunction) -> ErrorNorms {
    error_norms(u, &Zero)
}
