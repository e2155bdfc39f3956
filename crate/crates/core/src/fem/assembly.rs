//! Stiffness, mass and load assembly on the structured Q1 space, plus
//! symmetric elimination of Dirichlet data on the outer boundary.

use nalgebra::DMatrix;

use super::quadrature::QuadratureRule;
use super::space::{shape_gradients, shape_values, FeSpace};
use super::sparse::CsrMatrix;
use crate::mesh::Point;

/// Element stiffness matrix of an axis-aligned cell with edges `h`.
pub fn element_stiffness(dim: usize, h: &Point) -> DMatrix<f64> {
    let q = QuadratureRule::tensor_gauss(dim, 2);
    let k = 1 << dim;
    let vol: f64 = h[..dim].iter().product();
    let mut m = DMatrix::zeros(k, k);
    let mut g = [[0.0; 3]; 8];
    for (t, w) in q.iter() {
        shape_gradients(dim, t, &mut g);
        for a in 0..k {
            for b in 0..k {
                let mut s = 0.0;
                for d in 0..dim {
                    s += g[a][d] * g[b][d] / (h[d] * h[d]);
                }
                m[(a, b)] += w * vol * s;
            }
        }
    }
    m
}

pub fn element_mass(dim: usize, h: &Point) -> DMatrix<f64> {
    let q = QuadratureRule::tensor_gauss(dim, 2);
    let k = 1 << dim;
    let vol: f64 = h[..dim].iter().product();
    let mut m = DMatrix::zeros(k, k);
    let mut v = [0.0; 8];
    for (t, w) in q.iter() {
        shape_values(dim, t, &mut v);
        for a in 0..k {
            for b in 0..k {
                m[(a, b)] += w * vol * v[a] * v[b];
            }
        }
    }
    m
}

/// Assemble the global matrix of a bilinear form whose element matrix is the
/// same on every cell. Each row gathers contributions from its adjacent cells
/// in ascending cell order.
pub fn assemble_uniform(space: &FeSpace, element: &DMatrix<f64>) -> CsrMatrix {
    let mesh = space.mesh();
    let dim = mesh.dim();
    let nv = mesh.vertices_per_side();
    let nc = mesh.cells_per_side();
    let n = space.num_dofs();

    let mut row_ptr = Vec::with_capacity(n + 1);
    row_ptr.push(0usize);
    let mut col_idx = Vec::with_capacity(n * 3usize.pow(dim as u32));
    let mut values = Vec::with_capacity(n * 3usize.pow(dim as u32));

    let offsets: Vec<[isize; 3]> = (0..3usize.pow(dim as u32))
        .map(|k| {
            let mut o = [0isize; 3];
            let mut rest = k;
            for slot in o.iter_mut().take(dim) {
                *slot = (rest % 3) as isize - 1;
                rest /= 3;
            }
            o
        })
        .collect();

    for v in 0..n {
        let idx = mesh.vertex_multi_index(v);
        for off in &offsets {
            let mut w = [0usize; 3];
            let mut inside = true;
            for d in 0..dim {
                let c = idx[d] as isize + off[d];
                if c < 0 || c >= nv as isize {
                    inside = false;
                    break;
                }
                w[d] = c as usize;
            }
            if !inside {
                continue;
            }
            // Cells containing both v and w: along each axis, if the offset is
            // nonzero the cell is fixed, otherwise both neighbours qualify.
            let mut value = 0.0;
            let mut any = false;
            for s in 0..1usize << dim {
                let mut cell = [0usize; 3];
                let mut ok = true;
                let mut la = 0;
                let mut lb = 0;
                for d in 0..dim {
                    let c = idx[d] as isize - ((s >> d) & 1) as isize;
                    if c < 0 || c >= nc as isize {
                        ok = false;
                        break;
                    }
                    let c = c as usize;
                    let bw = w[d] as isize - c as isize;
                    if !(0..=1).contains(&bw) {
                        ok = false;
                        break;
                    }
                    cell[d] = c;
                    la |= (idx[d] - c) << d;
                    lb |= (bw as usize) << d;
                }
                if ok {
                    value += element[(la, lb)];
                    any = true;
                }
            }
            if any {
                col_idx.push(mesh.vertex_index(w));
                values.push(value);
            }
        }
        row_ptr.push(col_idx.len());
    }
    let mut m = CsrMatrix::from_parts(n, n, row_ptr, col_idx, values, false)
        .expect("structured pattern is well formed");
    m.set_symmetric_flag(true);
    m
}

/// Discrete Laplacian `(grad u, grad v)` before boundary conditions.
pub fn assemble_stiffness(space: &FeSpace) -> CsrMatrix {
    let h = cell_edges(space);
    assemble_uniform(space, &element_stiffness(space.dim(), &h))
}

pub fn assemble_mass(space: &FeSpace) -> CsrMatrix {
    let h = cell_edges(space);
    assemble_uniform(space, &element_mass(space.dim(), &h))
}

/// `stiffness_coeff * K + mass_coeff * M`.
pub fn assemble_stiffness_plus_mass(
    space: &FeSpace,
    stiffness_coeff: f64,
    mass_coeff: f64,
) -> CsrMatrix {
    let h = cell_edges(space);
    let dim = space.dim();
    let e = element_stiffness(dim, &h) * stiffness_coeff + element_mass(dim, &h) * mass_coeff;
    assemble_uniform(space, &e)
}

fn cell_edges(space: &FeSpace) -> Point {
    let mesh = space.mesh();
    let mut h = [0.0; 3];
    for (d, hd) in h.iter_mut().enumerate().take(mesh.dim()) {
        *hd = mesh.h_axis(d);
    }
    h
}

/// `F_j = (f, psi_j)` with the 2-point tensor Gauss rule.
pub fn assemble_load(space: &FeSpace, f: impl Fn(&Point) -> f64) -> Vec<f64> {
    let mesh = space.mesh();
    let dim = mesh.dim();
    let q = QuadratureRule::tensor_gauss(dim, 2);
    let k = space.dofs_per_cell();
    let vol = mesh.cell_volume();
    let h: Vec<f64> = (0..dim).map(|d| mesh.h_axis(d)).collect();

    // Shape values at the quadrature points are the same on every cell.
    let shapes: Vec<[f64; 8]> = q
        .points()
        .iter()
        .map(|t| {
            let mut v = [0.0; 8];
            shape_values(dim, t, &mut v);
            v
        })
        .collect();

    let mut load = vec![0.0; space.num_dofs()];
    let mut dofs = [0usize; 8];
    for c in 0..mesh.num_cells() {
        let cell = mesh.cell_from_linear(c);
        let lo = mesh.cell_lower_corner(cell);
        space.cell_dofs(cell, &mut dofs);
        for (qi, (t, w)) in q.iter().enumerate() {
            let mut x = [0.0; 3];
            for d in 0..dim {
                x[d] = lo[d] + t[d] * h[d];
            }
            let fx = f(&x);
            if fx == 0.0 {
                continue;
            }
            for a in 0..k {
                load[dofs[a]] += w * vol * fx * shapes[qi][a];
            }
        }
    }
    load
}

/// Values prescribed on the outer boundary, indexed by dof.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletValues {
    fixed: Vec<bool>,
    values: Vec<f64>,
}

impl DirichletValues {
    /// Interpolate `g` at every vertex on the box boundary.
    pub fn on_boundary(space: &FeSpace, g: impl Fn(&Point) -> f64) -> Self {
        let mesh = space.mesh();
        let n = space.num_dofs();
        let mut fixed = vec![false; n];
        let mut values = vec![0.0; n];
        for v in 0..n {
            if mesh.is_boundary_vertex(v) {
                fixed[v] = true;
                values[v] = g(&mesh.vertex_coords(v));
            }
        }
        Self { fixed, values }
    }

    pub fn none(n: usize) -> Self {
        Self {
            fixed: vec![false; n],
            values: vec![0.0; n],
        }
    }

    pub fn is_fixed(&self, dof: usize) -> bool {
        self.fixed[dof]
    }

    pub fn value(&self, dof: usize) -> f64 {
        self.values[dof]
    }

    pub fn mask(&self) -> &[bool] {
        &self.fixed
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.fixed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixed.is_empty()
    }

    pub fn num_fixed(&self) -> usize {
        self.fixed.iter().filter(|&&f| f).count()
    }

    /// Symmetric elimination: fixed rows and columns are zeroed, the diagonal
    /// set to one and the right-hand side shifted by the known values.
    pub fn apply(&self, matrix: &mut CsrMatrix, rhs: &mut [f64]) {
        assert_eq!(matrix.nrows(), self.fixed.len());
        for i in 0..matrix.nrows() {
            let (cols, vals) = matrix.row_mut(i);
            if self.fixed[i] {
                for (&c, v) in cols.iter().zip(vals.iter_mut()) {
                    *v = if c == i { 1.0 } else { 0.0 };
                }
                rhs[i] = self.values[i];
            } else {
                for (&c, v) in cols.iter().zip(vals.iter_mut()) {
                    if self.fixed[c] {
                        rhs[i] -= *v * self.values[c];
                        *v = 0.0;
                    }
                }
            }
        }
    }

    /// Eliminate fixed columns from a rectangular coupling matrix, moving
    /// their contribution into `rhs` (one entry per matrix row).
    pub fn apply_to_columns(&self, matrix: &mut CsrMatrix, rhs: &mut [f64]) {
        for i in 0..matrix.nrows() {
            let (cols, vals) = matrix.row_mut(i);
            for (&c, v) in cols.iter().zip(vals.iter_mut()) {
                if self.fixed[c] {
                    rhs[i] -= *v * self.values[c];
                    *v = 0.0;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{BoxDomain, StructuredMesh};

    fn space(dim: usize, level: u32) -> FeSpace {
        FeSpace::new(StructuredMesh::new(BoxDomain::symmetric_unit(dim).unwrap(), level).unwrap())
    }

    #[test]
    fn q1_element_matrix_2d() {
        for h in [0.1, 1.0, 7.0] {
            let k = element_stiffness(2, &[h, h, 0.0]);
            for a in 0..4 {
                assert!((k[(a, a)] - 2.0 / 3.0).abs() < 1e-14);
            }
            // local 0=(0,0) 1=(1,0) 2=(0,1) 3=(1,1)
            assert!((k[(0, 1)] + 1.0 / 6.0).abs() < 1e-14);
            assert!((k[(0, 2)] + 1.0 / 6.0).abs() < 1e-14);
            assert!((k[(0, 3)] + 1.0 / 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn single_cell_stiffness_matches_element() {
        let s = space(2, 0);
        let k = assemble_stiffness(&s);
        let e = element_stiffness(2, &[2.0, 2.0, 0.0]);
        assert!((k.to_dense() - e).abs().max() < 1e-15);
    }

    #[test]
    fn rows_sum_to_zero_and_symmetric() {
        for dim in 2..=3 {
            let s = space(dim, 2);
            let k = assemble_stiffness(&s);
            assert!(k.is_symmetric());
            let ones = vec![1.0; s.num_dofs()];
            assert!(k.mul_vec(&ones).iter().all(|r| r.abs() < 1e-13));
        }
    }

    #[test]
    fn energy_of_linear_field() {
        // Oracle: sum of element energies of the interpolant, cell by cell.
        let s = space(2, 2);
        let u = s.interpolate(|p| p[0]);
        let k = assemble_stiffness(&s);
        let e = element_stiffness(2, &[0.5, 0.5, 0.0]);
        let mesh = s.mesh();
        let mut direct = 0.0;
        let mut dofs = [0; 8];
        for c in 0..mesh.num_cells() {
            s.cell_dofs(mesh.cell_from_linear(c), &mut dofs);
            for a in 0..4 {
                for b in 0..4 {
                    direct += u.coeffs()[dofs[a]] * e[(a, b)] * u.coeffs()[dofs[b]];
                }
            }
        }
        let q = k.quadratic_form(u.coeffs());
        assert!((direct - 4.0).abs() < 1e-12);
        assert!((q - direct).abs() < 1e-12);
    }

    #[test]
    fn mass_total_is_volume() {
        let s = space(3, 2);
        let m = assemble_mass(&s);
        let ones = vec![1.0; s.num_dofs()];
        assert!((m.quadratic_form(&ones) - 8.0).abs() < 1e-12);
    }

    #[test]
    fn load_vectors() {
        let s = space(2, 0);
        let f = assemble_load(&s, |_| 1.0);
        for v in f {
            assert!((v - 1.0).abs() < 1e-15); // h^2 / 4 with h = 2
        }
        let s = space(2, 5);
        let f = assemble_load(&s, |_| 1.0);
        assert!((f.iter().sum::<f64>() - 4.0).abs() < 1e-12);
        assert!(assemble_load(&s, |_| 0.0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dirichlet_elimination() {
        let s = space(2, 3);
        let mut k = assemble_stiffness(&s);
        let mut rhs = vec![0.0; s.num_dofs()];
        let g = |p: &Point| -(p[0] * p[0] + p[1] * p[1]).ln() / 2.0;
        let bc = DirichletValues::on_boundary(&s, g);
        bc.apply(&mut k, &mut rhs);
        assert!(k.is_symmetric());
        for v in 0..s.num_dofs() {
            if bc.is_fixed(v) {
                assert_eq!(k.get(v, v), 1.0);
                assert_eq!(rhs[v], g(&s.dof_coords(v)));
            }
        }
        assert_eq!(bc.num_fixed(), 4 * 8);
    }
}
