use crate::error::{Error, Result};
use crate::mesh::{CellIndex, Point, StructuredMesh};

/// Values of the `2^dim` multilinear shape functions at reference point `t`.
pub fn shape_values(dim: usize, t: &Point, out: &mut [f64]) {
    for (a, slot) in out.iter_mut().enumerate().take(1 << dim) {
        let mut v = 1.0;
        for (d, &td) in t.iter().enumerate().take(dim) {
            v *= if (a >> d) & 1 == 1 { td } else { 1.0 - td };
        }
        *slot = v;
    }
}

/// Reference-coordinate gradients of the shape functions at `t`.
pub fn shape_gradients(dim: usize, t: &Point, out: &mut [Point]) {
    for (a, g) in out.iter_mut().enumerate().take(1 << dim) {
        *g = [0.0; 3];
        for (d, gd) in g.iter_mut().enumerate().take(dim) {
            let mut v = if (a >> d) & 1 == 1 { 1.0 } else { -1.0 };
            for (e, &te) in t.iter().enumerate().take(dim) {
                if e != d {
                    v *= if (a >> e) & 1 == 1 { te } else { 1.0 - te };
                }
            }
            *gd = v;
        }
    }
}

/// Continuous Q1 Lagrange space on a structured mesh; one dof per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct FeSpace {
    mesh: StructuredMesh,
}

impl FeSpace {
    pub fn new(mesh: StructuredMesh) -> Self {
        Self { mesh }
    }

    pub fn mesh(&self) -> &StructuredMesh {
        &self.mesh
    }

    pub fn dim(&self) -> usize {
        self.mesh.dim()
    }

    pub fn degree(&self) -> usize {
        1
    }

    pub fn num_dofs(&self) -> usize {
        self.mesh.num_vertices()
    }

    pub fn dofs_per_cell(&self) -> usize {
        1 << self.dim()
    }

    pub fn dof_coords(&self, dof: usize) -> Point {
        self.mesh.vertex_coords(dof)
    }

    pub fn cell_dofs(&self, c: CellIndex, out: &mut [usize]) {
        for (slot, v) in out.iter_mut().zip(self.mesh.cell_vertices(c)) {
            *slot = v;
        }
    }

    /// Nonzero basis functions at `p`: global dofs and values.
    pub fn basis_at(&self, p: &Point) -> Result<([usize; 8], [f64; 8])> {
        let (cell, t) = self.mesh.locate(p)?;
        let mut dofs = [0usize; 8];
        let mut vals = [0.0; 8];
        self.cell_dofs(cell, &mut dofs);
        shape_values(self.dim(), &t, &mut vals);
        Ok((dofs, vals))
    }

    pub fn interpolate(&self, f: impl Fn(&Point) -> f64) -> FeFunction {
        let coeffs = (0..self.num_dofs())
            .map(|v| f(&self.dof_coords(v)))
            .collect();
        FeFunction {
            space: self.clone(),
            coeffs,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeFunction {
    space: FeSpace,
    coeffs: Vec<f64>,
}

impl FeFunction {
    pub fn new(space: FeSpace, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.num_dofs() {
            return Err(Error::LengthMismatch {
                expected: space.num_dofs(),
                actual: coeffs.len(),
            });
        }
        Ok(Self { space, coeffs })
    }

    pub fn zeros(space: FeSpace) -> Self {
        let n = space.num_dofs();
        Self {
            space,
            coeffs: vec![0.0; n],
        }
    }

    pub fn space(&self) -> &FeSpace {
        &self.space
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn max_value(&self) -> f64 {
        self.coeffs
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn evaluate(&self, p: &Point) -> Result<f64> {
        let (dofs, vals) = self.space.basis_at(p)?;
        let k = self.space.dofs_per_cell();
        Ok((0..k).map(|a| vals[a] * self.coeffs[dofs[a]]).sum())
    }

    pub fn gradient(&self, p: &Point) -> Result<Point> {
        let mesh = self.space.mesh();
        let dim = mesh.dim();
        let (cell, t) = mesh.locate(p)?;
        let mut dofs = [0usize; 8];
        let mut grads = [[0.0; 3]; 8];
        self.space.cell_dofs(cell, &mut dofs);
        shape_gradients(dim, &t, &mut grads);
        let mut g = [0.0; 3];
        for a in 0..1 << dim {
            for d in 0..dim {
                g[d] += grads[a][d] / mesh.h_axis(d) * self.coeffs[dofs[a]];
            }
        }
        Ok(g)
    }

    /// `self - other`, both on the same space.
    pub fn difference(&self, other: &FeFunction) -> Result<FeFunction> {
        if self.space != other.space {
            return Err(Error::DimensionMismatch(
                "functions live on different finite element spaces".into(),
            ));
        }
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        Ok(FeFunction {
            space: self.space.clone(),
            coeffs,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::BoxDomain;

    fn space(dim: usize, level: u32) -> FeSpace {
        FeSpace::new(StructuredMesh::new(BoxDomain::symmetric_unit(dim).unwrap(), level).unwrap())
    }

    #[test]
    fn reproduces_linear_fields() {
        let s = space(2, 3);
        let u = s.interpolate(|p| p[0]);
        assert!((u.evaluate(&[0.3, -0.7, 0.0]).unwrap() - 0.3).abs() < 1e-14);
        let g = u.gradient(&[0.3, -0.7, 0.0]).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-13 && g[1].abs() < 1e-13);

        let s3 = space(3, 2);
        let w = s3.interpolate(|p| 2.0 * p[0] - p[1] + 0.5 * p[2] + 1.0);
        let p = [0.11, -0.42, 0.77];
        assert!((w.evaluate(&p).unwrap() - (0.22 + 0.42 + 0.385 + 1.0)).abs() < 1e-13);
    }

    #[test]
    fn vertex_and_center_values() {
        let s = space(2, 2);
        let u = s.interpolate(|p| p[0] * p[0] + 3.0 * p[1]);
        for v in [0, 7, 12, 24] {
            let p = s.dof_coords(v);
            assert_eq!(u.evaluate(&p).unwrap(), u.coeffs()[v]);
        }
        // Cell (1, 2) spans [-0.5, 0] x [0, 0.5].
        let center = [-0.25, 0.25, 0.0];
        let corners = [[-0.5, 0.0], [0.0, 0.0], [-0.5, 0.5], [0.0, 0.5]];
        let mean: f64 = corners
            .iter()
            .map(|c| c[0] * c[0] + 3.0 * c[1])
            .sum::<f64>()
            / 4.0;
        assert!((u.evaluate(&center).unwrap() - mean).abs() < 1e-15);
    }

    #[test]
    fn continuity_across_faces() {
        let s = space(2, 3);
        let u = s.interpolate(|p| (3.0 * p[0]).sin() * p[1].exp());
        let (cells, h) = (s.mesh().cells_per_side(), s.mesh().h());
        for i in 1..cells {
            let x = -1.0 + i as f64 * h;
            for k in 0..7 {
                let y = -0.9 + 0.27 * k as f64;
                // Evaluate from both adjacent cells by nudging the local coordinate.
                let left = eval_in_cell(&u, [i - 1, cell_of(y, h), 0], [x, y]);
                let right = eval_in_cell(&u, [i, cell_of(y, h), 0], [x, y]);
                assert!((left - right).abs() < 1e-12);
            }
        }
    }

    fn cell_of(y: f64, h: f64) -> usize {
        ((y + 1.0) / h).floor() as usize
    }

    fn eval_in_cell(u: &FeFunction, cell: [usize; 3], p: [f64; 2]) -> f64 {
        let mesh = u.space().mesh();
        let lo = mesh.cell_lower_corner(CellIndex(cell));
        let t = [
            (p[0] - lo[0]) / mesh.h_axis(0),
            (p[1] - lo[1]) / mesh.h_axis(1),
            0.0,
        ];
        let mut dofs = [0; 8];
        let mut vals = [0.0; 8];
        u.space().cell_dofs(CellIndex(cell), &mut dofs);
        shape_values(2, &t, &mut vals);
        (0..4).map(|a| vals[a] * u.coeffs()[dofs[a]]).sum()
    }

    #[test]
    fn partition_of_unity() {
        let mut vals = [0.0; 8];
        shape_values(3, &[0.2, 0.7, 0.4], &mut vals);
        assert!((vals.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let mut g = [[0.0; 3]; 8];
        shape_gradients(3, &[0.2, 0.7, 0.4], &mut g);
        for d in 0..3 {
            assert!(g.iter().map(|gi| gi[d]).sum::<f64>().abs() < 1e-15);
        }
    }

    #[test]
    fn length_checked() {
        let s = space(2, 1);
        assert!(matches!(
            FeFunction::new(s, vec![0.0; 3]),
            Err(Error::LengthMismatch {
                expected: 9,
                actual: 3
            })
        ));
    }
}
