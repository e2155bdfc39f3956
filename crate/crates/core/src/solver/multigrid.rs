use nalgebra::{Cholesky, DVector, Dyn};

use super::cg::Preconditioner;
use crate::coupling::BulkHierarchy;
use crate::error::{Error, Result};
use crate::fem::{assemble_stiffness_plus_mass, CsrMatrix, DirichletValues, FeSpace};
use crate::mesh::StructuredMesh;

const COARSEST_LEVEL: u32 = 2;

struct Level {
    a: Option<CsrMatrix>,
    diag: Vec<f64>,
    fixed: Vec<bool>,
    mesh: StructuredMesh,
}

/// Geometric multigrid V-cycle for `kc K + mc M` on the dyadic hierarchy of a
/// structured mesh with the box boundary eliminated. Coarse operators are
/// rediscretized, which coincides with the Galerkin product for nested Q1.
/// Symmetric Gauss-Seidel smoothing keeps the cycle symmetric so it can
/// precondition CG.
pub struct Multigrid<'a> {
    fine: &'a CsrMatrix,
    levels: Vec<Level>,
    coarse: Cholesky<f64, Dyn>,
}

fn eliminated(mesh: &StructuredMesh, kc: f64, mc: f64) -> (CsrMatrix, Vec<bool>) {
    let space = FeSpace::new(mesh.clone());
    let mut a = assemble_stiffness_plus_mass(&space, kc, mc);
    let d = DirichletValues::on_boundary(&space, |_| 0.0);
    let mut rhs = vec![0.0; a.nrows()];
    d.apply(&mut a, &mut rhs);
    (a, d.mask().to_vec())
}

impl<'a> Multigrid<'a> {
    /// `fine` must be the operator described by `hierarchy` on its mesh.
    pub fn new(fine: &'a CsrMatrix, hierarchy: &BulkHierarchy) -> Result<Self> {
        let mesh = &hierarchy.mesh;
        if fine.nrows() != mesh.num_vertices() {
            return Err(Error::DimensionMismatch(format!(
                "multigrid mesh has {} vertices, operator has {} rows",
                mesh.num_vertices(),
                fine.nrows()
            )));
        }
        let (kc, mc) = (hierarchy.stiffness_coeff, hierarchy.mass_coeff);
        let fixed: Vec<bool> = (0..mesh.num_vertices())
            .map(|v| mesh.is_boundary_vertex(v))
            .collect();
        let mut levels = vec![Level {
            a: None,
            diag: fine.diagonal(),
            fixed,
            mesh: mesh.clone(),
        }];
        let bottom = mesh.level().min(COARSEST_LEVEL);
        for l in (bottom..mesh.level()).rev() {
            let m = StructuredMesh::new(*mesh.domain(), l)?;
            let (a, fixed) = eliminated(&m, kc, mc);
            levels.push(Level {
                diag: a.diagonal(),
                a: Some(a),
                fixed,
                mesh: m,
            });
        }
        let last = levels.last().expect("at least one level");
        let dense = last.a.as_ref().unwrap_or(fine).to_dense();
        let coarse = Cholesky::new(dense).ok_or_else(|| Error::Solver {
            block: "bulk block A",
            message: "coarse grid operator is not positive definite".into(),
        })?;
        Ok(Self {
            fine,
            levels,
            coarse,
        })
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    fn op(&self, k: usize) -> &CsrMatrix {
        self.levels[k].a.as_ref().unwrap_or(self.fine)
    }

    fn vcycle(&self, k: usize, b: &[f64], x: &mut [f64]) {
        if k + 1 == self.levels.len() {
            let sol = self.coarse.solve(&DVector::from_column_slice(b));
            x.copy_from_slice(sol.as_slice());
            return;
        }
        let a = self.op(k);
        let lev = &self.levels[k];
        x.iter_mut().for_each(|v| *v = 0.0);
        gauss_seidel(a, &lev.diag, b, x, false);

        let mut r = a.mul_vec(x);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let coarse = &self.levels[k + 1];
        let mut rc = restrict(&lev.mesh, &coarse.mesh, &r);
        for (v, &f) in rc.iter_mut().zip(&coarse.fixed) {
            if f {
                *v = 0.0;
            }
        }
        let mut xc = vec![0.0; rc.len()];
        self.vcycle(k + 1, &rc, &mut xc);
        prolong_add(&coarse.mesh, &lev.mesh, &xc, x, &lev.fixed);

        gauss_seidel(a, &lev.diag, b, x, true);
    }
}

impl Preconditioner for Multigrid<'_> {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        self.vcycle(0, r, z);
    }
}

fn gauss_seidel(a: &CsrMatrix, diag: &[f64], b: &[f64], x: &mut [f64], backward: bool) {
    let n = a.nrows();
    let mut sweep = |i: usize| {
        let (cols, vals) = a.row(i);
        let mut s = b[i];
        for (&j, &v) in cols.iter().zip(vals) {
            if j != i {
                s -= v * x[j];
            }
        }
        x[i] = s / diag[i];
    };
    if backward {
        (0..n).rev().for_each(&mut sweep);
    } else {
        (0..n).for_each(&mut sweep);
    }
}

/// Parents of a fine index along one axis with interpolation weights.
fn parents(i: usize) -> ([(usize, f64); 2], usize) {
    if i & 1 == 0 {
        ([(i / 2, 1.0), (0, 0.0)], 1)
    } else {
        ([((i - 1) / 2, 0.5), (i.div_ceil(2), 0.5)], 2)
    }
}

fn for_each_parent(fine: &StructuredMesh, v: usize, mut f: impl FnMut([usize; 3], f64)) {
    let dim = fine.dim();
    let idx = fine.vertex_multi_index(v);
    let mut ps = [([(0usize, 0.0f64); 2], 1usize); 3];
    for d in 0..dim {
        ps[d] = parents(idx[d]);
    }
    let (px, nx) = ps[0];
    let (py, ny) = ps[1];
    let (pz, nz) = ps[2];
    for &(k, wz) in &pz[..if dim > 2 { nz } else { 1 }] {
        let wz = if dim > 2 { wz } else { 1.0 };
        for &(j, wy) in &py[..ny] {
            for &(i, wx) in &px[..nx] {
                f([i, j, if dim > 2 { k } else { 0 }], wx * wy * wz);
            }
        }
    }
}

fn restrict(fine: &StructuredMesh, coarse: &StructuredMesh, r: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; coarse.num_vertices()];
    for (v, rv) in r.iter().enumerate() {
        if *rv == 0.0 {
            continue;
        }
        for_each_parent(fine, v, |c, w| out[coarse.vertex_index(c)] += w * rv);
    }
    out
}

fn prolong_add(
    coarse: &StructuredMesh,
    fine: &StructuredMesh,
    xc: &[f64],
    x: &mut [f64],
    fixed: &[bool],
) {
    for (v, xv) in x.iter_mut().enumerate() {
        if fixed[v] {
            continue;
        }
        let mut s = 0.0;
        for_each_parent(fine, v, |c, w| s += w * xc[coarse.vertex_index(c)]);
        *xv += s;
    }
}
