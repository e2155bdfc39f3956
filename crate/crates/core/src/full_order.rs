//! Full Lagrange multiplier reference solver for disks in 2D: the multiplier
//! is a continuous P1 function on a polygonal partition of each circle.

use std::f64::consts::PI;

use crate::coupling::{build_saddle_system, BulkHierarchy, ProblemData};
use crate::error::{Error, Result};
use crate::fem::{
    assemble_load, assemble_stiffness, error_norms, gauss_legendre_unit, CsrMatrix,
    DirichletValues, ErrorNorms, FeFunction, FeSpace, Zero,
};
use crate::modal::{validate_inclusions, Inclusion};
use crate::solver::{solve, SolveReport, SolverOptions};

pub const DEFAULT_SEGMENTS: usize = 64;

/// Segment count for a circle of radius `eps` on a bulk mesh of size `h`:
/// [`DEFAULT_SEGMENTS`] unless that would make the arcs shorter than about
/// `2h`, where the multiplier space outruns the bulk space and the coupling
/// loses rank. Never fewer than 16.
pub fn default_segments(eps: f64, h: f64) -> usize {
    let fit = (std::f64::consts::PI * eps / h).floor() as usize;
    fit.clamp(16, DEFAULT_SEGMENTS)
}

/// `(point, weight, [(node, hat value); 2])`.
pub type InterfacePoint = ([f64; 3], f64, [(usize, f64); 2]);

/// Uniform partition of a circle into `segments` arcs with nodes at
/// `2 pi a / M`; node `M` is node 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceMesh {
    pub inclusion: Inclusion,
    segments: usize,
}

impl InterfaceMesh {
    pub fn new(inclusion: Inclusion, segments: usize) -> Result<Self> {
        if !matches!(inclusion, Inclusion::Disk { .. }) {
            return Err(Error::Unsupported(
                "the full-order reference handles 2D disks only".into(),
            ));
        }
        if segments < 16 {
            return Err(Error::Parameter(format!(
                "interface mesh needs at least 16 segments, got {segments}"
            )));
        }
        Ok(Self {
            inclusion,
            segments,
        })
    }

    pub fn segments(&self) -> usize {
        self.segments
    }

    pub fn node_angle(&self, a: usize) -> f64 {
        2.0 * PI * (a % self.segments) as f64 / self.segments as f64
    }

    /// Quadrature on the true circle: 4-point Gauss on sub-arcs no longer
    /// than `h / 4`.
    pub fn quadrature(&self, h: f64) -> Vec<InterfacePoint> {
        let r = self.inclusion.radius();
        let m = self.segments;
        let arc = 2.0 * PI * r / m as f64;
        let sub = ((4.0 * arc / h).ceil() as usize).max(1);
        let (gp, gw) = gauss_legendre_unit(4);
        let dtheta = 2.0 * PI / m as f64;
        let mut out = Vec::with_capacity(m * sub * 4);
        for a in 0..m {
            for s in 0..sub {
                for (t, w) in gp.iter().zip(&gw) {
                    let local = (s as f64 + t) / sub as f64;
                    let theta = dtheta * (a as f64 + local);
                    out.push((
                        self.inclusion.surface_point(theta, 0.0),
                        w * r * dtheta / sub as f64,
                        [(a, 1.0 - local), ((a + 1) % m, local)],
                    ));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct FullOrderSolution {
    pub u: FeFunction,
    /// Nodal multiplier values, `segments` per inclusion.
    pub lambda: Vec<f64>,
    pub report: SolveReport,
}

/// Solve the Dirichlet-coupled problem with full P1 multipliers on every
/// inclusion boundary.
pub fn solve_full_order(
    space: &FeSpace,
    inclusions: &[Inclusion],
    segments: usize,
    data: &ProblemData,
    opts: &SolverOptions,
) -> Result<FullOrderSolution> {
    if space.dim() != 2 {
        return Err(Error::Unsupported(
            "the full-order reference is 2D only".into(),
        ));
    }
    if data.kappa != 0.0 {
        return Err(Error::Unsupported(
            "the full-order reference implements Dirichlet coupling only".into(),
        ));
    }
    validate_inclusions(space.mesh().domain(), inclusions)?;
    let meshes: Vec<InterfaceMesh> = inclusions
        .iter()
        .map(|inc| InterfaceMesh::new(*inc, segments))
        .collect::<Result<_>>()?;

    let mut a = assemble_stiffness(space);
    let mut f = assemble_load(space, |p| (data.f)(p));
    let d = DirichletValues::on_boundary(space, |p| (data.g_boundary)(p));
    d.apply(&mut a, &mut f);

    let h = space.mesh().h();
    let nl = segments * meshes.len();
    let mut trip = Vec::new();
    let mut g = vec![0.0; nl];
    for (k, im) in meshes.iter().enumerate() {
        let off = k * segments;
        for (x, w, hats) in im.quadrature(h) {
            let (dofs, vals) = space.basis_at(&x).map_err(|_| {
                Error::Geometry(format!("interface point {x:?} lies outside the domain"))
            })?;
            let gv = (data.g)(&x);
            for (node, chi) in hats {
                g[off + node] += w * chi * gv;
                for (&dof, &v) in dofs[..4].iter().zip(&vals[..4]) {
                    trip.push((off + node, dof, w * chi * v));
                }
            }
        }
    }
    let mut c = CsrMatrix::from_triplets(nl, space.num_dofs(), &trip)?;
    d.apply_to_columns(&mut c, &mut g);

    let system = build_saddle_system(a, c, CsrMatrix::zeros(nl, nl), f, g)?.with_hierarchy(
        BulkHierarchy {
            mesh: space.mesh().clone(),
            stiffness_coeff: 1.0,
            mass_coeff: 0.0,
        },
    )?;
    let report = solve(&system, opts)?;
    Ok(FullOrderSolution {
        u: FeFunction::new(space.clone(), report.u.clone())?,
        lambda: report.lambda.clone(),
        report,
    })
}

/// `L2` and `H1`-seminorm of the difference of two fields on the same space.
pub fn reduction_gap(full: &FeFunction, reduced: &FeFunction) -> Result<ErrorNorms> {
    let diff = full.difference(reduced)?;
    Ok(error_norms(&diff, &Zero))
}
