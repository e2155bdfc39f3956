use std::f64::consts::PI;

use super::basis::ModalBasis;
use super::inclusion::Inclusion;
use crate::error::{Error, Result};
use crate::fem::gauss_legendre_unit;
use crate::mesh::Point;

/// Uniform P1 mesh along a cylinder axis. Multipliers of a cylinder are
/// tensor products of these hat functions with the Fourier modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxialMesh {
    start: f64,
    end: f64,
    elements: usize,
}

impl AxialMesh {
    pub fn new(start: f64, end: f64, elements: usize) -> Result<Self> {
        if elements == 0 || !(end > start) {
            return Err(Error::Parameter(format!(
                "axial mesh needs a positive length and at least one element, got [{start}, {end}] with {elements}"
            )));
        }
        Ok(Self {
            start,
            end,
            elements,
        })
    }

    pub fn elements(&self) -> usize {
        self.elements
    }

    pub fn num_nodes(&self) -> usize {
        self.elements + 1
    }

    pub fn element_length(&self) -> f64 {
        (self.end - self.start) / self.elements as f64
    }

    pub fn node(&self, a: usize) -> f64 {
        if a == self.elements {
            self.end
        } else {
            self.start + a as f64 * self.element_length()
        }
    }

    /// Consistent mass matrix as `(diagonal, off_diagonal)`.
    pub fn mass_tridiagonal(&self) -> (Vec<f64>, Vec<f64>) {
        let l = self.element_length();
        let mut diag = vec![0.0; self.num_nodes()];
        for e in 0..self.elements {
            diag[e] += l / 3.0;
            diag[e + 1] += l / 3.0;
        }
        (diag, vec![l / 6.0; self.elements])
    }
}

/// A quadrature point on the coupling surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub x: Point,
    /// Surface measure carried by the point.
    pub weight: f64,
    pub theta: f64,
    support: [(usize, f64); 2],
    support_len: usize,
}

impl BoundaryPoint {
    /// Axial nodes with non-zero hat function at this point, with values.
    /// A disk has a single node with value 1.
    pub fn axial(&self) -> &[(usize, f64)] {
        &self.support[..self.support_len]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    /// Lower bound on the number of angular points.
    pub min_angular: usize,
    /// Bulk mesh size; when given, the angular spacing follows it.
    pub mesh_h: Option<f64>,
    /// Angular points per bulk cell along the circumference.
    pub points_per_cell: usize,
    /// Axial element count; defaults to about one per bulk cell.
    pub axial_elements: Option<usize>,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            min_angular: 16,
            mesh_h: None,
            points_per_cell: 4,
            axial_elements: None,
        }
    }
}

impl QuadratureOptions {
    pub fn for_mesh(h: f64) -> Self {
        Self {
            mesh_h: Some(h),
            ..Self::default()
        }
    }
}

/// Angular trapezoid rule with offset nodes `2 pi (k + 1/2) / m`, tensorized
/// with 2-point Gauss on each axial element for cylinders.
#[derive(Debug, Clone)]
pub struct BoundaryQuadrature {
    inclusion: Inclusion,
    angular: usize,
    axial: Option<AxialMesh>,
    points: Vec<BoundaryPoint>,
}

impl BoundaryQuadrature {
    pub fn new(inclusion: &Inclusion, basis: &ModalBasis, opts: QuadratureOptions) -> Result<Self> {
        let r = inclusion.radius();
        let mut m = opts.min_angular.max(4 * basis.order() + 4);
        if let Some(h) = opts.mesh_h {
            if !(h > 0.0) {
                return Err(Error::Parameter(format!(
                    "mesh size must be positive, got {h}"
                )));
            }
            let per = 2.0 * PI * r / h;
            m = m.max(opts.points_per_cell * per.ceil() as usize);
        }
        m = m.div_ceil(4) * 4;

        let axial = match *inclusion {
            Inclusion::Disk { .. } => None,
            Inclusion::Cylinder { range, .. } => {
                let len = range[1] - range[0];
                let e = opts.axial_elements.unwrap_or_else(|| match opts.mesh_h {
                    Some(h) => ((len / h).round() as usize).max(1),
                    None => 1,
                });
                Some(AxialMesh::new(range[0], range[1], e)?)
            }
        };

        let dtheta = 2.0 * PI / m as f64;
        let mut points = Vec::new();
        match axial {
            None => {
                for k in 0..m {
                    let theta = dtheta * (k as f64 + 0.5);
                    points.push(BoundaryPoint {
                        x: inclusion.surface_point(theta, 0.0),
                        weight: r * dtheta,
                        theta,
                        support: [(0, 1.0), (0, 0.0)],
                        support_len: 1,
                    });
                }
            }
            Some(ax) => {
                let (gp, gw) = gauss_legendre_unit(2);
                let l = ax.element_length();
                for e in 0..ax.elements() {
                    let s0 = ax.node(e);
                    for (t, w) in gp.iter().zip(&gw) {
                        let s = s0 + t * l;
                        for k in 0..m {
                            let theta = dtheta * (k as f64 + 0.5);
                            points.push(BoundaryPoint {
                                x: inclusion.surface_point(theta, s),
                                weight: r * dtheta * w * l,
                                theta,
                                support: [(e, 1.0 - t), (e + 1, *t)],
                                support_len: 2,
                            });
                        }
                    }
                }
            }
        }
        Ok(Self {
            inclusion: *inclusion,
            angular: m,
            axial,
            points,
        })
    }

    pub fn inclusion(&self) -> &Inclusion {
        &self.inclusion
    }

    pub fn angular_points(&self) -> usize {
        self.angular
    }

    pub fn axial_mesh(&self) -> Option<&AxialMesh> {
        self.axial.as_ref()
    }

    /// Number of axial multiplier nodes; 1 for a disk.
    pub fn num_axial_nodes(&self) -> usize {
        self.axial.map_or(1, |a| a.num_nodes())
    }

    pub fn points(&self) -> &[BoundaryPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Sum of weights, the discrete surface measure.
    pub fn measure(&self) -> f64 {
        self.points.iter().map(|p| p.weight).sum()
    }
}
