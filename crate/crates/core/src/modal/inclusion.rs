use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{BoxDomain, Point};

/// Coordinate axis of a cylinder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    /// The two transverse axes, ordered so that (e1, e2, axis) is right-handed.
    pub fn transverse(self) -> (usize, usize) {
        match self {
            Axis::X => (1, 2),
            Axis::Y => (2, 0),
            Axis::Z => (0, 1),
        }
    }
}

/// A circular inclusion in 2D or a straight circular cylinder in 3D whose
/// axis is parallel to a coordinate axis. Only the lateral surface of a
/// cylinder carries the coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Inclusion {
    Disk {
        center: [f64; 2],
        radius: f64,
    },
    Cylinder {
        axis: Axis,
        /// Coordinates of the axis in the transverse plane `(e1, e2)`.
        center: [f64; 2],
        /// Extent along the axis.
        range: [f64; 2],
        radius: f64,
    },
}

impl Inclusion {
    pub fn disk(center: [f64; 2], radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Geometry(format!(
                "radius must be positive, got {radius}"
            )));
        }
        Ok(Inclusion::Disk { center, radius })
    }

    pub fn cylinder(axis: Axis, center: [f64; 2], range: [f64; 2], radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Geometry(format!(
                "radius must be positive, got {radius}"
            )));
        }
        if !(range[1] > range[0]) {
            return Err(Error::Geometry(format!(
                "cylinder axis range must be increasing, got {range:?}"
            )));
        }
        Ok(Inclusion::Cylinder {
            axis,
            center,
            range,
            radius,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Inclusion::Disk { .. } => 2,
            Inclusion::Cylinder { .. } => 3,
        }
    }

    pub fn radius(&self) -> f64 {
        match *self {
            Inclusion::Disk { radius, .. } | Inclusion::Cylinder { radius, .. } => radius,
        }
    }

    /// Same geometry with a different radius.
    pub fn with_radius(&self, r: f64) -> Result<Self> {
        match *self {
            Inclusion::Disk { center, .. } => Inclusion::disk(center, r),
            Inclusion::Cylinder {
                axis,
                center,
                range,
                ..
            } => Inclusion::cylinder(axis, center, range, r),
        }
    }

    /// Axial length of a cylinder; 1 for a disk so that measures multiply out.
    pub fn length(&self) -> f64 {
        match *self {
            Inclusion::Disk { .. } => 1.0,
            Inclusion::Cylinder { range, .. } => range[1] - range[0],
        }
    }

    /// Measure of the coupling surface: circumference or lateral area.
    pub fn boundary_measure(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.radius() * self.length()
    }

    fn frame(&self) -> (usize, usize, Option<usize>) {
        match *self {
            Inclusion::Disk { .. } => (0, 1, None),
            Inclusion::Cylinder { axis, .. } => {
                let (a, b) = axis.transverse();
                (a, b, Some(axis.index()))
            }
        }
    }

    fn center(&self) -> [f64; 2] {
        match *self {
            Inclusion::Disk { center, .. } | Inclusion::Cylinder { center, .. } => center,
        }
    }

    /// Point on the coupling surface at angle `theta` and axial coordinate `s`
    /// (ignored for disks).
    pub fn surface_point(&self, theta: f64, s: f64) -> Point {
        let (e1, e2, axis) = self.frame();
        let c = self.center();
        let r = self.radius();
        let mut p = [0.0; 3];
        p[e1] = c[0] + r * theta.cos();
        p[e2] = c[1] + r * theta.sin();
        if let Some(a) = axis {
            p[a] = s;
        }
        p
    }

    /// Polar coordinates `(rho, theta)` of `p` in the cross-section frame.
    pub fn polar(&self, p: &Point) -> (f64, f64) {
        let (e1, e2, _) = self.frame();
        let c = self.center();
        let dx = p[e1] - c[0];
        let dy = p[e2] - c[1];
        (dx.hypot(dy), dy.atan2(dx))
    }

    /// Whether `p` lies strictly inside the inclusion.
    pub fn contains(&self, p: &Point) -> bool {
        let (rho, _) = self.polar(p);
        if rho >= self.radius() {
            return false;
        }
        match *self {
            Inclusion::Disk { .. } => true,
            Inclusion::Cylinder { axis, range, .. } => {
                let s = p[axis.index()];
                s > range[0] && s < range[1]
            }
        }
    }

    /// Axis-aligned bounding box `(lower, upper)`.
    pub fn bounding_box(&self) -> (Point, Point) {
        let (e1, e2, axis) = self.frame();
        let c = self.center();
        let r = self.radius();
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        lo[e1] = c[0] - r;
        hi[e1] = c[0] + r;
        lo[e2] = c[1] - r;
        hi[e2] = c[1] + r;
        if let (Some(a), Inclusion::Cylinder { range, .. }) = (axis, self) {
            lo[a] = range[0];
            hi[a] = range[1];
        }
        (lo, hi)
    }

    /// Check that the closure of the inclusion lies strictly inside `domain`.
    pub fn check_inside(&self, domain: &BoxDomain) -> Result<()> {
        if domain.dim() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{}D inclusion in a {}D domain",
                self.dim(),
                domain.dim()
            )));
        }
        let (lo, hi) = self.bounding_box();
        for d in 0..self.dim() {
            if !(lo[d] > domain.lower()[d] && hi[d] < domain.upper()[d]) {
                return Err(Error::Geometry(format!(
                    "inclusion {self:?} is not strictly inside the domain"
                )));
            }
        }
        Ok(())
    }

    /// Whether the closures of two inclusions intersect. Parallel cylinders
    /// and disks are tested exactly; cylinders along different axes fall back
    /// to their bounding boxes.
    pub fn overlaps(&self, other: &Inclusion) -> bool {
        let touch = |a: [f64; 2], b: [f64; 2], r: f64| (a[0] - b[0]).hypot(a[1] - b[1]) <= r;
        match (*self, *other) {
            (
                Inclusion::Disk {
                    center: a,
                    radius: ra,
                },
                Inclusion::Disk {
                    center: b,
                    radius: rb,
                },
            ) => touch(a, b, ra + rb),
            (
                Inclusion::Cylinder {
                    axis: xa,
                    center: a,
                    range: za,
                    radius: ra,
                },
                Inclusion::Cylinder {
                    axis: xb,
                    center: b,
                    range: zb,
                    radius: rb,
                },
            ) if xa == xb => touch(a, b, ra + rb) && za[0] <= zb[1] && zb[0] <= za[1],
            _ => {
                let (la, ha) = self.bounding_box();
                let (lb, hb) = other.bounding_box();
                (0..3).all(|d| la[d] <= hb[d] && lb[d] <= ha[d])
            }
        }
    }
}

/// Validate a set of inclusions: same dimension as the domain, strictly
/// inside it, and pairwise disjoint.
pub fn validate_inclusions(domain: &BoxDomain, inclusions: &[Inclusion]) -> Result<()> {
    for inc in inclusions {
        inc.check_inside(domain)?;
    }
    for (i, a) in inclusions.iter().enumerate() {
        for (j, b) in inclusions.iter().enumerate().skip(i + 1) {
            if a.overlaps(b) {
                return Err(Error::Geometry(format!("inclusions {i} and {j} overlap")));
            }
        }
    }
    Ok(())
}
