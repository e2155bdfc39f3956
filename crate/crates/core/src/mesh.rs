//! Structured tensor-product meshes of axis-aligned boxes.
//!
//! A mesh at level `L` splits every side of the box into `2^L` cells. Vertices
//! and cells are numbered lexicographically with the x index running fastest,
//! which is also the point order of a VTK structured grid.

use crate::error::{Error, Result};

/// Coordinates are stored as 3-vectors; 2D meshes leave the z slot at zero.
pub type Point = [f64; 3];

/// Largest vertex count a mesh may address.
const MAX_VERTICES: usize = 1 << 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxDomain {
    lower: Point,
    upper: Point,
    dim: usize,
}

impl BoxDomain {
    pub fn new(lower: &[f64], upper: &[f64]) -> Result<Self> {
        let dim = lower.len();
        if !(2..=3).contains(&dim) {
            return Err(Error::Geometry(format!(
                "box dimension must be 2 or 3, got {dim}"
            )));
        }
        if upper.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "lower corner has {dim} components, upper corner {}",
                upper.len()
            )));
        }
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        for d in 0..dim {
            if !(lower[d].is_finite() && upper[d].is_finite() && upper[d] > lower[d]) {
                return Err(Error::Geometry(format!(
                    "upper corner must dominate lower corner on axis {d}"
                )));
            }
            lo[d] = lower[d];
            hi[d] = upper[d];
        }
        Ok(Self {
            lower: lo,
            upper: hi,
            dim,
        })
    }

    /// The box `[-1, 1]^dim`.
    pub fn symmetric_unit(dim: usize) -> Result<Self> {
        Self::new(&vec![-1.0; dim], &vec![1.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower[..self.dim]
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper[..self.dim]
    }

    pub fn side(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim).map(|d| self.side(d)).product()
    }

    pub fn contains(&self, p: &Point) -> bool {
        (0..self.dim).all(|d| p[d] >= self.lower[d] && p[d] <= self.upper[d])
    }

    /// Smallest distance from `p` to the box boundary (negative outside).
    pub fn distance_to_boundary(&self, p: &Point) -> f64 {
        (0..self.dim)
            .map(|d| (p[d] - self.lower[d]).min(self.upper[d] - p[d]))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Multi-index of a cell; unused trailing components are zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellIndex(pub [usize; 3]);

#[derive(Debug, Clone, PartialEq)]
pub struct StructuredMesh {
    domain: BoxDomain,
    level: u32,
    cells_per_side: usize,
    h: Point,
}

impl StructuredMesh {
    pub fn new(domain: BoxDomain, level: u32) -> Result<Self> {
        let dim = domain.dim();
        let too_big = || {
            Error::Capacity(format!(
                "level {level} in {dim}D exceeds the addressable vertex count"
            ))
        };
        if level >= usize::BITS - 1 {
            return Err(too_big());
        }
        let cells_per_side = 1usize << level;
        let vertices = (cells_per_side + 1)
            .checked_pow(dim as u32)
            .ok_or_else(too_big)?;
        if vertices > MAX_VERTICES {
            return Err(too_big());
        }
        let mut h = [0.0; 3];
        for (d, hd) in h.iter_mut().enumerate().take(dim) {
            *hd = domain.side(d) / cells_per_side as f64;
        }
        Ok(Self {
            domain,
            level,
            cells_per_side,
            h,
        })
    }

    pub fn refine_globally(&self) -> Result<Self> {
        Self::new(self.domain, self.level + 1)
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn cells_per_side(&self) -> usize {
        self.cells_per_side
    }

    pub fn vertices_per_side(&self) -> usize {
        self.cells_per_side + 1
    }

    /// Cell edge length along `axis`.
    pub fn h_axis(&self, axis: usize) -> f64 {
        self.h[axis]
    }

    /// Largest cell edge length.
    pub fn h(&self) -> f64 {
        self.h[..self.dim()].iter().copied().fold(0.0, f64::max)
    }

    pub fn cell_volume(&self) -> f64 {
        self.h[..self.dim()].iter().product()
    }

    pub fn num_cells(&self) -> usize {
        self.cells_per_side.pow(self.dim() as u32)
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices_per_side().pow(self.dim() as u32)
    }

    pub fn vertex_index(&self, idx: [usize; 3]) -> usize {
        let n = self.vertices_per_side();
        idx[0] + n * (idx[1] + n * idx[2])
    }

    pub fn vertex_multi_index(&self, v: usize) -> [usize; 3] {
        let n = self.vertices_per_side();
        let mut out = [0; 3];
        let mut rest = v;
        for slot in out.iter_mut().take(self.dim()) {
            *slot = rest % n;
            rest /= n;
        }
        out
    }

    pub fn vertex_coords(&self, v: usize) -> Point {
        self.multi_index_coords(self.vertex_multi_index(v))
    }

    pub fn multi_index_coords(&self, idx: [usize; 3]) -> Point {
        let mut p = [0.0; 3];
        let lo = self.domain.lower;
        let hi = self.domain.upper;
        for d in 0..self.dim() {
            // Hit the upper corner exactly rather than through accumulated rounding.
            p[d] = if idx[d] == self.cells_per_side {
                hi[d]
            } else {
                lo[d] + idx[d] as f64 * self.h[d]
            };
        }
        p
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        let idx = self.vertex_multi_index(v);
        (0..self.dim()).any(|d| idx[d] == 0 || idx[d] == self.cells_per_side)
    }

    pub fn cell_linear_index(&self, c: CellIndex) -> usize {
        let n = self.cells_per_side;
        c.0[0] + n * (c.0[1] + n * c.0[2])
    }

    pub fn cell_from_linear(&self, c: usize) -> CellIndex {
        let n = self.cells_per_side;
        let mut out = [0; 3];
        let mut rest = c;
        for slot in out.iter_mut().take(self.dim()) {
            *slot = rest % n;
            rest /= n;
        }
        CellIndex(out)
    }

    pub fn cell_lower_corner(&self, c: CellIndex) -> Point {
        self.multi_index_coords(c.0)
    }

    /// Global vertex indices of the `2^dim` corners of a cell, in local order
    /// `a = bx + 2 by + 4 bz`.
    pub fn cell_vertices(&self, c: CellIndex) -> impl Iterator<Item = usize> + '_ {
        let dim = self.dim();
        (0..1usize << dim).map(move |a| {
            let mut idx = c.0;
            for (d, slot) in idx.iter_mut().enumerate().take(dim) {
                *slot += (a >> d) & 1;
            }
            self.vertex_index(idx)
        })
    }

    /// Cell whose closed extent contains `p`. Points on shared faces resolve
    /// to the lexicographically smaller cell.
    pub fn cell_containing_point(&self, p: &Point) -> Result<CellIndex> {
        Ok(self.locate(p)?.0)
    }

    /// Cell containing `p` together with the reference coordinates of `p`
    /// inside that cell (each in `[0, 1]`).
    pub fn locate(&self, p: &Point) -> Result<(CellIndex, Point)> {
        if !self.domain.contains(p) {
            return Err(Error::OutOfDomain { point: *p });
        }
        let n = self.cells_per_side;
        let mut cell = [0; 3];
        let mut local = [0.0; 3];
        for d in 0..self.dim() {
            let t = (p[d] - self.domain.lower[d]) / self.h[d];
            let i = (t.ceil() as isize - 1).clamp(0, n as isize - 1) as usize;
            cell[d] = i;
            local[d] = (t - i as f64).clamp(0.0, 1.0);
        }
        Ok((CellIndex(cell), local))
    }
}
