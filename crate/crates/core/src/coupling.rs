//! Coupling blocks between the bulk space and the reduced multipliers, and
//! the assembled saddle point system `[[A, C^T], [C, -M]]`.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::{assemble_load, assemble_stiffness, CsrMatrix, DirichletValues, FeSpace};
use crate::mesh::{Point, StructuredMesh};
use crate::modal::{
    num_multipliers, validate_inclusions, BoundaryQuadrature, Inclusion, ModalBasis,
    QuadratureOptions,
};

/// `C[(a, i), j] = sum_q w_q phi_i(theta_q) chi_a(s_q) psi_j(x_q)`.
pub fn assemble_coupling(
    space: &FeSpace,
    basis: &ModalBasis,
    quad: &BoundaryQuadrature,
) -> Result<CsrMatrix> {
    let nm = basis.num_modes();
    let rows = num_multipliers(basis, quad);
    let k = space.dofs_per_cell();
    let mut phi = vec![0.0; nm];
    let mut trip = Vec::with_capacity(quad.len() * k * nm * 2);
    for p in quad.points() {
        let (dofs, vals) = space.basis_at(&p.x).map_err(|e| match e {
            Error::OutOfDomain { point } => Error::Geometry(format!(
                "boundary quadrature point {point:?} lies outside the domain"
            )),
            other => other,
        })?;
        basis.eval_all(p.theta, &mut phi);
        for &(a, chi) in p.axial() {
            for (i, f) in phi.iter().enumerate() {
                let wr = p.weight * chi * f;
                for (&d, &v) in dofs[..k].iter().zip(&vals[..k]) {
                    trip.push((a * nm + i, d, wr * v));
                }
            }
        }
    }
    CsrMatrix::from_triplets(rows, space.num_dofs(), &trip)
}

/// `G[(a, i)] = sum_q w_q g(x_q) phi_i(theta_q) chi_a(s_q)`.
pub fn assemble_constraint_rhs(
    g: impl Fn(&Point) -> f64,
    basis: &ModalBasis,
    quad: &BoundaryQuadrature,
) -> Vec<f64> {
    let nm = basis.num_modes();
    let mut out = vec![0.0; num_multipliers(basis, quad)];
    let mut phi = vec![0.0; nm];
    for p in quad.points() {
        let gv = g(&p.x);
        basis.eval_all(p.theta, &mut phi);
        for &(a, chi) in p.axial() {
            for (i, f) in phi.iter().enumerate() {
                out[a * nm + i] += p.weight * gv * chi * f;
            }
        }
    }
    out
}

/// Gram matrix of the extended multipliers on the coupling surface,
/// `sum_q w_q phi_i phi_j chi_a chi_b`. The angular and axial rules integrate
/// these products exactly, so the closed form `M_ax (x) diag(2 pi eps c_i)` is
/// used directly.
pub fn multiplier_gram(basis: &ModalBasis, quad: &BoundaryQuadrature) -> CsrMatrix {
    let nm = basis.num_modes();
    let circ = 2.0 * std::f64::consts::PI * quad.inclusion().radius();
    let modal: Vec<f64> = (0..nm)
        .map(|i| circ * basis.orthogonality_constant(i))
        .collect();
    let mut trip = Vec::new();
    match quad.axial_mesh() {
        None => {
            for (i, m) in modal.iter().enumerate() {
                trip.push((i, i, *m));
            }
        }
        Some(ax) => {
            let (diag, off) = ax.mass_tridiagonal();
            for a in 0..ax.num_nodes() {
                for (i, m) in modal.iter().enumerate() {
                    if a > 0 {
                        trip.push((a * nm + i, (a - 1) * nm + i, off[a - 1] * m));
                    }
                    trip.push((a * nm + i, a * nm + i, diag[a] * m));
                    if a < ax.elements() {
                        trip.push((a * nm + i, (a + 1) * nm + i, off[a] * m));
                    }
                }
            }
        }
    }
    let n = num_multipliers(basis, quad);
    let mut m = CsrMatrix::from_triplets(n, n, &trip).expect("indices in range");
    m.set_symmetric_flag(true);
    m
}

/// Robin block `kappa * <R^T Lambda, R^T w>`; an exact zero block when
/// `kappa = 0`.
pub fn assemble_robin(
    basis: &ModalBasis,
    quad: &BoundaryQuadrature,
    kappa: f64,
) -> Result<CsrMatrix> {
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(Error::Parameter(format!(
            "kappa must be non-negative, got {kappa}"
        )));
    }
    let n = num_multipliers(basis, quad);
    if kappa == 0.0 {
        let mut z = CsrMatrix::zeros(n, n);
        z.set_symmetric_flag(true);
        return Ok(z);
    }
    let mut m = multiplier_gram(basis, quad);
    for v in m.values_mut() {
        *v *= kappa;
    }
    Ok(m)
}

/// Geometric information the solver can use to build a multigrid
/// preconditioner for the bulk block `kc * K + mc * M` with the box boundary
/// eliminated.
#[derive(Debug, Clone)]
pub struct BulkHierarchy {
    pub mesh: StructuredMesh,
    pub stiffness_coeff: f64,
    pub mass_coeff: f64,
}

/// The symmetric indefinite system `[[A, C^T], [C, -M]] [u; Lambda] = [F; G]`.
#[derive(Clone)]
pub struct SaddleSystem {
    a: CsrMatrix,
    c: CsrMatrix,
    m: CsrMatrix,
    f: Vec<f64>,
    g: Vec<f64>,
    hierarchy: Option<BulkHierarchy>,
}

impl fmt::Debug for SaddleSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SaddleSystem")
            .field("bulk", &self.num_bulk())
            .field("multipliers", &self.num_multipliers())
            .field("nnz_a", &self.a.nnz())
            .field("nnz_c", &self.c.nnz())
            .finish()
    }
}

impl SaddleSystem {
    pub fn a(&self) -> &CsrMatrix {
        &self.a
    }

    pub fn c(&self) -> &CsrMatrix {
        &self.c
    }

    pub fn m(&self) -> &CsrMatrix {
        &self.m
    }

    pub fn f(&self) -> &[f64] {
        &self.f
    }

    pub fn g(&self) -> &[f64] {
        &self.g
    }

    pub fn num_bulk(&self) -> usize {
        self.a.nrows()
    }

    pub fn num_multipliers(&self) -> usize {
        self.c.nrows()
    }

    pub fn len(&self) -> usize {
        self.num_bulk() + self.num_multipliers()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn hierarchy(&self) -> Option<&BulkHierarchy> {
        self.hierarchy.as_ref()
    }

    pub fn with_hierarchy(mut self, h: BulkHierarchy) -> Result<Self> {
        if h.mesh.num_vertices() != self.num_bulk() {
            return Err(Error::DimensionMismatch(format!(
                "hierarchy mesh has {} vertices, bulk block has {} rows",
                h.mesh.num_vertices(),
                self.num_bulk()
            )));
        }
        self.hierarchy = Some(h);
        Ok(self)
    }

    /// Full right-hand side `[F; G]`.
    pub fn rhs(&self) -> Vec<f64> {
        let mut r = self.f.clone();
        r.extend_from_slice(&self.g);
        r
    }

    /// `y = K x` for the full block matrix.
    pub fn apply(&self, u: &[f64], lambda: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut top = self.a.mul_vec(u);
        self.c.mul_transpose_add(lambda, &mut top);
        let mut bottom = self.c.mul_vec(u);
        let ml = self.m.mul_vec(lambda);
        for (b, m) in bottom.iter_mut().zip(ml) {
            *b -= m;
        }
        (top, bottom)
    }

    /// `||K x - b|| / ||b||` (absolute when `b = 0`).
    pub fn relative_residual(&self, u: &[f64], lambda: &[f64]) -> f64 {
        let (top, bottom) = self.apply(u, lambda);
        let mut r2 = 0.0;
        let mut b2 = 0.0;
        for (y, b) in top.iter().chain(&bottom).zip(self.f.iter().chain(&self.g)) {
            r2 += (y - b) * (y - b);
            b2 += b * b;
        }
        if b2 > 0.0 {
            (r2 / b2).sqrt()
        } else {
            r2.sqrt()
        }
    }

    /// The full block matrix in CSR form.
    pub fn to_csr(&self) -> CsrMatrix {
        let nb = self.num_bulk();
        let mut trip = Vec::with_capacity(self.a.nnz() + 2 * self.c.nnz() + self.m.nnz());
        for i in 0..nb {
            let (cols, vals) = self.a.row(i);
            trip.extend(cols.iter().zip(vals).map(|(&j, &v)| (i, j, v)));
        }
        for r in 0..self.num_multipliers() {
            let (cols, vals) = self.c.row(r);
            for (&j, &v) in cols.iter().zip(vals) {
                trip.push((nb + r, j, v));
                trip.push((j, nb + r, v));
            }
            let (cols, vals) = self.m.row(r);
            trip.extend(cols.iter().zip(vals).map(|(&j, &v)| (nb + r, nb + j, -v)));
        }
        CsrMatrix::from_triplets(self.len(), self.len(), &trip).expect("indices in range")
    }
}

/// Stack the blocks into a saddle system, checking dimensions.
pub fn build_saddle_system(
    a: CsrMatrix,
    c: CsrMatrix,
    m: CsrMatrix,
    f: Vec<f64>,
    g: Vec<f64>,
) -> Result<SaddleSystem> {
    let nb = a.nrows();
    let nl = c.nrows();
    let checks = [
        (a.ncols() == nb, format!("A is {}x{}", nb, a.ncols())),
        (
            c.ncols() == nb,
            format!("C has {} columns, A has {nb} rows", c.ncols()),
        ),
        (
            m.nrows() == nl && m.ncols() == nl,
            format!("M is {}x{}, C has {nl} rows", m.nrows(), m.ncols()),
        ),
        (
            f.len() == nb,
            format!("F has length {}, expected {nb}", f.len()),
        ),
        (
            g.len() == nl,
            format!("G has length {}, expected {nl}", g.len()),
        ),
    ];
    for (ok, msg) in checks {
        if !ok {
            return Err(Error::DimensionMismatch(msg));
        }
    }
    Ok(SaddleSystem {
        a,
        c,
        m,
        f,
        g,
        hierarchy: None,
    })
}

type Field = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;

/// Data of the transmission problem: bulk source `f`, inclusion datum `g`,
/// outer boundary datum `g_boundary`, and the Robin parameter.
#[derive(Clone)]
pub struct ProblemData {
    pub f: Field,
    pub g: Field,
    pub g_boundary: Field,
    pub kappa: f64,
}

impl fmt::Debug for ProblemData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemData")
            .field("kappa", &self.kappa)
            .finish_non_exhaustive()
    }
}

impl ProblemData {
    pub fn new(
        f: impl Fn(&Point) -> f64 + Send + Sync + 'static,
        g: impl Fn(&Point) -> f64 + Send + Sync + 'static,
        g_boundary: impl Fn(&Point) -> f64 + Send + Sync + 'static,
        kappa: f64,
    ) -> Result<Self> {
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::Parameter(format!(
                "kappa must be non-negative, got {kappa}"
            )));
        }
        Ok(Self {
            f: Arc::new(f),
            g: Arc::new(g),
            g_boundary: Arc::new(g_boundary),
            kappa,
        })
    }

    /// Constant data, handy for tests.
    pub fn constant(f: f64, g: f64, g_boundary: f64, kappa: f64) -> Result<Self> {
        Self::new(move |_| f, move |_| g, move |_| g_boundary, kappa)
    }

    pub fn with_kappa(&self, kappa: f64) -> Result<Self> {
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::Parameter(format!(
                "kappa must be non-negative, got {kappa}"
            )));
        }
        Ok(Self {
            kappa,
            ..self.clone()
        })
    }
}

/// The multiplier block of one inclusion inside the stacked system.
#[derive(Debug, Clone)]
pub struct InclusionBlock {
    pub inclusion: Inclusion,
    pub quadrature: BoundaryQuadrature,
    /// First multiplier row of this inclusion.
    pub offset: usize,
    pub len: usize,
}

/// A fully assembled reduced problem on one mesh.
#[derive(Debug, Clone)]
pub struct CoupledProblem {
    pub space: FeSpace,
    pub basis: ModalBasis,
    pub blocks: Vec<InclusionBlock>,
    pub dirichlet: DirichletValues,
    pub system: SaddleSystem,
}

impl CoupledProblem {
    /// Assemble the reduced saddle system for `inclusions` on `space`. The
    /// bulk block is the stiffness matrix with the box boundary eliminated;
    /// coupling columns on eliminated dofs are moved into `G`.
    pub fn assemble(
        space: &FeSpace,
        inclusions: &[Inclusion],
        basis: ModalBasis,
        data: &ProblemData,
        opts: QuadratureOptions,
    ) -> Result<Self> {
        validate_inclusions(space.mesh().domain(), inclusions)?;
        let quads: Vec<BoundaryQuadrature> = inclusions
            .iter()
            .map(|inc| BoundaryQuadrature::new(inc, &basis, opts))
            .collect::<Result<_>>()?;

        let (mut a, (mut f, dirichlet)) = rayon::join(
            || assemble_stiffness(space),
            || {
                let f = assemble_load(space, |p| (data.f)(p));
                let d = DirichletValues::on_boundary(space, |p| (data.g_boundary)(p));
                (f, d)
            },
        );
        dirichlet.apply(&mut a, &mut f);

        let parts: Vec<(CsrMatrix, Vec<f64>, CsrMatrix)> = quads
            .par_iter()
            .map(|q| {
                let mut c = assemble_coupling(space, &basis, q)?;
                let mut g = assemble_constraint_rhs(|p| (data.g)(p), &basis, q);
                dirichlet.apply_to_columns(&mut c, &mut g);
                let m = assemble_robin(&basis, q, data.kappa)?;
                Ok((c, g, m))
            })
            .collect::<Result<_>>()?;

        let mut blocks = Vec::with_capacity(inclusions.len());
        let mut offset = 0;
        for (inc, q) in inclusions.iter().zip(&quads) {
            let len = num_multipliers(&basis, q);
            blocks.push(InclusionBlock {
                inclusion: *inc,
                quadrature: q.clone(),
                offset,
                len,
            });
            offset += len;
        }
        let (c, g, m) = stack_blocks(space.num_dofs(), offset, parts);
        let system = build_saddle_system(a, c, m, f, g)?.with_hierarchy(BulkHierarchy {
            mesh: space.mesh().clone(),
            stiffness_coeff: 1.0,
            mass_coeff: 0.0,
        })?;
        Ok(Self {
            space: space.clone(),
            basis,
            blocks,
            dirichlet,
            system,
        })
    }

    /// Multiplier coefficients of block `k` inside a stacked vector.
    pub fn block_slice<'a>(&self, k: usize, lambda: &'a [f64]) -> &'a [f64] {
        let b = &self.blocks[k];
        &lambda[b.offset..b.offset + b.len]
    }
}

/// Place per-inclusion blocks on the diagonal of the multiplier index range.
fn stack_blocks(
    nbulk: usize,
    nmult: usize,
    parts: Vec<(CsrMatrix, Vec<f64>, CsrMatrix)>,
) -> (CsrMatrix, Vec<f64>, CsrMatrix) {
    let mut ct = Vec::new();
    let mut mt = Vec::new();
    let mut g = Vec::with_capacity(nmult);
    let mut off = 0;
    for (c, gb, m) in parts {
        for r in 0..c.nrows() {
            let (cols, vals) = c.row(r);
            ct.extend(cols.iter().zip(vals).map(|(&j, &v)| (off + r, j, v)));
            let (cols, vals) = m.row(r);
            mt.extend(cols.iter().zip(vals).map(|(&j, &v)| (off + r, off + j, v)));
        }
        off += c.nrows();
        g.extend(gb);
    }
    let c = CsrMatrix::from_triplets(nmult, nbulk, &ct).expect("indices in range");
    let mut m = CsrMatrix::from_triplets(nmult, nmult, &mt).expect("indices in range");
    m.set_symmetric_flag(true);
    (c, g, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::BoxDomain;
    use crate::modal::Axis;
    use std::f64::consts::PI;

    fn space(dim: usize, level: u32) -> FeSpace {
        FeSpace::new(StructuredMesh::new(BoxDomain::symmetric_unit(dim).unwrap(), level).unwrap())
    }

    fn row_sum(c: &CsrMatrix, r: usize) -> f64 {
        c.row(r).1.iter().sum()
    }

    #[test]
    fn coupling_row_sums() {
        let s = space(2, 5);
        let d = Inclusion::disk([0.1, 0.05], 0.2).unwrap();
        let b = ModalBasis::new(3);
        let q = BoundaryQuadrature::new(&d, &b, QuadratureOptions::for_mesh(s.mesh().h())).unwrap();
        let c = assemble_coupling(&s, &b, &q).unwrap();
        assert!((row_sum(&c, 0) - 2.0 * PI * 0.2).abs() < 1e-12);
        for r in 1..b.num_modes() {
            assert!(row_sum(&c, r).abs() < 1e-12);
        }
    }

    #[test]
    fn coupling_of_linear_field() {
        let s = space(2, 4);
        let d = Inclusion::disk([0.0, 0.0], 0.2).unwrap();
        let b = ModalBasis::new(1);
        let q = BoundaryQuadrature::new(&d, &b, QuadratureOptions::default()).unwrap();
        let c = assemble_coupling(&s, &b, &q).unwrap();
        let x = s.interpolate(|p| p[0]);
        let cx = c.mul_vec(x.coeffs());
        assert!((cx[1] - PI * 0.04).abs() < 1e-12);
        assert!(cx[0].abs() < 1e-14 && cx[2].abs() < 1e-14);
    }

    #[test]
    fn constraint_rhs_examples() {
        let eps: f64 = 0.2;
        let d = Inclusion::disk([0.0, 0.0], eps).unwrap();
        let b = ModalBasis::new(2);
        let q = BoundaryQuadrature::new(&d, &b, QuadratureOptions::default()).unwrap();
        let g = assemble_constraint_rhs(|_| -eps.ln(), &b, &q);
        assert!((g[0] + eps.ln() * 2.0 * PI * eps).abs() < 1e-13);
        assert!(g[1..].iter().all(|v| v.abs() < 1e-14));
        let g = assemble_constraint_rhs(|p| p[0], &b, &q);
        assert!((g[1] - PI * eps * eps).abs() < 1e-14);
        assert!(g.iter().enumerate().all(|(i, v)| i == 1 || v.abs() < 1e-14));
        assert!(assemble_constraint_rhs(|_| 0.0, &b, &q)
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn robin_matches_quadrature() {
        let c = Inclusion::cylinder(Axis::Z, [0.0, 0.0], [-0.25, 0.25], 0.2).unwrap();
        let b = ModalBasis::new(2);
        let q = BoundaryQuadrature::new(&c, &b, QuadratureOptions::for_mesh(0.125)).unwrap();
        let m = assemble_robin(&b, &q, 2.5).unwrap();
        assert!(m.is_symmetric());
        let nm = b.num_modes();
        let n = num_multipliers(&b, &q);
        let mut dense = nalgebra::DMatrix::<f64>::zeros(n, n);
        let mut phi = vec![0.0; nm];
        for p in q.points() {
            b.eval_all(p.theta, &mut phi);
            for &(a, ca) in p.axial() {
                for &(bb, cb) in p.axial() {
                    for i in 0..nm {
                        for j in 0..nm {
                            dense[(a * nm + i, bb * nm + j)] +=
                                2.5 * p.weight * ca * cb * phi[i] * phi[j];
                        }
                    }
                }
            }
        }
        assert!((m.to_dense() - dense).amax() < 1e-13);

        let d = Inclusion::disk([0.0, 0.0], 0.2).unwrap();
        let q = BoundaryQuadrature::new(&d, &b, QuadratureOptions::default()).unwrap();
        let m = assemble_robin(&b, &q, 1.0).unwrap();
        assert!((m.get(0, 0) - 2.0 * PI * 0.2).abs() < 1e-14);
        assert!((m.get(1, 1) - PI * 0.2).abs() < 1e-14);
        assert_eq!(m.nnz(), nm);
        assert_eq!(assemble_robin(&b, &q, 0.0).unwrap().nnz(), 0);
        assert!(matches!(
            assemble_robin(&b, &q, -1.0),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn saddle_system_shape_and_symmetry() {
        let s = space(2, 4);
        let incs = [
            Inclusion::disk([-0.4, 0.0], 0.2).unwrap(),
            Inclusion::disk([0.4, 0.0], 0.2).unwrap(),
        ];
        let data = ProblemData::constant(0.0, 1.0, 0.0, 0.5).unwrap();
        let p = CoupledProblem::assemble(
            &s,
            &incs,
            ModalBasis::new(1),
            &data,
            QuadratureOptions::default(),
        )
        .unwrap();
        assert_eq!(p.system.len(), s.num_dofs() + 6);
        assert!(p.system.to_csr().is_symmetric());
        assert_eq!(p.blocks[1].offset, 3);

        let none = CoupledProblem::assemble(
            &s,
            &[],
            ModalBasis::new(1),
            &data,
            QuadratureOptions::default(),
        )
        .unwrap();
        assert_eq!(none.system.num_multipliers(), 0);
    }

    #[test]
    fn dimension_checks() {
        let a = CsrMatrix::identity(2);
        let c = CsrMatrix::from_dense(&nalgebra::DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 0.0]));
        let r = build_saddle_system(a, c, CsrMatrix::zeros(1, 1), vec![0.0; 2], vec![1.0]);
        assert!(matches!(r, Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn outside_point_is_a_geometry_error() {
        let s = space(2, 3);
        let b = ModalBasis::new(0);
        let d = Inclusion::disk([0.95, 0.0], 0.2).unwrap();
        let q = BoundaryQuadrature::new(&d, &b, QuadratureOptions::default()).unwrap();
        assert!(matches!(
            assemble_coupling(&s, &b, &q),
            Err(Error::Geometry(_))
        ));
    }
}
