use nalgebra::{Cholesky, DMatrix, SymmetricEigen};

use super::saddle::{coupled_columns, dense_schur, BulkSolver};
use crate::coupling::{assemble_coupling, multiplier_gram, BulkHierarchy};
use crate::error::{Error, Result};
use crate::fem::{assemble_stiffness_plus_mass, CsrMatrix, DirichletValues, FeSpace};
use crate::modal::{
    validate_inclusions, BoundaryQuadrature, Inclusion, ModalBasis, QuadratureOptions,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfSupEstimate {
    /// `sqrt(lambda_min)` of `C A^{-1} C^T x = lambda M_Q x`.
    pub beta: f64,
    pub lambda_min: f64,
    /// `||S x - lambda M x|| / ||S x||` of the returned eigenpair.
    pub residual: f64,
    pub iterations: usize,
}

const EIGEN_TOL: f64 = 1e-8;
const MAX_SWEEPS: usize = 1000;

/// Smallest eigenpair of the dense pencil `(S, M)` by block inverse
/// iteration with Rayleigh-Ritz on an M-orthogonal subspace; the extra block
/// vectors deflate the nearby spectrum so clustered modes converge.
pub fn smallest_generalized_eigen(s: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<(f64, f64, usize)> {
    let n = s.nrows();
    if n == 0 || s.ncols() != n || m.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "pencil shapes {:?} and {:?}",
            s.shape(),
            m.shape()
        )));
    }
    let sc = Cholesky::new(s.clone()).ok_or_else(|| {
        Error::Numeric("Schur complement is singular: the inf-sup constant is zero".into())
    })?;
    let b = n.min(4);
    let mut x = DMatrix::from_fn(n, b, |i, j| {
        if i % b == j {
            1.0
        } else {
            0.1 / (1.0 + i as f64)
        }
    });
    for it in 1..=MAX_SWEEPS {
        let z = sc.solve(&(m * &x));
        let sp = z.transpose() * s * &z;
        let mp = z.transpose() * m * &z;
        let lp = Cholesky::new((&mp + mp.transpose()) * 0.5)
            .ok_or_else(|| Error::Numeric("inverse iteration lost M-orthogonality".into()))?;
        let linv = lp
            .l()
            .try_inverse()
            .ok_or_else(|| Error::Numeric("singular Ritz basis".into()))?;
        let red = &linv * &sp * linv.transpose();
        let eig = SymmetricEigen::new((&red + red.transpose()) * 0.5);
        let mut order: Vec<usize> = (0..b).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let v = DMatrix::from_fn(b, b, |i, j| eig.eigenvectors[(i, order[j])]);
        x = &z * linv.transpose() * v;

        let lambda = eig.eigenvalues[order[0]];
        let x0 = x.column(0);
        let sx = s * x0;
        let r = &sx - m * x0 * lambda;
        let res = r.norm() / sx.norm();
        if res <= EIGEN_TOL {
            return Ok((lambda, res, it));
        }
    }
    Err(Error::Numeric(format!(
        "inverse iteration did not reach {EIGEN_TOL:e} in {MAX_SWEEPS} sweeps"
    )))
}

/// Inf-sup estimate from the bulk norm matrix, coupling block and
/// multiplier Gram matrix.
pub fn estimate_infsup(
    a_norm: &CsrMatrix,
    hierarchy: Option<&BulkHierarchy>,
    c: &CsrMatrix,
    m_q: &CsrMatrix,
) -> Result<InfSupEstimate> {
    if c.ncols() != a_norm.nrows() || m_q.nrows() != c.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "A_norm {}x{}, C {}x{}, M_Q {}x{}",
            a_norm.nrows(),
            a_norm.ncols(),
            c.nrows(),
            c.ncols(),
            m_q.nrows(),
            m_q.ncols()
        )));
    }
    let bulk = BulkSolver::new(a_norm, hierarchy, 1e-13, 2000)?;
    let y = coupled_columns(&bulk, c)?;
    let s = dense_schur(c, &y, &CsrMatrix::zeros(c.nrows(), c.nrows()));
    let (lambda, residual, iterations) = smallest_generalized_eigen(&s, &m_q.to_dense())?;
    Ok(InfSupEstimate {
        beta: lambda.max(0.0).sqrt(),
        lambda_min: lambda,
        residual,
        iterations,
    })
}

/// Assemble the discrete `H^1_0` norm matrix, the coupling and the modal Gram
/// for `inclusions` on `space`, then estimate the inf-sup constant.
pub fn infsup_on_mesh(
    space: &FeSpace,
    inclusions: &[Inclusion],
    basis: &ModalBasis,
    opts: QuadratureOptions,
) -> Result<InfSupEstimate> {
    validate_inclusions(space.mesh().domain(), inclusions)?;
    let mut a = assemble_stiffness_plus_mass(space, 1.0, 1.0);
    let d = DirichletValues::on_boundary(space, |_| 0.0);
    let mut dummy = vec![0.0; a.nrows()];
    d.apply(&mut a, &mut dummy);

    let mut ct = Vec::new();
    let mut mt = Vec::new();
    let mut off = 0;
    for inc in inclusions {
        let q = BoundaryQuadrature::new(inc, basis, opts)?;
        let mut c = assemble_coupling(space, basis, &q)?;
        let mut g = vec![0.0; c.nrows()];
        d.apply_to_columns(&mut c, &mut g);
        let m = multiplier_gram(basis, &q);
        for r in 0..c.nrows() {
            let (cols, vals) = c.row(r);
            ct.extend(cols.iter().zip(vals).map(|(&j, &v)| (off + r, j, v)));
            let (cols, vals) = m.row(r);
            mt.extend(cols.iter().zip(vals).map(|(&j, &v)| (off + r, off + j, v)));
        }
        off += c.nrows();
    }
    let c = CsrMatrix::from_triplets(off, space.num_dofs(), &ct)?;
    let m = CsrMatrix::from_triplets(off, off, &mt)?;
    let h = BulkHierarchy {
        mesh: space.mesh().clone(),
        stiffness_coeff: 1.0,
        mass_coeff: 1.0,
    };
    estimate_infsup(&a, Some(&h), &c, &m)
}
