use std::time::Instant;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cg::{dot, pcg, Identity, Jacobi, Preconditioner};
use super::multigrid::Multigrid;
use crate::coupling::{BulkHierarchy, SaddleSystem};
use crate::error::{Error, Result};
use crate::fem::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SolverPath {
    /// Dense Schur complement `C A^{-1} C^T + M` built column by column and
    /// factored by Cholesky. Best when the multiplier count is moderate.
    #[default]
    SchurDirect,
    /// Conjugate gradients on the Schur complement, applied implicitly.
    SchurCg,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub path: SolverPath,
    /// Target relative residual of the full system.
    pub tol: f64,
    /// Iteration cap for the outer Schur CG and for every inner bulk solve.
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            path: SolverPath::SchurDirect,
            tol: 1e-10,
            max_iterations: 2000,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::Parameter(format!(
                "tolerance must lie in (0, 1), got {}",
                self.tol
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::Parameter("max_iterations must be positive".into()));
        }
        Ok(())
    }

    fn inner_tol(&self) -> f64 {
        (self.tol * 1e-3).clamp(1e-14, 1e-12)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub u: Vec<f64>,
    pub lambda: Vec<f64>,
    pub relative_residual: f64,
    /// Outer iterations (Schur CG steps or refinement rounds).
    pub iterations: usize,
    pub wall_seconds: f64,
}

/// Inner solver for the bulk block: multigrid-preconditioned CG when the
/// geometry is known, Jacobi-preconditioned CG otherwise.
pub struct BulkSolver<'a> {
    a: &'a CsrMatrix,
    precond: Box<dyn Preconditioner + 'a>,
    tol: f64,
    max_iterations: usize,
}

impl<'a> BulkSolver<'a> {
    pub fn new(
        a: &'a CsrMatrix,
        hierarchy: Option<&BulkHierarchy>,
        tol: f64,
        max_iterations: usize,
    ) -> Result<Self> {
        let precond: Box<dyn Preconditioner + 'a> = match hierarchy {
            Some(h) => Box::new(Multigrid::new(a, h)?),
            None if a.nrows() == 0 => Box::new(Identity),
            None => Box::new(Jacobi::new(a)?),
        };
        Ok(Self {
            a,
            precond,
            tol,
            max_iterations,
        })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let mut x = vec![0.0; b.len()];
        pcg(
            |v, y| self.a.mul_vec_into(v, y),
            b,
            &mut x,
            self.precond.as_ref(),
            self.tol,
            self.max_iterations,
            "bulk block A",
        )?;
        Ok(x)
    }
}

/// Dense columns of `A^{-1} C^T`, one per multiplier, solved in parallel.
pub fn coupled_columns(bulk: &BulkSolver<'_>, c: &CsrMatrix) -> Result<Vec<Vec<f64>>> {
    let nb = c.ncols();
    (0..c.nrows())
        .into_par_iter()
        .map(|r| {
            let mut b = vec![0.0; nb];
            let (cols, vals) = c.row(r);
            for (&j, &v) in cols.iter().zip(vals) {
                b[j] = v;
            }
            bulk.solve(&b)
        })
        .collect()
}

/// `S = C Y + M`, symmetrized.
pub fn dense_schur(c: &CsrMatrix, y: &[Vec<f64>], m: &CsrMatrix) -> DMatrix<f64> {
    let n = c.nrows();
    let mut s = DMatrix::zeros(n, n);
    for r in 0..n {
        let (cols, vals) = c.row(r);
        for (k, yk) in y.iter().enumerate() {
            s[(r, k)] = cols.iter().zip(vals).map(|(&j, &v)| v * yk[j]).sum::<f64>();
        }
        let (cols, vals) = m.row(r);
        for (&j, &v) in cols.iter().zip(vals) {
            s[(r, j)] += v;
        }
    }
    (&s + s.transpose()) * 0.5
}

fn factor_schur(s: DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(s).ok_or_else(|| Error::Solver {
        block: "coupling block C",
        message: "Schur complement C A^-1 C^T + M is not positive definite; the coupling rows are rank deficient".into(),
    })
}

fn residual(system: &SaddleSystem, u: &[f64], lambda: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
    let (mut top, mut bottom) = system.apply(u, lambda);
    for (t, f) in top.iter_mut().zip(system.f()) {
        *t = f - *t;
    }
    for (b, g) in bottom.iter_mut().zip(system.g()) {
        *b = g - *b;
    }
    let rn = (dot(&top, &top) + dot(&bottom, &bottom)).sqrt();
    let bn = (dot(system.f(), system.f()) + dot(system.g(), system.g())).sqrt();
    let rel = if bn > 0.0 { rn / bn } else { rn };
    (top, bottom, rel)
}

/// Solve the plain bulk problem `A u = F`.
pub fn solve_bulk(
    a: &CsrMatrix,
    f: &[f64],
    hierarchy: Option<&BulkHierarchy>,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    opts.validate()?;
    let start = Instant::now();
    let bulk = BulkSolver::new(a, hierarchy, opts.inner_tol(), opts.max_iterations)?;
    let u = bulk.solve(f)?;
    let r = a.mul_vec(&u);
    let rn: f64 = r
        .iter()
        .zip(f)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    let bn = dot(f, f).sqrt();
    let rel = if bn > 0.0 { rn / bn } else { rn };
    if rel > opts.tol {
        return Err(Error::EffortExceeded {
            solver: "bulk block A",
            iterations: opts.max_iterations,
            best_residual: rel,
        });
    }
    Ok(SolveReport {
        u,
        lambda: Vec::new(),
        relative_residual: rel,
        iterations: 0,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

const REFINEMENT_ROUNDS: usize = 3;

/// Solve the saddle system. Without multipliers this is exactly
/// [`solve_bulk`].
pub fn solve(system: &SaddleSystem, opts: &SolverOptions) -> Result<SolveReport> {
    opts.validate()?;
    if system.num_multipliers() == 0 {
        return solve_bulk(system.a(), system.f(), system.hierarchy(), opts);
    }
    let start = Instant::now();
    let bulk = BulkSolver::new(
        system.a(),
        system.hierarchy(),
        opts.inner_tol(),
        opts.max_iterations,
    )?;
    let mut report = match opts.path {
        SolverPath::SchurDirect => schur_direct(system, &bulk, opts)?,
        SolverPath::SchurCg => schur_cg(system, &bulk, opts)?,
    };
    report.wall_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

fn schur_direct(
    system: &SaddleSystem,
    bulk: &BulkSolver<'_>,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    let c = system.c();
    let y = coupled_columns(bulk, c)?;
    let chol = factor_schur(dense_schur(c, &y, system.m()))?;

    // One block elimination for right-hand side (ru, rl).
    let eliminate = |ru: &[f64], rl: &[f64]| -> Result<(Vec<f64>, Vec<f64>)> {
        let mut u = bulk.solve(ru)?;
        let cu = c.mul_vec(&u);
        let rhs = DVector::from_iterator(rl.len(), cu.iter().zip(rl).map(|(a, b)| a - b));
        let lambda = chol.solve(&rhs);
        for (k, yk) in y.iter().enumerate() {
            let l = lambda[k];
            for (ui, yi) in u.iter_mut().zip(yk) {
                *ui -= l * yi;
            }
        }
        Ok((u, lambda.as_slice().to_vec()))
    };

    let (mut u, mut lambda) = eliminate(system.f(), system.g())?;
    let (mut ru, mut rl, mut rel) = residual(system, &u, &lambda);
    let mut rounds = 0;
    while rel > opts.tol && rounds < REFINEMENT_ROUNDS {
        let (du, dl) = eliminate(&ru, &rl)?;
        u.iter_mut().zip(&du).for_each(|(a, b)| *a += b);
        lambda.iter_mut().zip(&dl).for_each(|(a, b)| *a += b);
        (ru, rl, rel) = residual(system, &u, &lambda);
        rounds += 1;
    }
    if rel > opts.tol {
        return Err(Error::EffortExceeded {
            solver: "schur-direct refinement",
            iterations: rounds,
            best_residual: rel,
        });
    }
    Ok(SolveReport {
        u,
        lambda,
        relative_residual: rel,
        iterations: rounds,
        wall_seconds: 0.0,
    })
}

fn schur_cg(
    system: &SaddleSystem,
    bulk: &BulkSolver<'_>,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    let c = system.c();
    let m = system.m();
    let nb = system.num_bulk();
    let u0 = bulk.solve(system.f())?;
    let cu0 = c.mul_vec(&u0);
    let rhs: Vec<f64> = cu0.iter().zip(system.g()).map(|(a, b)| a - b).collect();

    // Inner failures cannot be propagated through the closure, so the first
    // one is stashed and reported after the iteration.
    let failure = std::sync::Mutex::new(None);
    let apply_s = |v: &[f64], out: &mut [f64]| {
        let mut ct = vec![0.0; nb];
        c.mul_transpose_add(v, &mut ct);
        match bulk.solve(&ct) {
            Ok(y) => c.mul_vec_into(&y, out),
            Err(e) => {
                failure.lock().expect("not poisoned").get_or_insert(e);
                out.iter_mut().for_each(|o| *o = 0.0);
            }
        }
        let mv = m.mul_vec(v);
        out.iter_mut().zip(mv).for_each(|(o, x)| *o += x);
    };
    let mut lambda = vec![0.0; rhs.len()];
    let outcome = pcg(
        apply_s,
        &rhs,
        &mut lambda,
        &Identity,
        opts.tol * 1e-2,
        opts.max_iterations,
        "coupling block C",
    );
    if let Some(e) = failure.into_inner().expect("not poisoned") {
        return Err(e);
    }
    let outcome = outcome.map_err(|e| match e {
        Error::EffortExceeded {
            iterations,
            best_residual,
            ..
        } => Error::EffortExceeded {
            solver: "schur-cg",
            iterations,
            best_residual,
        },
        other => other,
    })?;
    let mut ct = vec![0.0; nb];
    c.mul_transpose_add(&lambda, &mut ct);
    let w = bulk.solve(&ct)?;
    let u: Vec<f64> = u0.iter().zip(&w).map(|(a, b)| a - b).collect();
    let (_, _, rel) = residual(system, &u, &lambda);
    if rel > opts.tol {
        return Err(Error::EffortExceeded {
            solver: "schur-cg",
            iterations: outcome.iterations,
            best_residual: rel,
        });
    }
    Ok(SolveReport {
        u,
        lambda,
        relative_residual: rel,
        iterations: outcome.iterations,
        wall_seconds: 0.0,
    })
}
