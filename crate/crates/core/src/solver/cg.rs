use crate::error::{Error, Result};
use crate::fem::CsrMatrix;

pub trait Preconditioner: Sync {
    /// `z = B r` for a symmetric positive definite `B`.
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

pub struct Identity;

impl Preconditioner for Identity {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

pub struct Jacobi {
    inv_diag: Vec<f64>,
}

impl Jacobi {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let inv_diag = a
            .diagonal()
            .into_iter()
            .enumerate()
            .map(|(i, d)| {
                if d > 0.0 {
                    Ok(1.0 / d)
                } else {
                    Err(Error::Solver {
                        block: "bulk block A",
                        message: format!("non-positive diagonal entry {d} in row {i}"),
                    })
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self { inv_diag })
    }
}

impl Preconditioner for Jacobi {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        for ((z, r), d) in z.iter_mut().zip(r).zip(&self.inv_diag) {
            *z = r * d;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOutcome {
    pub iterations: usize,
    /// `||b - A x|| / ||b||` from the recurrence.
    pub residual: f64,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Preconditioned conjugate gradients for `A x = b` starting from `x`.
/// `block` names the operator in breakdown messages.
pub fn pcg(
    apply: impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    precond: &dyn Preconditioner,
    tol: f64,
    max_iterations: usize,
    block: &'static str,
) -> Result<CgOutcome> {
    let n = b.len();
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgOutcome {
            iterations: 0,
            residual: 0.0,
        });
    }
    let mut r = vec![0.0; n];
    apply(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut rnorm = dot(&r, &r).sqrt();
    let mut best = rnorm / bnorm;
    if best <= tol {
        return Ok(CgOutcome {
            iterations: 0,
            residual: best,
        });
    }
    let mut z = vec![0.0; n];
    precond.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 1..=max_iterations {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Solver {
                block,
                message: format!(
                    "conjugate gradients broke down (p^T A p = {pap:e}) at iteration {it}"
                ),
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rnorm = dot(&r, &r).sqrt();
        best = best.min(rnorm / bnorm);
        if rnorm / bnorm <= tol {
            return Ok(CgOutcome {
                iterations: it,
                residual: rnorm / bnorm,
            });
        }
        precond.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::EffortExceeded {
        solver: block,
        iterations: max_iterations,
        best_residual: best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_spd() {
        let a = CsrMatrix::from_dense(&nalgebra::DMatrix::from_row_slice(
            3,
            3,
            &[4.0, 1.0, 0.0, 1.0, 3.0, -1.0, 0.0, -1.0, 2.0],
        ));
        let b = [1.0, 2.0, 3.0];
        let mut x = [0.0; 3];
        let jac = Jacobi::new(&a).unwrap();
        let out = pcg(
            |v, y| a.mul_vec_into(v, y),
            &b,
            &mut x,
            &jac,
            1e-14,
            10,
            "test",
        )
        .unwrap();
        assert!(out.iterations <= 3);
        let ax = a.mul_vec(&x);
        for (u, v) in ax.iter().zip(b) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn reports_effort_and_breakdown() {
        let a = CsrMatrix::from_dense(&nalgebra::DMatrix::from_diagonal(
            &nalgebra::DVector::from_vec((1..=50).map(|k| k as f64).collect()),
        ));
        let b = vec![1.0; 50];
        let mut x = vec![0.0; 50];
        let r = pcg(
            |v, y| a.mul_vec_into(v, y),
            &b,
            &mut x,
            &Identity,
            1e-14,
            3,
            "A",
        );
        assert!(matches!(
            r,
            Err(Error::EffortExceeded { iterations: 3, .. })
        ));

        let neg = CsrMatrix::from_dense(&nalgebra::DMatrix::from_row_slice(
            2,
            2,
            &[-1.0, 0.0, 0.0, -1.0],
        ));
        let mut x = vec![0.0; 2];
        let r = pcg(
            |v, y| neg.mul_vec_into(v, y),
            &[1.0, 0.0],
            &mut x,
            &Identity,
            1e-12,
            5,
            "A",
        );
        assert!(matches!(r, Err(Error::Solver { block: "A", .. })));
        assert!(Jacobi::new(&neg).is_err());
    }
}
