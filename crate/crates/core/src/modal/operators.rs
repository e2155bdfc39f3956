use std::f64::consts::PI;

use super::basis::ModalBasis;
use super::quadrature::BoundaryQuadrature;
use crate::error::{Error, Result};
use crate::mesh::Point;

/// Number of multiplier unknowns carried by one inclusion: `N` per axial node.
pub fn num_multipliers(basis: &ModalBasis, quad: &BoundaryQuadrature) -> usize {
    basis.num_modes() * quad.num_axial_nodes()
}

/// Solve a symmetric tridiagonal system in place (Thomas algorithm).
fn solve_tridiagonal(diag: &[f64], off: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    if n == 1 {
        rhs[0] /= diag[0];
        return;
    }
    let mut c = vec![0.0; n];
    let mut d = diag[0];
    c[0] = off[0] / d;
    rhs[0] /= d;
    for k in 1..n {
        d = diag[k] - off[k - 1] * c[k - 1];
        if k < n - 1 {
            c[k] = off[k] / d;
        }
        rhs[k] = (rhs[k] - off[k - 1] * rhs[k - 1]) / d;
    }
    for k in (0..n - 1).rev() {
        rhs[k] -= c[k] * rhs[k + 1];
    }
}

/// Angular averages `avg_i q = (1 / 2 pi) \oint q phi_i d theta` of the
/// samples `q` taken at the quadrature points, per axial node. In 3D the
/// per-section averages are L2-projected onto the axial hat functions.
/// Layout is `a * N + i`.
pub fn weighted_averages(
    samples: &[f64],
    basis: &ModalBasis,
    quad: &BoundaryQuadrature,
) -> Result<Vec<f64>> {
    if samples.len() != quad.len() {
        return Err(Error::LengthMismatch {
            expected: quad.len(),
            actual: samples.len(),
        });
    }
    let nm = basis.num_modes();
    let na = quad.num_axial_nodes();
    let scale = 1.0 / (2.0 * PI * quad.inclusion().radius());
    let mut out = vec![0.0; nm * na];
    let mut phi = vec![0.0; nm];
    for (p, q) in quad.points().iter().zip(samples) {
        basis.eval_all(p.theta, &mut phi);
        for &(a, chi) in p.axial() {
            let wq = p.weight * q * chi * scale;
            for (i, f) in phi.iter().enumerate() {
                out[a * nm + i] += wq * f;
            }
        }
    }
    if let Some(ax) = quad.axial_mesh() {
        let (diag, off) = ax.mass_tridiagonal();
        let mut col = vec![0.0; na];
        for i in 0..nm {
            for a in 0..na {
                col[a] = out[a * nm + i];
            }
            solve_tridiagonal(&diag, &off, &mut col);
            for a in 0..na {
                out[a * nm + i] = col[a];
            }
        }
    }
    Ok(out)
}

/// The modal projection `P q = { c_i^{-1} avg_i q }`.
pub fn modal_project(
    samples: &[f64],
    basis: &ModalBasis,
    quad: &BoundaryQuadrature,
) -> Result<Vec<f64>> {
    let mut v = weighted_averages(samples, basis, quad)?;
    let nm = basis.num_modes();
    for (k, x) in v.iter_mut().enumerate() {
        *x /= basis.orthogonality_constant(k % nm);
    }
    Ok(v)
}

/// Project a function given pointwise.
pub fn modal_project_fn(
    f: impl Fn(&Point) -> f64,
    basis: &ModalBasis,
    quad: &BoundaryQuadrature,
) -> Result<Vec<f64>> {
    let samples: Vec<f64> = quad.points().iter().map(|p| f(&p.x)).collect();
    modal_project(&samples, basis, quad)
}

/// The extension `R^T Lambda = sum_i Lambda_i phi_i` evaluated at every
/// quadrature point.
pub fn modal_extend(
    lambda: &[f64],
    basis: &ModalBasis,
    quad: &BoundaryQuadrature,
) -> Result<Vec<f64>> {
    let nm = basis.num_modes();
    let n = num_multipliers(basis, quad);
    if lambda.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: lambda.len(),
        });
    }
    let mut phi = vec![0.0; nm];
    Ok(quad
        .points()
        .iter()
        .map(|p| {
            basis.eval_all(p.theta, &mut phi);
            p.axial()
                .iter()
                .map(|&(a, chi)| {
                    chi * phi
                        .iter()
                        .zip(&lambda[a * nm..(a + 1) * nm])
                        .map(|(f, l)| f * l)
                        .sum::<f64>()
                })
                .sum()
        })
        .collect())
}

/// The extension evaluated at angle `theta` and axial coordinate `s`.
pub fn extend_at(
    lambda: &[f64],
    basis: &ModalBasis,
    quad: &BoundaryQuadrature,
    theta: f64,
    s: f64,
) -> Result<f64> {
    let nm = basis.num_modes();
    let n = num_multipliers(basis, quad);
    if lambda.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: lambda.len(),
        });
    }
    let mut phi = vec![0.0; nm];
    basis.eval_all(theta, &mut phi);
    let dot = |a: usize| -> f64 {
        phi.iter()
            .zip(&lambda[a * nm..(a + 1) * nm])
            .map(|(f, l)| f * l)
            .sum()
    };
    match quad.axial_mesh() {
        None => Ok(dot(0)),
        Some(ax) => {
            let l = ax.element_length();
            let t = (s - ax.node(0)) / l;
            if !(-1e-12..=ax.elements() as f64 + 1e-12).contains(&t) {
                return Err(Error::Parameter(format!(
                    "axial coordinate {s} outside the cylinder"
                )));
            }
            let e = (t.floor().max(0.0) as usize).min(ax.elements() - 1);
            let r = t - e as f64;
            Ok((1.0 - r) * dot(e) + r * dot(e + 1))
        }
    }
}
