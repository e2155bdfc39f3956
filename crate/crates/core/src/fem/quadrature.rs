//! Gauss-Legendre rules on `[0, 1]` and their tensor products.

use crate::mesh::Point;

/// Gauss-Legendre nodes and weights mapped to `[0, 1]`.
pub fn gauss_legendre_unit(points: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w): (Vec<f64>, Vec<f64>) = match points {
        1 => (vec![0.0], vec![2.0]),
        2 => {
            let a = 1.0 / 3f64.sqrt();
            (vec![-a, a], vec![1.0, 1.0])
        }
        3 => {
            let a = (3.0f64 / 5.0).sqrt();
            (vec![-a, 0.0, a], vec![5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
        }
        4 => {
            let s = (6.0f64 / 5.0).sqrt();
            let a = ((3.0 - 2.0 * s) / 7.0).sqrt();
            let b = ((3.0 + 2.0 * s) / 7.0).sqrt();
            let wa = (18.0 + 30f64.sqrt()) / 36.0;
            let wb = (18.0 - 30f64.sqrt()) / 36.0;
            (vec![-b, -a, a, b], vec![wb, wa, wa, wb])
        }
        _ => panic!("Gauss-Legendre rule with {points} points is not tabulated"),
    };
    (
        x.iter().map(|t| 0.5 * (t + 1.0)).collect(),
        w.iter().map(|w| 0.5 * w).collect(),
    )
}

/// Tensor Gauss rule on the reference cell `[0, 1]^dim`.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    points: Vec<Point>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn tensor_gauss(dim: usize, points_per_axis: usize) -> Self {
        let (x, w) = gauss_legendre_unit(points_per_axis);
        let n = points_per_axis;
        let total = n.pow(dim as u32);
        let mut points = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        for k in 0..total {
            let mut p = [0.0; 3];
            let mut wt = 1.0;
            let mut rest = k;
            for slot in p.iter_mut().take(dim) {
                let i = rest % n;
                rest /= n;
                *slot = x[i];
                wt *= w[i];
            }
            points.push(p);
            weights.push(wt);
        }
        Self { points, weights }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, f64)> {
        self.points.iter().zip(self.weights.iter().copied())
    }
}
