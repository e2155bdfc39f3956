use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coupling::ProblemData;
use crate::error::{Error, Result};
use crate::fem::ScalarField;
use crate::mesh::{BoxDomain, Point};
use crate::modal::{Axis, Inclusion};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ProblemId {
    D1,
    D2,
    D3,
    #[serde(rename = "TWO_INC")]
    TwoInc,
    #[serde(rename = "THREE_CYL")]
    ThreeCyl,
    #[serde(rename = "CUSTOM")]
    Custom,
}

impl ProblemId {
    pub fn name(self) -> &'static str {
        match self {
            ProblemId::D1 => "D1",
            ProblemId::D2 => "D2",
            ProblemId::D3 => "D3",
            ProblemId::TwoInc => "TWO_INC",
            ProblemId::ThreeCyl => "THREE_CYL",
            ProblemId::Custom => "CUSTOM",
        }
    }

    pub fn has_exact(self) -> bool {
        matches!(self, ProblemId::D1 | ProblemId::D2 | ProblemId::D3)
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Axis of a custom cylinder together with the extent along it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CylinderSpan {
    pub axis: Axis,
    pub range: [f64; 2],
}

/// A user-defined geometry with constant data. Inclusion radii come from
/// the epsilon sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomProblem {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Centres in the cross-section plane of each inclusion.
    pub centers: Vec<[f64; 2]>,
    /// One entry per centre in 3D; absent in 2D.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spans: Option<Vec<CylinderSpan>>,
    #[serde(default)]
    pub f: f64,
    #[serde(default = "one")]
    pub g: f64,
    #[serde(default)]
    pub g_boundary: f64,
}

fn one() -> f64 {
    1.0
}

/// A problem instance at a given inclusion radius.
#[derive(Debug, Clone, PartialEq)]
pub struct ManufacturedProblem {
    pub id: ProblemId,
    pub epsilon: f64,
    pub custom: Option<CustomProblem>,
}

/// Cylinders of the three-cylinder preset: z-aligned, height 0.5, staggered
/// in height so no two share the same z-interval.
pub const THREE_CYLINDERS: [([f64; 2], [f64; 2]); 3] = [
    ([-0.4, -0.4], [-0.5, 0.0]),
    ([0.4, -0.3], [-0.25, 0.25]),
    ([0.0, 0.4], [0.0, 0.5]),
];

impl ManufacturedProblem {
    pub fn new(id: ProblemId, epsilon: f64) -> Result<Self> {
        if id == ProblemId::Custom {
            return Err(Error::Parameter("custom problems need a geometry".into()));
        }
        Self::check_eps(epsilon)?;
        Ok(Self {
            id,
            epsilon,
            custom: None,
        })
    }

    pub fn custom(problem: CustomProblem, epsilon: f64) -> Result<Self> {
        Self::check_eps(epsilon)?;
        Ok(Self {
            id: ProblemId::Custom,
            epsilon,
            custom: Some(problem),
        })
    }

    fn check_eps(epsilon: f64) -> Result<()> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Parameter(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match (&self.id, &self.custom) {
            (ProblemId::ThreeCyl, _) => 3,
            (ProblemId::Custom, Some(c)) => c.lower.len(),
            _ => 2,
        }
    }

    pub fn domain(&self) -> Result<BoxDomain> {
        match &self.custom {
            Some(c) => BoxDomain::new(&c.lower, &c.upper),
            None => BoxDomain::symmetric_unit(self.dim()),
        }
    }

    pub fn inclusions(&self) -> Result<Vec<Inclusion>> {
        let e = self.epsilon;
        match self.id {
            ProblemId::D1 | ProblemId::D2 | ProblemId::D3 => {
                Ok(vec![Inclusion::disk([0.0, 0.0], e)?])
            }
            ProblemId::TwoInc => Ok(vec![
                Inclusion::disk([-0.4, 0.0], e)?,
                Inclusion::disk([0.4, 0.0], e)?,
            ]),
            ProblemId::ThreeCyl => THREE_CYLINDERS
                .iter()
                .map(|(c, z)| Inclusion::cylinder(Axis::Z, *c, *z, e))
                .collect(),
            ProblemId::Custom => {
                let c = self.custom.as_ref().expect("custom geometry");
                match &c.spans {
                    None => c.centers.iter().map(|p| Inclusion::disk(*p, e)).collect(),
                    Some(spans) => {
                        if spans.len() != c.centers.len() {
                            return Err(Error::LengthMismatch {
                                expected: c.centers.len(),
                                actual: spans.len(),
                            });
                        }
                        c.centers
                            .iter()
                            .zip(spans)
                            .map(|(p, s)| Inclusion::cylinder(s.axis, *p, s.range, e))
                            .collect()
                    }
                }
            }
        }
    }

    pub fn data(&self, kappa: f64) -> Result<ProblemData> {
        let e = self.epsilon;
        match self.id {
            ProblemId::D1 | ProblemId::D2 | ProblemId::D3 => {
                let id = self.id;
                ProblemData::new(
                    |_| 0.0,
                    move |p| interior(id, e, p).0,
                    move |p| exterior(id, e, p).0,
                    kappa,
                )
            }
            ProblemId::TwoInc | ProblemId::ThreeCyl => ProblemData::constant(0.0, 1.0, 0.0, kappa),
            ProblemId::Custom => {
                let c = self.custom.as_ref().expect("custom geometry");
                ProblemData::constant(c.f, c.g, c.g_boundary, kappa)
            }
        }
    }

    pub fn exact(&self) -> Result<ExactSolution> {
        if !self.id.has_exact() {
            return Err(Error::Unsupported(format!(
                "problem {} has no closed-form solution",
                self.id
            )));
        }
        Ok(ExactSolution {
            id: self.id,
            epsilon: self.epsilon,
        })
    }
}

/// Piecewise harmonic reference solution of D1, D2 or D3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactSolution {
    id: ProblemId,
    epsilon: f64,
}

impl ExactSolution {
    /// Value and gradient, selecting the interior formula for `rho < eps`.
    pub fn eval(&self, p: &Point) -> (f64, Point) {
        if p[0].hypot(p[1]) < self.epsilon {
            interior(self.id, self.epsilon, p)
        } else {
            exterior(self.id, self.epsilon, p)
        }
    }
}

impl ScalarField for ExactSolution {
    fn value(&self, p: &Point) -> f64 {
        self.eval(p).0
    }

    fn gradient(&self, p: &Point) -> Point {
        self.eval(p).1
    }
}

/// Value and gradient of `Re F` for holomorphic `F`.
fn re_holo(f: Complex64, df: Complex64) -> (f64, Point) {
    (f.re, [df.re, -df.im, 0.0])
}

fn interior(id: ProblemId, e: f64, p: &Point) -> (f64, Point) {
    let z = Complex64::new(p[0], p[1]);
    match id {
        ProblemId::D1 => (-e.ln(), [0.0; 3]),
        ProblemId::D2 => (p[0], [1.0, 0.0, 0.0]),
        ProblemId::D3 => re_holo(
            2.0 * z * z * z - z * z + z + 1.0,
            6.0 * z * z - 2.0 * z + 1.0,
        ),
        _ => unreachable!("no closed form"),
    }
}

fn exterior(id: ProblemId, e: f64, p: &Point) -> (f64, Point) {
    let z = Complex64::new(p[0], p[1]);
    let r2 = p[0] * p[0] + p[1] * p[1];
    match id {
        ProblemId::D1 => (-0.5 * r2.ln(), [-p[0] / r2, -p[1] / r2, 0.0]),
        ProblemId::D2 => {
            let e2 = e * e;
            re_holo(e2 / z, -e2 / (z * z))
        }
        ProblemId::D3 => {
            let (e2, e4, e6) = (e * e, e.powi(4), e.powi(6));
            let zi = z.inv();
            let zi2 = zi * zi;
            let zi3 = zi2 * zi;
            let (v, g) = re_holo(
                2.0 * e6 * zi3 - e4 * zi2 + e2 * zi,
                -6.0 * e6 * zi3 * zi + 2.0 * e4 * zi3 - e2 * zi2,
            );
            let le = e.ln();
            (
                v + 0.5 * r2.ln() / le,
                [g[0] + p[0] / (r2 * le), g[1] + p[1] / (r2 * le), 0.0],
            )
        }
        _ => unreachable!("no closed form"),
    }
}

/// Value and gradient of a problem's exact solution at `p`.
pub fn exact_eval(id: ProblemId, epsilon: f64, p: &Point) -> Result<(f64, Point)> {
    Ok(ManufacturedProblem::new(id, epsilon)?.exact()?.eval(p))
}
