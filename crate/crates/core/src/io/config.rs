use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{CustomProblem, ManufacturedProblem, Method, ProblemId, SweepSpec};
use crate::modal::validate_inclusions;
use crate::solver::{SolverOptions, SolverPath};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default)]
    pub path: SolverPath,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
}

fn default_tol() -> f64 {
    SolverOptions::default().tol
}

fn default_max_iterations() -> usize {
    SolverOptions::default().max_iterations
}

fn default_workers() -> usize {
    1
}

fn yes() -> bool {
    true
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = SolverOptions::default();
        Self {
            path: d.path,
            tol: d.tol,
            max_iterations: d.max_iterations,
        }
    }
}

impl From<SolverConfig> for SolverOptions {
    fn from(c: SolverConfig) -> Self {
        SolverOptions {
            path: c.path,
            tol: c.tol,
            max_iterations: c.max_iterations,
        }
    }
}

/// A validated run description. Produce it with [`parse_config`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemId,
    /// Geometry and data; required exactly when `problem` is `CUSTOM`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub custom: Option<CustomProblem>,
    pub levels: Vec<u32>,
    pub epsilons: Vec<f64>,
    pub orders: Vec<usize>,
    /// Robin parameters; empty means Dirichlet coupling only.
    #[serde(default)]
    pub kappas: Vec<f64>,
    #[serde(default)]
    pub method: Method,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Output directory; the command line flag takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// Leave wall-clock columns empty so repeated runs are byte-identical.
    #[serde(default = "yes")]
    pub deterministic: bool,
    /// Write a VTK file per solved field (solve command).
    #[serde(default)]
    pub vtk: bool,
}

/// Parse and validate a JSON run description. Errors name the offending key
/// path, e.g. `epsilons[0]`.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::config(path, e.into_inner().to_string())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        match (self.problem, &self.custom) {
            (ProblemId::Custom, None) => {
                return Err(Error::config("custom", "required when problem is CUSTOM"))
            }
            (p, Some(_)) if p != ProblemId::Custom => {
                return Err(Error::config(
                    "custom",
                    format!("not allowed with problem {p}"),
                ))
            }
            _ => {}
        }
        non_empty("levels", self.levels.len())?;
        non_empty("epsilons", self.epsilons.len())?;
        non_empty("orders", self.orders.len())?;
        for (i, &l) in self.levels.iter().enumerate() {
            if l == 0 {
                return Err(Error::config(
                    format!("levels[{i}]"),
                    "level must be at least 1",
                ));
            }
        }
        for (i, &e) in self.epsilons.iter().enumerate() {
            if !(e.is_finite() && e > 0.0) {
                return Err(Error::config(
                    format!("epsilons[{i}]"),
                    format!("must be positive, got {e}"),
                ));
            }
        }
        for (i, &k) in self.kappas.iter().enumerate() {
            if !(k.is_finite() && k >= 0.0) {
                return Err(Error::config(
                    format!("kappas[{i}]"),
                    format!("must be non-negative, got {k}"),
                ));
            }
        }
        if !(self.solver.tol > 0.0 && self.solver.tol < 1.0) {
            return Err(Error::config(
                "solver.tol",
                format!("must lie in (0, 1), got {}", self.solver.tol),
            ));
        }
        if self.solver.max_iterations == 0 {
            return Err(Error::config("solver.max_iterations", "must be positive"));
        }
        if self.workers == 0 {
            return Err(Error::config("workers", "must be at least 1"));
        }
        if let Some(c) = &self.custom {
            let dim = c.lower.len();
            if !(2..=3).contains(&dim) || c.upper.len() != dim {
                return Err(Error::config(
                    "custom.lower",
                    "domain corners must both have 2 or 3 entries",
                ));
            }
            if c.centers.is_empty() {
                return Err(Error::config(
                    "custom.centers",
                    "at least one inclusion is required",
                ));
            }
            match (&c.spans, dim) {
                (None, 3) => return Err(Error::config("custom.spans", "required in 3D")),
                (Some(_), 2) => return Err(Error::config("custom.spans", "not allowed in 2D")),
                (Some(s), _) if s.len() != c.centers.len() => {
                    return Err(Error::config("custom.spans", "needs one entry per centre"))
                }
                _ => {}
            }
        }
        for (i, &e) in self.epsilons.iter().enumerate() {
            let mp = self
                .problem_at(e)
                .map_err(|err| Error::config(format!("epsilons[{i}]"), err.to_string()))?;
            validate_inclusions(&mp.domain()?, &mp.inclusions()?)?;
        }
        Ok(())
    }

    pub fn problem_at(&self, epsilon: f64) -> Result<ManufacturedProblem> {
        match &self.custom {
            Some(c) => ManufacturedProblem::custom(c.clone(), epsilon),
            None => ManufacturedProblem::new(self.problem, epsilon),
        }
    }

    pub fn solver_options(&self) -> SolverOptions {
        self.solver.into()
    }

    pub fn sweep_spec(&self) -> SweepSpec {
        SweepSpec {
            problem: self.problem,
            custom: self.custom.clone(),
            levels: self.levels.clone(),
            epsilons: self.epsilons.clone(),
            orders: self.orders.clone(),
            kappas: self.kappas.clone(),
            method: self.method,
            solver: self.solver_options(),
            workers: self.workers,
        }
    }

    /// Pretty JSON that parses back to an equal config.
    pub fn echo(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }
}

fn non_empty(key: &str, len: usize) -> Result<()> {
    if len == 0 {
        Err(Error::config(key, "must not be empty"))
    } else {
        Ok(())
    }
}
