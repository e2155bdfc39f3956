//! Manufactured problems, single-case drivers and parameter sweeps.

mod problems;
mod rates;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use problems::{
    exact_eval, CustomProblem, CylinderSpan, ExactSolution, ManufacturedProblem, ProblemId,
    THREE_CYLINDERS,
};
pub use rates::{fit_loglog, LogLogFit, MIN_R2};

use crate::coupling::{CoupledProblem, ProblemData};
use crate::error::{Error, Result};
use crate::fem::{error_norms, FeFunction, FeSpace};
use crate::full_order::{default_segments, reduction_gap, solve_full_order, FullOrderSolution};
use crate::mesh::StructuredMesh;
use crate::modal::{weighted_averages, BoundaryQuadrature, ModalBasis, QuadratureOptions};
use crate::solver::{infsup_on_mesh, solve, InfSupEstimate, SolveReport, SolverOptions};

/// Extra Fourier orders probed beyond the solved ones.
pub const TAIL_MODES: usize = 4;

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default,
)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Reduced,
    Full,
    Both,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Reduced => "reduced",
            Method::Full => "full",
            Method::Both => "both",
        }
    }
}

/// One output row. `None` marks a column that does not apply.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseRow {
    pub problem: ProblemId,
    /// `Reduced` or `Full`.
    pub method: Method,
    pub level: u32,
    pub h: f64,
    pub epsilon: f64,
    pub n: Option<usize>,
    pub kappa: f64,
    pub dofs_bulk: usize,
    pub dofs_lambda: usize,
    pub err_l2: Option<f64>,
    pub err_h1: Option<f64>,
    pub constraint_res: Option<f64>,
    pub gap_l2: Option<f64>,
    pub gap_h1: Option<f64>,
    pub lambda0: Option<f64>,
    pub max_u: Option<f64>,
    pub solve_seconds: f64,
}

impl CaseRow {
    pub fn num_modes(&self) -> Option<usize> {
        self.n.map(|n| 2 * n + 1)
    }

    /// Sort key `(problem, level, epsilon, n, kappa, method)`.
    pub fn cmp_key(&self, other: &Self) -> std::cmp::Ordering {
        self.problem
            .cmp(&other.problem)
            .then(self.level.cmp(&other.level))
            .then(self.epsilon.total_cmp(&other.epsilon))
            .then(self.n.cmp(&other.n))
            .then(self.kappa.total_cmp(&other.kappa))
            .then(self.method.cmp(&other.method))
    }
}

/// Sort rows into the canonical output order.
pub fn sort_rows(rows: &mut [CaseRow]) {
    rows.sort_by(|a, b| a.cmp_key(b));
}

/// A solved reduced problem.
#[derive(Debug, Clone)]
pub struct ReducedSolution {
    pub problem: CoupledProblem,
    pub report: SolveReport,
    pub u: FeFunction,
    pub data: ProblemData,
}

impl ReducedSolution {
    /// Mode-0 coefficient of the first inclusion, averaged over axial nodes.
    pub fn lambda0(&self) -> Option<f64> {
        let b = self.problem.blocks.first()?;
        let nm = self.problem.basis.num_modes();
        let lam = self.problem.block_slice(0, &self.report.lambda);
        let nodes = b.len / nm;
        Some((0..nodes).map(|a| lam[a * nm]).sum::<f64>() / nodes as f64)
    }

    /// Projected mode-0 averages of `u_h` on each inclusion, per axial node.
    pub fn mode0_averages(&self) -> Result<Vec<Vec<f64>>> {
        let nm = self.problem.basis.num_modes();
        self.problem
            .blocks
            .iter()
            .map(|b| {
                let q = &b.quadrature;
                let samples = sample(&self.u, q)?;
                let avg = weighted_averages(&samples, &self.problem.basis, q)?;
                Ok(avg.iter().step_by(nm).copied().collect())
            })
            .collect()
    }
}

fn sample(u: &FeFunction, q: &BoundaryQuadrature) -> Result<Vec<f64>> {
    q.points().iter().map(|p| u.evaluate(&p.x)).collect()
}

pub fn mesh_for(mp: &ManufacturedProblem, level: u32) -> Result<FeSpace> {
    Ok(FeSpace::new(StructuredMesh::new(mp.domain()?, level)?))
}

/// Assemble and solve the reduced problem.
pub fn solve_reduced(
    mp: &ManufacturedProblem,
    level: u32,
    n: usize,
    kappa: f64,
    opts: &SolverOptions,
) -> Result<ReducedSolution> {
    let space = mesh_for(mp, level)?;
    let data = mp.data(kappa)?;
    let problem = CoupledProblem::assemble(
        &space,
        &mp.inclusions()?,
        ModalBasis::new(n),
        &data,
        QuadratureOptions::for_mesh(space.mesh().h()),
    )?;
    let report = solve(&problem.system, opts)?;
    let u = FeFunction::new(space, report.u.clone())?;
    Ok(ReducedSolution {
        problem,
        report,
        u,
        data,
    })
}

/// Weighted modal moments of `g - u_h` on every inclusion up to order
/// `n + TAIL_MODES`: `total` sums all of them, `tail` only the orders above `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintResidual {
    pub total: f64,
    pub tail: f64,
}

pub fn constraint_residual(sol: &ReducedSolution) -> Result<ConstraintResidual> {
    let n = sol.problem.basis.order();
    let ext = ModalBasis::new(n + TAIL_MODES);
    let nm = ext.num_modes();
    let h = sol.problem.space.mesh().h();
    let mut total = 0.0;
    let mut tail = 0.0;
    for b in &sol.problem.blocks {
        let q = BoundaryQuadrature::new(&b.inclusion, &ext, QuadratureOptions::for_mesh(h))?;
        let samples: Vec<f64> = q
            .points()
            .iter()
            .map(|p| Ok((sol.data.g)(&p.x) - sol.u.evaluate(&p.x)?))
            .collect::<Result<_>>()?;
        let avg = weighted_averages(&samples, &ext, &q)?;
        let node_weight: Vec<f64> = match q.axial_mesh() {
            None => vec![1.0],
            Some(ax) => {
                let l = ax.element_length();
                (0..ax.num_nodes())
                    .map(|a| {
                        if a == 0 || a == ax.elements() {
                            0.5 * l
                        } else {
                            l
                        }
                    })
                    .collect()
            }
        };
        for (a, w) in node_weight.iter().enumerate() {
            for k in 0..nm {
                let freq = ModalBasis::frequency(k);
                let m = avg[a * nm + k];
                let v = w * (1 + freq) as f64 * m * m;
                total += v;
                if freq > n {
                    tail += v;
                }
            }
        }
    }
    Ok(ConstraintResidual {
        total: total.sqrt(),
        tail: tail.sqrt(),
    })
}

fn base_row(
    mp: &ManufacturedProblem,
    level: u32,
    space: &FeSpace,
    method: Method,
    kappa: f64,
) -> CaseRow {
    CaseRow {
        problem: mp.id,
        method,
        level,
        h: space.mesh().h(),
        epsilon: mp.epsilon,
        n: None,
        kappa,
        dofs_bulk: space.num_dofs(),
        dofs_lambda: 0,
        err_l2: None,
        err_h1: None,
        constraint_res: None,
        gap_l2: None,
        gap_h1: None,
        lambda0: None,
        max_u: None,
        solve_seconds: 0.0,
    }
}

/// Output row of a reduced solve.
pub fn reduced_row(mp: &ManufacturedProblem, level: u32, sol: &ReducedSolution) -> Result<CaseRow> {
    let space = &sol.problem.space;
    let mut row = base_row(mp, level, space, Method::Reduced, sol.data.kappa);
    row.n = Some(sol.problem.basis.order());
    row.dofs_lambda = sol.problem.system.num_multipliers();
    if let Ok(ex) = mp.exact() {
        let e = error_norms(&sol.u, &ex);
        row.err_l2 = Some(e.l2);
        row.err_h1 = Some(e.h1_semi);
    }
    row.constraint_res = Some(constraint_residual(sol)?.total);
    row.lambda0 = sol.lambda0();
    row.max_u = Some(sol.u.max_value());
    row.solve_seconds = sol.report.wall_seconds;
    Ok(row)
}

/// Output row of a full-order solve.
pub fn full_row(mp: &ManufacturedProblem, level: u32, sol: &FullOrderSolution) -> CaseRow {
    let space = sol.u.space();
    let segments = sol.lambda.len() / mp.inclusions().map_or(1, |v| v.len().max(1));
    let mut row = base_row(mp, level, space, Method::Full, 0.0);
    row.dofs_lambda = sol.lambda.len();
    if let Ok(ex) = mp.exact() {
        let e = error_norms(&sol.u, &ex);
        row.err_l2 = Some(e.l2);
        row.err_h1 = Some(e.h1_semi);
    }
    row.lambda0 = Some(sol.lambda[..segments].iter().sum::<f64>() / segments as f64);
    row.max_u = Some(sol.u.max_value());
    row.solve_seconds = sol.report.wall_seconds;
    row
}

pub fn solve_full(
    mp: &ManufacturedProblem,
    level: u32,
    opts: &SolverOptions,
) -> Result<FullOrderSolution> {
    let space = mesh_for(mp, level)?;
    let segments = default_segments(mp.epsilon, space.mesh().h());
    solve_full_order(&space, &mp.inclusions()?, segments, &mp.data(0.0)?, opts)
}

fn case_name(
    mp: &ManufacturedProblem,
    level: u32,
    n: Option<usize>,
    kappa: f64,
    method: Method,
) -> String {
    let n = n.map_or("-".to_string(), |n| n.to_string());
    format!(
        "{} level={level} epsilon={} n={n} kappa={kappa} method={}",
        mp.id,
        mp.epsilon,
        method.name()
    )
}

/// One case. `Both` returns the full row followed by the reduced row, the
/// latter carrying the gap columns.
pub fn run_case(
    mp: &ManufacturedProblem,
    level: u32,
    n: usize,
    kappa: f64,
    method: Method,
    opts: &SolverOptions,
) -> Result<Vec<CaseRow>> {
    let name = case_name(mp, level, Some(n), kappa, method);
    let run = || -> Result<Vec<CaseRow>> {
        let full = match method {
            Method::Reduced => None,
            _ => Some(solve_full(mp, level, opts)?),
        };
        let mut rows = Vec::new();
        if let Some(f) = &full {
            rows.push(full_row(mp, level, f));
        }
        if method != Method::Full {
            let sol = solve_reduced(mp, level, n, kappa, opts)?;
            let mut row = reduced_row(mp, level, &sol)?;
            if let Some(f) = &full {
                let g = reduction_gap(&f.u, &sol.u)?;
                row.gap_l2 = Some(g.l2);
                row.gap_h1 = Some(g.h1_semi);
            }
            rows.push(row);
        }
        Ok(rows)
    };
    run().map_err(|e| e.in_case(name))
}

#[derive(Debug, Clone)]
pub struct ThreeCylinderOutcome {
    pub row: CaseRow,
    /// Mode-0 averages of `u_h` per cylinder and axial node.
    pub mode0: Vec<Vec<f64>>,
    pub tail: f64,
    pub u: FeFunction,
}

/// The three-cylinder preset with `g = 1` on the cylinders and `0` outside.
pub fn three_cylinder_case(
    level: u32,
    epsilon: f64,
    n: usize,
    opts: &SolverOptions,
) -> Result<ThreeCylinderOutcome> {
    let mp = ManufacturedProblem::new(ProblemId::ThreeCyl, epsilon)?;
    let name = case_name(&mp, level, Some(n), 0.0, Method::Reduced);
    let run = || -> Result<ThreeCylinderOutcome> {
        let sol = solve_reduced(&mp, level, n, 0.0, opts)?;
        let row = reduced_row(&mp, level, &sol)?;
        Ok(ThreeCylinderOutcome {
            row,
            mode0: sol.mode0_averages()?,
            tail: constraint_residual(&sol)?.tail,
            u: sol.u,
        })
    };
    run().map_err(|e| e.in_case(name))
}

#[derive(Debug, Clone)]
pub struct RobinOutcome {
    /// Dirichlet row first, then one row per `kappa` in input order. The gap
    /// columns hold `||u_kappa - u_0||`.
    pub rows: Vec<CaseRow>,
    /// Relative residual of the multiplier equation
    /// `C u - kappa M Lambda = G` for each `kappa`.
    pub identity_residuals: Vec<f64>,
    pub dirichlet: ReducedSolution,
    pub robin: Vec<ReducedSolution>,
}

pub fn robin_consistency_case(
    mp: &ManufacturedProblem,
    level: u32,
    n: usize,
    kappas: &[f64],
    opts: &SolverOptions,
) -> Result<RobinOutcome> {
    if let Some(k) = kappas.iter().find(|k| !(**k > 0.0)) {
        return Err(Error::Parameter(format!(
            "Robin kappas must be positive, got {k}"
        )));
    }
    let name = case_name(mp, level, Some(n), 0.0, Method::Reduced);
    let dirichlet = solve_reduced(mp, level, n, 0.0, opts).map_err(|e| e.in_case(name))?;
    let mut rows = vec![reduced_row(mp, level, &dirichlet)?];
    let mut identity_residuals = Vec::new();
    let mut robin = Vec::new();
    for &k in kappas {
        let name = case_name(mp, level, Some(n), k, Method::Reduced);
        let sol = solve_reduced(mp, level, n, k, opts).map_err(|e| e.in_case(name))?;
        let mut row = reduced_row(mp, level, &sol)?;
        let g = reduction_gap(&sol.u, &dirichlet.u)?;
        row.gap_l2 = Some(g.l2);
        row.gap_h1 = Some(g.h1_semi);
        rows.push(row);

        let sys = &sol.problem.system;
        let (_, bottom) = sys.apply(&sol.report.u, &sol.report.lambda);
        let r: f64 = bottom
            .iter()
            .zip(sys.g())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let scale = sys.rhs().iter().map(|v| v * v).sum::<f64>().sqrt();
        identity_residuals.push(r / scale);
        robin.push(sol);
    }
    Ok(RobinOutcome {
        rows,
        identity_residuals,
        dirichlet,
        robin,
    })
}

/// Inf-sup estimate for the inclusions of `mp`.
pub fn infsup_case(mp: &ManufacturedProblem, level: u32, n: usize) -> Result<InfSupEstimate> {
    let space = mesh_for(mp, level)?;
    infsup_on_mesh(
        &space,
        &mp.inclusions()?,
        &ModalBasis::new(n),
        QuadratureOptions::for_mesh(space.mesh().h()),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub problem: ProblemId,
    pub custom: Option<CustomProblem>,
    pub levels: Vec<u32>,
    pub epsilons: Vec<f64>,
    pub orders: Vec<usize>,
    pub kappas: Vec<f64>,
    pub method: Method,
    pub solver: SolverOptions,
    pub workers: usize,
}

impl SweepSpec {
    pub fn problem_at(&self, epsilon: f64) -> Result<ManufacturedProblem> {
        match &self.custom {
            Some(c) => ManufacturedProblem::custom(c.clone(), epsilon),
            None => ManufacturedProblem::new(self.problem, epsilon),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseFailure {
    pub case: String,
    pub message: String,
}

/// A fitted convergence rate along one sweep axis.
#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub problem: ProblemId,
    pub method: Method,
    /// `"h"` or `"epsilon"`.
    pub axis: &'static str,
    pub quantity: &'static str,
    pub level: Option<u32>,
    pub epsilon: Option<f64>,
    pub n: Option<usize>,
    pub kappa: f64,
    pub fit: LogLogFit,
}

#[derive(Debug, Clone, Default)]
pub struct SweepReport {
    pub rows: Vec<CaseRow>,
    pub rates: Vec<RateRow>,
    pub failures: Vec<CaseFailure>,
}

struct Group {
    level: u32,
    epsilon: f64,
    kappa: f64,
}

/// Receives every solved field together with its row.
pub type FieldSink<'a> = dyn Fn(&CaseRow, &FeFunction) -> Result<()> + Sync + 'a;

fn run_group(
    spec: &SweepSpec,
    g: &Group,
    sink: Option<&FieldSink>,
) -> (Vec<CaseRow>, Vec<CaseFailure>) {
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mp = match spec.problem_at(g.epsilon) {
        Ok(mp) => mp,
        Err(e) => {
            failures.push(CaseFailure {
                case: format!("{} epsilon={}", spec.problem, g.epsilon),
                message: e.to_string(),
            });
            return (rows, failures);
        }
    };
    let mut full = None;
    if spec.method != Method::Reduced && g.kappa == 0.0 {
        let name = case_name(&mp, g.level, None, 0.0, Method::Full);
        let res = solve_full(&mp, g.level, &spec.solver).and_then(|f| {
            let row = full_row(&mp, g.level, &f);
            if let Some(sink) = sink {
                sink(&row, &f.u)?;
            }
            Ok((row, f))
        });
        match res {
            Ok((row, f)) => {
                rows.push(row);
                full = Some(f);
            }
            Err(e) => failures.push(CaseFailure {
                case: name,
                message: e.to_string(),
            }),
        }
    }
    if spec.method == Method::Full {
        return (rows, failures);
    }
    for &n in &spec.orders {
        let name = case_name(&mp, g.level, Some(n), g.kappa, Method::Reduced);
        let res = solve_reduced(&mp, g.level, n, g.kappa, &spec.solver).and_then(|sol| {
            let mut row = reduced_row(&mp, g.level, &sol)?;
            if let Some(f) = &full {
                let gap = reduction_gap(&f.u, &sol.u)?;
                row.gap_l2 = Some(gap.l2);
                row.gap_h1 = Some(gap.h1_semi);
            }
            if let Some(sink) = sink {
                sink(&row, &sol.u)?;
            }
            Ok(row)
        });
        match res {
            Ok(r) => rows.push(r),
            Err(e) => failures.push(CaseFailure {
                case: name,
                message: e.to_string(),
            }),
        }
    }
    (rows, failures)
}

/// Run the Cartesian product of the spec. Failed cases are recorded and the
/// sweep continues; rows come back in canonical order regardless of
/// scheduling.
pub fn sweep(spec: &SweepSpec) -> Result<SweepReport> {
    sweep_with_fields(spec, None)
}

/// [`sweep`], handing each solved field to `sink`. A sink error marks that
/// case as failed.
pub fn sweep_with_fields(spec: &SweepSpec, sink: Option<&FieldSink>) -> Result<SweepReport> {
    let kappas = if spec.kappas.is_empty() {
        vec![0.0]
    } else {
        spec.kappas.clone()
    };
    let mut groups = Vec::new();
    for &level in &spec.levels {
        for &epsilon in &spec.epsilons {
            for &kappa in &kappas {
                groups.push(Group {
                    level,
                    epsilon,
                    kappa,
                });
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers.max(1))
        .build()
        .map_err(|e| Error::Parameter(format!("cannot start worker pool: {e}")))?;
    let results: Vec<(Vec<CaseRow>, Vec<CaseFailure>)> = pool.install(|| {
        groups
            .par_iter()
            .map(|g| run_group(spec, g, sink))
            .collect()
    });
    let mut report = SweepReport::default();
    for (rows, failures) in results {
        report.rows.extend(rows);
        report.failures.extend(failures);
    }
    sort_rows(&mut report.rows);
    report.rates = fit_rates(&report.rows);
    Ok(report)
}

type Quantity = (&'static str, fn(&CaseRow) -> Option<f64>);

const QUANTITIES: [Quantity; 3] = [
    ("err_L2", |r| r.err_l2),
    ("err_H1", |r| r.err_h1),
    ("constraint_res", |r| r.constraint_res),
];

/// Log-log fits along `h` (fixed epsilon) and along `epsilon` (fixed level).
pub fn fit_rates(rows: &[CaseRow]) -> Vec<RateRow> {
    let mut out = Vec::new();
    let key = |r: &CaseRow| (r.problem, r.method, r.n, r.kappa.to_bits());

    let mut by_eps: BTreeMap<_, Vec<&CaseRow>> = BTreeMap::new();
    let mut by_level: BTreeMap<_, Vec<&CaseRow>> = BTreeMap::new();
    for r in rows {
        by_eps
            .entry((key(r), r.epsilon.to_bits()))
            .or_default()
            .push(r);
        by_level.entry((key(r), r.level)).or_default().push(r);
    }
    for ((_, eps_bits), group) in &by_eps {
        for (name, get) in QUANTITIES {
            let xs: Vec<f64> = group.iter().map(|r| r.h).collect();
            let ys: Vec<f64> = group.iter().map(|r| get(r).unwrap_or(f64::NAN)).collect();
            if let Some(fit) = fit_loglog(&xs, &ys) {
                let r = group[0];
                out.push(RateRow {
                    problem: r.problem,
                    method: r.method,
                    axis: "h",
                    quantity: name,
                    level: None,
                    epsilon: Some(f64::from_bits(*eps_bits)),
                    n: r.n,
                    kappa: r.kappa,
                    fit,
                });
            }
        }
    }
    for ((_, level), group) in &by_level {
        for (name, get) in QUANTITIES {
            let xs: Vec<f64> = group.iter().map(|r| r.epsilon).collect();
            let ys: Vec<f64> = group.iter().map(|r| get(r).unwrap_or(f64::NAN)).collect();
            if let Some(fit) = fit_loglog(&xs, &ys) {
                let r = group[0];
                out.push(RateRow {
                    problem: r.problem,
                    method: r.method,
                    axis: "epsilon",
                    quantity: name,
                    level: Some(*level),
                    epsilon: None,
                    n: r.n,
                    kappa: r.kappa,
                    fit,
                });
            }
        }
    }
    out
}
