//! Run configuration, result files and the command driver shared by the
//! binary and the tests.

mod config;
mod csv;
mod vtk;

use std::path::{Path, PathBuf};
use std::sync::Mutex;

pub use config::{parse_config, RunConfig, SolverConfig};
pub use csv::{
    cases_csv, failures_text, format_number, infsup_csv, rates_csv, InfSupRow, CSV_HEADER,
    INFSUP_HEADER, RATES_HEADER,
};
pub use vtk::vtk_string;

use crate::error::{Error, Result};
use crate::experiments::{
    infsup_case, mesh_for, robin_consistency_case, sweep_with_fields, CaseFailure, CaseRow, Method,
    SweepReport,
};
use crate::fem::FeFunction;
use crate::modal::{num_multipliers, BoundaryQuadrature, ModalBasis, QuadratureOptions};

pub const RESULTS_FILE: &str = "results.csv";
pub const RATES_FILE: &str = "rates.csv";
pub const FAILURES_FILE: &str = "failures.txt";
pub const INFSUP_FILE: &str = "infsup.csv";
pub const ROBIN_IDENTITY_FILE: &str = "robin_identity.csv";
pub const CONFIG_ECHO_FILE: &str = "config.json";
pub const VERSION_FILE: &str = "VERSION";

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn write_vtk(path: &Path, u: &FeFunction) -> Result<()> {
    write_file(path, &vtk_string(u))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Every case of the config; optional VTK fields.
    Solve,
    /// Every case plus fitted rates.
    Sweep,
    /// Inf-sup estimates for every level, radius and order.
    InfSup,
    /// Like `Sweep` with both reduced and full-order solves.
    CompareFull,
    /// Robin coupling for each kappa against the Dirichlet solve.
    Robin,
}

#[derive(Debug, Clone, Default)]
pub struct RunSummary {
    pub rows: usize,
    pub failures: Vec<CaseFailure>,
    pub files: Vec<PathBuf>,
}

impl RunSummary {
    /// 0 when every case succeeded, 2 when some failed.
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            0
        } else {
            2
        }
    }
}

fn vtk_name(r: &CaseRow) -> String {
    let n = r.n.map_or(String::new(), |n| format!("_n{n}"));
    format!(
        "u_{}_{}_l{}_e{}{}_k{}.vtk",
        r.problem.name(),
        r.method.name(),
        r.level,
        format_number(r.epsilon),
        n,
        format_number(r.kappa)
    )
}

struct Writer<'a> {
    dir: &'a Path,
    summary: RunSummary,
}

impl Writer<'_> {
    fn put(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        write_file(&path, contents)?;
        self.summary.files.push(path);
        Ok(())
    }

    fn report(&mut self, report: &SweepReport, timing: bool, rates: bool) -> Result<()> {
        self.put(RESULTS_FILE, &cases_csv(&report.rows, timing))?;
        if rates {
            self.put(RATES_FILE, &rates_csv(&report.rates))?;
        }
        self.summary.rows += report.rows.len();
        self.failures(&report.failures)
    }

    fn failures(&mut self, failures: &[CaseFailure]) -> Result<()> {
        if !failures.is_empty() {
            self.put(FAILURES_FILE, &failures_text(failures))?;
        }
        self.summary.failures.extend(failures.iter().cloned());
        Ok(())
    }
}

/// Run `cmd` for `cfg`, writing into `out` (created if needed). The config
/// echo and version stamp are written first. Errors are setup errors; case
/// failures are reported in the summary.
pub fn execute(cmd: Command, cfg: &RunConfig, out: &Path) -> Result<RunSummary> {
    cfg.validate()?;
    if cmd == Command::Robin && cfg.kappas.iter().all(|k| *k == 0.0) {
        return Err(Error::config(
            "kappas",
            "the robin command needs at least one positive kappa",
        ));
    }
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut w = Writer {
        dir: out,
        summary: RunSummary::default(),
    };
    w.put(CONFIG_ECHO_FILE, &cfg.echo())?;
    w.put(
        VERSION_FILE,
        &format!("rlm {}\n", env!("CARGO_PKG_VERSION")),
    )?;
    let timing = !cfg.deterministic;

    match cmd {
        Command::Solve => {
            let spec = cfg.sweep_spec();
            let written = Mutex::new(Vec::new());
            let sink = |row: &CaseRow, u: &FeFunction| -> Result<()> {
                let path = out.join(vtk_name(row));
                write_vtk(&path, u)?;
                written.lock().unwrap_or_else(|e| e.into_inner()).push(path);
                Ok(())
            };
            let report = sweep_with_fields(&spec, if cfg.vtk { Some(&sink) } else { None })?;
            w.report(&report, timing, false)?;
            let mut vtks = written.into_inner().unwrap_or_else(|e| e.into_inner());
            vtks.sort();
            w.summary.files.extend(vtks);
        }
        Command::Sweep | Command::CompareFull => {
            let mut spec = cfg.sweep_spec();
            if cmd == Command::CompareFull {
                spec.method = Method::Both;
            }
            let report = sweep_with_fields(&spec, None)?;
            w.report(&report, timing, true)?;
        }
        Command::InfSup => {
            let mut rows = Vec::new();
            let mut failures = Vec::new();
            for &level in &cfg.levels {
                for &eps in &cfg.epsilons {
                    for &n in &cfg.orders {
                        let case = format!("{} level={level} epsilon={eps} n={n}", cfg.problem);
                        let res = cfg.problem_at(eps).and_then(|mp| {
                            let estimate = infsup_case(&mp, level, n)?;
                            let space = mesh_for(&mp, level)?;
                            let basis = ModalBasis::new(n);
                            let opts = QuadratureOptions::for_mesh(space.mesh().h());
                            let per = mp.inclusions()?.iter().try_fold(0, |acc, inc| {
                                Ok::<_, Error>(
                                    acc + num_multipliers(
                                        &basis,
                                        &BoundaryQuadrature::new(inc, &basis, opts)?,
                                    ),
                                )
                            })?;
                            Ok(InfSupRow {
                                problem: cfg.problem.name(),
                                level,
                                h: space.mesh().h(),
                                epsilon: eps,
                                n,
                                dofs_lambda: per,
                                estimate,
                            })
                        });
                        match res {
                            Ok(r) => rows.push(r),
                            Err(e) => failures.push(CaseFailure {
                                case,
                                message: e.to_string(),
                            }),
                        }
                    }
                }
            }
            w.put(INFSUP_FILE, &infsup_csv(&rows))?;
            w.summary.rows += rows.len();
            w.failures(&failures)?;
        }
        Command::Robin => {
            let kappas: Vec<f64> = cfg.kappas.iter().copied().filter(|k| *k > 0.0).collect();
            let opts = cfg.solver_options();
            let mut report = SweepReport::default();
            let mut identity = String::from("problem,level,epsilon,n,kappa,identity_residual\n");
            for &level in &cfg.levels {
                for &eps in &cfg.epsilons {
                    for &n in &cfg.orders {
                        let res = cfg
                            .problem_at(eps)
                            .and_then(|mp| robin_consistency_case(&mp, level, n, &kappas, &opts));
                        match res {
                            Ok(o) => {
                                for (k, r) in kappas.iter().zip(&o.identity_residuals) {
                                    identity.push_str(&format!(
                                        "{},{level},{},{n},{},{}\n",
                                        cfg.problem.name(),
                                        format_number(eps),
                                        format_number(*k),
                                        format_number(*r)
                                    ));
                                }
                                report.rows.extend(o.rows);
                            }
                            Err(e) => report.failures.push(CaseFailure {
                                case: format!(
                                    "{} level={level} epsilon={eps} n={n} robin",
                                    cfg.problem
                                ),
                                message: e.to_string(),
                            }),
                        }
                    }
                }
            }
            crate::experiments::sort_rows(&mut report.rows);
            w.report(&report, timing, false)?;
            w.put(ROBIN_IDENTITY_FILE, &identity)?;
        }
    }
    Ok(w.summary)
}
