use std::fmt::Write as _;

use crate::experiments::{CaseFailure, CaseRow, RateRow};
use crate::solver::InfSupEstimate;

pub const CSV_HEADER: &str = "problem,method,level,h,epsilon,n,N,kappa,dofs_bulk,dofs_lambda,err_L2,err_H1,constraint_res,gap_L2,gap_H1,lambda0,max_u,solve_seconds";

pub const RATES_HEADER: &str =
    "problem,method,axis,quantity,level,epsilon,n,kappa,slope,intercept,r2,points,flagged";

pub const INFSUP_HEADER: &str =
    "problem,level,h,epsilon,n,N,dofs_lambda,beta,lambda_min,residual,iterations";

/// Shortest representation that parses back to the same `f64`; exponent
/// notation outside `[1e-5, 1e16)`.
pub fn format_number(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-5..1e16).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn opt<T>(v: Option<T>, f: impl Fn(T) -> String) -> String {
    v.map(f).unwrap_or_default()
}

/// Case rows in the order given, one line each after the header. Without
/// `timing` the `solve_seconds` column stays empty.
pub fn cases_csv(rows: &[CaseRow], timing: bool) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let fields = [
            r.problem.name().to_string(),
            r.method.name().to_string(),
            r.level.to_string(),
            format_number(r.h),
            format_number(r.epsilon),
            opt(r.n, |n| n.to_string()),
            opt(r.num_modes(), |n| n.to_string()),
            format_number(r.kappa),
            r.dofs_bulk.to_string(),
            r.dofs_lambda.to_string(),
            opt(r.err_l2, format_number),
            opt(r.err_h1, format_number),
            opt(r.constraint_res, format_number),
            opt(r.gap_l2, format_number),
            opt(r.gap_h1, format_number),
            opt(r.lambda0, format_number),
            opt(r.max_u, format_number),
            if timing {
                format_number(r.solve_seconds)
            } else {
                String::new()
            },
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn rates_csv(rates: &[RateRow]) -> String {
    let mut out = String::from(RATES_HEADER);
    out.push('\n');
    for r in rates {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.problem.name(),
            r.method.name(),
            r.axis,
            r.quantity,
            opt(r.level, |l| l.to_string()),
            opt(r.epsilon, format_number),
            opt(r.n, |n| n.to_string()),
            format_number(r.kappa),
            format_number(r.fit.slope),
            format_number(r.fit.intercept),
            format_number(r.fit.r2),
            r.fit.points,
            r.fit.flagged(),
        );
    }
    out
}

/// One inf-sup estimate per line.
pub struct InfSupRow {
    pub problem: &'static str,
    pub level: u32,
    pub h: f64,
    pub epsilon: f64,
    pub n: usize,
    pub dofs_lambda: usize,
    pub estimate: InfSupEstimate,
}

pub fn infsup_csv(rows: &[InfSupRow]) -> String {
    let mut out = String::from(INFSUP_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.problem,
            r.level,
            format_number(r.h),
            format_number(r.epsilon),
            r.n,
            2 * r.n + 1,
            r.dofs_lambda,
            format_number(r.estimate.beta),
            format_number(r.estimate.lambda_min),
            format_number(r.estimate.residual),
            r.estimate.iterations,
        );
    }
    out
}

pub fn failures_text(failures: &[CaseFailure]) -> String {
    let mut out = String::new();
    for f in failures {
        let _ = writeln!(out, "{}: {}", f.case, f.message);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{Method, ProblemId};

    fn row() -> CaseRow {
        CaseRow {
            problem: ProblemId::D1,
            method: Method::Reduced,
            level: 6,
            h: 2.0 / 64.0,
            epsilon: 0.2,
            n: Some(0),
            kappa: 0.0,
            dofs_bulk: 65 * 65,
            dofs_lambda: 1,
            err_l2: Some(1.25e-7),
            err_h1: Some(0.375),
            constraint_res: Some(3.0e-3),
            gap_l2: None,
            gap_h1: None,
            lambda0: Some(-5.07),
            max_u: Some(1.6),
            solve_seconds: 0.25,
        }
    }

    #[test]
    fn numbers_round_trip() {
        assert_eq!(format_number(0.0), "0");
        assert_eq!(format_number(0.2), "0.2");
        assert_eq!(format_number(1e-7), "1e-7");
        assert_eq!(format_number(-2.5e20), "-2.5e20");
        assert_eq!(format_number(4225.0), "4225");
        for x in [
            0.1 + 0.2,
            1.0 / 3.0,
            1.2345678901234567e-9,
            6.02e23,
            2.0 / 64.0,
        ] {
            assert_eq!(format_number(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn empty_report_is_header_only() {
        assert_eq!(cases_csv(&[], true), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn one_case_two_lines() {
        let s = cases_csv(&[row()], false);
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(
            lines[1],
            "D1,reduced,6,0.03125,0.2,0,1,0,4225,1,1.25e-7,0.375,0.003,,,-5.07,1.6,"
        );
        assert_eq!(lines[1].split(',').count(), CSV_HEADER.split(',').count());
        assert!(cases_csv(&[row()], true).trim_end().ends_with(",0.25"));
        assert_eq!(cases_csv(&[row()], false), s);
    }
}
