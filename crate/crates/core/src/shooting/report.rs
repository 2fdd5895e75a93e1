use std::fmt::Write as _;

use super::{ShootingReport, StopReason};
use crate::problem::FdeProblem;

fn vector(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(" ")
}

/// Human-readable report followed by a `[summary]` section of `key = value`
/// lines. Timing values appear only in the `[timings]` section.
pub fn report_text(problem: &FdeProblem, report: &ShootingReport) -> String {
    let mut out = String::new();
    let mesh = report.trajectory.mesh();
    writeln!(out, "problem: {}", problem.name).ok();
    writeln!(out, "alpha = {}, T = {}, dim = {}", problem.alpha, problem.horizon, problem.dim()).ok();
    writeln!(out, "mesh: {}", mesh.signature()).ok();
    writeln!(out, "variant: {}, tol = {:e}", report.variant.name(), report.tol).ok();
    out.push('\n');

    writeln!(out, "{:>4}  {:>12}  {:>12}  rho", "l", "|delta|", "|residual|").ok();
    for (l, rho) in report.iterates.iter().enumerate() {
        let delta = report.corrections.get(l).copied().unwrap_or(f64::NAN);
        let res = report
            .residuals
            .get(l)
            .map(|r| r.iter().fold(0.0f64, |a, x| a.max(x.abs())))
            .unwrap_or(f64::NAN);
        writeln!(out, "{l:>4}  {delta:>12.3e}  {res:>12.3e}  {}", vector(rho)).ok();
    }
    out.push('\n');

    let status = match report.stop {
        StopReason::Converged => "converged",
        StopReason::IterationCap => "iteration cap reached",
        StopReason::Diverged => "diverged",
    };
    writeln!(out, "status: {status} after {} iteration(s)", report.iterations).ok();
    if report.condition_warning() {
        writeln!(out, "warning: Newton matrix condition number {:.3e} exceeds 1e12", report.condition).ok();
    }
    out.push('\n');

    writeln!(out, "{:>6}  {:>24}  {:>12}  {:>12}", "n", "t_n", "|Psi_n|", "err_est").ok();
    for (n, (p, e)) in report.psi_norms.iter().zip(&report.error_estimates).enumerate() {
        writeln!(out, "{:>6}  {:>24.16e}  {p:>12.5e}  {e:>12.5e}", n + 1, mesh.knots()[n + 1]).ok();
    }
    out.push('\n');

    writeln!(out, "[summary]").ok();
    writeln!(out, "variant = {}", report.variant.name()).ok();
    writeln!(out, "converged = {}", report.converged).ok();
    writeln!(out, "iterations = {}", report.iterations).ok();
    writeln!(out, "final_rho = {}", vector(report.final_rho())).ok();
    writeln!(out, "terminal = {}", vector(report.trajectory.terminal())).ok();
    writeln!(out, "last_correction = {:.6e}", report.corrections.last().copied().unwrap_or(f64::NAN)).ok();
    let max_est = report.error_estimates.iter().fold(0.0f64, |a, &b| a.max(b));
    writeln!(out, "max_error_estimate = {max_est:.6e}").ok();
    writeln!(out, "condition = {:.6e}", report.condition).ok();
    writeln!(out, "variational_solves = {}", report.variational_solves).ok();
    if let Some(j) = report.series_terms {
        writeln!(out, "series_terms = {j}").ok();
    }
    out.push('\n');

    let ms = |d: std::time::Duration| d.as_secs_f64() * 1e3;
    writeln!(out, "[timings]").ok();
    writeln!(out, "tables_ms = {:.3}", report.table_seconds * 1e3).ok();
    writeln!(out, "memory_ms = {:.3}", ms(report.timings.memory)).ok();
    writeln!(out, "local_ms = {:.3}", ms(report.timings.local)).ok();
    writeln!(out, "variational_ms = {:.3}", ms(report.timings.variational)).ok();
    writeln!(out, "total_ms = {:.3}", ms(report.total)).ok();
    out
}
