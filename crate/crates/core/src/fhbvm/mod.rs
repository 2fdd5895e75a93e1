//! FHBVM(k, s): piecewise expansion of the vector field in the orthonormal
//! Jacobi basis, collocated at the Gauss–Jacobi nodes.
//!
//! On step n the solution is σ_n(c h_n) = φ_{n−1}(c) + h_n^α Σ_j γ_j^n I^αP_j(c),
//! where φ_{n−1} collects the contribution of all previous steps through the
//! memory kernels and γ^n solves γ = 𝒫ᵀΩ f(φ + h_n^α ℐ γ).

mod solver;
mod tables;
mod variational;

use std::fmt::Write as _;

pub use solver::{forward_terminal, Solver, SolverConfig, Timings, Trajectory};
pub use tables::{CacheHeader, CollocationTables};
pub use variational::VariationalTrajectory;

/// Delimited text with one row per knot: `t, y_1..y_m` and, when given,
/// an `err_est` column.
pub fn trajectory_csv(traj: &Trajectory, estimates: Option<&[f64]>) -> String {
    let m = traj.dim();
    let mut out = String::from("t");
    for i in 1..=m {
        write!(out, ",y{i}").ok();
    }
    if estimates.is_some() {
        out.push_str(",err_est");
    }
    out.push('\n');
    for (n, t) in traj.mesh().knots().iter().enumerate().take(traj.steps() + 1) {
        write!(out, "{t:.17e}").ok();
        for v in traj.at_knot(n) {
            write!(out, ",{v:.17e}").ok();
        }
        if let Some(est) = estimates {
            let e = if n == 0 { 0.0 } else { est.get(n - 1).copied().unwrap_or(f64::NAN) };
            write!(out, ",{e:.6e}").ok();
        }
        out.push('\n');
    }
    out
}
