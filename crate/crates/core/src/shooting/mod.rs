//! Shooting-Newton iteration for the initial value ρ = y(0) such that
//! y(T, ρ) = η.
//!
//! Iteration ℓ solves forward from ρ_ℓ, forms the correction
//! δ_ℓ = Φ^{-1}(y(T, ρ_ℓ) − η) and stops with L = ℓ once ‖δ_ℓ‖_∞ ≤ tol;
//! otherwise ρ_{ℓ+1} = ρ_ℓ − δ_ℓ. The full variant takes Φ from the
//! variational solve at every iterate; the simplified variant, for
//! f = L y + g, uses the truncated matrix Mittag-Leffler series of L once.

mod report;

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fhbvm::{CollocationTables, Solver, SolverConfig, Timings, Trajectory, VariationalTrajectory};
use crate::meshing::Mesh;
use crate::problem::FdeProblem;
use crate::specfun::{matrix_ml_truncated, DEFAULT_SERIES_CAP};

pub use report::report_text;

/// Condition numbers above this are flagged in the report.
pub const CONDITION_WARNING: f64 = 1e12;

/// Consecutive growing corrections after which the simplified variant stops.
const GROWTH_LIMIT: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub enum InitialGuess {
    /// ρ_0 = η.
    Terminal,
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Newton,
    Simplified,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Newton => "newton",
            Variant::Simplified => "simplified",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShootingConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub initial: InitialGuess,
    pub variant: Variant,
    /// Truncation tolerance of the matrix Mittag-Leffler series.
    pub eps: f64,
    pub series_cap: usize,
    pub solver: SolverConfig,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        Self {
            tol: 1e-14,
            max_iter: 25,
            initial: InitialGuess::Terminal,
            variant: Variant::Newton,
            eps: 1e-10,
            series_cap: DEFAULT_SERIES_CAP,
            solver: SolverConfig::default(),
        }
    }
}

impl ShootingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidInput(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidInput("at least one iteration is required".into()));
        }
        if !(self.eps > 0.0) {
            return Err(Error::InvalidInput(format!("series tolerance must be positive, got {}", self.eps)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    IterationCap,
    Diverged,
}

#[derive(Debug, Clone)]
pub struct ShootingReport {
    pub variant: Variant,
    pub tol: f64,
    /// ρ_0, ..., ρ_L.
    pub iterates: Vec<Vec<f64>>,
    /// y(T, ρ_ℓ) − η for ℓ = 0..=L.
    pub residuals: Vec<Vec<f64>>,
    /// ‖δ_ℓ‖_∞ for ℓ = 0..=L.
    pub corrections: Vec<f64>,
    pub converged: bool,
    pub stop: StopReason,
    pub iterations: usize,
    /// Forward solution at ρ_L.
    pub trajectory: Trajectory,
    /// 2·tol·‖Ψ_n‖_∞ for n = 1..=N.
    pub error_estimates: Vec<f64>,
    pub psi_norms: Vec<f64>,
    /// ‖Φ‖_∞‖Φ^{-1}‖_∞ of the last Newton matrix.
    pub condition: f64,
    pub variational_solves: usize,
    pub variational_fallbacks: usize,
    /// Index of the last retained series term (simplified variant).
    pub series_terms: Option<usize>,
    pub timings: Timings,
    pub table_seconds: f64,
    /// Wall time of each iteration, including its Newton matrix.
    pub iteration_seconds: Vec<f64>,
    pub total: Duration,
}

impl ShootingReport {
    pub fn final_rho(&self) -> &[f64] {
        self.iterates.last().expect("at least ρ_0")
    }

    pub fn condition_warning(&self) -> bool {
        self.condition > CONDITION_WARNING
    }
}

/// 2·tol·‖Ψ_n‖_∞ for every knot n = 1..=N.
pub fn estimate_errors(variational: &VariationalTrajectory, tol: f64) -> Vec<f64> {
    variational.norms().into_iter().map(|p| 2.0 * tol * p).collect()
}

fn inf_norm_mat(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

struct NewtonMatrix {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    condition: f64,
}

impl NewtonMatrix {
    fn new(phi: &DMatrix<f64>) -> Result<Self> {
        let lu = phi.clone().lu();
        let inv = lu
            .try_inverse()
            .ok_or_else(|| Error::Singular("the Newton matrix is not invertible; the problem is locally ill-posed".into()))?;
        let condition = inf_norm_mat(phi) * inf_norm_mat(&inv);
        if !condition.is_finite() {
            return Err(Error::Singular("the Newton matrix is numerically singular".into()));
        }
        Ok(Self { lu, condition })
    }

    fn solve(&self, r: &[f64]) -> Result<Vec<f64>> {
        let x = self
            .lu
            .solve(&DVector::from_column_slice(r))
            .ok_or_else(|| Error::Singular("the Newton matrix is not invertible".into()))?;
        Ok(x.iter().copied().collect())
    }
}

fn initial_guess(problem: &FdeProblem, eta: &[f64], config: &ShootingConfig) -> Result<Vec<f64>> {
    let rho = match &config.initial {
        InitialGuess::Terminal => eta.to_vec(),
        InitialGuess::Explicit(v) => v.clone(),
    };
    if rho.len() != problem.dim() {
        return Err(Error::InvalidInput(format!(
            "initial guess has {} entries, dimension is {}",
            rho.len(),
            problem.dim()
        )));
    }
    Ok(rho)
}

fn terminal_of(problem: &FdeProblem) -> Result<Vec<f64>> {
    problem
        .terminal
        .clone()
        .ok_or_else(|| Error::InvalidInput(format!("problem '{}' has no terminal value", problem.name)))
}

/// Algorithm with the exact Jacobian Φ(T, ρ_ℓ) ≈ Ψ_N at every iterate.
pub fn newton_shoot(problem: &FdeProblem, mesh: &Mesh, tables: &CollocationTables, config: &ShootingConfig) -> Result<ShootingReport> {
    config.validate()?;
    let start = Instant::now();
    let eta = terminal_of(problem)?;
    let solver = Solver::new(problem, mesh, tables, config.solver)?;
    let mut rho = initial_guess(problem, &eta, config)?;

    let mut iterates = vec![rho.clone()];
    let mut residuals = Vec::new();
    let mut corrections = Vec::new();
    let mut iteration_seconds = Vec::new();
    let mut timings = Timings::default();
    let mut variational_solves = 0;
    let mut fallbacks = 0;
    let mut ell = 0;
    loop {
        let iter_start = Instant::now();
        let traj = solver.solve_ivp(&rho)?;
        timings.add(&traj.timings);
        let residual: Vec<f64> = traj.terminal().iter().zip(&eta).map(|(y, e)| y - e).collect();
        let var = solver.solve_variational(&traj)?;
        variational_solves += 1;
        fallbacks += var.fallbacks;
        timings.variational += var.elapsed;
        let newton = NewtonMatrix::new(var.terminal())?;
        let delta = newton.solve(&residual)?;
        let step = max_abs(&delta);
        iteration_seconds.push(iter_start.elapsed().as_secs_f64());
        residuals.push(residual);
        corrections.push(step);

        let stop = if !step.is_finite() {
            Some(StopReason::Diverged)
        } else if step <= config.tol {
            Some(StopReason::Converged)
        } else if ell >= config.max_iter {
            Some(StopReason::IterationCap)
        } else {
            None
        };
        if let Some(stop) = stop {
            let error_estimates = estimate_errors(&var, config.tol);
            return Ok(ShootingReport {
                variant: Variant::Newton,
                tol: config.tol,
                iterates,
                residuals,
                corrections,
                converged: stop == StopReason::Converged,
                stop,
                iterations: ell,
                trajectory: traj,
                psi_norms: var.norms(),
                error_estimates,
                condition: newton.condition,
                variational_solves,
                variational_fallbacks: fallbacks,
                series_terms: None,
                timings,
                table_seconds: tables.build_seconds(),
                iteration_seconds,
                total: start.elapsed(),
            });
        }
        for (r, d) in rho.iter_mut().zip(&delta) {
            *r -= d;
        }
        iterates.push(rho.clone());
        ell += 1;
    }
}

/// Simplified variant for semi-linear problems: Φ is replaced once by
/// Σ_{j≤J} (L T^α)^j / Γ(αj+1) and no variational problem is solved.
pub fn simplified_shoot(problem: &FdeProblem, mesh: &Mesh, tables: &CollocationTables, config: &ShootingConfig) -> Result<ShootingReport> {
    config.validate()?;
    let start = Instant::now();
    let split = problem
        .split
        .as_ref()
        .ok_or_else(|| Error::InvalidInput(format!("problem '{}' has no semi-linear split", problem.name)))?;
    let eta = terminal_of(problem)?;
    let solver = Solver::new(problem, mesh, tables, config.solver)?;
    let (phi_hat, series_terms) =
        matrix_ml_truncated(problem.alpha, &split.linear, problem.horizon, config.eps, config.series_cap)?;
    let newton = NewtonMatrix::new(&phi_hat)?;
    let mut rho = initial_guess(problem, &eta, config)?;

    let mut iterates = vec![rho.clone()];
    let mut residuals = Vec::new();
    let mut corrections: Vec<f64> = Vec::new();
    let mut iteration_seconds = Vec::new();
    let mut timings = Timings::default();
    let mut growth = 0;
    let mut ell = 0;
    loop {
        let iter_start = Instant::now();
        let traj = solver.solve_ivp(&rho)?;
        timings.add(&traj.timings);
        let residual: Vec<f64> = traj.terminal().iter().zip(&eta).map(|(y, e)| y - e).collect();
        let delta = newton.solve(&residual)?;
        let step = max_abs(&delta);
        iteration_seconds.push(iter_start.elapsed().as_secs_f64());
        if corrections.last().is_some_and(|&prev| step > prev) {
            growth += 1;
        } else {
            growth = 0;
        }
        residuals.push(residual);
        corrections.push(step);

        let stop = if !step.is_finite() || growth >= GROWTH_LIMIT {
            Some(StopReason::Diverged)
        } else if step <= config.tol {
            Some(StopReason::Converged)
        } else if ell >= config.max_iter {
            Some(StopReason::IterationCap)
        } else {
            None
        };
        if let Some(stop) = stop {
            let psi_norms = series_norms(problem, &split.linear, mesh, config)?;
            let error_estimates = psi_norms.iter().map(|p| 2.0 * config.tol * p).collect();
            return Ok(ShootingReport {
                variant: Variant::Simplified,
                tol: config.tol,
                iterates,
                residuals,
                corrections,
                converged: stop == StopReason::Converged,
                stop,
                iterations: ell,
                trajectory: traj,
                psi_norms,
                error_estimates,
                condition: newton.condition,
                variational_solves: 0,
                variational_fallbacks: 0,
                series_terms: Some(series_terms),
                timings,
                table_seconds: tables.build_seconds(),
                iteration_seconds,
                total: start.elapsed(),
            });
        }
        for (r, d) in rho.iter_mut().zip(&delta) {
            *r -= d;
        }
        iterates.push(rho.clone());
        ell += 1;
    }
}

/// ‖Φ̂(t_n)‖_∞ from the truncated series of the linear part at each knot.
fn series_norms(problem: &FdeProblem, linear: &DMatrix<f64>, mesh: &Mesh, config: &ShootingConfig) -> Result<Vec<f64>> {
    mesh.knots()[1..]
        .iter()
        .map(|&t| {
            matrix_ml_truncated(problem.alpha, linear, t, config.eps, config.series_cap).map(|(m, _)| inf_norm_mat(&m))
        })
        .collect()
}

/// Dispatches on `config.variant`.
pub fn shoot(problem: &FdeProblem, mesh: &Mesh, tables: &CollocationTables, config: &ShootingConfig) -> Result<ShootingReport> {
    match config.variant {
        Variant::Newton => newton_shoot(problem, mesh, tables, config),
        Variant::Simplified => simplified_shoot(problem, mesh, tables, config),
    }
}
