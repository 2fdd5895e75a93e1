//! Step-by-step forward solver and dense output.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use super::tables::CollocationTables;
use crate::error::{Error, Result};
use crate::meshing::Mesh;
use crate::problem::FdeProblem;
use crate::specfun::{KernelCache, BASE_PREC};

/// Settings of the local fixed-point iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub k: usize,
    pub s: usize,
    pub fp_tol: f64,
    pub max_fp_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            k: 22,
            s: 20,
            fp_tol: 1e-15,
            max_fp_iters: 200,
        }
    }
}

/// Wall-clock time spent in each phase of a solve.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Timings {
    pub memory: Duration,
    pub local: Duration,
    pub variational: Duration,
}

impl Timings {
    pub fn add(&mut self, other: &Timings) {
        self.memory += other.memory;
        self.local += other.local;
        self.variational += other.variational;
    }
}

/// Forward solution: one s×m coefficient block per step (row-major, row j
/// holds γ_j), the endpoint values σ_n(h_n), and the stage vectors at which
/// the field was last evaluated.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub(crate) rho: Vec<f64>,
    pub(crate) dim: usize,
    pub(crate) gammas: Vec<Vec<f64>>,
    pub(crate) endpoints: Vec<Vec<f64>>,
    pub(crate) stages: Vec<Vec<f64>>,
    pub(crate) sweeps: Vec<usize>,
    pub(crate) mesh: Mesh,
    pub timings: Timings,
}

impl Trajectory {
    pub fn initial(&self) -> &[f64] {
        &self.rho
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of completed steps.
    pub fn steps(&self) -> usize {
        self.gammas.len()
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    /// γ^n as an s×m row-major block, n = 1..=steps.
    pub fn coefficients(&self, n: usize) -> &[f64] {
        &self.gammas[n - 1]
    }

    /// Stage vectors of step n, k×m row-major.
    pub fn stages(&self, n: usize) -> &[f64] {
        &self.stages[n - 1]
    }

    /// Solution at knot t_n, n = 0..=steps (t_0 gives ρ).
    pub fn at_knot(&self, n: usize) -> &[f64] {
        &self.endpoints[n]
    }

    /// y at the horizon.
    pub fn terminal(&self) -> &[f64] {
        self.endpoints.last().expect("trajectory holds ρ")
    }

    /// Fixed-point sweeps used on each step.
    pub fn sweeps(&self) -> &[usize] {
        &self.sweeps
    }
}

pub(crate) fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

/// Neumaier-compensated accumulator over a vector.
pub(crate) struct Compensated {
    pub sum: Vec<f64>,
    comp: Vec<f64>,
}

impl Compensated {
    pub fn new(base: &[f64]) -> Self {
        Self {
            sum: base.to_vec(),
            comp: vec![0.0; base.len()],
        }
    }

    #[inline]
    pub fn add(&mut self, i: usize, x: f64) {
        let s = self.sum[i];
        let t = s + x;
        if s.abs() >= x.abs() {
            self.comp[i] += (s - t) + x;
        } else {
            self.comp[i] += (x - t) + s;
        }
        self.sum[i] = t;
    }

    pub fn finish(self) -> Vec<f64> {
        self.sum.iter().zip(&self.comp).map(|(s, c)| s + c).collect()
    }
}

/// Forward FHBVM(k, s) solver bound to a problem, mesh and tables.
pub struct Solver<'a> {
    pub(crate) problem: &'a FdeProblem,
    pub(crate) mesh: &'a Mesh,
    pub(crate) tables: &'a CollocationTables,
    pub(crate) config: SolverConfig,
    pub(crate) halpha: Vec<f64>,
}

const PARALLEL_WORK: usize = 1 << 16;

impl<'a> Solver<'a> {
    pub fn new(problem: &'a FdeProblem, mesh: &'a Mesh, tables: &'a CollocationTables, config: SolverConfig) -> Result<Self> {
        if tables.alpha() != problem.alpha {
            return Err(Error::InvalidInput(format!(
                "tables are for order {}, problem has {}",
                tables.alpha(),
                problem.alpha
            )));
        }
        if !tables.matches(mesh) {
            return Err(Error::InvalidInput("tables were built for a different mesh".into()));
        }
        if (mesh.horizon() - problem.horizon).abs() > 1e-14 * problem.horizon {
            return Err(Error::InvalidInput(format!(
                "mesh covers [0, {}] but the horizon is {}",
                mesh.horizon(),
                problem.horizon
            )));
        }
        let halpha = mesh.steps().iter().map(|h| h.powf(problem.alpha)).collect();
        Ok(Self {
            problem,
            mesh,
            tables,
            config,
            halpha,
        })
    }

    pub fn tables(&self) -> &CollocationTables {
        self.tables
    }

    pub fn mesh(&self) -> &Mesh {
        self.mesh
    }

    /// Memory terms for step n at the k nodes and at c = 1, as a
    /// (k+1)×width row-major block: base + Σ_{ν<n} h_ν^α Σ_j J_j γ_j^ν.
    pub(crate) fn memory_block(&self, coeffs: &[Vec<f64>], n: usize, width: usize, base: &[f64]) -> Vec<f64> {
        let k = self.tables.k();
        let s = self.tables.s();
        let kernels = self.tables.kernels();
        let column = |col: usize| -> Vec<f64> {
            let mut acc = Compensated::new(base);
            let mut term = vec![0.0; width];
            for nu in 1..n {
                let kern = kernels.get(n - nu, col);
                let g = &coeffs[nu - 1];
                term.fill(0.0);
                for (j, &kj) in kern.iter().enumerate() {
                    let row = &g[j * width..(j + 1) * width];
                    for (t, &v) in term.iter_mut().zip(row) {
                        *t += kj * v;
                    }
                }
                let ha = self.halpha[nu - 1];
                for (w, &t) in term.iter().enumerate() {
                    acc.add(w, ha * t);
                }
            }
            acc.finish()
        };
        let work = n.saturating_sub(1) * s * width * (k + 1);
        let cols: Vec<Vec<f64>> = if work > PARALLEL_WORK {
            (0..=k).into_par_iter().map(column).collect()
        } else {
            (0..=k).map(column).collect()
        };
        cols.concat()
    }

    /// φ_{n−1}(c): the memory term of step n at abscissa c ∈ [0, 1].
    pub fn memory_term(&self, traj: &Trajectory, n: usize, c: f64) -> Result<Vec<f64>> {
        if n == 0 || n > self.mesh.len() {
            return Err(Error::IndexOutOfRange {
                index: n,
                limit: self.mesh.len(),
            });
        }
        if traj.steps() + 1 < n {
            return Err(Error::StepNotSolved {
                requested: n,
                available: traj.steps(),
            });
        }
        if !(0.0..=1.0).contains(&c) {
            return Err(Error::InvalidInput(format!("abscissa {c} is outside [0, 1]")));
        }
        let basis = self.tables.basis();
        let cf = rug::Float::with_val(BASE_PREC, c);
        Ok(self.assemble_memory(traj, n, |d| basis.memory_kernel_precise(&self.mesh.kernel_argument(d, &cf))))
    }

    /// ρ + Σ_{ν<n} h_ν^α Σ_j J_j(d = n − ν) γ_j^ν with the kernel row for
    /// distance d supplied by `kernel`.
    fn assemble_memory<K, F>(&self, traj: &Trajectory, n: usize, kernel: F) -> Vec<f64>
    where
        K: AsRef<[f64]>,
        F: Fn(usize) -> K,
    {
        let m = traj.dim;
        let mut acc = Compensated::new(&traj.rho);
        for nu in 1..n {
            let kern = kernel(n - nu);
            let g = &traj.gammas[nu - 1];
            let ha = self.halpha[nu - 1];
            for w in 0..m {
                let t: f64 = kern.as_ref().iter().enumerate().map(|(j, kj)| kj * g[j * m + w]).sum();
                acc.add(w, ha * t);
            }
        }
        acc.finish()
    }

    /// Solves the local problem of step n for γ^n given the memory block
    /// at the nodes (k×m). Returns (γ^n, stages, sweeps).
    pub fn solve_local(&self, n: usize, phi: &[f64]) -> Result<(Vec<f64>, Vec<f64>, usize)> {
        let k = self.tables.k();
        let s = self.tables.s();
        let m = self.problem.dim();
        let ia = self.tables.frac_values();
        let pto = self.tables.weighted_transpose();
        let nodes = self.tables.nodes();
        let t0 = self.mesh.knots()[n - 1];
        let h = self.mesh.step(n);
        let ha = self.halpha[n - 1];
        let field = &self.problem.field;

        let mut gamma = vec![0.0; s * m];
        let mut stages = vec![0.0; k * m];
        let mut values = vec![0.0; k * m];
        let mut next = vec![0.0; s * m];
        let mut monitor = Monitor::new(self.config.fp_tol);
        for sweep in 1..=self.config.max_fp_iters {
            fill_stages(&mut stages, phi, ia, &gamma, ha, k, s, m);
            for i in 0..k {
                field.eval(t0 + nodes[i] * h, &stages[i * m..(i + 1) * m], &mut values[i * m..(i + 1) * m])?;
            }
            for j in 0..s {
                for a in 0..m {
                    next[j * m + a] = dot2((0..k).map(|i| (pto[(j, i)], values[i * m + a])));
                }
            }
            if next.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { step: n });
            }
            let diff = next.iter().zip(&gamma).fold(0.0f64, |d, (a, b)| d.max((a - b).abs()));
            let scale = 1.0 + inf_norm(&next);
            std::mem::swap(&mut gamma, &mut next);
            if monitor.update(diff, scale) {
                fill_stages(&mut stages, phi, ia, &gamma, ha, k, s, m);
                return Ok((gamma, stages, sweep));
            }
        }
        if monitor.reached {
            fill_stages(&mut stages, phi, ia, &gamma, ha, k, s, m);
            return Ok((gamma, stages, self.config.max_fp_iters));
        }
        Err(Error::FixedPoint {
            step: n,
            iterations: self.config.max_fp_iters,
            difference: monitor.prev,
        })
    }

    /// Solves steps 1..N from y(0) = ρ.
    pub fn solve_ivp(&self, rho: &[f64]) -> Result<Trajectory> {
        let m = self.problem.dim();
        if rho.len() != m {
            return Err(Error::InvalidInput(format!("initial value has {} entries, dimension is {m}", rho.len())));
        }
        let k = self.tables.k();
        let n_steps = self.mesh.len();
        let g0 = 1.0 / self.tables.gamma_alpha1();
        let mut traj = Trajectory {
            rho: rho.to_vec(),
            dim: m,
            gammas: Vec::with_capacity(n_steps),
            endpoints: Vec::with_capacity(n_steps + 1),
            stages: Vec::with_capacity(n_steps),
            sweeps: Vec::with_capacity(n_steps),
            mesh: self.mesh.clone(),
            timings: Timings::default(),
        };
        traj.endpoints.push(rho.to_vec());
        for n in 1..=n_steps {
            let start = Instant::now();
            let block = self.memory_block(&traj.gammas, n, m, rho);
            traj.timings.memory += start.elapsed();

            let start = Instant::now();
            let (gamma, stages, sweeps) = self.solve_local(n, &block[..k * m])?;
            traj.timings.local += start.elapsed();

            let ha = self.halpha[n - 1];
            let end: Vec<f64> = (0..m).map(|a| block[k * m + a] + ha * gamma[a] * g0).collect();
            traj.endpoints.push(end);
            traj.gammas.push(gamma);
            traj.stages.push(stages);
            traj.sweeps.push(sweeps);
        }
        Ok(traj)
    }

    /// σ_n(c h_n) at an arbitrary t ∈ [0, T].
    pub fn dense_eval(&self, traj: &Trajectory, t: f64) -> Result<Vec<f64>> {
        let (n, c) = self.mesh.locate(t)?;
        if n > traj.steps() {
            return Err(Error::StepNotSolved {
                requested: n,
                available: traj.steps(),
            });
        }
        if t == self.mesh.knots()[n] {
            return Ok(traj.endpoints[n].clone());
        }
        if t == 0.0 {
            return Ok(traj.rho.clone());
        }
        self.eval_in_step(traj, n, c)
    }

    /// σ_n(c h_n) from the coefficients, without any knot shortcut.
    pub fn eval_in_step(&self, traj: &Trajectory, n: usize, c: f64) -> Result<Vec<f64>> {
        let y = self.memory_term(traj, n, c)?;
        if n > traj.steps() {
            return Err(Error::StepNotSolved {
                requested: n,
                available: traj.steps(),
            });
        }
        self.add_local(traj, n, c, y)
    }

    fn add_local(&self, traj: &Trajectory, n: usize, c: f64, mut y: Vec<f64>) -> Result<Vec<f64>> {
        let m = traj.dim;
        let frac = self.tables.basis().frac_int(c)?;
        let g = &traj.gammas[n - 1];
        let ha = self.halpha[n - 1];
        for (a, ya) in y.iter_mut().enumerate() {
            let t: f64 = frac.iter().enumerate().map(|(j, f)| f * g[j * m + a]).sum();
            *ya += ha * t;
        }
        Ok(y)
    }

    /// max_n ‖σ_n(0) − σ_{n−1}(h_{n−1})‖_∞ over the completed steps. The
    /// kernels are evaluated afresh at c = 0, not taken from the tables.
    pub fn continuity_defect(&self, traj: &Trajectory) -> Result<f64> {
        let steps = traj.steps();
        if steps < 2 {
            return Ok(0.0);
        }
        let zero = rug::Float::new(BASE_PREC);
        let kernels = KernelCache::build(self.tables.basis(), steps - 1, 1, |d, _| self.mesh.kernel_argument(d, &zero));
        let defects = (2..=steps)
            .into_par_iter()
            .map(|n| {
                let y = self.assemble_memory(traj, n, |d| kernels.get(d, 0));
                let left = self.add_local(traj, n, 0.0, y)?;
                Ok(left
                    .iter()
                    .zip(&traj.endpoints[n - 1])
                    .fold(0.0f64, |d, (a, b)| d.max((a - b).abs())))
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(defects.into_iter().fold(0.0, f64::max))
    }
}

/// Extra sweeps allowed once the tolerance is met.
const MAX_POLISH: usize = 6;

/// Differences below this (relative) that stop shrinking are taken as the
/// rounding floor even if the tolerance was not met.
const STAGNATION: f64 = 1e-13;

/// Stopping rule of the local fixed-point iterations: reach the tolerance,
/// then keep sweeping while the successive differences still decrease, so
/// that the result sits at the rounding floor.
pub(crate) struct Monitor {
    tol: f64,
    pub prev: f64,
    pub reached: bool,
    polish: usize,
}

impl Monitor {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            prev: f64::INFINITY,
            reached: false,
            polish: 0,
        }
    }

    /// Records one sweep; returns true when iterating should stop.
    pub fn update(&mut self, diff: f64, scale: f64) -> bool {
        let stalled = diff >= self.prev;
        let stop = diff == 0.0
            || (self.reached && (stalled || self.polish >= MAX_POLISH))
            || (!self.reached && stalled && diff <= STAGNATION * scale);
        if diff <= self.tol * scale {
            self.reached = true;
            self.polish += 1;
        }
        self.prev = diff;
        stop
    }
}

#[allow(clippy::too_many_arguments)]
fn fill_stages(
    stages: &mut [f64],
    phi: &[f64],
    ia: &nalgebra::DMatrix<f64>,
    gamma: &[f64],
    ha: f64,
    k: usize,
    s: usize,
    m: usize,
) {
    for i in 0..k {
        for a in 0..m {
            let acc = dot2((0..s).map(|j| (ia[(i, j)], gamma[j * m + a])));
            stages[i * m + a] = phi[i * m + a] + ha * acc;
        }
    }
}

/// Dot product in twice the working precision (error-free transformations
/// with a fused multiply-add), rounded once.
#[inline]
pub(crate) fn dot2(pairs: impl Iterator<Item = (f64, f64)>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for (a, b) in pairs {
        let p = a * b;
        let ep = a.mul_add(b, -p);
        let t = sum + p;
        let z = t - sum;
        comp += ((sum - (t - z)) + (p - z)) + ep;
        sum = t;
    }
    sum + comp
}

/// Builds tables for `mesh`, solves forward from ρ and returns y(T).
pub fn forward_terminal(problem: &FdeProblem, rho: &[f64], mesh: &Mesh, config: &SolverConfig) -> Result<Vec<f64>> {
    let tables = CollocationTables::build(problem.alpha, config.k, config.s, mesh)?;
    let solver = Solver::new(problem, mesh, &tables, *config)?;
    Ok(solver.solve_ivp(rho)?.terminal().to_vec())
}
