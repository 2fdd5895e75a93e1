//! Variational companion of the forward solver: Ψ_n ≈ ∂y(t_n)/∂ρ.

use std::time::{Duration, Instant};

use nalgebra::DMatrix;

use super::solver::{dot2, inf_norm, Monitor, Solver, Trajectory};
use crate::error::{Error, Result};

/// Γ^n blocks (s blocks of m×m, each stored column-major and laid out
/// consecutively) and the endpoint matrices Ψ_0 = I, Ψ_1, ..., Ψ_N.
#[derive(Debug, Clone)]
pub struct VariationalTrajectory {
    pub(crate) dim: usize,
    pub(crate) blocks: Vec<Vec<f64>>,
    pub(crate) endpoints: Vec<DMatrix<f64>>,
    /// Steps on which the direct linear solve replaced the fixed point.
    pub fallbacks: usize,
    pub elapsed: Duration,
}

impl VariationalTrajectory {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn steps(&self) -> usize {
        self.blocks.len()
    }

    /// Ψ_n(h_n), n = 0..=N.
    pub fn at_knot(&self, n: usize) -> &DMatrix<f64> {
        &self.endpoints[n]
    }

    /// Ψ_N(h_N) ≈ Φ(T, ρ).
    pub fn terminal(&self) -> &DMatrix<f64> {
        self.endpoints.last().expect("holds the identity")
    }

    /// ‖Ψ_n‖_∞ for n = 1..=N.
    pub fn norms(&self) -> Vec<f64> {
        self.endpoints[1..]
            .iter()
            .map(|p| p.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max))
            .collect()
    }
}

impl Solver<'_> {
    /// Solves the discrete variational problem along `traj`, evaluating the
    /// Jacobian at the stored stage vectors.
    pub fn solve_variational(&self, traj: &Trajectory) -> Result<VariationalTrajectory> {
        let start = Instant::now();
        let m = traj.dim();
        let mm = m * m;
        let k = self.tables.k();
        let n_steps = traj.steps();
        if n_steps != self.mesh.len() {
            return Err(Error::StepNotSolved {
                requested: self.mesh.len(),
                available: n_steps,
            });
        }
        let g0 = 1.0 / self.tables.gamma_alpha1();
        let identity = DMatrix::<f64>::identity(m, m);
        let mut var = VariationalTrajectory {
            dim: m,
            blocks: Vec::with_capacity(n_steps),
            endpoints: Vec::with_capacity(n_steps + 1),
            fallbacks: 0,
            elapsed: Duration::ZERO,
        };
        var.endpoints.push(identity.clone());
        let nodes = self.tables.nodes();

        for n in 1..=n_steps {
            let theta = self.memory_block(&var.blocks, n, mm, identity.as_slice());
            let t0 = self.mesh.knots()[n - 1];
            let h = self.mesh.step(n);
            let stages = traj.stages(n);
            let jacs = (0..k)
                .map(|i| self.problem.jacobian(t0 + nodes[i] * h, &stages[i * m..(i + 1) * m]))
                .collect::<Result<Vec<_>>>()?;
            let ha = self.halpha[n - 1];
            let block = match self.variational_fixed_point(&theta, &jacs, ha, m) {
                Some(b) => b,
                None => {
                    var.fallbacks += 1;
                    self.variational_direct(&theta, &jacs, ha, m)
                        .ok_or_else(|| Error::Singular(format!("variational system of step {n}")))?
                }
            };
            let mut end = DMatrix::from_column_slice(m, m, &theta[k * mm..(k + 1) * mm]);
            end += DMatrix::from_column_slice(m, m, &block[..mm]) * (ha * g0);
            var.endpoints.push(end);
            var.blocks.push(block);
        }
        var.elapsed = start.elapsed();
        Ok(var)
    }

    fn variational_fixed_point(&self, theta: &[f64], jacs: &[DMatrix<f64>], ha: f64, m: usize) -> Option<Vec<f64>> {
        let k = self.tables.k();
        let s = self.tables.s();
        let mm = m * m;
        let ia = self.tables.frac_values();
        let pto = self.tables.weighted_transpose();
        let mut gamma = vec![0.0; s * mm];
        let mut next = vec![0.0; s * mm];
        let mut w = DMatrix::<f64>::zeros(m, m);
        let mut z = vec![0.0; k * mm];
        let mut first_diff = None;
        let mut monitor = Monitor::new(self.config.fp_tol);
        for _ in 0..self.config.max_fp_iters {
            for i in 0..k {
                for (e, x) in w.as_mut_slice().iter_mut().enumerate() {
                    *x = theta[i * mm + e] + ha * dot2((0..s).map(|l| (ia[(i, l)], gamma[l * mm + e])));
                }
                let jw = &jacs[i] * &w;
                z[i * mm..(i + 1) * mm].copy_from_slice(jw.as_slice());
            }
            for j in 0..s {
                for e in 0..mm {
                    next[j * mm + e] = dot2((0..k).map(|i| (pto[(j, i)], z[i * mm + e])));
                }
            }
            let diff = next.iter().zip(&gamma).fold(0.0f64, |d, (a, b)| d.max((a - b).abs()));
            let scale = 1.0 + inf_norm(&next);
            std::mem::swap(&mut gamma, &mut next);
            if !diff.is_finite() {
                return None;
            }
            if monitor.update(diff, scale) {
                return Some(gamma);
            }
            let first = *first_diff.get_or_insert(diff);
            if diff > 1e6 * first.max(f64::MIN_POSITIVE) {
                return None;
            }
        }
        monitor.reached.then_some(gamma)
    }

    /// Direct solve of the s·m × s·m system for all m right-hand sides.
    fn variational_direct(&self, theta: &[f64], jacs: &[DMatrix<f64>], ha: f64, m: usize) -> Option<Vec<f64>> {
        let k = self.tables.k();
        let s = self.tables.s();
        let mm = m * m;
        let ia = self.tables.frac_values();
        let pto = self.tables.weighted_transpose();
        let size = s * m;
        let mut a = DMatrix::<f64>::identity(size, size);
        let mut rhs = DMatrix::<f64>::zeros(size, m);
        for i in 0..k {
            let th = DMatrix::from_column_slice(m, m, &theta[i * mm..(i + 1) * mm]);
            let jt = &jacs[i] * th;
            for j in 0..s {
                let pji = pto[(j, i)];
                for r in 0..m {
                    for c in 0..m {
                        rhs[(j * m + r, c)] += pji * jt[(r, c)];
                    }
                }
                for l in 0..s {
                    let coef = ha * pji * ia[(i, l)];
                    for r in 0..m {
                        for c in 0..m {
                            a[(j * m + r, l * m + c)] -= coef * jacs[i][(r, c)];
                        }
                    }
                }
            }
        }
        let x = a.lu().solve(&rhs)?;
        if x.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let mut out = vec![0.0; s * mm];
        for j in 0..s {
            let blk = x.rows(j * m, m).into_owned();
            out[j * mm..(j + 1) * mm].copy_from_slice(blk.as_slice());
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::fhbvm::{CollocationTables, SolverConfig};
    use crate::meshing::Mesh;
    use crate::problem::{FdeProblem, FnField};

    #[test]
    fn direct_and_fixed_point_agree() {
        let f = Arc::new(FnField::new(
            2,
            |_, y: &[f64], o: &mut [f64]| {
                o[0] = -y[0] + 0.3 * y[1] * y[1];
                o[1] = (y[0]).sin() - 2.0 * y[1];
            },
            |_, y: &[f64], o: &mut [f64]| o.copy_from_slice(&[-1.0, 0.6 * y[1], y[0].cos(), -2.0]),
        ));
        let p = FdeProblem::new("nl", 0.6, 1.0, f).unwrap();
        let mesh = Mesh::uniform(1.0, 5).unwrap();
        let tables = CollocationTables::build(0.6, 8, 6, &mesh).unwrap();
        let solver = Solver::new(&p, &mesh, &tables, SolverConfig { k: 8, s: 6, ..Default::default() }).unwrap();
        let traj = solver.solve_ivp(&[0.5, -0.4]).unwrap();
        let theta = solver.memory_block(&[], 1, 4, DMatrix::<f64>::identity(2, 2).as_slice());
        let t0 = 0.0;
        let h = mesh.step(1);
        let jacs: Vec<_> = (0..8)
            .map(|i| p.jacobian(t0 + tables.nodes()[i] * h, &traj.stages(1)[i * 2..i * 2 + 2]).unwrap())
            .collect();
        let ha = h.powf(0.6);
        let a = solver.variational_fixed_point(&theta, &jacs, ha, 2).unwrap();
        let b = solver.variational_direct(&theta, &jacs, ha, 2).unwrap();
        let gap = a.iter().zip(&b).fold(0.0f64, |d, (x, y)| d.max((x - y).abs()));
        assert!(gap < 1e-14, "gap {gap:e}");
    }
}
