//! Problem resolution and a single solver run, shared by `solve` and
//! `reproduce`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::ValueEnum;
use fractvp::fhbvm::{trajectory_csv, CollocationTables, Solver, SolverConfig, Trajectory};
use fractvp::problem::builtin::{self, DEFAULT_NU};
use fractvp::problem::{load_config, SolverSection};
use fractvp::shooting::{report_text, shoot, ShootingConfig, ShootingReport, Variant};
use fractvp::{Error, FdeProblem, Mesh, MeshSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    TvpNewton,
    TvpSimplified,
    IvpForward,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::TvpNewton => "tvp-newton",
            Mode::TvpSimplified => "tvp-simplified",
            Mode::IvpForward => "ivp-forward",
        }
    }
}

#[derive(Debug, Clone)]
pub enum Source {
    Builtin { id: usize, nu: Option<usize> },
    Config(PathBuf),
}

/// Command-line or manifest overrides applied on top of the problem source.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub mode: Option<Mode>,
    pub tol: Option<f64>,
    pub k: Option<usize>,
    pub s: Option<usize>,
    pub mesh: Option<MeshSpec>,
    pub initial: Option<Vec<f64>>,
}

/// A fully resolved run.
pub struct Job {
    pub problem: FdeProblem,
    pub mesh: Mesh,
    pub mode: Mode,
    pub shooting: ShootingConfig,
}

impl Job {
    pub fn resolve(source: &Source, overrides: &Overrides) -> Result<Self, Error> {
        let (mut problem, section) = match source {
            Source::Builtin { id, nu } => {
                let p = match (id, nu) {
                    (6, nu) => builtin::example6(nu.unwrap_or(DEFAULT_NU))?,
                    (_, Some(_)) => return Err(Error::Config("--nu applies to built-in problem 6 only".into())),
                    (id, None) => builtin::builtin(*id)?,
                };
                (p, SolverSection::default())
            }
            Source::Config(path) => load_config(path)?,
        };
        if let Some(rho) = &overrides.initial {
            problem = problem.with_initial(rho.clone())?;
        }
        let mode = match (overrides.mode, section.variant.as_deref()) {
            (Some(mode), _) => mode,
            (None, None | Some("newton")) => Mode::TvpNewton,
            (None, Some("simplified")) => Mode::TvpSimplified,
            (None, Some(other)) => {
                return Err(Error::Config(format!("unknown variant '{other}'; expected newton or simplified")))
            }
        };
        match mode {
            Mode::TvpSimplified if problem.split.is_none() => {
                return Err(Error::Config("mode tvp-simplified requires a semi-linear split".into()))
            }
            Mode::IvpForward if problem.initial.is_none() => {
                return Err(Error::Config("mode ivp-forward requires an initial value".into()))
            }
            Mode::TvpNewton | Mode::TvpSimplified if problem.terminal.is_none() => {
                return Err(Error::Config("shooting modes require a terminal value".into()))
            }
            _ => {}
        }
        let spec = overrides
            .mesh
            .or(problem.mesh)
            .ok_or_else(|| Error::Config("no mesh given; add a [mesh] section".into()))?;
        let mesh = spec.build(problem.horizon)?;

        let mut shooting = ShootingConfig {
            variant: if mode == Mode::TvpSimplified { Variant::Simplified } else { Variant::Newton },
            ..Default::default()
        };
        if let Some(tol) = overrides.tol.or(section.tol) {
            shooting.tol = tol;
        }
        if let Some(eps) = section.eps {
            shooting.eps = eps;
        }
        if let Some(max_iter) = section.max_iter {
            shooting.max_iter = max_iter;
        }
        shooting.solver.k = overrides.k.or(section.k).unwrap_or(shooting.solver.k);
        shooting.solver.s = overrides.s.or(section.s).unwrap_or(shooting.solver.s);
        shooting.validate()?;
        Ok(Self { problem, mesh, mode, shooting })
    }

    pub fn solver_config(&self) -> SolverConfig {
        self.shooting.solver
    }

    /// Builds the collocation tables, reusing or refreshing `cache` when given.
    pub fn tables(&self, cache: Option<&Path>, verbose: bool) -> Result<CollocationTables, Error> {
        let SolverConfig { k, s, .. } = self.solver_config();
        let alpha = self.problem.alpha;
        if let Some(path) = cache {
            if path.exists() {
                match CollocationTables::load(path, alpha, k, s, &self.mesh) {
                    Ok(t) => {
                        if verbose {
                            eprintln!("loaded tables from {}", path.display());
                        }
                        return Ok(t);
                    }
                    Err(e) => eprintln!("warning: ignoring table cache {}: {e}", path.display()),
                }
            }
        }
        let tables = CollocationTables::build(alpha, k, s, &self.mesh)?;
        if verbose {
            eprintln!("built tables in {:.3} s", tables.build_seconds());
        }
        if let Some(path) = cache {
            tables.save(path)?;
        }
        Ok(tables)
    }

    pub fn run(&self, tables: &CollocationTables) -> Result<Outcome, Error> {
        match self.mode {
            Mode::TvpNewton | Mode::TvpSimplified => {
                Ok(Outcome::Shooting(Box::new(shoot(&self.problem, &self.mesh, tables, &self.shooting)?)))
            }
            Mode::IvpForward => {
                let start = Instant::now();
                let solver = Solver::new(&self.problem, &self.mesh, tables, self.solver_config())?;
                let rho = self.problem.initial.as_deref().expect("checked in resolve");
                let trajectory = solver.solve_ivp(rho)?;
                let continuity = solver.continuity_defect(&trajectory)?;
                Ok(Outcome::Forward {
                    trajectory: Box::new(trajectory),
                    continuity,
                    table_seconds: tables.build_seconds(),
                    total: start.elapsed(),
                })
            }
        }
    }
}

pub enum Outcome {
    Shooting(Box<ShootingReport>),
    Forward {
        trajectory: Box<Trajectory>,
        continuity: f64,
        table_seconds: f64,
        total: Duration,
    },
}

impl Outcome {
    pub fn converged(&self) -> bool {
        match self {
            Outcome::Shooting(r) => r.converged,
            Outcome::Forward { .. } => true,
        }
    }

    pub fn trajectory(&self) -> &Trajectory {
        match self {
            Outcome::Shooting(r) => &r.trajectory,
            Outcome::Forward { trajectory, .. } => trajectory,
        }
    }

    pub fn trajectory_csv(&self) -> String {
        match self {
            Outcome::Shooting(r) => trajectory_csv(&r.trajectory, Some(&r.error_estimates)),
            Outcome::Forward { trajectory, .. } => trajectory_csv(trajectory, None),
        }
    }

    pub fn report(&self, problem: &FdeProblem) -> String {
        match self {
            Outcome::Shooting(r) => report_text(problem, r),
            Outcome::Forward {
                trajectory,
                continuity,
                table_seconds,
                total,
            } => forward_report(problem, trajectory, *continuity, *table_seconds, *total),
        }
    }
}

fn vector(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(" ")
}

fn forward_report(problem: &FdeProblem, traj: &Trajectory, continuity: f64, table_seconds: f64, total: Duration) -> String {
    let mut out = String::new();
    writeln!(out, "problem: {}", problem.name).ok();
    writeln!(out, "alpha = {}, T = {}, dim = {}", problem.alpha, problem.horizon, problem.dim()).ok();
    writeln!(out, "mesh: {}", traj.mesh().signature()).ok();
    writeln!(out, "mode: ivp-forward").ok();
    out.push('\n');
    writeln!(out, "[summary]").ok();
    writeln!(out, "mode = ivp-forward").ok();
    writeln!(out, "converged = true").ok();
    writeln!(out, "initial = {}", vector(traj.initial())).ok();
    writeln!(out, "terminal = {}", vector(traj.terminal())).ok();
    writeln!(out, "continuity_defect = {continuity:.6e}").ok();
    let sweeps = traj.sweeps().iter().copied().max().unwrap_or(0);
    writeln!(out, "max_sweeps = {sweeps}").ok();
    out.push('\n');
    let ms = |d: Duration| d.as_secs_f64() * 1e3;
    let t = &traj.timings;
    writeln!(out, "[timings]").ok();
    writeln!(out, "tables_ms = {:.3}", table_seconds * 1e3).ok();
    writeln!(out, "memory_ms = {:.3}", ms(t.memory)).ok();
    writeln!(out, "local_ms = {:.3}", ms(t.local)).ok();
    writeln!(out, "total_ms = {:.3}", ms(total)).ok();
    out
}
