//! `reproduce`: runs the cases of a threshold manifest and prints one row
//! per case.

use std::collections::HashMap;
use std::path::Path;
use std::time::Instant;

use fractvp::{Error, MeshSpec};
use serde::Deserialize;

use crate::job::{Job, Mode, Outcome, Overrides, Source};

pub const BUNDLED: &str = include_str!("../manifests/reproduce.toml");
const SUPPORTED_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub version: u32,
    #[serde(rename = "case")]
    pub cases: Vec<Case>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Case {
    pub name: String,
    pub builtin: usize,
    pub nu: Option<usize>,
    pub mode: Mode,
    pub mesh: Option<MeshSpec>,
    pub initial: Option<Vec<f64>>,
    /// Exact iteration count.
    pub iterations: Option<usize>,
    pub max_iterations: Option<usize>,
    pub rho: Option<Vec<f64>>,
    pub rho_tol: Option<f64>,
    /// Distance of the final iterate from the problem's initial value.
    pub initial_tol: Option<f64>,
    #[serde(default, rename = "iterate")]
    pub iterates: Vec<IterateCheck>,
    pub max_knot_error: Option<f64>,
    pub terminal: Option<Vec<f64>>,
    pub terminal_tol: Option<f64>,
    pub mesh_ratio: Option<f64>,
    pub ratio_tol: Option<f64>,
    pub series_terms: Option<usize>,
    pub max_variational_solves: Option<usize>,
    pub compare_with: Option<String>,
    pub compare_tol: Option<f64>,
    pub max_seconds: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IterateCheck {
    pub index: usize,
    pub value: Vec<f64>,
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self, Error> {
        let manifest: Manifest = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if manifest.version != SUPPORTED_VERSION {
            return Err(Error::Config(format!(
                "manifest version {} is not supported (expected {SUPPORTED_VERSION})",
                manifest.version
            )));
        }
        Ok(manifest)
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).map(|(x, y)| (x - y).abs() / y.abs()).fold(0.0, f64::max)
}

/// Checks collected for one case.
struct Row {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Row {
    fn check(&mut self, label: &str, value: f64, limit: f64) {
        if value <= limit {
            self.notes.push(format!("{label} {value:.1e}"));
        } else {
            self.failures.push(format!("{label} {value:.3e} > {limit:.1e}"));
        }
    }

    fn require(&mut self, ok: bool, what: String) {
        if ok {
            self.notes.push(what);
        } else {
            self.failures.push(what);
        }
    }
}

fn evaluate(case: &Case, job: &Job, outcome: &Outcome, seconds: f64, finals: &HashMap<String, Vec<f64>>) -> Row {
    let mut row = Row {
        failures: Vec::new(),
        notes: Vec::new(),
    };
    let traj = outcome.trajectory();
    if let Outcome::Shooting(report) = outcome {
        row.require(report.converged, format!("converged={}", report.converged));
        let l = report.iterations;
        if let Some(expected) = case.iterations {
            row.require(l == expected, format!("iterations {l} (expected {expected})"));
        }
        if let Some(limit) = case.max_iterations {
            row.require(l <= limit, format!("iterations {l} (at most {limit})"));
        }
        let rho = report.final_rho();
        if let (Some(target), Some(tol)) = (&case.rho, case.rho_tol) {
            row.check("rho err", max_abs_diff(rho, target), tol);
        }
        if let Some(tol) = case.initial_tol {
            match &job.problem.initial {
                Some(init) => row.check("y(0) err", max_abs_diff(rho, init), tol),
                None => row.failures.push("problem has no initial value".into()),
            }
        }
        for it in &case.iterates {
            match report.iterates.get(it.index) {
                None => row.failures.push(format!("iterate {} missing", it.index)),
                Some(got) => {
                    if let Some(rtol) = it.rtol {
                        row.check(&format!("rho_{} rel", it.index), max_rel_diff(got, &it.value), rtol);
                    }
                    if let Some(atol) = it.atol {
                        row.check(&format!("rho_{} abs", it.index), max_abs_diff(got, &it.value), atol);
                    }
                }
            }
        }
        if let Some(j) = case.series_terms {
            row.require(report.series_terms == Some(j), format!("J = {:?} (expected {j})", report.series_terms));
        }
        if let Some(limit) = case.max_variational_solves {
            let v = report.variational_solves;
            row.require(v <= limit, format!("variational solves {v} (at most {limit})"));
        }
        if let (Some(other), Some(tol)) = (&case.compare_with, case.compare_tol) {
            match finals.get(other) {
                Some(reference) => row.check(&format!("vs '{other}'"), max_abs_diff(rho, reference), tol),
                None => row.failures.push(format!("no result for '{other}'")),
            }
        }
    }
    if let (Some(target), Some(tol)) = (&case.terminal, case.terminal_tol) {
        row.check("y(T) err", max_abs_diff(traj.terminal(), target), tol);
    }
    if let Some(limit) = case.max_knot_error {
        match &job.problem.exact {
            Some(exact) => {
                let err = (0..=traj.steps())
                    .map(|n| max_abs_diff(traj.at_knot(n), &exact(job.mesh.knots()[n])))
                    .fold(0.0, f64::max);
                row.check("knot err", err, limit);
            }
            None => row.failures.push("no exact solution for knot errors".into()),
        }
    }
    if let (Some(r), Some(tol)) = (case.mesh_ratio, case.ratio_tol) {
        row.check("ratio err", (job.mesh.ratio() - r).abs(), tol);
    }
    if let Some(limit) = case.max_seconds {
        row.check("seconds", seconds, limit);
    }
    row
}

/// Runs every case; returns whether all passed.
pub fn run(manifest: Option<&Path>, verbose: bool) -> Result<bool, Error> {
    let text = match manifest {
        Some(path) => std::fs::read_to_string(path)?,
        None => BUNDLED.to_string(),
    };
    let manifest = Manifest::parse(&text)?;
    let start = Instant::now();
    let mut finals = HashMap::new();
    let mut passed = 0;
    for case in &manifest.cases {
        let overrides = Overrides {
            mode: Some(case.mode),
            mesh: case.mesh,
            initial: case.initial.clone(),
            ..Default::default()
        };
        let source = Source::Builtin {
            id: case.builtin,
            nu: case.nu,
        };
        let t0 = Instant::now();
        let result = Job::resolve(&source, &overrides).and_then(|job| {
            let tables = job.tables(None, verbose)?;
            let outcome = job.run(&tables)?;
            Ok((job, outcome))
        });
        let seconds = t0.elapsed().as_secs_f64();
        let row = match &result {
            Ok((job, outcome)) => {
                if let Outcome::Shooting(r) = outcome {
                    finals.insert(case.name.clone(), r.final_rho().to_vec());
                }
                evaluate(case, job, outcome, seconds, &finals)
            }
            Err(e) => Row {
                failures: vec![format!("error: {e}")],
                notes: Vec::new(),
            },
        };
        let ok = row.failures.is_empty();
        if ok {
            passed += 1;
        }
        let status = if ok { "PASS" } else { "FAIL" };
        let detail = if ok { row.notes.join(", ") } else { row.failures.join("; ") };
        println!("{status}  {:<32} {:>8.2} s  {detail}", case.name, seconds);
    }
    let total = manifest.cases.len();
    println!(
        "summary: {passed}/{total} passed in {:.1} s; {}",
        start.elapsed().as_secs_f64(),
        if passed == total { "PASS" } else { "FAIL" }
    );
    Ok(passed == total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_manifest_parses() {
        let m = Manifest::parse(BUNDLED).unwrap();
        assert!(m.cases.len() >= 11);
        assert!(m.cases.iter().any(|c| c.mode == Mode::IvpForward));
        let names: Vec<_> = m.cases.iter().map(|c| c.name.as_str()).collect();
        for c in &m.cases {
            if let Some(other) = &c.compare_with {
                let pos = names.iter().position(|n| n == other).expect("reference case exists");
                let me = names.iter().position(|n| *n == c.name).unwrap();
                assert!(pos < me);
            }
        }
    }

    #[test]
    fn version_is_checked() {
        assert!(Manifest::parse("version = 2\ncase = []").is_err());
        assert!(Manifest::parse("version = 1\ncase = []").is_ok());
    }
}
