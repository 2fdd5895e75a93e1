//! Uniform and geometrically graded partitions of [0, T].
//!
//! A graded mesh fixes the first stepsize h_1 and the step count N and
//! derives the ratio r > 1 from h_1 (r^N − 1)/(r − 1) = T, so that
//! h_n = r^(n−1) h_1.

use rug::ops::Pow;
use rug::Float;

use crate::error::{Error, Result};
use crate::specfun::BASE_PREC;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeshKind {
    Uniform,
    Graded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    kind: MeshKind,
    horizon: f64,
    ratio: f64,
    /// r in extended precision, used for the kernel arguments.
    ratio_precise: Float,
    steps: Vec<f64>,
    knots: Vec<f64>,
}

impl Mesh {
    pub fn uniform(horizon: f64, n: usize) -> Result<Self> {
        check_horizon(horizon)?;
        if n == 0 {
            return Err(Error::DegenerateMesh("at least one step is required".into()));
        }
        let h = horizon / n as f64;
        let knots = (0..=n)
            .map(|i| if i == n { horizon } else { horizon * i as f64 / n as f64 })
            .collect();
        Ok(Self {
            kind: MeshKind::Uniform,
            horizon,
            ratio: 1.0,
            ratio_precise: Float::with_val(BASE_PREC, 1u32),
            steps: vec![h; n],
            knots,
        })
    }

    /// Graded mesh with first stepsize `h1`; `h1 = T/N` yields the uniform mesh.
    pub fn graded(horizon: f64, n: usize, h1: f64) -> Result<Self> {
        check_horizon(horizon)?;
        if n == 0 {
            return Err(Error::DegenerateMesh("at least one step is required".into()));
        }
        if !(h1 > 0.0) || !h1.is_finite() {
            return Err(Error::DegenerateMesh(format!("first stepsize must be positive, got {h1}")));
        }
        let uniform_h = horizon / n as f64;
        if (h1 - uniform_h).abs() <= 4.0 * f64::EPSILON * uniform_h {
            return Self::uniform(horizon, n);
        }
        if h1 > uniform_h {
            return Err(Error::DegenerateMesh(format!(
                "h1 = {h1} exceeds T/N = {uniform_h}; no grading ratio r > 1 exists"
            )));
        }
        let ratio_precise = refine_ratio(solve_ratio(horizon, n, h1)?, horizon, n, h1);

        // steps and knots from the exact geometric sequence, rounded once
        let mut steps = Vec::with_capacity(n);
        let mut knots = Vec::with_capacity(n + 1);
        knots.push(0.0);
        let mut h = Float::with_val(BASE_PREC, h1);
        let mut t = Float::new(BASE_PREC);
        for i in 0..n {
            t += &h;
            steps.push(h.to_f64());
            knots.push(if i + 1 == n { horizon } else { t.to_f64() });
            h *= &ratio_precise;
        }
        if steps.iter().any(|&h| !(h > 0.0)) {
            return Err(Error::MeshBracket("graded stepsizes are not positive".into()));
        }
        Ok(Self {
            kind: MeshKind::Graded,
            horizon,
            ratio: ratio_precise.to_f64(),
            ratio_precise,
            steps,
            knots,
        })
    }

    pub fn kind(&self) -> MeshKind {
        self.kind
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// h_n for n = 1..=N (index 0 holds h_1).
    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    pub fn step(&self, n: usize) -> f64 {
        self.steps[n - 1]
    }

    pub fn first_step(&self) -> f64 {
        self.steps[0]
    }

    /// t_0..t_N.
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Step index n with t ∈ [t_{n−1}, t_n] and the local abscissa c.
    pub fn locate(&self, t: f64) -> Result<(usize, f64)> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::OutsideHorizon {
                t,
                horizon: self.horizon,
            });
        }
        if t == 0.0 {
            return Ok((1, 0.0));
        }
        // first knot >= t
        let n = self.knots.partition_point(|&k| k < t).max(1);
        if self.knots[n] == t {
            return Ok((n, 1.0));
        }
        let c =((t - self.knots[n - 1]) / self.steps[n - 1]).clamp(0.0, 1.0);
        Ok((n, c))
    }

    /// Kernel argument (t_{n−1} + c h_n − t_{ν−1}) / h_ν for d = n − ν ≥ 1,
    /// i.e. (r^d − 1)/(r − 1) + c r^d, or d + c on a uniform mesh.
    pub fn kernel_argument(&self, d: usize, c: &Float) -> Float {
        let prec = BASE_PREC;
        match self.kind {
            MeshKind::Uniform => Float::with_val(prec, c + d as u32),
            MeshKind::Graded => {
                let r = &self.ratio_precise;
                let rd = Float::with_val(prec, Pow::pow(r, d as u32));
                let geom = Float::with_val(prec, &rd - 1u32) / Float::with_val(prec, r - 1u32);
                geom + Float::with_val(prec, c * &rd)
            }
        }
    }

    /// Compact description used to key cached tables.
    pub fn signature(&self) -> String {
        match self.kind {
            MeshKind::Uniform => format!("uniform N={}", self.len()),
            MeshKind::Graded => format!("graded N={} r={:?}", self.len(), self.ratio),
        }
    }
}

fn check_horizon(horizon: f64) -> Result<()> {
    if horizon > 0.0 && horizon.is_finite() {
        Ok(())
    } else {
        Err(Error::DegenerateMesh(format!("horizon must be positive, got {horizon}")))
    }
}

/// S(u) = ((1+u)^N − 1)/u, the sum Σ_{i<N} r^i written in u = r − 1.
fn geometric_sum(u: f64, n: usize) -> f64 {
    (n as f64 * u.ln_1p()).exp_m1() / u
}

/// Solves h1 S(r − 1) = T for r > 1 by bisection on ln S, polished with Newton.
fn solve_ratio(horizon: f64, n: usize, h1: f64) -> Result<f64> {
    let target = (horizon / h1).ln();
    let g = |u: f64| geometric_sum(u, n).ln() - target;
    let mut lo = f64::MIN_POSITIVE.sqrt();
    if g(lo) > 0.0 {
        return Err(Error::MeshBracket(format!("no ratio for T={horizon}, N={n}, h1={h1}")));
    }
    let mut hi = 1.0;
    while g(hi) < 0.0 {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::MeshBracket(format!("no ratio for T={horizon}, N={n}, h1={h1}")));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut u = 0.5 * (lo + hi);
    // Newton on the original equation in relative form
    for _ in 0..3 {
        let r = 1.0 + u;
        let s = geometric_sum(u, n);
        let rn = (n as f64 * u.ln_1p()).exp();
        // dS/du = (N r^(N-1) u - (r^N - 1)) / u^2
        let ds = (n as f64 * rn / r * u - (rn - 1.0)) / (u * u);
        let f = h1 * s - horizon;
        let step = f / (h1 * ds);
        if step.is_finite() && (u - step) > 0.0 {
            u -= step;
        }
    }
    let residual = (h1 * geometric_sum(u, n) - horizon).abs() / horizon;
    if residual > 1e-14 {
        return Err(Error::MeshBracket(format!("grading ratio residual {residual:e} too large")));
    }
    Ok(1.0 + u)
}

/// Newton on h1 (r^N − 1) − T (r − 1) = 0 in extended precision, started
/// from the double-precision root.
fn refine_ratio(r0: f64, horizon: f64, n: usize, h1: f64) -> Float {
    let prec = BASE_PREC;
    let h1 = Float::with_val(prec, h1);
    let t = Float::with_val(prec, horizon);
    let mut r = Float::with_val(prec, r0);
    for _ in 0..8 {
        let rn1 = Float::with_val(prec, Pow::pow(&r, (n - 1) as u32));
        let rn = Float::with_val(prec, &rn1 * &r);
        let f = Float::with_val(prec, &h1 * Float::with_val(prec, &rn - 1u32))
            - Float::with_val(prec, &t * Float::with_val(prec, &r - 1u32));
        let df = Float::with_val(prec, &h1 * &rn1) * n as u32 - &t;
        let step = Float::with_val(prec, &f / &df);
        r -= &step;
        if step.is_zero() || step.get_exp().unwrap_or(i32::MIN) < -(prec as i32) {
            break;
        }
    }
    r
}

/// Mesh description independent of the horizon.
#[derive(Debug, Clone, Copy, PartialEq, serde::Deserialize, serde::Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MeshSpec {
    Uniform { n: usize },
    Graded { n: usize, h1: f64 },
}

impl MeshSpec {
    pub fn build(&self, horizon: f64) -> Result<Mesh> {
        match *self {
            MeshSpec::Uniform { n } => Mesh::uniform(horizon, n),
            MeshSpec::Graded { n, h1 } => Mesh::graded(horizon, n, h1),
        }
    }

    pub fn steps(&self) -> usize {
        match *self {
            MeshSpec::Uniform { n } | MeshSpec::Graded { n, .. } => n,
        }
    }
}

pub fn build_uniform(horizon: f64, n: usize) -> Result<Mesh> {
    Mesh::uniform(horizon, n)
}

pub fn build_graded(horizon: f64, n: usize, h1: f64) -> Result<Mesh> {
    Mesh::graded(horizon, n, h1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_basics() {
        let m = Mesh::uniform(1.0, 10).unwrap();
        assert_eq!(m.step(3), 0.1);
        assert_eq!(m.knots()[5], 0.5);
        assert_eq!(m.knots()[10], 1.0);
        assert_eq!(Mesh::uniform(20.0, 400).unwrap().step(1), 1.0 / 20.0);
        assert_eq!(Mesh::uniform(20.0, 1000).unwrap().step(7), 0.02);
        assert!(Mesh::uniform(1.0, 0).is_err());
    }

    #[test]
    fn graded_ratio_example_two() {
        let m = Mesh::graded(7.0, 500, 1e-14).unwrap();
        assert!((m.ratio() - 1.064914852480467).abs() < 1e-12);
        assert_eq!(m.knots()[500], 7.0);
        let total: f64 = m.steps().iter().sum();
        assert!((total - 7.0).abs() < 1e-13);
        assert!(m.steps().windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn degenerate_graded_is_uniform() {
        let m = Mesh::graded(1.0, 10, 0.1).unwrap();
        assert_eq!(m.kind(), MeshKind::Uniform);
        assert_eq!(m.ratio(), 1.0);
        assert!(Mesh::graded(1.0, 10, 0.2).is_err());
    }

    #[test]
    fn locate_points() {
        let m = Mesh::uniform(1.0, 10).unwrap();
        assert_eq!(m.locate(0.0).unwrap(), (1, 0.0));
        let (n, c) = m.locate(0.55).unwrap();
        assert_eq!(n, 6);
        assert!((c - 0.5).abs() < 1e-12);
        assert_eq!(m.locate(1.0).unwrap(), (10, 1.0));
        assert!(m.locate(1.5).is_err());
    }
}
