//! Collocation tables for a given (α, k, s) and mesh.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use nalgebra::DMatrix;
use rug::Float;

use crate::error::{Error, Result};
use crate::meshing::Mesh;
use crate::specfun::jacobi::Recurrence;
use crate::specfun::{gauss_jacobi_rule, JacobiBasis, KernelCache, QuadratureRule, BASE_PREC};

const CACHE_HEADER: &str = "fractvp-tables 1";

/// Basis values, fractional integrals and memory kernels shared by every
/// solve on one mesh.
///
/// Kernel columns `0..k` hold the quadrature nodes and column `k` the
/// endpoint c = 1.
#[derive(Debug, Clone)]
pub struct CollocationTables {
    alpha: f64,
    k: usize,
    s: usize,
    rule: QuadratureRule,
    basis: JacobiBasis,
    /// P_j(c_i), k×s.
    p: DMatrix<f64>,
    /// I^α P_j(c_i), k×s.
    ia: DMatrix<f64>,
    /// I^α P_j(1).
    ia_end: Vec<f64>,
    /// b_i P_j(c_i), s×k.
    pto: DMatrix<f64>,
    kernels: KernelCache,
    mesh_signature: String,
    build_seconds: f64,
}

impl CollocationTables {
    pub fn build(alpha: f64, k: usize, s: usize, mesh: &Mesh) -> Result<Self> {
        let start = Instant::now();
        let (rule, basis) = Self::rule_and_basis(alpha, k, s)?;
        let rows = mesh.len().saturating_sub(1);
        let one = Float::with_val(BASE_PREC, 1u32);
        let nodes = rule.precise_nodes.clone();
        let kernels = KernelCache::build(&basis, rows, k + 1, |d, col| {
            let c = if col < k { &nodes[col] } else { &one };
            mesh.kernel_argument(d, c)
        });
        let mut tables = Self::assemble(rule, basis, kernels, mesh)?;
        tables.build_seconds = start.elapsed().as_secs_f64();
        Ok(tables)
    }

    fn rule_and_basis(alpha: f64, k: usize, s: usize) -> Result<(QuadratureRule, JacobiBasis)> {
        if s == 0 || k < s {
            return Err(Error::InvalidInput(format!("need 1 <= s <= k, got k = {k}, s = {s}")));
        }
        Ok((gauss_jacobi_rule(alpha, k)?, JacobiBasis::new(alpha, s)?))
    }

    fn assemble(rule: QuadratureRule, basis: JacobiBasis, kernels: KernelCache, mesh: &Mesh) -> Result<Self> {
        let k = rule.len();
        let s = basis.len();
        let alpha = basis.alpha();
        let rec = Recurrence::new(alpha, s - 1, BASE_PREC);
        let mut p = DMatrix::zeros(k, s);
        let mut ia = DMatrix::zeros(k, s);
        for (i, c) in rule.precise_nodes.iter().enumerate() {
            for (j, v) in rec.eval_all(c).iter().enumerate() {
                p[(i, j)] = v.to_f64();
            }
            for (j, v) in basis.frac_int_precise(c).iter().enumerate() {
                ia[(i, j)] = v.to_f64();
            }
        }
        let ia_end = basis.frac_int(1.0)?;
        let mut pto = DMatrix::zeros(s, k);
        for i in 0..k {
            for j in 0..s {
                pto[(j, i)] = rule.weights()[i] * p[(i, j)];
            }
        }
        Ok(Self {
            alpha,
            k,
            s,
            rule,
            basis,
            p,
            ia,
            ia_end,
            pto,
            kernels,
            mesh_signature: mesh.signature(),
            build_seconds: 0.0,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn basis(&self) -> &JacobiBasis {
        &self.basis
    }

    pub fn nodes(&self) -> &[f64] {
        self.rule.nodes()
    }

    pub fn basis_values(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn frac_values(&self) -> &DMatrix<f64> {
        &self.ia
    }

    pub fn frac_endpoint(&self) -> &[f64] {
        &self.ia_end
    }

    /// 𝒫ᵀΩ, s×k.
    pub fn weighted_transpose(&self) -> &DMatrix<f64> {
        &self.pto
    }

    pub fn kernels(&self) -> &KernelCache {
        &self.kernels
    }

    pub fn gamma_alpha1(&self) -> f64 {
        self.basis.gamma_alpha1()
    }

    pub fn mesh_signature(&self) -> &str {
        &self.mesh_signature
    }

    pub fn build_seconds(&self) -> f64 {
        self.build_seconds
    }

    /// Whether these tables were built for `mesh`.
    pub fn matches(&self, mesh: &Mesh) -> bool {
        self.mesh_signature == mesh.signature() && self.kernels.rows() + 1 == mesh.len().max(1)
    }

    /// max |𝒫ᵀΩ𝒫 − I|.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = &self.pto * &self.p;
        let mut worst = 0.0f64;
        for i in 0..self.s {
            for j in 0..self.s {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - target).abs());
            }
        }
        worst
    }

    /// Writes the kernel table to a text file.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        writeln!(out, "{CACHE_HEADER}").ok();
        writeln!(out, "alpha {:?}", self.alpha).ok();
        writeln!(out, "k {}", self.k).ok();
        writeln!(out, "s {}", self.s).ok();
        writeln!(out, "mesh {}", self.mesh_signature).ok();
        writeln!(out, "rows {}", self.kernels.rows()).ok();
        for v in self.kernels.values() {
            writeln!(out, "{v:?}").ok();
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    /// Reads tables written by [`save`](Self::save), checking that they
    /// belong to (α, k, s) and `mesh`.
    pub fn load(path: &Path, alpha: f64, k: usize, s: usize, mesh: &Mesh) -> Result<Self> {
        let start = Instant::now();
        let text = std::fs::read_to_string(path)?;
        let (header, lines) = CacheHeader::parse(&text)?;
        if header.alpha != alpha || header.k != k || header.s != s || header.mesh != mesh.signature() {
            return Err(Error::Cache(format!(
                "cache is for alpha = {}, k = {}, s = {}, {}",
                header.alpha, header.k, header.s, header.mesh
            )));
        }
        let rows = header.rows;
        let values = lines
            .map(|l| l.trim().parse::<f64>().map_err(|_| Error::Cache(format!("bad value '{l}'"))))
            .collect::<Result<Vec<_>>>()?;
        let kernels = KernelCache::from_parts(rows, k + 1, s, values)?;
        let (rule, basis) = Self::rule_and_basis(alpha, k, s)?;
        let mut tables = Self::assemble(rule, basis, kernels, mesh)?;
        if !tables.matches(mesh) {
            return Err(Error::Cache("kernel rows do not match the mesh".into()));
        }
        tables.build_seconds = start.elapsed().as_secs_f64();
        Ok(tables)
    }
}

/// Header of a saved kernel table.
#[derive(Debug, Clone, PartialEq)]
pub struct CacheHeader {
    pub alpha: f64,
    pub k: usize,
    pub s: usize,
    pub mesh: String,
    pub rows: usize,
}

impl CacheHeader {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(Self::parse(&text)?.0)
    }

    fn parse(text: &str) -> Result<(Self, std::str::Lines<'_>)> {
        let mut lines = text.lines();
        let mut field = |key: &str| -> Result<String> {
            let line = lines.next().ok_or_else(|| Error::Cache("truncated header".into()))?;
            line.strip_prefix(key)
                .map(|v| v.trim().to_string())
                .ok_or_else(|| Error::Cache(format!("expected '{key}', found '{line}'")))
        };
        if !field(CACHE_HEADER)?.is_empty() {
            return Err(Error::Cache("unrecognised cache header".into()));
        }
        let alpha = field("alpha ")?.parse().map_err(|_| Error::Cache("bad alpha".into()))?;
        let k = field("k ")?.parse().map_err(|_| Error::Cache("bad k".into()))?;
        let s = field("s ")?.parse().map_err(|_| Error::Cache("bad s".into()))?;
        let mesh = field("mesh ")?;
        let rows = field("rows ")?.parse().map_err(|_| Error::Cache("bad rows".into()))?;
        Ok((Self { alpha, k, s, mesh, rows }, lines))
    }
}
