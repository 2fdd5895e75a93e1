use std::path::PathBuf;

use clap::Subcommand;
use fractvp::fhbvm::{CacheHeader, CollocationTables};
use fractvp::problem::builtin;
use fractvp::{Error, Mesh};

#[derive(Subcommand)]
pub enum TablesCommand {
    /// Build tables for a mesh and save them.
    Build {
        /// Take α, T and the mesh from a built-in problem.
        #[arg(long, conflicts_with_all = ["alpha", "horizon", "n"])]
        builtin: Option<usize>,
        #[arg(long, required_unless_present = "builtin")]
        alpha: Option<f64>,
        #[arg(long = "T", required_unless_present = "builtin")]
        horizon: Option<f64>,
        /// Step count.
        #[arg(long, required_unless_present = "builtin")]
        n: Option<usize>,
        /// First stepsize of a graded mesh; uniform when omitted.
        #[arg(long, requires = "n")]
        h1: Option<f64>,
        #[arg(long, default_value_t = 22)]
        k: usize,
        #[arg(long, default_value_t = 20)]
        s: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the header of a saved table.
    Inspect { path: PathBuf },
}

pub fn run(cmd: TablesCommand) -> Result<(), Error> {
    match cmd {
        TablesCommand::Build {
            builtin: id,
            alpha,
            horizon,
            n,
            h1,
            k,
            s,
            out,
        } => {
            let (alpha, mesh) = match id {
                Some(id) => {
                    let problem = builtin::builtin(id)?;
                    let spec = problem.mesh.ok_or_else(|| Error::Config(format!("problem {id} has no mesh")))?;
                    (problem.alpha, spec.build(problem.horizon)?)
                }
                None => {
                    let (alpha, horizon, n) = (alpha.unwrap(), horizon.unwrap(), n.unwrap());
                    let mesh = match h1 {
                        Some(h1) => Mesh::graded(horizon, n, h1)?,
                        None => Mesh::uniform(horizon, n)?,
                    };
                    (alpha, mesh)
                }
            };
            let tables = CollocationTables::build(alpha, k, s, &mesh)?;
            tables.save(&out)?;
            println!(
                "wrote {} ({}, alpha = {alpha}, k = {k}, s = {s}) in {:.3} s; orthonormality defect {:.2e}",
                out.display(),
                mesh.signature(),
                tables.build_seconds(),
                tables.orthonormality_defect()
            );
            Ok(())
        }
        TablesCommand::Inspect { path } => {
            let h = CacheHeader::read(&path)?;
            println!("alpha = {}", h.alpha);
            println!("k = {}", h.k);
            println!("s = {}", h.s);
            println!("mesh = {}", h.mesh);
            println!("kernel_rows = {}", h.rows);
            Ok(())
        }
    }
}
