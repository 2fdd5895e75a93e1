//! Recomputes the terminal values that have no closed form by forward
//! solves on the reference meshes.
//!
//! ```text
//! cargo run --release -p fractvp --example regenerate_references
//! ```

use fractvp::fhbvm::{forward_terminal, SolverConfig};
use fractvp::problem::builtin::{self, example6_untargeted, reference_mesh};

fn main() -> Result<(), fractvp::Error> {
    let config = SolverConfig::default();
    for id in [3, 5] {
        let p = builtin::builtin(id)?;
        let spec = reference_mesh(id).expect("reference mesh");
        let mesh = spec.build(p.horizon)?;
        let eta = forward_terminal(&p, p.initial.as_ref().expect("initial value"), &mesh, &config)?;
        println!("problem {id} ({}): eta = {eta:?}, stored {:?}", mesh.signature(), p.terminal.as_ref().expect("terminal value"));
    }
    for nu in [1, 5, 10] {
        let p = example6_untargeted(nu)?;
        let mesh = reference_mesh(6).expect("reference mesh").build(p.horizon)?;
        let eta = forward_terminal(&p, p.initial.as_ref().expect("initial value"), &mesh, &config)?;
        println!("problem 6, nu = {nu} ({}): eta = {eta:?}", mesh.signature());
    }
    Ok(())
}
