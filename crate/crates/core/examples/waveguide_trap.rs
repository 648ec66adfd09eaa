//! A real collective pole for two cavities on a single-channel waveguide.

use collective::waveguide::{collective_pole_wg, existence_check, trap_report, WaveguideParams};
use collective::{QuadratureSpec, SymmetrySector};

fn main() -> collective::Result<()> {
    let wg = WaveguideParams::default();
    let quad = QuadratureSpec::default();
    println!("existence margin {:.6}", existence_check(&wg, &quad)?.margin);
    for (n, s) in [(1, SymmetrySector::Symmetric), (2, SymmetrySector::Antisymmetric), (3, SymmetrySector::Symmetric)] {
        let r = trap_report(&wg, n, s, &quad)?;
        println!("{s} n = {n}: ξ̃ = {:.8}  x_trap = {:.6}  γ = {:.1e}", r.xi_tilde, r.x21_trap, r.gamma_residual);
        let off = collective_pole_wg(&wg, s, 1.1 * r.x21_trap, &quad)?;
        println!("    at 1.1·x_trap γ = {:.3e}", off.gamma);
    }
    Ok(())
}
