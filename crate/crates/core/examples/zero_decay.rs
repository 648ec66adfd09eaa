//! Separations at which a collective pole reaches the real axis.

use collective::sweep::{zero_decay_gamma, zero_decay_in_range};
use collective::{ModelParams, QuadratureSpec, SymmetrySector};

fn main() -> collective::Result<()> {
    let params = ModelParams::default();
    let quad = QuadratureSpec::default();
    for s in SymmetrySector::BOTH {
        for sol in zero_decay_in_range(s, 5.0, 40.0, &params, &quad)? {
            let gamma = zero_decay_gamma(&sol, &params, &quad)?;
            println!("{s} n = {:>2}  ω° = {:.6}  x = {:.4}  γ there = {gamma:.1e}", sol.n, sol.omega_o, sol.x21_zero);
        }
    }
    Ok(())
}
