//! Bounce expansion of the symmetric amplitude and its resummation.

use collective::bounces::BounceDecomposition;
use collective::{ModelParams, QuadratureSpec};

fn main() -> collective::Result<()> {
    let quad = QuadratureSpec::default();
    for x21 in [2.0, 29.025] {
        let params = ModelParams::default().with_separation(x21);
        let d = BounceDecomposition::new(x21, &params, &quad)?;
        println!("x21 = {x21}: z_s1 = {:.6}, x·|Δ| = {:.3}", d.z_s1.value, d.lagrange_parameter()?);
        for t in [0.5 * x21, 1.5 * x21, 2.5 * x21] {
            print!("  t = {t:>8.3}  sum = {:.6}", d.bounce_sum(t)?);
            match d.resummed(t) {
                Ok(r) => println!("  resummed vs pole: {:.2e}", r.relative_discrepancy),
                Err(e) => println!("  resummation: {e}"),
            }
        }
    }
    Ok(())
}
