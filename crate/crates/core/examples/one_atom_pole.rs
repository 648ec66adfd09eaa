//! Principal poles of one emitter and of the two collective sectors.

use collective::greens::principal_pole;
use collective::{Channel, ModelParams, QuadratureSpec};

fn main() -> collective::Result<()> {
    let params = ModelParams::default();
    let quad = QuadratureSpec::default();
    let z1 = principal_pole(Channel::OneAtom, 1.0, &params, &quad)?;
    println!("one atom      z = {:.6}  N = {:.6}", z1.value, z1.normalization);
    for x21 in [12.7, 29.025] {
        for ch in [Channel::Symmetric, Channel::Antisymmetric] {
            let z = principal_pole(ch, x21, &params, &quad)?;
            println!("x21 = {x21:<7} {}  z = {:.6}  γ/γ₁ = {:.4}", ch.tag(), z.value, z.gamma / z1.gamma);
        }
    }
    Ok(())
}
