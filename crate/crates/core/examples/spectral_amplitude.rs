//! `I(t) = ∫ρ(k)e^{−ikt}dk` for one emitter, compared with the pole term.

use collective::bounces::spectral_grid;
use collective::greens::principal_pole;
use collective::{Channel, ModelParams, QuadratureSpec};

fn main() -> collective::Result<()> {
    let params = ModelParams::default();
    let quad = QuadratureSpec::default();
    let grid = spectral_grid(Channel::OneAtom, 1.0, &params, &quad, 100.0)?;
    let z1 = principal_pole(Channel::OneAtom, 1.0, &params, &quad)?;
    println!("{} nodes", grid.node_count());
    for t in [0.0, 10.0, 50.0, 100.0] {
        let i = grid.amplitude(t)?;
        let pole = z1.normalization * (-num_complex::Complex64::i() * z1.value * t).exp();
        println!("t = {t:>5}  |I|² = {:.6e}  pole {:.6e}", i.norm_sqr(), pole.norm_sqr());
    }
    Ok(())
}
