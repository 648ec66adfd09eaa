//! Field intensity between the emitters, from the lattice and from the pole.

use collective::dynamics::{collective_field, diagonalized_lattice, AtomicState, LatticeBasis, LatticeSpec};
use collective::greens::principal_pole;
use collective::{Channel, ModelParams, QuadratureSpec, SymmetrySector};

fn main() -> collective::Result<()> {
    let x21 = 29.025;
    let params = ModelParams::default().with_separation(x21);
    let quad = QuadratureSpec::default();
    let model = diagonalized_lattice(&params, &LatticeSpec::default(), LatticeBasis::Sector(SymmetrySector::Symmetric))?;
    let t = 4.02 * x21;
    let xs: Vec<f64> = (1..29).map(|i| i as f64 * x21 / 29.0).collect();
    let exact = model.field_intensity(&AtomicState::sector(SymmetrySector::Symmetric), &xs, t)?;
    let pole = principal_pole(Channel::Symmetric, x21, &params, &quad)?;
    let approx = collective_field(&params, &pole, &xs, t, &quad)?;
    for ((x, a), b) in xs.iter().zip(&exact.intensity).zip(&approx.intensity) {
        println!("x = {x:>7.3}  lattice {a:.4e}  pole {b:.4e}");
    }
    Ok(())
}
