//! Exact finite-box survival of `|s⟩` against the pole-only prediction.
//!
//! Pass a directory as the first argument to cache the eigensystem there.

use collective::dynamics::{collective_survival, AtomicState, EigenCache, LatticeBasis, LatticeSpec};
use collective::{ModelParams, QuadratureSpec, SymmetrySector};

fn main() -> collective::Result<()> {
    let x21 = 29.025;
    let params = ModelParams::default().with_separation(x21);
    let spec = LatticeSpec::default();
    let basis = LatticeBasis::Sector(SymmetrySector::Symmetric);
    let model = match std::env::args().nth(1) {
        Some(dir) => EigenCache::new(dir).diagonalize(&params, &spec, basis)?,
        None => collective::dynamics::diagonalized_lattice(&params, &spec, basis)?,
    };
    let times: Vec<f64> = (0..=50).map(|i| i as f64 * 0.1 * x21).collect();
    let exact = model.survival_probability(&AtomicState::sector(SymmetrySector::Symmetric), &times)?;
    let (pole, z) = collective_survival(&params, SymmetrySector::Symmetric, &times, &QuadratureSpec::default())?;
    println!("z_s = {:.6}", z.value);
    println!("{:>8} {:>14} {:>14}", "t/x21", "lattice P1", "pole only");
    for ((t, a), b) in times.iter().zip(&exact.values).zip(&pole.values).step_by(5) {
        println!("{:>8.2} {a:>14.6e} {b:>14.6e}", t / x21);
    }
    println!("slope on (0, x):   {:.5}", exact.log_slope(0.0, x21).unwrap_or(f64::NAN));
    println!("slope on (3x, 5x): {:.5}  (−2γ_s = {:.5})", exact.log_slope(3.0 * x21, 5.0 * x21).unwrap_or(f64::NAN), -2.0 * z.gamma);
    Ok(())
}
