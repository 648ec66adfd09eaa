//! Principal poles against the separation, with the force indicator.

use collective::sweep::{force_indicator, stable_points, sweep_poles, uniform_grid};
use collective::{ModelParams, QuadratureSpec, SymmetrySector};

fn main() -> collective::Result<()> {
    let params = ModelParams::default();
    let grid = uniform_grid(5.0, 40.0, 0.1)?;
    let sweep = sweep_poles(&grid, &params, &QuadratureSpec::default())?;
    for r in sweep.records.iter().step_by(25) {
        let g = |s| r.pole(s).map_or(f64::NAN, |z| z.gamma);
        println!("x21 = {:>5.1}  γ_s = {:.5}  γ_a = {:.5}", r.x21, g(SymmetrySector::Symmetric), g(SymmetrySector::Antisymmetric));
    }
    for s in SymmetrySector::BOTH {
        let f = force_indicator(&sweep.records, s)?;
        let stable: Vec<f64> = stable_points(&f).iter().filter(|p| p.stable).map(|p| p.x21).collect();
        println!("{s}: stable separations {stable:.2?}");
    }
    Ok(())
}
