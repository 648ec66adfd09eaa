//! The lattice of poles `z_{j,n}` around the principal pole of each sector.

use std::f64::consts::PI;

use collective::greens::pole_scan;
use collective::{ModelParams, QuadratureSpec, SymmetrySector};

fn main() -> collective::Result<()> {
    let x21 = 29.025;
    let params = ModelParams::default().with_separation(x21);
    let quad = QuadratureSpec::default();
    for sector in SymmetrySector::BOTH {
        let scan = pole_scan(sector, x21, -3..=3, &params, &quad)?;
        let z0 = scan.poles.iter().find(|p| p.lattice_index == 0).expect("principal pole").value;
        println!("sector {sector}");
        for p in &scan.poles {
            let spacing = (p.value.re - z0.re) * x21 / (2.0 * PI);
            println!("  n = {:>2}  z = {:.6}  (Re z − Re z₀)·x/2π = {spacing:+.3}", p.lattice_index, p.value);
        }
    }
    Ok(())
}
