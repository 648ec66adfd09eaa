//! Where the collective decay can vanish in one, two and three dimensions.

use collective::sweep::{angular_factor, subradiance_roots, Dimension};
use collective::SymmetrySector;

fn main() -> collective::Result<()> {
    for d in [Dimension::One, Dimension::Two, Dimension::Three] {
        for s in SymmetrySector::BOTH {
            let roots = subradiance_roots(d, s, 0.0, 20.0)?;
            let min = (1..=2000).map(|i| angular_factor(d, s, i as f64 * 0.01)).fold(f64::INFINITY, f64::min);
            println!("{d:?} {s}: zeros {roots:.4?}  min on (0, 20] = {min:.4}");
        }
    }
    Ok(())
}
