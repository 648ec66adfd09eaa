//! `log(1/|η⁺|)` below the real axis; its peaks are the poles.

use collective::greens::{contour_map, Region};
use collective::{Channel, ModelParams, QuadratureSpec};

fn main() -> collective::Result<()> {
    let x21 = 29.025;
    let params = ModelParams::default().with_separation(x21);
    let region = Region { re_min: 1.7, re_max: 2.3, im_min: -0.15, im_max: 0.0 };
    let map = contour_map(&region, (121, 61), Channel::Symmetric, x21, &params, &QuadratureSpec::default())?;
    for (i, j) in map.local_maxima() {
        println!("peak near z = {:.3}{:+.3}i  value {:.2}", map.re[i], map.im[j], map.at(i, j));
    }
    map.write_csv(std::io::sink())?;
    Ok(())
}
