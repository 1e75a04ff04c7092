//! Range, half-range and joint (min, max) densities, with the series and
//! quadrature routes side by side.

use rangevol::abm_range::*;
use rangevol::quadrature::{integrate, QuadConfig};

fn main() -> Result<(), RangeError> {
    let ctl = SeriesControl::default();
    let still = AbmParams::new(0.0, 1.0, 1.0)?;
    let drifting = AbmParams::new(0.8, 1.0, 1.0)?;

    println!(
        "{:>5} {:>14} {:>14} {:>14}",
        "r", "series", "quadrature", "trusted(mu=.8)"
    );
    for r in [0.5, 0.75, 1.0, 1.5, 2.0, 3.0] {
        println!(
            "{r:>5} {:>14.10} {:>14.10} {:>14.10}",
            range_density(&still, r, &ctl)?,
            range_density_quadrature(&still, r, &ctl)?,
            range_density_trusted(&drifting, r, &ctl)?,
        );
    }

    let cfg = QuadConfig::with_abs_tol(1e-10);
    let w = support_window(&drifting).1;
    let mass = integrate(|r| range_density_trusted(&drifting, r, &ctl).unwrap(), 0.0, w, &cfg).value;
    let mean = integrate(|r| r * range_density_trusted(&drifting, r, &ctl).unwrap(), 0.0, w, &cfg).value;
    println!(
        "\nmu=0.8: mass {mass:.10}, mean {mean:.10}, closed-form E[R] {:.10}",
        expected_range(&drifting)?
    );

    println!("\nhalf-range M - X at mu=0.8: mean {:.8}", half_range_mean(&drifting)?);
    for c in [0.0, 0.5, 1.0, 2.0] {
        println!("  f({c}) = {:.8}", half_range_density(&drifting, c)?);
    }

    println!("\njoint density of (min, max) at mu=0.8");
    for (a, b) in [(-0.2, 0.5), (-0.5, 1.0), (-1.0, 2.0)] {
        println!("  f({a}, {b}) = {:.8}", joint_density_max_min(&drifting, a, b, &ctl)?);
    }
    println!(
        "\nP(path stays in (-1, 1)) = {:.8}",
        survival_probability(&still, -1.0, 1.0, &ctl)?
    );
    Ok(())
}
