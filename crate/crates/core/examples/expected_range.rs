//! Expected range of an arithmetic Brownian motion, and how it grows with drift.

use rangevol::abm_range::{expected_range, h_moment, AbmParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sigma = 0.3;
    println!("{:>8} {:>12} {:>12}", "mu", "E[R]", "E[R]/sigma");
    for mu in [-1.0, -0.2, 0.0, 1e-10, 0.2, 1.0, 3.0] {
        let p = AbmParams::new(mu, sigma, 1.0)?;
        let er = expected_range(&p)?;
        println!("{mu:>8} {er:>12.8} {:>12.8}", er / sigma);
    }

    // the same value through the dimensionless moment function
    let p = AbmParams::new(0.045, 0.09, 1.0)?;
    let (x, y) = (p.mu * p.t.sqrt() / p.sigma, p.sigma * p.sigma / p.mu);
    println!("\nh({x}, {y}) = {:.12}", h_moment(x, y));
    println!("E[R]       = {:.12}", expected_range(&p)?);

    // range over a trading day: sqrt(8/pi) * sigma_day for a driftless path
    let day = AbmParams::new(0.0, 0.25 / 252f64.sqrt(), 1.0)?;
    println!(
        "\ndaily expected log-range at 25% annual vol: {:.6}",
        expected_range(&day)?
    );
    Ok(())
}
