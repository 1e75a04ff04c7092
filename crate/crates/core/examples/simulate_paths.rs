//! Monte Carlo extremes against the closed form, with the grid shortfall.

use rangevol::abm_range::{expected_range, AbmParams};
use rangevol::mc_oracle::*;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = AbmParams::new(0.5, 1.0, 1.0)?;
    let er = expected_range(&p)?;
    println!("closed form E[R] = {er:.6}");
    println!(
        "{:>7} {:>10} {:>10} {:>10} {:>10}",
        "steps", "plain", "corrected", "grid E[R]", "SE"
    );
    for steps in [10, 100, 1_000] {
        let mut cfg = SimConfig {
            steps_per_unit: steps,
            n_paths: 100_000,
            seed: 1,
            ..SimConfig::default()
        };
        let plain: Vec<f64> = simulate_extremes(&p, &cfg)?.iter().map(|e| e.range).collect();
        cfg.extreme_correction = true;
        let corrected: Vec<f64> = simulate_extremes(&p, &cfg)?.iter().map(|e| e.range).collect();
        let s = empirical_stats(&plain)?;
        println!(
            "{steps:>7} {:>10.6} {:>10.6} {:>10.6} {:>10.1e}",
            s.mean,
            empirical_stats(&corrected)?.mean,
            grid_expected_range(&p, steps),
            s.std_error
        );
    }

    // daily bars: 25% of each day is an unobserved overnight gap
    let cfg = SimConfig {
        f: 0.25,
        steps_per_unit: 1_000,
        ..SimConfig::default()
    };
    let bars = simulate_ohlc(0.05 / 252.0, 0.2 / 252f64.sqrt(), &cfg, 5)?;
    println!(
        "\n{:>10} {:>9} {:>9} {:>9} {:>9}",
        "date", "open", "high", "low", "close"
    );
    for b in bars {
        println!(
            "{} {:>9.4} {:>9.4} {:>9.4} {:>9.4}",
            b.date, b.open, b.high, b.low, b.close
        );
    }
    Ok(())
}
