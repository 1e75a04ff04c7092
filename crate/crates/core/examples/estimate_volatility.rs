//! Rolling volatility from daily bars with overnight gaps.
//!
//! Reads an OHLC CSV if given one (`date,open,high,low,close`), otherwise
//! simulates a year of bars at 30% annual volatility.

use rangevol::cli_io::parse_ohlc;
use rangevol::estimators::*;
use rangevol::mc_oracle::{simulate_ohlc, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let bars = match std::env::args().nth(1) {
        Some(path) => parse_ohlc(path.as_ref())?,
        None => {
            let cfg = SimConfig {
                f: 0.25,
                steps_per_unit: 2_000,
                seed: 7,
                ..SimConfig::default()
            };
            simulate_ohlc(0.08 / 252.0, 0.3 / 252f64.sqrt(), &cfg, 252)?
        }
    };

    let all = estimate(&bars)?;
    println!(
        "{} bars, k1 = {:.6}, k2 = {:.6}",
        bars.len(),
        all.moments.k1,
        all.moments.k2
    );
    println!("  range-based sigma        {:.4}", all.sigma_annual);
    println!("  trading-hours only       {:.4}", all.sigma_annual_intraday);
    println!("  Yang-Zhang               {:.4}", all.sigma_annual_yz);
    println!("  Rogers-Satchell (daily)  {:.3e}", all.v_rs);
    println!("  overnight share of V_Z   {:.3}", all.v_overnight / all.v_z);

    let window = 63.min(bars.len());
    let rows = rolling_estimate(&bars, window, &EstimatorConfig::default())?;
    println!("\n{window}-bar window, every 21st row:");
    for (date, e) in rows.iter().step_by(21) {
        println!("  {date}  {:.4}  (YZ {:.4})", e.sigma_annual, e.sigma_annual_yz);
    }
    Ok(())
}
