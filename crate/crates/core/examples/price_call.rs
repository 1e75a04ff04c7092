//! European call prices, with time to expiry counted in trading days.

use chrono::{NaiveDate, NaiveTime};
use rangevol::pricing::*;

fn main() -> Result<(), PricingError> {
    let c = bs_call(&PricingInputs::new(100.0, 100.0, 0.05, 0.2, 1.0)?)?;
    println!("S=K=100, r=5%, vol=20%, 1y: {c:.6}");

    // a quote at 12:27 on the Friday of expiry week, expiring at the close
    let date = NaiveDate::from_ymd_opt(2010, 6, 18).unwrap();
    let time = NaiveTime::from_hms_opt(12, 27, 0);
    for (name, dc) in [
        ("trading", DayCount::default()),
        ("calendar", DayCount::Calendar { days_per_year: 365.0 }),
    ] {
        let tau = dc.year_fraction(date, time, date);
        let r = RateConvention::LogOnePlus.continuous(0.0012);
        let price = bs_call(&PricingInputs::new(130.14, 130.0, r, 0.22, tau)?)?;
        println!("{name:>9}: tau = {tau:.6} y, call = {price:.4}");
    }

    println!("\nstrike ladder, 20 trading days, vol 25%:");
    let tau = 20.0 / 252.0;
    for k in (110..=150).step_by(5) {
        let c = bs_call(&PricingInputs::new(130.0, k as f64, 0.002, 0.25, tau)?)?;
        println!("  K={k:<4} {c:>8.4}");
    }
    Ok(())
}
