//! End-to-end backtest: bars, quotes and rates built in memory, model prices
//! from trailing volatility estimates, then the band strategy.

use chrono::Days;
use rangevol::cli_io::{price_quotes, strategy_config, write_ledger, RateSeries, RunConfig};
use rangevol::mc_oracle::{simulate_ohlc, SimConfig};
use rangevol::pricing::{bs_call, PricingInputs};
use rangevol::trading::*;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sim = SimConfig {
        f: 0.2,
        steps_per_unit: 1_000,
        seed: 11,
        ..SimConfig::default()
    };
    let bars = simulate_ohlc(0.0, 0.3 / 252f64.sqrt(), &sim, 120)?;
    let expiry = bars.last().unwrap().date;
    // strikes around the spot when quoting starts
    let atm = (bars[80].close / 5.0).round() * 5.0;
    let strikes = [atm - 5.0, atm, atm + 5.0];

    // a market that prices calls at a volatility swinging between 22% and 38%
    let mut quotes = Vec::new();
    for (i, b) in bars.iter().enumerate().skip(80) {
        let market_vol = 0.3 + 0.08 * (i as f64 / 3.0).sin();
        let tau = (bars.len() - 1 - i) as f64 / 252.0;
        for strike in strikes {
            let fair = bs_call(&PricingInputs::new(b.close, strike, 0.01, market_vol, tau)?)?;
            let bid = Cents::from_f64((fair - 0.02).max(0.0));
            let ask = Cents::from_f64(fair + 0.03);
            quotes.push(OptionQuote::new(
                b.date,
                None,
                expiry,
                Cents::from_f64(strike),
                bid,
                ask,
            )?);
        }
    }
    quotes.sort_by_key(|q| (q.strike, q.date));

    let start = bars[0].date - Days::new(1);
    let rates = RateSeries::new(vec![(start, 0.01)])?;
    let cfg = RunConfig {
        window: 40,
        ..RunConfig::default()
    };
    let (priced, settlement) = price_quotes(&bars, &quotes, |d| rates.rate_before(d), &cfg)?;

    for band in [0.05, 0.10, 0.20] {
        let strategy = StrategyConfig {
            band,
            ..strategy_config(&cfg, None, false)
        };
        let mut total = Cents::ZERO;
        let mut trades = 0;
        for strike in strikes {
            let k = Cents::from_f64(strike);
            let contract: Vec<PricedQuote> = priced.iter().copied().filter(|p| p.quote.strike == k).collect();
            let ledger = run_strategy(&contract, &settlement, &strategy)?;
            total += ledger.total();
            trades += ledger.positions.len();
        }
        let signals = priced
            .iter()
            .filter(|p| detect_signal(p.model_price, &p.quote, band) != Signal::None)
            .count();
        println!("band {band:.2}: {signals:>3} signals, {trades} round trips, total {total}");
    }

    let contract: Vec<PricedQuote> = priced
        .iter()
        .copied()
        .filter(|p| p.quote.strike == Cents::from_f64(atm))
        .collect();
    println!("\nK={atm} ledger at the default band:");
    write_ledger(
        std::io::stdout().lock(),
        &run_strategy(&contract, &settlement, &strategy_config(&cfg, None, false))?,
    )?;
    Ok(())
}
