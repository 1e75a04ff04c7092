//! Replay recorded call trades: quotes with model prices, one contract per
//! scenario, settled at the expiry close.

use std::collections::BTreeMap;
use std::path::PathBuf;

use chrono::NaiveDate;
use rangevol::cli_io::{parse_replay, write_ledger};
use rangevol::trading::*;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/ibm_call_trades_2010.csv"));
    let rows = parse_replay(&path)?;
    let settlement = BTreeMap::from([(
        NaiveDate::from_ymd_opt(2010, 6, 18).unwrap(),
        "130.14".parse::<Cents>()?,
    )]);
    let cfg = StrategyConfig {
        allow_post_expiry: true,
        ..StrategyConfig::default()
    };

    let mut scenarios: Vec<(String, Vec<PricedQuote>)> = Vec::new();
    for (name, q) in rows {
        match scenarios.last_mut() {
            Some((last, qs)) if *last == name => qs.push(q),
            _ => scenarios.push((name, vec![q])),
        }
    }

    let mut all = TradeLedger::default();
    for (name, quotes) in &scenarios {
        let ledger = run_strategy(quotes, &settlement, &cfg)?;
        for p in &ledger.positions {
            println!(
                "{name:<18} {:<9} model {:.2} -> {:<16} {:>6}",
                p.open.action.to_string(),
                p.model_price,
                p.close.action.to_string(),
                p.profit().to_string()
            );
        }
        all.events.extend(ledger.events);
        all.positions.extend(ledger.positions);
    }
    all.events.sort_by_key(|e| e.timestamp);
    println!("\ntotal {}\n", all.total());
    write_ledger(std::io::stdout().lock(), &all)?;
    Ok(())
}
