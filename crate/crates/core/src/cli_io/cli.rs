use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use chrono::{NaiveDate, NaiveTime};
use clap::{Args, Parser, Subcommand, ValueEnum};

use super::*;
use crate::abm_range::{
    expected_range, half_range_density, joint_density_max_min, range_density, range_density_quadrature, support_window,
    AbmParams,
};
use crate::estimators::EstimatorConfig;
use crate::mc_oracle::{default_start_date, simulate_ohlc_from, SimConfig};
use crate::trading::run_strategy;

#[derive(Parser, Debug)]
#[command(
    name = "rangevol",
    version,
    about = "Range-based volatility estimates, Brownian range densities, call pricing and a mispricing backtest",
    after_help = "Defaults can be overridden with RANGEVOL_* environment variables (WINDOW, BAND, ANNUALIZATION, SEED, RATE, RATES, RATE_CONVENTION, DAY_COUNT, MAX_TERMS, TERM_TOLERANCE, CONSECUTIVE_SMALL); flags take precedence."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rolling volatility estimates from daily bars, as JSON lines
    Estimate(EstimateArgs),
    /// Expected range of an arithmetic Brownian motion
    ExpectedRange(ExpectedRangeArgs),
    /// Density of the range, half-range or (min, max) on a grid, as CSV
    Density(DensityArgs),
    /// Synthetic daily bars from a geometric Brownian motion, as CSV
    Simulate(SimulateArgs),
    /// Black-Scholes price of a European call
    Price(PriceArgs),
    /// Replay the mispricing strategy over recorded quotes
    Backtest(BacktestArgs),
}

#[derive(Args, Debug)]
struct EstimateArgs {
    /// OHLC CSV with header date,open,high,low,close
    #[arg(long)]
    bars: PathBuf,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    annualization: Option<f64>,
    /// Fixed Yang-Zhang weight instead of the sample-size rule
    #[arg(long)]
    yz_k: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExpectedRangeArgs {
    #[arg(long, allow_negative_numbers = true)]
    mu: f64,
    #[arg(long)]
    sigma: f64,
    #[arg(long)]
    t: f64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum DensityKind {
    Range,
    HalfRange,
    Joint,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum Method {
    Series,
    Quadrature,
}

#[derive(Args, Debug)]
struct DensityArgs {
    #[arg(long, value_enum)]
    kind: DensityKind,
    #[arg(long, allow_negative_numbers = true)]
    mu: f64,
    #[arg(long)]
    sigma: f64,
    #[arg(long)]
    t: f64,
    /// Grid start; for `joint` the grid is min ∈ [-hi, -lo], max ∈ [lo, hi]
    #[arg(long, default_value_t = 0.0)]
    lo: f64,
    /// Grid end, by default where the density has become negligible
    #[arg(long)]
    hi: Option<f64>,
    /// Grid points (per axis for `joint`)
    #[arg(long, default_value_t = 101)]
    points: usize,
    /// Only the range density has a quadrature route
    #[arg(long, value_enum, default_value_t = Method::Series)]
    method: Method,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Annual drift of dS/S
    #[arg(long, allow_negative_numbers = true)]
    mu_s: f64,
    /// Annual volatility
    #[arg(long)]
    sigma: f64,
    /// After-hours fraction of each day
    #[arg(long, default_value_t = 0.0)]
    f: f64,
    #[arg(long)]
    days: usize,
    #[arg(long, default_value_t = 10_000)]
    steps_per_day: u64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    annualization: Option<f64>,
    #[arg(long)]
    start_date: Option<NaiveDate>,
    #[arg(long, default_value_t = 100.0)]
    start_price: f64,
    /// Shift each grid extreme outward by the discretization-bias constant
    #[arg(long)]
    extreme_correction: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PriceArgs {
    #[arg(long)]
    spot: f64,
    #[arg(long)]
    strike: f64,
    /// Annualized volatility
    #[arg(long)]
    vol: f64,
    /// Quoted annual rate
    #[arg(long, allow_negative_numbers = true)]
    rate: Option<f64>,
    /// Years to expiry; otherwise counted from --date to --expiry
    #[arg(long, conflicts_with_all = ["date", "expiry"])]
    tau: Option<f64>,
    #[arg(long, requires = "expiry")]
    date: Option<NaiveDate>,
    /// Intraday time of the quote, HH:MM[:SS]
    #[arg(long, requires = "date")]
    time: Option<NaiveTime>,
    #[arg(long, requires = "date")]
    expiry: Option<NaiveDate>,
    /// direct or log1p
    #[arg(long)]
    rate_convention: Option<String>,
    /// trading or calendar
    #[arg(long)]
    day_count: Option<String>,
}

#[derive(Args, Debug)]
struct BacktestArgs {
    #[arg(long)]
    bars: PathBuf,
    /// Quotes CSV with header timestamp,expiry,strike,bid,ask
    #[arg(long)]
    quotes: PathBuf,
    /// Rates CSV with header date,rate
    #[arg(long, conflicts_with = "rate")]
    rates: Option<PathBuf>,
    /// Constant annual rate instead of a series
    #[arg(long, allow_negative_numbers = true)]
    rate: Option<f64>,
    #[arg(long)]
    band: Option<f64>,
    /// Skip new entries on days the spot moved by more than this fraction
    #[arg(long)]
    stop_margin: Option<f64>,
    #[arg(long)]
    window: Option<usize>,
    /// Act on quotes dated after their expiry instead of failing
    #[arg(long)]
    allow_post_expiry: bool,
    #[arg(long)]
    rate_convention: Option<String>,
    #[arg(long)]
    day_count: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parse `args` (program name first) and run the subcommand, writing results
/// to `out` and diagnostics to `err`. Returns the process exit status.
pub fn dispatch<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            let sink: &mut dyn Write = if code == 0 { out } else { err };
            let _ = sink.write_all(rendered.as_bytes());
            return code;
        }
    };
    match run(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            1
        }
    }
}

fn config() -> Result<RunConfig> {
    RunConfig::from_process_env().context("reading RANGEVOL_* environment")
}

fn conventions(cfg: &mut RunConfig, rate_convention: Option<&str>, day_count: Option<&str>) -> Result<()> {
    if let Some(s) = rate_convention {
        cfg.rate_convention = parse_rate_convention(s).with_context(|| format!("unknown rate convention {s:?}"))?;
    }
    if let Some(s) = day_count {
        cfg.day_count = parse_day_count(s, cfg.annualization).with_context(|| format!("unknown day count {s:?}"))?;
    }
    Ok(())
}

fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Estimate(a) => {
            let mut cfg = config()?;
            cfg.window = a.window.unwrap_or(cfg.window);
            cfg.annualization = a.annualization.unwrap_or(cfg.annualization);
            cfg.validate()?;
            let bars = parse_ohlc(&a.bars)?;
            let est = EstimatorConfig {
                yz_k: a.yz_k,
                ..cfg.estimator()
            };
            let rows = rolling_estimate(&bars, cfg.window, &est)?;
            with_output(a.out.as_deref(), out, |w| write_estimates(w, &rows))?;
        }
        Command::ExpectedRange(a) => {
            let p = AbmParams::new(a.mu, a.sigma, a.t)?;
            writeln!(out, "{}", fmt_num(expected_range(&p)?))?;
        }
        Command::Density(a) => density(a, out)?,
        Command::Simulate(a) => {
            let mut cfg = config()?;
            cfg.annualization = a.annualization.unwrap_or(cfg.annualization);
            cfg.validate()?;
            let sim = SimConfig {
                steps_per_unit: a.steps_per_day,
                seed: a.seed.unwrap_or(cfg.seed),
                f: a.f,
                extreme_correction: a.extreme_correction,
                ..SimConfig::default()
            };
            let ann = cfg.annualization;
            let bars = simulate_ohlc_from(
                a.mu_s / ann,
                a.sigma / ann.sqrt(),
                &sim,
                a.days,
                a.start_price,
                a.start_date.unwrap_or_else(default_start_date),
            )?;
            with_output(a.out.as_deref(), out, |w| write_ohlc(w, &bars))?;
        }
        Command::Price(a) => {
            let mut cfg = config()?;
            conventions(&mut cfg, a.rate_convention.as_deref(), a.day_count.as_deref())?;
            let tau = match (a.tau, a.date, a.expiry) {
                (Some(t), _, _) => t,
                (None, Some(d), Some(e)) => cfg.day_count.year_fraction(d, a.time, e),
                _ => bail!("give either --tau or --date with --expiry"),
            };
            let quoted = match (a.rate, &cfg.rate) {
                (Some(r), _) => r,
                (None, RateSource::Constant(r)) => *r,
                (None, RateSource::SeriesFile(_)) => bail!("price needs --rate when RANGEVOL_RATES names a series"),
            };
            let inputs = PricingInputs::new(a.spot, a.strike, cfg.rate_convention.continuous(quoted), a.vol, tau)?;
            writeln!(out, "{}", fmt_num(bs_call(&inputs)?))?;
        }
        Command::Backtest(a) => backtest(a, out)?,
    }
    Ok(())
}

fn grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 || !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        bail!("grid needs lo < hi and at least 2 points, got [{lo}, {hi}] with {points}");
    }
    let step = (hi - lo) / (points - 1) as f64;
    Ok((0..points)
        .map(|i| if i + 1 == points { hi } else { lo + step * i as f64 })
        .collect())
}

fn density(a: DensityArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = config()?;
    let p = AbmParams::new(a.mu, a.sigma, a.t)?;
    let hi = a.hi.unwrap_or_else(|| support_window(&p).1);
    if a.lo < 0.0 {
        bail!("--lo must be nonnegative");
    }
    if a.method == Method::Quadrature && a.kind != DensityKind::Range {
        bail!("only the range density has a quadrature route");
    }
    let xs = grid(a.lo, hi, a.points)?;
    let ctl = cfg.series;
    with_output(a.out.as_deref(), out, |w| {
        let mut wtr = csv::Writer::from_writer(w);
        let fail = |e: crate::abm_range::RangeError| io::Error::other(e.to_string());
        match a.kind {
            DensityKind::Range | DensityKind::HalfRange => {
                wtr.write_record(["x", "density"])?;
                for &x in &xs {
                    let d = match (a.kind, a.method) {
                        (DensityKind::HalfRange, _) => half_range_density(&p, x),
                        (_, Method::Series) => range_density(&p, x, &ctl),
                        (_, Method::Quadrature) => range_density_quadrature(&p, x, &ctl),
                    }
                    .map_err(fail)?;
                    wtr.write_record([fmt_num(x), fmt_num(d)])?;
                }
            }
            DensityKind::Joint => {
                wtr.write_record(["min", "max", "density"])?;
                for &m in &xs {
                    let a = 0.0 - m;
                    for &b in &xs {
                        // the path leaves 0 at once, so the density vanishes on both axes
                        let d = if a < 0.0 && b > 0.0 {
                            joint_density_max_min(&p, a, b, &ctl).map_err(fail)?
                        } else {
                            0.0
                        };
                        wtr.write_record([fmt_num(a), fmt_num(b), fmt_num(d)])?;
                    }
                }
            }
        }
        wtr.flush()?;
        Ok(())
    })?;
    Ok(())
}

fn backtest(a: BacktestArgs, out: &mut dyn Write) -> Result<()> {
    let mut cfg = config()?;
    cfg.window = a.window.unwrap_or(cfg.window);
    cfg.band = a.band.unwrap_or(cfg.band);
    if let Some(p) = a.rates {
        cfg.rate = RateSource::SeriesFile(p);
    } else if let Some(r) = a.rate {
        cfg.rate = RateSource::Constant(r);
    }
    conventions(&mut cfg, a.rate_convention.as_deref(), a.day_count.as_deref())?;
    cfg.validate()?;

    let bars = parse_ohlc(&a.bars)?;
    let quotes = parse_quotes(&a.quotes)?;
    let series = match &cfg.rate {
        RateSource::SeriesFile(p) => Some(parse_rates(p)?),
        RateSource::Constant(_) => None,
    };
    let rate = |d: NaiveDate| match (&series, &cfg.rate) {
        (Some(s), _) => s.rate_before(d),
        (None, RateSource::Constant(r)) => Some(*r),
        (None, RateSource::SeriesFile(_)) => None,
    };
    let (priced, settlement) = price_quotes(&bars, &quotes, rate, &cfg)?;
    let ledger = run_strategy(
        &priced,
        &settlement,
        &strategy_config(&cfg, a.stop_margin, a.allow_post_expiry),
    )?;
    with_output(a.out.as_deref(), out, |w| write_ledger(w, &ledger))?;
    Ok(())
}
