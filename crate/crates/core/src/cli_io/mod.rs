//! File formats, run configuration and the glue behind the command line.
//!
//! All readers are strict: exact headers, UTF-8, no blank fields, finite
//! numbers, ascending unique keys. Errors carry the 1-based line number.

mod cli;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use chrono::{NaiveDate, NaiveDateTime, NaiveTime};
use serde::{Deserialize, Serialize};

use crate::abm_range::SeriesControl;
use crate::estimators::{rolling_estimate, EstimateError, EstimatorConfig, OhlcBar, VolEstimate, DEFAULT_WINDOW};
use crate::pricing::{bs_call, DayCount, PricingError, PricingInputs, RateConvention};
use crate::trading::{Cents, OptionQuote, PricedQuote, StrategyConfig, TradeLedger};

pub use cli::dispatch;

pub const OHLC_HEADER: [&str; 5] = ["date", "open", "high", "low", "close"];
pub const QUOTES_HEADER: [&str; 5] = ["timestamp", "expiry", "strike", "bid", "ask"];
pub const RATES_HEADER: [&str; 2] = ["date", "rate"];
pub const REPLAY_HEADER: [&str; 7] = ["scenario", "timestamp", "expiry", "strike", "bid", "ask", "model_price"];

/// Prefix of the environment variables read by [`RunConfig::with_env`].
pub const ENV_PREFIX: &str = "RANGEVOL_";

const DATE_FMT: &str = "%Y-%m-%d";

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("bad header: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn row_err(line: u64, message: impl Into<String>) -> IoError {
    IoError::Row {
        line,
        message: message.into(),
    }
}

/// Format with 12 significant digits, trailing zeros dropped.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.11e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let trim = |s: String| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if !(-5..12).contains(&exp) {
        return format!("{sign}{}e{exp}", trim(mantissa.to_string()));
    }
    let body = if exp >= 0 {
        let split = exp as usize + 1;
        format!("{}.{}", &digits[..split], &digits[split..])
    } else {
        format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits)
    };
    format!("{sign}{}", trim(body))
}

fn open(path: &Path) -> Result<File, IoError> {
    File::open(path).map_err(|source| IoError::File {
        path: path.to_path_buf(),
        source,
    })
}

fn create(path: &Path) -> Result<File, IoError> {
    File::create(path).map_err(|source| IoError::File {
        path: path.to_path_buf(),
        source,
    })
}

fn strict_reader<R: Read>(r: R, header: &[&str]) -> Result<csv::Reader<R>, IoError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(r);
    let found = rdr.headers()?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(IoError::Header {
            expected: header.join(","),
            found: found.iter().collect::<Vec<_>>().join(","),
        });
    }
    Ok(rdr)
}

fn records<R: Read>(rdr: &mut csv::Reader<R>) -> impl Iterator<Item = Result<(u64, csv::StringRecord), IoError>> + '_ {
    rdr.records().map(|rec| {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        Ok((line, rec))
    })
}

fn field<'a>(rec: &'a csv::StringRecord, i: usize, name: &str, line: u64) -> Result<&'a str, IoError> {
    match rec.get(i) {
        Some(s) if !s.is_empty() => Ok(s),
        _ => Err(row_err(line, format!("missing {name}"))),
    }
}

fn num(rec: &csv::StringRecord, i: usize, name: &str, line: u64) -> Result<f64, IoError> {
    let s = field(rec, i, name, line)?;
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(row_err(line, format!("{name} is not a finite number: {s:?}"))),
    }
}

fn money(rec: &csv::StringRecord, i: usize, name: &str, line: u64) -> Result<Cents, IoError> {
    let s = field(rec, i, name, line)?;
    s.parse().map_err(|e| row_err(line, format!("{name}: {e}")))
}

fn date(rec: &csv::StringRecord, i: usize, name: &str, line: u64) -> Result<NaiveDate, IoError> {
    let s = field(rec, i, name, line)?;
    NaiveDate::parse_from_str(s, DATE_FMT).map_err(|_| row_err(line, format!("{name} is not YYYY-MM-DD: {s:?}")))
}

/// `YYYY-MM-DD` or `YYYY-MM-DDTHH:MM[:SS]`.
pub fn parse_timestamp(s: &str) -> Option<(NaiveDate, Option<NaiveTime>)> {
    if let Ok(d) = NaiveDate::parse_from_str(s, DATE_FMT) {
        return Some((d, None));
    }
    ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%dT%H:%M"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .map(|t| (t.date(), Some(t.time())))
}

pub fn format_timestamp(date: NaiveDate, time: Option<NaiveTime>) -> String {
    match time {
        Some(t) => date.and_time(t).format("%Y-%m-%dT%H:%M:%S").to_string(),
        None => date.format(DATE_FMT).to_string(),
    }
}

pub fn read_ohlc<R: Read>(r: R) -> Result<Vec<OhlcBar>, IoError> {
    let mut rdr = strict_reader(r, &OHLC_HEADER)?;
    let mut bars: Vec<OhlcBar> = Vec::new();
    for rec in records(&mut rdr) {
        let (line, rec) = rec?;
        let bar = OhlcBar {
            date: date(&rec, 0, "date", line)?,
            open: num(&rec, 1, "open", line)?,
            high: num(&rec, 2, "high", line)?,
            low: num(&rec, 3, "low", line)?,
            close: num(&rec, 4, "close", line)?,
        };
        bar.check().map_err(|m| row_err(line, format!("{}: {m}", bar.date)))?;
        if let Some(prev) = bars.last() {
            if bar.date == prev.date {
                return Err(row_err(line, format!("duplicate date {}", bar.date)));
            }
            if bar.date < prev.date {
                return Err(row_err(line, format!("date {} is before {}", bar.date, prev.date)));
            }
        }
        bars.push(bar);
    }
    Ok(bars)
}

pub fn parse_ohlc(path: &Path) -> Result<Vec<OhlcBar>, IoError> {
    read_ohlc(open(path)?)
}

pub fn write_ohlc<W: Write>(w: W, bars: &[OhlcBar]) -> Result<(), IoError> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(OHLC_HEADER)?;
    for b in bars {
        wtr.write_record([
            b.date.format(DATE_FMT).to_string(),
            fmt_num(b.open),
            fmt_num(b.high),
            fmt_num(b.low),
            fmt_num(b.close),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

fn quote_fields(rec: &csv::StringRecord, offset: usize, line: u64) -> Result<OptionQuote, IoError> {
    let ts = field(rec, offset, "timestamp", line)?;
    let (d, t) = parse_timestamp(ts).ok_or_else(|| row_err(line, format!("timestamp is not ISO-8601: {ts:?}")))?;
    let q = OptionQuote {
        date: d,
        time: t,
        expiry: date(rec, offset + 1, "expiry", line)?,
        strike: money(rec, offset + 2, "strike", line)?,
        bid: money(rec, offset + 3, "bid", line)?,
        ask: money(rec, offset + 4, "ask", line)?,
    };
    q.check().map_err(|m| row_err(line, m))?;
    Ok(q)
}

/// Quotes in file order. Each contract's quotes must be strictly increasing
/// in time.
pub fn read_quotes<R: Read>(r: R) -> Result<Vec<OptionQuote>, IoError> {
    let mut rdr = strict_reader(r, &QUOTES_HEADER)?;
    let mut last: BTreeMap<(Cents, NaiveDate), NaiveDateTime> = BTreeMap::new();
    let mut out = Vec::new();
    for rec in records(&mut rdr) {
        let (line, rec) = rec?;
        let q = quote_fields(&rec, 0, line)?;
        if let Some(prev) = last.insert((q.strike, q.expiry), q.timestamp()) {
            if q.timestamp() <= prev {
                return Err(row_err(
                    line,
                    format!(
                        "quote for strike {} expiring {} is not after {prev}",
                        q.strike, q.expiry
                    ),
                ));
            }
        }
        out.push(q);
    }
    Ok(out)
}

pub fn parse_quotes(path: &Path) -> Result<Vec<OptionQuote>, IoError> {
    read_quotes(open(path)?)
}

pub fn write_quotes<W: Write>(w: W, quotes: &[OptionQuote]) -> Result<(), IoError> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(QUOTES_HEADER)?;
    for q in quotes {
        wtr.write_record([
            format_timestamp(q.date, q.time),
            q.expiry.format(DATE_FMT).to_string(),
            q.strike.to_string(),
            q.bid.to_string(),
            q.ask.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Recorded quotes with the model price that was seen at the time, grouped
/// into named scenarios. A blank `model_price` stands for the quote's mid,
/// which always lies inside the trading band.
pub fn read_replay<R: Read>(r: R) -> Result<Vec<(String, PricedQuote)>, IoError> {
    let mut rdr = strict_reader(r, &REPLAY_HEADER)?;
    let mut out = Vec::new();
    for rec in records(&mut rdr) {
        let (line, rec) = rec?;
        let scenario = field(&rec, 0, "scenario", line)?.to_string();
        let q = quote_fields(&rec, 1, line)?;
        let model = match rec.get(6) {
            Some("") | None => q.mid(),
            Some(_) => num(&rec, 6, "model_price", line)?,
        };
        out.push((scenario, PricedQuote::new(q, model)));
    }
    Ok(out)
}

pub fn parse_replay(path: &Path) -> Result<Vec<(String, PricedQuote)>, IoError> {
    read_replay(open(path)?)
}

/// Annualized yields by date.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RateSeries {
    points: Vec<(NaiveDate, f64)>,
}

impl RateSeries {
    pub fn new(mut points: Vec<(NaiveDate, f64)>) -> Result<Self, String> {
        points.sort_by_key(|p| p.0);
        if let Some(w) = points.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(format!("duplicate rate date {}", w[0].0));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(NaiveDate, f64)] {
        &self.points
    }

    /// The rate on the most recent date strictly before `d`.
    pub fn rate_before(&self, d: NaiveDate) -> Option<f64> {
        let i = self.points.partition_point(|p| p.0 < d);
        i.checked_sub(1).map(|j| self.points[j].1)
    }
}

pub fn read_rates<R: Read>(r: R) -> Result<RateSeries, IoError> {
    let mut rdr = strict_reader(r, &RATES_HEADER)?;
    let mut points: Vec<(NaiveDate, f64)> = Vec::new();
    for rec in records(&mut rdr) {
        let (line, rec) = rec?;
        let d = date(&rec, 0, "date", line)?;
        let v = num(&rec, 1, "rate", line)?;
        if let Some(&(prev, _)) = points.last() {
            if d <= prev {
                return Err(row_err(line, format!("date {d} is not after {prev}")));
            }
        }
        points.push((d, v));
    }
    Ok(RateSeries { points })
}

pub fn parse_rates(path: &Path) -> Result<RateSeries, IoError> {
    read_rates(open(path)?)
}

pub fn write_rates<W: Write>(w: W, rates: &RateSeries) -> Result<(), IoError> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(RATES_HEADER)?;
    for (d, v) in &rates.points {
        wtr.write_record([d.format(DATE_FMT).to_string(), fmt_num(*v)])?;
    }
    wtr.flush()?;
    Ok(())
}

/// One JSON object per line with the fields of a dated estimate.
pub fn write_estimates<W: Write>(mut w: W, rows: &[(NaiveDate, VolEstimate)]) -> Result<(), IoError> {
    for (d, e) in rows {
        let fields = [
            ("v_i", e.v_intraday),
            ("v0", e.v_overnight),
            ("v_z", e.v_z),
            ("sigma_annual", e.sigma_annual),
            ("sigma_annual_intraday", e.sigma_annual_intraday),
            ("v_yz", e.v_yz),
            ("v_rs", e.v_rs),
            ("v_c", e.v_close_open),
        ];
        write!(w, "{{\"date\":\"{}\"", d.format(DATE_FMT))?;
        for (k, v) in fields {
            write!(w, ",\"{k}\":{}", fmt_num(v))?;
        }
        writeln!(w, "}}")?;
    }
    Ok(())
}

/// Events in time order with a running total, then a `total` row.
pub fn write_ledger<W: Write>(w: W, ledger: &TradeLedger) -> Result<(), IoError> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["timestamp", "expiry", "strike", "action", "cash_flow", "cumulative"])?;
    let mut running = Cents::ZERO;
    for e in &ledger.events {
        running += e.cash_flow;
        wtr.write_record([
            e.timestamp.format("%Y-%m-%dT%H:%M:%S").to_string(),
            e.expiry.format(DATE_FMT).to_string(),
            e.strike.to_string(),
            e.action.to_string(),
            e.cash_flow.to_string(),
            running.to_string(),
        ])?;
    }
    let total = ledger.total().to_string();
    wtr.write_record(["", "", "", "total", total.as_str(), total.as_str()])?;
    wtr.flush()?;
    Ok(())
}

/// Where the backtest takes its interest rate from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateSource {
    SeriesFile(PathBuf),
    Constant(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub window: usize,
    pub band: f64,
    pub annualization: f64,
    pub rate: RateSource,
    pub rate_convention: RateConvention,
    pub day_count: DayCount,
    pub seed: u64,
    pub series: SeriesControl,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
            band: 0.10,
            annualization: 252.0,
            rate: RateSource::Constant(0.0),
            rate_convention: RateConvention::Direct,
            day_count: DayCount::default(),
            seed: 0x5eed,
            series: SeriesControl::default(),
        }
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("{key}: cannot parse {value:?}")]
    Parse { key: String, value: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.window < 3 {
            return Err(ConfigError::Invalid(format!(
                "window must be at least 3, got {}",
                self.window
            )));
        }
        if !(0.0..1.0).contains(&self.band) {
            return Err(ConfigError::Invalid(format!(
                "band must lie in [0, 1), got {}",
                self.band
            )));
        }
        if !(self.annualization > 0.0 && self.annualization.is_finite()) {
            return Err(ConfigError::Invalid(format!(
                "annualization must be positive, got {}",
                self.annualization
            )));
        }
        self.series.validate().map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// Apply `RANGEVOL_*` overrides looked up through `var`: `WINDOW`, `BAND`,
    /// `ANNUALIZATION`, `SEED`, `RATE` (constant), `RATES` (series file),
    /// `RATE_CONVENTION` (`direct`/`log1p`), `DAY_COUNT` (`trading`/`calendar`),
    /// `MAX_TERMS`, `TERM_TOLERANCE`, `CONSECUTIVE_SMALL`.
    pub fn with_env(mut self, var: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        fn get<T: std::str::FromStr>(
            var: &impl Fn(&str) -> Option<String>,
            key: &str,
        ) -> Result<Option<T>, ConfigError> {
            let full = format!("{ENV_PREFIX}{key}");
            match var(&full) {
                None => Ok(None),
                Some(v) => v
                    .trim()
                    .parse()
                    .map(Some)
                    .map_err(|_| ConfigError::Parse { key: full, value: v }),
            }
        }
        if let Some(v) = get(&var, "WINDOW")? {
            self.window = v;
        }
        if let Some(v) = get(&var, "BAND")? {
            self.band = v;
        }
        if let Some(v) = get(&var, "ANNUALIZATION")? {
            self.annualization = v;
        }
        if let Some(v) = get(&var, "SEED")? {
            self.seed = v;
        }
        if let Some(v) = get::<f64>(&var, "RATE")? {
            self.rate = RateSource::Constant(v);
        }
        if let Some(v) = get::<PathBuf>(&var, "RATES")? {
            self.rate = RateSource::SeriesFile(v);
        }
        if let Some(v) = get::<String>(&var, "RATE_CONVENTION")? {
            self.rate_convention = parse_rate_convention(&v).ok_or(ConfigError::Parse {
                key: format!("{ENV_PREFIX}RATE_CONVENTION"),
                value: v,
            })?;
        }
        if let Some(v) = get::<String>(&var, "DAY_COUNT")? {
            self.day_count = parse_day_count(&v, self.annualization).ok_or(ConfigError::Parse {
                key: format!("{ENV_PREFIX}DAY_COUNT"),
                value: v,
            })?;
        }
        if let Some(v) = get(&var, "MAX_TERMS")? {
            self.series.max_terms = v;
        }
        if let Some(v) = get(&var, "TERM_TOLERANCE")? {
            self.series.term_tolerance = v;
        }
        if let Some(v) = get(&var, "CONSECUTIVE_SMALL")? {
            self.series.consecutive_small = v;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn from_process_env() -> Result<Self, ConfigError> {
        Self::default().with_env(|k| std::env::var(k).ok())
    }

    pub fn estimator(&self) -> EstimatorConfig {
        EstimatorConfig {
            annualization: self.annualization,
            ..EstimatorConfig::default()
        }
    }
}

pub fn parse_rate_convention(s: &str) -> Option<RateConvention> {
    match s {
        "direct" => Some(RateConvention::Direct),
        "log1p" => Some(RateConvention::LogOnePlus),
        _ => None,
    }
}

/// `trading` counts weekdays over the annualization factor, `calendar` days
/// over 365.
pub fn parse_day_count(s: &str, annualization: f64) -> Option<DayCount> {
    match s {
        "trading" => Some(DayCount::Trading {
            days_per_year: annualization,
        }),
        "calendar" => Some(DayCount::Calendar { days_per_year: 365.0 }),
        _ => None,
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BacktestError {
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Pricing(#[from] PricingError),
    #[error("no volatility estimate from bars before {0}")]
    NoEstimate(NaiveDate),
    #[error("no bar dated {0} to take the spot from")]
    NoSpot(NaiveDate),
    #[error("no rate dated before {0}")]
    NoRate(NaiveDate),
}

/// Model prices for each quote, plus the closing spot of every expiry that
/// has a bar.
///
/// The volatility is the annualized trading-day estimate from the window
/// ending on the last bar before the quote's date. The spot is that date's
/// close, the rate the latest one strictly before it.
pub fn price_quotes(
    bars: &[OhlcBar],
    quotes: &[OptionQuote],
    rate: impl Fn(NaiveDate) -> Option<f64>,
    cfg: &RunConfig,
) -> Result<(Vec<PricedQuote>, BTreeMap<NaiveDate, Cents>), BacktestError> {
    let estimates = rolling_estimate(bars, cfg.window, &cfg.estimator())?;
    let closes: BTreeMap<NaiveDate, f64> = bars.iter().map(|b| (b.date, b.close)).collect();
    let mut priced = Vec::with_capacity(quotes.len());
    for q in quotes {
        let i = estimates.partition_point(|(d, _)| *d < q.date);
        let (_, est) = i
            .checked_sub(1)
            .map(|j| &estimates[j])
            .ok_or(BacktestError::NoEstimate(q.date))?;
        let spot = *closes.get(&q.date).ok_or(BacktestError::NoSpot(q.date))?;
        let prev_spot = closes.range(..q.date).next_back().map(|(_, c)| *c);
        let r = cfg
            .rate_convention
            .continuous(rate(q.date).ok_or(BacktestError::NoRate(q.date))?);
        let tau = cfg.day_count.year_fraction(q.date, q.time, q.expiry);
        let model = bs_call(&PricingInputs::new(
            spot,
            q.strike.as_f64(),
            r,
            est.sigma_annual_intraday,
            tau,
        )?)?;
        priced.push(PricedQuote {
            quote: *q,
            model_price: model,
            spot: Some(spot),
            prev_spot,
        });
    }
    let settlement = quotes
        .iter()
        .filter_map(|q| closes.get(&q.expiry).map(|c| (q.expiry, Cents::from_f64(*c))))
        .collect();
    Ok((priced, settlement))
}

pub fn strategy_config(cfg: &RunConfig, stop_margin: Option<f64>, allow_post_expiry: bool) -> StrategyConfig {
    StrategyConfig {
        band: cfg.band,
        stop_margin,
        allow_post_expiry,
    }
}

/// Write to `path`, or to `fallback` when no path is given.
pub fn with_output<F>(path: Option<&Path>, fallback: &mut dyn Write, f: F) -> Result<(), IoError>
where
    F: FnOnce(&mut dyn Write) -> Result<(), IoError>,
{
    match path {
        Some(p) => {
            let mut file = io::BufWriter::new(create(p)?);
            f(&mut file)?;
            file.flush()?;
            Ok(())
        }
        None => f(fallback),
    }
}
