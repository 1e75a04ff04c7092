//! Mispricing-band trading on European calls.
//!
//! A call whose model price falls below `(1 − band)·bid` is sold at the bid and
//! bought back at the ask on the first later quote where that no longer holds;
//! one priced above `(1 + band)·ask` is bought and later sold at the bid.
//! Positions still open after the last quote settle at expiry against the
//! closing spot. Each contract (strike, expiry) holds at most one position and
//! every quote row triggers at most one action.

use std::collections::BTreeMap;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Neg, Sub};
use std::str::FromStr;

use chrono::{NaiveDate, NaiveDateTime, NaiveTime};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::pricing::session_close;

/// Money in whole cents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Cents(pub i64);

impl Cents {
    pub const ZERO: Cents = Cents(0);

    /// Nearest cent, halves away from zero.
    pub fn from_f64(x: f64) -> Cents {
        Cents((x * 100.0).round() as i64)
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / 100.0
    }

    pub fn is_negative(self) -> bool {
        self.0 < 0
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
#[error("invalid money amount {0:?}: expected digits with at most two decimals")]
pub struct ParseCentsError(pub String);

impl FromStr for Cents {
    type Err = ParseCentsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseCentsError(s.to_string());
        let (negative, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
        let digits = |t: &str| t.bytes().all(|b| b.is_ascii_digit());
        if whole.is_empty() && frac.is_empty() || !digits(whole) || !digits(frac) {
            return Err(err());
        }
        // extra decimals are accepted only as trailing zeros
        let (kept, rest) = frac.split_at(frac.len().min(2));
        if rest.bytes().any(|b| b != b'0') {
            return Err(err());
        }
        let whole: i64 = if whole.is_empty() {
            0
        } else {
            whole.parse().map_err(|_| err())?
        };
        let mut cents: i64 = kept.parse().unwrap_or(0);
        if kept.len() == 1 {
            cents *= 10;
        }
        let v = whole
            .checked_mul(100)
            .and_then(|w| w.checked_add(cents))
            .ok_or_else(err)?;
        Ok(Cents(if negative { -v } else { v }))
    }
}

impl fmt::Display for Cents {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let a = self.0.unsigned_abs();
        write!(f, "{sign}{}.{:02}", a / 100, a % 100)
    }
}

impl Serialize for Cents {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Cents {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl Add for Cents {
    type Output = Cents;
    fn add(self, o: Cents) -> Cents {
        Cents(self.0 + o.0)
    }
}

impl AddAssign for Cents {
    fn add_assign(&mut self, o: Cents) {
        self.0 += o.0;
    }
}

impl Sub for Cents {
    type Output = Cents;
    fn sub(self, o: Cents) -> Cents {
        Cents(self.0 - o.0)
    }
}

impl Neg for Cents {
    type Output = Cents;
    fn neg(self) -> Cents {
        Cents(-self.0)
    }
}

impl Sum for Cents {
    fn sum<I: Iterator<Item = Cents>>(iter: I) -> Cents {
        iter.fold(Cents::ZERO, Add::add)
    }
}

impl<'a> Sum<&'a Cents> for Cents {
    fn sum<I: Iterator<Item = &'a Cents>>(iter: I) -> Cents {
        iter.copied().sum()
    }
}

/// One call quote. `time` is absent for once-a-day quotes, which are taken
/// as of the close.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptionQuote {
    pub date: NaiveDate,
    pub time: Option<NaiveTime>,
    pub expiry: NaiveDate,
    pub strike: Cents,
    pub bid: Cents,
    pub ask: Cents,
}

impl OptionQuote {
    pub fn new(
        date: NaiveDate,
        time: Option<NaiveTime>,
        expiry: NaiveDate,
        strike: Cents,
        bid: Cents,
        ask: Cents,
    ) -> Result<Self, String> {
        let q = Self {
            date,
            time,
            expiry,
            strike,
            bid,
            ask,
        };
        q.check()?;
        Ok(q)
    }

    pub fn check(&self) -> Result<(), String> {
        if self.strike.0 <= 0 {
            return Err(format!("strike must be positive, got {}", self.strike));
        }
        if self.bid.is_negative() || self.ask.is_negative() {
            return Err(format!("negative quote ({}, {})", self.bid, self.ask));
        }
        if self.bid > self.ask {
            return Err(format!("bid {} exceeds ask {}", self.bid, self.ask));
        }
        Ok(())
    }

    pub fn timestamp(&self) -> NaiveDateTime {
        self.date.and_time(self.time.unwrap_or_else(session_close))
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.bid.as_f64() + self.ask.as_f64())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Signal {
    Sell,
    Buy,
    None,
}

/// Sell below `(1 − band)·bid`, buy above `(1 + band)·ask`.
pub fn detect_signal(model_price: f64, q: &OptionQuote, band: f64) -> Signal {
    if model_price < (1.0 - band) * q.bid.as_f64() {
        Signal::Sell
    } else if model_price > (1.0 + band) * q.ask.as_f64() {
        Signal::Buy
    } else {
        Signal::None
    }
}

/// True when the spot moved by more than `margin` since the previous day.
pub fn stop_rule(prev_spot: f64, spot: f64, margin: f64) -> bool {
    (spot / prev_spot - 1.0).abs() > margin
}

/// A quote together with the model's price for it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricedQuote {
    pub quote: OptionQuote,
    pub model_price: f64,
    /// Spot on the quote's day and the day before, for the stop rule.
    pub spot: Option<f64>,
    pub prev_spot: Option<f64>,
}

impl PricedQuote {
    pub fn new(quote: OptionQuote, model_price: f64) -> Self {
        Self {
            quote,
            model_price,
            spot: None,
            prev_spot: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub band: f64,
    /// Suppress new entries on days the spot moved by more than this.
    pub stop_margin: Option<f64>,
    /// Act on quotes dated after their contract's expiry instead of failing.
    pub allow_post_expiry: bool,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        Self {
            band: 0.10,
            stop_margin: None,
            allow_post_expiry: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    SellOpen,
    BuyOpen,
    BuyClose,
    SellClose,
    Exercise,
    Deliver,
    ExpireWorthless,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Action::SellOpen => "sell_open",
            Action::BuyOpen => "buy_open",
            Action::BuyClose => "buy_close",
            Action::SellClose => "sell_close",
            Action::Exercise => "exercise",
            Action::Deliver => "deliver",
            Action::ExpireWorthless => "expire_worthless",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeEvent {
    pub timestamp: NaiveDateTime,
    pub strike: Cents,
    pub expiry: NaiveDate,
    pub action: Action,
    /// Positive when received.
    pub cash_flow: Cents,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Short,
    Long,
}

/// A round trip: the opening event and whatever ended it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub side: Side,
    pub open: TradeEvent,
    pub close: TradeEvent,
    pub model_price: f64,
}

impl Position {
    pub fn profit(&self) -> Cents {
        self.open.cash_flow + self.close.cash_flow
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TradeLedger {
    /// Every event in time order.
    pub events: Vec<TradeEvent>,
    /// Round trips ordered by opening time.
    pub positions: Vec<Position>,
}

impl TradeLedger {
    pub fn total(&self) -> Cents {
        self.events.iter().map(|e| e.cash_flow).sum()
    }
}

pub fn ledger_total(ledger: &TradeLedger) -> Cents {
    ledger.total()
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum TradeError {
    #[error("band must lie in [0, 1), got {0}")]
    InvalidBand(f64),
    #[error("stop margin must be positive, got {0}")]
    InvalidMargin(f64),
    #[error("invalid quote at {timestamp}: {reason}")]
    InvalidQuote { timestamp: NaiveDateTime, reason: String },
    #[error("quotes for strike {strike} expiring {expiry} are out of order at {timestamp}")]
    OutOfOrder {
        strike: Cents,
        expiry: NaiveDate,
        timestamp: NaiveDateTime,
    },
    #[error("quote at {timestamp} for strike {strike} is after its expiry {expiry}")]
    QuoteAfterExpiry {
        strike: Cents,
        expiry: NaiveDate,
        timestamp: NaiveDateTime,
    },
    #[error("position in strike {strike} expiring {expiry} is open but quotes stop at {last}")]
    MissingQuote {
        strike: Cents,
        expiry: NaiveDate,
        last: NaiveDateTime,
    },
    #[error("no settlement spot for expiry {0}")]
    MissingSettlement(NaiveDate),
}

struct Open {
    side: Side,
    event: TradeEvent,
    model_price: f64,
}

fn event(q: &OptionQuote, action: Action, cash_flow: Cents) -> TradeEvent {
    TradeEvent {
        timestamp: q.timestamp(),
        strike: q.strike,
        expiry: q.expiry,
        action,
        cash_flow,
    }
}

/// Replay the strategy over `quotes`, grouped by contract and taken in input
/// order within each contract. `settlement` maps each expiry to the closing
/// spot used for positions still open after their last quote.
pub fn run_strategy(
    quotes: &[PricedQuote],
    settlement: &BTreeMap<NaiveDate, Cents>,
    cfg: &StrategyConfig,
) -> Result<TradeLedger, TradeError> {
    if !(0.0..1.0).contains(&cfg.band) {
        return Err(TradeError::InvalidBand(cfg.band));
    }
    if let Some(m) = cfg.stop_margin {
        if !(m > 0.0) {
            return Err(TradeError::InvalidMargin(m));
        }
    }

    let mut contracts: BTreeMap<(Cents, NaiveDate), Vec<&PricedQuote>> = BTreeMap::new();
    for pq in quotes {
        pq.quote.check().map_err(|reason| TradeError::InvalidQuote {
            timestamp: pq.quote.timestamp(),
            reason,
        })?;
        contracts
            .entry((pq.quote.strike, pq.quote.expiry))
            .or_default()
            .push(pq);
    }

    let mut ledger = TradeLedger::default();
    for ((strike, expiry), series) in contracts {
        let mut open: Option<Open> = None;
        let mut last: Option<NaiveDateTime> = None;
        for pq in series {
            let q = &pq.quote;
            let ts = q.timestamp();
            if last.is_some_and(|l| ts <= l) {
                return Err(TradeError::OutOfOrder {
                    strike,
                    expiry,
                    timestamp: ts,
                });
            }
            last = Some(ts);
            let expired = q.date > expiry;
            if expired && !cfg.allow_post_expiry {
                return Err(TradeError::QuoteAfterExpiry {
                    strike,
                    expiry,
                    timestamp: ts,
                });
            }
            let signal = detect_signal(pq.model_price, q, cfg.band);
            match open.take() {
                None => {
                    let stopped = match (cfg.stop_margin, pq.prev_spot, pq.spot) {
                        (Some(m), Some(prev), Some(now)) => stop_rule(prev, now, m),
                        _ => false,
                    };
                    if expired || stopped {
                        continue;
                    }
                    open = match signal {
                        Signal::Sell => Some(Open {
                            side: Side::Short,
                            event: event(q, Action::SellOpen, q.bid),
                            model_price: pq.model_price,
                        }),
                        Signal::Buy => Some(Open {
                            side: Side::Long,
                            event: event(q, Action::BuyOpen, -q.ask),
                            model_price: pq.model_price,
                        }),
                        Signal::None => None,
                    };
                    if let Some(o) = &open {
                        ledger.events.push(o.event);
                    }
                }
                Some(o) => {
                    let close = match (o.side, signal) {
                        (Side::Short, Signal::Sell) | (Side::Long, Signal::Buy) => None,
                        (Side::Short, _) => Some(event(q, Action::BuyClose, -q.ask)),
                        (Side::Long, _) => Some(event(q, Action::SellClose, q.bid)),
                    };
                    match close {
                        Some(c) => {
                            ledger.events.push(c);
                            ledger.positions.push(Position {
                                side: o.side,
                                open: o.event,
                                close: c,
                                model_price: o.model_price,
                            });
                        }
                        None => open = Some(o),
                    }
                }
            }
        }

        if let Some(o) = open {
            let last = last.expect("an open position implies at least one quote");
            if last.date() < expiry {
                return Err(TradeError::MissingQuote { strike, expiry, last });
            }
            let spot = *settlement.get(&expiry).ok_or(TradeError::MissingSettlement(expiry))?;
            let intrinsic = spot - strike;
            let (action, cash_flow) = match (o.side, intrinsic > Cents::ZERO) {
                (Side::Short, true) => (Action::Deliver, -intrinsic),
                (Side::Long, true) => (Action::Exercise, intrinsic),
                (_, false) => (Action::ExpireWorthless, Cents::ZERO),
            };
            let settle = TradeEvent {
                timestamp: expiry.and_time(session_close()).max(last),
                strike,
                expiry,
                action,
                cash_flow,
            };
            ledger.events.push(settle);
            ledger.positions.push(Position {
                side: o.side,
                open: o.event,
                close: settle,
                model_price: o.model_price,
            });
        }
    }

    ledger.events.sort_by_key(|e| (e.timestamp, e.strike, e.expiry));
    ledger
        .positions
        .sort_by_key(|p| (p.open.timestamp, p.open.strike, p.open.expiry));
    Ok(ledger)
}
