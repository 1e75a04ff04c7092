//! Black–Scholes European call valuation.

use chrono::{Datelike, NaiveDate, NaiveTime, Weekday};
use serde::{Deserialize, Serialize};

use crate::special::norm_cdf;

/// Below this `σ√τ` the call is valued at its forward intrinsic value.
pub const INTRINSIC_THRESHOLD: f64 = 1e-12;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum PricingError {
    #[error("invalid pricing input: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricingInputs {
    pub spot: f64,
    pub strike: f64,
    /// Continuously compounded rate per year.
    pub rate: f64,
    /// Annualized volatility.
    pub vol: f64,
    /// Time to expiry in years.
    pub tau: f64,
}

impl PricingInputs {
    pub fn new(spot: f64, strike: f64, rate: f64, vol: f64, tau: f64) -> Result<Self, PricingError> {
        let inputs = Self {
            spot,
            strike,
            rate,
            vol,
            tau,
        };
        inputs.validate()?;
        Ok(inputs)
    }

    pub fn validate(&self) -> Result<(), PricingError> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.spot) || !positive(self.strike) {
            return Err(PricingError::InvalidInput(format!(
                "spot and strike must be positive, got S={} K={}",
                self.spot, self.strike
            )));
        }
        if !positive(self.vol) {
            return Err(PricingError::InvalidInput(format!(
                "vol must be positive, got {}",
                self.vol
            )));
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(PricingError::InvalidInput(format!(
                "tau must be nonnegative, got {}",
                self.tau
            )));
        }
        if !self.rate.is_finite() {
            return Err(PricingError::InvalidInput(format!(
                "rate must be finite, got {}",
                self.rate
            )));
        }
        Ok(())
    }
}

/// `C = S Φ(d₁) − K e^{−rτ} Φ(d₂)`.
pub fn bs_call(p: &PricingInputs) -> Result<f64, PricingError> {
    p.validate()?;
    let discounted_strike = p.strike * (-p.rate * p.tau).exp();
    let sd = p.vol * p.tau.sqrt();
    if sd < INTRINSIC_THRESHOLD {
        return Ok((p.spot - discounted_strike).max(0.0));
    }
    let d1 = ((p.spot / p.strike).ln() + (p.rate + 0.5 * p.vol * p.vol) * p.tau) / sd;
    let d2 = d1 - sd;
    let price = p.spot * norm_cdf(d1) - discounted_strike * norm_cdf(d2);
    // clamp the last-ulp excursions outside the no-arbitrage band
    Ok(price.clamp((p.spot - discounted_strike).max(0.0), p.spot))
}

/// How the time to expiry is counted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DayCount {
    /// Weekdays to expiry over `days_per_year`.
    Trading { days_per_year: f64 },
    /// Calendar days to expiry over `days_per_year`.
    Calendar { days_per_year: f64 },
}

impl Default for DayCount {
    fn default() -> Self {
        DayCount::Trading { days_per_year: 252.0 }
    }
}

/// Regular session, used to turn an intraday quote time into a day fraction.
pub fn session_open() -> NaiveTime {
    NaiveTime::from_hms_opt(9, 30, 0).expect("valid time")
}

pub fn session_close() -> NaiveTime {
    NaiveTime::from_hms_opt(16, 0, 0).expect("valid time")
}

fn is_weekday(d: NaiveDate) -> bool {
    !matches!(d.weekday(), Weekday::Sat | Weekday::Sun)
}

/// Weekdays in `(from, to]`.
pub fn weekdays_between(from: NaiveDate, to: NaiveDate) -> i64 {
    if to <= from {
        return 0;
    }
    from.iter_days()
        .skip(1)
        .take_while(|d| *d <= to)
        .filter(|d| is_weekday(*d))
        .count() as i64
}

impl DayCount {
    /// Years from a quote at `date` (`time` if intraday, else the close) until
    /// the close of `expiry`. Zero once expiry has passed.
    pub fn year_fraction(&self, date: NaiveDate, time: Option<NaiveTime>, expiry: NaiveDate) -> f64 {
        if date > expiry {
            return 0.0;
        }
        let close = session_close();
        match *self {
            DayCount::Trading { days_per_year } => {
                let session = (close - session_open()).num_seconds() as f64;
                let today = match time {
                    Some(t) if is_weekday(date) => ((close - t).num_seconds() as f64 / session).clamp(0.0, 1.0),
                    _ => 0.0,
                };
                (weekdays_between(date, expiry) as f64 + today) / days_per_year
            }
            DayCount::Calendar { days_per_year } => {
                let today = match time {
                    Some(t) => ((close - t).num_seconds() as f64 / 86_400.0).max(0.0),
                    None => 0.0,
                };
                ((expiry - date).num_days() as f64 + today) / days_per_year
            }
        }
    }
}

/// How a quoted annual yield becomes the continuous rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateConvention {
    /// Use the quoted value as the continuous rate.
    #[default]
    Direct,
    /// `r = ln(1 + y)`.
    LogOnePlus,
}

impl RateConvention {
    pub fn continuous(&self, quoted: f64) -> f64 {
        match self {
            RateConvention::Direct => quoted,
            RateConvention::LogOnePlus => quoted.ln_1p(),
        }
    }
}
