//! Volatility estimators over daily open/high/low/close bars.
//!
//! The intraday variance comes from the method of moments on the log-range:
//! the mean of `log(H/L)` is matched to the expected range of an arithmetic
//! Brownian motion whose drift is the mean of `log(C/O)`. The after-hours part
//! is the sample variance of the overnight returns `log(O_{i+1}/C_i)`.
//! Close-open, Rogers–Satchell and Yang–Zhang variances are carried along for
//! comparison.

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::abm_range::{expected_range, AbmParams};

/// `|k2|/k1` below which the moment equation is inverted in closed form.
pub const DRIFTLESS_RATIO: f64 = 1e-8;
pub const DEFAULT_ANNUALIZATION: f64 = 252.0;
pub const DEFAULT_WINDOW: usize = 63;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum EstimateError {
    #[error("need at least {needed} bars, got {got}")]
    InsufficientBars { needed: usize, got: usize },
    #[error("bar {index} ({date}) is invalid: {reason}")]
    InvalidBar {
        index: usize,
        date: NaiveDate,
        reason: String,
    },
    #[error("moment equation has no root: k1 = {k1} must exceed |k2| = {}", k2.abs())]
    InfeasibleMoments { k1: f64, k2: f64 },
    #[error("moment solver did not converge in {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("invalid window {window} for {bars} bars (need 3 ≤ window ≤ bars)")]
    InvalidWindow { window: usize, bars: usize },
    #[error("window ending {date}: {source}")]
    Window {
        date: NaiveDate,
        #[source]
        source: Box<EstimateError>,
    },
}

/// One one-day period: the trading-day open, high, low and close.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OhlcBar {
    pub date: NaiveDate,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
}

impl OhlcBar {
    pub fn new(date: NaiveDate, open: f64, high: f64, low: f64, close: f64) -> Result<Self, String> {
        let bar = Self {
            date,
            open,
            high,
            low,
            close,
        };
        bar.check().map(|_| bar)
    }

    /// `0 < L ≤ min(O, C)` and `max(O, C) ≤ H`.
    pub fn check(&self) -> Result<(), String> {
        let prices = [self.open, self.high, self.low, self.close];
        if prices.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err("prices must be positive and finite".into());
        }
        if self.low > self.open.min(self.close) {
            return Err(format!(
                "low {} exceeds min(open, close) = {}",
                self.low,
                self.open.min(self.close)
            ));
        }
        if self.high < self.open.max(self.close) {
            return Err(format!(
                "high {} is below max(open, close) = {}",
                self.high,
                self.open.max(self.close)
            ));
        }
        Ok(())
    }

    pub fn log_range(&self) -> f64 {
        (self.high / self.low).ln()
    }

    pub fn log_close_open(&self) -> f64 {
        (self.close / self.open).ln()
    }
}

fn validate_bars(bars: &[OhlcBar], needed: usize) -> Result<(), EstimateError> {
    if bars.len() < needed {
        return Err(EstimateError::InsufficientBars {
            needed,
            got: bars.len(),
        });
    }
    for (index, bar) in bars.iter().enumerate() {
        bar.check().map_err(|reason| EstimateError::InvalidBar {
            index,
            date: bar.date,
            reason,
        })?;
    }
    Ok(())
}

/// Sample moments feeding the moment equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentInputs {
    /// Mean log-range `log(H/L)`.
    pub k1: f64,
    /// Mean open-to-close log return `log(C/O)`.
    pub k2: f64,
    pub n: usize,
}

pub fn compute_moments(bars: &[OhlcBar]) -> Result<MomentInputs, EstimateError> {
    validate_bars(bars, 2)?;
    let n = bars.len();
    let k1 = bars.iter().map(OhlcBar::log_range).sum::<f64>() / n as f64;
    let k2 = bars.iter().map(OhlcBar::log_close_open).sum::<f64>() / n as f64;
    Ok(MomentInputs { k1, k2, n })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 200,
        }
    }
}

/// Expected log-range over a trading day with drift `drift` and scale `x`,
/// i.e. `h(drift/x, x²/drift)`.
fn moment_curve(drift: f64, x: f64) -> f64 {
    expected_range(&AbmParams {
        mu: drift,
        sigma: x,
        t: 1.0,
    })
    .expect("solver keeps x strictly positive")
}

/// Solve `k1 = h(k2/x, x²/k2)` for `x`, the trading-day volatility
/// `σ√(1-f)`.
///
/// As `x` runs over `(0, ∞)` the right-hand side covers `(|k2|, ∞)`, so a root
/// exists exactly when `k1 > |k2|`. The bracket `[1e-12·k1, k1]` always
/// straddles it; Brent's method then narrows it to `tol` relative width.
pub fn solve_intraday_vol(m: &MomentInputs, tol: f64, max_iter: usize) -> Result<f64, EstimateError> {
    let k1 = m.k1;
    let drift = m.k2.abs();
    if !(k1.is_finite() && drift.is_finite()) || k1 <= 0.0 || k1 <= drift {
        return Err(EstimateError::InfeasibleMoments { k1, k2: m.k2 });
    }
    if drift / k1 < DRIFTLESS_RATIO {
        // E[R] = x·√(8/π)
        return Ok(k1 * (2.0 * std::f64::consts::PI).sqrt() / 4.0);
    }
    let g = |x: f64| moment_curve(drift, x) - k1;
    brent(g, 1e-12 * k1, k1, tol, max_iter)
}

fn brent<G: Fn(f64) -> f64>(g: G, lo: f64, hi: f64, tol: f64, max_iter: usize) -> Result<f64, EstimateError> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (g(a), g(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    debug_assert!(fa * fb < 0.0, "bracket must straddle the root");
    let (mut c, mut fc) = (b, fb);
    let (mut d, mut e) = (b - a, b - a);
    for _ in 0..max_iter {
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol * b.abs();
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            // inverse quadratic interpolation, or secant when only two points differ
            let s = fb / fa;
            let (mut p, mut q) = if a == c {
                (2.0 * xm * s, 1.0 - s)
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                (
                    s * (2.0 * xm * qa * (qa - r) - (b - a) * (r - 1.0)),
                    (qa - 1.0) * (r - 1.0) * (s - 1.0),
                )
            };
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = g(b);
    }
    Err(EstimateError::NoConvergence { iterations: max_iter })
}

fn sample_variance(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count();
    let mean = values.clone().sum::<f64>() / n as f64;
    values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
}

fn overnight_returns(bars: &[OhlcBar]) -> impl Iterator<Item = f64> + Clone + '_ {
    bars.windows(2).map(|w| (w[1].open / w[0].close).ln())
}

/// Variance of the after-hours returns `log(O_{i+1}/C_i)`: the unbiased
/// sample variance when `centered`, otherwise the mean square.
pub fn overnight_variance(bars: &[OhlcBar], centered: bool) -> Result<f64, EstimateError> {
    validate_bars(bars, 3)?;
    let returns = overnight_returns(bars);
    if centered {
        Ok(sample_variance(returns))
    } else {
        let n = bars.len() - 1;
        Ok(returns.map(|o| o * o).sum::<f64>() / n as f64)
    }
}

/// Unbiased sample variance of `log(C_i/O_i)`.
pub fn close_open_variance(bars: &[OhlcBar]) -> Result<f64, EstimateError> {
    validate_bars(bars, 2)?;
    Ok(sample_variance(bars.iter().map(OhlcBar::log_close_open)))
}

/// Rogers–Satchell drift-free variance, `mean[u(u - c) + d(d - c)]` with
/// `u = log(H/O)`, `d = log(L/O)`, `c = log(C/O)`.
pub fn rogers_satchell(bars: &[OhlcBar]) -> Result<f64, EstimateError> {
    validate_bars(bars, 1)?;
    let sum: f64 = bars
        .iter()
        .map(|b| {
            let u = (b.high / b.open).ln();
            let d = (b.low / b.open).ln();
            let c = b.log_close_open();
            u * (u - c) + d * (d - c)
        })
        .sum();
    Ok(sum / bars.len() as f64)
}

/// Yang–Zhang minimum-variance weight for `n` periods.
pub fn yang_zhang_k(n: usize) -> f64 {
    let n = n as f64;
    0.34 / (1.34 + (n + 1.0) / (n - 1.0))
}

/// `V_0 + k·V_C + (1 - k)·V_RS`, with the weight from [`yang_zhang_k`] unless
/// overridden.
pub fn yang_zhang(bars: &[OhlcBar], k_override: Option<f64>) -> Result<f64, EstimateError> {
    validate_bars(bars, 3)?;
    let k = k_override.unwrap_or_else(|| yang_zhang_k(bars.len()));
    Ok(overnight_variance(bars, true)? + k * close_open_variance(bars)? + (1.0 - k) * rogers_satchell(bars)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    /// Periods per year, 252 trading days by default.
    pub annualization: f64,
    pub yz_k: Option<f64>,
    pub solver: SolverConfig,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            annualization: DEFAULT_ANNUALIZATION,
            yz_k: None,
            solver: SolverConfig::default(),
        }
    }
}

/// Variances are per one-day period; `sigma_*` fields are annualized
/// volatilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolEstimate {
    /// Trading-day variance `x²` from the moment equation.
    pub v_intraday: f64,
    /// Centered overnight variance `V_0`.
    pub v_overnight: f64,
    /// Non-centered overnight variance `V_0'`.
    pub v_overnight_noncentered: f64,
    pub v_close_open: f64,
    pub v_rs: f64,
    pub v_yz: f64,
    /// `V_0 + V_i`
    pub v_z: f64,
    /// `√(A·V_Z)`
    pub sigma_annual: f64,
    /// `√(A·V_i)`, trading-day volatility only.
    pub sigma_annual_intraday: f64,
    /// `√(A·V_YZ)`
    pub sigma_annual_yz: f64,
    pub moments: MomentInputs,
}

pub fn estimate(bars: &[OhlcBar]) -> Result<VolEstimate, EstimateError> {
    estimate_with(bars, &EstimatorConfig::default())
}

pub fn estimate_with(bars: &[OhlcBar], cfg: &EstimatorConfig) -> Result<VolEstimate, EstimateError> {
    validate_bars(bars, 3)?;
    let moments = compute_moments(bars)?;
    let x = solve_intraday_vol(&moments, cfg.solver.tol, cfg.solver.max_iter)?;
    let v_intraday = x * x;
    let v_overnight = overnight_variance(bars, true)?;
    let v_yz = yang_zhang(bars, cfg.yz_k)?;
    let v_z = v_overnight + v_intraday;
    let a = cfg.annualization;
    Ok(VolEstimate {
        v_intraday,
        v_overnight,
        v_overnight_noncentered: overnight_variance(bars, false)?,
        v_close_open: close_open_variance(bars)?,
        v_rs: rogers_satchell(bars)?,
        v_yz,
        v_z,
        sigma_annual: (a * v_z).sqrt(),
        sigma_annual_intraday: (a * v_intraday).sqrt(),
        sigma_annual_yz: (a * v_yz).sqrt(),
        moments,
    })
}

/// Trailing-window estimates, one per bar that closes a full window, in date
/// order.
pub fn rolling_estimate(
    bars: &[OhlcBar],
    window: usize,
    cfg: &EstimatorConfig,
) -> Result<Vec<(NaiveDate, VolEstimate)>, EstimateError> {
    if window < 3 || window > bars.len() {
        return Err(EstimateError::InvalidWindow {
            window,
            bars: bars.len(),
        });
    }
    bars.par_windows(window)
        .map(|w| {
            let date = w[window - 1].date;
            estimate_with(w, cfg)
                .map(|e| (date, e))
                .map_err(|e| EstimateError::Window {
                    date,
                    source: Box::new(e),
                })
        })
        .collect()
}
