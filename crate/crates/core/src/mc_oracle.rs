//! Seeded Monte Carlo simulation of Brownian paths and synthetic OHLC bars.
//!
//! Every path (or simulated day) draws from its own generator, seeded from
//! `(seed, index)` alone, so results do not depend on how work is split across
//! threads. Aggregation always runs over the index-ordered output.
//!
//! Extremes are taken over grid points and are therefore biased towards zero
//! by about `β·σ√Δ` per extreme, `β = -ζ(1/2)/√(2π)`. [`grid_expected_range`]
//! gives the exact expectation of the grid range, and `extreme_correction`
//! shifts each grid extreme outward by `β·σ√Δ`.

use chrono::{Datelike, NaiveDate, Weekday};
use rand::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::abm_range::AbmParams;
use crate::estimators::OhlcBar;
use crate::normal::{for_each_standard_normal, for_each_standard_normal_lanes, standard_normal};
use crate::special::{erf, norm_pdf};

/// `-ζ(1/2)/√(2π)`
pub const EXTREME_BIAS_BETA: f64 = 0.582_597_157_939_010_7;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulation input: {0}")]
    InvalidInput(String),
    #[error("{requested} steps exceed the budget of {budget}")]
    BudgetExceeded { requested: u128, budget: u64 },
    #[error("empty sample")]
    EmptySample,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Grid steps per unit of time (per one-day period for OHLC).
    pub steps_per_unit: u64,
    pub n_paths: usize,
    pub seed: u64,
    /// After-hours fraction of a one-day period, `0 ≤ f < 1`.
    pub f: f64,
    /// Shift grid extremes outward by `β·σ√Δ`.
    pub extreme_correction: bool,
    /// Pair each path with its reflection.
    pub antithetic: bool,
    /// Upper bound on total grid steps per call.
    pub step_budget: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            steps_per_unit: 10_000,
            n_paths: 10_000,
            seed: 0x5eed,
            f: 0.0,
            extreme_correction: false,
            antithetic: false,
            step_budget: 20_000_000_000,
        }
    }
}

impl SimConfig {
    fn validate(&self) -> Result<(), SimError> {
        if self.steps_per_unit == 0 {
            return Err(SimError::InvalidInput("steps_per_unit must be positive".into()));
        }
        if self.n_paths == 0 {
            return Err(SimError::InvalidInput("n_paths must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.f) {
            return Err(SimError::InvalidInput(format!("f must lie in [0, 1), got {}", self.f)));
        }
        Ok(())
    }

    fn check_budget(&self, units: usize, steps_each: u64) -> Result<(), SimError> {
        let requested = units as u128 * steps_each as u128;
        if requested > self.step_budget as u128 {
            return Err(SimError::BudgetExceeded {
                requested,
                budget: self.step_budget,
            });
        }
        Ok(())
    }
}

/// Terminal value and grid extremes of one path started at 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathExtremes {
    pub terminal: f64,
    pub maximum: f64,
    pub minimum: f64,
    pub range: f64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for stream `index` under `seed`.
pub fn stream_rng(seed: u64, index: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(splitmix64(seed ^ splitmix64(index)))
}

type Walk = (f64, f64, f64);

/// Walk `steps` grid increments of `drift + vol·Z`; returns (end, max, min)
/// with the start at 0 included in the extremes.
#[inline]
fn walk<R: RngCore>(rng: &mut R, steps: u64, drift: f64, vol: f64) -> Walk {
    // track the standardized walk and rescale once at the end
    let shift = drift / vol;
    let (mut y, mut hi, mut lo) = (0.0f64, 0.0f64, 0.0f64);
    for_each_standard_normal(rng, steps as usize, |z| {
        y += shift + z;
        // plain comparisons: f64::max's NaN handling lengthens the dependency chain
        hi = if y > hi { y } else { hi };
        lo = if y < lo { y } else { lo };
    });
    (y * vol, hi * vol, lo * vol)
}

/// `L` independent walks at once; each equals `walk` on its own generator.
#[inline]
fn walk_lanes<R: RngCore, const L: usize>(rngs: &mut [R; L], steps: u64, drift: f64, vol: f64) -> [Walk; L] {
    let shift = drift / vol;
    let mut y = [0.0f64; L];
    let mut hi = [0.0f64; L];
    let mut lo = [0.0f64; L];
    for_each_standard_normal_lanes(rngs, steps as usize, |z| {
        for l in 0..L {
            y[l] += shift + z[l];
            hi[l] = if y[l] > hi[l] { y[l] } else { hi[l] };
            lo[l] = if y[l] < lo[l] { y[l] } else { lo[l] };
        }
    });
    std::array::from_fn(|l| (y[l] * vol, hi[l] * vol, lo[l] * vol))
}

/// A walk and its reflection `drift - vol·Z` driven by the same draws.
#[inline]
fn walk_antithetic<R: RngCore>(rng: &mut R, steps: u64, drift: f64, vol: f64) -> [Walk; 2] {
    let shift = drift / vol;
    let (mut ya, mut ha, mut la) = (0.0f64, 0.0f64, 0.0f64);
    let (mut yb, mut hb, mut lb) = (0.0f64, 0.0f64, 0.0f64);
    for_each_standard_normal(rng, steps as usize, |z| {
        ya += shift + z;
        yb += shift - z;
        ha = if ya > ha { ya } else { ha };
        la = if ya < la { ya } else { la };
        hb = if yb > hb { yb } else { hb };
        lb = if yb < lb { yb } else { lb };
    });
    [(ya * vol, ha * vol, la * vol), (yb * vol, hb * vol, lb * vol)]
}

fn grid_steps(steps_per_unit: u64, length: f64) -> u64 {
    ((steps_per_unit as f64 * length).round() as u64).max(1)
}

/// Simulate `cfg.n_paths` discretized paths of `X_s = μs + σW_s` on `[0, t]`.
pub fn simulate_extremes(p: &AbmParams, cfg: &SimConfig) -> Result<Vec<PathExtremes>, SimError> {
    p.validate().map_err(|e| SimError::InvalidInput(e.to_string()))?;
    cfg.validate()?;
    let steps = grid_steps(cfg.steps_per_unit, p.t);
    cfg.check_budget(cfg.n_paths, steps)?;
    let dt = p.t / steps as f64;
    let drift = p.mu * dt;
    let vol = p.sigma * dt.sqrt();
    let correction = if cfg.extreme_correction {
        EXTREME_BIAS_BETA * vol
    } else {
        0.0
    };
    let extremes = |(terminal, hi, lo): Walk| {
        let maximum = hi + correction;
        let minimum = lo - correction;
        PathExtremes {
            terminal,
            maximum,
            minimum,
            range: maximum - minimum,
        }
    };
    // paths go in pairs (2k, 2k+1); with antithetic sampling a pair shares stream k
    let n = cfg.n_paths;
    let pairs: Vec<[Walk; 2]> = (0..n.div_ceil(2))
        .into_par_iter()
        .map(|k| {
            let j = 2 * k;
            let first = if cfg.antithetic { k } else { j } as u64;
            let mut a = stream_rng(cfg.seed, first);
            if j + 1 == n {
                let w = walk(&mut a, steps, drift, vol);
                [w, w]
            } else if cfg.antithetic {
                walk_antithetic(&mut a, steps, drift, vol)
            } else {
                walk_lanes(&mut [a, stream_rng(cfg.seed, first + 1)], steps, drift, vol)
            }
        })
        .collect();
    Ok(pairs.into_iter().flatten().take(n).map(extremes).collect())
}

/// Exact `E[max_k X_{kΔ} - min_k X_{kΔ}]` over an `n`-step grid on `[0, t]`.
///
/// Spitzer's identity gives `E[max_{k≤n} S_k] = Σ_{k=1}^n E[S_k⁺]/k` for a
/// random walk from 0, and likewise for the minimum, so the grid range has
/// expectation `Σ E|S_k|/k` with `S_k ~ N(μkΔ, σ²kΔ)`.
pub fn grid_expected_range(p: &AbmParams, steps: u64) -> f64 {
    let dt = p.t / steps as f64;
    (1..=steps)
        .map(|k| {
            let kf = k as f64;
            let m = p.mu * kf * dt;
            let s = p.sigma * (kf * dt).sqrt();
            // E|N(m, s²)|
            let abs_mean = m * erf(m / (s * std::f64::consts::SQRT_2)) + 2.0 * s * norm_pdf(m / s);
            abs_mean / kf
        })
        .sum()
}

/// Simulated trading days are weekdays from this date onward.
pub fn default_start_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2000, 1, 3).expect("valid date")
}

fn next_weekday(d: NaiveDate) -> NaiveDate {
    let mut d = d.succ_opt().expect("date in range");
    while matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
        d = d.succ_opt().expect("date in range");
    }
    d
}

/// Synthetic daily bars for `dS/S = μ_s dt + σ dW`, time measured in
/// one-day periods.
///
/// Each period is a trading segment of length `1 - f`, observed on a grid of
/// `round(steps_per_unit·(1 - f))` steps to produce O, H, L, C, followed by an
/// unobserved after-hours segment of length `f` whose endpoint is the next
/// open. Bars start at price 100 on [`default_start_date`].
pub fn simulate_ohlc(mu_s: f64, sigma: f64, cfg: &SimConfig, n_days: usize) -> Result<Vec<OhlcBar>, SimError> {
    simulate_ohlc_from(mu_s, sigma, cfg, n_days, 100.0, default_start_date())
}

pub fn simulate_ohlc_from(
    mu_s: f64,
    sigma: f64,
    cfg: &SimConfig,
    n_days: usize,
    start_price: f64,
    start_date: NaiveDate,
) -> Result<Vec<OhlcBar>, SimError> {
    cfg.validate()?;
    if !(sigma > 0.0 && sigma.is_finite()) || !mu_s.is_finite() {
        return Err(SimError::InvalidInput(format!(
            "need finite mu_s and sigma > 0, got ({mu_s}, {sigma})"
        )));
    }
    if !(start_price > 0.0 && start_price.is_finite()) {
        return Err(SimError::InvalidInput(format!(
            "start price must be positive, got {start_price}"
        )));
    }
    let mu = mu_s - 0.5 * sigma * sigma;
    let trading = 1.0 - cfg.f;
    let steps = grid_steps(cfg.steps_per_unit, trading);
    cfg.check_budget(n_days, steps)?;
    let dt = trading / steps as f64;
    let drift = mu * dt;
    let vol = sigma * dt.sqrt();
    let correction = if cfg.extreme_correction {
        EXTREME_BIAS_BETA * vol
    } else {
        0.0
    };

    // day moves in log space: (close - open, high - open, low - open, next open - close)
    let moves: Vec<(f64, f64, f64, f64)> = (0..n_days)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(cfg.seed, i as u64);
            let (close, hi, lo) = walk(&mut rng, steps, drift, vol);
            let overnight = if cfg.f > 0.0 {
                let z = standard_normal(&mut rng);
                mu * cfg.f + sigma * cfg.f.sqrt() * z
            } else {
                0.0
            };
            (close, hi + correction, lo - correction, overnight)
        })
        .collect();

    let mut bars = Vec::with_capacity(n_days);
    let mut level = start_price.ln();
    let mut date = start_date;
    for (i, (close, hi, lo, overnight)) in moves.into_iter().enumerate() {
        if i > 0 {
            date = next_weekday(date);
        }
        bars.push(OhlcBar {
            date,
            open: level.exp(),
            high: (level + hi).exp(),
            low: (level + lo).exp(),
            close: (level + close).exp(),
        });
        level += close + overnight;
    }
    Ok(bars)
}

/// Mean, standard error and empirical CDF of a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalStats {
    pub mean: f64,
    /// `s/√n` with the unbiased sample variance `s²` (0 for a single value).
    pub std_error: f64,
    sorted: Vec<f64>,
}

impl EmpiricalStats {
    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Right-continuous empirical CDF: fraction of samples `≤ x`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    /// Kolmogorov–Smirnov distance `sup_x |F_n(x) - F(x)|` to a continuous CDF.
    pub fn ks_distance<F: Fn(f64) -> f64>(&self, cdf: F) -> f64 {
        let n = self.sorted.len() as f64;
        self.sorted
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }
}

pub fn empirical_stats(samples: &[f64]) -> Result<EmpiricalStats, SimError> {
    if samples.is_empty() {
        return Err(SimError::EmptySample);
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let std_error = if samples.len() > 1 {
        let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(EmpiricalStats {
        mean,
        std_error,
        sorted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats_examples() {
        let s = empirical_stats(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!((s.mean, s.std_error), (1.0, 0.0));
        let s = empirical_stats(&[0.0, 1.0]).unwrap();
        assert_eq!(s.mean, 0.5);
        assert!((s.std_error - 0.5).abs() < 1e-15);
        let s = empirical_stats(&[3.0, 1.0, 2.0]).unwrap();
        assert!((s.cdf(2.0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.cdf(0.5), 0.0);
        assert_eq!(s.cdf(3.0), 1.0);
        assert_eq!(empirical_stats(&[]), Err(SimError::EmptySample));
    }

    #[test]
    fn ks_distance_of_uniform_grid() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        let s = empirical_stats(&xs).unwrap();
        assert!((s.ks_distance(|x| x.clamp(0.0, 1.0)) - 0.005).abs() < 1e-12);
    }

    #[test]
    fn extremes_are_deterministic_and_ordered() {
        let p = AbmParams::new(0.3, 1.0, 1.0).unwrap();
        let cfg = SimConfig {
            n_paths: 64,
            steps_per_unit: 500,
            ..Default::default()
        };
        let a = simulate_extremes(&p, &cfg).unwrap();
        let b = simulate_extremes(&p, &cfg).unwrap();
        assert_eq!(a, b);
        for e in &a {
            assert!(e.minimum <= 0.0 && e.maximum >= 0.0);
            assert!(e.minimum <= e.terminal && e.terminal <= e.maximum);
            assert_eq!(e.range, e.maximum - e.minimum);
        }
        let one = SimConfig { n_paths: 1, ..cfg };
        assert_eq!(simulate_extremes(&p, &one).unwrap()[0], a[0]);
    }

    #[test]
    fn antithetic_pairs_mirror() {
        let p = AbmParams::new(0.0, 1.0, 1.0).unwrap();
        let cfg = SimConfig {
            n_paths: 4,
            steps_per_unit: 100,
            antithetic: true,
            ..Default::default()
        };
        let e = simulate_extremes(&p, &cfg).unwrap();
        assert_eq!(e[0].terminal, -e[1].terminal);
        assert_eq!(e[0].maximum, -e[1].minimum);
    }

    #[test]
    fn budget_and_config_errors() {
        let p = AbmParams::new(0.0, 1.0, 1.0).unwrap();
        let cfg = SimConfig {
            n_paths: 1000,
            step_budget: 10,
            ..Default::default()
        };
        assert!(matches!(
            simulate_extremes(&p, &cfg),
            Err(SimError::BudgetExceeded { .. })
        ));
        let bad_f = SimConfig {
            f: 1.0,
            ..Default::default()
        };
        assert!(simulate_ohlc(0.0, 0.2, &bad_f, 3).is_err());
        assert!(simulate_ohlc(0.0, 0.0, &SimConfig::default(), 3).is_err());
    }

    #[test]
    fn no_after_hours_means_open_equals_previous_close() {
        let cfg = SimConfig {
            steps_per_unit: 50,
            f: 0.0,
            ..Default::default()
        };
        let bars = simulate_ohlc(0.05, 0.2, &cfg, 30).unwrap();
        for w in bars.windows(2) {
            assert!((w[1].open / w[0].close - 1.0).abs() < 1e-12);
            assert!(w[0].date < w[1].date);
        }
        for b in &bars {
            b.check().unwrap();
        }
    }

    #[test]
    fn grid_range_driftless_matches_spitzer_sum() {
        // 2/√(2πn)·Σ_{k≤n} k^{-1/2} at n = 10⁴, 30-digit mpmath
        let p = AbmParams::new(0.0, 1.0, 1.0).unwrap();
        let v = grid_expected_range(&p, 10_000);
        assert!((v - 1.584_157_072_342_538_741_5).abs() < 1e-12, "{v}");
    }

    #[test]
    fn corrected_extremes_shift_by_beta() {
        let p = AbmParams::new(0.0, 1.0, 1.0).unwrap();
        let base = SimConfig {
            n_paths: 3,
            steps_per_unit: 400,
            ..Default::default()
        };
        let corrected = SimConfig {
            extreme_correction: true,
            ..base
        };
        let a = simulate_extremes(&p, &base).unwrap();
        let b = simulate_extremes(&p, &corrected).unwrap();
        let shift = EXTREME_BIAS_BETA / 20.0;
        for (x, y) in a.iter().zip(&b) {
            assert!((y.maximum - x.maximum - shift).abs() < 1e-12);
            assert!((x.minimum - y.minimum - shift).abs() < 1e-12);
        }
    }
}
