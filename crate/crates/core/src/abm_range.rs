//! Distributions of the extremes and range of an arithmetic Brownian motion
//! `X_t = μt + σW_t`, `X_0 = 0`.
//!
//! Closed forms cover the joint law of `(X_t, M_t)`, the half-range
//! `M_t - X_t` and the expected range. The joint density of `(m_t, M_t)`, the
//! confined density and the range density are theta-type series over
//! `k ∈ ℤ`, summed symmetrically outward from `k = 0` under a
//! [`SeriesControl`].
//!
//! The printed series for the range density reproduces the quadrature
//! integral `∫_0^r F(u - r, u) du` only in the driftless case; with drift it
//! disagrees. [`range_density_quadrature`] is the reference and
//! [`range_density_trusted`] picks whichever route is valid for the given
//! parameters.

use std::f64::consts::PI;

use crate::quadrature::{integrate, QuadConfig};
use crate::special::{
    erf, ln_norm_cdf, ln_norm_sf, norm_cdf, norm_pdf, scaled_erf_diff, scaled_norm_cdf_diff, scaled_norm_pdf,
    FRAC_1_SQRT_2PI,
};

/// Below this `|μ|√t/σ` the driftless limits replace the `σ²/μ` forms.
pub const DRIFT_LIMIT_THRESHOLD: f64 = 1e-8;

/// A confinement width `w` whose leading theta-function decay
/// `exp(-π²σ²t/(2w²))`, inflated by the worst Girsanov weight, falls below
/// `e^NEGLIGIBLE_LOG_MASS` carries no representable density.
const NEGLIGIBLE_LOG_MASS: f64 = -650.0;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum RangeError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("series did not converge within {terms} terms")]
    SeriesNotConverged { terms: usize },
}

/// Drift `mu`, volatility `sigma` and horizon `t` of `X_t = μt + σW_t`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AbmParams {
    pub mu: f64,
    pub sigma: f64,
    pub t: f64,
}

impl AbmParams {
    pub fn new(mu: f64, sigma: f64, t: f64) -> Result<Self, RangeError> {
        let p = Self { mu, sigma, t };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), RangeError> {
        if !self.mu.is_finite() {
            return Err(RangeError::InvalidParams(format!("mu must be finite, got {}", self.mu)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(RangeError::InvalidParams(format!(
                "sigma must be > 0, got {}",
                self.sigma
            )));
        }
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(RangeError::InvalidParams(format!("t must be > 0, got {}", self.t)));
        }
        Ok(())
    }

    /// `σ√t`, the natural length scale of every formula here.
    pub fn scale(&self) -> f64 {
        self.sigma * self.t.sqrt()
    }

    /// `μ√t/σ`
    pub fn drift_ratio(&self) -> f64 {
        self.mu * self.t.sqrt() / self.sigma
    }

    pub fn is_driftless(&self) -> bool {
        self.drift_ratio().abs() < DRIFT_LIMIT_THRESHOLD
    }

    /// Same process observed over `(0, 1)`: `(μt, σ√t, 1)`.
    pub fn unit_horizon(&self) -> Self {
        Self {
            mu: self.mu * self.t,
            sigma: self.scale(),
            t: 1.0,
        }
    }

    pub fn mirrored(&self) -> Self {
        Self { mu: -self.mu, ..*self }
    }

    /// Girsanov weight `exp(μx/σ² - μ²t/(2σ²))` in log form.
    fn ln_girsanov(&self, x: f64) -> f64 {
        let s2 = self.sigma * self.sigma;
        self.mu * x / s2 - 0.5 * self.mu * self.mu * self.t / s2
    }

    fn negligible_width(&self, width: f64) -> bool {
        let s2 = self.sigma * self.sigma;
        let log_mass = -PI * PI * s2 * self.t / (2.0 * width * width) + self.mu.abs() * width / s2;
        log_mass < NEGLIGIBLE_LOG_MASS
    }
}

/// Truncation policy for the `k = -∞..∞` series.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SeriesControl {
    /// Largest `|k|` summed.
    pub max_terms: usize,
    pub term_tolerance: f64,
    pub consecutive_small: usize,
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self {
            max_terms: 100,
            term_tolerance: 1e-14,
            consecutive_small: 3,
        }
    }
}

impl SeriesControl {
    pub fn validate(&self) -> Result<(), RangeError> {
        if self.max_terms < 1 || !(self.term_tolerance > 0.0) || self.consecutive_small < 1 {
            return Err(RangeError::InvalidParams(format!("invalid series control {self:?}")));
        }
        Ok(())
    }

    /// Sum `term(k)` over `k ∈ ℤ`, pairing `k` with `-k`.
    ///
    /// A pair counts as small when its magnitude is at most `term_tolerance`
    /// times the larger of the running sum and the largest pair seen; the
    /// second reference keeps heavily cancelling sums from running to the cap.
    pub fn sum<F: FnMut(i64) -> f64>(&self, mut term: F) -> Result<f64, RangeError> {
        self.validate()?;
        let mut sum = term(0);
        let mut peak = sum.abs();
        let mut small = 0usize;
        for n in 1..=self.max_terms as i64 {
            let pair = term(n) + term(-n);
            sum += pair;
            peak = peak.max(pair.abs());
            if !pair.is_finite() {
                return Err(RangeError::SeriesNotConverged { terms: n as usize });
            }
            if pair.abs() <= self.term_tolerance * sum.abs().max(peak) {
                small += 1;
                if small >= self.consecutive_small {
                    return Ok(sum);
                }
            } else {
                small = 0;
            }
        }
        Err(RangeError::SeriesNotConverged { terms: self.max_terms })
    }
}

/// Joint density of `(X_t, M_t)` at `(a, b)`; zero off the support
/// `b ≥ max(a, 0)`.
pub fn joint_density_max(p: &AbmParams, a: f64, b: f64) -> Result<f64, RangeError> {
    p.validate()?;
    if b < 0.0 || b < a {
        return Ok(0.0);
    }
    let s2t = p.sigma * p.sigma * p.t;
    let w = 2.0 * b - a;
    let coef = 2.0 * w / ((2.0 * PI * p.t.powi(3)).sqrt() * p.sigma.powi(3));
    Ok(coef * (-w * w / (2.0 * s2t) + p.ln_girsanov(a)).exp())
}

/// Density of the half-range `M_t - X_t` at `c`.
pub fn half_range_density(p: &AbmParams, c: f64) -> Result<f64, RangeError> {
    p.validate()?;
    if c < 0.0 {
        return Ok(0.0);
    }
    let s = p.scale();
    let s2 = p.sigma * p.sigma;
    let drift_part = if p.mu == 0.0 {
        0.0
    } else {
        // 2μ/σ² Φ((μt - c)/(σ√t)) e^{-2μc/σ²}, kept in one exponential
        2.0 * p.mu / s2 * (ln_norm_cdf((p.mu * p.t - c) / s) - 2.0 * p.mu * c / s2).exp()
    };
    let m = p.mu * p.t + c;
    Ok(drift_part + 2.0 * FRAC_1_SQRT_2PI / s * (-m * m / (2.0 * s * s)).exp())
}

/// Half-range density in the form produced by the change of variables,
/// `[2μ/σ² Φ(·) + 2φ((μt - c)/(σ√t))/(σ√t)] e^{-2μc/σ²}`; algebraically
/// identical to [`half_range_density`].
pub fn half_range_density_unsimplified(p: &AbmParams, c: f64) -> Result<f64, RangeError> {
    p.validate()?;
    if c < 0.0 {
        return Ok(0.0);
    }
    let s = p.scale();
    let s2 = p.sigma * p.sigma;
    let z = (p.mu * p.t - c) / s;
    let tilt = (-2.0 * p.mu * c / s2).exp();
    Ok((2.0 * p.mu / s2 * norm_cdf(z) + 2.0 / s * norm_pdf(z)) * tilt)
}

/// `E[M_t - X_t]`. The mirror `E[X_t - m_t]` is this at `-μ`.
pub fn half_range_mean(p: &AbmParams) -> Result<f64, RangeError> {
    p.validate()?;
    let s = p.scale();
    if p.is_driftless() {
        return Ok(s * (2.0 / PI).sqrt());
    }
    let c = p.drift_ratio();
    let s2 = p.sigma * p.sigma;
    // σ²/(2μ)(2Φ(c) - 1) - μtΦ(-c) + σ√t φ(c), with 2Φ(c) - 1 = erf(c/√2)
    Ok(s2 / (2.0 * p.mu) * erf(c / std::f64::consts::SQRT_2) - p.mu * p.t * norm_cdf(-c) + s * norm_pdf(c))
}

/// `E[R_t] = E[M_t - m_t]`.
pub fn expected_range(p: &AbmParams) -> Result<f64, RangeError> {
    p.validate()?;
    if p.is_driftless() {
        return Ok(p.scale() * (8.0 / PI).sqrt());
    }
    let c = p.drift_ratio();
    let s2 = p.sigma * p.sigma;
    Ok((p.mu * p.t + s2 / p.mu) * erf(c / std::f64::consts::SQRT_2) + 2.0 * p.scale() * norm_pdf(c))
}

/// Two-argument reduction of the expected range:
/// `h(x, y) = {(x² + 1)(2Φ(x) - 1) + 2xφ(x)}·y`, with
/// `E[R_t] = h(μ√t/σ, σ²/μ)`.
pub fn h_moment(x: f64, y: f64) -> f64 {
    ((x * x + 1.0) * erf(x / std::f64::consts::SQRT_2) + 2.0 * x * norm_pdf(x)) * y
}

fn check_confinement(a: f64, b: f64) -> Result<(), RangeError> {
    if !(a < 0.0 && 0.0 < b) {
        return Err(RangeError::Domain(format!(
            "interval ({a}, {b}) must contain the starting point 0"
        )));
    }
    Ok(())
}

/// Density of `X_t` at `x` on the event that the path never leaves `(a, b)`.
///
/// Image-sum (Feller) form of the driftless kernel, weighted by the Girsanov
/// factor; for `μ = 0` the weight is one.
pub fn confined_density(p: &AbmParams, x: f64, a: f64, b: f64, ctl: &SeriesControl) -> Result<f64, RangeError> {
    p.validate()?;
    check_confinement(a, b)?;
    if x < a || x > b {
        return Err(RangeError::Domain(format!("x = {x} outside ({a}, {b})")));
    }
    let width = b - a;
    if p.negligible_width(width) {
        return Ok(0.0);
    }
    let s = p.scale();
    let series = ctl.sum(|k| {
        let k = k as f64;
        norm_pdf((2.0 * k * width - x) / s) - norm_pdf((2.0 * k * width - 2.0 * b + x) / s)
    })?;
    Ok(series / s * p.ln_girsanov(x).exp())
}

/// The same confined density through the Billingsley image sum.
pub fn confined_density_billingsley(
    p: &AbmParams,
    x: f64,
    a: f64,
    b: f64,
    ctl: &SeriesControl,
) -> Result<f64, RangeError> {
    p.validate()?;
    check_confinement(a, b)?;
    if x < a || x > b {
        return Err(RangeError::Domain(format!("x = {x} outside ({a}, {b})")));
    }
    let width = b - a;
    if p.negligible_width(width) {
        return Ok(0.0);
    }
    let s = p.scale();
    let series = ctl.sum(|k| {
        let k = k as f64;
        norm_pdf((x + 2.0 * k * width) / s) - norm_pdf((2.0 * b - x + 2.0 * k * width) / s)
    })?;
    Ok(series / s * p.ln_girsanov(x).exp())
}

/// `P(a < m_t ≤ M_t < b)`: the confined density integrated over `(a, b)`.
pub fn survival_probability(p: &AbmParams, a: f64, b: f64, ctl: &SeriesControl) -> Result<f64, RangeError> {
    p.validate()?;
    check_confinement(a, b)?;
    let mut failure = None;
    let r = integrate(
        |x| match confined_density(p, x, a, b, ctl) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        a,
        b,
        &QuadConfig::with_abs_tol(1e-12),
    );
    match failure {
        Some(e) => Err(e),
        None => Ok(r.value),
    }
}

/// Joint density `F(a, b)` of `(m_t, M_t)` for `a < 0 < b`, as the
/// eight-term erf series.
pub fn joint_density_max_min(p: &AbmParams, a: f64, b: f64, ctl: &SeriesControl) -> Result<f64, RangeError> {
    p.validate()?;
    if !(a < 0.0 && b > 0.0) {
        return Err(RangeError::Domain(format!(
            "joint max-min density needs min < 0 < max, got ({a}, {b})"
        )));
    }
    let width = b - a;
    if p.negligible_width(width) {
        return Ok(0.0);
    }
    let (mu, sigma, t) = (p.mu, p.sigma, p.t);
    let s2 = sigma * sigma;
    let two_var = 2.0 * t * s2;
    let gauss_norm = 1.0 / (t * sigma.powi(3) * (2.0 * PI * t).sqrt());
    let erf_coef = mu * mu / (2.0 * s2 * s2);
    let erf_den = sigma * (2.0 * t).sqrt();
    let mt = mu * t;

    let term = |k: i64| -> f64 {
        let k = k as f64;
        let a1 = 4.0 * k * (k - 1.0);
        let a5 = 4.0 * k * k;
        let mut total = 0.0;
        if a1 != 0.0 {
            let e1 = -mu / s2 * (2.0 * (k - 1.0) * b - 2.0 * k * a);
            let u1 = (2.0 * k - 1.0) * b - 2.0 * k * a;
            let u2 = 2.0 * (k - 1.0) * b - (2.0 * k - 1.0) * a;
            let f1 = (u1 + mt) * (e1 - (u1 - mt).powi(2) / two_var).exp();
            let f2 = (u2 + mt) * (e1 - (u2 - mt).powi(2) / two_var).exp();
            // F3 - F4
            let f34 = if erf_coef == 0.0 {
                0.0
            } else {
                erf_coef * scaled_erf_diff(e1, (u1 - mt) / erf_den, (u2 - mt) / erf_den)
            };
            total += a1 * (gauss_norm * (f1 - f2) - f34);
        }
        if a5 != 0.0 {
            let e5 = -mu / s2 * 2.0 * k * width;
            let u5 = (2.0 * k + 1.0) * b - 2.0 * k * a;
            let u6 = 2.0 * k * b - (2.0 * k - 1.0) * a;
            let f5 = (u5 + mt) * (e5 - (u5 - mt).powi(2) / two_var).exp();
            let f6 = (u6 + mt) * (e5 - (u6 - mt).powi(2) / two_var).exp();
            // F7 - F8
            let f78 = if erf_coef == 0.0 {
                0.0
            } else {
                erf_coef * scaled_erf_diff(e5, (u5 - mt) / erf_den, (u6 - mt) / erf_den)
            };
            total += a5 * (gauss_norm * (f6 - f5) + f78);
        }
        total
    };
    ctl.sum(term)
}

/// Range density from the printed `I(k)`/`J(k)` series.
///
/// Exact in the driftless case. Under drift it does not integrate the joint
/// density correctly; see [`range_density_trusted`].
pub fn range_density(p: &AbmParams, r: f64, ctl: &SeriesControl) -> Result<f64, RangeError> {
    p.validate()?;
    if r <= 0.0 || p.negligible_width(r) {
        return Ok(0.0);
    }
    let s = p.scale();
    let c = p.drift_ratio();
    let q = 2.0 * p.mu * r / (p.sigma * p.sigma);
    let g = |kk: f64| c * c * kk - 2.0 * c - c * c * c;

    let term = |k: i64| -> f64 {
        let kf = k as f64;
        let k2 = (2.0 * kf + 2.0) * r / s;
        let k1 = (2.0 * kf + 1.0) * r / s;
        let k0 = 2.0 * kf * r / s;
        let km = (2.0 * kf - 1.0) * r / s;
        let mut total = 0.0;

        if k != 0 {
            let down = -q * kf;
            let dens =
                scaled_norm_pdf(down, k1 - c) - 2.0 * scaled_norm_pdf(down, k0 - c) + scaled_norm_pdf(down, km - c);
            let weighted = [(1.0, k1), (-2.0, k0), (1.0, km)];
            // the weights annihilate g, so Φ may be swapped for -Q in the upper tail
            let cdf_part: f64 = if km - c >= 0.0 {
                -weighted
                    .iter()
                    .map(|&(w, kk)| w * g(kk) * (down + ln_norm_sf(kk - c)).exp())
                    .sum::<f64>()
            } else {
                weighted
                    .iter()
                    .map(|&(w, kk)| w * g(kk) * (down + ln_norm_cdf(kk - c)).exp())
                    .sum::<f64>()
            };
            let i_k = (1.0 + c * c) * dens + cdf_part;
            total += 4.0 * kf * kf * i_k;
        }

        if k != 0 && k != -1 {
            let up0 = q * kf;
            let up1 = q * (kf + 1.0);
            let j_k = scaled_norm_pdf(up0, k1 + c)
                - scaled_norm_pdf(up0, k0 + c)
                - (scaled_norm_pdf(up1, k2 + c) - scaled_norm_pdf(up1, k1 + c))
                - 0.5 * c * scaled_norm_cdf_diff(-up0, k1 - c, k0 - c)
                + 0.5 * c * scaled_norm_cdf_diff(-up1, k2 - c, k1 - c)
                + scaled_norm_cdf_diff(up0, k1 + c, k0 + c)
                - scaled_norm_cdf_diff(up1, k2 + c, k1 + c);
            total += 4.0 * kf * (kf + 1.0) * j_k;
        }
        total
    };
    Ok(ctl.sum(term)? / s)
}

/// Range density as `∫_0^r F(u - r, u) du` over the joint max-min density.
pub fn range_density_quadrature(p: &AbmParams, r: f64, ctl: &SeriesControl) -> Result<f64, RangeError> {
    range_density_quadrature_with(p, r, ctl, &QuadConfig::with_abs_tol(1e-12))
}

pub fn range_density_quadrature_with(
    p: &AbmParams,
    r: f64,
    ctl: &SeriesControl,
    quad: &QuadConfig,
) -> Result<f64, RangeError> {
    p.validate()?;
    if r <= 0.0 || p.negligible_width(r) {
        return Ok(0.0);
    }
    let mut failure = None;
    let res = integrate(
        |u| match joint_density_max_min(p, u - r, u, ctl) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        0.0,
        r,
        quad,
    );
    match failure {
        Some(e) => Err(e),
        None => Ok(res.value),
    }
}

/// Range density through the route that is valid for `p`: the series in the
/// driftless case, the quadrature integral otherwise.
pub fn range_density_trusted(p: &AbmParams, r: f64, ctl: &SeriesControl) -> Result<f64, RangeError> {
    if p.is_driftless() {
        range_density(p, r, ctl)
    } else {
        range_density_quadrature(p, r, ctl)
    }
}

/// Marginal density of `M_t` at `b ≥ 0`, integrating the joint law of
/// `(X_t, M_t)` over the terminal value.
pub fn max_marginal_density(p: &AbmParams, b: f64) -> Result<f64, RangeError> {
    p.validate()?;
    if b < 0.0 {
        return Ok(0.0);
    }
    let s = p.scale();
    let lo = b.min(p.mu * p.t) - 10.0 * s - b;
    let mut failure = None;
    let res = integrate(
        |a| match joint_density_max(p, a, b) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        lo,
        b,
        &QuadConfig::with_abs_tol(1e-13),
    );
    match failure {
        Some(e) => Err(e),
        None => Ok(res.value),
    }
}

/// Finite window `[lo, hi]` outside of which a density of the range,
/// half-range or extremes carries less than ~1e-12 mass.
pub fn support_window(p: &AbmParams) -> (f64, f64) {
    let s = p.scale();
    let drift = p.mu.abs() * p.t;
    (0.0, drift + 8.0 * s)
}
