use chrono::NaiveDate;
use rangevol::abm_range::AbmParams;
use rangevol::estimators::*;
use rangevol::mc_oracle::{empirical_stats, grid_expected_range, simulate_ohlc, SimConfig};

const STEPS_PER_DAY: u64 = 10_000;

fn day_sigma(annual: f64) -> f64 {
    annual / 252f64.sqrt()
}

fn sim(mu_s: f64, sigma: f64, f: f64, n: usize, seed: u64) -> Vec<OhlcBar> {
    let cfg = SimConfig {
        steps_per_unit: STEPS_PER_DAY,
        f,
        seed,
        ..SimConfig::default()
    };
    simulate_ohlc(mu_s, sigma, &cfg, n).unwrap()
}

fn z(value: f64, want: f64, samples: &[f64]) -> f64 {
    (value - want) / empirical_stats(samples).unwrap().std_error
}

#[test]
fn mean_log_range_matches_grid_expectation() {
    let (mu_s, sigma, f) = (0.05 / 252.0, day_sigma(0.3), 0.25);
    let bars = sim(mu_s, sigma, f, 63, 31);
    let m = compute_moments(&bars).unwrap();
    let mu = mu_s - 0.5 * sigma * sigma;
    // the trading segment is (μ, σ) over 1 - f, observed on 7500 grid steps
    let segment = AbmParams::new(mu, sigma, 1.0 - f).unwrap();
    let want = grid_expected_range(&segment, 7_500);
    let ranges: Vec<f64> = bars.iter().map(OhlcBar::log_range).collect();
    assert!(z(m.k1, want, &ranges).abs() < 3.0, "k1 {} vs {want}", m.k1);
}

#[test]
fn variance_components_match_their_targets() {
    let (sigma, f) = (day_sigma(0.2), 0.3);
    let bars = sim(0.0, sigma, f, 4_000, 32);

    let o: Vec<f64> = bars.windows(2).map(|w| (w[1].open / w[0].close).ln()).collect();
    let o2: Vec<f64> = o.iter().map(|x| x * x).collect();
    let v0 = overnight_variance(&bars, false).unwrap();
    assert!(z(v0, sigma * sigma * f, &o2).abs() < 3.0, "V0' {v0}");

    // sample variance of log(C/O): its SE is that of the mean squared deviation
    let c: Vec<f64> = bars.iter().map(OhlcBar::log_close_open).collect();
    let cm = c.iter().sum::<f64>() / c.len() as f64;
    let dev2: Vec<f64> = c.iter().map(|x| (x - cm) * (x - cm)).collect();
    let vc = close_open_variance(&bars).unwrap();
    assert!(z(vc, sigma * sigma * (1.0 - f), &dev2).abs() < 3.0, "V_C {vc}");

    let rs_terms: Vec<f64> = bars
        .iter()
        .map(|b| {
            let (u, d, c) = ((b.high / b.open).ln(), (b.low / b.open).ln(), b.log_close_open());
            u * (u - c) + d * (d - c)
        })
        .collect();
    let rs = rogers_satchell(&bars).unwrap();
    assert!(z(rs, sigma * sigma * (1.0 - f), &rs_terms).abs() < 3.0, "V_RS {rs}");
}

#[test]
fn drift_moves_k2_but_not_the_volatility() {
    let sigma = day_sigma(0.25);
    // same seed: the shocks are shared and only the drift differs
    let est: Vec<(f64, f64)> = [-0.5, 0.0, 0.5]
        .into_iter()
        .map(|mu| {
            let e = estimate(&sim(mu / 252.0, sigma, 0.3, 2_000, 33)).unwrap();
            (e.moments.k2, e.v_z.sqrt())
        })
        .collect();
    assert!(est[0].0 < est[1].0 && est[1].0 < est[2].0);
    for (_, s) in &est {
        assert!((s / est[1].1 - 1.0).abs() < 2e-3, "{s} vs {}", est[1].1);
    }
}

#[test]
fn estimation_error_shrinks_like_root_n() {
    let sigma = day_sigma(0.25);
    let rms = |n: usize| {
        let errs: Vec<f64> = (0..16)
            .map(|r| {
                let e = estimate(&sim(0.0, sigma, 0.3, n, 1_000 + r)).unwrap();
                e.v_z / (sigma * sigma) - 1.0
            })
            .collect();
        (errs.iter().map(|e| e * e).sum::<f64>() / errs.len() as f64).sqrt()
    };
    let (small, large) = (rms(250), rms(4_000));
    // √16 = 4 in expectation; the bound leaves room for 16-replicate noise
    let ratio = small / large;
    assert!((2.0..8.0).contains(&ratio), "rms {small} at 250 vs {large} at 4000");
}

fn bar(d: NaiveDate, o: f64, h: f64, l: f64, c: f64) -> OhlcBar {
    OhlcBar::new(d, o, h, l, c).unwrap()
}

fn sample_bars() -> Vec<OhlcBar> {
    sim(0.1 / 252.0, day_sigma(0.3), 0.2, 80, 34)
}

#[test]
fn scale_equivariance() {
    let bars = sample_bars();
    let scaled: Vec<OhlcBar> = bars
        .iter()
        .map(|b| bar(b.date, 3.7 * b.open, 3.7 * b.high, 3.7 * b.low, 3.7 * b.close))
        .collect();
    let (a, b) = (estimate(&bars).unwrap(), estimate(&scaled).unwrap());
    for (x, y) in [
        (a.v_z, b.v_z),
        (a.v_intraday, b.v_intraday),
        (a.v_yz, b.v_yz),
        (a.v_rs, b.v_rs),
        (a.v_overnight_noncentered, b.v_overnight_noncentered),
    ] {
        assert!((x - y).abs() <= 1e-12 * x, "{x} vs {y}");
    }
}

#[test]
fn trending_level_leaves_v_z_unchanged() {
    let bars = sample_bars();
    let lambda: f64 = 0.004;
    let trended: Vec<OhlcBar> = bars
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let g = (lambda * i as f64).exp();
            bar(b.date, g * b.open, g * b.high, g * b.low, g * b.close)
        })
        .collect();
    let (a, b) = (estimate(&bars).unwrap(), estimate(&trended).unwrap());
    assert!((a.v_z - b.v_z).abs() <= 1e-10 * a.v_z);
    assert!((a.v_overnight_noncentered - b.v_overnight_noncentered).abs() > 1e-7);
}

#[test]
fn constant_bars_give_constant_estimates() {
    let start = NaiveDate::from_ymd_opt(2010, 1, 4).unwrap();
    let mut level = 50.0;
    let mut bars = Vec::new();
    for i in 0..40 {
        bars.push(bar(
            start + chrono::Days::new(i),
            level,
            level * 1.02,
            level * 0.99,
            level * 1.005,
        ));
        level *= 1.005 * 1.001;
    }
    let rows = rolling_estimate(&bars, 20, &EstimatorConfig::default()).unwrap();
    assert_eq!(rows.len(), 21);
    for (_, e) in &rows {
        assert!((e.v_z - rows[0].1.v_z).abs() <= 1e-12 * rows[0].1.v_z);
    }
    let all = rolling_estimate(&bars, bars.len(), &EstimatorConfig::default()).unwrap();
    assert_eq!(all.len(), 1);
    assert_eq!(all[0].1, estimate(&bars).unwrap());
}

#[test]
fn estimate_fields_are_consistent() {
    let e = estimate(&sample_bars()).unwrap();
    assert_eq!(e.v_z, e.v_overnight + e.v_intraday);
    assert!((e.sigma_annual - (252.0 * e.v_z).sqrt()).abs() < 1e-15);
    assert!((e.sigma_annual_intraday - (252.0 * e.v_intraday).sqrt()).abs() < 1e-15);
    for v in [
        e.v_intraday,
        e.v_overnight,
        e.v_overnight_noncentered,
        e.v_close_open,
        e.v_rs,
        e.v_yz,
    ] {
        assert!(v >= 0.0);
    }
}
