use std::f64::consts::PI;

use proptest::prelude::*;
use rangevol::pricing::*;
use rangevol::quadrature::{integrate, QuadConfig};

fn call(s: f64, k: f64, r: f64, v: f64, t: f64) -> f64 {
    bs_call(&PricingInputs::new(s, k, r, v, t).unwrap()).unwrap()
}

/// `e^{-rτ} E[max(±(S_T - K), 0)]` under the lognormal law, by quadrature.
fn discounted_payoff(s: f64, k: f64, r: f64, v: f64, t: f64, call: bool) -> f64 {
    let sd = v * t.sqrt();
    let m = (r - 0.5 * v * v) * t;
    let zk = ((k / s).ln() - m) / sd;
    let density = |z: f64| (-0.5 * z * z).exp() / (2.0 * PI).sqrt();
    let cfg = QuadConfig::with_abs_tol(1e-12);
    let value = if call {
        integrate(
            |z| (s * (m + sd * z).exp() - k) * density(z),
            zk,
            zk.max(0.0) + 16.0 + sd,
            &cfg,
        )
        .value
    } else {
        integrate(
            |z| (k - s * (m + sd * z).exp()) * density(z),
            zk.min(0.0) - 16.0,
            zk,
            &cfg,
        )
        .value
    };
    (-r * t).exp() * value
}

#[test]
fn textbook_point_matches_quadrature_and_parity() {
    let c = call(100.0, 100.0, 0.05, 0.2, 1.0);
    assert!((c - discounted_payoff(100.0, 100.0, 0.05, 0.2, 1.0, true)).abs() < 1e-6);
    let p = discounted_payoff(100.0, 100.0, 0.05, 0.2, 1.0, false);
    assert!((c - p - (100.0 - 100.0 * (-0.05f64).exp())).abs() < 1e-6);
}

#[test]
fn limits() {
    assert_eq!(call(100.0, 100.0, 0.0, 0.7, 0.0), 0.0);
    assert!((call(200.0, 100.0, 0.05, 1e-4, 1.0) - 104.877).abs() < 1e-3);
    // far out of the money with almost no time left
    assert_eq!(call(50.0, 100.0, 0.01, 0.2, 1e-6), 0.0);
}

/// Strict increase is only observable where the price is away from both
/// bounds by more than rounding.
fn interior(s: f64, k: f64, r: f64, v: f64, t: f64) -> bool {
    let c = call(s, k, r, v, t);
    let lower = (s - k * (-r * t).exp()).max(0.0);
    c - lower > 1e-6 * s && s - c > 1e-6 * s
}

fn slack(s: f64, k: f64) -> f64 {
    8.0 * f64::EPSILON * s.max(k)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn stays_within_no_arbitrage_bounds(
        s in 0.01..5_000.0f64, k in 0.01..5_000.0f64, r in -0.05..0.3f64, v in 1e-3..3.0f64, t in 0.0..10.0f64,
    ) {
        let c = call(s, k, r, v, t);
        prop_assert!(c.is_finite());
        prop_assert!(c >= (s - k * (-r * t).exp()).max(0.0) && c <= s, "C={c}");
    }

    #[test]
    fn increases_with_spot_vol_and_maturity(
        s in 1.0..500.0f64, k in 1.0..500.0f64, r in 0.0..0.2f64, v in 0.01..2.0f64, t in 0.01..5.0f64,
    ) {
        let c = call(s, k, r, v, t);
        let strict = interior(s, k, r, v, t);
        for (bumped, name) in [
            (call(s * 1.01, k, r, v, t), "spot"),
            (call(s, k, r, v * 1.01, t), "vol"),
            (call(s, k, r, v, t * 1.01), "tau"),
        ] {
            prop_assert!(bumped >= c - slack(s, k), "{name}: {bumped} < {c}");
            if strict {
                prop_assert!(bumped > c, "{name} not strictly increasing at {c}");
            }
        }
    }

    #[test]
    fn decreases_with_strike(
        s in 1.0..500.0f64, k in 1.0..500.0f64, r in -0.05..0.2f64, v in 0.01..2.0f64, t in 0.01..5.0f64,
    ) {
        let c = call(s, k, r, v, t);
        let bumped = call(s, k * 1.01, r, v, t);
        prop_assert!(bumped <= c + slack(s, k));
        if interior(s, k, r, v, t) {
            prop_assert!(bumped < c);
        }
    }
}

#[test]
fn invalid_inputs_are_rejected() {
    for (s, k, v, t) in [
        (-1.0, 100.0, 0.2, 1.0),
        (100.0, 0.0, 0.2, 1.0),
        (100.0, 100.0, -0.2, 1.0),
        (100.0, 100.0, 0.2, -0.1),
    ] {
        assert!(PricingInputs::new(s, k, 0.0, v, t).is_err());
        assert!(bs_call(&PricingInputs {
            spot: s,
            strike: k,
            rate: 0.0,
            vol: v,
            tau: t
        })
        .is_err());
    }
}
