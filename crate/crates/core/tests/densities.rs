use std::f64::consts::PI;

use rangevol::abm_range::*;
use rangevol::quadrature::{integrate, integrate_2d, QuadConfig};

fn grid() -> impl Iterator<Item = AbmParams> {
    [-0.5, 0.0, 0.5].into_iter().flat_map(|mu| {
        [0.1, 1.0].into_iter().flat_map(move |sigma| {
            [0.25, 1.0, 4.0]
                .into_iter()
                .map(move |t| AbmParams::new(mu, sigma, t).unwrap())
        })
    })
}

fn p(mu: f64, sigma: f64, t: f64) -> AbmParams {
    AbmParams::new(mu, sigma, t).unwrap()
}

#[test]
fn expected_range_closed_forms() {
    assert!((expected_range(&p(0.0, 1.0, 1.0)).unwrap() - (8.0 / PI).sqrt()).abs() < 1e-15);
    assert!((half_range_mean(&p(0.0, 1.0, 1.0)).unwrap() - (2.0 / PI).sqrt()).abs() < 1e-15);
    assert!((half_range_density(&p(0.0, 1.0, 1.0), 0.0).unwrap() - 2.0 / (2.0 * PI).sqrt()).abs() < 1e-15);
}

#[test]
fn expected_range_is_even_in_drift() {
    for q in grid() {
        let a = expected_range(&q).unwrap();
        let b = expected_range(&q.mirrored()).unwrap();
        assert!((a - b).abs() <= 1e-12 * a, "{q:?}");
    }
}

#[test]
fn expected_range_grows_with_drift_and_volatility() {
    let mut last = 0.0;
    for mu in [0.0, 0.1, 0.3, 1.0, 3.0] {
        let er = expected_range(&p(mu, 0.5, 1.0)).unwrap();
        assert!(er > last && er >= mu);
        last = er;
    }
    let mut last = 0.0;
    for sigma in [0.01, 0.1, 0.5, 2.0] {
        let er = expected_range(&p(0.3, sigma, 1.0)).unwrap();
        assert!(er > last);
        last = er;
    }
}

#[test]
fn h_moment_composes_to_expected_range() {
    // μ√t/σ = 0.5 and σ²/μ = 0.18 at μ = 0.045, σ = 0.09, t = 1
    let q = p(0.045, 0.09, 1.0);
    assert!((h_moment(0.5, 0.18) - expected_range(&q).unwrap()).abs() < 1e-12);
    assert_eq!(h_moment(0.0, 7.0), 0.0);
    assert!((h_moment(-1.3, -0.4) - h_moment(1.3, 0.4)).abs() < 1e-15);
}

#[test]
fn half_range_first_moment_matches_mean() {
    for q in grid() {
        let w = support_window(&q).1;
        let m = integrate(
            |c| c * half_range_density(&q, c).unwrap(),
            0.0,
            w,
            &QuadConfig::with_abs_tol(1e-12),
        )
        .value;
        let want = half_range_mean(&q).unwrap();
        assert!((m - want).abs() < 1e-8, "{q:?}: {m} vs {want}");
    }
}

#[test]
fn joint_max_terminal_density_normalizes() {
    let q = p(0.0, 1.0, 1.0);
    // b ≥ max(a, 0), over a window carrying all but ~1e-15 of the mass
    let mass = integrate_2d(
        |b, a| joint_density_max(&q, a, b).unwrap(),
        0.0,
        9.0,
        |b| b - 18.0,
        |b| b,
        &QuadConfig::with_abs_tol(1e-11),
    );
    assert!((mass.value - 1.0).abs() < 1e-8, "{}", mass.value);
}

#[test]
fn joint_max_min_mirrors_under_drift_reversal() {
    let ctl = SeriesControl::default();
    let q = p(0.2, 0.5, 1.0);
    for (a, b) in [(-0.3, 0.4), (-0.1, 1.2), (-0.8, 0.05)] {
        let f = joint_density_max_min(&q, a, b, &ctl).unwrap();
        let g = joint_density_max_min(&q.mirrored(), -b, -a, &ctl).unwrap();
        assert!((f - g).abs() <= 1e-12 * f.abs().max(1e-300), "({a}, {b}): {f} vs {g}");
    }
}

#[test]
fn joint_max_min_integrates_to_max_marginal() {
    let ctl = SeriesControl::default();
    for q in [p(0.0, 1.0, 1.0), p(0.3, 0.5, 1.0), p(-0.5, 1.0, 0.25)] {
        let w = support_window(&q).1;
        for b in [0.1, 0.4, 1.0] {
            let m = integrate(
                |a| joint_density_max_min(&q, a, b, &ctl).unwrap(),
                -w,
                0.0,
                &QuadConfig::with_abs_tol(1e-11),
            );
            let want = max_marginal_density(&q, b).unwrap();
            assert!((m.value - want).abs() < 1e-6, "{q:?} b={b}: {} vs {want}", m.value);
        }
    }
}

#[test]
fn series_stable_under_doubled_terms() {
    let ctl = SeriesControl::default();
    let wide = SeriesControl { max_terms: 200, ..ctl };
    for q in [p(0.2, 0.5, 1.0), p(0.0, 1.0, 1.0), p(-0.5, 0.1, 4.0)] {
        let s = q.scale();
        for (a, b) in [(-0.3 * s, 0.4 * s), (-2.0 * s, 5.0 * s), (-0.05 * s, 0.05 * s)] {
            let x = joint_density_max_min(&q, a, b, &ctl).unwrap();
            let y = joint_density_max_min(&q, a, b, &wide).unwrap();
            assert!(
                (x - y).abs() <= 1e-12 * x.abs().max(f64::MIN_POSITIVE),
                "{q:?} ({a}, {b})"
            );
        }
        for r in [0.1 * s, 1.0 * s, 5.0 * s] {
            let x = range_density(&q, r, &ctl).unwrap();
            let y = range_density(&q, r, &wide).unwrap();
            assert!((x - y).abs() <= 1e-12 * x.abs().max(f64::MIN_POSITIVE), "{q:?} r={r}");
        }
    }
}

#[test]
fn driftless_range_density_moments() {
    let ctl = SeriesControl::default();
    let q = p(0.0, 1.0, 1.0);
    let cfg = QuadConfig::with_abs_tol(1e-11);
    let mass = integrate(|r| range_density(&q, r, &ctl).unwrap(), 0.0, 9.0, &cfg).value;
    let mean = integrate(|r| r * range_density(&q, r, &ctl).unwrap(), 0.0, 9.0, &cfg).value;
    assert!((mass - 1.0).abs() < 1e-6);
    assert!((mean - (8.0 / PI).sqrt()).abs() < 1e-6);
    let oracle_mass = integrate(
        |r| range_density_quadrature(&q, r, &ctl).unwrap(),
        0.0,
        9.0,
        &QuadConfig::with_abs_tol(1e-8),
    );
    assert!((oracle_mass.value - 1.0).abs() < 1e-5);
    assert!((range_density(&q, 1.0, &ctl).unwrap() - range_density_quadrature(&q, 1.0, &ctl).unwrap()).abs() < 1e-6);
    assert!(range_density_quadrature(&q, 1e-3, &ctl).unwrap() < 1e-12);
}

#[test]
fn trusted_range_density_reproduces_expected_range() {
    let ctl = SeriesControl::default();
    for q in [p(0.3, 0.25, 1.0), p(-0.5, 1.0, 1.0), p(0.5, 0.1, 4.0)] {
        let w = support_window(&q).1;
        let mean = integrate(
            |r| r * range_density_trusted(&q, r, &ctl).unwrap(),
            0.0,
            w,
            &QuadConfig::with_abs_tol(1e-9),
        );
        let want = expected_range(&q).unwrap();
        assert!(
            (mean.value - want).abs() < 1e-6 * want.max(1.0),
            "{q:?}: {} vs {want}",
            mean.value
        );
    }
}

#[test]
fn confined_density_reduces_to_free_density() {
    let ctl = SeriesControl::default();
    let d = confined_density(&p(0.0, 1.0, 1.0), 0.0, -10.0, 10.0, &ctl).unwrap();
    assert!((d - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-12);
    let q = p(0.0, 1.0, 1.0);
    let feller = confined_density(&q, 0.3, -1.0, 1.0, &ctl).unwrap();
    let billingsley = confined_density_billingsley(&q, 0.3, -1.0, 1.0, &ctl).unwrap();
    assert!((feller - billingsley).abs() < 1e-12);
}

#[test]
fn domain_errors() {
    let ctl = SeriesControl::default();
    let q = p(0.0, 1.0, 1.0);
    assert!(joint_density_max_min(&q, 0.0, 1.0, &ctl).is_err());
    assert!(joint_density_max_min(&q, -1.0, 0.0, &ctl).is_err());
    assert!(confined_density(&q, 2.0, -1.0, 1.0, &ctl).is_err());
    assert_eq!(range_density(&q, 0.0, &ctl).unwrap(), 0.0);
    assert_eq!(half_range_density(&q, -0.5).unwrap(), 0.0);
    assert_eq!(joint_density_max(&q, 0.5, -0.1).unwrap(), 0.0);
}
