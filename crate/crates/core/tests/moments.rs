use bbmlab::moments::{
    bridge_below_exact, chord_bridge_probability, chord_bridge_probability_steps, exceedance_level,
    expected_exceedance, independent_median, rotation_census, RotationSample,
};
use bbmlab::rng::rng_from_seed;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, Geometric, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};

fn phi(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

#[test]
fn exceedance_matches_gaussian_tail() {
    for &(t, q) in &[(1.0, 0.0), (4.0, 3.0), (10.0, 14.0), (25.0, -5.0)] {
        let want = f64::exp(t) * (1.0 - phi(q / f64::sqrt(t)));
        let got = expected_exceedance(t, q).unwrap();
        assert!((got / want - 1.0).abs() < 1e-10, "t {t} q {q}: {got} vs {want}");
    }
    // far tail, where 1 - Phi underflows in double precision: compare logs with Mills' ratio
    let (t, q) = (400.0f64, 1000.0f64);
    let z = q / t.sqrt();
    let ln_want = t - z * z / 2.0 - (z * (2.0 * std::f64::consts::PI).sqrt()).ln() + (1.0 - 1.0 / (z * z)).ln();
    let ln_got = bbmlab::moments::ln_expected_exceedance(t, q).unwrap();
    assert!((ln_got - ln_want).abs() < 0.01, "{ln_got} vs {ln_want}");
}

#[test]
fn exceedance_level_inverts() {
    for &t in &[3.0, 10.0, 50.0] {
        for &level in &[0.1, 1.0, 10.0] {
            let q = exceedance_level(t, level).unwrap();
            assert!((expected_exceedance(t, q).unwrap() / level - 1.0).abs() < 1e-8);
        }
    }
    assert!(exceedance_level(5.0, 0.0).is_err());
    // the total mass e^t caps every level
    assert!(exceedance_level(2.0, 10.0).is_err());
}

fn median_by_bisection(t: f64) -> f64 {
    // P(max <= q) = p F / (1 - (1 - p) F), N geometric on {1, 2, ..} with p = e^-t
    let p = (-t).exp();
    let cdf = |q: f64| {
        let f = phi(q / t.sqrt());
        p * f / (1.0 - (1.0 - p) * f)
    };
    let (mut lo, mut hi) = (-10.0 * t.sqrt(), 10.0 * t.sqrt());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < 0.5 {
            lo = mid
        } else {
            hi = mid
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn independent_median_matches_closed_form() {
    for &t in &[1.0, 3.0, 8.0, 15.0] {
        let m = independent_median(t).unwrap();
        assert!((m - median_by_bisection(t)).abs() < 1e-6, "t {t}");
    }
    assert!(independent_median(0.0).is_err());
}

#[test]
fn independent_median_by_simulation() {
    let t: f64 = 3.0;
    let mut rng = rng_from_seed(7);
    let geo = Geometric::new((-t).exp()).unwrap();
    let mut maxes: Vec<f64> = (0..20_000)
        .map(|_| {
            let n = geo.sample(&mut rng) + 1;
            (0..n).map(|_| t.sqrt() * rng.sample::<f64, _>(StandardNormal)).fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    maxes.sort_by(f64::total_cmp);
    let m = independent_median(t).unwrap();
    assert!(maxes[9800] < m && m < maxes[10200], "{m} outside [{}, {}]", maxes[9800], maxes[10200]);
}

#[test]
fn independent_median_is_monotone_and_bracketed() {
    let ts: Vec<f64> = (1..=40).map(|i| i as f64 * 2.5).collect();
    let ms: Vec<f64> = ts.iter().map(|&t| independent_median(t).unwrap()).collect();
    assert!(ms.windows(2).all(|w| w[0] < w[1]));
    for (&t, &m) in ts.iter().zip(&ms) {
        assert!(exceedance_level(t, 10.0).unwrap() < m && m < exceedance_level(t, 0.1).unwrap(), "t {t}");
    }
}

proptest! {
    #[test]
    fn exactly_one_rotation_stays_below_chord(xs in prop::collection::vec(-5.0f64..5.0, 2..60)) {
        match rotation_census(&RotationSample::new(xs, 0.0).unwrap()) {
            Ok(n) => prop_assert_eq!(n, 1),
            Err(e) => prop_assert_eq!(e, bbmlab::Error::ChordTie),
        }
    }
}

#[test]
fn rotation_rejects_short_or_infinite() {
    assert!(RotationSample::new(vec![1.0], 0.0).is_err());
    assert!(RotationSample::new(vec![1.0, f64::NAN], 0.0).is_err());
}

#[test]
fn chord_bridge_matches_closed_form() {
    for &(t, a) in &[(1.0, 0.5), (10.0, 1.0), (10.0, 3.0)] {
        let exact = t * bridge_below_exact(t, a);
        for steps in [1, 4, 32] {
            let e = chord_bridge_probability_steps(t, a, 20_000, steps, 3).unwrap();
            // one step is deterministic, so allow rounding
            assert!(e.contains(exact, 4.0) || (e.mean - exact).abs() < 1e-9, "t {t} a {a} steps {steps}: {} vs {exact}", e.mean);
        }
    }
    let e = chord_bridge_probability(10.0, 1.0, 1000, 1).unwrap();
    assert!(e.mean > 0.0 && e.mean < 10.0);
    assert_eq!(bridge_below_exact(5.0, -1.0), 0.0);
}

#[test]
fn chord_bridge_probability_vanishes_linearly_in_offset() {
    // 1 - exp(-2 a^2 / t) ~ 2 a^2 / t for small a
    let t = 20.0;
    for &a in &[1e-3, 1e-2] {
        assert!((bridge_below_exact(t, a) / (2.0 * a * a / t) - 1.0).abs() < 1e-3);
    }
}
