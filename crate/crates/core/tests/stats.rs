use std::f64::consts::SQRT_2;

use bbmlab::extremal::{ppp_mean, sample_ppp};
use bbmlab::rng::rng_from_seed;
use bbmlab::stats::{chi_square_gof, gumbel_mixture_check, ks_distance, ks_to_cdf, poisson_window_test, tail_slope, Ecdf};
use bbmlab::Normalization;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma, Poisson, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};

fn sample() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, 1..50)
}

proptest! {
    #[test]
    fn ks_is_a_metric(a in sample(), b in sample(), c in sample()) {
        let (a, b, c) = (Ecdf::new(a).unwrap(), Ecdf::new(b).unwrap(), Ecdf::new(c).unwrap());
        let ab = ks_distance(&a, &b);
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(ab, ks_distance(&b, &a));
        prop_assert_eq!(ks_distance(&a, &a), 0.0);
        prop_assert!(ab <= ks_distance(&a, &c) + ks_distance(&c, &b) + 1e-12);
    }

    #[test]
    fn ks_is_shift_invariant(a in sample(), b in sample(), s in -5.0f64..5.0) {
        let d = ks_distance(&Ecdf::new(a.clone()).unwrap(), &Ecdf::new(b.clone()).unwrap());
        let sh = |v: Vec<f64>| Ecdf::new(v.into_iter().map(|x| x + s).collect()).unwrap();
        prop_assert!((d - ks_distance(&sh(a), &sh(b))).abs() < 1e-12);
    }

    #[test]
    fn ecdf_quantile_inverts(a in sample(), p in 0.01f64..0.99) {
        let e = Ecdf::new(a).unwrap();
        let q = e.quantile(p);
        prop_assert!(e.eval(q) >= p - 1e-12);
    }
}

fn normals(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

#[test]
fn split_halves_are_close() {
    let xs = normals(40_000, 1);
    let (a, b) = xs.split_at(20_000);
    assert!(ks_distance(&Ecdf::new(a.to_vec()).unwrap(), &Ecdf::new(b.to_vec()).unwrap()) < 0.04);
}

#[test]
fn ks_to_exact_cdf() {
    let e = Ecdf::new(normals(20_000, 2)).unwrap();
    let n = Normal::standard();
    assert!(ks_to_cdf(&e, |x| n.cdf(x)) < 0.015);
    assert!(ks_to_cdf(&e, |x| n.cdf(x - 0.5)) > 0.15);
}

#[test]
fn tail_slope_of_exponential() {
    let mut rng = rng_from_seed(3);
    let d = Exp::new(SQRT_2).unwrap();
    let xs: Vec<f64> = (0..200_000).map(|_| d.sample(&mut rng)).collect();
    let s = tail_slope(&xs, (0.5, 4.0), false).unwrap();
    assert!((s.slope + SQRT_2).abs() < 4.0 * s.stderr + 0.02, "{} +- {}", s.slope, s.stderr);
    assert!(s.stderr > 0.0);
}

#[test]
fn tail_slope_divided_by_x() {
    // density ~ x e^{-sqrt2 x}: S(x) = (1 + sqrt2 x) e^{-sqrt2 x}, so ln(S/x) has slope -sqrt2 + O(1/x^2)
    let mut rng = rng_from_seed(4);
    let d = Gamma::new(2.0, 1.0 / SQRT_2).unwrap();
    let xs: Vec<f64> = (0..400_000).map(|_| d.sample(&mut rng)).collect();
    let s = tail_slope(&xs, (3.0, 7.0), true).unwrap();
    assert!((s.slope + SQRT_2).abs() < 4.0 * s.stderr + 0.05, "{} +- {}", s.slope, s.stderr);
}

#[test]
fn tail_slope_refuses_thin_tails() {
    let xs = normals(1000, 5);
    assert!(tail_slope(&xs, (3.5, 5.0), false).is_err());
    assert!(tail_slope(&xs, (-1.0, 1.0), true).is_err());
    assert!(tail_slope(&xs, (1.0, 1.0), false).is_err());
}

fn gumbel_mixture(c: f64, n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    // M = (ln(cZ) - ln E) / sqrt2 has P(M <= x | Z) = exp(-c Z e^{-sqrt2 x})
    let mut rng = rng_from_seed(seed);
    let e = Exp::new(1.0).unwrap();
    let z: Vec<f64> = (0..n).map(|_| e.sample(&mut rng) + e.sample(&mut rng)).collect();
    let m: Vec<f64> = z.iter().map(|&zi| ((c * zi).ln() - e.sample(&mut rng).ln()) / SQRT_2).collect();
    (m, z)
}

#[test]
fn gumbel_mixture_recovers_c() {
    let c = 0.7;
    let (m, z) = gumbel_mixture(c, 20_000, 6);
    let fit = gumbel_mixture_check(&m, &z).unwrap();
    assert!(fit.ks < 0.02, "ks {}", fit.ks);
    assert!((fit.fitted_c / c - 1.0).abs() < 0.1, "c {}", fit.fitted_c);
}

#[test]
fn gumbel_fit_scales_inversely_with_z() {
    let (m, z) = gumbel_mixture(1.0, 5000, 7);
    let a = gumbel_mixture_check(&m, &z).unwrap();
    let z3: Vec<f64> = z.iter().map(|v| 3.0 * v).collect();
    let b = gumbel_mixture_check(&m, &z3).unwrap();
    assert!((a.fitted_c / b.fitted_c / 3.0 - 1.0).abs() < 1e-6);
    assert!((a.ks - b.ks).abs() < 1e-9);
    assert!(gumbel_mixture_check(&m, &vec![-1.0; 5000]).is_err());
}

#[test]
fn chi_square_exact_fit() {
    let e = [10.0, 20.0, 30.0];
    assert!((chi_square_gof(&e, &e, 0).unwrap() - 1.0).abs() < 1e-12);
    assert!(chi_square_gof(&[1.0, 2.0], &[0.5, 2.5], 0).is_err());
    assert!(chi_square_gof(&[1.0], &[1.0, 2.0], 0).is_err());
}

#[test]
fn poisson_p_values_are_uniform() {
    let means = [0.5, 1.0, 2.0, 4.0, 8.0];
    let mut rng = rng_from_seed(8);
    let ps: Vec<f64> = (0..300)
        .map(|_| {
            let counts: Vec<Vec<u64>> = (0..400)
                .map(|_| means.iter().map(|&m| Poisson::new(m).unwrap().sample(&mut rng) as u64).collect())
                .collect();
            poisson_window_test(&counts, &means).unwrap()
        })
        .collect();
    // the chi-square p-value is only asymptotically uniform
    let d = ks_to_cdf(&Ecdf::new(ps).unwrap(), |p| p.clamp(0.0, 1.0));
    assert!(d < 0.12, "KS to uniform {d}");
}

#[test]
fn backbone_window_counts_are_poisson() {
    let norm = Normalization::STANDARD;
    let edges = [-2.0, -1.0, 0.0, 1.0, 2.0, 3.0];
    let means: Vec<f64> = edges.windows(2).map(|w| ppp_mean((w[0], w[1]), &norm).unwrap()).collect();
    let counts: Vec<Vec<u64>> = (0..2000)
        .map(|s| {
            let p = sample_ppp((edges[0], edges[5]), &norm, 100 + s).unwrap();
            edges.windows(2).map(|w| p.atoms().iter().filter(|&&x| x >= w[0] && x < w[1]).count() as u64).collect()
        })
        .collect();
    let p = poisson_window_test(&counts, &means).unwrap();
    assert!(p > 0.01, "p = {p}");
}

#[test]
fn poisson_test_preconditions() {
    let counts = vec![vec![1u64; 5]; 100];
    assert!(poisson_window_test(&counts, &[1.0; 5]).is_err());
    let counts = vec![vec![1u64; 4]; 300];
    assert!(poisson_window_test(&counts, &[1.0; 4]).is_err());
}
