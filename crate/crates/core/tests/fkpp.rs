use std::f64::consts::SQRT_2;

use bbmlab::fkpp::{
    c_integral, evolve, evolve_to, extrapolate_inverse_sqrt, initial_field, laplace_prediction, median_front, psi,
    tail_constant_fit, wave_profile, windowed_c_integral, Grid, InitialCondition, Scheme, Solver, TAIL_WINDOW,
};
use bbmlab::model::standard_centering;
use bbmlab::Phi;

fn heaviside() -> InitialCondition {
    InitialCondition::Heaviside(0.0)
}

#[test]
fn one_step_stays_in_unit_interval() {
    let g = Grid::default();
    let f = evolve_to(&heaviside(), g.dt, g).unwrap();
    assert!(f.values.iter().all(|&u| (0.0..=1.0).contains(&u)));
    let f0 = initial_field(&heaviside(), g);
    assert!(f.values.iter().zip(&f0.values).any(|(a, b)| a != b));
}

#[test]
fn explicit_scheme_agrees_with_crank_nicolson() {
    let g = Grid::new(-30.0, 50.0, 0.1, 0.004).unwrap();
    let mut ex = Solver::new(g);
    ex.scheme = Scheme::Explicit;
    let a = ex.evolve(&heaviside(), 5.0, &[5.0]).unwrap();
    let b = Solver::new(g).evolve(&heaviside(), 5.0, &[5.0]).unwrap();
    let (ma, mb) = (median_front(&a[0]).unwrap(), median_front(&b[0]).unwrap());
    assert!((ma - mb).abs() < 0.02, "{ma} vs {mb}");
    let mut too_big = Solver::new(Grid::new(-30.0, 50.0, 0.1, 0.05).unwrap());
    too_big.scheme = Scheme::Explicit;
    assert!(too_big.evolve(&heaviside(), 1.0, &[1.0]).is_err());
}

#[test]
fn median_tracks_initial_offset() {
    // fronts started a distance c apart stay c apart
    let c = 1.5;
    let g = Grid::new(-40.0, 80.0, 0.05, 0.025).unwrap();
    let times = [10.0, 50.0, 200.0];
    let a = evolve(&heaviside(), 200.0, g, &times).unwrap();
    let b = evolve(&InitialCondition::Heaviside(c), 200.0, g, &times).unwrap();
    let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| median_front(y).unwrap() - median_front(x).unwrap()).collect();
    assert!((d[2] - c).abs() < 0.01, "{d:?}");
    assert!((d[2] - c).abs() <= (d[0] - c).abs() + 1e-9);
}

#[test]
fn median_is_where_u_is_one_half() {
    let g = Grid::default();
    let f = evolve_to(&heaviside(), 8.0, g).unwrap();
    let med = median_front(&f).unwrap();
    assert!((f.at_fixed(med) - 0.5).abs() < 1e-9);
    assert_eq!(median_front(&initial_field(&heaviside(), g)).unwrap(), 0.0);
}

#[test]
fn front_speed() {
    let g = Grid::new(-60.0, 140.0, 0.05, 0.025).unwrap();
    let f = evolve(&heaviside(), 2000.0, g, &[1000.0, 2000.0]).unwrap();
    let v = (median_front(&f[1]).unwrap() - median_front(&f[0]).unwrap()) / 1000.0;
    assert!((v / SQRT_2 - 1.0).abs() < 0.01, "speed {v}");
}

#[test]
fn grid_refinement_is_second_order() {
    let t = 20.0;
    let g0 = Grid::new(-30.0, 60.0, 0.08, 0.04).unwrap();
    let meds: Vec<f64> = [g0, g0.refined(), g0.refined().refined()]
        .iter()
        .map(|&g| median_front(&evolve_to(&heaviside(), t, g).unwrap()).unwrap())
        .collect();
    let order = ((meds[0] - meds[1]) / (meds[1] - meds[2])).abs().log2();
    assert!(order >= 1.8, "medians {meds:?}, order {order}");
}

#[test]
fn comparison_principle() {
    // g1 <= g2 pointwise stays ordered
    let delta = 1.0;
    let low = InitialCondition::Heaviside(-delta - 0.5);
    let high = InitialCondition::TruncatedExp(Phi::tent(0.0, 3.0, 2.0), delta);
    let g = Grid::new(-30.0, 60.0, 0.05, 0.025).unwrap();
    let f0 = (initial_field(&low, g), initial_field(&high, g));
    assert!(f0.0.values.iter().zip(&f0.1.values).all(|(a, b)| a <= b));
    let times = [0.5, 2.0, 8.0];
    let a = evolve(&low, 8.0, g, &times).unwrap();
    let b = evolve(&high, 8.0, g, &times).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!(x.values.iter().zip(&y.values).all(|(u, v)| *u <= v + 1e-12));
    }
}

#[test]
fn wave_profile_shape_and_tail() {
    let xs: Vec<f64> = (0..=800).map(|i| -20.0 + 0.05 * i as f64).collect();
    let w = wave_profile(&xs, 1e-10).unwrap();
    assert!(w.w.windows(2).all(|p| p[0] <= p[1] + 1e-12));
    assert!((w.eval(0.0) - 0.5).abs() < 1e-6);
    // log(1 - w) + sqrt2 x - ln x settles for large x, with an O(1/x) correction
    let k = |x: f64| w.eval_tail(x).ln() + SQRT_2 * x - x.ln();
    let (a, b, c) = (k(6.0), k(10.0), k(14.0));
    assert!((c - b).abs() < 0.5 * (b - a).abs() && (c - b).abs() < 0.1, "{a} {b} {c}");
}

#[test]
fn recentred_front_approaches_wave() {
    // u is a decreasing front, w an increasing distribution function: compare u with 1 - w
    let xs: Vec<f64> = (0..=1200).map(|i| -30.0 + 0.05 * i as f64).collect();
    let w = wave_profile(&xs, 1e-10).unwrap();
    let times = [50.0, 200.0, 800.0];
    let fields = evolve(&heaviside(), 800.0, Grid::new(-60.0, 140.0, 0.05, 0.025).unwrap(), &times).unwrap();
    let dist: Vec<f64> = fields
        .iter()
        .map(|f| {
            let med = median_front(f).unwrap();
            (-400..=400)
                .map(|j| {
                    let x = j as f64 * 0.05;
                    (f.at_fixed(med + x) - (1.0 - w.eval(x))).abs()
                })
                .fold(0.0, f64::max)
        })
        .collect();
    assert!(dist[0] > dist[1] && dist[1] > dist[2], "{dist:?}");
}

#[test]
fn c_integral_windows() {
    let r = 40.0;
    let g = Grid::new(-60.0, 260.0, 0.02, 0.01).unwrap();
    let f = evolve_to(&heaviside(), r, g).unwrap();
    let full = c_integral(&f).unwrap();
    assert!(full > 0.0);
    assert!(windowed_c_integral(&f, 0.1, 10.0).unwrap() >= 0.9 * full);
    assert!(windowed_c_integral(&f, 20.0, 40.0).unwrap() < 0.01 * full);
    let all = windowed_c_integral(&f, 1e-9, 1e9).unwrap();
    assert!((all / full - 1.0).abs() < 1e-3);
    assert!(windowed_c_integral(&f, 2.0, 1.0).is_err());
}

#[test]
fn c_integral_settles() {
    // successive differences shrink once r is past the transient
    let rs = [40.0, 80.0, 160.0, 320.0];
    let g = Grid::new(-60.0, 260.0, 0.02, 0.01).unwrap();
    let c: Vec<f64> = evolve(&heaviside(), 320.0, g, &rs).unwrap().iter().map(|f| c_integral(f).unwrap()).collect();
    let d: Vec<f64> = c.windows(2).map(|p| p[1] - p[0]).collect();
    assert!(d.windows(2).all(|p| p[1] < p[0]), "C = {c:?}");
}

#[test]
fn tail_constant_tracks_translation_and_c() {
    let shift = 1.0;
    let rs = [40.0, 80.0, 160.0, 320.0];
    let g = Grid::new(-60.0, 260.0, 0.02, 0.01).unwrap();
    let a = evolve(&heaviside(), 320.0, g, &rs).unwrap();
    let b = evolve(&InitialCondition::Heaviside(-shift), 320.0, g, &rs).unwrap();
    let (fa, fb) = (tail_constant_fit(&a, TAIL_WINDOW, 0.1).unwrap(), tail_constant_fit(&b, TAIL_WINDOW, 0.1).unwrap());
    let target = (-SQRT_2 * shift).exp();
    assert!((fb.constant / fa.constant / target - 1.0).abs() < 0.03);
    // the tail constant and the C(r, u) limit agree
    let c: Vec<(f64, f64)> = a.iter().map(|f| (f.t, c_integral(f).unwrap())).collect();
    let limit = extrapolate_inverse_sqrt(&c, 1).unwrap();
    assert!((fa.constant / limit - 1.0).abs() < 0.10, "A {} vs C {limit}", fa.constant);
}

#[test]
fn tail_fit_needs_a_tail() {
    let g = Grid::new(-20.0, 40.0, 0.05, 0.025).unwrap();
    let zero = evolve_to(&InitialCondition::Constant(0.0), 5.0, g).unwrap();
    assert!(tail_constant_fit(&[zero], TAIL_WINDOW, 0.1).is_err());
}

#[test]
fn psi_regime_and_trend() {
    let g = Grid::default();
    let ratio = |r: f64, t: f64| {
        let f = evolve(&heaviside(), t, g, &[r, t]).unwrap();
        let x = standard_centering(t) + 8.0 * r;
        f[1].at_fixed(x) / psi(r, t, x, &f[0]).unwrap()
    };
    let far = ratio(4.0, 32.0);
    assert!((0.5..=2.0).contains(&far), "{far}");
    assert!((ratio(8.0, 64.0) - 1.0).abs() < (ratio(2.0, 16.0) - 1.0).abs());
    let f = evolve_to(&heaviside(), 4.0, g).unwrap();
    assert!(psi(4.0, 20.0, 1e3, &f).is_err());
    assert!(psi(4.0, 32.0, standard_centering(32.0), &f).is_err());
    let zero = evolve_to(&InitialCondition::Constant(0.0), 4.0, g).unwrap();
    assert_eq!(psi(4.0, 32.0, standard_centering(32.0) + 40.0, &zero).unwrap(), 0.0);
}

#[test]
fn laplace_prediction_limits() {
    let g = Grid::default();
    assert_eq!(laplace_prediction(&Phi::zero(), 3.0, 0.0, g).unwrap(), 1.0);
    let p = laplace_prediction(&Phi::tent(0.0, 1.0, 1.0), 3.0, 0.0, g).unwrap();
    assert!(p > 0.0 && p < 1.0);
}
