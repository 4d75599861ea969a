use std::f64::consts::SQRT_2;

use bbmlab::ensemble::{replicas, try_replicas};
use bbmlab::moments::expected_exceedance;
use bbmlab::rng::rng_from_seed;
use bbmlab::simulator::{
    barrier_census, default_checkpoints, envelope_check, first_passage_census, martingales, simulate, spine_simulate,
    stopping_line, stopping_line_from, SimSpec, DEFAULT_POPULATION_CAP,
};
use bbmlab::stats::{chi_square_gof, pearson};
use bbmlab::{Direction, Estimate, Normalization, PruningPolicy};

fn plain(norm: Normalization, t: f64, seed: u64) -> bbmlab::GenealogySnapshot {
    SimSpec::new(norm, t).run(seed).unwrap()
}

#[test]
fn short_horizon_has_one_leaf() {
    let ones = replicas(200, 1, 0, |_, s| plain(Normalization::STANDARD, 1e-4, s).num_leaves() == 1);
    assert!(ones.iter().filter(|&&b| b).count() >= 195);
}

#[test]
fn mean_population_is_exponential() {
    let n = try_replicas(2000, 2, 0, |_, s| Ok(plain(Normalization::STANDARD, 10.0, s).num_leaves() as f64)).unwrap();
    let e = Estimate::from_samples(&n).unwrap();
    assert!(e.contains(10f64.exp(), 3.0), "mean {} +- {}", e.mean, e.stderr());
}

#[test]
fn population_is_geometric_at_one() {
    let runs = 20_000;
    let q = 1.0 - (-1.0f64).exp();
    let counts = replicas(runs, 3, 0, |_, s| plain(Normalization::STANDARD, 1.0, s).num_leaves());
    // cells 1..=7 and a tail cell
    let mut obs = vec![0.0; 8];
    for c in counts {
        obs[(c - 1).min(7)] += 1.0;
    }
    let p0 = (-1.0f64).exp();
    let mut exp: Vec<f64> = (0..7).map(|k| runs as f64 * p0 * q.powi(k)).collect();
    exp.push(runs as f64 * q.powi(7));
    let p = chi_square_gof(&obs, &exp, 0).unwrap();
    assert!(p > 1e-3, "p = {p}");
}

#[test]
fn abbs_minimum_sits_near_centering() {
    // tight around (3/2) ln t: the spread grows far slower than a diffusive sqrt(t)
    let iqr = |t: f64| {
        let mut d = replicas(1000, 4, t as u64, |_, s| plain(Normalization::ABBS, t, s).extremum().unwrap() - 1.5 * t.ln());
        d.sort_by(f64::total_cmp);
        assert!(d[500].abs() < 3.0, "median offset {} at t = {t}", d[500]);
        d[750] - d[250]
    };
    let (a, b) = (iqr(5.0), iqr(10.0));
    assert!(b / a < 1.3, "IQR {a} at t = 5, {b} at t = 10");
}

#[test]
fn split_times_are_symmetric_and_in_range() {
    let snap = plain(Normalization::STANDARD, 4.0, 5);
    let n = snap.num_leaves().min(30);
    assert!(snap.split_time(0, 0).is_err());
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let s = snap.split_time(i, j).unwrap();
                assert_eq!(s, snap.split_time(j, i).unwrap());
                assert!((0.0..=4.0).contains(&s));
            }
        }
    }
}

#[test]
fn extremal_path_ends_at_extremum() {
    for norm in [Normalization::STANDARD, Normalization::ABBS] {
        let snap = SimSpec::new(norm, 6.0).checkpoints(default_checkpoints(6.0, 2.0)).run(6).unwrap();
        let p = snap.extremal_path().unwrap();
        assert_eq!(p.times()[0], 0.0);
        assert_eq!(p.values()[0], 0.0);
        assert_eq!(p.last(), snap.extremum().unwrap());
        assert_eq!(p.reversed_from_end().values()[0], 0.0);
    }
}

#[test]
fn window_decoration_is_nested_subset() {
    for seed in 0..20 {
        let snap = plain(Normalization::ABBS, 6.0, 100 + seed);
        let full = snap.point_measure().shift(-snap.extremum().unwrap());
        let mut prev = 0;
        for zeta in [0.5, 1.0, 2.0, 4.0, 6.0] {
            let d = snap.window_decoration(zeta).unwrap();
            assert_eq!(d.extremum(Direction::Min).unwrap(), 0.0);
            assert!(d.len() >= prev);
            prev = d.len();
            for x in d.atoms() {
                assert!(full.atoms().iter().any(|y| (x - y).abs() < 1e-12));
            }
        }
        assert_eq!(snap.window_decoration(6.0).unwrap().len(), full.len());
    }
}

#[test]
fn seeds_reproduce_snapshots() {
    let spec = SimSpec::new(Normalization::STANDARD, 5.0)
        .checkpoints(default_checkpoints(5.0, 1.0))
        .pruning(PruningPolicy::DEFAULT);
    let (a, b) = (spec.run(9).unwrap(), spec.run(9).unwrap());
    assert_eq!(a.nodes(), b.nodes());
    assert_eq!(a.num_leaves(), b.num_leaves());
    assert_ne!(spec.run(10).unwrap().num_leaves(), 0);
}

#[test]
fn single_particle_martingales() {
    let snap = SimSpec::new(Normalization::ABBS, 0.0).run(1).unwrap();
    let m = martingales(&snap).unwrap();
    assert_eq!((m.z_value, m.m_value), (0.0, 1.0));
}

#[test]
fn additive_martingale_has_unit_mean() {
    let m = try_replicas(10_000, 11, 0, |_, s| Ok(martingales(&plain(Normalization::ABBS, 5.0, s))?.m_value)).unwrap();
    let e = Estimate::from_samples(&m).unwrap();
    assert!(e.contains(1.0, 3.0), "{} +- {}", e.mean, e.stderr());
}

#[test]
fn derivative_martingale_conditional_mean() {
    // E[Z(t) | F_s] = Z(s), from one time-s population restarted many times
    let s = 2.0;
    let base = plain(Normalization::STANDARD, s, 12);
    let zs = martingales(&base).unwrap().z_value;
    let pop: Vec<f64> = base.leaf_positions().collect();
    let zt = try_replicas(4000, 13, 0, |_, seed| {
        Ok(martingales(&SimSpec::new(Normalization::STANDARD, 4.0).from_population(s, pop.clone()).run(seed)?)?.z_value)
    })
    .unwrap();
    let e = Estimate::from_samples(&zt).unwrap();
    assert!(e.contains(zs, 3.0), "Z(s) = {zs}, E Z(t) = {} +- {}", e.mean, e.stderr());
}

#[test]
fn stopping_line_limits() {
    let r = stopping_line(Normalization::ABBS, 1e-9, 1).unwrap();
    assert_eq!(r.h_count, 1);
    assert!(r.z_k < 1e-8);
    let r = stopping_line(Normalization::ABBS, 6.0, 2).unwrap();
    assert!(r.h_count >= 1 && r.z_k > 0.0 && r.z_k.is_finite());
}

#[test]
fn stopping_lines_at_two_levels_correlate() {
    let pairs = try_replicas(400, 14, 0, |_, seed| {
        let snap = plain(Normalization::ABBS, 8.0, seed);
        let mut rng = rng_from_seed(seed ^ 0xabc);
        let mut z = [0.0; 2];
        for (i, k) in [4.0, 6.0].into_iter().enumerate() {
            let c = first_passage_census(&snap, k, &mut rng)?;
            let mut h = c.hits;
            for &l in &c.open_leaves {
                h += stopping_line_from(Normalization::ABBS, snap.leaf_position(l)?, k, &mut rng, DEFAULT_POPULATION_CAP as u64)?;
            }
            z[i] = k * (-k).exp() * h as f64;
        }
        Ok((z[0], z[1]))
    })
    .unwrap();
    let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    assert!(a.iter().chain(&b).all(|&z| z > 0.0));
    // heavy tails: correlate on the log scale
    let la: Vec<f64> = a.iter().map(|z| z.ln()).collect();
    let lb: Vec<f64> = b.iter().map(|z| z.ln()).collect();
    assert!(pearson(&la, &lb).unwrap() > 0.5);
}

#[test]
fn spine_emissions_and_variance() {
    let t = 3.0;
    let runs = try_replicas(10_000, 15, 0, |_, s| {
        let r = spine_simulate(Normalization::ABBS, t, &[], s)?;
        Ok((r.emissions as f64, r.snapshot.leaf_position(r.spine_leaf)?))
    })
    .unwrap();
    let em: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let e = Estimate::from_samples(&em).unwrap();
    assert!(e.contains(2.0 * t, 3.0), "{} +- {}", e.mean, e.stderr());
    let sq: Vec<f64> = runs.iter().map(|r| r.1 * r.1).collect();
    let v = Estimate::from_samples(&sq).unwrap();
    assert!(v.contains(2.0 * t, 3.0), "{} +- {}", v.mean, v.stderr());
    assert!(spine_simulate(Normalization::STANDARD, 1.0, &[], 1).is_err());
}

#[test]
fn envelope_preconditions() {
    let t = 10.0;
    let snap = SimSpec::new(Normalization::STANDARD, t).checkpoints(default_checkpoints(t, 3.0)).run(16).unwrap();
    assert!(envelope_check(&snap, 0.5, 1.0, 2.0).is_err());
    assert!(envelope_check(&snap, 0.3, 4.0, 2.0).is_err());
    let sparse = SimSpec::new(Normalization::STANDARD, t).checkpoints(vec![0.0, 5.0, t]).run(16).unwrap();
    assert!(envelope_check(&sparse, 0.3, 1.0, 2.0).is_err());
    assert!(envelope_check(&snap, 0.3, 1.0, 2.0).is_ok());
}

#[test]
fn lone_particle_stays_inside_envelope() {
    // the origin-held particle: no branching before t
    let t = 10.0;
    let ck = default_checkpoints(t, 3.0);
    let snap = simulate(Normalization::STANDARD, t, &ck, PruningPolicy::None, 17).unwrap();
    let lone = snap.num_leaves() == 1 && snap.extremum().unwrap().abs() < 3.0;
    if lone {
        assert!(!envelope_check(&snap, 0.3, 1.0, 2.0).unwrap().upper_exceeded);
    }
}

#[test]
fn census_limits_and_first_moment() {
    let t: f64 = 8.0;
    let ck = default_checkpoints(t, 3.0);
    let snap = SimSpec::new(Normalization::STANDARD, t).checkpoints(ck.clone()).run(18).unwrap();
    let c = barrier_census(&snap, 1e3, (2.0, 1.0)).unwrap();
    assert_eq!((c.n_q, c.b_q, c.h_q), (0, 0, 0));
    assert_eq!(barrier_census(&snap, -1e9, (2.0, 1.0)).unwrap().n_q, snap.num_leaves());

    let q = SQRT_2 * t;
    let n = try_replicas(4000, 19, 0, |_, s| {
        let snap = SimSpec::new(Normalization::STANDARD, t).checkpoints(ck.clone()).run(s)?;
        Ok(barrier_census(&snap, q, (2.0, 1.0))?.n_q as f64)
    })
    .unwrap();
    let e = Estimate::from_samples(&n).unwrap();
    let target = expected_exceedance(t, q).unwrap();
    assert!(e.contains(target, 3.0), "{} +- {} vs {target}", e.mean, e.stderr());
}
