use bbmlab::model::{median_of_means, standard_centering};
use bbmlab::{superpose, Direction, Estimate, Normalization, Phi, PointMeasure};
use proptest::prelude::*;

fn atoms() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-50.0f64..50.0, 0..40)
}

fn pm(xs: Vec<f64>) -> PointMeasure {
    PointMeasure::new(xs).unwrap()
}

proptest! {
    #[test]
    fn shift_composes(xs in atoms(), a in -10.0f64..10.0, b in -10.0f64..10.0) {
        let p = pm(xs);
        let lhs = p.shift(a).shift(b);
        let rhs = p.shift(a + b);
        prop_assert_eq!(lhs.len(), rhs.len());
        for (x, y) in lhs.atoms().iter().zip(rhs.atoms()) {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn shift_keeps_order_and_size(xs in atoms(), c in -10.0f64..10.0) {
        let p = pm(xs);
        let q = p.shift(c);
        prop_assert_eq!(p.len(), q.len());
        prop_assert!(q.atoms().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn extremum_commutes_with_shift(xs in prop::collection::vec(-50.0f64..50.0, 1..40), c in -10.0f64..10.0) {
        let p = pm(xs);
        for dir in [Direction::Max, Direction::Min] {
            let lhs = p.shift(c).extremum(dir).unwrap();
            let rhs = p.extremum(dir).unwrap() + c;
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        }
    }

    #[test]
    fn laplace_is_multiplicative(xs in atoms(), ys in atoms(), c in -3.0f64..3.0, h in 0.0f64..2.0) {
        let (p, q) = (pm(xs), pm(ys));
        let phi = Phi::tent(c, 5.0, h);
        let both = superpose(&[p.clone(), q.clone()]).laplace_functional(&phi);
        let prod = p.laplace_functional(&phi) * q.laplace_functional(&phi);
        prop_assert!((both - prod).abs() <= 1e-12);
        prop_assert!(both > 0.0 && both <= 1.0);
    }

    #[test]
    fn superpose_counts_and_sorts(xs in atoms(), ys in atoms()) {
        let s = superpose(&[pm(xs.clone()), pm(ys.clone())]);
        prop_assert_eq!(s.len(), xs.len() + ys.len());
        prop_assert!(s.atoms().windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn laplace_indicator_example() {
    let phi = Phi::Indicator { lo: -1.0, hi: 1.0, height: 1.0 };
    assert!((pm(vec![0.0]).laplace_functional(&phi) - (-1.0f64).exp()).abs() < 1e-15);
    assert_eq!(pm(vec![]).laplace_functional(&phi), 1.0);
    assert_eq!(pm(vec![5.0]).laplace_functional(&phi), 1.0);
}

#[test]
fn superpose_keeps_multiplicity() {
    let s = superpose(&[pm(vec![1.0, 1.0]), pm(vec![1.0])]);
    assert_eq!(s.atoms(), &[1.0, 1.0, 1.0]);
    assert!(superpose(&[pm(vec![]), pm(vec![])]).is_empty());
}

#[test]
fn atom_cap_fails_fast() {
    assert!(PointMeasure::with_cap(vec![0.0; 11], 10).is_err());
    assert!(PointMeasure::with_cap(vec![0.0; 10], 10).is_ok());
}

#[test]
fn centerings() {
    let t: f64 = 12.0;
    let s = Normalization::STANDARD;
    assert!((s.centering(t) - (2f64.sqrt() * t - 3.0 / (2.0 * 2f64.sqrt()) * t.ln())).abs() < 1e-12);
    assert!((Normalization::ABBS.centering(t) - 1.5 * t.ln()).abs() < 1e-12);
    assert_eq!(standard_centering(t), s.centering(t));
    assert!(Normalization::new(0.0, 0.0, 1.0, Direction::Max).is_err());
    assert!(Normalization::new(1.0, 0.0, -1.0, Direction::Max).is_err());
}

#[test]
fn estimate_interval() {
    let xs: Vec<f64> = (0..1000).map(|i| (i % 10) as f64).collect();
    let e = Estimate::from_samples(&xs).unwrap();
    assert_eq!(e.n, 1000);
    assert!((e.mean - 4.5).abs() < 1e-12);
    assert!(e.half_width > 0.0);
    assert!(e.contains(4.5, 1.0));
    assert!((median_of_means(&xs, 16) - 4.5).abs() < 0.5);
    assert!(Estimate::from_samples(&[]).is_err());
}
