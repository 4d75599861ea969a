//! Shared domain types: model normalizations, point measures, paths and
//! Monte Carlo estimates.

use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};

/// Which end of the particle cloud is extremal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Max,
    Min,
}

impl Direction {
    /// Maps a position into the frame where the extremum is a maximum.
    #[inline]
    pub fn orient(self, x: f64) -> f64 {
        match self {
            Direction::Max => x,
            Direction::Min => -x,
        }
    }

    /// `true` if `a` is strictly more extremal than `b`.
    #[inline]
    pub fn beats(self, a: f64, b: f64) -> bool {
        match self {
            Direction::Max => a > b,
            Direction::Min => a < b,
        }
    }
}

/// Parameters of a branching Brownian motion: per-particle Brownian motion
/// with `variance` and `drift` per unit time, binary splitting at rate
/// `branch_rate`, and the direction in which extremes are studied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub variance: f64,
    pub drift: f64,
    pub branch_rate: f64,
    pub direction: Direction,
}

impl Normalization {
    /// Unit variance, no drift, unit branching rate; maxima.
    pub const STANDARD: Normalization = Normalization {
        variance: 1.0,
        drift: 0.0,
        branch_rate: 1.0,
        direction: Direction::Max,
    };

    /// Variance 2, drift 2, unit branching rate; minima. In this frame the
    /// additive martingale `sum exp(-X)` has mean one and the derivative
    /// martingale `sum X exp(-X)` mean zero.
    pub const ABBS: Normalization = Normalization {
        variance: 2.0,
        drift: 2.0,
        branch_rate: 1.0,
        direction: Direction::Min,
    };

    pub fn new(variance: f64, drift: f64, branch_rate: f64, direction: Direction) -> Result<Self> {
        let n = Normalization {
            variance,
            drift,
            branch_rate,
            direction,
        };
        n.validate()?;
        Ok(n)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.variance > 0.0) || !self.variance.is_finite() {
            return Err(Error::param("variance", "must be positive and finite"));
        }
        if !(self.branch_rate > 0.0) || !self.branch_rate.is_finite() {
            return Err(Error::param("branch_rate", "must be positive and finite"));
        }
        if !self.drift.is_finite() {
            return Err(Error::param("drift", "must be finite"));
        }
        Ok(())
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "standard" => Some(Self::STANDARD),
            "abbs" => Some(Self::ABBS),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        if *self == Self::STANDARD {
            "standard"
        } else if *self == Self::ABBS {
            "abbs"
        } else {
            "custom"
        }
    }

    pub fn sigma(&self) -> f64 {
        self.variance.sqrt()
    }

    /// Second-order centering of the extremum at time `t`.
    ///
    /// Only the two presets have a known centering; for other parameter sets
    /// this returns the standard formula transported by the affine map that
    /// relates the process to the standard one.
    pub fn centering(&self, t: f64) -> f64 {
        if *self == Self::ABBS {
            return 1.5 * t.ln();
        }
        // X = drift t + sigma B(lambda-time); map through the standard BBM at
        // branching rate 1 by time change s = lambda t.
        let s = self.branch_rate * t;
        let std_m = standard_centering(s);
        let scale = self.sigma() / self.branch_rate.sqrt();
        match self.direction {
            Direction::Max => self.drift * t + scale * std_m,
            Direction::Min => self.drift * t - scale * std_m,
        }
    }
}

/// `sqrt(2) t - 3/(2 sqrt 2) ln t`.
pub fn standard_centering(t: f64) -> f64 {
    SQRT_2 * t - 3.0 / (2.0 * SQRT_2) * t.ln()
}

/// Default cap on the number of atoms in a [`PointMeasure`].
pub const DEFAULT_ATOM_CAP: usize = 100_000_000;

/// A finite multiset of real positions, kept sorted ascending. Ties keep
/// their insertion order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PointMeasure {
    atoms: Vec<f64>,
}

impl PointMeasure {
    pub fn empty() -> Self {
        PointMeasure { atoms: Vec::new() }
    }

    /// Builds a measure from unsorted atoms. Non-finite atoms are rejected.
    pub fn new(atoms: Vec<f64>) -> Result<Self> {
        Self::with_cap(atoms, DEFAULT_ATOM_CAP)
    }

    pub fn with_cap(mut atoms: Vec<f64>, cap: usize) -> Result<Self> {
        if atoms.len() > cap {
            return Err(Error::AtomCap { cap });
        }
        if atoms.iter().any(|x| !x.is_finite()) {
            return Err(Error::param("atoms", "must be finite"));
        }
        // stable: equal atoms keep their creation order
        atoms.sort_by(f64::total_cmp);
        Ok(PointMeasure { atoms })
    }

    /// Wraps atoms the caller guarantees are finite and sorted.
    pub(crate) fn from_sorted_unchecked(atoms: Vec<f64>) -> Self {
        debug_assert!(atoms.windows(2).all(|w| w[0] <= w[1]));
        PointMeasure { atoms }
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn into_atoms(self) -> Vec<f64> {
        self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Every atom translated by `c`.
    pub fn shift(&self, c: f64) -> PointMeasure {
        PointMeasure {
            atoms: self.atoms.iter().map(|x| x + c).collect(),
        }
    }

    /// Every atom multiplied by `k`; a negative factor reverses the order.
    pub fn scale(&self, k: f64) -> PointMeasure {
        let mut atoms: Vec<f64> = self.atoms.iter().map(|x| x * k).collect();
        if k < 0.0 {
            atoms.reverse();
        }
        PointMeasure { atoms }
    }

    pub fn extremum(&self, dir: Direction) -> Result<f64> {
        match dir {
            Direction::Max => self.atoms.last().copied(),
            Direction::Min => self.atoms.first().copied(),
        }
        .ok_or(Error::EmptyMeasure)
    }

    /// Atoms within the closed window `[lo, hi]`.
    pub fn restrict(&self, lo: f64, hi: f64) -> PointMeasure {
        let a = self.atoms.partition_point(|&x| x < lo);
        let b = self.atoms.partition_point(|&x| x <= hi);
        PointMeasure {
            atoms: self.atoms[a..b.max(a)].to_vec(),
        }
    }

    /// Number of atoms in `[lo, hi]`.
    pub fn count_in(&self, lo: f64, hi: f64) -> usize {
        let a = self.atoms.partition_point(|&x| x < lo);
        let b = self.atoms.partition_point(|&x| x <= hi);
        b.saturating_sub(a)
    }

    /// `exp(-sum phi(x_i))`.
    pub fn laplace_functional(&self, phi: &Phi) -> f64 {
        let (lo, hi) = phi.support();
        let a = self.atoms.partition_point(|&x| x < lo);
        let s: f64 = self.atoms[a..]
            .iter()
            .take_while(|&&x| x <= hi)
            .map(|&x| phi.eval(x))
            .sum();
        (-s).exp()
    }
}

/// Multiset union of the measures.
pub fn superpose(pms: &[PointMeasure]) -> PointMeasure {
    let total = pms.iter().map(PointMeasure::len).sum();
    let mut atoms = Vec::with_capacity(total);
    for pm in pms {
        atoms.extend_from_slice(&pm.atoms);
    }
    atoms.sort_by(f64::total_cmp);
    PointMeasure { atoms }
}

/// Non-negative test function with compact support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Phi {
    /// `height` on `[lo, hi]`, zero elsewhere.
    Indicator { lo: f64, hi: f64, height: f64 },
    /// Piecewise linear through the knots, zero outside `[xs[0], xs[n-1]]`.
    Tabulated { xs: Vec<f64>, ys: Vec<f64> },
}

impl Phi {
    pub fn zero() -> Phi {
        Phi::Indicator {
            lo: 0.0,
            hi: 0.0,
            height: 0.0,
        }
    }

    /// Triangle of the given height centred at `center`, vanishing at
    /// `center +- half_width`.
    pub fn tent(center: f64, half_width: f64, height: f64) -> Phi {
        Phi::Tabulated {
            xs: vec![center - half_width, center, center + half_width],
            ys: vec![0.0, height, 0.0],
        }
    }

    pub fn tabulated(xs: Vec<f64>, ys: Vec<f64>) -> Result<Phi> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::param("phi", "need matching knots, at least two"));
        }
        if xs.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::param("phi", "knots must be strictly increasing"));
        }
        if ys.iter().any(|&y| !(y >= 0.0) || !y.is_finite()) {
            return Err(Error::param("phi", "values must be finite and non-negative"));
        }
        Ok(Phi::Tabulated { xs, ys })
    }

    pub fn support(&self) -> (f64, f64) {
        match self {
            Phi::Indicator { lo, hi, .. } => (*lo, *hi),
            Phi::Tabulated { xs, .. } => (xs[0], xs[xs.len() - 1]),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Phi::Indicator { height, lo, hi } => *height == 0.0 || lo > hi,
            Phi::Tabulated { ys, .. } => ys.iter().all(|&y| y == 0.0),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Phi::Indicator { lo, hi, height } => {
                if x >= *lo && x <= *hi {
                    *height
                } else {
                    0.0
                }
            }
            Phi::Tabulated { xs, ys } => {
                let n = xs.len();
                if x < xs[0] || x > xs[n - 1] {
                    return 0.0;
                }
                let i = xs.partition_point(|&k| k <= x).clamp(1, n - 1);
                let (x0, x1) = (xs[i - 1], xs[i]);
                let w = (x - x0) / (x1 - x0);
                ys[i - 1] * (1.0 - w) + ys[i] * w
            }
        }
    }
}

/// A path sampled at increasing checkpoint times starting at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl Path {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::param("path", "times and values must be non-empty and equal length"));
        }
        if times[0] != 0.0 {
            return Err(Error::param("path", "first time must be 0"));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::param("path", "times must be strictly increasing"));
        }
        Ok(Path { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> f64 {
        *self.values.last().expect("non-empty path")
    }

    /// Time reversal seen from the endpoint: `s -> path(T - s) - path(T)`,
    /// sampled at `T - times` (reversed).
    pub fn reversed_from_end(&self) -> Path {
        let t_end = *self.times.last().expect("non-empty path");
        let end = self.last();
        let times = self.times.iter().rev().map(|&s| t_end - s).collect();
        let values = self.values.iter().rev().map(|&v| v - end).collect();
        Path { times, values }
    }

    /// Linear interpolation; constant beyond the last checkpoint.
    pub fn at(&self, s: f64) -> f64 {
        let n = self.times.len();
        if s <= self.times[0] {
            return self.values[0];
        }
        if s >= self.times[n - 1] {
            return self.values[n - 1];
        }
        let i = self.times.partition_point(|&k| k <= s);
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let w = (s - t0) / (t1 - t0);
        self.values[i - 1] * (1.0 - w) + self.values[i] * w
    }
}

/// Monte Carlo scalar summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub n: usize,
    pub mean: f64,
    pub median_of_means: f64,
    /// 95% normal-approximation half width of the mean.
    pub half_width: f64,
}

/// Number of blocks used by [`Estimate::from_samples`] for median-of-means.
pub const MOM_BLOCKS: usize = 16;

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Result<Self> {
        let n = xs.len();
        if n == 0 {
            return Err(Error::InsufficientData("estimate needs at least one sample".into()));
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        let half_width = 1.96 * (var / n as f64).sqrt();
        Ok(Estimate {
            n,
            mean,
            median_of_means: median_of_means(xs, MOM_BLOCKS),
            half_width,
        })
    }

    pub fn contains(&self, value: f64, k_sigma: f64) -> bool {
        (self.mean - value).abs() <= k_sigma * self.stderr()
    }

    pub fn stderr(&self) -> f64 {
        self.half_width / 1.96
    }
}

/// Median of the means of `blocks` contiguous blocks of nearly equal size.
pub fn median_of_means(xs: &[f64], blocks: usize) -> f64 {
    let k = blocks.clamp(1, xs.len().max(1));
    let n = xs.len();
    let mut means: Vec<f64> = (0..k)
        .map(|b| {
            let lo = b * n / k;
            let hi = (b + 1) * n / k;
            xs[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect();
    means.sort_by(f64::total_cmp);
    if k % 2 == 1 {
        means[k / 2]
    } else {
        0.5 * (means[k / 2 - 1] + means[k / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pm(v: &[f64]) -> PointMeasure {
        PointMeasure::new(v.to_vec()).unwrap()
    }

    #[test]
    fn shift_examples() {
        assert_eq!(pm(&[0.0, 1.0, 3.0]).shift(-1.0), pm(&[-1.0, 0.0, 2.0]));
        assert!(PointMeasure::empty().shift(5.0).is_empty());
        assert_eq!(pm(&[2.5]).shift(0.0), pm(&[2.5]));
    }

    #[test]
    fn superpose_examples() {
        assert_eq!(superpose(&[pm(&[0.0, 2.0]), pm(&[1.0])]), pm(&[0.0, 1.0, 2.0]));
        assert!(superpose(&[PointMeasure::empty(), PointMeasure::empty()]).is_empty());
        assert_eq!(superpose(&[pm(&[1.0, 1.0]), pm(&[1.0])]).atoms(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn extremum_examples() {
        let p = pm(&[-1.0, 0.0, 2.0]);
        assert_eq!(p.extremum(Direction::Max).unwrap(), 2.0);
        assert_eq!(p.extremum(Direction::Min).unwrap(), -1.0);
        let err = PointMeasure::empty().extremum(Direction::Max).unwrap_err();
        assert_eq!(err.to_string(), "no extremum of empty measure");
    }

    #[test]
    fn laplace_examples() {
        let ind = Phi::Indicator {
            lo: -1.0,
            hi: 1.0,
            height: 1.0,
        };
        assert!((pm(&[0.0]).laplace_functional(&ind) - (-1.0f64).exp()).abs() < 1e-15);
        assert!((pm(&[0.0]).laplace_functional(&ind) - 0.367879).abs() < 1e-6);
        assert_eq!(PointMeasure::empty().laplace_functional(&ind), 1.0);
        assert_eq!(pm(&[5.0]).laplace_functional(&ind), 1.0);
    }

    #[test]
    fn rejects_nan_and_cap() {
        assert!(PointMeasure::new(vec![f64::NAN]).is_err());
        assert_eq!(
            PointMeasure::with_cap(vec![1.0, 2.0, 3.0], 2).unwrap_err(),
            Error::AtomCap { cap: 2 }
        );
    }

    #[test]
    fn presets_and_centering() {
        let s = Normalization::STANDARD;
        assert_eq!((s.variance, s.drift, s.branch_rate, s.direction), (1.0, 0.0, 1.0, Direction::Max));
        let a = Normalization::ABBS;
        assert_eq!((a.variance, a.drift, a.branch_rate, a.direction), (2.0, 2.0, 1.0, Direction::Min));
        let t = 7.0f64;
        assert!((s.centering(t) - (SQRT_2 * t - 3.0 / (2.0 * SQRT_2) * t.ln())).abs() < 1e-12);
        assert!((a.centering(t) - 1.5 * t.ln()).abs() < 1e-12);
        assert!(Normalization::new(0.0, 0.0, 1.0, Direction::Max).is_err());
        assert!(Normalization::new(1.0, 0.0, -1.0, Direction::Max).is_err());
    }

    #[test]
    fn path_reversal_starts_at_zero() {
        let p = Path::new(vec![0.0, 1.0, 2.0], vec![0.0, 0.5, -1.0]).unwrap();
        let r = p.reversed_from_end();
        assert_eq!(r.times(), &[0.0, 1.0, 2.0]);
        assert_eq!(r.values(), &[0.0, 1.5, 1.0]);
        assert!(Path::new(vec![0.5, 1.0], vec![0.0, 0.0]).is_err());
        assert!(Path::new(vec![0.0, 0.0], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn tent_phi() {
        let phi = Phi::tent(1.0, 0.5, 2.0);
        assert_eq!(phi.eval(1.0), 2.0);
        assert_eq!(phi.eval(0.75), 1.0);
        assert_eq!(phi.eval(2.0), 0.0);
        assert_eq!(phi.support(), (0.5, 1.5));
    }

    #[test]
    fn estimate_basics() {
        let e = Estimate::from_samples(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(e.n, 4);
        assert_eq!(e.mean, 2.5);
        assert!(e.half_width > 0.0);
        assert!(Estimate::from_samples(&[]).is_err());
    }
}
