//! Empirical CDFs, Kolmogorov-Smirnov distances, tail-slope regression,
//! Poisson and chi-square goodness of fit, the Gumbel-mixture fit and
//! Pearson correlation.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, Poisson};
use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::special::linear_fit;

/// Sorted sample with a right-continuous step CDF.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    /// Errors on an empty sample or a NaN.
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InsufficientData("empty sample".into()));
        }
        if samples.iter().any(|x| x.is_nan()) {
            return Err(Error::param("samples", "NaN in sample"));
        }
        samples.sort_by(f64::total_cmp);
        Ok(Ecdf { sorted: samples })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    /// `#{x_i <= x} / n`.
    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    /// `#{x_i > x} / n`.
    pub fn survival(&self, x: f64) -> f64 {
        1.0 - self.eval(x)
    }

    /// Lower empirical quantile.
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.sorted.len();
        let k = ((p.clamp(0.0, 1.0) * n as f64).ceil() as usize).clamp(1, n);
        self.sorted[k - 1]
    }
}

/// `sup_x |F_a(x) - F_b(x)|`, exact over the merged jump set.
pub fn ks_distance(a: &Ecdf, b: &Ecdf) -> f64 {
    let (x, y) = (&a.sorted, &b.sorted);
    let (na, nb) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// `sup_x |F_a(x) - F(x)|` against a continuous CDF.
pub fn ks_to_cdf(a: &Ecdf, cdf: impl Fn(f64) -> f64) -> f64 {
    let n = a.sorted.len() as f64;
    a.sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailSlope {
    pub slope: f64,
    pub stderr: f64,
}

const TAIL_POINTS: usize = 16;
const JACKKNIFE_GROUPS: usize = 10;

fn slope_of(ecdf: &Ecdf, window: (f64, f64), divide_by_x: bool) -> Result<f64> {
    let pts: Vec<(f64, f64)> = (0..TAIL_POINTS)
        .filter_map(|j| {
            let x = window.0 + (window.1 - window.0) * j as f64 / (TAIL_POINTS - 1) as f64;
            let s = ecdf.survival(x);
            (s > 0.0).then(|| (x, if divide_by_x { (s / x).ln() } else { s.ln() }))
        })
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientData("survival vanishes inside the window".into()));
    }
    Ok(linear_fit(&pts).0)
}

/// Slope of `ln(S(x) / x)` (or of `ln S(x)` when `divide_by_x` is false)
/// against `x` over 16 equally spaced points of `window`, where `S` is
/// the empirical survival function. The standard error is a delete-a-group
/// jackknife over 10 groups taken by sample index.
pub fn tail_slope(samples: &[f64], window: (f64, f64), divide_by_x: bool) -> Result<TailSlope> {
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(Error::param("window", "need lo < hi"));
    }
    if divide_by_x && !(lo > 0.0) {
        return Err(Error::param("window", "dividing by x needs a positive window"));
    }
    let beyond = samples.iter().filter(|&&x| x >= lo).count();
    if beyond < 100 {
        return Err(Error::InsufficientData(format!(
            "{beyond} samples beyond {lo}, need 100"
        )));
    }
    let full = Ecdf::new(samples.to_vec())?;
    let slope = slope_of(&full, window, divide_by_x)?;
    let g = JACKKNIFE_GROUPS;
    let mut parts = Vec::with_capacity(g);
    for k in 0..g {
        let rest: Vec<f64> = samples
            .iter()
            .enumerate()
            .filter(|(i, _)| i % g != k)
            .map(|(_, &x)| x)
            .collect();
        parts.push(slope_of(&Ecdf::new(rest)?, window, divide_by_x)?);
    }
    let mean = parts.iter().sum::<f64>() / g as f64;
    let var = (g - 1) as f64 / g as f64 * parts.iter().map(|p| (p - mean).powi(2)).sum::<f64>();
    Ok(TailSlope {
        slope,
        stderr: var.sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GumbelFit {
    pub ks: f64,
    pub fitted_c: f64,
}

// tabulation of G(u) = mean_z exp(-e^u z) on a grid anchored at -ln z_med
const G_STEP: f64 = 0.005;
const G_HALF: usize = 8000;

/// Fits `c >= 0` minimising the KS distance between the empirical law of
/// `max_samples` and `x -> mean_z exp(-c z e^{-sqrt2 x})`. Negative
/// `z_samples` enter through their positive part.
///
/// `c` only shifts the mixture in `x`, so the mixture is tabulated once on
/// a grid tied to the median of `z` and the search runs over the shift;
/// rescaling `z` by `l` therefore rescales the fitted `c` by `1/l`.
pub fn gumbel_mixture_check(max_samples: &[f64], z_samples: &[f64]) -> Result<GumbelFit> {
    let z: Vec<f64> = z_samples.iter().map(|&v| v.max(0.0)).collect();
    if z.iter().all(|&v| v == 0.0) {
        return Err(Error::param("z_samples", "all values are non-positive"));
    }
    let maxes = Ecdf::new(max_samples.to_vec())?;
    let positive = Ecdf::new(z.iter().copied().filter(|&v| v > 0.0).collect())?;
    let anchor = -positive.quantile(0.5).ln();
    let table: Vec<f64> = (0..=2 * G_HALF)
        .map(|k| {
            let s = (anchor + (k as f64 - G_HALF as f64) * G_STEP).exp();
            z.iter().map(|&v| (-s * v).exp()).sum::<f64>() / z.len() as f64
        })
        .collect();
    let g = |u: f64| -> f64 {
        let p = (u - anchor) / G_STEP + G_HALF as f64;
        if p <= 0.0 {
            return table[0];
        }
        if p >= (2 * G_HALF) as f64 {
            return table[2 * G_HALF];
        }
        let i = p.floor() as usize;
        let f = p - i as f64;
        table[i] * (1.0 - f) + table[i + 1] * f
    };
    // ln c = anchor + offset
    let ks_at = |offset: f64| ks_to_cdf(&maxes, |x| g(anchor + offset - SQRT_2 * x));
    let span = SQRT_2 * (maxes.sorted[maxes.len() - 1] - maxes.sorted[0]) + 20.0;
    let centre = SQRT_2 * maxes.quantile(0.5);
    let steps = 400usize;
    let mut best = (f64::INFINITY, 0.0);
    for k in 0..=steps {
        let off = centre - span + 2.0 * span * k as f64 / steps as f64;
        let d = ks_at(off);
        if d < best.0 {
            best = (d, off);
        }
    }
    let h = 2.0 * span / steps as f64;
    let (mut a, mut b) = (best.1 - h, best.1 + h);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (ks_at(c), ks_at(d));
    for _ in 0..60 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = ks_at(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = ks_at(d);
        }
    }
    let (ks, off) = if fc <= fd { (fc, c) } else { (fd, d) };
    let (ks, off) = if best.0 < ks { best } else { (ks, off) };
    Ok(GumbelFit {
        ks,
        fitted_c: (anchor + off).exp(),
    })
}

/// Upper tail probability of the chi-square statistic of `observed` against
/// `expected`, with `dof_reduction` fitted parameters. Every expected count
/// must be at least 1.
pub fn chi_square_gof(observed: &[f64], expected: &[f64], dof_reduction: usize) -> Result<f64> {
    if observed.len() != expected.len() {
        return Err(Error::param("observed", "length differs from expected"));
    }
    if let Some((bin, &e)) = expected.iter().enumerate().find(|(_, &e)| !(e >= 1.0)) {
        return Err(Error::SparseCell {
            window: 0,
            bin,
            expected: e,
        });
    }
    if observed.len() <= dof_reduction + 1 {
        return Err(Error::InsufficientData("too few cells".into()));
    }
    let stat: f64 = observed
        .iter()
        .zip(expected)
        .map(|(o, e)| (o - e).powi(2) / e)
        .sum();
    chi_square_sf(stat, (observed.len() - 1 - dof_reduction) as f64)
}

fn chi_square_sf(stat: f64, dof: f64) -> Result<f64> {
    let d = ChiSquared::new(dof).map_err(|e| Error::param("dof", e.to_string()))?;
    Ok(d.sf(stat))
}

/// Cells of a Poisson law: `{0..=lo}`, singletons, `{hi..}`, with `lo` and
/// `hi` chosen so that both merged tails carry an expected count of at
/// least 5 over `n` samples.
fn poisson_cells(window: usize, mean: f64, n: usize) -> Result<Vec<(u64, u64, f64)>> {
    let d = Poisson::new(mean).map_err(|e| Error::param("mean", e.to_string()))?;
    let nf = n as f64;
    let mut cells = Vec::new();
    let mut k = 0u64;
    let mut acc = 0.0;
    let mut start = 0u64;
    let mut total = 0.0;
    // cumulative mass; stop once the remaining upper tail is too thin
    loop {
        let p = d.pmf(k);
        acc += p;
        let rest = 1.0 - total - acc;
        if acc * nf >= 5.0 && rest * nf >= 5.0 {
            cells.push((start, k, acc));
            total += acc;
            acc = 0.0;
            start = k + 1;
        } else if rest * nf < 5.0 {
            cells.push((start, u64::MAX, 1.0 - total));
            break;
        }
        k += 1;
        if k > 10_000_000 {
            return Err(Error::param("means", "Poisson mean too large"));
        }
    }
    if let Some((bin, c)) = cells.iter().enumerate().find(|(_, c)| c.2 * nf < 1.0) {
        return Err(Error::SparseCell {
            window,
            bin,
            expected: c.2 * nf,
        });
    }
    Ok(cells)
}

/// Chi-square goodness of fit of window counts against independent
/// Poisson laws. `counts[s][w]` is the count of sample `s` in window `w`.
/// The per-window statistics are summed. Needs at least 5 windows and 200
/// samples.
pub fn poisson_window_test(counts: &[Vec<u64>], means: &[f64]) -> Result<f64> {
    if means.len() < 5 {
        return Err(Error::InsufficientData("need at least 5 windows".into()));
    }
    if counts.len() < 200 {
        return Err(Error::InsufficientData("need at least 200 samples".into()));
    }
    if counts.iter().any(|row| row.len() != means.len()) {
        return Err(Error::param("counts", "row length differs from the number of windows"));
    }
    let n = counts.len();
    let mut stat = 0.0;
    let mut dof = 0usize;
    for (w, &mean) in means.iter().enumerate() {
        if !(mean > 0.0) {
            return Err(Error::param("means", "must be positive"));
        }
        let cells = poisson_cells(w, mean, n)?;
        if cells.len() < 2 {
            return Err(Error::SparseCell {
                window: w,
                bin: 0,
                expected: cells[0].2 * n as f64,
            });
        }
        let mut obs = vec![0.0; cells.len()];
        for row in counts {
            let c = row[w];
            let i = cells.partition_point(|cell| cell.1 < c);
            obs[i] += 1.0;
        }
        for (o, cell) in obs.iter().zip(&cells) {
            let e = cell.2 * n as f64;
            stat += (o - e).powi(2) / e;
        }
        dof += cells.len() - 1;
    }
    chi_square_sf(stat, dof as f64)
}

/// Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InsufficientData("need two paired samples of length >= 2".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::InsufficientData("constant sample".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_extremes() {
        let a = Ecdf::new(vec![0.0; 10]).unwrap();
        let b = Ecdf::new(vec![1.0; 7]).unwrap();
        assert_eq!(ks_distance(&a, &a), 0.0);
        assert_eq!(ks_distance(&a, &b), 1.0);
        assert!(Ecdf::new(vec![]).is_err());
    }

    #[test]
    fn ks_with_ties_across_samples() {
        let a = Ecdf::new(vec![1.0, 2.0]).unwrap();
        let b = Ecdf::new(vec![2.0, 3.0]).unwrap();
        assert_eq!(ks_distance(&a, &b), 0.5);
    }

    #[test]
    fn deterministic_counts_reject() {
        let counts = vec![vec![3u64; 5]; 400];
        let p = poisson_window_test(&counts, &[3.0; 5]).unwrap();
        assert!(p < 1e-10);
    }

    #[test]
    fn pearson_sign() {
        let x = [1.0, 2.0, 3.0];
        assert!((pearson(&x, &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson(&x, &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
    }
}
