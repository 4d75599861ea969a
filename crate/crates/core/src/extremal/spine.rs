//! The process `Gamma^(b)`: Brownian motion up to its first passage `T_b`
//! at `b`, then `b` minus a Bessel(3) process started at 0.
//!
//! The passage time is drawn first, `T_b = b^2 / Z^2`. Given `T_b = T`,
//! the pre-passage path read backwards from `T` is a Bessel(3) bridge from
//! 0 to `b`, realized as the norm of a 3-d Brownian bridge; after `T` the
//! Bessel(3) process is the norm of a 3-d Brownian motion. Every value is
//! exact in law at the requested times, so no hitting correction is needed.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Path;
use crate::rng::{rng_from_seed, SimRng};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpineSample {
    pub b: f64,
    /// `Gamma^(b)` on the `dt` grid of `[0, horizon]`.
    pub path: Path,
    /// First passage time at `b`.
    pub t_b: f64,
    /// False when `t_b` lies beyond the horizon (pure Brownian segment).
    pub reached: bool,
}

fn gauss3(rng: &mut SimRng) -> [f64; 3] {
    [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)]
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// `Gamma^(b)` at the nondecreasing `times`; returns the values and `T_b`.
pub fn sample_gamma_at(b: f64, times: &[f64], rng: &mut SimRng) -> Result<(Vec<f64>, f64)> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::param("b", "must be positive and finite"));
    }
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::param("times", "must be nonnegative and nondecreasing"));
    }
    let z: f64 = rng.sample(StandardNormal);
    let t_b = (b / z).powi(2);
    let mut out = vec![0.0; times.len()];
    let split = times.partition_point(|&s| s <= t_b);

    // before T_b, walking backwards: r = T - s increases from 0 to T
    let end = [b, 0.0, 0.0];
    let mut w = [0.0; 3];
    let mut r_prev = 0.0;
    for k in (0..split).rev() {
        let r = t_b - times[k];
        let left = t_b - r_prev;
        if r > r_prev && left > 0.0 {
            let f = (r - r_prev) / left;
            let sd = ((r - r_prev) * (t_b - r) / left).max(0.0).sqrt();
            let g = gauss3(rng);
            for c in 0..3 {
                w[c] += f * (end[c] - w[c]) + sd * g[c];
            }
            r_prev = r;
        }
        out[k] = b - norm3(w);
    }

    // after T_b
    let mut v = [0.0; 3];
    let mut s_prev = t_b;
    for k in split..times.len() {
        let ds = times[k] - s_prev;
        if ds > 0.0 {
            let g = gauss3(rng);
            let sd = ds.sqrt();
            for c in 0..3 {
                v[c] += sd * g[c];
            }
            s_prev = times[k];
        }
        out[k] = b - norm3(v);
    }
    Ok((out, t_b))
}

/// Uniform grid `0, dt, 2dt, ...` closed by `horizon`.
pub(crate) fn time_grid(horizon: f64, dt: f64) -> Vec<f64> {
    let n = (horizon / dt).floor() as usize;
    let mut t: Vec<f64> = (0..=n).map(|i| i as f64 * dt).collect();
    if horizon - t[n] > 1e-9 * dt {
        t.push(horizon);
    }
    t
}

/// `Gamma^(b)` on the `dt` grid of `[0, horizon]`.
pub fn sample_spine_path(b: f64, horizon: f64, dt: f64, seed: u64) -> Result<SpineSample> {
    if !(dt > 0.0) {
        return Err(Error::param("dt", "must be positive"));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::param("horizon", "must be positive and finite"));
    }
    let mut rng = rng_from_seed(seed);
    let times = time_grid(horizon, dt);
    let (values, t_b) = sample_gamma_at(b, &times, &mut rng)?;
    Ok(SpineSample {
        b,
        path: Path::new(times, values)?,
        t_b,
        reached: t_b <= horizon,
    })
}
