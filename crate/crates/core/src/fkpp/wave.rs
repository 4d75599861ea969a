//! Travelling wave `w'' / 2 + sqrt2 w' + w^2 - w = 0`, `w(-inf) = 0`,
//! `w(+inf) = 1`, normalized by `w(0) = 1/2`.
//!
//! The wave is the unstable manifold of the saddle at 0, which leaves it
//! like `e^{(2 - sqrt2) x}`. It is followed with RK4 in `w` until `w = 1/2`
//! and then in `e = 1 - w`, so the approach to 1 keeps full relative
//! precision.

use serde::Serialize;
use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaveProfile {
    pub xs: Vec<f64>,
    pub w: Vec<f64>,
    /// `1 - w`, accurate in the right tail.
    pub one_minus_w: Vec<f64>,
}

impl WaveProfile {
    /// `w(x)` by interpolation, 0 / 1 beyond the table.
    pub fn eval(&self, x: f64) -> f64 {
        1.0 - self.eval_tail(x)
    }

    /// `1 - w(x)`, interpolated log-linearly in the right tail.
    pub fn eval_tail(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return 1.0;
        }
        if x >= self.xs[n - 1] {
            return 0.0;
        }
        let i = self.xs.partition_point(|&k| k <= x).clamp(1, n - 1);
        let (x0, x1) = (self.xs[i - 1], self.xs[i]);
        let (e0, e1) = (self.one_minus_w[i - 1], self.one_minus_w[i]);
        let s = (x - x0) / (x1 - x0);
        if e0 > 0.0 && e1 > 0.0 && e0 < 0.5 {
            (e0.ln() * (1.0 - s) + e1.ln() * s).exp()
        } else {
            e0 * (1.0 - s) + e1 * s
        }
    }
}

const GROWTH: f64 = 2.0 - SQRT_2;

// w'' = -2 sqrt2 w' + 2 w - 2 w^2
fn rhs_w(y: [f64; 2]) -> [f64; 2] {
    [y[1], -2.0 * SQRT_2 * y[1] + 2.0 * y[0] - 2.0 * y[0] * y[0]]
}

// e'' = -2 sqrt2 e' - 2 e + 2 e^2
fn rhs_e(y: [f64; 2]) -> [f64; 2] {
    [y[1], -2.0 * SQRT_2 * y[1] - 2.0 * y[0] + 2.0 * y[0] * y[0]]
}

fn rk4(f: fn([f64; 2]) -> [f64; 2], y: [f64; 2], h: f64) -> [f64; 2] {
    let k1 = f(y);
    let k2 = f([y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
    let k3 = f([y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
    let k4 = f([y[0] + h * k3[0], y[1] + h * k3[1]]);
    [
        y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

/// Integrates on a uniform mesh of step `h` covering `[x_lo, x_hi]` after
/// normalization. Returns `(xs, 1 - w)`.
fn integrate(h: f64, x_lo: f64, x_hi: f64) -> (Vec<f64>, Vec<f64>) {
    // start deep in the left tail; w(x) ~ eps e^{GROWTH x}
    let w0 = 1e-14f64;
    let mut y = [w0, GROWTH * w0];
    let mut xs = vec![0.0];
    let mut tail = vec![1.0 - w0];
    let mut x = 0.0;
    let mut in_e = false;
    let mut steps = 0usize;
    let max_steps = ((x_hi - x_lo + 200.0) / h) as usize + 10;
    let mut cross = None;
    while steps < max_steps {
        if !in_e {
            y = rk4(rhs_w, y, h);
            x += h;
            if y[0] >= 0.5 {
                y = [1.0 - y[0], -y[1]];
                in_e = true;
            }
        } else {
            y = rk4(rhs_e, y, h);
            x += h;
        }
        xs.push(x);
        tail.push(if in_e { y[0] } else { 1.0 - y[0] });
        steps += 1;
        if cross.is_none() && in_e {
            // previous value was below one half in w
            let k = tail.len() - 1;
            let (e0, e1) = (tail[k - 1], tail[k]);
            let s = (e0 - 0.5) / (e0 - e1);
            cross = Some(xs[k - 1] + s * h);
        }
        if let Some(c) = cross {
            if x - c > x_hi + 2.0 * h {
                break;
            }
        }
    }
    let c = cross.unwrap_or(0.0);
    let xs: Vec<f64> = xs.into_iter().map(|v| v - c).collect();
    (xs, tail)
}

fn resample(xs: &[f64], tail: &[f64], at: &[f64]) -> Vec<f64> {
    let p = WaveProfile {
        xs: xs.to_vec(),
        w: Vec::new(),
        one_minus_w: tail.to_vec(),
    };
    at.iter().map(|&x| p.eval_tail(x)).collect()
}

/// Solves for the normalized wave on the sorted points `grid_1d`, halving
/// the RK4 step until two successive solutions agree to `tolerance` (in
/// relative terms for `1 - w`).
pub fn wave_profile(grid_1d: &[f64], tolerance: f64) -> Result<WaveProfile> {
    if grid_1d.len() < 2 || grid_1d.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::param("grid_1d", "need at least two increasing points"));
    }
    if !(tolerance > 0.0) {
        return Err(Error::param("tolerance", "must be positive"));
    }
    let x_lo = grid_1d[0];
    let x_hi = grid_1d[grid_1d.len() - 1];
    let mut h = 0.02;
    let (xs, tail) = integrate(h, x_lo, x_hi);
    let mut prev = resample(&xs, &tail, grid_1d);
    let mut residual = f64::INFINITY;
    for _ in 0..8 {
        h /= 2.0;
        let (xs, tail) = integrate(h, x_lo, x_hi);
        let cur = resample(&xs, &tail, grid_1d);
        residual = prev
            .iter()
            .zip(&cur)
            .map(|(a, b)| {
                let scale = a.abs().max(b.abs()).max(1e-300);
                ((a - b) / scale).abs().min((a - b).abs() / 1e-12)
            })
            .fold(0.0, f64::max);
        if residual < tolerance {
            return Ok(WaveProfile {
                xs: grid_1d.to_vec(),
                w: cur.iter().map(|e| 1.0 - e).collect(),
                one_minus_w: cur,
            });
        }
        prev = cur;
    }
    Err(Error::NoConvergence {
        what: "wave profile",
        residual,
    })
}
