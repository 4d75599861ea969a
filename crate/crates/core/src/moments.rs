//! First-moment computations for Gaussian particle clouds, the median of
//! independent particles, the cycle (rotation) lemma and chord-constrained
//! Brownian bridges.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::ensemble::replicas;
use crate::error::{Error, Result};
use crate::model::Estimate;
use crate::rng::rng_from_seed;
use crate::special::{find_root, ln_normal_sf, log_add_exp};

/// `ln( e^t P(N(0,t) >= q) )`.
pub fn ln_expected_exceedance(t: f64, q: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::param("t", "must be positive"));
    }
    if q == f64::NEG_INFINITY {
        return Ok(t);
    }
    Ok(t + ln_normal_sf(q / t.sqrt()))
}

/// `e^t P(N(0,t) >= q)`: expected number of BBM particles above `q` at time
/// `t`, and equally for `e^t` independent Gaussian particles.
pub fn expected_exceedance(t: f64, q: f64) -> Result<f64> {
    ln_expected_exceedance(t, q).map(f64::exp)
}

/// `ln E[ Phi(q / sqrt t)^N ]` with `N` geometric of mean `e^t`.
fn ln_prob_all_below(t: f64, q: f64) -> f64 {
    let ln_p = -t;
    let ln_tail = ln_normal_sf(q / t.sqrt());
    let ln_body = ln_normal_sf(-q / t.sqrt());
    // p s / (1 - (1 - p) s) with s = 1 - Q, rewritten as p s / (Q + p s)
    ln_p + ln_body - log_add_exp(ln_tail, ln_p + ln_body)
}

/// Median of the maximum of `N(t)` independent `N(0, t)` positions, `N(t)`
/// geometric with mean `e^t`.
pub fn independent_median(t: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::param("t", "must be positive and finite"));
    }
    let s = t.sqrt();
    let lo = -50.0 * s - 50.0;
    let hi = s * ((2.0 * (t + 50.0)).sqrt() + 5.0);
    let target = 0.5f64.ln();
    find_root(|q| ln_prob_all_below(t, q) - target, lo, hi, 1e-12 * (1.0 + t))
        .ok_or(Error::NotBracketed { lo, hi })
}

/// Level `q` at which the expected exceedance equals `level`.
pub fn exceedance_level(t: f64, level: f64) -> Result<f64> {
    if !(level > 0.0) {
        return Err(Error::param("level", "must be positive"));
    }
    let s = t.sqrt();
    let lo = -50.0 * s - 50.0;
    let hi = s * ((2.0 * (t + 50.0 + level.ln().abs())).sqrt() + 5.0);
    let target = level.ln();
    find_root(|q| t + ln_normal_sf(q / s) - target, lo, hi, 1e-12 * (1.0 + t))
        .ok_or(Error::NotBracketed { lo, hi })
}

/// i.i.d. increments and the threshold their sum was conditioned on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationSample {
    pub increments: Vec<f64>,
    pub q: f64,
}

impl RotationSample {
    pub fn new(increments: Vec<f64>, q: f64) -> Result<Self> {
        if increments.len() < 2 {
            return Err(Error::param("increments", "need at least two"));
        }
        if increments.iter().any(|x| !x.is_finite()) {
            return Err(Error::param("increments", "must be finite"));
        }
        Ok(RotationSample { increments, q })
    }

    pub fn total(&self) -> f64 {
        self.increments.iter().sum()
    }
}

/// Number of cyclic rotations whose partial sums all stay at or below the
/// chord `s -> (s/t) S_t`. A partial sum equal to the chord (up to
/// rounding) before the last step is reported as a tie.
pub fn rotation_census(sample: &RotationSample) -> Result<usize> {
    let x = &sample.increments;
    let t = x.len();
    let total: f64 = x.iter().sum();
    let scale: f64 = x.iter().map(|v| v.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
    let tol = 1e-12 * scale;
    let mut count = 0;
    for r in 0..t {
        let mut s = 0.0;
        let mut ok = true;
        for k in 1..t {
            s += x[(r + k - 1) % t];
            let d = s - k as f64 / t as f64 * total;
            if d.abs() <= tol {
                return Err(Error::ChordTie);
            }
            if d > 0.0 {
                ok = false;
                break;
            }
        }
        if ok {
            count += 1;
        }
    }
    Ok(count)
}

/// Monte Carlo estimate of `t P(bridge stays below offset on [0, t])` for a
/// standard Brownian bridge from 0 to 0 of length `t`, on `steps` grid
/// intervals weighted by the exact per-interval non-crossing probability
/// (so the estimator is unbiased for any grid).
pub fn chord_bridge_probability(t: f64, offset: f64, n: usize, seed: u64) -> Result<Estimate> {
    chord_bridge_probability_steps(t, offset, n, 32, seed)
}

pub fn chord_bridge_probability_steps(t: f64, offset: f64, n: usize, steps: usize, seed: u64) -> Result<Estimate> {
    if !(t > 0.0) {
        return Err(Error::param("t", "must be positive"));
    }
    if n == 0 || steps == 0 {
        return Err(Error::param("n", "must be at least one"));
    }
    if offset <= 0.0 {
        return Estimate::from_samples(&vec![0.0; n]);
    }
    let dt = t / steps as f64;
    let xs = replicas(n, seed, 0, |_, s| {
        let mut rng = rng_from_seed(s);
        let mut x = 0.0f64;
        let mut w = 1.0f64;
        for i in 0..steps {
            let remaining = t - i as f64 * dt;
            let next = if i + 1 == steps {
                0.0
            } else {
                let mean = x * (remaining - dt) / remaining;
                let var = dt * (remaining - dt) / remaining;
                let z: f64 = rng.sample(StandardNormal);
                mean + var.sqrt() * z
            };
            if next >= offset {
                w = 0.0;
                break;
            }
            w *= -(-2.0 * (offset - x) * (offset - next) / dt).exp_m1();
            x = next;
        }
        t * w
    });
    Estimate::from_samples(&xs)
}

/// `1 - exp(-2 offset^2 / t)`.
pub fn bridge_below_exact(t: f64, offset: f64) -> f64 {
    if offset <= 0.0 {
        0.0
    } else {
        -(-2.0 * offset * offset / t).exp_m1()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_rotation() {
        let s = RotationSample::new(vec![0.0, 1.0], 0.0).unwrap();
        assert_eq!(rotation_census(&s).unwrap(), 1);
        let tie = RotationSample::new(vec![1.0, 1.0], 0.0).unwrap();
        assert_eq!(rotation_census(&tie), Err(Error::ChordTie));
    }

    #[test]
    fn total_mass_sentinel() {
        assert_eq!(expected_exceedance(3.0, f64::NEG_INFINITY).unwrap(), 3.0f64.exp());
        assert!(expected_exceedance(0.0, 1.0).is_err());
    }

    #[test]
    fn nonpositive_offset() {
        let e = chord_bridge_probability(10.0, 0.0, 10, 1).unwrap();
        assert_eq!(e.mean, 0.0);
    }
}
