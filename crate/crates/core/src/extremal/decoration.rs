//! Rejection sampler of the decoration seen from the minimum (ABBS
//! orientation).
//!
//! An attempt draws `b` uniformly on `(0, b_max]`, the spine
//! `Y^(b) = -sqrt2 Gamma^(b)` and rate-2 emission times. Copies emitted at
//! backward times `s <= zeta` are simulated as ABBS branching Brownian
//! motions of age `s` placed at `Y^(b)(s)`; they form the returned atoms
//! and must all lie at or above 0. Copies emitted in `(zeta, horizon]` only
//! enter through the event that their minimum stays at or above 0. Given
//! the spine, the emissions violating it form a Poisson process of
//! intensity `2 G_s(-Y^(b)(s)) ds`, with `G_s(x) = P(min N(s) <= x)`, so the
//! event has probability `exp(-2 int G_s(-Y^(b)(s)) ds)`; `G_s` comes from
//! the F-KPP solution with Heaviside data.

use rand::{Rng, RngCore};
use rand_distr::Poisson;
use serde::Serialize;
use std::f64::consts::SQRT_2;

use super::spine::sample_gamma_at;
use crate::error::{Error, Result};
use crate::fkpp::{evolve, Field, Grid, InitialCondition};
use crate::model::{Normalization, PointMeasure};
use crate::rng::{rng_from_seed, SimRng};
use crate::simulator::SimSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecorationParams {
    pub zeta: f64,
    pub horizon: f64,
    pub b_max: f64,
    /// Spine grid step for the acceptance integral.
    pub dt: f64,
    pub attempt_cap: usize,
}

impl DecorationParams {
    /// `horizon = 3 zeta + 10`, `b_max = 8`, `dt = 0.005`.
    pub fn new(zeta: f64) -> Self {
        DecorationParams {
            zeta,
            horizon: 3.0 * zeta + 10.0,
            b_max: 8.0,
            dt: 0.005,
            attempt_cap: 1_000_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.zeta > 0.0) {
            return Err(Error::param("zeta", "must be positive"));
        }
        if !(self.horizon >= self.zeta && self.horizon.is_finite()) {
            return Err(Error::param("horizon", "need zeta <= horizon < inf"));
        }
        if !(self.b_max > 0.0 && self.b_max.is_finite()) {
            return Err(Error::param("b_max", "must be positive"));
        }
        if !(self.dt > 0.0) {
            return Err(Error::param("dt", "must be positive"));
        }
        if self.attempt_cap == 0 {
            return Err(Error::param("attempt_cap", "must be positive"));
        }
        Ok(())
    }
}

/// `G_s(x) = P(min of ABBS BBM at time s <= x)` for `s` in `[s0, s1]`,
/// tabulated from the standard F-KPP solution: `G_s(x) = u(s, -x/sqrt2)`
/// in the moving frame.
#[derive(Debug, Clone)]
pub struct MinLawTable {
    s0: f64,
    ds: f64,
    fields: Vec<Field>,
}

const TABLE_DS: f64 = 0.05;

impl MinLawTable {
    pub fn new(s0: f64, s1: f64) -> Result<Self> {
        if !(s0 > 0.0 && s1 >= s0) {
            return Err(Error::param("s0", "need 0 < s0 <= s1"));
        }
        let n = ((s1 - s0) / TABLE_DS).ceil() as usize;
        let ds = if n == 0 { 0.0 } else { (s1 - s0) / n as f64 };
        let times: Vec<f64> = (0..=n).map(|i| s0 + i as f64 * ds).collect();
        let grid = Grid::new(-40.0, 40.0, 0.02, 0.01)?;
        let fields = evolve(&InitialCondition::Heaviside(0.0), s1, grid, &times)?;
        Ok(MinLawTable { s0, ds, fields })
    }

    /// `G_s(x)`, linear in `s` between tabulated times.
    pub fn g(&self, s: f64, x: f64) -> f64 {
        let xi = -x / SQRT_2;
        if self.fields.len() == 1 || self.ds == 0.0 {
            return self.fields[0].at(xi);
        }
        let p = ((s - self.s0) / self.ds).clamp(0.0, (self.fields.len() - 1) as f64);
        let i = (p.floor() as usize).min(self.fields.len() - 2);
        let w = p - i as f64;
        self.fields[i].at(xi) * (1.0 - w) + self.fields[i + 1].at(xi) * w
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecorationSample {
    /// `delta_0` plus the copies emitted before `zeta`; minimum 0.
    pub atoms: PointMeasure,
    pub b: f64,
    pub accepted: bool,
    pub horizon: f64,
    pub zeta: f64,
    /// Attempts used, including the accepted one.
    pub attempts: usize,
}

/// Sampler with its `G_s` table built once.
#[derive(Debug, Clone)]
pub struct DecorationSampler {
    pub params: DecorationParams,
    table: Option<MinLawTable>,
}

impl DecorationSampler {
    pub fn new(params: DecorationParams) -> Result<Self> {
        params.validate()?;
        let table = if params.horizon > params.zeta {
            Some(MinLawTable::new(params.zeta, params.horizon)?)
        } else {
            None
        };
        Ok(DecorationSampler { params, table })
    }

    pub fn sample(&self, seed: u64) -> Result<DecorationSample> {
        let mut rng = rng_from_seed(seed);
        let p = &self.params;
        for attempt in 1..=p.attempt_cap {
            if let Some((atoms, b)) = self.attempt(&mut rng)? {
                return Ok(DecorationSample {
                    atoms,
                    b,
                    accepted: true,
                    horizon: p.horizon,
                    zeta: p.zeta,
                    attempts: attempt,
                });
            }
        }
        Err(Error::AttemptCap {
            attempts: p.attempt_cap,
            rate: 0.0,
        })
    }

    /// One proposal; `Some` when accepted.
    fn attempt(&self, rng: &mut SimRng) -> Result<Option<(PointMeasure, f64)>> {
        let p = &self.params;
        let b = p.b_max * (1.0 - rng.random::<f64>());
        let count = rng.sample(Poisson::new(2.0 * p.zeta).map_err(|e| Error::param("zeta", e.to_string()))?) as usize;
        let mut emissions: Vec<f64> = (0..count).map(|_| p.zeta * rng.random::<f64>()).collect();
        emissions.sort_by(f64::total_cmp);
        let n_tail = ((p.horizon - p.zeta) / p.dt).ceil() as usize;
        let tail_dt = if n_tail == 0 { 0.0 } else { (p.horizon - p.zeta) / n_tail as f64 };
        let mut times = emissions.clone();
        if self.table.is_some() {
            times.extend((0..=n_tail).map(|j| p.zeta + j as f64 * tail_dt));
        }
        let (gamma, _) = sample_gamma_at(b, &times, rng)?;
        let y: Vec<f64> = gamma.iter().map(|g| -SQRT_2 * g).collect();

        let mut atoms = vec![0.0];
        for (k, &s) in emissions.iter().enumerate() {
            let seed = rng.next_u64();
            if s <= 0.0 {
                atoms.push(y[k]);
                continue;
            }
            let snap = SimSpec::new(Normalization::ABBS, s).run(seed)?;
            for x in snap.leaf_positions() {
                let a = x + y[k];
                if a < 0.0 {
                    return Ok(None);
                }
                atoms.push(a);
            }
        }
        if let Some(table) = &self.table {
            let ys = &y[count..];
            let f: Vec<f64> = ys
                .iter()
                .enumerate()
                .map(|(j, &yv)| table.g(p.zeta + j as f64 * tail_dt, -yv))
                .collect();
            let integral = crate::special::trapezoid(&f, tail_dt);
            if rng.random::<f64>() >= (-2.0 * integral).exp() {
                return Ok(None);
            }
        }
        Ok(Some((PointMeasure::new(atoms)?, b)))
    }

    /// Fraction of accepted proposals among `attempts` fresh proposals,
    /// binned by `b` into `bins` equal bins of `(0, b_max]`. Returns
    /// `(proposals, accepted)` per bin.
    pub fn acceptance_by_b(&self, attempts: usize, bins: usize, seed: u64) -> Result<Vec<(usize, usize)>> {
        let mut rng = rng_from_seed(seed);
        let mut out = vec![(0usize, 0usize); bins.max(1)];
        for _ in 0..attempts {
            // the proposal draws b first, so replay the draw to bin it
            let mut probe = rng.clone();
            let b = self.params.b_max * (1.0 - probe.random::<f64>());
            let k = (((b / self.params.b_max) * out.len() as f64).ceil() as usize).clamp(1, out.len()) - 1;
            out[k].0 += 1;
            if self.attempt(&mut rng)?.is_some() {
                out[k].1 += 1;
            }
        }
        Ok(out)
    }
}

/// One decoration with `b` uniform on `(0, b_max]` and spine grid `dt`.
pub fn sample_decoration(zeta: f64, horizon: f64, b_max: f64, dt: f64, seed: u64) -> Result<DecorationSample> {
    let params = DecorationParams {
        zeta,
        horizon,
        b_max,
        dt,
        attempt_cap: DecorationParams::new(zeta).attempt_cap,
    };
    DecorationSampler::new(params)?.sample(seed)
}
