//! The auxiliary process `Pi(t) = sum_{x in eta} ln(Z)/sqrt2 + x + N_l^x(t)`
//! with `eta` Poisson of intensity `sqrt(2/pi) (-x) e^{-sqrt2 x}` on
//! `(-inf, 0)` and `N_l = N(t) - sqrt2 t`.
//!
//! The intensity of `eta` is not integrable at `-inf`, so only the atoms
//! whose copy reaches the observation window `[c + l0, inf)`,
//! `c = ln(Z)/sqrt2`, are sampled: by Poisson thinning they form a Poisson
//! process of intensity `lambda(x) P(max N_l(t) >= l0 - x)`, and the copy
//! of each kept atom is drawn conditioned on reaching the window. The
//! survival function of `max N_l(t)` is the F-KPP solution with Heaviside
//! data in the moving frame.

use rand::{Rng, RngCore};
use rand_distr::{Exp1, Poisson, StandardNormal};
use serde::Serialize;
use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};
use crate::fkpp::{evolve_to, Field, Grid, InitialCondition};
use crate::genealogy::PruningPolicy;
use crate::model::{Normalization, PointMeasure};
use crate::rng::{rng_from_seed, SimRng};
use crate::simulator::SimSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuxiliaryParams {
    /// Initial truncation of `eta` to `[-x_cap, 0)`; raised until the
    /// thinned intensity at `-x_cap` is below `1e-12` of its peak.
    pub x_cap: f64,
    /// Lower end of the window relative to `ln(Z)/sqrt2`.
    pub window_lo: f64,
    /// Tabulation step of the thinned intensity.
    pub dx: f64,
    /// Pruning of the simulated copies.
    pub pruning: PruningPolicy,
    pub attempt_cap: usize,
}

impl Default for AuxiliaryParams {
    fn default() -> Self {
        AuxiliaryParams {
            x_cap: 12.0,
            window_lo: -4.0,
            dx: 0.01,
            pruning: PruningPolicy::DEFAULT,
            attempt_cap: 100_000,
        }
    }
}

/// Law of `max N_l(t)`.
#[derive(Debug, Clone)]
pub struct CopyMaxLaw {
    pub t: f64,
    field: Option<Field>,
}

impl CopyMaxLaw {
    pub fn new(t: f64) -> Result<Self> {
        CopyMaxLaw::with_grid(t, Grid::default())
    }

    pub fn with_grid(t: f64, grid: Grid) -> Result<Self> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::param("t", "must be nonnegative and finite"));
        }
        let field = if t == 0.0 {
            None
        } else {
            Some(evolve_to(&InitialCondition::Heaviside(0.0), t, grid)?)
        };
        Ok(CopyMaxLaw { t, field })
    }

    /// `P(max N_l(t) > y)`.
    pub fn survival(&self, y: f64) -> f64 {
        match &self.field {
            None => (y < 0.0) as u8 as f64,
            Some(f) => f.at(y).clamp(0.0, 1.0),
        }
    }

    /// Draw of `max N_l(t)` conditioned to exceed `y`, by inverting the
    /// survival function.
    pub fn sample_above(&self, y: f64, rng: &mut SimRng) -> f64 {
        let f = match &self.field {
            None => return 0.0,
            Some(f) => f,
        };
        let top = self.survival(y);
        let target = top * (1.0 - rng.random::<f64>());
        // survival is nonincreasing; bisect on the grid range right of y
        let (mut lo, mut hi) = (y, f.grid.x_max);
        if self.survival(hi) >= target {
            return hi;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.survival(mid) >= target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

fn lambda(x: f64) -> f64 {
    (2.0 / PI).sqrt() * (-x) * (-SQRT_2 * x).exp()
}

/// Kept atoms of `eta`: those whose copy can reach `window_lo` (relative).
fn thinned_eta(law: &CopyMaxLaw, p: &AuxiliaryParams, rng: &mut SimRng) -> Result<Vec<f64>> {
    let l0 = p.window_lo;
    let nu = |x: f64| lambda(x) * law.survival(l0 - x);
    let mut x_cap = p.x_cap;
    let peak = |cap: f64| {
        let n = (cap / p.dx).ceil() as usize;
        (0..=n).map(|j| nu(-(j as f64) * p.dx)).fold(0.0f64, f64::max)
    };
    for _ in 0..20 {
        let pk = peak(x_cap);
        if pk == 0.0 || nu(-x_cap) <= 1e-12 * pk {
            break;
        }
        x_cap *= 1.5;
    }
    tabulated_ppp(nu, -x_cap, 0.0, p.dx, rng)
}

/// Poisson process of intensity `nu` on `[lo, hi]`: `nu` tabulated with
/// step about `dx`, cumulative mass by the trapezoid rule, atoms placed by
/// inverting it linearly.
fn tabulated_ppp(nu: impl Fn(f64) -> f64, lo: f64, hi: f64, dx: f64, rng: &mut SimRng) -> Result<Vec<f64>> {
    if !(hi > lo) {
        return Ok(Vec::new());
    }
    let n = ((hi - lo) / dx).ceil().max(1.0) as usize;
    let h = (hi - lo) / n as f64;
    let xs: Vec<f64> = (0..=n).map(|j| lo + j as f64 * h).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| nu(x)).collect();
    let mut cum = vec![0.0; n + 1];
    for j in 1..=n {
        cum[j] = cum[j - 1] + 0.5 * h * (vals[j - 1] + vals[j]);
    }
    let mass = cum[n];
    if mass == 0.0 {
        return Ok(Vec::new());
    }
    let count = rng.sample(Poisson::new(mass).map_err(|e| Error::param("window", e.to_string()))?) as usize;
    let mut atoms: Vec<f64> = (0..count)
        .map(|_| {
            let target = mass * rng.random::<f64>();
            let j = cum.partition_point(|&c| c < target).clamp(1, n);
            let w = (target - cum[j - 1]) / (cum[j] - cum[j - 1]).max(f64::MIN_POSITIVE);
            (xs[j - 1] + w.clamp(0.0, 1.0) * h).min(hi)
        })
        .collect();
    atoms.sort_by(f64::total_cmp);
    Ok(atoms)
}

/// Atoms of `eta` in the bounded window `[lo, hi]`, `hi <= 0`.
pub fn sample_eta(lo: f64, hi: f64, seed: u64) -> Result<PointMeasure> {
    if !(lo.is_finite() && lo <= hi && hi <= 0.0) {
        return Err(Error::param("window", "need -inf < lo <= hi <= 0"));
    }
    let atoms = tabulated_ppp(lambda, lo, hi, 1e-3, &mut rng_from_seed(seed))?;
    PointMeasure::new(atoms)
}

fn check_z(z: f64) -> Result<f64> {
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::param("z_sample", "must be positive"));
    }
    Ok(z.ln() / SQRT_2)
}

/// Largest atom of `Pi(t)`; `-inf` if no copy reaches the window (the
/// caller picks `window_lo` so this is negligible). Only the copy maxima
/// are drawn, from their exact conditional law.
pub fn auxiliary_extremum(z_sample: f64, law: &CopyMaxLaw, params: &AuxiliaryParams, rng: &mut SimRng) -> Result<f64> {
    let c = check_z(z_sample)?;
    let atoms = thinned_eta(law, params, rng)?;
    Ok(atoms
        .iter()
        .map(|&x| c + x + law.sample_above(params.window_lo - x, rng))
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Standard normal conditioned to be at least `a`.
fn normal_tail(a: f64, rng: &mut SimRng) -> f64 {
    if a < 0.5 {
        loop {
            let z: f64 = rng.sample(StandardNormal);
            if z >= a {
                return z;
            }
        }
    }
    // exponential proposal with the optimal rate
    let alpha = 0.5 * (a + (a * a + 4.0).sqrt());
    loop {
        let e: f64 = rng.sample(Exp1);
        let z = a + e / alpha;
        if rng.random::<f64>() <= (-(z - alpha).powi(2) / 2.0).exp() {
            return z;
        }
    }
}

/// Positions of `N_l(t)` conditioned on `max N_l(t) >= y`.
///
/// When the event is likely the copy is simulated until it happens.
/// Otherwise the size-biased construction is used: sum over particles
/// above the level and weight by `1/N_y`. Under the marked-particle law
/// the marked particle is a Brownian motion, here conditioned to end above
/// the level, and it branches at rate 2, each branching starting an
/// independent copy. Accepting with probability `1/N_y` gives the
/// conditional law exactly.
pub fn conditioned_copy(t: f64, y: f64, law: &CopyMaxLaw, params: &AuxiliaryParams, rng: &mut SimRng) -> Result<PointMeasure> {
    if t == 0.0 {
        if y > 0.0 {
            return Err(Error::param("y", "a copy at time 0 never exceeds a positive level"));
        }
        return Ok(PointMeasure::from_sorted_unchecked(vec![0.0]));
    }
    let drift = SQRT_2 * t;
    let level = y + drift;
    let p_hit = law.survival(y);
    if p_hit >= 0.05 {
        for _ in 0..params.attempt_cap {
            let snap = SimSpec::new(Normalization::STANDARD, t)
                .pruning(params.pruning)
                .run(rng.next_u64())?;
            if snap.extremum()? >= level {
                return Ok(snap.point_measure().shift(-drift));
            }
        }
        return Err(Error::AttemptCap {
            attempts: params.attempt_cap,
            rate: 0.0,
        });
    }
    let sd = t.sqrt();
    for _ in 0..params.attempt_cap {
        let end = sd * normal_tail(level / sd, rng);
        let k = rng.sample(Poisson::new(2.0 * t).map_err(|e| Error::param("t", e.to_string()))?) as usize;
        let mut times: Vec<f64> = (0..k).map(|_| t * rng.random::<f64>()).collect();
        times.sort_by(f64::total_cmp);
        let mut atoms = vec![end];
        let mut above = 1usize;
        let (mut s_prev, mut x_prev) = (0.0, 0.0);
        for &s in &times {
            // Brownian bridge from (s_prev, x_prev) to (t, end)
            let left = t - s_prev;
            let mean = x_prev + (s - s_prev) / left * (end - x_prev);
            let var = (s - s_prev) * (t - s) / left;
            let z: f64 = rng.sample(StandardNormal);
            let xs = mean + var.max(0.0).sqrt() * z;
            s_prev = s;
            x_prev = xs;
            let snap = SimSpec::new(Normalization::STANDARD, t)
                .from_population(s, vec![xs])
                .pruning(params.pruning)
                .run(rng.next_u64())?;
            for p in snap.leaf_positions() {
                above += (p >= level) as usize;
                atoms.push(p);
            }
        }
        if rng.random::<f64>() * above as f64 <= 1.0 {
            return Ok(PointMeasure::new(atoms)?.shift(-drift));
        }
    }
    Err(Error::AttemptCap {
        attempts: params.attempt_cap,
        rate: 0.0,
    })
}

/// `Pi(t)` restricted to `[ln(z)/sqrt2 + window_lo, inf)`.
pub fn auxiliary_process(t: f64, z_sample: f64, params: &AuxiliaryParams, seed: u64) -> Result<PointMeasure> {
    let law = CopyMaxLaw::new(t)?;
    auxiliary_process_with(t, z_sample, &law, params, &mut rng_from_seed(seed))
}

pub(crate) fn auxiliary_process_with(
    t: f64,
    z_sample: f64,
    law: &CopyMaxLaw,
    params: &AuxiliaryParams,
    rng: &mut SimRng,
) -> Result<PointMeasure> {
    let c = check_z(z_sample)?;
    let atoms = thinned_eta(law, params, rng)?;
    let mut out = Vec::new();
    for &x in &atoms {
        let copy = conditioned_copy(t, params.window_lo - x, law, params, rng)?;
        out.extend(copy.atoms().iter().map(|a| a + c + x));
    }
    Ok(PointMeasure::new(out)?.restrict(c + params.window_lo, f64::INFINITY))
}

/// Mean number of atoms of `eta` in `[lo, hi] within (-inf, 0)`, by
/// composite Simpson quadrature.
pub fn eta_mean(lo: f64, hi: f64) -> f64 {
    let n = 2000;
    let h = (hi - lo) / n as f64;
    let mut s = lambda(lo) + lambda(hi);
    for j in 1..n {
        s += lambda(lo + j as f64 * h) * if j % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}
