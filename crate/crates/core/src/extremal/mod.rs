//! Direct samplers of the limit objects: the Poisson backbone, the spine
//! process `Gamma^(b)`, the decoration built from it, the decorated process,
//! the auxiliary process and the conditioned-overshoot experiment.

mod auxiliary;
mod conditioned;
mod decoration;
mod spine;

pub use auxiliary::{
    auxiliary_extremum, auxiliary_process, conditioned_copy, eta_mean, sample_eta,
    AuxiliaryParams,
    CopyMaxLaw,
};
pub use conditioned::{conditioned_tail_experiment, ConditionedRecord, ConditionedRun};
pub use decoration::{
    sample_decoration, DecorationParams, DecorationSample, DecorationSampler, MinLawTable,
};
pub use spine::{sample_gamma_at, sample_spine_path, SpineSample};

use rand::Rng;
use rand_distr::Poisson;
use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::model::{superpose, Direction, Normalization, PointMeasure};
use crate::rng::{rng_from_seed, SimRng};

/// Limit intensity of a preset: `sqrt2 e^{-sqrt2 x}` (STANDARD, integrable
/// towards `+inf`) or `e^x` (ABBS, integrable towards `-inf`).
fn intensity_mass(norm: &Normalization, lo: f64, hi: f64) -> Result<f64> {
    if *norm == Normalization::STANDARD {
        if !lo.is_finite() {
            return Err(Error::param("window", "STANDARD intensity is not integrable at -inf"));
        }
        Ok((-SQRT_2 * lo).exp() - (-SQRT_2 * hi).exp())
    } else if *norm == Normalization::ABBS {
        if !hi.is_finite() {
            return Err(Error::param("window", "ABBS intensity is not integrable at +inf"));
        }
        Ok(hi.exp() - lo.exp())
    } else {
        Err(Error::param("norm", "limit intensity is defined for the presets only"))
    }
}

/// Mean number of backbone atoms in `window`.
pub fn ppp_mean(window: (f64, f64), norm: &Normalization) -> Result<f64> {
    let (lo, hi) = window;
    if lo.is_nan() || hi.is_nan() || lo > hi {
        return Err(Error::param("window", "need lo <= hi"));
    }
    if lo == hi {
        return Ok(0.0);
    }
    intensity_mass(norm, lo, hi)
}

/// Poisson backbone on `window` with the limit intensity of `norm`.
pub fn sample_ppp(window: (f64, f64), norm: &Normalization, seed: u64) -> Result<PointMeasure> {
    sample_ppp_with(window, norm, &mut rng_from_seed(seed))
}

pub fn sample_ppp_with(window: (f64, f64), norm: &Normalization, rng: &mut SimRng) -> Result<PointMeasure> {
    let mass = ppp_mean(window, norm)?;
    if mass == 0.0 {
        return Ok(PointMeasure::empty());
    }
    let count = rng.sample(Poisson::new(mass).map_err(|e| Error::param("window", e.to_string()))?) as usize;
    let (lo, hi) = window;
    let atoms: Vec<f64> = (0..count)
        .map(|_| {
            let u: f64 = rng.random();
            if *norm == Normalization::STANDARD {
                // F^{-1} of the mass from the left end
                -((-SQRT_2 * lo).exp() - u * mass).ln() / SQRT_2
            } else {
                (lo.exp() + u * mass).ln()
            }
        })
        .map(|x: f64| x.clamp(lo, hi))
        .collect();
    PointMeasure::new(atoms)
}

/// Where the decorations of [`assemble`] come from. Decorations are stored
/// in the orientation of the normalization (max 0 for STANDARD, min 0 for
/// ABBS).
#[derive(Debug, Clone)]
pub enum DecorationSource {
    /// `{0}` for every atom.
    Trivial,
    /// Uniform draws with replacement from a pool.
    Pool(Vec<PointMeasure>),
}

impl DecorationSource {
    /// A pool of ABBS sampler output mapped to `norm`: for STANDARD the
    /// decoration is `-Q / sqrt2`.
    pub fn from_abbs_pool(pool: Vec<PointMeasure>, norm: &Normalization) -> Result<Self> {
        if pool.is_empty() {
            return Err(Error::param("pool", "empty decoration pool"));
        }
        let pool = if *norm == Normalization::STANDARD {
            pool.iter().map(|q| q.scale(-1.0 / SQRT_2)).collect()
        } else if *norm == Normalization::ABBS {
            pool
        } else {
            return Err(Error::param("norm", "decorations are defined for the presets only"));
        };
        Ok(DecorationSource::Pool(pool))
    }

    fn draw(&self, rng: &mut SimRng) -> PointMeasure {
        match self {
            DecorationSource::Trivial => PointMeasure::from_sorted_unchecked(vec![0.0]),
            DecorationSource::Pool(p) => p[rng.random_range(0..p.len())].clone(),
        }
    }
}

/// Default margin by which the backbone is widened beyond the window on its
/// integrable side's opposite, so decorations of atoms just outside can
/// reach in.
pub const ASSEMBLE_MARGIN: f64 = 8.0;

/// Decorated Poisson process restricted to `window`: backbone on the window
/// widened by `margin` on the side the decorations extend towards, one
/// independent decoration per atom, superposed and restricted.
pub fn assemble(
    norm: &Normalization,
    window: (f64, f64),
    decorations: &DecorationSource,
    margin: f64,
    seed: u64,
) -> Result<PointMeasure> {
    let (lo, hi) = window;
    if !(margin >= 0.0) {
        return Err(Error::param("margin", "must be nonnegative"));
    }
    // decorations sit below their atom for maxima and above it for minima
    let backbone_window = match norm.direction {
        Direction::Max => (lo, hi + margin),
        Direction::Min => (lo - margin, hi),
    };
    let mut rng = rng_from_seed(seed);
    let backbone = sample_ppp_with(backbone_window, norm, &mut rng)?;
    let clusters: Vec<PointMeasure> = backbone
        .atoms()
        .iter()
        .map(|&x| decorations.draw(&mut rng).shift(x))
        .collect();
    Ok(superpose(&clusters).restrict(lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_window_is_empty() {
        let p = sample_ppp((1.0, 1.0), &Normalization::STANDARD, 3).unwrap();
        assert!(p.is_empty());
    }

    #[test]
    fn non_integrable_windows_rejected() {
        assert!(ppp_mean((f64::NEG_INFINITY, 0.0), &Normalization::STANDARD).is_err());
        assert!(ppp_mean((0.0, f64::INFINITY), &Normalization::ABBS).is_err());
        assert!((ppp_mean((0.0, f64::INFINITY), &Normalization::STANDARD).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn atoms_stay_in_window() {
        for s in 0..50 {
            let p = sample_ppp((-2.0, 3.0), &Normalization::STANDARD, s).unwrap();
            assert!(p.atoms().iter().all(|&x| (-2.0..=3.0).contains(&x)));
            let q = sample_ppp((-3.0, 1.0), &Normalization::ABBS, s).unwrap();
            assert!(q.atoms().iter().all(|&x| (-3.0..=1.0).contains(&x)));
        }
    }
}
