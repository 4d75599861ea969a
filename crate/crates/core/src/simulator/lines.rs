//! Stopping lines: particles that are the first of their lineage to reach a
//! level. Crossings inside a lifetime are decided with the Brownian bridge
//! crossing probability, so no time stepping is involved.

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::genealogy::{GenealogySnapshot, NO_PARENT};
use crate::model::Normalization;
use crate::rng::{rng_from_seed, SimRng};
use crate::simulator::DEFAULT_POPULATION_CAP;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StoppingLineReadout {
    pub level: f64,
    pub h_count: u64,
    /// `k e^{-k} H_k`.
    pub z_k: f64,
}

/// Probability that a Brownian bridge of variance `var` per unit time from
/// `x0` to `x1` over `dt` reaches `level`; both ends assumed below it.
#[inline]
pub(crate) fn bridge_crossing(x0: f64, x1: f64, level: f64, var: f64, dt: f64) -> f64 {
    if x0 >= level || x1 >= level {
        return 1.0;
    }
    (-2.0 * (level - x0) * (level - x1) / (var * dt)).exp()
}

/// Runs an ABBS BBM from the origin until every lineage has reached `k`.
pub fn stopping_line(norm: Normalization, k: f64, seed: u64) -> Result<StoppingLineReadout> {
    let mut rng = rng_from_seed(seed);
    let h = stopping_line_from(norm, 0.0, k, &mut rng, DEFAULT_POPULATION_CAP as u64)?;
    Ok(StoppingLineReadout {
        level: k,
        h_count: h,
        z_k: k * (-k).exp() * h as f64,
    })
}

/// Number of lineages of a BBM started at `x0` that reach `k`; a particle
/// is frozen at its first passage. `cap` bounds the particles ever alive.
pub fn stopping_line_from(norm: Normalization, x0: f64, k: f64, rng: &mut SimRng, cap: u64) -> Result<u64> {
    if norm != Normalization::ABBS {
        return Err(Error::param("normalization", "stopping lines are defined for ABBS"));
    }
    if !(k > 0.0) {
        return Err(Error::param("k", "level must be positive"));
    }
    if x0 >= k {
        return Ok(1);
    }
    let var = norm.variance;
    let sigma = norm.sigma();
    let mut stack = vec![x0];
    let mut hits = 0u64;
    let mut created = 1u64;
    while let Some(x) = stack.pop() {
        let life: f64 = rng.sample::<f64, _>(Exp1) / norm.branch_rate;
        let z: f64 = rng.sample(StandardNormal);
        let y = x + norm.drift * life + sigma * life.sqrt() * z;
        let p = bridge_crossing(x, y, k, var, life);
        if p >= 1.0 || rng.random::<f64>() < p {
            hits += 1;
        } else {
            created += 2;
            if created > cap {
                return Err(Error::PopulationCap {
                    cap: cap as usize,
                    time: f64::NAN,
                });
            }
            stack.push(y);
            stack.push(y);
        }
    }
    Ok(hits)
}

/// First passages at a level inside a simulated genealogy.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstPassageCensus {
    /// Lineages that reached the level before the final time.
    pub hits: u64,
    /// Leaves whose lineage has not reached it yet.
    pub open_leaves: Vec<usize>,
}

/// Decides, record by record, whether each lineage of an unpruned
/// checkpoint-free snapshot reached `level` (upward) before the final time.
pub fn first_passage_census(snap: &GenealogySnapshot, level: f64, rng: &mut SimRng) -> Result<FirstPassageCensus> {
    if snap.is_pruned() {
        return Err(Error::param("snapshot", "first passages need an unpruned snapshot"));
    }
    if !snap.checkpoint_times.is_empty() {
        // the bridge law between endpoints is only free without checkpoints
        return Err(Error::param("snapshot", "first passages need a checkpoint-free snapshot"));
    }
    let var = snap.normalization.variance;
    let n = snap.nodes.len();
    let mut hit = vec![false; n];
    let mut hits = 0u64;
    for i in 0..n {
        let node = &snap.nodes[i];
        let parent_hit = node.parent != NO_PARENT && hit[node.parent as usize];
        if parent_hit {
            hit[i] = true;
            continue;
        }
        let dt = node.end_time - node.birth_time;
        let p = if dt > 0.0 {
            bridge_crossing(node.birth_pos, node.end_pos, level, var, dt)
        } else if node.birth_pos >= level {
            1.0
        } else {
            0.0
        };
        if p >= 1.0 || (p > 0.0 && rng.random::<f64>() < p) {
            hit[i] = true;
            hits += 1;
        }
    }
    let open_leaves = snap
        .leaves
        .iter()
        .enumerate()
        .filter(|(_, &l)| !hit[l as usize])
        .map(|(k, _)| k)
        .collect();
    Ok(FirstPassageCensus { hits, open_leaves })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_level_is_hit_by_root() {
        let r = stopping_line(Normalization::ABBS, 1e-9, 5).unwrap();
        assert_eq!(r.h_count, 1);
        assert!(r.z_k < 1e-8);
    }

    #[test]
    fn level_six_is_finite_and_positive() {
        for seed in 0..10 {
            let r = stopping_line(Normalization::ABBS, 6.0, seed).unwrap();
            assert!(r.h_count >= 1 && r.z_k > 0.0);
        }
    }

    #[test]
    fn rejects_standard() {
        assert!(stopping_line(Normalization::STANDARD, 1.0, 1).is_err());
        assert!(stopping_line(Normalization::ABBS, -1.0, 1).is_err());
    }
}
