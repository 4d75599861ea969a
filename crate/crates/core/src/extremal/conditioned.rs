//! Branching Brownian motion conditioned on an anomalously high maximum:
//! runs replicas and keeps those with `X_1(t) > sqrt2 t + a sqrt t + b`.

use serde::Serialize;
use std::f64::consts::SQRT_2;

use crate::ensemble::try_replicas;
use crate::error::{Error, Result};
use crate::genealogy::PruningPolicy;
use crate::model::{Normalization, PointMeasure};
use crate::rng::derive_seed;
use crate::simulator::SimSpec;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionedRecord {
    /// `X_1(t)` minus the threshold.
    pub overshoot: f64,
    /// `N(t) - X_1(t)`; its largest atom is 0.
    pub recentred: PointMeasure,
    pub replica: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionedRun {
    pub records: Vec<ConditionedRecord>,
    pub replicas_run: usize,
    pub threshold: f64,
    pub acceptance_rate: f64,
}

const BATCH: usize = 1024;

/// Runs STANDARD replicas in index order until `n_target` of them exceed
/// the threshold or `replica_cap` replicas have run. Only the atoms within
/// `depth` of the maximum are kept in the recentred measures.
#[allow(clippy::too_many_arguments)]
pub fn conditioned_tail_experiment(
    t: f64,
    a: f64,
    b: f64,
    n_target: usize,
    replica_cap: usize,
    pruning: PruningPolicy,
    depth: f64,
    seed: u64,
) -> Result<ConditionedRun> {
    if !(a > 0.0) {
        return Err(Error::param("a", "must be positive"));
    }
    if !(t > 0.0) {
        return Err(Error::param("t", "must be positive"));
    }
    if n_target == 0 {
        return Err(Error::param("n_target", "must be positive"));
    }
    let threshold = SQRT_2 * t + a * t.sqrt() + b;
    let mut records = Vec::new();
    let mut done = 0usize;
    while done < replica_cap && records.len() < n_target {
        let base = done;
        let n = BATCH.min(replica_cap - base);
        // replica `idx` is seeded by its global index, whatever the batching
        let batch = try_replicas(n, seed, 0, |i, _| {
            let idx = base + i;
            let s = derive_seed(seed, 0, idx as u64);
            let snap = SimSpec::new(Normalization::STANDARD, t).pruning(pruning).run(s)?;
            let top = snap.extremum()?;
            if top <= threshold {
                return Ok(None);
            }
            Ok(Some(ConditionedRecord {
                overshoot: top - threshold,
                recentred: snap.point_measure().shift(-top).restrict(-depth, 0.0),
                replica: idx,
            }))
        })?;
        for (i, r) in batch.into_iter().enumerate() {
            done = base + i + 1;
            if let Some(r) = r {
                records.push(r);
                if records.len() == n_target {
                    break;
                }
            }
        }
    }
    if records.is_empty() {
        return Err(Error::NoAcceptance { replicas: done });
    }
    Ok(ConditionedRun {
        acceptance_rate: records.len() as f64 / done as f64,
        records,
        replicas_run: done,
        threshold,
    })
}
