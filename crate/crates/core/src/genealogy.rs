//! Genealogy of a simulated population: one record per particle lifetime,
//! parent links, and ancestral positions at a fixed set of checkpoint times.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Direction, Normalization, Path, PointMeasure};

/// Sentinel parent of a root record.
pub const NO_PARENT: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Fate {
    /// Split into two children at `end_time`.
    Split,
    /// Alive at the final time.
    Leaf,
    /// Discarded at `end_time` by the pruning policy.
    Pruned,
}

/// One particle lifetime `[birth_time, end_time]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub parent: u32,
    pub birth_time: f64,
    pub end_time: f64,
    pub birth_pos: f64,
    pub end_pos: f64,
    pub fate: Fate,
    pub(crate) ckpt_offset: u32,
    pub(crate) ckpt_first: u32,
    pub(crate) ckpt_count: u32,
}

impl Node {
    pub fn is_root(&self) -> bool {
        self.parent == NO_PARENT
    }
}

/// Pruning applied during a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PruningPolicy {
    None,
    /// Drop a particle that falls more than `gap` behind the running
    /// extremum (below the running max, or above the running min).
    GapToExtremum { gap: f64 },
}

impl PruningPolicy {
    /// Gap of 12 length units.
    pub const DEFAULT: PruningPolicy = PruningPolicy::GapToExtremum { gap: 12.0 };

    pub fn validate(&self) -> Result<()> {
        match *self {
            PruningPolicy::None => Ok(()),
            PruningPolicy::GapToExtremum { gap } if gap > 0.0 && gap.is_finite() => Ok(()),
            PruningPolicy::GapToExtremum { .. } => Err(Error::param("gap", "must be positive")),
        }
    }
}

/// Output of a branching simulation.
#[derive(Debug, Clone)]
pub struct GenealogySnapshot {
    pub normalization: Normalization,
    pub start_time: f64,
    pub final_time: f64,
    pub rng_seed: u64,
    pub pruning: PruningPolicy,
    pub checkpoint_times: Vec<f64>,
    pub(crate) nodes: Vec<Node>,
    /// Leaf records in creation order.
    pub(crate) leaves: Vec<u32>,
    pub(crate) ckpt_values: Vec<f64>,
}

impl GenealogySnapshot {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn num_leaves(&self) -> usize {
        self.leaves.len()
    }

    pub fn leaf_node(&self, leaf: usize) -> Result<&Node> {
        self.leaves
            .get(leaf)
            .map(|&i| &self.nodes[i as usize])
            .ok_or(Error::LeafOutOfRange(leaf))
    }

    pub fn leaf_position(&self, leaf: usize) -> Result<f64> {
        self.leaf_node(leaf).map(|n| n.end_pos)
    }

    pub fn leaf_positions(&self) -> impl Iterator<Item = f64> + '_ {
        self.leaves.iter().map(move |&i| self.nodes[i as usize].end_pos)
    }

    pub fn pruned_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.fate == Fate::Pruned).count()
    }

    pub fn is_pruned(&self) -> bool {
        self.nodes.iter().any(|n| n.fate == Fate::Pruned)
    }

    /// Number of split events.
    pub fn num_splits(&self) -> usize {
        self.nodes.iter().filter(|n| n.fate == Fate::Split).count()
    }

    /// Leaf positions as a point measure.
    pub fn point_measure(&self) -> PointMeasure {
        let mut atoms: Vec<f64> = self.leaf_positions().collect();
        atoms.sort_by(f64::total_cmp);
        PointMeasure::from_sorted_unchecked(atoms)
    }

    /// Index of the extremal leaf; ties go to the earliest-created leaf.
    pub fn extremal_leaf(&self) -> Result<usize> {
        let dir = self.normalization.direction;
        let mut best: Option<(usize, f64)> = None;
        for (k, x) in self.leaf_positions().enumerate() {
            match best {
                Some((_, b)) if !dir.beats(x, b) => {}
                _ => best = Some((k, x)),
            }
        }
        best.map(|(k, _)| k).ok_or(Error::EmptyMeasure)
    }

    pub fn extremum(&self) -> Result<f64> {
        self.extremal_leaf().and_then(|k| self.leaf_position(k))
    }

    /// Split time of leaves `i` and `j`: the time their last common ancestor
    /// divided. Leaves from different initial particles separate at the
    /// start time.
    pub fn split_time(&self, i: usize, j: usize) -> Result<f64> {
        if i == j {
            return Err(Error::SameLeaf);
        }
        let a = *self.leaves.get(i).ok_or(Error::LeafOutOfRange(i))?;
        let b = *self.leaves.get(j).ok_or(Error::LeafOutOfRange(j))?;
        Ok(self.split_time_nodes(a, b))
    }

    pub(crate) fn split_time_nodes(&self, mut a: u32, mut b: u32) -> f64 {
        // parents are always created before their children
        while a != b {
            if a > b {
                a = self.nodes[a as usize].parent;
            } else {
                b = self.nodes[b as usize].parent;
            }
            if a == NO_PARENT || b == NO_PARENT {
                return self.start_time;
            }
        }
        self.nodes[a as usize].end_time
    }

    /// Ancestral positions of the leaf at every checkpoint.
    pub fn ancestral_positions(&self, leaf: usize) -> Result<Vec<f64>> {
        let node = *self.leaves.get(leaf).ok_or(Error::LeafOutOfRange(leaf))?;
        Ok(self.node_lineage_positions(node))
    }

    pub(crate) fn node_lineage_positions(&self, mut node: u32) -> Vec<f64> {
        let mut out = vec![f64::NAN; self.checkpoint_times.len()];
        while node != NO_PARENT {
            let n = &self.nodes[node as usize];
            let off = n.ckpt_offset as usize;
            for k in 0..n.ckpt_count as usize {
                out[n.ckpt_first as usize + k] = self.ckpt_values[off + k];
            }
            node = n.parent;
        }
        out
    }

    /// Checkpoint values recorded on one record: `(checkpoint index, value)`.
    pub(crate) fn node_checkpoints(&self, node: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let n = &self.nodes[node];
        let off = n.ckpt_offset as usize;
        (0..n.ckpt_count as usize).map(move |k| (n.ckpt_first as usize + k, self.ckpt_values[off + k]))
    }

    /// Trajectory of the extremal particle, sampled at the checkpoints.
    pub fn extremal_path(&self) -> Result<Path> {
        if self.checkpoint_times.is_empty() {
            return Err(Error::param("checkpoints", "snapshot has no checkpoints"));
        }
        let k = self.extremal_leaf()?;
        let values = self.ancestral_positions(k)?;
        let mut times = self.checkpoint_times.clone();
        let mut values = values;
        // Path requires the origin at time zero; shift if the run started later.
        if self.start_time != 0.0 {
            for t in times.iter_mut() {
                *t -= self.start_time;
            }
        }
        if times[0] != 0.0 {
            return Err(Error::param("checkpoints", "first checkpoint must be the start time"));
        }
        // final checkpoint equals the leaf position exactly
        if let (Some(&last_t), Some(v)) = (times.last(), values.last_mut()) {
            if last_t == self.final_time - self.start_time {
                *v = self.leaf_position(k)?;
            }
        }
        Path::new(times, values)
    }

    /// Leaves that separated from the extremal leaf after `final_time - zeta`,
    /// recentred at the extremum (the extremal leaf contributes the atom 0).
    pub fn window_decoration(&self, zeta: f64) -> Result<PointMeasure> {
        if !(zeta > 0.0) {
            return Err(Error::param("zeta", "must be positive"));
        }
        let k = self.extremal_leaf()?;
        let ext_node = self.leaves[k];
        let x1 = self.nodes[ext_node as usize].end_pos;
        let cutoff = self.final_time - zeta;

        // oldest ancestor of the extremal leaf that splits after the cutoff
        let mut top = ext_node;
        let mut cur = self.nodes[ext_node as usize].parent;
        while cur != NO_PARENT && self.nodes[cur as usize].end_time > cutoff {
            top = cur;
            cur = self.nodes[cur as usize].parent;
        }
        let mut inside = vec![false; self.nodes.len()];
        inside[top as usize] = true;
        for i in (top as usize + 1)..self.nodes.len() {
            let p = self.nodes[i].parent;
            if p != NO_PARENT && inside[p as usize] {
                inside[i] = true;
            }
        }
        let mut atoms: Vec<f64> = self
            .leaves
            .iter()
            .filter(|&&l| inside[l as usize])
            .map(|&l| self.nodes[l as usize].end_pos - x1)
            .collect();
        atoms.sort_by(f64::total_cmp);
        Ok(PointMeasure::from_sorted_unchecked(atoms))
    }

    pub fn direction(&self) -> Direction {
        self.normalization.direction
    }

    /// JSON document with explicit field names.
    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct ParticleJson {
            position: f64,
            parent: Option<u32>,
            birth_time: f64,
            end_time: f64,
            fate: Fate,
        }
        let particles: Vec<ParticleJson> = self
            .nodes
            .iter()
            .map(|n| ParticleJson {
                position: n.end_pos,
                parent: (n.parent != NO_PARENT).then_some(n.parent),
                birth_time: n.birth_time,
                end_time: n.end_time,
                fate: n.fate,
            })
            .collect();
        let checkpoint_positions: Vec<Vec<Option<f64>>> = (0..self.leaves.len())
            .map(|k| {
                self.node_lineage_positions(self.leaves[k])
                    .into_iter()
                    .map(|v| v.is_finite().then_some(v))
                    .collect()
            })
            .collect();
        serde_json::json!({
            "final_time": self.final_time,
            "start_time": self.start_time,
            "normalization": self.normalization,
            "pruning": self.pruning,
            "rng_seed": self.rng_seed,
            "checkpoint_times": self.checkpoint_times,
            "particles": particles,
            "leaves": self.leaves,
            "checkpoint_positions": checkpoint_positions,
        })
    }
}
