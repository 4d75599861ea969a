//! Exact event-driven simulation of branching Brownian motion.
//!
//! Each particle draws its exponential lifetime at birth and is then moved
//! forward by exact Gaussian increments: to every checkpoint it crosses, to
//! the pruning boundaries it lives through, and to its split (or the final
//! time). Time is cut into slices only so that pruning can compare every
//! particle alive at a slice boundary with the true extremum at that instant.

mod diagnostics;
mod lines;

pub use diagnostics::{
    barrier_census, envelope_check, to_standard_frame, BarrierCensus, EnvelopeReport,
};
pub use lines::{
    first_passage_census, stopping_line, stopping_line_from, FirstPassageCensus,
    StoppingLineReadout,
};

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::Serialize;
use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::genealogy::{Fate, GenealogySnapshot, Node, PruningPolicy, NO_PARENT};
use crate::model::Normalization;
use crate::rng::{rng_from_seed, SimRng};

/// Default cap on the number of particle records.
pub const DEFAULT_POPULATION_CAP: usize = 20_000_000;

/// Time between pruning sweeps.
pub const DEFAULT_PRUNE_INTERVAL: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct SimOptions {
    pub population_cap: usize,
    pub prune_interval: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            population_cap: DEFAULT_POPULATION_CAP,
            prune_interval: DEFAULT_PRUNE_INTERVAL,
        }
    }
}

/// Full description of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimSpec {
    pub normalization: Normalization,
    pub start_time: f64,
    pub t_end: f64,
    /// Positions of the initial particles.
    pub initial: Vec<f64>,
    pub checkpoints: Vec<f64>,
    pub pruning: PruningPolicy,
    pub options: SimOptions,
}

impl SimSpec {
    pub fn new(normalization: Normalization, t_end: f64) -> Self {
        SimSpec {
            normalization,
            start_time: 0.0,
            t_end,
            initial: vec![0.0],
            checkpoints: Vec::new(),
            pruning: PruningPolicy::None,
            options: SimOptions::default(),
        }
    }

    pub fn checkpoints(mut self, c: Vec<f64>) -> Self {
        self.checkpoints = c;
        self
    }

    pub fn pruning(mut self, p: PruningPolicy) -> Self {
        self.pruning = p;
        self
    }

    pub fn options(mut self, o: SimOptions) -> Self {
        self.options = o;
        self
    }

    /// Restart from a population observed at `start_time`.
    pub fn from_population(mut self, start_time: f64, initial: Vec<f64>) -> Self {
        self.start_time = start_time;
        self.initial = initial;
        self
    }

    pub fn run(&self, seed: u64) -> Result<GenealogySnapshot> {
        Engine::new(self, seed, false)?.run().map(|(snap, _)| snap)
    }
}

/// Simulates one BBM started from a single particle at the origin.
pub fn simulate(
    norm: Normalization,
    t_end: f64,
    checkpoints: &[f64],
    pruning: PruningPolicy,
    seed: u64,
) -> Result<GenealogySnapshot> {
    SimSpec::new(norm, t_end)
        .checkpoints(checkpoints.to_vec())
        .pruning(pruning)
        .run(seed)
}

/// 65 uniform checkpoints on `[0, t]` plus `t/2` and `t - zeta`.
pub fn default_checkpoints(t: f64, zeta: f64) -> Vec<f64> {
    let mut c: Vec<f64> = (0..=64).map(|i| t * i as f64 / 64.0).collect();
    c.push(t / 2.0);
    if zeta > 0.0 && zeta < t {
        c.push(t - zeta);
    }
    c.sort_by(f64::total_cmp);
    c.dedup();
    c
}

/// Spine run: the snapshot plus which leaf carries the spine.
#[derive(Debug, Clone)]
pub struct SpineRun {
    pub snapshot: GenealogySnapshot,
    pub spine_leaf: usize,
    pub emissions: usize,
}

/// Simulates BBM under the size-biased measure of the additive martingale
/// `sum exp(-X)` (ABBS normalization only): a driftless spine of variance 2
/// emitting independent ABBS copies at rate 2.
pub fn spine_simulate(norm: Normalization, t_end: f64, checkpoints: &[f64], seed: u64) -> Result<SpineRun> {
    if norm != Normalization::ABBS {
        return Err(Error::param("normalization", "spine decomposition is implemented for ABBS"));
    }
    let spec = SimSpec::new(norm, t_end).checkpoints(checkpoints.to_vec());
    let (snapshot, spine_node) = Engine::new(&spec, seed, true)?.run()?;
    let spine_node = spine_node.expect("spine run tracks its spine");
    let spine_leaf = snapshot
        .leaves
        .iter()
        .position(|&l| l == spine_node)
        .expect("spine survives to the final time");
    let mut emissions = 0;
    let mut cur = snapshot.nodes[spine_node as usize].parent;
    while cur != NO_PARENT {
        emissions += 1;
        cur = snapshot.nodes[cur as usize].parent;
    }
    Ok(SpineRun {
        snapshot,
        spine_leaf,
        emissions,
    })
}

#[derive(Debug, Clone, Copy)]
struct Law {
    drift: f64,
    sigma: f64,
    rate: f64,
}

#[derive(Debug, Clone, Copy)]
struct Live {
    node: u32,
    time: f64,
    pos: f64,
    next_ck: u32,
    ck_end: u32,
    spine: bool,
}

struct Engine<'a> {
    spec: &'a SimSpec,
    ckpts: Vec<f64>,
    rng: SimRng,
    seed: u64,
    law: Law,
    spine_law: Law,
    with_spine: bool,
    nodes: Vec<Node>,
    leaves: Vec<u32>,
    ckpt_values: Vec<f64>,
}

impl<'a> Engine<'a> {
    fn new(spec: &'a SimSpec, seed: u64, with_spine: bool) -> Result<Self> {
        spec.normalization.validate()?;
        spec.pruning.validate()?;
        if !spec.t_end.is_finite() || !spec.start_time.is_finite() || spec.t_end < spec.start_time {
            return Err(Error::param("t_end", "must be finite and not before the start time"));
        }
        if spec.initial.is_empty() || spec.initial.iter().any(|x| !x.is_finite()) {
            return Err(Error::param("initial", "need at least one finite initial position"));
        }
        if !(spec.options.prune_interval > 0.0) {
            return Err(Error::param("prune_interval", "must be positive"));
        }
        let mut ckpts = spec.checkpoints.clone();
        if ckpts.iter().any(|&c| !(c >= spec.start_time && c <= spec.t_end)) {
            return Err(Error::param("checkpoints", "must lie in [start, t_end]"));
        }
        ckpts.sort_by(f64::total_cmp);
        ckpts.dedup();
        let n = spec.normalization;
        Ok(Engine {
            spec,
            ckpts,
            rng: rng_from_seed(seed),
            seed,
            law: Law {
                drift: n.drift,
                sigma: n.sigma(),
                rate: n.branch_rate,
            },
            spine_law: Law {
                drift: 0.0,
                sigma: n.sigma(),
                rate: 2.0,
            },
            with_spine,
            nodes: Vec::new(),
            leaves: Vec::new(),
            ckpt_values: Vec::new(),
        })
    }

    fn cap_check(&self, extra: usize, time: f64) -> Result<()> {
        let cap = self.spec.options.population_cap;
        if self.nodes.len() + extra > cap {
            return Err(Error::PopulationCap { cap, time });
        }
        Ok(())
    }

    fn born(&mut self, parent: u32, time: f64, pos: f64, spine: bool) -> Live {
        let law = if spine { self.spine_law } else { self.law };
        let life: f64 = self.rng.sample::<f64, _>(Exp1) / law.rate;
        let t_end = self.spec.t_end;
        let (end, fate) = if time + life >= t_end {
            (t_end, Fate::Leaf)
        } else {
            (time + life, Fate::Split)
        };
        let first = if parent == NO_PARENT {
            self.ckpts.partition_point(|&c| c < time)
        } else {
            self.ckpts.partition_point(|&c| c <= time)
        };
        let last = self.ckpts.partition_point(|&c| c <= end).max(first);
        let offset = self.ckpt_values.len();
        self.ckpt_values.resize(offset + (last - first), f64::NAN);
        let idx = self.nodes.len() as u32;
        self.nodes.push(Node {
            parent,
            birth_time: time,
            end_time: end,
            birth_pos: pos,
            end_pos: f64::NAN,
            fate,
            ckpt_offset: offset as u32,
            ckpt_first: first as u32,
            ckpt_count: (last - first) as u32,
        });
        Live {
            node: idx,
            time,
            pos,
            next_ck: first as u32,
            ck_end: last as u32,
            spine,
        }
    }

    #[inline]
    fn step(&mut self, p: &mut Live, to: f64) {
        let dt = to - p.time;
        if dt > 0.0 {
            let law = if p.spine { self.spine_law } else { self.law };
            let z: f64 = self.rng.sample(StandardNormal);
            p.pos += law.drift * dt + law.sigma * dt.sqrt() * z;
            p.time = to;
        }
    }

    fn advance(&mut self, p: &mut Live, to: f64) {
        while p.next_ck < p.ck_end && self.ckpts[p.next_ck as usize] <= to {
            let c = self.ckpts[p.next_ck as usize];
            self.step(p, c);
            let node = &self.nodes[p.node as usize];
            let slot = node.ckpt_offset + (p.next_ck - node.ckpt_first);
            self.ckpt_values[slot as usize] = p.pos;
            p.next_ck += 1;
        }
        self.step(p, to);
    }

    fn run(mut self) -> Result<(GenealogySnapshot, Option<u32>)> {
        let spec = self.spec;
        let start = spec.start_time;
        let t_end = spec.t_end;
        self.cap_check(spec.initial.len(), start)?;

        let mut alive: Vec<Live> = Vec::with_capacity(spec.initial.len());
        for (i, &x) in spec.initial.iter().enumerate() {
            let spine = self.with_spine && i == 0;
            alive.push(self.born(NO_PARENT, start, x, spine));
        }
        let mut spine_leaf = None;

        let interval = match spec.pruning {
            PruningPolicy::None => f64::INFINITY,
            PruningPolicy::GapToExtremum { .. } => spec.options.prune_interval,
        };
        let dir = spec.normalization.direction;
        let mut slice_start = start;
        let mut stack: Vec<Live> = Vec::new();
        loop {
            let slice_end = (slice_start + interval).min(t_end);
            stack.clear();
            stack.extend(alive.drain(..).rev());
            while let Some(mut p) = stack.pop() {
                let end = self.nodes[p.node as usize].end_time;
                if end <= slice_end {
                    self.advance(&mut p, end);
                    let node = &mut self.nodes[p.node as usize];
                    node.end_pos = p.pos;
                    if node.fate == Fate::Leaf {
                        self.leaves.push(p.node);
                        if p.spine {
                            spine_leaf = Some(p.node);
                        }
                    } else {
                        self.cap_check(2, end)?;
                        // second child pops first; the spine continues as the first
                        let b = self.born(p.node, end, p.pos, false);
                        let a = self.born(p.node, end, p.pos, p.spine);
                        stack.push(b);
                        stack.push(a);
                    }
                } else {
                    self.advance(&mut p, slice_end);
                    alive.push(p);
                }
            }
            if alive.is_empty() || slice_end >= t_end {
                break;
            }
            if let PruningPolicy::GapToExtremum { gap } = spec.pruning {
                let best = alive
                    .iter()
                    .map(|p| dir.orient(p.pos))
                    .fold(f64::NEG_INFINITY, f64::max);
                let nodes = &mut self.nodes;
                alive.retain(|p| {
                    if p.spine || dir.orient(p.pos) >= best - gap {
                        return true;
                    }
                    let node = &mut nodes[p.node as usize];
                    node.fate = Fate::Pruned;
                    node.end_time = p.time;
                    node.end_pos = p.pos;
                    node.ckpt_count = p.next_ck - node.ckpt_first;
                    false
                });
            }
            slice_start = slice_end;
        }

        let snap = GenealogySnapshot {
            normalization: spec.normalization,
            start_time: start,
            final_time: t_end,
            rng_seed: self.seed,
            pruning: spec.pruning,
            checkpoint_times: self.ckpts,
            nodes: self.nodes,
            leaves: self.leaves,
            ckpt_values: self.ckpt_values,
        };
        Ok((snap, spine_leaf))
    }
}

/// Martingale observables of a snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MartingaleReadout {
    /// Derivative martingale.
    pub z_value: f64,
    /// Additive martingale.
    pub m_value: f64,
    pub time: f64,
    /// Set when the snapshot was pruned, so the sums miss particles.
    pub approximate: bool,
}

/// Derivative and additive martingales at the final time.
///
/// STANDARD: `z = sum (sqrt2 t - X) e^{-sqrt2 (sqrt2 t - X)}`,
/// `m = sum e^{-sqrt2 (sqrt2 t - X)}`. ABBS: `z = sum X e^{-X}`,
/// `m = sum e^{-X}`. Other normalizations are mapped to the standard frame.
pub fn martingales(snap: &GenealogySnapshot) -> Result<MartingaleReadout> {
    let t = snap.final_time;
    let norm = snap.normalization;
    let (mut z, mut m) = (0.0, 0.0);
    if norm == Normalization::ABBS {
        for x in snap.leaf_positions() {
            let w = (-x).exp();
            z += x * w;
            m += w;
        }
    } else {
        for x in snap.leaf_positions() {
            let y = SQRT_2 * t - to_standard_frame(&norm, t, x)?;
            let w = (-SQRT_2 * y).exp();
            z += y * w;
            m += w;
        }
    }
    Ok(MartingaleReadout {
        z_value: z,
        m_value: m,
        time: t,
        approximate: snap.is_pruned(),
    })
}
