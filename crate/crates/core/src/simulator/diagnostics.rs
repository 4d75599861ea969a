//! Path diagnostics on checkpointed genealogies: localization envelopes and
//! the low/high particle census along chords.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::genealogy::{GenealogySnapshot, NO_PARENT};
use crate::model::{standard_centering, Normalization};

/// Position `x` at time `s` expressed in the standard frame (unit variance,
/// no drift, maxima). Needs unit branching rate.
pub fn to_standard_frame(norm: &Normalization, s: f64, x: f64) -> Result<f64> {
    if norm.branch_rate != 1.0 {
        return Err(Error::param("branch_rate", "frame change needs unit branching rate"));
    }
    Ok(norm.direction.orient(x - norm.drift * s) / norm.sigma())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EnvelopeReport {
    /// Some leaf's ancestral path reaches the upper envelope.
    pub upper_exceeded: bool,
    /// Some leaf near `m(t)` has a path at or above the lower envelope with
    /// exponent `1/2 - alpha`.
    pub lower_half_minus: bool,
    /// Some leaf near `m(t)` has a path at or below the lower envelope with
    /// exponent `1/2 + alpha`.
    pub lower_half_plus: bool,
}

fn envelope_offset(s: f64, t: f64, alpha: f64) -> f64 {
    s.powf(alpha).min((t - s).powf(alpha))
}

/// Checks ancestral paths against the envelopes `(s/t) m(t) +- min(s^a, (t-s)^a)`
/// at the checkpoints in `[r, t - r]`. Positions are mapped to the standard
/// frame first, so for ABBS the envelopes are mirrored and scaled.
/// `a_window` is the half width of the window around `m(t)` for the lower checks.
pub fn envelope_check(snap: &GenealogySnapshot, alpha: f64, r: f64, a_window: f64) -> Result<EnvelopeReport> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::param("alpha", "upper envelope needs 0 < alpha < 1/2"));
    }
    let t = snap.final_time - snap.start_time;
    if !(r >= 0.0 && r < t / 3.0) {
        return Err(Error::param("r", "need 0 <= r < t/3"));
    }
    let lo = snap.start_time + r;
    let hi = snap.final_time - r;
    let found = snap
        .checkpoint_times
        .iter()
        .filter(|&&c| c >= lo && c <= hi)
        .count();
    if found < 8 {
        return Err(Error::SparseCheckpoints {
            needed: 8,
            found,
            lo,
            hi,
        });
    }
    let norm = snap.normalization;
    let m = standard_centering(t);

    // nodes with a leaf descendant / with a leaf descendant near m(t)
    let n = snap.nodes.len();
    let mut any_leaf = vec![false; n];
    let mut near = vec![false; n];
    for &l in &snap.leaves {
        let x = to_standard_frame(&norm, snap.final_time, snap.nodes[l as usize].end_pos)?;
        any_leaf[l as usize] = true;
        near[l as usize] = (x - m).abs() <= a_window;
    }
    for i in (0..n).rev() {
        let p = snap.nodes[i].parent;
        if p != NO_PARENT {
            any_leaf[p as usize] |= any_leaf[i];
            near[p as usize] |= near[i];
        }
    }

    let mut report = EnvelopeReport {
        upper_exceeded: false,
        lower_half_minus: false,
        lower_half_plus: false,
    };
    for i in 0..n {
        if !any_leaf[i] {
            continue;
        }
        for (k, v) in snap.node_checkpoints(i) {
            let c = snap.checkpoint_times[k];
            if c < lo || c > hi {
                continue;
            }
            let s = c - snap.start_time;
            let x = to_standard_frame(&norm, c, v)?;
            let line = s / t * m;
            if x >= line + envelope_offset(s, t, alpha) {
                report.upper_exceeded = true;
            }
            if near[i] {
                if x >= line - envelope_offset(s, t, 0.5 - alpha) {
                    report.lower_half_minus = true;
                }
                if x <= line - envelope_offset(s, t, 0.5 + alpha) {
                    report.lower_half_plus = true;
                }
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BarrierCensus {
    /// Leaves at or above `q`.
    pub n_q: usize,
    /// Of those, paths that stayed strictly below `q s/t + c_low`.
    pub b_q: usize,
    /// Of those, paths that touched `q s/t + c_high`.
    pub h_q: usize,
}

/// Low/high particle census along the chord `s -> q s / t`, evaluated on the
/// checkpoints (the final checkpoint included).
pub fn barrier_census(snap: &GenealogySnapshot, q: f64, chord_offsets: (f64, f64)) -> Result<BarrierCensus> {
    if snap.normalization != Normalization::STANDARD {
        return Err(Error::param("normalization", "census is defined for the standard model"));
    }
    let (c_low, c_high) = chord_offsets;
    let t = snap.final_time - snap.start_time;
    let n = snap.nodes.len();
    let mut above_low = vec![false; n];
    let mut touched_high = vec![false; n];
    for i in 0..n {
        let p = snap.nodes[i].parent;
        if p != NO_PARENT {
            above_low[i] = above_low[p as usize];
            touched_high[i] = touched_high[p as usize];
        }
        for (k, v) in snap.node_checkpoints(i) {
            let s = snap.checkpoint_times[k] - snap.start_time;
            let chord = if t > 0.0 { q * s / t } else { 0.0 };
            above_low[i] |= v >= chord + c_low;
            touched_high[i] |= v >= chord + c_high;
        }
    }
    let mut out = BarrierCensus {
        n_q: 0,
        b_q: 0,
        h_q: 0,
    };
    for &l in &snap.leaves {
        let node = &snap.nodes[l as usize];
        if node.end_pos >= q {
            out.n_q += 1;
            let final_line_low = q + c_low;
            if !above_low[l as usize] && node.end_pos < final_line_low {
                out.b_q += 1;
            }
            if touched_high[l as usize] || node.end_pos >= q + c_high {
                out.h_q += 1;
            }
        }
    }
    Ok(out)
}
