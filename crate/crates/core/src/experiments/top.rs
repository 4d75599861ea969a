//! The STANDARD ensemble at a fixed horizon shared by the max-law, genealogy
//! and localization experiments.

use crate::config::{Config, Schema};
use crate::ensemble::try_replicas;
use crate::error::Result;
use crate::genealogy::PruningPolicy;
use crate::io::{Report, Table};
use crate::model::{standard_centering, Normalization};
use crate::simulator::{default_checkpoints, envelope_check, martingales, SimSpec};
use crate::stats::{gumbel_mixture_check, tail_slope};

pub(crate) const ENSEMBLE_KEYS: Schema = &[
    ("t", "12"),
    ("runs", "2000"),
    ("gap", "12"),
    ("a", "2"),
    ("alpha", "0.3"),
    ("r_values", "1, 2, 3"),
];

/// One replica, reduced to what the experiments read.
#[derive(Debug, Clone)]
pub struct TopRun {
    /// `X_1(t) - m(t)`.
    pub max: f64,
    /// Derivative martingale at `t`.
    pub z: f64,
    /// Split times of all pairs of leaves within `a` of `m(t)`.
    pub taus: Vec<f64>,
    /// Upper envelope reached, per `r` of the ensemble.
    pub upper: Vec<bool>,
    pub lower_minus: Vec<bool>,
    pub lower_plus: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct TopEnsemble {
    pub t: f64,
    pub a: f64,
    pub alpha: f64,
    pub rs: Vec<f64>,
    pub runs: Vec<TopRun>,
}

impl TopEnsemble {
    pub fn from_config(cfg: &Config, seed: u64) -> Result<TopEnsemble> {
        let t = cfg.positive("t")?;
        let n = cfg.usize("runs")?;
        let gap = cfg.positive("gap")?;
        let a = cfg.positive("a")?;
        let alpha = cfg.positive("alpha")?;
        let rs = cfg.f64_list("r_values")?;
        Self::run(t, n, gap, a, alpha, &rs, seed)
    }

    pub fn run(t: f64, n: usize, gap: f64, a: f64, alpha: f64, rs: &[f64], seed: u64) -> Result<TopEnsemble> {
        let m = standard_centering(t);
        let ck = default_checkpoints(t, 3.0);
        let runs = try_replicas(n, seed, 0, |_, s| {
            let snap = SimSpec::new(Normalization::STANDARD, t)
                .checkpoints(ck.clone())
                .pruning(PruningPolicy::GapToExtremum { gap })
                .run(s)?;
            let near: Vec<usize> = (0..snap.num_leaves())
                .filter(|&k| snap.leaf_position(k).map(|x| (x - m).abs() <= a).unwrap_or(false))
                .collect();
            let mut taus = Vec::new();
            for i in 0..near.len() {
                for j in i + 1..near.len() {
                    taus.push(snap.split_time(near[i], near[j])?);
                }
            }
            let mut upper = Vec::new();
            let mut lower_minus = Vec::new();
            let mut lower_plus = Vec::new();
            for &r in rs {
                let e = envelope_check(&snap, alpha, r, a)?;
                upper.push(e.upper_exceeded);
                lower_minus.push(e.lower_half_minus);
                lower_plus.push(e.lower_half_plus);
            }
            Ok(TopRun {
                max: snap.extremum()? - m,
                z: martingales(&snap)?.z_value,
                taus,
                upper,
                lower_minus,
                lower_plus,
            })
        })?;
        Ok(TopEnsemble {
            t,
            a,
            alpha,
            rs: rs.to_vec(),
            runs,
        })
    }

    pub fn maxima(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.max).collect()
    }

    pub fn z_values(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.z).collect()
    }
}

pub(crate) const SIMULATE_KEYS: Schema = &[("tail_lo", "1"), ("tail_hi", "3"), ("slope_tol", "0.10"), ("ks_max", "0.05")];

/// Max tail shape and the Gumbel-mixture law.
pub(crate) fn max_law_checks(cfg: &Config, ens: &TopEnsemble, rep: &mut Report) -> Result<()> {
    let maxima = ens.maxima();
    let zs = ens.z_values();
    let window = (cfg.f64("tail_lo")?, cfg.f64("tail_hi")?);
    let tol = cfg.positive("slope_tol")?;
    let target = -std::f64::consts::SQRT_2;
    let slope = tail_slope(&maxima, window, true);
    match &slope {
        Ok(s) => {
            rep.metric("tail_slope", s.slope);
            rep.metric("tail_slope_stderr", s.stderr);
            let rel = (s.slope / target - 1.0).abs();
            rep.check(
                7,
                "max tail shape",
                rel <= tol,
                format!("slope {:.4} +- {:.4}, target {:.4}, rel. error {:.3} (tol {tol})", s.slope, s.stderr, target, rel),
            );
        }
        Err(e) => rep.check(7, "max tail shape", false, format!("tail slope failed: {e}")),
    }
    let ks_max = cfg.positive("ks_max")?;
    match gumbel_mixture_check(&maxima, &zs) {
        Ok(g) => {
            rep.metric("gumbel_ks", g.ks);
            rep.metric("gumbel_fitted_c", g.fitted_c);
            rep.check(8, "Gumbel mixture", g.ks < ks_max, format!("KS {:.4} (< {ks_max}), fitted c {:.4}", g.ks, g.fitted_c));
        }
        Err(e) => rep.check(8, "Gumbel mixture", false, format!("fit failed: {e}")),
    }
    rep.metric("z_nonpositive", zs.iter().filter(|&&z| z <= 0.0).count() as f64);
    let mut tab = Table::new("runs", &["replica", "max_centred", "z"]);
    for (i, r) in ens.runs.iter().enumerate() {
        tab.push(vec![i as f64, r.max, r.z]);
    }
    rep.tables.push(tab);
    Ok(())
}

pub(crate) const GENEALOGY_KEYS: Schema = &[
    ("mid_lo", "3"),
    ("mid_hi", "9"),
    ("wide_lo", "1"),
    ("wide_hi", "11"),
    ("max_fraction", "0.15"),
    ("bin", "0.5"),
];

pub(crate) fn genealogy_checks(cfg: &Config, ens: &TopEnsemble, rep: &mut Report) -> Result<()> {
    let mid = (cfg.f64("mid_lo")?, cfg.f64("mid_hi")?);
    let wide = (cfg.f64("wide_lo")?, cfg.f64("wide_hi")?);
    let limit = cfg.positive("max_fraction")?;
    let bin = cfg.positive("bin")?;
    let inside = |tau: f64, w: (f64, f64)| tau >= w.0 && tau <= w.1;
    let (mut pairs, mut n_mid, mut n_wide) = (0u64, 0u64, 0u64);
    let (mut ev_mid, mut ev_wide) = (0u64, 0u64);
    let nbins = (ens.t / bin).ceil() as usize;
    let mut hist = vec![0u64; nbins.max(1)];
    for r in &ens.runs {
        let (mut e_mid, mut e_wide) = (false, false);
        for &tau in &r.taus {
            pairs += 1;
            if inside(tau, mid) {
                n_mid += 1;
                e_mid = true;
            }
            if inside(tau, wide) {
                n_wide += 1;
                e_wide = true;
            }
            let last = hist.len() - 1;
            hist[((tau / bin) as usize).min(last)] += 1;
        }
        ev_mid += e_mid as u64;
        ev_wide += e_wide as u64;
    }
    let runs = ens.runs.len().max(1) as f64;
    let denom = pairs.max(1) as f64;
    let (f_mid, f_wide) = (n_mid as f64 / denom, n_wide as f64 / denom);
    rep.metric("pairs", pairs as f64);
    rep.metric("pairs_per_run", pairs as f64 / runs);
    rep.metric("pair_fraction_mid", f_mid);
    rep.metric("pair_fraction_wide", f_wide);
    rep.metric("event_frequency_mid", ev_mid as f64 / runs);
    rep.metric("event_frequency_wide", ev_wide as f64 / runs);
    rep.check(
        9,
        "genealogy dichotomy",
        pairs > 0 && f_mid < limit && f_mid < f_wide,
        format!(
            "pair fraction with split time in [{}, {}]: {:.4} (< {limit}); in [{}, {}]: {:.4}; runs with such a pair: {:.3}",
            mid.0, mid.1, f_mid, wide.0, wide.1, f_wide, ev_mid as f64 / runs
        ),
    );
    let mut tab = Table::new("tau_histogram", &["tau_lo", "tau_hi", "pairs", "fraction"]);
    for (k, &c) in hist.iter().enumerate() {
        tab.push(vec![k as f64 * bin, ((k + 1) as f64 * bin).min(ens.t), c as f64, c as f64 / denom]);
    }
    rep.tables.push(tab);
    Ok(())
}

pub(crate) const LOCALIZATION_KEYS: Schema = &[("r_first", "1"), ("r_last", "3")];

pub(crate) fn localization_checks(cfg: &Config, ens: &TopEnsemble, rep: &mut Report) -> Result<()> {
    let runs = ens.runs.len().max(1) as f64;
    let mut tab = Table::new("envelope", &["r", "upper_frequency", "lower_minus_frequency", "lower_plus_frequency"]);
    let mut freq = Vec::new();
    for (k, &r) in ens.rs.iter().enumerate() {
        let up = ens.runs.iter().filter(|x| x.upper[k]).count() as f64 / runs;
        let lm = ens.runs.iter().filter(|x| x.lower_minus[k]).count() as f64 / runs;
        let lp = ens.runs.iter().filter(|x| x.lower_plus[k]).count() as f64 / runs;
        rep.metric(&format!("upper_frequency_r{r}"), up);
        tab.push(vec![r, up, lm, lp]);
        freq.push((r, up));
    }
    rep.tables.push(tab);
    let (r0, r1) = (cfg.f64("r_first")?, cfg.f64("r_last")?);
    let find = |r: f64| freq.iter().find(|p| (p.0 - r).abs() < 1e-12).map(|p| p.1);
    match (find(r0), find(r1)) {
        (Some(a), Some(b)) => rep.check(
            10,
            "localization trend",
            b < a,
            format!("upper envelope exceedance {a:.4} at r = {r0}, {b:.4} at r = {r1}"),
        ),
        _ => rep.check(10, "localization trend", false, format!("r = {r0} or {r1} not in r_values")),
    }
    Ok(())
}
