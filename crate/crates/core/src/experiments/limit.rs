//! Limit-object experiments: decoration cross-validation, the auxiliary
//! process, the conditioned overshoot, superposability and plain samples of
//! the decorated Poisson process.

use rand::Rng;
use std::f64::consts::SQRT_2;

use crate::config::{Config, Schema};
use crate::ensemble::try_replicas;
use crate::error::{Error, Result};
use crate::extremal::{
    assemble, auxiliary_extremum, conditioned_tail_experiment, sample_ppp, AuxiliaryParams, CopyMaxLaw,
    DecorationParams, DecorationSampler, DecorationSource,
};
use crate::genealogy::PruningPolicy;
use crate::io::{Report, Table};
use crate::model::{standard_centering, superpose, Direction, Normalization, PointMeasure};
use crate::rng::{derive_seed, rng_from_seed};
use crate::simulator::{martingales, SimSpec};
use crate::stats::{ks_distance, poisson_window_test, Ecdf};

/// Gap between the two smallest atoms; `+inf` for a single atom.
pub fn second_gap(q: &PointMeasure) -> f64 {
    match q.atoms() {
        [a, b, ..] => b - a,
        _ => f64::INFINITY,
    }
}

const QUANTILES: [f64; 9] = [0.05, 0.1, 0.25, 0.4, 0.5, 0.6, 0.75, 0.9, 0.95];

fn quantile_table(name: &str, a: &Ecdf, b: &Ecdf, labels: [&str; 2]) -> Table {
    let mut tab = Table::new(name, &["p", labels[0], labels[1]]);
    for p in QUANTILES {
        tab.push(vec![p, a.quantile(p), b.quantile(p)]);
    }
    tab
}

fn decoration_pool(zeta: f64, n: usize, seed: u64) -> Result<Vec<PointMeasure>> {
    let sampler = DecorationSampler::new(DecorationParams::new(zeta))?;
    try_replicas(n, seed, 0, |_, s| Ok(sampler.sample(s)?.atoms))
}

pub(crate) const DECORATION_KEYS: Schema = &[
    ("zeta", "3"),
    ("t", "12"),
    ("n", "3000"),
    ("horizon", "19"),
    ("b_max", "8"),
    ("dt", "0.005"),
    ("gap", "12"),
    ("ks_max", "0.05"),
    ("b_bins", "8"),
    ("b_attempts", "8000"),
];

pub(crate) fn decoration_compare(cfg: &Config, seed: u64, rep: &mut Report) -> Result<()> {
    let zeta = cfg.positive("zeta")?;
    let t = cfg.positive("t")?;
    let n = cfg.usize("n")?;
    let params = DecorationParams {
        zeta,
        horizon: cfg.positive("horizon")?,
        b_max: cfg.positive("b_max")?,
        dt: cfg.positive("dt")?,
        attempt_cap: DecorationParams::new(zeta).attempt_cap,
    };
    let sampler = DecorationSampler::new(params)?;
    let draws = try_replicas(n, seed, 0, |_, s| sampler.sample(s))?;
    let attempts: usize = draws.iter().map(|d| d.attempts).sum();
    let gap = cfg.positive("gap")?;
    let sim = try_replicas(n, seed, 1, |_, s| {
        let snap = SimSpec::new(Normalization::ABBS, t)
            .pruning(PruningPolicy::GapToExtremum { gap })
            .run(s)?;
        Ok(second_gap(&snap.window_decoration(zeta)?))
    })?;
    let a = Ecdf::new(draws.iter().map(|d| second_gap(&d.atoms)).collect())?;
    let b = Ecdf::new(sim)?;
    let ks = ks_distance(&a, &b);
    let ks_max = cfg.positive("ks_max")?;
    rep.metric("ks", ks);
    rep.metric("acceptance_rate", n as f64 / attempts.max(1) as f64);
    rep.metric("median_gap_sampler", a.quantile(0.5));
    rep.metric("median_gap_simulator", b.quantile(0.5));
    rep.check(
        12,
        "decoration cross-validation",
        ks < ks_max,
        format!("KS {ks:.4} (< {ks_max}) between sampler and simulator gap laws, {n} samples each"),
    );
    rep.tables.push(quantile_table("gap_quantiles", &a, &b, ["sampler", "simulator"]));
    let bins = sampler.acceptance_by_b(cfg.usize("b_attempts")?, cfg.usize("b_bins")?.max(1), derive_seed(seed, 2, 0))?;
    let width = sampler.params.b_max / bins.len() as f64;
    let mut tab = Table::new("acceptance_by_b", &["b_lo", "b_hi", "proposals", "accepted", "rate"]);
    for (k, (p, acc)) in bins.iter().enumerate() {
        tab.push(vec![k as f64 * width, (k + 1) as f64 * width, *p as f64, *acc as f64, *acc as f64 / (*p).max(1) as f64]);
    }
    if let (Some(first), Some(last)) = (bins.first(), bins.last()) {
        rep.metric("acceptance_first_bin", first.1 as f64 / first.0.max(1) as f64);
        rep.metric("acceptance_last_bin", last.1 as f64 / last.0.max(1) as f64);
    }
    rep.tables.push(tab);
    Ok(())
}

pub(crate) const AUXILIARY_KEYS: Schema = &[
    ("t", "10"),
    ("n", "10000"),
    ("sim_runs", "10000"),
    ("z_t", "12"),
    ("z_runs", "2000"),
    ("gap", "12"),
    ("window_lo", "-4"),
    ("ks_max", "0.07"),
];

/// Z readouts from STANDARD runs at `t` for the auxiliary comparison.
pub fn z_pool(t: f64, runs: usize, gap: f64, seed: u64) -> Result<Vec<f64>> {
    try_replicas(runs, seed, 0, |_, s| {
        let snap = SimSpec::new(Normalization::STANDARD, t)
            .pruning(PruningPolicy::GapToExtremum { gap })
            .run(s)?;
        Ok(martingales(&snap)?.z_value)
    })
}

pub(crate) fn auxiliary_compare(cfg: &Config, seed: u64, zs: Option<&[f64]>, rep: &mut Report) -> Result<()> {
    let t = cfg.positive("t")?;
    let n = cfg.usize("n")?;
    let gap = cfg.positive("gap")?;
    let own;
    let zs = match zs {
        Some(z) => z,
        None => {
            own = z_pool(cfg.positive("z_t")?, cfg.usize("z_runs")?, gap, derive_seed(seed, 3, 0))?;
            &own[..]
        }
    };
    // the Z law is positive; the few pruned readouts at or below 0 are dropped
    let zs: Vec<f64> = zs.iter().cloned().filter(|&z| z > 0.0).collect();
    if zs.is_empty() {
        return Err(Error::InsufficientData("no positive Z readouts".into()));
    }
    let law = CopyMaxLaw::new(t)?;
    let params = AuxiliaryParams {
        window_lo: cfg.f64("window_lo")?,
        ..AuxiliaryParams::default()
    };
    let pi = try_replicas(n, seed, 0, |_, s| {
        let mut rng = rng_from_seed(s);
        let z = zs[rng.random_range(0..zs.len())];
        auxiliary_extremum(z, &law, &params, &mut rng)
    })?;
    let m = standard_centering(t);
    let sim = try_replicas(cfg.usize("sim_runs")?, seed, 1, |_, s| {
        let snap = SimSpec::new(Normalization::STANDARD, t)
            .pruning(PruningPolicy::GapToExtremum { gap })
            .run(s)?;
        Ok(snap.extremum()? - m)
    })?;
    let a = Ecdf::new(pi)?;
    let b = Ecdf::new(sim)?;
    let ks = ks_distance(&a, &b);
    let ks_max = cfg.positive("ks_max")?;
    rep.metric("ks", ks);
    rep.metric("z_pool", zs.len() as f64);
    rep.check(
        14,
        "auxiliary process",
        ks < ks_max,
        format!("KS {ks:.4} (< {ks_max}) between the extremum laws of Pi({t}) and N_m({t})"),
    );
    rep.tables.push(quantile_table("extremum_quantiles", &a, &b, ["auxiliary", "simulator"]));
    Ok(())
}

pub(crate) const CONDITIONED_KEYS: Schema = &[
    ("t", "9"),
    ("a", "0.7"),
    ("b", "0"),
    ("n_target", "1000"),
    ("replica_cap", "3000000"),
    ("gap", "8"),
    ("depth", "6"),
    ("tol", "0.15"),
];

pub(crate) fn conditioned_overshoot(cfg: &Config, seed: u64, rep: &mut Report) -> Result<()> {
    let t = cfg.positive("t")?;
    let a = cfg.positive("a")?;
    let n_target = cfg.usize("n_target")?;
    let run = conditioned_tail_experiment(
        t,
        a,
        cfg.f64("b")?,
        n_target,
        cfg.usize("replica_cap")?,
        PruningPolicy::GapToExtremum { gap: cfg.positive("gap")? },
        cfg.positive("depth")?,
        seed,
    )?;
    let k = run.records.len();
    let mean = run.records.iter().map(|r| r.overshoot).sum::<f64>() / k as f64;
    let target = 1.0 / SQRT_2;
    let tol = cfg.positive("tol")?;
    let rel = (mean / target - 1.0).abs();
    // leading finite-t correction of the exponential rate
    let finite_t = 1.0 / (SQRT_2 + a / t.sqrt());
    rep.metric("mean_overshoot", mean);
    rep.metric("accepted", k as f64);
    rep.metric("replicas", run.replicas_run as f64);
    rep.metric("acceptance_rate", run.acceptance_rate);
    rep.metric("finite_t_mean", finite_t);
    rep.check(
        11,
        "conditioned overshoot",
        k >= n_target && rel <= tol,
        format!(
            "mean overshoot {mean:.4} over {k} acceptances, target {target:.4}, rel. error {rel:.4} (tol {tol}); 1/(sqrt2 + a/sqrt t) = {finite_t:.4}"
        ),
    );
    let mut tab = Table::new("overshoot", &["replica", "overshoot", "atoms_within_depth"]);
    for r in &run.records {
        tab.push(vec![r.replica as f64, r.overshoot, r.recentred.len() as f64]);
    }
    rep.tables.push(tab);
    Ok(())
}

pub(crate) const SUPERPOSABILITY_KEYS: Schema = &[
    ("window_lo", "-3"),
    ("copies", "4"),
    ("n", "10000"),
    ("zeta", "3"),
    ("pool", "400"),
    ("ks_max", "0.02"),
];

fn decorations(cfg: &Config, seed: u64) -> Result<DecorationSource> {
    let pool = cfg.usize("pool")?;
    if pool == 0 {
        return Ok(DecorationSource::Trivial);
    }
    DecorationSource::from_abbs_pool(decoration_pool(cfg.positive("zeta")?, pool, seed)?, &Normalization::STANDARD)
}

pub(crate) fn superposability(cfg: &Config, seed: u64, rep: &mut Report) -> Result<()> {
    let lo = cfg.f64("window_lo")?;
    let k = cfg.usize("copies")?;
    let n = cfg.usize("n")?;
    if k == 0 {
        return Err(Error::Config("`copies` must be positive".into()));
    }
    let norm = Normalization::STANDARD;
    let deco = decorations(cfg, derive_seed(seed, 9, 0))?;
    let shift = -(k as f64).ln() / SQRT_2;
    let window = (lo, f64::INFINITY);
    let single = try_replicas(n, seed, 0, |_, s| {
        assemble(&norm, window, &deco, crate::extremal::ASSEMBLE_MARGIN, s)?.extremum(Direction::Max)
    })?;
    let merged = try_replicas(n, seed, 1, |i, _| {
        let parts = (0..k)
            .map(|j| {
                let s = derive_seed(seed, 2 + j as u64, i as u64);
                Ok(assemble(&norm, (lo - shift, f64::INFINITY), &deco, crate::extremal::ASSEMBLE_MARGIN, s)?.shift(shift))
            })
            .collect::<Result<Vec<_>>>()?;
        superpose(&parts).extremum(Direction::Max)
    })?;
    let a = Ecdf::new(single)?;
    let b = Ecdf::new(merged)?;
    let ks = ks_distance(&a, &b);
    let ks_max = cfg.positive("ks_max")?;
    rep.metric("ks", ks);
    rep.metric("shift", shift);
    rep.check(
        13,
        "superposability",
        ks < ks_max,
        format!("KS {ks:.4} (< {ks_max}) between one assembly and {k} copies shifted by {shift:.4}"),
    );
    rep.tables.push(quantile_table("extremum_quantiles", &a, &b, ["single", "superposed"]));
    Ok(())
}

pub(crate) const SAMPLE_KEYS: Schema = &[
    ("norm", "STANDARD"),
    ("window_lo", "-2"),
    ("window_hi", "inf"),
    ("n", "1000"),
    ("zeta", "3"),
    ("pool", "200"),
    ("count_windows", "-2, -1, 0, 1, 2, 3"),
    ("count_samples", "10000"),
];

pub(crate) fn sample_extremal(cfg: &Config, seed: u64, rep: &mut Report) -> Result<()> {
    let norm = cfg.normalization("norm")?;
    let window = (cfg.f64("window_lo")?, cfg.f64("window_hi")?);
    let n = cfg.usize("n")?;
    let pool = cfg.usize("pool")?;
    let deco = if pool == 0 {
        DecorationSource::Trivial
    } else {
        DecorationSource::from_abbs_pool(decoration_pool(cfg.positive("zeta")?, pool, derive_seed(seed, 9, 0))?, &norm)?
    };
    let samples = try_replicas(n, seed, 0, |_, s| assemble(&norm, window, &deco, crate::extremal::ASSEMBLE_MARGIN, s))?;
    let mut tab = Table::new("atoms", &["sample", "position"]);
    for (i, pm) in samples.iter().enumerate() {
        for &x in pm.atoms() {
            tab.push(vec![i as f64, x]);
        }
    }
    rep.tables.push(tab);
    rep.metric("mean_atoms", samples.iter().map(|p| p.len()).sum::<usize>() as f64 / n.max(1) as f64);

    // backbone counts on consecutive windows against their Poisson means
    let edges = cfg.f64_list("count_windows")?;
    if edges.len() >= 2 {
        let wins: Vec<(f64, f64)> = edges.windows(2).map(|w| (w[0], w[1])).collect();
        let means = wins
            .iter()
            .map(|&w| crate::extremal::ppp_mean(w, &norm))
            .collect::<Result<Vec<f64>>>()?;
        let m = cfg.usize("count_samples")?;
        let (lo, hi) = (edges[0], edges[edges.len() - 1]);
        let draws = try_replicas(m, seed, 1, |_, s| sample_ppp((lo, hi), &norm, s))?;
        let counts: Vec<Vec<u64>> = draws
            .iter()
            .map(|p| {
                wins.iter()
                    .map(|&(a, b)| p.atoms().iter().filter(|&&x| x >= a && (x < b || (b == hi && x <= b))).count() as u64)
                    .collect()
            })
            .collect();
        rep.metric("backbone_poisson_p", poisson_window_test(&counts, &means)?);
    }
    Ok(())
}
