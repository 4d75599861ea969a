//! Moment and duality probes: the rotation lemma, McKean duality, the
//! martingales, stopping lines and the many-to-one formula.

use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::{PI, SQRT_2};

use crate::config::{Config, Schema};
use crate::ensemble::{replicas, try_replicas};
use crate::error::{Error, Result};
use crate::fkpp::{laplace_prediction, Grid};
use crate::io::{Report, Table};
use crate::model::{median_of_means, standard_centering, Estimate, Normalization, Path, Phi, MOM_BLOCKS};
use crate::moments::{bridge_below_exact, chord_bridge_probability, rotation_census, RotationSample};
use crate::rng::rng_from_seed;
use crate::simulator::{first_passage_census, martingales, stopping_line_from, SimSpec, DEFAULT_POPULATION_CAP};
use crate::special::trapezoid;
use crate::stats::{pearson, Ecdf};

pub(crate) const ROTATION_KEYS: Schema = &[
    ("t", "12"),
    ("n", "10000"),
    ("bridge_offset", "2"),
    ("bridge_times", "10, 40, 160"),
    ("bridge_n", "4000"),
];

pub(crate) fn rotation_lemma(cfg: &Config, seed: u64, rep: &mut Report) -> Result<()> {
    let t = cfg.usize("t")?;
    let n = cfg.usize("n")?;
    if t < 2 {
        return Err(Error::Config("`t`: need at least two increments".into()));
    }
    let out = try_replicas(n, seed, 0, |_, s| {
        let mut rng = rng_from_seed(s);
        // ties have probability zero; redraw if rounding produces one
        loop {
            let inc: Vec<f64> = (0..t).map(|_| rng.sample(StandardNormal)).collect();
            let sample = RotationSample::new(inc, 0.0)?;
            match rotation_census(&sample) {
                Ok(c) => return Ok((c, identity_qualifies(&sample))),
                Err(Error::ChordTie) => continue,
                Err(e) => return Err(e),
            }
        }
    })?;
    let single = out.iter().filter(|o| o.0 == 1).count();
    let identity = out.iter().filter(|o| o.1).count();
    rep.metric("single_rotation_samples", single as f64);
    rep.metric("identity_fraction", identity as f64 / n.max(1) as f64);
    rep.metric("one_over_t", 1.0 / t as f64);
    rep.check(
        4,
        "cycle lemma",
        n > 0 && single == n,
        format!("{single}/{n} samples have exactly one qualifying rotation"),
    );
    let offset = cfg.f64("bridge_offset")?;
    let bn = cfg.usize("bridge_n")?;
    let mut tab = Table::new("chord_bridge", &["t", "t_times_p_mc", "half_width", "t_times_p_exact"]);
    for (k, &bt) in cfg.f64_list("bridge_times")?.iter().enumerate() {
        let e = chord_bridge_probability(bt, offset, bn, crate::rng::derive_seed(seed, 1, k as u64))?;
        tab.push(vec![bt, e.mean, e.half_width, bt * bridge_below_exact(bt, offset)]);
    }
    rep.tables.push(tab);
    Ok(())
}

fn identity_qualifies(s: &RotationSample) -> bool {
    let t = s.increments.len();
    let total = s.total();
    let mut acc = 0.0;
    for (k, x) in s.increments[..t - 1].iter().enumerate() {
        acc += x;
        if acc > (k + 1) as f64 / t as f64 * total {
            return false;
        }
    }
    true
}

pub(crate) const DUALITY_KEYS: Schema = &[
    ("t", "6"),
    ("n", "10000"),
    ("phi_center", "0"),
    ("phi_half_width", "1"),
    ("phi_height", "1"),
    ("x_offsets", "-1, 0, 1"),
    ("grid_allowance", "0.001"),
];

pub(crate) fn duality(cfg: &Config, seed: u64, rep: &mut Report) -> Result<()> {
    let t = cfg.positive("t")?;
    let n = cfg.usize("n")?;
    let phi = Phi::tent(cfg.f64("phi_center")?, cfg.positive("phi_half_width")?, cfg.f64("phi_height")?);
    let offsets = cfg.f64_list("x_offsets")?;
    let allowance = cfg.f64("grid_allowance")?;
    let m = standard_centering(t);
    let xs: Vec<f64> = offsets.iter().map(|o| m + o).collect();
    // each replica evaluates the product at every x
    let vals = try_replicas(n, seed, 0, |_, s| {
        let pm = SimSpec::new(Normalization::STANDARD, t).run(s)?.point_measure();
        Ok(xs.iter().map(|&x| pm.shift(-x).laplace_functional(&phi)).collect::<Vec<f64>>())
    })?;
    let mut tab = Table::new("laplace", &["x", "x_minus_m", "mc_mean", "mc_stderr", "pde"]);
    let mut ok = true;
    let mut detail = String::new();
    for (k, &x) in xs.iter().enumerate() {
        let col: Vec<f64> = vals.iter().map(|v| v[k]).collect();
        let e = Estimate::from_samples(&col)?;
        let p = laplace_prediction(&phi, t, x, Grid::default())?;
        let dev = (e.mean - p).abs();
        let bound = 3.0 * e.stderr() + allowance;
        tab.push(vec![x, offsets[k], e.mean, e.stderr(), p]);
        if offsets[k] == 0.0 {
            ok &= dev <= bound;
            rep.metric("mc_at_m", e.mean);
            rep.metric("pde_at_m", p);
            detail = format!("at x = m(t): MC {:.5} +- {:.5}, PDE {:.5}, |diff| {:.5} <= {:.5}", e.mean, e.stderr(), p, dev, bound);
        }
    }
    if detail.is_empty() {
        ok = false;
        detail = "x_offsets must contain 0".into();
    }
    rep.tables.push(tab);
    rep.check(5, "McKean duality", ok, detail);
    Ok(())
}

pub(crate) const MARTINGALE_KEYS: Schema = &[
    ("t", "5"),
    ("n", "10000"),
    ("level", "6"),
    ("line_t", "10"),
    ("line_runs", "2000"),
    ("pearson_min", "0.5"),
];

/// `median_of_means` with the half width of its asymptotic 95% band,
/// `1.96 sqrt(pi/2) sd(block means) / sqrt(blocks)`.
pub fn mom_band(xs: &[f64], blocks: usize) -> (f64, f64) {
    let k = blocks.clamp(1, xs.len().max(1));
    let n = xs.len();
    let means: Vec<f64> = (0..k)
        .map(|b| {
            let (lo, hi) = (b * n / k, (b + 1) * n / k);
            xs[lo..hi].iter().sum::<f64>() / (hi - lo).max(1) as f64
        })
        .collect();
    let mm = means.iter().sum::<f64>() / k as f64;
    let sd = if k > 1 {
        (means.iter().map(|v| (v - mm).powi(2)).sum::<f64>() / (k - 1) as f64).sqrt()
    } else {
        f64::INFINITY
    };
    (median_of_means(xs, blocks), 1.96 * (PI / 2.0).sqrt() * sd / (k as f64).sqrt())
}

pub(crate) fn martingale_checks(cfg: &Config, seed: u64, rep: &mut Report) -> Result<()> {
    let t = cfg.positive("t")?;
    let n = cfg.usize("n")?;
    let mut tab = Table::new("martingales", &["replica", "m_abbs", "z_standard"]);
    let m_abbs = try_replicas(n, seed, 0, |_, s| Ok(martingales(&SimSpec::new(Normalization::ABBS, t).run(s)?)?.m_value))?;
    let z_std = try_replicas(n, seed, 1, |_, s| {
        Ok(martingales(&SimSpec::new(Normalization::STANDARD, t).run(s)?)?.z_value)
    })?;
    for i in 0..n {
        tab.push(vec![i as f64, m_abbs[i], z_std[i]]);
    }
    rep.tables.push(tab);
    let em = Estimate::from_samples(&m_abbs)?;
    let ez = Estimate::from_samples(&z_std)?;
    let (mom, band) = mom_band(&z_std, MOM_BLOCKS);
    rep.metric("m_abbs_mean", em.mean);
    rep.metric("m_abbs_stderr", em.stderr());
    rep.metric("z_standard_mean", ez.mean);
    rep.metric("z_standard_stderr", ez.stderr());
    rep.metric("z_standard_mom", mom);
    rep.metric("z_standard_mom_band", band);
    let ok_m = em.contains(1.0, 3.0);
    let ok_z = mom.abs() <= band;
    rep.check(
        6,
        "martingale means",
        ok_m && ok_z,
        format!(
            "ABBS E M({t}) = {:.4} +- {:.4} (3 stderr of 1: {ok_m}); STANDARD Z({t}) median-of-means {mom:.4}, band +-{band:.4} around 0 ({ok_z}); plain mean {:.4} +- {:.4}",
            em.mean,
            em.stderr(),
            ez.mean,
            ez.stderr()
        ),
    );
    stopping_lines(cfg, seed, rep)
}

/// Coupled `Z_k` and `Z(t)` readouts: the first passages at `k` inside an
/// ABBS run up to `t`, completed after `t` from the positions of the open
/// lineages.
pub fn coupled_line_readout(k: f64, t: f64, seed: u64) -> Result<(f64, f64)> {
    let snap = SimSpec::new(Normalization::ABBS, t).run(seed)?;
    let mut rng = rng_from_seed(seed ^ 0x5eed_1ae5);
    let census = first_passage_census(&snap, k, &mut rng)?;
    let mut h = census.hits;
    for &l in &census.open_leaves {
        h += stopping_line_from(Normalization::ABBS, snap.leaf_position(l)?, k, &mut rng, DEFAULT_POPULATION_CAP as u64)?;
    }
    Ok((k * (-k).exp() * h as f64, martingales(&snap)?.z_value))
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut ix: Vec<usize> = (0..v.len()).collect();
    ix.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut r = vec![0.0; v.len()];
    for (k, &i) in ix.iter().enumerate() {
        r[i] = k as f64;
    }
    r
}

fn stopping_lines(cfg: &Config, seed: u64, rep: &mut Report) -> Result<()> {
    let k = cfg.positive("level")?;
    let t = cfg.positive("line_t")?;
    let runs = cfg.usize("line_runs")?;
    let min = cfg.f64("pearson_min")?;
    let pairs = try_replicas(runs, seed, 2, |_, s| coupled_line_readout(k, t, s))?;
    let zk: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let zt: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut tab = Table::new("stopping_line", &["replica", "z_k", "z_t"]);
    for (i, p) in pairs.iter().enumerate() {
        tab.push(vec![i as f64, p.0, p.1]);
    }
    rep.tables.push(tab);
    let r = pearson(&zk, &zt)?;
    let rho = pearson(&ranks(&zk), &ranks(&zt))?;
    let negative = zt.iter().filter(|&&z| z < 0.0).count();
    rep.metric("line_pearson", r);
    rep.metric("line_spearman", rho);
    rep.metric("line_negative_z_t", negative as f64);
    rep.check(
        18,
        "stopping lines",
        r > min,
        format!("Pearson {r:.4} (> {min}); Spearman {rho:.4}; {negative} runs with Z({t}) < 0"),
    );
    Ok(())
}

pub(crate) const MANY_TO_ONE_KEYS: Schema = &[
    ("t", "3"),
    ("n", "10000"),
    ("g_runs", "10000"),
    ("checkpoints", "120"),
    ("steps", "600"),
];

/// The bounded path functional of the check: `exp(-|X(t/2) - X(t)/2|)`.
fn functional(p: impl Fn(f64) -> f64, t: f64) -> f64 {
    (-(p(t / 2.0) - 0.5 * p(t)).abs()).exp()
}

/// Law of the ABBS minimum at the ages `k t / checkpoints`, tabulated from
/// simulated runs. Every particle alive at a checkpoint has a descendant at
/// the final time, so the minimum over leaves of the ancestral positions is
/// the minimum of the population at that checkpoint.
pub struct MinLawEcdf {
    pub t: f64,
    tables: Vec<Ecdf>,
}

impl MinLawEcdf {
    pub fn simulate(t: f64, checkpoints: usize, runs: usize, seed: u64) -> Result<Self> {
        let ck: Vec<f64> = (0..=checkpoints).map(|i| t * i as f64 / checkpoints as f64).collect();
        let mins = try_replicas(runs, seed, 0, |_, s| {
            let snap = SimSpec::new(Normalization::ABBS, t).checkpoints(ck.clone()).run(s)?;
            let mut m = vec![f64::INFINITY; checkpoints];
            for l in 0..snap.num_leaves() {
                let ap = snap.ancestral_positions(l)?;
                let off = ap.len() - checkpoints;
                for k in 0..checkpoints {
                    m[k] = m[k].min(ap[off + k]);
                }
            }
            Ok(m)
        })?;
        let tables = (0..checkpoints)
            .map(|k| Ecdf::new(mins.iter().map(|m| m[k]).collect()))
            .collect::<Result<Vec<_>>>()?;
        Ok(MinLawEcdf { t, tables })
    }

    /// `G_u(x) = P(min N(u) <= x)`, linear in `u` between the ages.
    pub fn g(&self, u: f64, x: f64) -> f64 {
        let n = self.tables.len();
        let step = |x: f64| if x >= 0.0 { 1.0 } else { 0.0 };
        if u <= 0.0 {
            return step(x);
        }
        let j = u / (self.t / n as f64);
        let k = j.floor() as usize;
        if k >= n {
            return self.tables[n - 1].eval(x);
        }
        let lo = if k == 0 { step(x) } else { self.tables[k - 1].eval(x) };
        let w = j - k as f64;
        lo * (1.0 - w) + self.tables[k].eval(x) * w
    }
}

pub(crate) fn many_to_one(cfg: &Config, seed: u64, rep: &mut Report) -> Result<()> {
    let t = cfg.positive("t")?;
    let n = cfg.usize("n")?;
    let nck = cfg.usize("checkpoints")?;
    let steps = cfg.usize("steps")?;
    if nck < 2 || steps < 2 {
        return Err(Error::Config("`checkpoints` and `steps` must be at least 2".into()));
    }
    let ck: Vec<f64> = (0..=nck).map(|i| t * i as f64 / nck as f64).collect();
    let lhs = try_replicas(n, seed, 0, |_, s| {
        let snap = SimSpec::new(Normalization::ABBS, t).checkpoints(ck.clone()).run(s)?;
        let path: Path = snap.extremal_path()?;
        Ok(functional(|u| path.at(u), t))
    })?;
    let g = MinLawEcdf::simulate(t, nck, cfg.usize("g_runs")?, crate::rng::derive_seed(seed, 1, 0))?;
    let sigma = SQRT_2;
    let dt = t / steps as f64;
    let rhs = replicas(n, seed, 2, |_, s| {
        let mut rng = rng_from_seed(s);
        let mut xs = vec![0.0f64; steps + 1];
        for i in 1..=steps {
            let z: f64 = rng.sample(StandardNormal);
            xs[i] = xs[i - 1] + sigma * dt.sqrt() * z;
        }
        let xt = xs[steps];
        let integrand: Vec<f64> = (0..=steps).map(|i| g.g(t - i as f64 * dt, xt - xs[i])).collect();
        let weight = (-2.0 * trapezoid(&integrand, dt)).exp();
        let at = |u: f64| xs[((u / dt).round() as usize).min(steps)];
        xt.exp() * functional(at, t) * weight
    });
    let el = Estimate::from_samples(&lhs)?;
    let er = Estimate::from_samples(&rhs)?;
    rep.metric("lhs_mean", el.mean);
    rep.metric("lhs_half_width", el.half_width);
    rep.metric("rhs_mean", er.mean);
    rep.metric("rhs_half_width", er.half_width);
    let overlap = (el.mean - er.mean).abs() <= el.half_width + er.half_width;
    rep.check(
        17,
        "many-to-one",
        overlap,
        format!(
            "extremal path side {:.4} +- {:.4}, weighted Brownian side {:.4} +- {:.4} (95%)",
            el.mean, el.half_width, er.mean, er.half_width
        ),
    );
    let mut tab = Table::new("sides", &["side", "mean", "half_width", "n"]);
    tab.push(vec![0.0, el.mean, el.half_width, n as f64]);
    tab.push(vec![1.0, er.mean, er.half_width, n as f64]);
    rep.tables.push(tab);
    Ok(())
}
