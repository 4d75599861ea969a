//! PDE-side experiments: the median front, the C(u) integral, the psi
//! sandwich and the independent-particles comparison.

use std::f64::consts::{PI, SQRT_2};

use crate::config::{Config, Schema};
use crate::ensemble::try_replicas;
use crate::error::Result;
use crate::fkpp::{c_integral, evolve, extrapolate_inverse_sqrt, median_front, psi, Grid, InitialCondition};
use crate::genealogy::PruningPolicy;
use crate::io::{Report, Table};
use crate::model::{standard_centering, Normalization};
use crate::moments::{expected_exceedance, independent_median};
use crate::simulator::SimSpec;
use crate::special::linear_fit;

fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![lo];
    }
    (0..n)
        .map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64))
        .collect()
}

fn grid(cfg: &Config, prefix: &str) -> Result<Grid> {
    Grid::new(
        cfg.f64(&format!("{prefix}x_min"))?,
        cfg.f64(&format!("{prefix}x_max"))?,
        cfg.positive(&format!("{prefix}dx"))?,
        cfg.positive(&format!("{prefix}dt"))?,
    )
}

pub(crate) const FRONT_KEYS: Schema = &[
    ("t_min", "200"),
    ("t_max", "2000"),
    ("points", "21"),
    ("x_min", "-60"),
    ("x_max", "140"),
    ("dx", "0.02"),
    ("dt", "0.01"),
    ("slope_tol", "0.05"),
    ("shift", "1"),
    ("c_r_values", "40, 80, 160, 320"),
    ("c_x_min", "-60"),
    ("c_x_max", "260"),
    ("c_dx", "0.02"),
    ("c_dt", "0.01"),
    ("c_degree", "1"),
    ("ratio_tol", "0.02"),
];

pub(crate) fn fkpp_front(cfg: &Config, rep: &mut Report) -> Result<()> {
    let times = log_spaced(cfg.positive("t_min")?, cfg.positive("t_max")?, cfg.usize("points")?);
    let g = grid(cfg, "")?;
    let t_max = times.iter().cloned().fold(0.0, f64::max);
    let fields = evolve(&InitialCondition::Heaviside(0.0), t_max, g, &times)?;
    let mut tab = Table::new("median", &["t", "median", "median_minus_sqrt2_t"]);
    let mut pts = Vec::new();
    for f in &fields {
        let med = median_front(f)?;
        tab.push(vec![f.t, med, med - SQRT_2 * f.t]);
        pts.push((f.t.ln(), med - SQRT_2 * f.t));
    }
    rep.tables.push(tab);
    let (slope, intercept, _) = linear_fit(&pts);
    let target = -3.0 / (2.0 * SQRT_2);
    let tol = cfg.positive("slope_tol")?;
    let rel = (slope / target - 1.0).abs();
    rep.metric("median_slope", slope);
    rep.metric("median_constant", intercept);
    rep.check(
        1,
        "F-KPP median expansion",
        rel <= tol,
        format!("slope {slope:.5}, target {target:.5}, rel. error {rel:.4} (tol {tol})"),
    );
    c_translation(cfg, rep)
}

fn c_translation(cfg: &Config, rep: &mut Report) -> Result<()> {
    let shift = cfg.f64("shift")?;
    let rs = cfg.f64_list("c_r_values")?;
    let g = grid(cfg, "c_")?;
    let r_max = rs.iter().cloned().fold(0.0, f64::max);
    let a = evolve(&InitialCondition::Heaviside(0.0), r_max, g, &rs)?;
    let b = evolve(&InitialCondition::Heaviside(-shift), r_max, g, &rs)?;
    let mut tab = Table::new("c_integral", &["r", "c", "c_shifted", "ratio"]);
    let mut ratios = Vec::new();
    for (fa, fb) in a.iter().zip(&b) {
        let (ca, cb) = (c_integral(fa)?, c_integral(fb)?);
        tab.push(vec![fa.t, ca, cb, cb / ca]);
        ratios.push((fa.t, cb / ca));
    }
    rep.tables.push(tab);
    let limit = extrapolate_inverse_sqrt(&ratios, cfg.usize("c_degree")?)?;
    let target = (-SQRT_2 * shift).exp();
    let tol = cfg.positive("ratio_tol")?;
    let rel = (limit / target - 1.0).abs();
    rep.metric("c_ratio_limit", limit);
    rep.metric("c_ratio_last", ratios.last().map(|p| p.1).unwrap_or(f64::NAN));
    rep.check(
        15,
        "C(u) translation",
        rel <= tol,
        format!("extrapolated ratio {limit:.5}, target {target:.5}, rel. error {rel:.4} (tol {tol})"),
    );
    Ok(())
}

pub(crate) const MEDIAN_KEYS: Schema = &[
    ("t_min", "100"),
    ("t_max", "10000"),
    ("points", "21"),
    ("slope_tol", "0.05"),
    ("exceedance_t", "10000"),
    ("exceedance_tol", "0.02"),
    ("axis_times", "2, 4, 6, 8, 10"),
    ("sim_runs", "400"),
    ("gap", "12"),
];

pub(crate) fn median_scan(cfg: &Config, seed: u64, rep: &mut Report) -> Result<()> {
    let times = log_spaced(cfg.positive("t_min")?, cfg.positive("t_max")?, cfg.usize("points")?);
    let mut tab = Table::new("independent", &["t", "median", "median_minus_sqrt2_t"]);
    let mut pts = Vec::new();
    for &t in &times {
        let m = independent_median(t)?;
        tab.push(vec![t, m, m - SQRT_2 * t]);
        pts.push((t.ln(), m - SQRT_2 * t));
    }
    rep.tables.push(tab);
    let (slope, _, _) = linear_fit(&pts);
    let target = -1.0 / (2.0 * SQRT_2);
    let tol = cfg.positive("slope_tol")?;
    let rel = (slope / target - 1.0).abs();
    rep.metric("independent_slope", slope);
    rep.check(
        2,
        "independent-particles median",
        rel <= tol,
        format!("slope {slope:.5}, target {target:.5}, rel. error {rel:.4} (tol {tol})"),
    );

    let t = cfg.positive("exceedance_t")?;
    let q = SQRT_2 * t - t.ln() / (2.0 * SQRT_2);
    let v = expected_exceedance(t, q)?;
    let target = 1.0 / (2.0 * PI.sqrt());
    let tol = cfg.positive("exceedance_tol")?;
    let rel = (v / target - 1.0).abs();
    rep.metric("exceedance", v);
    rep.check(
        3,
        "Gaussian first moment",
        rel <= tol,
        format!("expected exceedance {v:.5} at t = {t}, target {target:.5}, rel. error {rel:.4} (tol {tol})"),
    );

    // PDE, independent and simulated medians on one axis
    let axis = cfg.f64_list("axis_times")?;
    let runs = cfg.usize("sim_runs")?;
    let gap = cfg.positive("gap")?;
    let t_max = axis.iter().cloned().fold(0.0, f64::max);
    let fields = evolve(&InitialCondition::Heaviside(0.0), t_max, Grid::default(), &axis)?;
    let mut tab = Table::new("axis", &["t", "pde_median", "independent_median", "sim_median", "bramson_centering"]);
    for (k, (&t, f)) in axis.iter().zip(&fields).enumerate() {
        let pde = median_front(f)? + SQRT_2 * t;
        let mut maxima = try_replicas(runs, seed, k as u64 + 1, |_, s| {
            SimSpec::new(Normalization::STANDARD, t)
                .pruning(PruningPolicy::GapToExtremum { gap })
                .run(s)?
                .extremum()
        })?;
        maxima.sort_by(f64::total_cmp);
        let sim = if maxima.is_empty() { f64::NAN } else { maxima[maxima.len() / 2] };
        tab.push(vec![t, pde, independent_median(t)?, sim, standard_centering(t)]);
    }
    rep.tables.push(tab);
    Ok(())
}

pub(crate) const PSI_KEYS: Schema = &[
    ("r_near", "2"),
    ("t_near", "16"),
    ("r_far", "4"),
    ("t_far", "32"),
    ("offset_factor", "8"),
    ("band_lo", "0.5"),
    ("band_hi", "2"),
    ("extra_r", "8"),
    ("extra_t", "64"),
];

fn psi_ratio(r: f64, t: f64, factor: f64) -> Result<(f64, f64, f64)> {
    let fields = evolve(&InitialCondition::Heaviside(0.0), t, Grid::default(), &[r, t])?;
    let x = standard_centering(t) + factor * r;
    let p = psi(r, t, x, &fields[0])?;
    let u = fields[1].at_fixed(x);
    Ok((u, p, u / p))
}

pub(crate) fn psi_sandwich(cfg: &Config, rep: &mut Report) -> Result<()> {
    let factor = cfg.positive("offset_factor")?;
    let mut tab = Table::new("ratios", &["r", "t", "x_minus_m", "u", "psi", "ratio"]);
    let mut out = Vec::new();
    for (rk, tk) in [("r_near", "t_near"), ("r_far", "t_far"), ("extra_r", "extra_t")] {
        let (r, t) = (cfg.positive(rk)?, cfg.positive(tk)?);
        let (u, p, ratio) = psi_ratio(r, t, factor)?;
        tab.push(vec![r, t, factor * r, u, p, ratio]);
        out.push(ratio);
    }
    rep.tables.push(tab);
    let (lo, hi) = (cfg.positive("band_lo")?, cfg.positive("band_hi")?);
    let (near, far) = (out[0], out[1]);
    rep.metric("ratio_near", near);
    rep.metric("ratio_far", far);
    rep.metric("ratio_extra", out[2]);
    let dist = |v: f64| (v - 1.0).abs();
    rep.check(
        16,
        "psi sandwich",
        far >= lo && far <= hi && dist(far) < dist(near),
        format!("u/psi = {far:.4} at the far point (band [{lo}, {hi}]), {near:.4} at the near point"),
    );
    Ok(())
}
