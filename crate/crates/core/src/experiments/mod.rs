//! Named experiments with declared configs, each reproducing one statement
//! about branching Brownian motion and reporting numbered criteria.

mod front;
mod limit;
mod probes;
mod top;

pub use limit::{second_gap, z_pool};
pub use probes::{coupled_line_readout, mom_band, MinLawEcdf};
pub use top::{TopEnsemble, TopRun};

use crate::config::{Config, Schema};
use crate::error::{Error, Result};
use crate::io::Report;
use crate::rng::derive_seed;

enum Body {
    Plain(fn(&Config, u64, &mut Report) -> Result<()>),
    Deterministic(fn(&Config, &mut Report) -> Result<()>),
    Ensemble(fn(&Config, &TopEnsemble, &mut Report) -> Result<()>),
    Auxiliary,
}

/// A registered experiment.
pub struct Experiment {
    pub name: &'static str,
    /// The statement it reproduces.
    pub anchor: &'static str,
    /// Numbered criteria it checks.
    pub criteria: &'static [u32],
    schema: Schema,
    body: Body,
}

impl Experiment {
    fn uses_ensemble(&self) -> bool {
        matches!(self.body, Body::Ensemble(_))
    }

    /// The default config.
    pub fn config(&self) -> Config {
        let c = Config::defaults(self.name, self.schema);
        if self.uses_ensemble() {
            c.with(top::ENSEMBLE_KEYS)
        } else {
            c
        }
    }

    pub fn run(&self, cfg: &Config, seed: u64) -> Result<Report> {
        if cfg.experiment != self.name {
            return Err(Error::Config(format!("config is for `{}`, not `{}`", cfg.experiment, self.name)));
        }
        let mut rep = Report::new(cfg, self.anchor, seed);
        match self.body {
            Body::Plain(f) => f(cfg, seed, &mut rep)?,
            Body::Deterministic(f) => f(cfg, &mut rep)?,
            Body::Ensemble(f) => {
                let ens = TopEnsemble::from_config(cfg, seed)?;
                f(cfg, &ens, &mut rep)?
            }
            Body::Auxiliary => limit::auxiliary_compare(cfg, seed, None, &mut rep)?,
        }
        Ok(rep)
    }
}

pub static EXPERIMENTS: &[Experiment] = &[
    Experiment {
        name: "simulate",
        criteria: &[7, 8],
        anchor: "convergence of the centred maximum to a random-shift Gumbel law",
        schema: top::SIMULATE_KEYS,
        body: Body::Ensemble(top::max_law_checks),
    },
    Experiment {
        name: "fkpp-front",
        criteria: &[1, 15],
        anchor: "Bramson logarithmic correction of the F-KPP front and translation of C(u)",
        schema: front::FRONT_KEYS,
        body: Body::Deterministic(front::fkpp_front),
    },
    Experiment {
        name: "median-scan",
        criteria: &[2, 3],
        anchor: "median of independent particles against the branching front",
        schema: front::MEDIAN_KEYS,
        body: Body::Plain(front::median_scan),
    },
    Experiment {
        name: "duality",
        criteria: &[5],
        anchor: "McKean representation of F-KPP solutions",
        schema: probes::DUALITY_KEYS,
        body: Body::Plain(probes::duality),
    },
    Experiment {
        name: "martingales",
        criteria: &[6, 18],
        anchor: "additive and derivative martingales and their stopping-line versions",
        schema: probes::MARTINGALE_KEYS,
        body: Body::Plain(probes::martingale_checks),
    },
    Experiment {
        name: "genealogy",
        criteria: &[9],
        anchor: "extremal particles branch off early or late",
        schema: top::GENEALOGY_KEYS,
        body: Body::Ensemble(top::genealogy_checks),
    },
    Experiment {
        name: "localization",
        criteria: &[10],
        anchor: "entropic repulsion of extremal paths",
        schema: top::LOCALIZATION_KEYS,
        body: Body::Ensemble(top::localization_checks),
    },
    Experiment {
        name: "rotation-lemma",
        criteria: &[4],
        anchor: "rotation lemma for chords of random walk bridges",
        schema: probes::ROTATION_KEYS,
        body: Body::Plain(probes::rotation_lemma),
    },
    Experiment {
        name: "sample-extremal",
        criteria: &[],
        anchor: "decorated Poisson point process limit",
        schema: limit::SAMPLE_KEYS,
        body: Body::Plain(limit::sample_extremal),
    },
    Experiment {
        name: "decoration-compare",
        criteria: &[12],
        anchor: "law of the decoration seen from the minimum",
        schema: limit::DECORATION_KEYS,
        body: Body::Plain(limit::decoration_compare),
    },
    Experiment {
        name: "auxiliary-compare",
        criteria: &[14],
        anchor: "auxiliary Poisson process of shifted copies",
        schema: limit::AUXILIARY_KEYS,
        body: Body::Auxiliary,
    },
    Experiment {
        name: "conditioned-overshoot",
        criteria: &[11],
        anchor: "exponential overshoot of the maximum conditioned to be large",
        schema: limit::CONDITIONED_KEYS,
        body: Body::Plain(limit::conditioned_overshoot),
    },
    Experiment {
        name: "superposability",
        criteria: &[13],
        anchor: "superposability of the extremal process",
        schema: limit::SUPERPOSABILITY_KEYS,
        body: Body::Plain(limit::superposability),
    },
    Experiment {
        name: "many-to-one",
        criteria: &[17],
        anchor: "many-to-one formula with a minimum-law weight",
        schema: probes::MANY_TO_ONE_KEYS,
        body: Body::Plain(probes::many_to_one),
    },
    Experiment {
        name: "psi-sandwich",
        criteria: &[16],
        anchor: "psi bounds on the F-KPP solution ahead of the front",
        schema: front::PSI_KEYS,
        body: Body::Deterministic(front::psi_sandwich),
    },
];

/// Base seed of the command line and the acceptance target.
pub const DEFAULT_SEED: u64 = 20240601;

/// Name of the experiment that runs everything.
pub const ACCEPTANCE: &str = "acceptance";

pub const ACCEPTANCE_ANCHOR: &str = "all criteria";

pub fn find(name: &str) -> Option<&'static Experiment> {
    EXPERIMENTS.iter().find(|e| e.name == name)
}

/// Every subcommand name, `acceptance` last.
pub fn names() -> Vec<&'static str> {
    EXPERIMENTS.iter().map(|e| e.name).chain([ACCEPTANCE]).collect()
}

/// The default config of any experiment, including `acceptance`.
pub fn config(name: &str) -> Result<Config> {
    if name == ACCEPTANCE {
        return Ok(acceptance_config());
    }
    find(name)
        .map(Experiment::config)
        .ok_or_else(|| Error::Config(format!("unknown experiment `{name}`")))
}

/// Runs any experiment, including `acceptance`.
pub fn run(cfg: &Config, seed: u64) -> Result<Report> {
    if cfg.experiment == ACCEPTANCE {
        return acceptance(cfg, seed);
    }
    find(&cfg.experiment)
        .ok_or_else(|| Error::Config(format!("unknown experiment `{}`", cfg.experiment)))?
        .run(cfg, seed)
}

/// The acceptance config: every experiment's keys as `<name>.<key>`, with
/// the shared ensemble under `ensemble.<key>`.
pub fn acceptance_config() -> Config {
    let mut pairs: Vec<(String, String)> = top::ENSEMBLE_KEYS
        .iter()
        .map(|(k, v)| (format!("ensemble.{k}"), v.to_string()))
        .collect();
    for e in EXPERIMENTS {
        for (k, v) in e.schema {
            pairs.push((format!("{}.{k}", e.name), v.to_string()));
        }
    }
    Config::from_pairs(ACCEPTANCE, pairs)
}

fn section(acc: &Config, e: &Experiment) -> Result<Config> {
    let mut c = e.config();
    for (k, v) in acc.entries() {
        if let Some((head, key)) = k.split_once('.') {
            let shared = head == "ensemble" && e.uses_ensemble();
            if head == e.name || shared {
                c.set(key, v)?;
            }
        }
    }
    Ok(c)
}

/// Runs every experiment once. The STANDARD ensemble is simulated once and
/// shared by the max-law, genealogy and localization checks, and its Z
/// readouts feed the auxiliary comparison.
pub fn acceptance(cfg: &Config, seed: u64) -> Result<Report> {
    let mut rep = Report::new(cfg, ACCEPTANCE_ANCHOR, seed);
    let mut ens: Option<TopEnsemble> = None;
    for (k, e) in EXPERIMENTS.iter().enumerate() {
        let sub = section(cfg, e)?;
        let s = derive_seed(seed, 100 + k as u64, 0);
        let mut r = Report::new(&sub, e.anchor, s);
        let out = match e.body {
            Body::Ensemble(f) => {
                if ens.is_none() {
                    ens = Some(TopEnsemble::from_config(&sub, derive_seed(seed, 99, 0))?);
                }
                f(&sub, ens.as_ref().expect("ensemble"), &mut r)
            }
            Body::Auxiliary => {
                let zs = match &ens {
                    Some(en) if (en.t - sub.positive("z_t")?).abs() < 1e-12 => Some(en.z_values()),
                    _ => None,
                };
                limit::auxiliary_compare(&sub, s, zs.as_deref(), &mut r)
            }
            _ => e.run(&sub, s).map(|x| r = x),
        };
        // a failing experiment fails its criteria instead of the whole run
        if let Err(err) = out {
            if matches!(err, Error::Config(_)) {
                return Err(err);
            }
            for &id in e.criteria {
                if !r.criteria.iter().any(|c| c.id == id) {
                    r.check(id, e.name, false, format!("error: {err}"));
                }
            }
        }
        rep.absorb(r);
    }
    rep.criteria.sort_by_key(|c| c.id);
    Ok(rep)
}
