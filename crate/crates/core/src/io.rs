//! Experiment artifacts: plot-ready CSV tables, the resolved config and a
//! JSON manifest. Nothing time-dependent is written, so equal configs and
//! seeds give byte-identical files.

use serde::Serialize;
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::Config;
use crate::error::Result;

/// One acceptance check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Criterion {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// A numeric table with a header row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Table {
        Table {
            name: name.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(&self.header)?;
        for r in &self.rows {
            wr.write_record(r.iter().map(|v| format!("{v}")))?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Everything an experiment produces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub experiment: String,
    /// The statement the experiment reproduces.
    pub anchor: String,
    pub config: Config,
    pub seed: u64,
    pub metrics: BTreeMap<String, f64>,
    pub criteria: Vec<Criterion>,
    #[serde(skip)]
    pub tables: Vec<Table>,
}

impl Report {
    pub fn new(config: &Config, anchor: &str, seed: u64) -> Report {
        Report {
            experiment: config.experiment.clone(),
            anchor: anchor.to_string(),
            config: config.clone(),
            seed,
            metrics: BTreeMap::new(),
            criteria: Vec::new(),
            tables: Vec::new(),
        }
    }

    pub fn metric(&mut self, key: &str, value: f64) {
        self.metrics.insert(key.to_string(), value);
    }

    pub fn check(&mut self, id: u32, name: &str, passed: bool, detail: String) {
        self.criteria.push(Criterion {
            id,
            name: name.to_string(),
            passed,
            detail,
        });
    }

    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }

    /// Folds another report's metrics (prefixed), criteria and tables in.
    pub fn absorb(&mut self, other: Report) {
        for (k, v) in other.metrics {
            self.metrics.insert(format!("{}.{k}", other.experiment), v);
        }
        self.criteria.extend(other.criteria);
        for mut t in other.tables {
            t.name = format!("{}_{}", other.experiment, t.name);
            self.tables.push(t);
        }
    }

    pub fn manifest(&self) -> serde_json::Value {
        let config: BTreeMap<&str, &str> = self.config.entries().collect();
        serde_json::json!({
            "experiment": self.experiment,
            "anchor": self.anchor,
            "config": config,
            "seeds": { "base": self.seed },
            "metrics": self.metrics,
            "criteria": self.criteria,
            "tables": self.tables.iter().map(|t| format!("{}_{}.csv", self.experiment, t.name)).collect::<Vec<_>>(),
        })
    }

    /// Writes `<experiment>_<table>.csv`, `<experiment>.conf` and
    /// `<experiment>_manifest.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut out = Vec::new();
        for t in &self.tables {
            let p = dir.join(format!("{}_{}.csv", self.experiment, t.name));
            t.write_csv(fs::File::create(&p)?)?;
            out.push(p);
        }
        let p = dir.join(format!("{}.conf", self.experiment));
        fs::write(&p, format!("# {}\n# seed = {}\n{}", self.anchor, self.seed, self.config.to_text()))?;
        out.push(p);
        let p = dir.join(format!("{}_manifest.json", self.experiment));
        fs::write(&p, serde_json::to_string_pretty(&self.manifest())? + "\n")?;
        out.push(p);
        Ok(out)
    }
}
