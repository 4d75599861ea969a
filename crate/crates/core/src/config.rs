//! Plain-text `key = value` experiment configs. Every experiment declares
//! its keys with defaults; unknown keys are rejected.

use serde::Serialize;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::Normalization;

/// Keys and default values of one experiment.
pub type Schema = &'static [(&'static str, &'static str)];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Config {
    pub experiment: String,
    values: BTreeMap<String, String>,
}

impl Config {
    /// Defaults of `schema` under the name `experiment`.
    pub fn defaults(experiment: &str, schema: Schema) -> Config {
        Config {
            experiment: experiment.to_string(),
            values: schema.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        }
    }

    /// A config with computed keys.
    pub fn from_pairs(experiment: &str, pairs: impl IntoIterator<Item = (String, String)>) -> Config {
        Config {
            experiment: experiment.to_string(),
            values: pairs.into_iter().collect(),
        }
    }

    /// Adds the keys of another schema; existing values are kept.
    pub fn with(mut self, schema: Schema) -> Config {
        for (k, v) in schema {
            self.values.entry(k.to_string()).or_insert_with(|| v.to_string());
        }
        self
    }

    /// Sets `key` if the schema knows it.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim();
        let value = value.trim();
        match self.values.get_mut(key) {
            Some(v) => {
                *v = value.to_string();
                Ok(())
            }
            None => Err(Error::Config(format!(
                "unknown key `{key}` for experiment `{}`",
                self.experiment
            ))),
        }
    }

    /// Applies a `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got `{pair}`")))?;
        self.set(k, v)
    }

    /// Applies every `key = value` line of `text`. Blank lines and `#`
    /// comments are skipped. An `experiment` line must name this experiment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if k == "experiment" {
                if v != self.experiment {
                    return Err(Error::Config(format!(
                        "line {}: config is for `{v}`, not `{}`",
                        no + 1,
                        self.experiment
                    )));
                }
                continue;
            }
            self.set(k, v).map_err(|e| Error::Config(format!("line {}: {e}", no + 1)))?;
        }
        Ok(())
    }

    pub fn raw(&self, key: &str) -> Result<&str> {
        self.values
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Config(format!("key `{key}` is not defined for `{}`", self.experiment)))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<T> {
        let v = self.raw(key)?;
        v.parse()
            .map_err(|_| Error::Config(format!("`{key}`: expected {what}, got `{v}`")))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        let v: f64 = self.parse(key, "a number")?;
        if v.is_nan() {
            return Err(Error::Config(format!("`{key}`: NaN is not allowed")));
        }
        Ok(v)
    }

    /// A number that must be strictly positive.
    pub fn positive(&self, key: &str) -> Result<f64> {
        let v = self.f64(key)?;
        if !(v > 0.0) {
            return Err(Error::Config(format!("`{key}`: must be positive, got {v}")));
        }
        Ok(v)
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        self.parse(key, "a non-negative integer")
    }

    pub fn u64(&self, key: &str) -> Result<u64> {
        self.parse(key, "a non-negative integer")
    }

    /// Comma-separated numbers.
    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>> {
        self.raw(key)?
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("`{key}`: bad number `{}`", s.trim())))
            })
            .collect()
    }

    pub fn normalization(&self, key: &str) -> Result<Normalization> {
        let v = self.raw(key)?;
        Normalization::preset(v)
            .ok_or_else(|| Error::Config(format!("`{key}`: unknown normalization `{v}` (STANDARD or ABBS)")))
    }

    /// The resolved config in the text format, one key per line.
    pub fn to_text(&self) -> String {
        let mut s = format!("experiment = {}\n", self.experiment);
        for (k, v) in &self.values {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const S: Schema = &[("t", "12"), ("norm", "STANDARD"), ("xs", "1, 2")];

    #[test]
    fn text_round_trip() {
        let mut c = Config::defaults("demo", S);
        c.apply_text("# comment\nt = 3.5\n\nexperiment = demo\n").unwrap();
        assert_eq!(c.f64("t").unwrap(), 3.5);
        assert_eq!(c.f64_list("xs").unwrap(), vec![1.0, 2.0]);
        let mut d = Config::defaults("demo", S);
        d.apply_text(&c.to_text()).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        let mut c = Config::defaults("demo", S);
        assert!(c.set_pair("zeta=3").is_err());
        assert!(c.apply_text("t 3").is_err());
        assert!(c.apply_text("experiment = other").is_err());
        c.set_pair("t=abc").unwrap();
        assert!(c.f64("t").is_err());
        c.set_pair("norm=FOO").unwrap();
        assert!(c.normalization("norm").is_err());
    }
}
