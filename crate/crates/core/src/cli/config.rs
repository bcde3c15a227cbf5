//! Flat key-value run configuration: defaults, then a TOML file, then
//! `CFPAIRS_*` environment variables, then command-line flags.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::backends::ROLES;
use crate::error::{Error, Result};
use crate::eval::HUMAN_WORDS;

pub const ENV_PREFIX: &str = "CFPAIRS_";

fn defaults() -> BTreeMap<String, String> {
    let mut d: BTreeMap<String, String> = [
        ("seed", "0"),
        ("workers", "1"),
        ("capgen.top_k", "10"),
        ("capgen.sim_low", "0.8"),
        ("capgen.sim_high", "0.91"),
        ("capgen.mask_placeholder", crate::backends::DEFAULT_MASK),
        ("capgen.inclusive_bounds", "false"),
        ("imgen.n_candidates", "100"),
        ("imgen.p_low", "0.1"),
        ("imgen.p_high", "0.9"),
        ("imgen.min_caption_image_sim", "0.2"),
        ("imgen.min_image_image_sim", "0.7"),
        ("imgen.images_dir", "images"),
        ("mix.name", "base"),
        ("split.train_fraction", "0.8"),
        ("eval.ranking", "cosine"),
        ("eval.ttest", "welch"),
        ("eval.raters", "3"),
        ("eval.bins", "20"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect();
    for role in ROLES {
        d.insert(format!("backends.{role}"), "mock:16:0".into());
    }
    d.insert("taxonomy.words".into(), HUMAN_WORDS.join(","));
    d
}

/// Environment variable that overrides `key`, e.g. `CFPAIRS_BACKENDS_MLM`.
pub fn env_var_name(key: &str) -> String {
    format!("{ENV_PREFIX}{}", key.to_uppercase().replace('.', "_"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Default for Config {
    fn default() -> Self {
        Self { values: defaults() }
    }
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, String>) -> Result<()> {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            toml::Value::Table(t) => flatten(&key, t, out)?,
            other => {
                out.insert(key, scalar(other)?);
            }
        }
    }
    Ok(())
}

fn scalar(v: &toml::Value) -> Result<String> {
    Ok(match v {
        toml::Value::String(s) => s.clone(),
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::Float(f) => f.to_string(),
        toml::Value::Boolean(b) => b.to_string(),
        toml::Value::Array(items) => items.iter().map(scalar).collect::<Result<Vec<_>>>()?.join(","),
        other => return Err(Error::Config(format!("unsupported config value `{other}`"))),
    })
}

impl Config {
    /// Defaults, overlaid with `path` (if any) and the process environment.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut cfg = Self::default();
        if let Some(p) = path {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("cannot read config {}: {e}", p.display())))?;
            cfg.merge_toml(&text)?;
        }
        cfg.merge_env(|k| std::env::var(k).ok())?;
        Ok(cfg)
    }

    pub fn merge_toml(&mut self, text: &str) -> Result<()> {
        let table: toml::Table = text.parse().map_err(|e| Error::Config(format!("config: {e}")))?;
        let mut flat = BTreeMap::new();
        flatten("", &table, &mut flat)?;
        for (k, v) in flat {
            self.set(&k, v)?;
        }
        Ok(())
    }

    pub fn merge_env(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<()> {
        let keys: Vec<String> = self.values.keys().cloned().collect();
        for k in keys {
            if let Some(v) = lookup(&env_var_name(&k)) {
                self.set(&k, v)?;
            }
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        match self.values.get_mut(key) {
            Some(slot) => {
                *slot = value.into();
                Ok(())
            }
            None => Err(Error::Config(format!("unknown config key `{key}`"))),
        }
    }

    pub fn get(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_default()
    }

    pub fn parse<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .trim()
            .parse()
            .map_err(|e| Error::Config(format!("config `{key}` = `{}`: {e}", self.get(key))))
    }

    pub fn list(&self, key: &str) -> Vec<String> {
        self.get(key)
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect()
    }

    pub fn values(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    /// `role -> descriptor` for every backend role.
    pub fn backend_descriptors(&self) -> BTreeMap<String, String> {
        ROLES
            .iter()
            .map(|r| (r.to_string(), self.get(&format!("backends.{r}")).to_string()))
            .collect()
    }
}
