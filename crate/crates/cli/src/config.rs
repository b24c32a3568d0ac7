//! Layered configuration: built-in defaults, then a TOML file, then
//! `DPMKIT_*` environment variables, then command-line flags.
//!
//! Environment keys are upper-case paths with `__` between levels, e.g.
//! `DPMKIT_GENERATE__SEED=7` or `DPMKIT_CURATION__MOTION__IOU_THRESHOLD=0.6`.
//! Values are parsed as TOML literals and fall back to plain strings.

use std::path::Path;

use dpmkit::curation::CurationConfig;
use dpmkit::metrics::{Alignment, ApdThresholds};
use dpmkit::ClipSpec;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::CliError;

pub const ENV_PREFIX: &str = "DPMKIT_";
/// Names a config file; not itself a config key.
pub const ENV_CONFIG_FILE: &str = "DPMKIT_CONFIG";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub apd_thresholds: ApdThresholds,
    pub trajectory_alignment: Alignment,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            apd_thresholds: ApdThresholds::default(),
            trajectory_alignment: Alignment::Similarity,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub generate: ClipSpec,
    pub curation: CurationConfig,
    pub eval: EvalConfig,
}

impl Config {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

/// One override: dotted key path and value.
pub type Override = (Vec<String>, Value);

fn set_path(table: &mut Table, path: &[String], value: Value) {
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut t = table;
    for p in parents {
        let entry = t.entry(p.clone()).or_insert_with(|| Value::Table(Table::new()));
        if !entry.is_table() {
            *entry = Value::Table(Table::new());
        }
        t = entry.as_table_mut().expect("table");
    }
    t.insert(last.clone(), value);
}

fn merge(base: &mut Table, layer: &Table) {
    for (k, v) in layer {
        match (base.get_mut(k), v) {
            (Some(Value::Table(b)), Value::Table(l)) => merge(b, l),
            _ => {
                base.insert(k.clone(), v.clone());
            }
        }
    }
}

/// Every key of `layer` must be a field of the resolved config.
fn check_known(layer: &Table, known: &Table, prefix: &str) -> Result<(), CliError> {
    for (k, v) in layer {
        let name = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match (known.get(k), v) {
            (None, _) => return Err(CliError::Usage(format!("unknown config key `{name}`"))),
            (Some(Value::Table(kt)), Value::Table(lt)) => check_known(lt, kt, &name)?,
            _ => {}
        }
    }
    Ok(())
}

fn parse_literal(raw: &str) -> Value {
    toml::from_str::<Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

/// `DPMKIT_A__B=v` pairs as overrides; other variables are ignored.
pub fn env_overrides(vars: impl IntoIterator<Item = (String, String)>) -> Vec<Override> {
    let mut out: Vec<Override> = vars
        .into_iter()
        .filter(|(k, _)| k.starts_with(ENV_PREFIX) && k != ENV_CONFIG_FILE)
        .map(|(k, v)| {
            let path = k[ENV_PREFIX.len()..].to_lowercase().split("__").map(str::to_string).collect();
            (path, parse_literal(&v))
        })
        .collect();
    // Environment order is unspecified; sort for determinism.
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

pub fn read_config_file(path: &Path) -> Result<Table, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
}

/// Merges the layers in precedence order and validates every key.
pub fn resolve(file: Option<&Table>, env: &[Override], flags: &[Override]) -> Result<Config, CliError> {
    let mut merged = Table::try_from(Config::default()).expect("defaults serialize");
    let mut layers: Vec<Table> = Vec::new();
    if let Some(f) = file {
        layers.push(f.clone());
    }
    for group in [env, flags] {
        let mut t = Table::new();
        for (path, v) in group {
            set_path(&mut t, path, v.clone());
        }
        layers.push(t);
    }
    for l in &layers {
        merge(&mut merged, l);
    }
    let cfg: Config = Value::Table(merged)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Usage(format!("invalid config: {}", e.message())))?;
    let known = Table::try_from(&cfg).expect("config serializes");
    for l in &layers {
        check_known(l, &known, "")?;
    }
    Ok(cfg)
}

/// Resolves from a file path (or `DPMKIT_CONFIG`), the process environment and flags.
pub fn load(path: Option<&Path>, flags: &[Override]) -> Result<Config, CliError> {
    let env_path = std::env::var_os(ENV_CONFIG_FILE).map(std::path::PathBuf::from);
    let file = match path.or(env_path.as_deref()) {
        Some(p) => Some(read_config_file(p)?),
        None => None,
    };
    resolve(file.as_ref(), &env_overrides(std::env::vars()), flags)
}

pub fn flag(path: &str, v: impl Into<Value>) -> Override {
    (path.split('.').map(str::to_string).collect(), v.into())
}
