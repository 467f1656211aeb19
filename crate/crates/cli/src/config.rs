//! Configuration layering: preset, then an optional TOML or JSON file, then
//! command-line flags.

use std::path::Path;

use anyhow::{bail, Context, Result};
use ghostkitchen::instance::{preset_by_name, InstanceConfig};
use ghostkitchen::lns::LnsConfig;
use ghostkitchen::vfa::TrainConfig;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const DEFAULT_PRESET: &str = "desk";

/// Contents of a configuration file. Every section is a partial overlay on
/// the preset or the built-in defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub preset: Option<String>,
    pub seed: Option<u64>,
    pub instance: Option<Value>,
    pub lns: Option<Value>,
    pub train: Option<Value>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<(Self, Vec<u8>)> {
        let bytes = std::fs::read(path).with_context(|| format!("cannot read config file {}", path.display()))?;
        let text = std::str::from_utf8(&bytes).context("config file is not UTF-8")?;
        let cfg = match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => toml::from_str(text).context("cannot parse TOML config")?,
            Some("json") => serde_json::from_str(text).context("cannot parse JSON config")?,
            _ => bail!("config file must end in .toml or .json"),
        };
        Ok((cfg, bytes))
    }
}

/// Writes `top` over `base`. Objects merge key by key; anything else
/// replaces. Keys absent from `base` are rejected so typos surface.
pub fn overlay(base: &mut Value, top: &Value, path: &str) -> Result<()> {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                match b.get_mut(k) {
                    Some(slot) => overlay(slot, v, &p)?,
                    None => bail!("unknown configuration key `{p}`"),
                }
            }
        }
        (b, t) => *b = t.clone(),
    }
    Ok(())
}

fn layered<T: Serialize + DeserializeOwned>(base: &T, top: Option<&Value>, section: &str) -> Result<T> {
    let Some(top) = top else {
        return Ok(serde_json::from_value(serde_json::to_value(base)?)?);
    };
    let mut v = serde_json::to_value(base)?;
    overlay(&mut v, top, section)?;
    serde_json::from_value(v).with_context(|| format!("invalid `{section}` section"))
}

/// Flag, else file, else fallback.
pub fn pick<T: Clone>(flag: Option<T>, file: Option<&T>, fallback: T) -> T {
    flag.or_else(|| file.cloned()).unwrap_or(fallback)
}

pub fn instance(preset: &str, file: &FileConfig) -> Result<InstanceConfig> {
    let base = preset_by_name(preset)?;
    let inst: InstanceConfig = layered(&base, file.instance.as_ref(), "instance")?;
    inst.validate()?;
    Ok(inst)
}

pub fn lns(file: &FileConfig, iterations: Option<usize>) -> Result<LnsConfig> {
    let mut lns: LnsConfig = layered(&LnsConfig::default(), file.lns.as_ref(), "lns")?;
    if let Some(n) = iterations {
        lns.iterations = n;
    }
    lns.validate()?;
    Ok(lns)
}

pub fn train(file: &FileConfig, lns: LnsConfig) -> Result<TrainConfig> {
    let base = TrainConfig {
        lns,
        ..TrainConfig::default()
    };
    layered(&base, file.train.as_ref(), "train")
}
