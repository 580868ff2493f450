//! Pipeline configuration: a TOML document with one table per stage, plus
//! `section.key=value` overrides.
//!
//! ```toml
//! [density]
//! g = 0.03
//! k = 40.0
//!
//! [peaks]
//! top_k = 5
//! ```

use serde::{Deserialize, Serialize};

use crate::density::{GridSpec, KernelParams};
use crate::error::{Error, Result};
use crate::evaluation::EvalParams;
use crate::features::FilterBankConfig;
use crate::peaks::PeakParams;
use crate::voting::DEFAULT_MAX_PER_SCALE;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VotingConfig {
    pub max_per_scale: usize,
}

impl Default for VotingConfig {
    fn default() -> Self {
        Self {
            max_per_scale: DEFAULT_MAX_PER_SCALE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensityConfig {
    pub g: f64,
    pub k: f64,
    pub n_rho: usize,
    pub n_theta: usize,
}

impl Default for DensityConfig {
    fn default() -> Self {
        let (p, s) = (KernelParams::default(), GridSpec::default());
        Self {
            g: p.g,
            k: p.k,
            n_rho: s.n_rho,
            n_theta: s.n_theta,
        }
    }
}

impl DensityConfig {
    pub fn kernel(&self) -> KernelParams {
        KernelParams {
            g: self.g,
            k: self.k,
        }
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec {
            n_rho: self.n_rho,
            n_theta: self.n_theta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub features: FilterBankConfig,
    pub voting: VotingConfig,
    pub density: DensityConfig,
    pub peaks: PeakParams,
    pub evaluation: EvalParams,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.features.validate()?;
        if self.voting.max_per_scale < 2 {
            return Err(Error::Config("voting.max_per_scale must be >= 2".into()));
        }
        self.density.kernel().validate()?;
        self.density.grid().validate()?;
        self.peaks.validate()?;
        self.evaluation.validate()
    }

    /// Parses a TOML document, rejecting unknown keys and invalid values.
    pub fn from_toml(text: &str) -> Result<Self> {
        Self::from_toml_with_overrides(text, &[])
    }

    /// Parses `text` and then applies `section.key=value` overrides. Values
    /// use TOML syntax (`0.05`, `true`, `"name"`).
    pub fn from_toml_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: Self = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }
}

fn apply_override(table: &mut toml::Table, item: &str) -> Result<()> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{item}` is not key=value")))?;
    let value = format!("v = {}", raw.trim())
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .ok_or_else(|| Error::Config(format!("override `{item}` has an invalid value")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    let (last, parents) = path.split_last().expect("split yields at least one item");
    let mut cur = table;
    for p in parents {
        cur = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("`{p}` is not a section")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}
