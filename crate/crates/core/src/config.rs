//! Run configuration in TOML, with defaults and validation.

use crate::error::{Error, Result};
use crate::geometry::LatticeGeometry;
use crate::groups::{Family, GroupSpec, ModelParams, Target};
use crate::sampler::SamplerPlan;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    /// Worker threads; 0 lets the runtime decide.
    pub threads: usize,
    pub z_threshold: f64,
    pub model: ModelConfig,
    pub sampler: SamplerConfig,
    pub mcmc: SamplerPlan,
    pub checks: ChecksConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 1,
            threads: 0,
            z_threshold: 4.0,
            model: ModelConfig::default(),
            sampler: SamplerConfig::default(),
            mcmc: SamplerPlan::default(),
            checks: ChecksConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub group: Family,
    pub n: usize,
    pub d: usize,
    pub l: usize,
    pub beta: f64,
    pub kappa: f64,
    pub target: Target,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            group: Family::SU,
            n: 2,
            d: 2,
            l: 4,
            beta: 0.3,
            kappa: 0.2,
            target: Target::Sphere,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerMode {
    /// Metropolis chains per `[mcmc]`.
    Mcmc,
    /// Exact product sampling; needs `beta = kappa = 0`.
    Iid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub mode: SamplerMode,
    pub iid_samples: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            mode: SamplerMode::Mcmc,
            iid_samples: 1_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChecksConfig {
    pub n_min: usize,
    pub n_max: usize,
    pub magic_inputs: usize,
    pub grad_configs: usize,
    pub grad_side: usize,
}

impl Default for ChecksConfig {
    fn default() -> Self {
        ChecksConfig {
            n_min: 2,
            n_max: 6,
            magic_inputs: 100,
            grad_configs: 50,
            grad_side: 3,
        }
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let c: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    /// Read a TOML config, or the config embedded in a run manifest (`.json`).
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        if path.extension().is_some_and(|x| x == "json") {
            let m: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
            let c = m
                .get("config")
                .cloned()
                .ok_or_else(|| Error::Config("manifest has no config".into()))?;
            let c: Config = serde_json::from_value(c).map_err(|e| Error::Config(e.to_string()))?;
            c.validate()?;
            return Ok(c);
        }
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.params()?;
        self.mcmc.validate()?;
        if self.z_threshold.is_nan() || self.z_threshold <= 0.0 {
            return Err(Error::Config("z_threshold must be positive".into()));
        }
        if self.checks.n_min < 2 || self.checks.n_min > self.checks.n_max {
            return Err(Error::Config("checks need 2 <= n_min <= n_max".into()));
        }
        GroupSpec::new(self.model.group, self.checks.n_max)?;
        Ok(())
    }

    pub fn geometry(&self) -> Result<LatticeGeometry> {
        LatticeGeometry::new(self.model.d, self.model.l)
    }

    pub fn params(&self) -> Result<ModelParams> {
        let m = &self.model;
        ModelParams::new(
            GroupSpec::new(m.group, m.n)?,
            m.target.clone(),
            self.geometry()?,
            m.beta,
            m.kappa,
        )
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical TOML form.
    pub fn digest(&self) -> String {
        sha256_hex(self.to_toml().as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = Config::default();
        assert_eq!(Config::parse(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(Config::parse("sed = 3").is_err());
        assert!(Config::parse("[model]\nbeta = 0.1\ngamma = 1").is_err());
    }

    #[test]
    fn flat_target_parses() {
        let c = Config::parse(
            "[model]\ngroup = \"SO\"\nn = 3\n[model.target]\nkind = \"flat\"\na = [1.0, -0.5]\n",
        )
        .unwrap();
        assert_eq!(c.model.target, Target::Flat { a: vec![1.0, -0.5] });
        assert!(Config::parse("[model.target]\nkind = \"flat\"\na = [1.0]\n").is_err());
    }
}
