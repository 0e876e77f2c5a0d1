//! Experiment configuration: a flat TOML file with an explicit version.

use std::path::{Path, PathBuf};

use pnbm_core::training::{ModelKind, TrainConfig};
use pnbm_core::{Error, RatingFormat, RegForm, Result, SplitSpec, Variant};
use serde::{Deserialize, Serialize};

pub const CONFIG_VERSION: u32 = 1;

/// Everything needed to reproduce one run. Unset optional values mean
/// "unlimited" (`neighbor_limit_train`, `k`) or "not used" (`laplace_mu`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    pub format: RatingFormat,
    /// Pre-built split manifests; takes precedence over `data`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<PathBuf>,
    pub train_frac: f64,
    pub valid_frac: f64,
    pub test_frac: f64,
    pub split_seed: u64,
    pub profile: String,
    pub seed: u64,
    pub epochs: usize,
    pub beta: f64,
    pub lambda: Vec<f64>,
    pub phi: Vec<f64>,
    pub variant: Variant,
    pub reg_form: RegForm,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub laplace_mu: Option<f64>,
    pub shuffle: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neighbor_limit_train: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    pub repeats: usize,
    pub baseline: String,
    /// Record wall-clock seconds in the history; off keeps reruns byte-identical.
    pub timings: bool,
}

impl ExperimentConfig {
    /// Defaults of the named profile.
    pub fn from_profile(name: &str) -> Result<Self> {
        let kind: ModelKind = name.parse()?;
        let p = kind.profile();
        let split = SplitSpec::standard(0);
        Ok(ExperimentConfig {
            version: CONFIG_VERSION,
            data: None,
            format: RatingFormat::Tsv,
            split: None,
            train_frac: split.train_frac,
            valid_frac: split.valid_frac,
            test_frac: split.test_frac,
            split_seed: 0,
            profile: kind.name().to_string(),
            seed: p.seed,
            epochs: p.epochs,
            beta: p.beta,
            lambda: p.lambdas,
            phi: kind.layer_plan().iter().map(|&(_, phi)| phi).collect(),
            variant: p.variant,
            reg_form: p.reg_form,
            laplace_mu: p.laplace_mu,
            shuffle: p.shuffle,
            neighbor_limit_train: p.neighbor_limit_train,
            k: p.eval_k,
            repeats: 5,
            baseline: ModelKind::RegSim.name().to_string(),
            timings: false,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("config file: {}", e.message())))?;
        if config.version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "config version {} is not supported (expected {CONFIG_VERSION})",
                config.version
            )));
        }
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is representable as TOML")
    }

    pub fn kind(&self) -> Result<ModelKind> {
        self.profile.parse()
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            train_frac: self.train_frac,
            valid_frac: self.valid_frac,
            test_frac: self.test_frac,
            seed: self.split_seed,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            beta: self.beta,
            lambdas: self.lambda.clone(),
            epochs: self.epochs,
            seed: self.seed,
            variant: self.variant,
            reg_form: self.reg_form,
            laplace_mu: self.laplace_mu,
            shuffle: self.shuffle,
            neighbor_limit_train: self.neighbor_limit_train,
            eval_k: self.k,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mpnbm_profile_expands() {
        let c = ExperimentConfig::from_profile("mpnbm").unwrap();
        assert_eq!(c.beta, 0.2);
        assert_eq!(c.lambda, vec![0.05; 3]);
        assert_eq!(c.phi, vec![3.0, 1.0, 1.0]);
        assert_eq!(c.k, Some(200));
    }

    #[test]
    fn toml_round_trip() {
        for name in ["regsim", "slim", "pnbm", "mpnbm", "tanh-mpnbm", "pcc", "cos"] {
            let c = ExperimentConfig::from_profile(name).unwrap();
            assert_eq!(ExperimentConfig::parse(&c.to_toml()).unwrap(), c, "{name}");
        }
    }

    #[test]
    fn rejects_other_versions() {
        let mut c = ExperimentConfig::from_profile("regsim").unwrap();
        c.version = 7;
        assert!(ExperimentConfig::parse(&c.to_toml()).is_err());
    }
}
