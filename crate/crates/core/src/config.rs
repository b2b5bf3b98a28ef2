//! Declarative experiment configuration (TOML).

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::compression::{CompressorSpec, FeatureMap};
use crate::error::{Error, Result};
use crate::gbm::{GbmParams, LossSpec};
use crate::simulators::{MechanismKind, MechanismSpec, PriorSpec};
use crate::types::{ParameterSpace, ParameterVector};

/// Configs shipped with the crate, addressable by name.
pub const SHIPPED: &[(&str, &str)] = &[
    ("weibull_table1", include_str!("../configs/weibull_table1.toml")),
    ("weibull_table1_smoke", include_str!("../configs/weibull_table1_smoke.toml")),
    ("state_space_table3", include_str!("../configs/state_space_table3.toml")),
    ("state_space_table3_smoke", include_str!("../configs/state_space_table3_smoke.toml")),
    ("stoch_vol_r1", include_str!("../configs/stoch_vol_r1.toml")),
    ("stoch_vol_r1_smoke", include_str!("../configs/stoch_vol_r1_smoke.toml")),
    ("stoch_vol_r2", include_str!("../configs/stoch_vol_r2.toml")),
    ("stoch_vol_r2_smoke", include_str!("../configs/stoch_vol_r2_smoke.toml")),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorConfig {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub m_train: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    #[default]
    Tsgbm,
    /// Returns the true parameter; for checking the evaluation harness.
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateConfig {
    pub mc: usize,
    pub m_test: usize,
    /// Parameter values at which the MSE table is computed.
    pub theta_test: Vec<Vec<f64>>,
    #[serde(default)]
    pub estimator: EstimatorKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    pub mechanism: MechanismSpec,
    pub prior: PriorConfig,
    pub compressor: CompressorSpec,
    /// Feature map applied to the compressed statistics (default: statistics as-is).
    #[serde(default)]
    pub features: FeatureMap,
    pub gbm: GbmParams,
    pub loss: LossSpec,
    pub train: TrainConfig,
    pub evaluate: EvaluateConfig,
}

impl ExperimentConfig {
    /// Parses and validates.
    pub fn from_toml(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| {
            let path = e
                .span()
                .map(|sp| format!("byte {}..{}", sp.start, sp.end))
                .unwrap_or_else(|| "<document>".into());
            Error::config(path, e.message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// Loads a config file, or a shipped config when `path` names one.
    pub fn load(path: &str) -> Result<Self> {
        if let Some((_, text)) = SHIPPED.iter().find(|(name, _)| *name == path) {
            return Self::from_toml(text);
        }
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("--config", format!("cannot read `{path}`: {e}")))?;
        Self::from_toml(&text)
    }

    pub fn shipped(name: &str) -> Result<Self> {
        let (_, text) = SHIPPED
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| Error::config("--config", format!("no shipped config named `{name}`")))?;
        Self::from_toml(text)
    }

    /// SHA-256 over the canonical JSON form.
    pub fn fingerprint(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serialises");
        let digest = Sha256::digest(&canonical);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn prior_spec(&self) -> Result<PriorSpec> {
        let space = ParameterSpace::new(self.prior.lo.clone(), self.prior.hi.clone())
            .map_err(|e| Error::config("prior", e.to_string()))?;
        PriorSpec::new(space, self.parameter_names())
    }

    pub fn parameter_names(&self) -> Vec<String> {
        self.mechanism
            .kind
            .parameter_names()
            .iter()
            .map(|s| s.to_string())
            .collect()
    }

    pub fn theta_test(&self) -> Result<Vec<ParameterVector>> {
        self.evaluate
            .theta_test
            .iter()
            .map(|t| ParameterVector::new(t.clone(), self.parameter_names()))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.mechanism.validate()?;
        let d = self.mechanism.kind.dims();
        if self.prior.lo.len() != d || self.prior.hi.len() != d {
            return Err(Error::config(
                "prior",
                format!("{} needs {d}-dimensional bounds", self.mechanism.kind.as_str()),
            ));
        }
        self.prior_spec()?;
        if self.mechanism.kind == MechanismKind::Weibull && self.prior.lo.iter().any(|&l| l <= 0.0) {
            return Err(Error::config("prior.lo", "Weibull parameters must be positive"));
        }
        self.compressor.validate(self.mechanism.n)?;
        self.features.validate()?;
        self.gbm.validate()?;
        self.loss.validate()?;
        if self.train.m_train < 2 * self.gbm.min_data_in_leaf {
            return Err(Error::config(
                "train.m_train",
                format!("must be at least 2 * gbm.min_data_in_leaf = {}", 2 * self.gbm.min_data_in_leaf),
            ));
        }
        if self.evaluate.mc == 0 {
            return Err(Error::config("evaluate.mc", "must be at least 1"));
        }
        if self.evaluate.m_test == 0 {
            return Err(Error::config("evaluate.m_test", "must be at least 1"));
        }
        for (i, t) in self.evaluate.theta_test.iter().enumerate() {
            let path = format!("evaluate.theta_test[{i}]");
            if t.len() != d {
                return Err(Error::config(path, format!("expected {d} values")));
            }
            if t.iter().any(|v| !v.is_finite()) {
                return Err(Error::config(path, "values must be finite"));
            }
            if self.mechanism.kind == MechanismKind::Weibull && t.iter().any(|&v| v <= 0.0) {
                return Err(Error::config(path, "Weibull parameters must be positive"));
            }
        }
        Ok(())
    }
}
