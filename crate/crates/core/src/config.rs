//! Run configuration (TOML or JSON).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evolutionary::EaParams;
use crate::geometry::Metric;
use crate::macro_model::AdjacencyMode;
use crate::metrics::ReferenceMode;
use crate::sizing::SizingConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RiskConfig {
    pub classes: usize,
    /// Weight of the accident rank.
    pub gamma: f64,
}

impl Default for RiskConfig {
    fn default() -> Self {
        RiskConfig { classes: 4, gamma: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IndicatorConfig {
    pub reference: ReferenceMode,
    pub normalize: bool,
}

impl Default for IndicatorConfig {
    fn default() -> Self {
        IndicatorConfig { reference: ReferenceMode::Fixed, normalize: false }
    }
}

/// Everything a pipeline run needs besides the instance.
///
/// Stage seeds derive from `seed`: the macro GA uses `seed`, calibration run
/// `r` uses `seed + 2 + r`, the micro solve uses `seed + 1`. The `seed`
/// fields inside the tier parameters are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub risk: RiskConfig,
    pub sizing: SizingConfig,
    pub macro_ea: EaParams,
    pub micro_ea: EaParams,
    pub calibration_runs: usize,
    pub metric: Metric,
    pub adjacency: AdjacencyMode,
    /// Demand value at or above which a community counts as high risk.
    pub high_risk_threshold: f64,
    pub indicators: IndicatorConfig,
    /// Weights of the normalised objectives when picking the compromise.
    pub weights: [f64; 3],
    pub output_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            risk: RiskConfig::default(),
            sizing: SizingConfig::default(),
            macro_ea: EaParams::default(),
            micro_ea: EaParams::default(),
            calibration_runs: 10,
            metric: Metric::Euclidean,
            adjacency: AdjacencyMode::Nearest,
            high_risk_threshold: 4.0,
            indicators: IndicatorConfig::default(),
            weights: [1.0; 3],
            output_dir: None,
        }
    }
}

impl RunConfig {
    /// Reads TOML, or JSON when the extension is `.json`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: RunConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text)?
        } else {
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.macro_ea.validate()?;
        self.micro_ea.validate()?;
        if self.calibration_runs == 0 {
            return Err(Error::Config("calibration_runs must be at least 1".into()));
        }
        if self.risk.classes == 0 {
            return Err(Error::Config("risk.classes must be at least 1".into()));
        }
        if !(self.high_risk_threshold >= 0.0) {
            return Err(Error::Config("high_risk_threshold must be non-negative".into()));
        }
        Ok(())
    }

    pub fn macro_params(&self) -> EaParams {
        self.macro_ea.with_seed(self.seed)
    }

    pub fn micro_params(&self) -> EaParams {
        self.micro_ea.with_seed(self.seed.wrapping_add(1))
    }

    /// Parameters of calibration run 0; later runs add their index.
    pub fn calibration_params(&self) -> EaParams {
        self.micro_ea.with_seed(self.seed.wrapping_add(2))
    }

    /// Canonical JSON form, the input of [`RunConfig::sha256`].
    pub fn canonical_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn sha256(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.canonical_json()?.as_bytes())))
    }
}
