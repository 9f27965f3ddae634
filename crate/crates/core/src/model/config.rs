//! TOML run configuration:
//!
//! ```toml
//! [market]
//! mu = 0.05
//! sigma = 0.0
//! s0 = 1.0
//!
//! [impact]
//! kind = "quadratic"   # or "linear"
//! alpha0 = 0.01
//!
//! [noise]
//! gamma = 1.0
//! alpha1 = 3.0
//! beta1 = 2.0          # Gamma scale
//!
//! [problem]
//! t = 1.0
//! n = 500
//! phi0 = 10.0
//! grid_points = 1000   # optional
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::params::{ImpactKind, ImpactModel, MarketParams, NoiseModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketSection {
    pub mu: f64,
    pub sigma: f64,
    pub s0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImpactSection {
    pub kind: ImpactKind,
    pub alpha0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub gamma: f64,
    pub alpha1: f64,
    pub beta1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub t: f64,
    pub n: u32,
    pub phi0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub market: MarketSection,
    pub impact: ImpactSection,
    pub noise: NoiseSection,
    pub problem: ProblemSection,
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Constructs every model type, surfacing the first invalid value.
    pub fn validate(&self) -> Result<()> {
        self.market_params()?;
        self.impact_model()?;
        self.noise_model()?;
        let p = &self.problem;
        if !(p.t > 0.0 && p.t <= 1.0) {
            return Err(Error::Config(format!(
                "problem.t = {} must lie in (0, 1]",
                p.t
            )));
        }
        if p.n == 0 {
            return Err(Error::Config("problem.n must be >= 1".into()));
        }
        if !(p.phi0 > 0.0 && p.phi0.is_finite()) {
            return Err(Error::Config(format!(
                "problem.phi0 = {} must be > 0",
                p.phi0
            )));
        }
        if p.grid_points == Some(0) {
            return Err(Error::Config("problem.grid_points must be >= 1".into()));
        }
        Ok(())
    }

    pub fn market_params(&self) -> Result<MarketParams> {
        MarketParams::new(self.market.mu, self.market.sigma, self.market.s0)
    }

    pub fn impact_model(&self) -> Result<ImpactModel> {
        ImpactModel::new(self.impact.kind, self.impact.alpha0)
    }

    pub fn noise_model(&self) -> Result<NoiseModel> {
        NoiseModel::new(self.noise.gamma, self.noise.alpha1, self.noise.beta1)
    }

    /// Grid size: the configured value, else 1000 intervals for
    /// `phi0 <= 10` and 2000 above.
    pub fn grid_points(&self) -> usize {
        self.problem
            .grid_points
            .unwrap_or(if self.problem.phi0 <= 10.0 {
                1000
            } else {
                2000
            })
    }
}
