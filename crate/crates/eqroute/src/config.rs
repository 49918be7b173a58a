//! Input documents: network configs and verification suites.

use std::path::Path;

use eqroute_core::perturbed::PerturbedNetwork;
use eqroute_core::{CostSeries, CostTerm, RegularNetwork};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub lambda: f64,
    pub exponent: f64,
}

impl From<CostTerm> for TermConfig {
    fn from(t: CostTerm) -> Self {
        Self {
            lambda: t.lambda,
            exponent: t.exponent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostConfig {
    pub terms: Vec<TermConfig>,
    #[serde(default)]
    pub auto_normalize: bool,
}

impl CostConfig {
    pub fn power(exponent: f64) -> Self {
        Self {
            terms: vec![TermConfig {
                lambda: 1.0,
                exponent,
            }],
            auto_normalize: false,
        }
    }

    pub fn series(&self) -> Result<CostSeries, CliError> {
        let terms = self
            .terms
            .iter()
            .map(|t| CostTerm::new(t.lambda, t.exponent));
        CostSeries::new(terms.collect::<Vec<_>>(), self.auto_normalize).map_err(CliError::config)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub n: usize,
    pub volumes: Vec<f64>,
    pub cost: CostConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shifts: Option<Vec<f64>>,
}

impl NetworkConfig {
    pub fn check_shape(&self) -> Result<(), CliError> {
        if self.volumes.len() != self.n {
            return Err(CliError::Config(format!(
                "n = {} but {} volumes given",
                self.n,
                self.volumes.len()
            )));
        }
        if let Some(s) = &self.shifts {
            if s.len() != self.n {
                return Err(CliError::Config(format!(
                    "n = {} but {} shifts given",
                    self.n,
                    s.len()
                )));
            }
        }
        Ok(())
    }

    pub fn is_unshifted(&self) -> bool {
        self.shifts
            .as_ref()
            .map_or(true, |s| s.iter().all(|&d| d == 0.0))
    }

    pub fn regular(&self) -> Result<RegularNetwork, CliError> {
        self.check_shape()?;
        if !self.is_unshifted() {
            return Err(CliError::Config(
                "regular chain expects no shifts (or all zero)".into(),
            ));
        }
        RegularNetwork::new(self.volumes.clone(), self.cost.series()?).map_err(CliError::config)
    }

    pub fn perturbed(&self) -> Result<PerturbedNetwork, CliError> {
        self.check_shape()?;
        let shifts = self.shifts.clone().unwrap_or_else(|| vec![0.0; self.n]);
        PerturbedNetwork::new(shifts, self.volumes.clone(), self.cost.series()?)
            .map_err(CliError::config)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VolumeMode {
    /// Every `Q_i = 1`.
    Ones,
    /// Uniform-ish draws with `Q_i ≥ 1` and `Σ Q_i < 3N/2`.
    Region,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Inclusive node-count range.
    pub n: [usize; 2],
    pub exponents: Vec<f64>,
    #[serde(default = "default_mode")]
    pub volumes: VolumeMode,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_mode() -> VolumeMode {
    VolumeMode::Ones
}

fn default_samples() -> usize {
    1
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySuite {
    #[serde(default)]
    pub instances: Vec<NetworkConfig>,
    #[serde(default)]
    pub grid: Option<GridConfig>,
}

impl VerifySuite {
    pub fn default_suite() -> Self {
        Self {
            instances: Vec::new(),
            grid: Some(GridConfig {
                n: [2, 8],
                exponents: vec![1.0, 1.5, 2.0, 3.0],
                volumes: VolumeMode::Ones,
                samples: 1,
            }),
        }
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("cannot parse {}: {e}", path.display())))
}
