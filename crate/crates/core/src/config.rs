//! Run configuration: a single JSON document, matrices row-major.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cutoff::CutoffSpec;
use crate::error::{Error, Result};
use crate::exponents::ExponentInput;
use crate::kalman::OperatorSpec;
use crate::multiplier::particular::GammaSearch;
use crate::multiplier::{BuildOptions, PointwiseRegion};
use crate::spectral::{EstimateKind, SpectralGrid, TestFunctionSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Kalman,
    Exponents,
    Build,
    VerifyPointwise,
    VerifySpectral,
}

impl Task {
    /// Dependency order.
    pub const ALL: [Task; 5] = [
        Task::Kalman,
        Task::Exponents,
        Task::Build,
        Task::VerifyPointwise,
        Task::VerifySpectral,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Task::Kalman => "kalman",
            Task::Exponents => "exponents",
            Task::Build => "build",
            Task::VerifyPointwise => "verify-pointwise",
            Task::VerifySpectral => "verify-spectral",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Task::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown task '{s}'")))
    }

    /// Tasks whose results this one consumes.
    pub fn prerequisites(&self) -> &'static [Task] {
        match self {
            Task::Kalman => &[],
            Task::Exponents => &[Task::Kalman],
            Task::Build => &[Task::Kalman, Task::Exponents],
            Task::VerifyPointwise => &[Task::Kalman, Task::Exponents, Task::Build],
            Task::VerifySpectral => &[Task::Kalman, Task::Exponents, Task::Build],
        }
    }
}

/// Two-step chain construction for operators made of three equal blocks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParticularConfig {
    pub n_block: usize,
    #[serde(default)]
    pub gamma_search: GammaSearch,
}

/// Which symbol the commutator identity is checked on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommutatorSymbol {
    /// The leading symbol `g_r`.
    Lead,
    /// The assembled multiplier `g`.
    Assembled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralConfig {
    pub grid: SpectralGrid,
    #[serde(default)]
    pub test_functions: TestFunctionSpec,
    #[serde(default = "default_commutator_members")]
    pub commutator_members: usize,
    #[serde(default = "default_commutator_symbol")]
    pub commutator_symbol: CommutatorSymbol,
    #[serde(default = "default_estimate_members")]
    pub estimate_members: usize,
    #[serde(default)]
    pub estimates: Vec<EstimateKind>,
}

fn default_commutator_members() -> usize {
    20
}

fn default_commutator_symbol() -> CommutatorSymbol {
    CommutatorSymbol::Lead
}

fn default_estimate_members() -> usize {
    crate::spectral::MIN_ENSEMBLE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub name: String,
    pub operator: OperatorSpec,
    pub exponents: ExponentInput,
    #[serde(default)]
    pub cutoffs: CutoffSpec,
    #[serde(default)]
    pub build: BuildOptions,
    #[serde(default)]
    pub pointwise: PointwiseRegion,
    #[serde(default)]
    pub particular: Option<ParticularConfig>,
    #[serde(default)]
    pub spectral: Option<SpectralConfig>,
    pub tasks: Vec<Task>,
    #[serde(default)]
    pub output_dir: Option<String>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Checks every section needed by the requested tasks.
    pub fn validate(&self) -> Result<()> {
        let cfg = |e: Error| Error::Config(e.to_string());
        OperatorSpec::new(self.operator.b.clone(), self.operator.q.clone(), self.operator.time_dependent)
            .map_err(cfg)?;
        self.exponents.validate().map_err(cfg)?;
        self.cutoffs.validate().map_err(cfg)?;
        self.pointwise.validate().map_err(cfg)?;
        if self.tasks.is_empty() {
            return Err(Error::Config("no tasks requested".into()));
        }
        if let Some(p) = &self.particular {
            if p.n_block == 0 || 3 * p.n_block != self.operator.dim() {
                return Err(Error::Config(format!(
                    "particular.n_block = {} does not split dimension {} into three blocks",
                    p.n_block,
                    self.operator.dim()
                )));
            }
        }
        if self.tasks.contains(&Task::VerifySpectral) {
            let s = self
                .spectral
                .as_ref()
                .ok_or_else(|| Error::Config("task verify-spectral needs a spectral section".into()))?;
            s.grid.validate()?;
            s.test_functions.validate()?;
            if s.grid.space_dim != self.operator.dim() || s.grid.time_axis != self.operator.time_dependent {
                return Err(Error::Config(
                    "spectral grid axes do not match the operator dimension and time dependence".into(),
                ));
            }
            if !s.estimates.is_empty() && s.estimate_members < crate::spectral::MIN_ENSEMBLE {
                return Err(Error::Config(format!(
                    "estimate_members must be at least {}",
                    crate::spectral::MIN_ENSEMBLE
                )));
            }
        }
        Ok(())
    }

    /// Requested tasks plus their prerequisites, in dependency order.
    pub fn task_plan(&self) -> Vec<Task> {
        Task::ALL
            .into_iter()
            .filter(|t| self.tasks.contains(t) || self.tasks.iter().any(|r| r.prerequisites().contains(t)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_pulls_prerequisites() {
        let mut cfg = crate::presets::preset("kinetic-autonomous").unwrap();
        cfg.tasks = vec![Task::Build];
        assert_eq!(cfg.task_plan(), vec![Task::Kalman, Task::Exponents, Task::Build]);
        cfg.tasks = vec![Task::Kalman];
        assert_eq!(cfg.task_plan(), vec![Task::Kalman]);
    }

    #[test]
    fn non_psd_q_is_a_config_error() {
        let mut cfg = crate::presets::preset("kinetic-autonomous").unwrap();
        cfg.operator.q[(1, 1)] = -1.0;
        let text = cfg.to_json().unwrap();
        match RunConfig::from_json(&text) {
            Err(Error::Config(msg)) => assert!(msg.contains("positive semidefinite"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn json_round_trip() {
        for name in crate::presets::preset_names() {
            let cfg = crate::presets::preset(name).unwrap();
            let back = RunConfig::from_json(&cfg.to_json().unwrap()).unwrap();
            assert_eq!(cfg, back, "{name}");
        }
    }
}
