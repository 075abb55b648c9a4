//! Experiment configuration files.

use std::path::Path;

use hvexp::bounds::{BoundConfig, ConstantId, Slot};
use hvexp::harness::{ExtremalKind, DEFAULT_EPS};
use hvexp::hausdorff::{Kernel, OperatorSpec};
use hvexp::matrices::MatrixFamily;
use hvexp::luxemburg::{NormContext, PiecewisePowerFunction};
use hvexp::spaces::{ScanRanges, SpaceSpec};
use serde::{Deserialize, Serialize};

use crate::CliError;

fn default_rel_tol() -> f64 {
    1e-9
}

fn default_range() -> (i32, i32) {
    (-40, 40)
}

fn default_eps() -> Vec<f64> {
    DEFAULT_EPS.to_vec()
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_range")]
    pub k_range: (i32, i32),
    #[serde(default = "default_range")]
    pub k0_range: (i32, i32),
    #[serde(default = "default_range")]
    pub r_grid_range: (i32, i32),
    #[serde(default = "default_eps")]
    pub eps_list: Vec<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default, rename = "N")]
    pub samples: Option<usize>,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            rel_tol: default_rel_tol(),
            k_range: default_range(),
            k0_range: default_range(),
            r_grid_range: default_range(),
            eps_list: default_eps(),
            seed: None,
            samples: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub m: usize,
    pub kernel: Kernel,
    pub families: Vec<MatrixFamily>,
    #[serde(default)]
    pub slots: Vec<Slot>,
    #[serde(default = "one")]
    pub zeta: f64,
    /// Constant used when `--which` is absent.
    #[serde(default)]
    pub constant: Option<ConstantId>,
    #[serde(default)]
    pub extremal: Option<ExtremalKind>,
    /// Space for `norm`.
    #[serde(default)]
    pub space: Option<SpaceSpec>,
    /// Inputs for `norm` (first entry) and `apply`.
    #[serde(default)]
    pub functions: Vec<PiecewisePowerFunction>,
    #[serde(default)]
    pub settings: Settings,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.operator().validate().map_err(|e| CliError::Config(e.to_string()))?;
        if !self.slots.is_empty() {
            self.bound_config().validate().map_err(|e| CliError::Config(e.to_string()))?;
        }
        let s = &self.settings;
        if !(s.rel_tol > 0.0 && s.rel_tol < 1.0) {
            return Err(CliError::Config(format!("rel_tol must lie in (0, 1), got {}", s.rel_tol)));
        }
        for (name, (lo, hi)) in [("k_range", s.k_range), ("k0_range", s.k0_range), ("r_grid_range", s.r_grid_range)] {
            if lo > hi {
                return Err(CliError::Config(format!("{name} is empty: [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    pub fn operator(&self) -> OperatorSpec {
        OperatorSpec {
            n: self.n,
            m: self.m,
            kernel: self.kernel.clone(),
            families: self.families.clone(),
        }
    }

    pub fn bound_config(&self) -> BoundConfig {
        BoundConfig {
            operator: self.operator(),
            slots: self.slots.clone(),
            zeta: self.zeta,
        }
    }

    pub fn require_slots(&self) -> Result<BoundConfig, CliError> {
        if self.slots.is_empty() {
            return Err(CliError::Config("config has no slots".into()));
        }
        Ok(self.bound_config())
    }

    pub fn ranges(&self) -> ScanRanges {
        ScanRanges {
            k_range: self.settings.k_range,
            k0_range: self.settings.k0_range,
            r_grid_range: self.settings.r_grid_range,
        }
    }

    pub fn context(&self, rel_tol: Option<f64>) -> NormContext {
        NormContext::new(self.n).with_rel_tol(rel_tol.unwrap_or(self.settings.rel_tol))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses() {
        let text = r#"{"n":1,"m":1,"kernel":{"c":1.0,"a":1.0,"support":[0.0,1.0],"one_sided":true},
            "families":[{"type":"scalar_dilation","s":{"c":1.0,"a":1.0}}],
            "slots":[{"q":{"type":"constant","value":2.0},"p":2.0}]}"#;
        let cfg: ExperimentConfig = serde_json::from_str(text).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.settings, Settings::default());
        assert_eq!(cfg.zeta, 1.0);
    }

    #[test]
    fn fixtures_round_trip() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
        let mut seen = 0;
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            let cfg = ExperimentConfig::load(&path).unwrap();
            let text = serde_json::to_string(&cfg).unwrap();
            let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
            assert_eq!(cfg, back, "{}", path.display());
            seen += 1;
        }
        assert!(seen >= 5);
    }

    #[test]
    fn unknown_field_rejected() {
        let text = r#"{"n":1,"m":1,"kernel":{"c":1.0,"a":1.0,"support":[0.0,1.0]},"families":[],"bogus":1}"#;
        assert!(serde_json::from_str::<ExperimentConfig>(text).is_err());
    }
}
