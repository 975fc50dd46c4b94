//! Run configuration: a flat sectioned key-value file parsed as TOML.

use std::collections::BTreeSet;
use std::path::Path;

use paqft_core::dynamics::{Interaction, KGOperator};
use paqft_core::lattice::LatticeSpacetime;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::suites::Suite;

/// Upper bound on lattice points; propagators are dense matrices.
pub const MAX_POINTS: usize = 1024;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {message}")]
    Read { path: String, message: String },
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    pub n_t: usize,
    pub n_x: usize,
    pub dt: f64,
    pub dx: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheorySection {
    pub mass: f64,
    /// Truncation order `K` in the coupling.
    pub lambda_order: usize,
    #[serde(default = "default_interaction")]
    pub interaction: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    /// Caps every pinned check tolerance from above.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub experiments: Vec<String>,
    #[serde(default)]
    pub output: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub lattice: LatticeSection,
    pub theory: TheorySection,
    pub run: RunSection,
}

fn default_interaction() -> String {
    "phi4".into()
}

fn default_tolerance() -> f64 {
    1e-9
}

impl RunConfig {
    /// The reference configuration: 16 × 8 lattice, `dt = 0.5`, `dx = 1`,
    /// `m = 1`, `K = 2`, every suite.
    pub fn reference() -> Self {
        RunConfig {
            lattice: LatticeSection { n_t: 16, n_x: 8, dt: 0.5, dx: 1.0 },
            theory: TheorySection { mass: 1.0, lambda_order: 2, interaction: default_interaction() },
            run: RunSection {
                tolerance: default_tolerance(),
                seed: 1,
                experiments: Suite::ALL.iter().map(|s| s.name().to_string()).collect(),
                output: None,
            },
        }
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Read { path: path.display().to_string(), message: e.to_string() })?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks every module precondition the selected suites rely on.
    pub fn validate(&self) -> Result<Validated, ConfigError> {
        let invalid = |s: String| Err(ConfigError::Invalid(s));
        let l = &self.lattice;
        let lattice = LatticeSpacetime::new(l.n_t, l.n_x, l.dt, l.dx)
            .map_err(|e| ConfigError::Invalid(format!("lattice: {e}")))?;
        if l.n_t * l.n_x > MAX_POINTS {
            return invalid(format!("lattice has {} points, at most {MAX_POINTS} are supported", l.n_t * l.n_x));
        }
        let op =
            KGOperator::new(lattice, self.theory.mass).map_err(|e| ConfigError::Invalid(format!("dynamics: {e}")))?;
        for j in 0..l.n_x {
            // the two-point function needs the strict CFL bound
            if op.mode_phase(j).is_err() {
                return invalid(format!(
                    "CFL bound: mode {j} has omega^2 dt^2 = {:.4} but the two-point function needs < 4",
                    op.omega_sq(j) * l.dt * l.dt
                ));
            }
        }
        if !(1..=3).contains(&self.theory.lambda_order) {
            return invalid(format!("lambda_order must be 1, 2 or 3, got {}", self.theory.lambda_order));
        }
        let interaction: Interaction =
            self.theory.interaction.parse().map_err(|e| ConfigError::Invalid(format!("interaction: {e}")))?;
        let tol = self.run.tolerance;
        if !(tol.is_finite() && tol >= 0.0) {
            return invalid(format!("tolerance must be finite and non-negative, got {tol}"));
        }
        if i64::try_from(self.run.seed).is_err() {
            return invalid(format!("seed {} does not fit a signed 64-bit integer", self.run.seed));
        }
        let mut suites = Vec::new();
        let mut seen = BTreeSet::new();
        for name in &self.run.experiments {
            let suite: Suite = name.parse().map_err(ConfigError::Invalid)?;
            if !seen.insert(suite) {
                return invalid(format!("suite {name} is listed twice"));
            }
            let (min_t, min_x) = suite.min_lattice();
            if l.n_t < min_t || l.n_x < min_x {
                return invalid(format!(
                    "suite {name} needs at least {min_t} time rows and {min_x} sites, got {} x {}",
                    l.n_t, l.n_x
                ));
            }
            suites.push(suite);
        }
        Ok(Validated { config: self.clone(), lattice, op, interaction, suites })
    }
}

/// A configuration that passed validation, with its module objects.
#[derive(Debug, Clone)]
pub struct Validated {
    pub config: RunConfig,
    pub lattice: LatticeSpacetime,
    pub op: KGOperator,
    pub interaction: Interaction,
    pub suites: Vec<Suite>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let c = RunConfig::reference();
        assert_eq!(RunConfig::parse(&c.to_text()).unwrap(), c);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn defaults_apply() {
        let c = RunConfig::parse(
            "[lattice]\nn_t = 8\nn_x = 8\ndt = 0.5\ndx = 1.0\n[theory]\nmass = 1.0\nlambda_order = 2\n[run]\n",
        )
        .unwrap();
        assert_eq!(c.run.tolerance, 1e-9);
        assert!(c.run.experiments.is_empty());
        assert_eq!(c.theory.interaction, "phi4");
    }

    #[test]
    fn rejections_name_the_precondition() {
        let mut c = RunConfig::reference();
        c.lattice.dt = 2.0;
        let e = c.validate().unwrap_err().to_string();
        assert!(e.contains("CFL"), "{e}");
        let mut c = RunConfig::reference();
        c.theory.mass = 0.0;
        assert!(c.validate().unwrap_err().to_string().contains("mass"));
        let mut c = RunConfig::reference();
        c.run.experiments = vec!["nope".into()];
        assert!(c.validate().unwrap_err().to_string().contains("nope"));
        let mut c = RunConfig::reference();
        c.lattice.n_x = 4;
        assert!(c.validate().unwrap_err().to_string().contains("needs at least"));
        assert!(RunConfig::parse("[lattice]\nbogus = 1\n").is_err());
    }
}
