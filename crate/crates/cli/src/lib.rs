//! Experiment runner for the lattice check suites.

pub mod config;
pub mod report;
pub mod suites;

use rayon::prelude::*;
use thiserror::Error;

use paqft_core::quantization::QContext;

use crate::config::{ConfigError, Validated};
use crate::report::{Calibration, Report};
use crate::suites::{Suite, SuiteEnv};

pub const THREADS_VAR: &str = "PAQFT_THREADS";

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("suite {suite}: {source}")]
    Suite { suite: &'static str, source: paqft_core::Error },
    #[error("{THREADS_VAR}: {0}")]
    Threads(String),
    #[error("cannot write report: {0}")]
    Io(#[from] std::io::Error),
}

/// Thread count from the environment; `0` or unset means serial.
pub fn threads_from_env() -> Result<usize, RunError> {
    match std::env::var(THREADS_VAR) {
        Err(_) => Ok(0),
        Ok(s) => s.trim().parse().map_err(|_| RunError::Threads(format!("expected an integer, got {s:?}"))),
    }
}

/// Runs the validated suites; the report lists them in configuration order.
pub fn run(validated: &Validated, threads: usize, timings: bool) -> Result<Report, RunError> {
    let cfg = &validated.config;
    let props =
        validated.op.hadamard_w().map_err(|e| RunError::Config(ConfigError::Invalid(format!("dynamics: {e}"))))?;
    let ctx = QContext::new(props);
    let calibration = Calibration { kappa: ctx.kappa(), kappa_t: ctx.kappa_t() };
    let env = SuiteEnv {
        lattice: validated.lattice,
        op: validated.op,
        ctx,
        mass: cfg.theory.mass,
        order: cfg.theory.lambda_order,
        interaction: validated.interaction,
        tolerance_cap: cfg.run.tolerance,
        seed: cfg.run.seed,
        timings,
    };
    let run_one = |s: &Suite| s.run(&env).map_err(|source| RunError::Suite { suite: s.name(), source });
    let results: Vec<_> = if threads == 0 {
        validated.suites.iter().map(run_one).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| RunError::Threads(e.to_string()))?;
        pool.install(|| validated.suites.par_iter().map(run_one).collect())
    };
    let mut checks = Vec::new();
    for r in results {
        checks.extend(r?);
    }
    Ok(Report::new(cfg.clone(), calibration, checks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RunConfig;

    fn small(experiments: &[&str]) -> RunConfig {
        let mut c = RunConfig::reference();
        c.lattice.n_t = 8;
        c.lattice.n_x = 8;
        c.run.experiments = experiments.iter().map(|s| s.to_string()).collect();
        c
    }

    #[test]
    fn empty_run_passes() {
        let r = run(&small(&[]).validate().unwrap(), 0, false).unwrap();
        assert!(r.passed());
        assert!(r.checks.is_empty());
    }

    #[test]
    fn causality_commutators_vanish() {
        let mut c = small(&["causality"]);
        c.lattice.n_t = 4;
        let r = run(&c.validate().unwrap(), 0, false).unwrap();
        assert!(r.passed(), "{}", r.to_json());
        for id in ["delta_spacelike_support", "einstein_causality"] {
            assert_eq!(r.checks.iter().find(|c| c.check_id == id).unwrap().residual, 0.0);
        }
    }

    #[test]
    fn parallel_matches_serial() {
        let v = small(&["timeslice", "associativity"]).validate().unwrap();
        assert_eq!(run(&v, 0, false).unwrap().to_json(), run(&v, 2, false).unwrap().to_json());
    }
}
