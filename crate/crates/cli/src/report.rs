//! Check records, the run report, and its JSON and CSV renderings.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::config::RunConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub suite: String,
    pub check_id: String,
    /// The relation the check exercises.
    pub anchor: String,
    pub residual: f64,
    pub tolerance: f64,
    pub status: Status,
    /// Wall time, or zero unless timings were requested.
    pub seconds: f64,
}

impl CheckRecord {
    pub fn is_pass(&self) -> bool {
        self.status == Status::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Calibration {
    /// Prefactor of one `W` contraction in the star product.
    pub kappa: f64,
    /// Prefactor of one `Δ_F` contraction in time ordering.
    pub kappa_t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub config: RunConfig,
    pub calibration: Calibration,
    pub checks: Vec<CheckRecord>,
    pub status: Status,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown format {other:?}, expected json or csv")),
        }
    }
}

impl Report {
    pub fn new(config: RunConfig, calibration: Calibration, checks: Vec<CheckRecord>) -> Self {
        let status = if checks.iter().all(|c| c.status == Status::Pass) { Status::Pass } else { Status::Fail };
        Report { schema_version: SCHEMA_VERSION, config, calibration, checks, status }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["suite", "check_id", "residual", "tolerance", "status", "seconds"]).expect("in-memory write");
        for c in &self.checks {
            let status = match c.status {
                Status::Pass => "pass",
                Status::Fail => "fail",
            };
            w.write_record([
                c.suite.as_str(),
                c.check_id.as_str(),
                &format!("{:e}", c.residual),
                &format!("{:e}", c.tolerance),
                status,
                &format!("{}", c.seconds),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
        }
    }

    pub fn emit(&self, format: Format, path: &Path) -> std::io::Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.render(format).as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str, residual: f64, tolerance: f64) -> CheckRecord {
        CheckRecord {
            suite: "demo".into(),
            check_id: id.into(),
            anchor: "demo".into(),
            residual,
            tolerance,
            status: if residual <= tolerance { Status::Pass } else { Status::Fail },
            seconds: 0.0,
        }
    }

    fn calibration() -> Calibration {
        Calibration { kappa: 1.0, kappa_t: 1.0 }
    }

    #[test]
    fn empty_report_passes() {
        let r = Report::new(RunConfig::reference(), calibration(), Vec::new());
        assert!(r.passed());
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["checks"].as_array().unwrap().len(), 0);
        assert_eq!(v["schema_version"], 1);
    }

    #[test]
    fn csv_has_one_row_per_check() {
        let r = Report::new(RunConfig::reference(), calibration(), vec![record("a", 0.0, 0.0), record("b", 1.0, 0.5)]);
        assert!(!r.passed());
        assert_eq!(r.to_csv().lines().count(), 1 + 2);
    }
}
