//! Verification report and its JSON and CSV writers.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::exponents::ExponentChain;
use crate::multiplier::assemble::LevelInfo;
use crate::multiplier::particular::ParticularReport;
use crate::multiplier::{GammaSchedule, InequalityCertificate};
use crate::spectral::{CommutatorReport, EstimateMeasurement};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskState {
    Ok,
    Failed,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub message: String,
    pub exit_code: i32,
}

impl From<&Error> for ErrorRecord {
    fn from(e: &Error) -> Self {
        Self {
            kind: e.kind().into(),
            message: e.to_string(),
            exit_code: e.exit_code(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskStatus {
    pub state: TaskState,
    /// True when the task ran only because a requested task depends on it.
    pub implied: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KalmanSection {
    pub rank_ok: bool,
    pub r: Option<usize>,
    pub c0_estimate: Option<f64>,
    pub gram_min_eigenvalue: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BuildSection {
    pub r: usize,
    pub description: String,
    /// Normalized component weights of `g`.
    pub weights: BTreeMap<String, f64>,
    pub levels: Vec<LevelInfo>,
    pub basic_case_radius: Option<f64>,
    pub particular_gamma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralSection {
    pub convention: String,
    pub commutator: Option<CommutatorReport>,
    pub estimates: Vec<EstimateMeasurement>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub config_echo: RunConfig,
    pub tool_version: String,
    pub tasks: BTreeMap<String, TaskStatus>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kalman: Option<KalmanSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exponent_chain: Option<ExponentChain>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub build: Option<BuildSection>,
    pub certificates: Vec<InequalityCertificate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_schedule: Option<GammaSchedule>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub particular: Option<ParticularReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectral: Option<SpectralSection>,
    /// Seconds per task.
    pub wall_times: BTreeMap<String, f64>,
}

impl VerificationReport {
    pub fn new(config: RunConfig) -> Self {
        Self {
            config_echo: config,
            tool_version: TOOL_VERSION.into(),
            tasks: BTreeMap::new(),
            kalman: None,
            exponent_chain: None,
            build: None,
            certificates: Vec::new(),
            gamma_schedule: None,
            particular: None,
            spectral: None,
            wall_times: BTreeMap::new(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// JSON with `wall_times` and `tool_version` removed, for reproducibility checks.
    pub fn reproducible_json(&self) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        if let Some(o) = v.as_object_mut() {
            o.remove("wall_times");
            o.remove("tool_version");
        }
        Ok(serde_json::to_string_pretty(&v)?)
    }

    /// First failure in task order.
    pub fn first_error(&self) -> Option<&ErrorRecord> {
        crate::config::Task::ALL
            .iter()
            .filter_map(|t| self.tasks.get(t.name()))
            .find_map(|s| s.error.as_ref())
    }

    pub fn exit_code(&self) -> i32 {
        self.first_error().map_or(0, |e| e.exit_code)
    }
}

/// Recovers the configuration echoed in a report.
pub fn config_from_report(json: &str) -> Result<RunConfig> {
    let v: serde_json::Value = serde_json::from_str(json)?;
    let echo = v
        .get("config_echo")
        .ok_or_else(|| Error::Config("report has no config_echo".into()))?;
    let cfg: RunConfig = serde_json::from_value(echo.clone())?;
    cfg.validate()?;
    Ok(cfg)
}

fn safe_name(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' })
        .collect()
}

/// Writes `report.json` and the CSV dumps into `dir`; returns the written paths.
pub fn write_outputs(dir: &Path, report: &VerificationReport) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let path = dir.join(REPORT_FILE);
    std::fs::write(&path, report.to_json()? + "\n")?;
    written.push(path);
    let mut certs: Vec<&InequalityCertificate> = report.certificates.iter().collect();
    if let Some(p) = &report.particular {
        certs.extend(p.certificates.iter());
    }
    for cert in certs {
        written.push(write_certificate_csv(dir, cert)?);
    }
    if let Some(s) = &report.spectral {
        if let Some(c) = &s.commutator {
            written.push(write_commutator_csv(dir, c)?);
        }
        for m in &s.estimates {
            written.push(write_estimate_csv(dir, m)?);
        }
    }
    Ok(written)
}

/// Worst grid rows of a certificate: `xi_*`, `lhs`, `rhs`, `ratio`.
pub fn write_certificate_csv(dir: &Path, cert: &InequalityCertificate) -> Result<PathBuf> {
    let path = dir.join(format!("cert_{}.csv", safe_name(&cert.name)));
    let mut w = csv::Writer::from_path(&path)?;
    let dim = cert.worst_rows.first().map_or(cert.worst_point.len(), |r| r.xi.len());
    let mut header: Vec<String> = (0..dim).map(|i| format!("xi_{i}")).collect();
    header.extend(["lhs", "rhs", "ratio"].map(String::from));
    w.write_record(&header)?;
    for row in &cert.worst_rows {
        let mut rec: Vec<String> = row.xi.iter().map(|x| format!("{x:e}")).collect();
        rec.extend([row.lhs, row.rhs, row.ratio].map(|x| format!("{x:e}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(path)
}

pub fn write_estimate_csv(dir: &Path, m: &EstimateMeasurement) -> Result<PathBuf> {
    let path = dir.join(format!("estimate_{}.csv", m.which.name()));
    let mut w = csv::Writer::from_path(&path)?;
    let names: Vec<String> = m.samples.first().map_or(Vec::new(), |s| s.rhs_terms.keys().cloned().collect());
    let mut header = vec!["member".to_string(), "lhs_norm".to_string()];
    header.extend(names.iter().cloned());
    header.push("ratio".into());
    w.write_record(&header)?;
    for s in &m.samples {
        let mut rec = vec![s.member.to_string(), format!("{:e}", s.lhs_norm)];
        rec.extend(names.iter().map(|n| format!("{:e}", s.rhs_terms[n])));
        rec.push(format!("{:e}", s.ratio));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(path)
}

pub fn write_commutator_csv(dir: &Path, c: &CommutatorReport) -> Result<PathBuf> {
    let path = dir.join("commutator.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["member", "lhs", "rhs", "relative_error", "time_part", "tail"])?;
    for s in &c.samples {
        w.write_record([
            s.member.to_string(),
            format!("{:e}", s.lhs),
            format!("{:e}", s.rhs),
            format!("{:e}", s.relative_error),
            s.time_part.map_or(String::new(), |t| format!("{t:e}")),
            format!("{:e}", s.tail),
        ])?;
    }
    w.flush()?;
    Ok(path)
}
