//! CSV quality reports and the JSON run manifest.
//!
//! CSV columns, in order:
//!
//! | column | meaning |
//! |---|---|
//! | `method` | `fbp`, `dint`, `fbp-corrected`, `dint-corrected`, ... |
//! | `views` | projection angles of the scan |
//! | `iterations` | usable correction iterations (0 for analytic results) |
//! | `rmse` | against the phantom, 6 decimals |
//! | `psnr_db` | peak = phantom maximum, 4 decimals, `inf` for identical images |
//! | `max_abs_error` | 6 decimals |
//! | `relative_sinogram_residual` | `‖A μ − S‖ / ‖S‖`, 6 decimals |
//!
//! Wall times are not in the CSV so that reruns reproduce it byte for byte;
//! they go into the manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Duration;

use serde::Serialize;
use sparsect_core::metrics::QualityReport;
use sparsect_core::randomized::RunReport;

use crate::config::RunConfig;
use crate::error::{Error, Result};

pub const CSV_COLUMNS: [&str; 7] = [
    "method",
    "views",
    "iterations",
    "rmse",
    "psnr_db",
    "max_abs_error",
    "relative_sinogram_residual",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub method: String,
    pub views: usize,
    pub iterations: usize,
    pub quality: QualityReport,
}

fn fixed(v: f64, decimals: usize) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_owned()
    } else {
        format!("{v:.decimals$}")
    }
}

pub fn to_csv(rows: &[ReportRow]) -> String {
    let mut out = CSV_COLUMNS.join(",");
    out.push('\n');
    for r in rows {
        let q = &r.quality;
        out += &format!(
            "{},{},{},{},{},{},{}\n",
            r.method,
            r.views,
            r.iterations,
            fixed(q.rmse, 6),
            fixed(q.psnr_db, 4),
            fixed(q.max_abs_error, 6),
            fixed(q.relative_sinogram_residual, 6),
        );
    }
    out
}

pub fn write_csv(rows: &[ReportRow], path: &Path) -> Result<()> {
    fs::write(path, to_csv(rows)).map_err(|e| Error::io(path, e))
}

/// Reads back a report written by [`write_csv`].
pub fn parse_csv(text: &str, path: &Path) -> Result<Vec<ReportRow>> {
    let mut lines = text.lines().enumerate();
    let header = lines.next().map(|(_, h)| h).unwrap_or("");
    let bad = |line: usize, message: String| Error::Format {
        path: path.to_path_buf(),
        line,
        token: None,
        message,
    };
    if header != CSV_COLUMNS.join(",") {
        return Err(bad(1, "unexpected header".into()));
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != CSV_COLUMNS.len() {
            return Err(bad(i + 1, format!("expected {} fields", CSV_COLUMNS.len())));
        }
        let num = |k: usize| -> Result<f64> {
            fields[k]
                .parse()
                .map_err(|_| bad(i + 1, format!("bad {} value {:?}", CSV_COLUMNS[k], fields[k])))
        };
        rows.push(ReportRow {
            method: fields[0].to_owned(),
            views: num(1)? as usize,
            iterations: num(2)? as usize,
            quality: QualityReport {
                rmse: num(3)?,
                psnr_db: num(4)?,
                max_abs_error: num(5)?,
                relative_sinogram_residual: num(6)?,
            },
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArtifactKind {
    Phantom,
    Sinogram,
    Image,
    Pairs,
    Report,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Artifact {
    pub kind: ArtifactKind,
    pub name: String,
    /// Paths relative to the output directory.
    pub files: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub views: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualPoint {
    pub iteration: usize,
    pub residual: f64,
}

/// Correction run statistics as recorded in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub name: String,
    pub pool_pairs: usize,
    pub usable_iterations: usize,
    pub updated: usize,
    pub consistent: usize,
    pub rejected_case_b: usize,
    pub skipped_zero_integral: usize,
    pub sign_violations: usize,
    pub draws: usize,
    pub stopped_early: bool,
    pub initial_scale_factor: Option<f64>,
    pub loop_seconds: Option<f64>,
    pub residual_trace: Vec<ResidualPoint>,
}

impl RunSummary {
    pub fn new(name: impl Into<String>, pool_pairs: usize, r: &RunReport) -> Self {
        Self {
            name: name.into(),
            pool_pairs,
            usable_iterations: r.usable_iterations,
            updated: r.updated,
            consistent: r.consistent,
            rejected_case_b: r.rejected_case_b,
            skipped_zero_integral: r.skipped_zero_integral,
            sign_violations: r.sign_violations,
            draws: r.draws,
            stopped_early: r.stopped_early,
            initial_scale_factor: r.initial_scale_factor,
            loop_seconds: r.elapsed.map(|d| d.as_secs_f64()),
            residual_trace: r
                .residual_trace
                .iter()
                .map(|s| ResidualPoint {
                    iteration: s.iteration,
                    residual: s.residual,
                })
                .collect(),
        }
    }
}

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: RunConfig,
    pub artifacts: Vec<Artifact>,
    pub runs: Vec<RunSummary>,
    /// Wall time per stage, seconds.
    pub timings: BTreeMap<String, f64>,
}

impl Manifest {
    pub fn new(command: impl Into<String>, config: &RunConfig) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            command: command.into(),
            config: config.clone(),
            artifacts: Vec::new(),
            runs: Vec::new(),
            timings: BTreeMap::new(),
        }
    }

    pub fn time(&mut self, stage: impl Into<String>, elapsed: Duration) {
        self.timings.insert(stage.into(), elapsed.as_secs_f64());
    }

    pub fn artifacts_of(&self, kind: ArtifactKind) -> impl Iterator<Item = &Artifact> {
        self.artifacts.iter().filter(move |a| a.kind == kind)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Config(format!("manifest serialisation: {e}")))?;
        fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }
}
