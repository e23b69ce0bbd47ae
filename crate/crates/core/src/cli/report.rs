//! CSV and JSON output.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::stability::ScanRecord;

use super::convergence::ConvergenceReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(Error::InvalidParameter(format!(
                "unknown format '{s}'; available: csv, json"
            ))),
        }
    }
}

impl ReportFormat {
    /// From a file extension, defaulting to CSV.
    pub fn for_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => ReportFormat::Json,
            _ => ReportFormat::Csv,
        }
    }
}

/// 17 significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn report_csv(report: &ConvergenceReport) -> String {
    let mut out = String::from("h,error,pairwise_order\n");
    for (k, level) in report.levels.iter().enumerate() {
        let order = if k == 0 {
            String::new()
        } else {
            fmt_num(report.pairwise_orders[k - 1])
        };
        let _ = writeln!(
            out,
            "{},{},{}",
            fmt_num(level.h),
            fmt_num(level.error),
            order
        );
    }
    out
}

pub fn report_json(report: &ConvergenceReport) -> Result<String> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    Ok(text)
}

/// Writes `report` to `path` as CSV (`h,error,pairwise_order`) or JSON.
pub fn emit_report(report: &ConvergenceReport, format: ReportFormat, path: &Path) -> Result<()> {
    let text = match format {
        ReportFormat::Csv => report_csv(report),
        ReportFormat::Json => report_json(report)?,
    };
    write_text(path, &text)
}

pub fn scan_csv(records: &[ScanRecord]) -> String {
    let mut out = String::with_capacity(80 * (records.len() + 1));
    out.push_str("re,im,rho,stable\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_num(r.w.re),
            fmt_num(r.w.im),
            fmt_num(r.rho),
            u8::from(r.stable)
        );
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
