//! File formats: bundle JSON, series CSV, batch summary CSV.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use stickyflow::asymptotics::SeriesPoint;

use crate::run::{ResultBundle, Status};

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().context("output path has no file name")?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    let mut f = std::fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
    f.write_all(contents)?;
    f.sync_all()?;
    drop(f);
    std::fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn series_csv(series: &[SeriesPoint]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "e", "theta", "metric_derivative", "energy", "n_clusters"])?;
    for p in series {
        w.write_record([
            sci(p.t),
            p.e.map(sci).unwrap_or_default(),
            sci(p.theta),
            sci(p.metric_derivative),
            sci(p.energy),
            p.n_clusters.to_string(),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub name: String,
    pub file: String,
    pub arithmetic: String,
    /// `pass`, `fail` or `error`.
    pub status: String,
    pub atoms: String,
    pub events: String,
    pub long_time: String,
    pub checks_passed: String,
    pub checks_failed: String,
    pub checks_flagged: String,
    pub checks_skipped: String,
    pub failing: String,
    pub error: String,
}

impl SummaryRow {
    pub fn from_bundle(b: &ResultBundle) -> Self {
        Self {
            name: b.name.clone(),
            file: b.source_file.clone().unwrap_or_default(),
            arithmetic: b.arithmetic.to_string(),
            status: if b.passed { "pass" } else { "fail" }.into(),
            atoms: b.summary.atoms.to_string(),
            events: b.summary.events.to_string(),
            long_time: serde_json::to_value(b.summary.long_time)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default(),
            checks_passed: b.count(Status::Pass).to_string(),
            checks_failed: b.count(Status::Fail).to_string(),
            checks_flagged: b.count(Status::Flagged).to_string(),
            checks_skipped: b.count(Status::Skipped).to_string(),
            failing: b.failing_checks().join(";"),
            error: String::new(),
        }
    }

    pub fn from_error(name: &str, file: &str, message: &str) -> Self {
        Self {
            name: name.into(),
            file: file.into(),
            status: "error".into(),
            error: message.replace('\n', " "),
            ..Self::blank()
        }
    }

    fn blank() -> Self {
        Self {
            name: String::new(),
            file: String::new(),
            arithmetic: String::new(),
            status: String::new(),
            atoms: String::new(),
            events: String::new(),
            long_time: String::new(),
            checks_passed: String::new(),
            checks_failed: String::new(),
            checks_flagged: String::new(),
            checks_skipped: String::new(),
            failing: String::new(),
            error: String::new(),
        }
    }
}

/// Rows sorted by name, then file.
pub fn summary_csv(rows: &mut [SummaryRow]) -> Result<String> {
    rows.sort_by(|a, b| (&a.name, &a.file).cmp(&(&b.name, &b.file)));
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        // serialize() writes the header with the first row only
        w.write_record(SUMMARY_HEADER)?;
    }
    for r in rows.iter() {
        w.serialize(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

const SUMMARY_HEADER: [&str; 13] = [
    "name",
    "file",
    "arithmetic",
    "status",
    "atoms",
    "events",
    "long_time",
    "checks_passed",
    "checks_failed",
    "checks_flagged",
    "checks_skipped",
    "failing",
    "error",
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_uses_seventeen_digits() {
        let csv = series_csv(&[SeriesPoint {
            t: 0.1,
            e: None,
            theta: -0.25,
            metric_derivative: 1.0,
            energy: 0.5,
            n_clusters: 2,
        }])
        .unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,e,theta,metric_derivative,energy,n_clusters"));
        assert_eq!(
            lines.next(),
            Some("1.0000000000000001e-1,,-2.5000000000000000e-1,1.0000000000000000e0,5.0000000000000000e-1,2")
        );
    }

    #[test]
    fn empty_summary_has_a_header() {
        let csv = summary_csv(&mut []).unwrap();
        assert_eq!(csv.trim_end(), SUMMARY_HEADER.join(","));
    }

    #[test]
    fn serialized_header_matches() {
        let mut rows = vec![SummaryRow::from_error("b", "b.json", "bad"), SummaryRow::from_error("a", "a.json", "bad")];
        let csv = summary_csv(&mut rows).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), SUMMARY_HEADER.join(","));
        assert!(lines.next().unwrap().starts_with("a,a.json"));
    }
}
