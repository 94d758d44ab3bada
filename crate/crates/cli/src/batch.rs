//! Directory runs and summaries.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;

use crate::output::{series_csv, summary_csv, to_json, write_atomic, SummaryRow};
use crate::run::{run, ResultBundle, RunOptions};
use crate::scenario::{load_scenario, Scenario};

pub const BUNDLE_SUFFIX: &str = ".bundle.json";
pub const SUMMARY_FILE: &str = "summary.csv";

#[derive(Debug)]
pub struct BatchOutcome {
    pub rows: Vec<SummaryRow>,
    pub summary: String,
    pub failed: usize,
    pub errors: usize,
}

fn sorted_files(dir: &Path, keep: impl Fn(&str) -> bool) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        if path.is_file() && keep(&name) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn is_scenario_file(name: &str) -> bool {
    name.ends_with(".json") && !name.ends_with(BUNDLE_SUFFIX) && !name.starts_with('.')
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Writes `<stem>.bundle.json` and `<stem>.csv` into `dir`.
pub fn write_bundle(dir: &Path, stem: &str, bundle: &ResultBundle) -> Result<()> {
    write_atomic(&dir.join(format!("{stem}{BUNDLE_SUFFIX}")), to_json(bundle)?.as_bytes())?;
    write_atomic(&dir.join(format!("{stem}.csv")), series_csv(&bundle.series)?.as_bytes())
}

/// Runs every scenario file in `dir` (not recursive) on `jobs` threads.
///
/// Bundles go next to their inputs; the summary goes to `out` (default `dir`).
/// A scenario that cannot be loaded or run gets an error row and does not
/// stop the others.
pub fn batch(dir: &Path, out: Option<&Path>, opts: &RunOptions, jobs: Option<usize>) -> Result<BatchOutcome> {
    let files = sorted_files(dir, is_scenario_file)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder.build()?;

    let loaded: Vec<(PathBuf, Result<Scenario, String>)> = pool.install(|| {
        files
            .par_iter()
            .map(|p| (p.clone(), load_scenario(p).map_err(|e| e.to_string())))
            .collect()
    });

    let mut by_name: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (path, s) in &loaded {
        if let Ok(s) = s {
            by_name.entry(s.name.clone()).or_default().push(file_name(path));
        }
    }

    let rows: Vec<SummaryRow> = pool.install(|| {
        loaded
            .into_par_iter()
            .map(|(path, scenario)| {
                let file = file_name(&path);
                let scenario = match scenario {
                    Ok(s) => s,
                    Err(e) => return SummaryRow::from_error(&stem(&path), &file, &e),
                };
                let users = &by_name[&scenario.name];
                if users.len() > 1 {
                    let message = format!("{file}: name \"{}\" is used by {}", scenario.name, users.join(", "));
                    return SummaryRow::from_error(&scenario.name, &file, &message);
                }
                match run(&scenario, opts) {
                    Ok(mut bundle) => {
                        bundle.source_file = Some(file.clone());
                        let parent = path.parent().unwrap_or(Path::new("."));
                        match write_bundle(parent, &stem(&path), &bundle) {
                            Ok(()) => SummaryRow::from_bundle(&bundle),
                            Err(e) => SummaryRow::from_error(&scenario.name, &file, &format!("{e:#}")),
                        }
                    }
                    Err(e) => SummaryRow::from_error(&scenario.name, &file, &e.to_string()),
                }
            })
            .collect()
    });

    finish(rows, out.unwrap_or(dir))
}

/// Rebuilds the summary from the bundles found in `dir`.
pub fn summarize(dir: &Path, out: Option<&Path>) -> Result<BatchOutcome> {
    let mut rows = Vec::new();
    for path in sorted_files(dir, |n| n.ends_with(BUNDLE_SUFFIX))? {
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let bundle: ResultBundle =
            serde_json::from_str(&text).with_context(|| format!("{}: not a result bundle", path.display()))?;
        rows.push(SummaryRow::from_bundle(&bundle));
    }
    finish(rows, out.unwrap_or(dir))
}

fn finish(mut rows: Vec<SummaryRow>, out: &Path) -> Result<BatchOutcome> {
    let summary = summary_csv(&mut rows)?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_atomic(&out.join(SUMMARY_FILE), summary.as_bytes())?;
    Ok(BatchOutcome {
        failed: rows.iter().filter(|r| r.status == "fail").count(),
        errors: rows.iter().filter(|r| r.status == "error").count(),
        rows,
        summary,
    })
}
