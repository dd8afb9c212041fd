//! Scenario runner for `condex`: JSON scenarios in; curve CSV, SVG figures
//! and a JSON summary out; plus the acceptance suite behind `condex verify`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod csv_out;
pub mod error;
pub mod runner;
pub mod scenarios;
pub mod svg;
pub mod verify;

use std::fs;
use std::path::{Path, PathBuf};

pub use config::{Scenario, ScenarioConfig, SolverKind};
pub use error::{CliError, CliResult};
pub use runner::{run_scenario, CurveData, Report};

/// Write `<name>.<curve>.csv` per curve, `<name>.svg` and
/// `<name>.summary.json` into `dir`.
pub fn write_outputs(report: &Report, dir: &Path) -> CliResult<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut written = Vec::new();
    let mut put = |file: String, body: String| -> CliResult<()> {
        let path = dir.join(file);
        fs::write(&path, body).map_err(|e| CliError::io(&path, e))?;
        written.push(path);
        Ok(())
    };
    for c in &report.curves {
        put(format!("{}.{}.csv", report.name, c.label), csv_out::write_csv(c, &report.hash))?;
    }
    put(format!("{}.svg", report.name), svg::emit_figure(report.manifold, &report.curves, &report.orbits, &report.name)?)?;
    let mut summary = serde_json::to_string_pretty(&report.summary).expect("summary serializes");
    summary.push('\n');
    put(format!("{}.summary.json", report.name), summary)?;
    Ok(written)
}
