use std::fs;
use std::path::Path;

use vsql::analysis::{
    bp_variance_scan, check_variance_scan, landscape_csv, landscape_slice, variance_csv, verify_corollary1,
    verify_theorem3, Report,
};

use crate::config::{read_json, BpScanRun, Corollary1Run, LandscapeRun, Theorem3Run};
use crate::CliError;

fn load<C: Default + serde::de::DeserializeOwned>(config: Option<&Path>) -> Result<C, CliError> {
    Ok(config.map(read_json).transpose()?.unwrap_or_default())
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))
}

/// Prints the report, saves it if asked, and fails with the first bad value.
fn finish(report: &Report, out: Option<&Path>) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(report).map_err(|e| CliError::runtime(e.to_string()))?;
    println!("{text}");
    if let Some(p) = out {
        write(p, &text)?;
    }
    match report.failures().next() {
        None => Ok(()),
        Some(c) => Err(CliError::runtime(format!(
            "{} failed: {} = {} (bound {})",
            report.verifier, c.name, c.value, c.bound
        ))),
    }
}

fn grid(points: usize, hi: f64) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..points).map(|k| hi * k as f64 / (points - 1) as f64).collect(),
    }
}

pub fn theorem3(config: Option<&Path>) -> Result<(), CliError> {
    let run: Theorem3Run = load(config)?;
    let report = verify_theorem3(&grid(run.theta_points, std::f64::consts::TAU), &grid(run.uv_points, 1.0))?;
    finish(&report, run.report_out.as_deref())
}

pub fn corollary1(config: Option<&Path>) -> Result<(), CliError> {
    let run: Corollary1Run = load(config)?;
    finish(&verify_corollary1()?, run.report_out.as_deref())
}

pub fn bp_scan(config: Option<&Path>) -> Result<(), CliError> {
    let run: BpScanRun = load(config)?;
    let scan = bp_variance_scan::<f64>(&run.n_list, &run.n_qsc_list, run.trials, run.seed)?;
    let csv = variance_csv(&scan);
    match &run.csv_out {
        Some(p) => write(p, &csv)?,
        None => eprint!("{csv}"),
    }
    finish(&check_variance_scan(&scan), run.report_out.as_deref())
}

pub fn landscape(config: Option<&Path>) -> Result<(), CliError> {
    let run: LandscapeRun = load(config)?;
    let slice = landscape_slice::<f64>(run.n, run.n_qsc, run.grid_size, run.seed)?;
    match &run.csv_out {
        Some(p) => write(p, &landscape_csv(&slice))?,
        None => eprint!("{}", landscape_csv(&slice)),
    }
    let mut report = Report::new("landscape");
    let expected = run.grid_size * run.grid_size;
    report.push("grid points", slice.points.len() == expected, slice.points.len() as f64, format!("= {expected}"));
    let bad = slice.points.iter().filter(|p| !p.2.is_finite() || !(0.0..=0.5).contains(&p.2)).count();
    report.push("losses outside [0, 0.5]", bad == 0, bad as f64, "= 0");
    report.push("loss range", true, slice.loss_range(), "reported");
    finish(&report, run.report_out.as_deref())
}
