use std::fs;
use std::path::Path;

use f2s_core::evaluation::EvaluationReport;
use f2s_core::{F2sError, Result};

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| F2sError::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| F2sError::io(path, e))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &(serde_json::to_string_pretty(value).expect("serializable") + "\n"))
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "unavailable".to_string(), |x| x.to_string())
}

/// Writes `report.json` and `report.csv` into `out` and prints the same
/// numbers. Values are printed in full so they match the files exactly.
pub fn emit_run_summary(report: &EvaluationReport, out: &Path) -> Result<()> {
    write_text(&out.join("report.json"), &report.to_json())?;
    write_text(&out.join("report.csv"), &report.to_csv())?;
    println!("samples: {}", report.samples);
    println!("overall srcc: {}", cell(report.overall_srcc));
    println!("overall mse: {}", report.overall_mse);
    println!("{:<16} {:<24} {:<24} mean_contribution", "attribute", "srcc", "mse");
    for a in report.attributes.iter().chain(&report.extra) {
        println!("{:<16} {:<24} {:<24} {}", a.name, cell(a.srcc), cell(a.mse), a.mean_contribution);
    }
    println!("wrote {}", out.join("report.json").display());
    Ok(())
}
