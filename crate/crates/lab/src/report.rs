//! Report emission: CSV, a JSON mirror, and a plain-text summary table.

use crate::config::Format;
use crate::sweep::{Row, SweepReport};
use crate::LabError;
use std::path::{Path, PathBuf};

pub const CSV_HEADER: [&str; 17] = [
    "kind",
    "p",
    "epsilon",
    "alpha",
    "beta",
    "gamma",
    "q",
    "r",
    "k",
    "alpha_tilde",
    "h",
    "value",
    "masked_fraction",
    "refinement_ratio",
    "verdict",
    "admissible",
    "solver_converged",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

fn record(row: &Row) -> Vec<String> {
    vec![
        row.kind.clone(),
        opt(row.p),
        opt(row.epsilon),
        opt(row.alpha),
        opt(row.beta),
        opt(row.gamma),
        opt(row.q),
        opt(row.r),
        opt(row.k),
        opt(row.alpha_tilde),
        format!("{}", row.h),
        format!("{}", row.value),
        format!("{}", row.masked_fraction),
        opt(row.refinement_ratio),
        row.verdict.clone(),
        row.admissible.clone(),
        row.solver_converged.to_string(),
    ]
}

pub fn to_csv_string(report: &SweepReport) -> Result<String, LabError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for row in &report.rows {
        w.write_record(record(row))?;
    }
    let bytes = w.into_inner().map_err(|e| LabError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is ascii"))
}

pub fn to_json_string(report: &SweepReport) -> String {
    serde_json::to_string_pretty(&report.rows).expect("rows serialize")
}

/// Plain-text summary grouped by functional kind.
pub fn summary_text(report: &SweepReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<28} {:>8} {:>8} {:>14} {:>13} {:<13} {}\n",
        "kind", "p", "h", "value", "masked", "verdict", "admissible"
    ));
    for row in &report.rows {
        out.push_str(&format!(
            "{:<28} {:>8} {:>8.5} {:>14.6e} {:>13.3} {:<13} {}\n",
            row.kind,
            opt(row.p),
            row.h,
            row.value,
            row.masked_fraction,
            row.verdict,
            row.admissible
        ));
    }
    out
}

/// Writes `sweep.csv` / `sweep.json` per the format list, plus `sweep.txt`;
/// returns the written paths.
pub fn write_all(
    report: &SweepReport,
    out_dir: &Path,
    formats: &[Format],
    stem: &str,
) -> Result<Vec<PathBuf>, LabError> {
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    if formats.contains(&Format::Csv) {
        let path = out_dir.join(format!("{stem}.csv"));
        std::fs::write(&path, to_csv_string(report)?)?;
        written.push(path);
    }
    if formats.contains(&Format::Json) {
        let path = out_dir.join(format!("{stem}.json"));
        std::fs::write(&path, to_json_string(report))?;
        written.push(path);
    }
    let path = out_dir.join(format!("{stem}.txt"));
    std::fs::write(&path, summary_text(report))?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config;
    use crate::sweep;

    fn small_report() -> SweepReport {
        let text = "
benchmark.kind = radial
sweep.p = 1.5
sweep.h = 1/16, 1/32, 1/64
sweep.alpha = 2.0
sweep.gamma = 1.0
window.r0 = 0.1
window.r1 = 0.4
functional.0.kind = third_order
functional.0.epsilon = 0.0
";
        sweep::run(&config::parse(text).unwrap()).unwrap()
    }

    #[test]
    fn csv_has_header_and_rows() {
        let report = small_report();
        let csv = to_csv_string(&report).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 1 + report.rows.len());
        assert!(lines[0].starts_with("kind,p,epsilon,alpha,beta,gamma,q,r,k,alpha_tilde,h,value"));
    }

    #[test]
    fn verdict_values_restricted() {
        let report = small_report();
        for row in &report.rows {
            assert!(["bounded", "divergent", "inconclusive"].contains(&row.verdict.as_str()));
        }
    }

    #[test]
    fn json_and_csv_row_counts_match() {
        let report = small_report();
        let json: serde_json::Value = serde_json::from_str(&to_json_string(&report)).unwrap();
        assert_eq!(json.as_array().unwrap().len(), report.rows.len());
        let csv = to_csv_string(&report).unwrap();
        assert_eq!(csv.lines().count() - 1, report.rows.len());
        // spot-check one value survives the round trip
        let v0 = json[0]["value"].as_f64().unwrap();
        assert_eq!(v0, report.rows[0].value);
    }

    #[test]
    fn files_written() {
        let report = small_report();
        let dir = tempfile::tempdir().unwrap();
        let paths =
            write_all(&report, dir.path(), &[Format::Csv, Format::Json], "sweep").unwrap();
        assert_eq!(paths.len(), 3);
        for p in paths {
            assert!(p.exists());
        }
    }
}
