//! CSV, JSON and markdown artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use loggas_core::ExperimentReport;
use serde::Serialize;

/// Scientific notation with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn report_csv(report: &ExperimentReport) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "experiment",
        "label",
        "predicted",
        "estimated",
        "stderr",
        "z_score",
        "lower",
        "upper",
        "gated",
        "pass",
    ])?;
    for r in &report.rows {
        w.write_record([
            report.name.clone(),
            r.label.clone(),
            fmt_opt(r.predicted),
            fmt_f64(r.estimated),
            fmt_opt(r.stderr),
            fmt_opt(r.z_score),
            fmt_opt(r.lower),
            fmt_opt(r.upper),
            r.gated.to_string(),
            r.pass.to_string(),
        ])?;
    }
    Ok(w.into_inner()?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Writes `{name}.csv` and `{name}.json` under `out`.
pub fn write_report(out: &Path, report: &ExperimentReport) -> anyhow::Result<()> {
    fs::create_dir_all(out)?;
    let csv_path = out.join(format!("{}.csv", report.name));
    fs::write(&csv_path, report_csv(report)?)
        .with_context(|| format!("writing {}", csv_path.display()))?;
    write_json(&out.join(format!("{}.json", report.name)), report)
}

fn read_reports(dir: &Path) -> anyhow::Result<Vec<ExperimentReport>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut out = Vec::new();
    for p in paths {
        let text = fs::read_to_string(&p)?;
        // Other JSON artifacts (equilibrium, oracle) live alongside reports.
        if let Ok(r) = serde_json::from_str::<ExperimentReport>(&text) {
            out.push(r);
        }
    }
    Ok(out)
}

fn cell(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.6}")).unwrap_or_else(|| "".into())
}

/// Markdown summary of every report in `dir`, and whether all passed.
pub fn summarize(dir: &Path) -> anyhow::Result<(String, bool)> {
    let reports = read_reports(dir)?;
    if reports.is_empty() {
        bail!("no experiment outputs in {}", dir.display());
    }
    let mut md = String::from("# loggas report\n\n");
    let all = reports.iter().all(ExperimentReport::passed);
    md.push_str(&format!(
        "Overall: **{}**\n\n",
        if all { "PASS" } else { "FAIL" }
    ));
    for r in &reports {
        md.push_str(&format!(
            "## {} ({})\n\n",
            r.name,
            if r.passed() { "PASS" } else { "FAIL" }
        ));
        md.push_str(&format!("Claim: {}\n\n", r.claim));
        md.push_str("| row | predicted | estimated | stderr | window | verdict |\n|---|---|---|---|---|---|\n");
        for row in &r.rows {
            let window = match (row.lower, row.upper) {
                (None, None) => String::new(),
                (l, u) => format!("[{}, {}]", cell(l), cell(u)),
            };
            let verdict = match (row.gated, row.pass) {
                (false, _) => "info",
                (true, true) => "PASS",
                (true, false) => "FAIL",
            };
            md.push_str(&format!(
                "| {} | {} | {:.6} | {} | {} | {} |\n",
                row.label,
                cell(row.predicted),
                row.estimated,
                cell(row.stderr),
                window,
                verdict
            ));
        }
        for note in &r.notes {
            md.push_str(&format!("\n> {note}\n"));
        }
        md.push('\n');
    }
    Ok((md, all))
}

#[cfg(test)]
mod tests {
    use super::*;
    use loggas_core::Row;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(-2.0), "-2.0000000000000000e0");
        let x = 1.0 / 3.0;
        assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn csv_quotes_labels() {
        let report = ExperimentReport {
            name: "t".into(),
            claim: "c".into(),
            config: serde_json::json!({}),
            rows: vec![Row::info("E=0,1 cov", None, 1.5, None)],
            notes: vec![],
        };
        let text = String::from_utf8(report_csv(&report).unwrap()).unwrap();
        assert!(text.contains("\"E=0,1 cov\""), "{text}");
        assert_eq!(text.lines().count(), 2);
    }
}
