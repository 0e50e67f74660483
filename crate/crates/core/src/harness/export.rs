use std::path::Path;

use super::{ExperimentReport, ReportFormat};
use crate::error::{Error, Result};

/// Pretty JSON with a trailing newline.
pub fn report_to_json<T: serde::Serialize>(report: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report).map_err(|e| Error::Internal(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// One row per seed. An empty ensemble gives the header alone; the number
/// of `x0_*` columns follows the configured system.
pub fn report_to_csv(report: &ExperimentReport) -> Result<String> {
    let dim = report.config.system().dim();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["seed_index".to_string()];
    header.extend((0..dim).map(|i| format!("x0_{i}")));
    header.extend(
        ["h_x0", "final_hits", "final_normalizer", "ratio", "envelope_pass"]
            .iter()
            .map(|s| s.to_string()),
    );
    let csv_err = |e: csv::Error| Error::Internal(e.to_string());
    w.write_record(&header).map_err(csv_err)?;
    for s in &report.per_seed {
        let mut row = vec![s.index.to_string()];
        row.extend(s.x0.iter().map(|c| c.to_string()));
        row.push(s.h_x0.to_string());
        row.push(s.final_hits.to_string());
        row.push(s.final_normalizer.to_string());
        row.push(s.ratio.map(|r| r.to_string()).unwrap_or_default());
        row.push(s.envelope.as_ref().map(|e| e.pass.to_string()).unwrap_or_default());
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Internal(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))
}

pub fn export_report(report: &ExperimentReport, format: ReportFormat, path: &Path) -> Result<()> {
    let text = match format {
        ReportFormat::Json => report_to_json(report)?,
        ReportFormat::Csv => report_to_csv(report)?,
    };
    write_bytes(path, text.as_bytes())
}

/// Writes a file, creating missing parent directories.
pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::super::{run_experiment, ExperimentConfig};
    use super::*;

    fn toy(ensemble: usize) -> ExperimentReport {
        let mut c = ExperimentConfig::from_json_str(
            r#"{"system": "toral_diag23",
                "schedule": {"family": "power_law", "exponents": [0.2, 0.3], "scales": [1, 1]},
                "n": 200, "ensemble": 2, "seed": 1}"#,
        )
        .unwrap();
        c.ensemble = ensemble;
        let mut r = run_experiment(&ExperimentConfig {
            ensemble: 2,
            ..c.clone()
        })
        .unwrap();
        r.per_seed.truncate(ensemble);
        r.config = c;
        r
    }

    #[test]
    fn empty_ensemble_gives_header_only() {
        let csv = report_to_csv(&toy(0)).unwrap();
        assert_eq!(
            csv,
            "seed_index,x0_0,x0_1,h_x0,final_hits,final_normalizer,ratio,envelope_pass\n"
        );
    }

    #[test]
    fn two_rows() {
        let csv = report_to_csv(&toy(2)).unwrap();
        let mut r = csv::Reader::from_reader(csv.as_bytes());
        let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
        assert_eq!(rows.len(), 2);
        assert_eq!(&rows[1][0], "1");
        assert_eq!(rows[0].len(), 8);
        assert_eq!(&rows[0][3], "1");
    }

    #[test]
    fn json_round_trip() {
        let r = toy(2);
        let back: ExperimentReport = serde_json::from_str(&report_to_json(&r).unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn io_errors_name_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, b"x").unwrap();
        let err = export_report(&toy(1), ReportFormat::Json, &blocker.join("out.json")).unwrap_err();
        assert!(err.to_string().contains("file"), "{err}");
        let ok = dir.path().join("sub/r.csv");
        export_report(&toy(1), ReportFormat::Csv, &ok).unwrap();
        assert!(ok.exists());
    }
}
