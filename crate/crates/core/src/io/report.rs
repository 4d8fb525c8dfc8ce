use std::fmt::Write;

use crate::analysis::ThermalReport;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            _ => Err(Error::invalid(format!("unknown report format `{s}`"))),
        }
    }
}

impl ReportFormat {
    /// Format implied by a file extension, `.csv` or anything else as JSON.
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => ReportFormat::Csv,
            _ => ReportFormat::Json,
        }
    }
}

/// Serializes a report. JSON keeps struct field order; CSV lists blocks, then each layer
/// followed by its `<layer>_procs` aggregate.
pub fn write_report(report: &ThermalReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report)?;
            s.push('\n');
            Ok(s)
        }
        ReportFormat::Csv => {
            let mut out = String::from("scope,name,min_K,max_K,avg_K\n");
            for b in &report.blocks {
                let _ = writeln!(out, "block,{}/{},{},{},{}", b.layer, b.name, b.min_k, b.max_k, b.avg_k);
            }
            for l in &report.layers {
                let _ = writeln!(out, "layer,{},{},{},{}", l.name, l.min_k, l.max_k, l.avg_k);
                if let Some(p) = &l.processors {
                    let _ = writeln!(out, "layer,{}_procs,{},{},{}", l.name, p.min_k, p.max_k, p.avg_k);
                }
            }
            Ok(out)
        }
    }
}

pub fn read_report(text: &str) -> Result<ThermalReport> {
    Ok(serde_json::from_str(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{Grid2d, LayerMap, LayerStats, Location, Range3, SolverStats};

    fn location() -> Location {
        Location { value_k: 392.72, cell: 0, layer: "layer0".into(), x_m: 0.0, y_m: 0.0, z_m: 0.0 }
    }

    fn report() -> ThermalReport {
        ThermalReport {
            scenario: Some("3d-direct".into()),
            grid: "2x2".into(),
            ambient_k: 318.15,
            solver: SolverStats { unknowns: 5, iterations: 3, residual: 1e-9 },
            peak: location(),
            lowest: location(),
            layers: vec![LayerStats {
                name: "layer0".into(),
                min_k: 340.0,
                max_k: 392.72,
                avg_k: 360.0,
                processors: Some(Range3 { min_k: 380.0, max_k: 392.72, avg_k: 385.0 }),
            }],
            blocks: vec![],
            references: vec![],
            field: vec![LayerMap { layer: "layer0".into(), map: Grid2d { nx: 2, ny: 2, values: vec![1.0; 4] } }],
        }
    }

    #[test]
    fn csv_processor_row() {
        let csv = write_report(&report(), ReportFormat::Csv).unwrap();
        assert!(csv.contains("\nlayer,layer0_procs,380,392.72,385\n"), "{csv}");
    }

    #[test]
    fn empty_report_is_header_only() {
        let mut r = report();
        r.layers.clear();
        assert_eq!(write_report(&r, ReportFormat::Csv).unwrap(), "scope,name,min_K,max_K,avg_K\n");
    }

    #[test]
    fn json_is_stable_and_round_trips() {
        let a = write_report(&report(), ReportFormat::Json).unwrap();
        assert_eq!(a, write_report(&report(), ReportFormat::Json).unwrap());
        assert!(a.find("\"scenario\"").unwrap() < a.find("\"grid\"").unwrap());
        assert_eq!(read_report(&a).unwrap(), report());
    }
}
