//! Text formats: floorplan and power files, stack configs, reports and PPM thermal maps.

mod config;
mod floorplan;
mod power;
mod ppm;
mod report;

pub use config::{
    load_problem_config, load_stack_config, load_stack_config_unchecked, parse_problem_config, parse_stack_config,
    OptimizeSection,
};
pub use floorplan::{parse_floorplan, write_floorplan};
pub use power::{parse_power, write_power, PowerMap};
pub use ppm::{colormap_lookup, render_ppm, render_ppm_auto, Rgb, COLOR_STOPS};
pub use report::{read_report, write_report, ReportFormat};

use std::path::Path;

use crate::error::{Error, Result};

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

/// Decimal number with optional exponent; rejects non-finite values.
pub(crate) fn parse_number(token: &str, line: usize, what: &str) -> Result<f64> {
    match token.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::parse(line, format!("{what}: `{token}` is not a finite number"))),
    }
}

/// Strips a `#` comment and surrounding whitespace.
pub(crate) fn content(line: &str) -> &str {
    match line.find('#') {
        Some(i) => line[..i].trim(),
        None => line.trim(),
    }
}
