//! Time-series and summary output.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::monitor::MonitorRecord;

use super::config::Format;
use super::run::RunSummary;

pub const CSV_HEADER: [&str; 13] =
    ["t", "lambda0", "lambda1", "Q", "rhs31", "rhs32", "rhs41", "fd0", "fd1", "R_min", "R_max", "sigma", "pinch"];

pub const CSV_NAME: &str = "series.csv";
pub const JSON_NAME: &str = "summary.json";
pub const PLOT_NAME: &str = "series.gp";

/// 17 significant digits.
pub fn format_number(v: f64) -> String {
    format!("{v:.16e}")
}

fn cell(v: Option<f64>) -> String {
    v.map(format_number).unwrap_or_default()
}

pub fn csv_row(r: &MonitorRecord) -> [String; 13] {
    [
        format_number(r.t),
        cell(r.lambda0),
        cell(r.lambda1),
        cell(r.q),
        cell(r.rhs31),
        cell(r.rhs32),
        cell(r.rhs41),
        cell(r.fd0),
        cell(r.fd1),
        format_number(r.r_min),
        format_number(r.r_max),
        cell(r.sigma),
        cell(r.pinch),
    ]
}

pub fn write_csv<W: std::io::Write>(records: &[MonitorRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record(csv_row(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn plot_script(csv_name: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set key autotitle columnhead\n\
         set xlabel 't'\n\
         set terminal pngcairo size 1000,700\n\
         set output 'series.png'\n\
         plot '{csv_name}' using 1:2 with linespoints, \\\n     '' using 1:3 with linespoints, \\\n     '' using 1:4 with linespoints\n"
    )
}

/// Writes one output format into `dir` and returns the file path.
pub fn emit_series(records: &[MonitorRecord], summary: &RunSummary, format: Format, dir: &Path) -> Result<PathBuf> {
    if records.is_empty() {
        return Err(Error::Domain("no records to emit".into()));
    }
    fs::create_dir_all(dir)?;
    let path = match format {
        Format::Csv => {
            let path = dir.join(CSV_NAME);
            write_csv(records, fs::File::create(&path)?)?;
            path
        }
        Format::Json => {
            let path = dir.join(JSON_NAME);
            let file = fs::File::create(&path)?;
            serde_json::to_writer_pretty(file, summary)?;
            path
        }
        Format::Plot => {
            let path = dir.join(PLOT_NAME);
            fs::write(&path, plot_script(CSV_NAME))?;
            path
        }
    };
    Ok(path)
}
