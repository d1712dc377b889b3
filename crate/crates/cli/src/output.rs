use std::io::Write;
use std::path::Path;

use osc_core::derivations::{IndexEntry, IndexValue};
use osc_core::{Error, Result};
use serde::Serialize;

fn io_error(e: impl std::fmt::Display) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

/// Writes `text` to `out`, or to stdout when no path is given.
pub fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

pub fn json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

pub fn csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row).map_err(io_error)?;
    }
    let bytes = writer.into_inner().map_err(io_error)?;
    String::from_utf8(bytes).map_err(io_error)
}

/// `3;1;0` for level sizes `[3, 1, 0]`.
pub fn sizes(levels: &[usize]) -> String {
    levels
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(";")
}

/// One point of a plotted index curve; `y` is empty when the index is not finite.
#[derive(Debug, Serialize)]
pub struct PlotPoint {
    pub series: String,
    pub x: f64,
    pub y: Option<usize>,
}

pub fn plot_points(series: &str, entries: &[IndexEntry]) -> Vec<PlotPoint> {
    entries
        .iter()
        .map(|e| PlotPoint {
            series: series.to_string(),
            x: e.epsilon,
            y: e.index.finite(),
        })
        .collect()
}

pub fn write_plot_data(path: Option<&Path>, points: &[PlotPoint]) -> Result<()> {
    match path {
        Some(path) => emit(&csv(points)?, Some(path)),
        None => Ok(()),
    }
}

/// A fixed-width table for humans, written to stderr.
pub fn print_table(header: &[String], rows: &[Vec<String>]) {
    let mut widths: Vec<usize> = header.iter().map(String::len).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: &[String]| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect::<Vec<_>>()
            .join("  ")
    };
    eprintln!("{}", line(header));
    for row in rows {
        eprintln!("{}", line(row));
    }
}

pub fn index_label(index: &IndexValue) -> String {
    index.to_string()
}
