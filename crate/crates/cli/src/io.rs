//! Input parsing and output files.

use std::fs;
use std::io::Write;
use std::path::Path;

use image::ImageFormat;
use otaccel::logmath::smooth_marginals;
use otaccel::{CostMatrix, Histogram, TraceRow};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HistogramFormat {
    Csv,
    Pgm,
}

impl HistogramFormat {
    /// `.pgm` and `.pnm` files are images, anything else is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
        {
            Some(ext) if ext == "pgm" || ext == "pnm" => HistogramFormat::Pgm,
            _ => HistogramFormat::Csv,
        }
    }
}

/// Every field of a header-less CSV file, row by row.
fn read_csv_rows(path: &Path) -> CliResult<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::io(path, e))?;
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::io(path, e))?;
        let row = record
            .iter()
            .filter(|f| !f.is_empty())
            .map(|f| {
                f.parse::<f64>().map_err(|_| {
                    CliError::io(path, format!("line {}: cannot parse {f:?}", line + 1))
                })
            })
            .collect::<CliResult<Vec<f64>>>()?;
        if !row.is_empty() {
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Grayscale intensities of a plain or raw PGM, row-major.
pub fn read_pgm(path: &Path) -> CliResult<Vec<f64>> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let img = image::load_from_memory_with_format(&bytes, ImageFormat::Pnm)
        .map_err(|e| CliError::io(path, e))?;
    Ok(img
        .to_luma16()
        .into_raw()
        .into_iter()
        .map(f64::from)
        .collect())
}

/// Loads a histogram and normalizes it to sum 1. `smooth` applies
/// [`smooth_marginals`] with that parameter.
pub fn load_histogram(
    path: &Path,
    format: HistogramFormat,
    smooth: Option<f64>,
) -> CliResult<Histogram> {
    let values = match format {
        HistogramFormat::Csv => read_csv_rows(path)?.concat(),
        HistogramFormat::Pgm => read_pgm(path)?,
    };
    let hist = Histogram::new(values).map_err(|e| CliError::io(path, e))?;
    match smooth {
        Some(e) => Ok(smooth_marginals(&hist, e)?),
        None => Ok(hist),
    }
}

/// `N` rows of `N` comma-separated costs.
pub fn load_cost(path: &Path) -> CliResult<CostMatrix> {
    let rows = read_csv_rows(path)?;
    CostMatrix::from_rows(&rows).map_err(|e| CliError::io(path, e))
}

pub const TRACE_HEADER: [&str; 7] = ["iter", "seconds", "dual", "feas_l1", "gap", "L", "A"];

pub fn write_trace(path: &Path, trace: &[TraceRow]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))?;
    w.write_record(TRACE_HEADER)
        .map_err(|e| CliError::io(path, e))?;
    for row in trace {
        w.write_record([
            row.iteration.to_string(),
            row.seconds.to_string(),
            row.dual.to_string(),
            row.feas_l1.to_string(),
            row.gap.to_string(),
            row.lipschitz.to_string(),
            row.accumulator.to_string(),
        ])
        .map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Row-major `n x n` matrix as CSV.
pub fn write_matrix(path: &Path, n: usize, entries: &[f64]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))?;
    for row in entries.chunks(n) {
        w.write_record(row.iter().map(f64::to_string))
            .map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_vector(path: &Path, values: &[f64]) -> CliResult<()> {
    let body: String = values.iter().map(|v| format!("{v}\n")).collect();
    fs::write(path, body).map_err(|e| CliError::io(path, e))
}

/// Ordered `key = value` lines.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Summary {
    entries: Vec<(String, String)>,
}

impl Summary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        self.entries.push((key.into(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// Inverse of [`Summary::render`]; blank lines and `#` comments are
    /// skipped.
    pub fn parse(text: &str) -> Self {
        let entries = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .filter_map(|l| l.split_once('='))
            .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
            .collect();
        Self { entries }
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let mut f = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
        f.write_all(self.render().as_bytes())
            .map_err(|e| CliError::io(path, e))
    }
}

pub fn create_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &[u8]) -> std::path::PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn csv_row_and_column_layouts() {
        let dir = tempfile::tempdir().unwrap();
        let a = write(dir.path(), "a.csv", b"1,1,1,1\n");
        let b = write(dir.path(), "b.csv", b"1\n1\n\n1\n1\n");
        for p in [a, b] {
            let h = load_histogram(&p, HistogramFormat::Csv, None).unwrap();
            assert_eq!(h.weights(), &[0.25; 4]);
        }
    }

    #[test]
    fn bad_csv_entries() {
        let dir = tempfile::tempdir().unwrap();
        for (name, body) in [
            ("neg.csv", "1,-2,3"),
            ("zero.csv", "0,0"),
            ("text.csv", "1,x"),
        ] {
            let p = write(dir.path(), name, body.as_bytes());
            let err = load_histogram(&p, HistogramFormat::Csv, None).unwrap_err();
            assert_eq!(err.exit_code(), 1, "{name}");
        }
    }

    #[test]
    fn plain_and_raw_pgm_agree() {
        let dir = tempfile::tempdir().unwrap();
        let plain = write(dir.path(), "p.pgm", b"P2\n# c\n2 2\n255\n0 0\n0 255\n");
        let raw = write(dir.path(), "r.pgm", b"P5\n2 2\n255\n\x00\x00\x00\xff");
        let a = load_histogram(&plain, HistogramFormat::Pgm, None).unwrap();
        let b = load_histogram(&raw, HistogramFormat::Pgm, None).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.weights(), &[0.0, 0.0, 0.0, 1.0]);
        let s = load_histogram(&plain, HistogramFormat::Pgm, Some(0.08)).unwrap();
        assert!((s.min() - 0.0025).abs() < 1e-15);
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(
            HistogramFormat::from_path(Path::new("x.PGM")),
            HistogramFormat::Pgm
        );
        assert_eq!(
            HistogramFormat::from_path(Path::new("x.txt")),
            HistogramFormat::Csv
        );
    }

    #[test]
    fn summary_round_trip() {
        let mut s = Summary::new();
        s.add("cost", 0.5).add("status", "converged");
        assert_eq!(Summary::parse(&s.render()), s);
        assert_eq!(s.get("cost"), Some("0.5"));
    }
}
