//! CSV tables and output destinations.
//!
//! CSV is written with a header row, `,` separators, `.` decimals and LF line
//! endings. Floats use the shortest representation that parses back to the
//! same value, switching to exponent form outside `[1e-4, 1e15)`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::CliError;

/// Formats a float for CSV/stdout.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// In-memory table, written in one go.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Format(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("CSV of UTF-8 fields is UTF-8"))
    }
}

/// Where a subcommand's primary output goes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Destination {
    Stdout(Format),
    File(PathBuf, Format),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Destination {
    /// `--out csv` / `--out json` select a format on stdout; anything else is
    /// a path whose extension picks the format.
    pub fn parse(out: Option<&str>, default: Format) -> Destination {
        match out {
            None | Some("-") => Destination::Stdout(default),
            Some("csv") => Destination::Stdout(Format::Csv),
            Some("json") => Destination::Stdout(Format::Json),
            Some(path) => {
                let p = PathBuf::from(path);
                let fmt = match p.extension().and_then(|e| e.to_str()) {
                    Some("json") => Format::Json,
                    Some("csv") => Format::Csv,
                    _ => default,
                };
                Destination::File(p, fmt)
            }
        }
    }

    pub fn format(&self) -> Format {
        match self {
            Destination::Stdout(f) | Destination::File(_, f) => *f,
        }
    }

    pub fn path(&self) -> Option<&Path> {
        match self {
            Destination::File(p, _) => Some(p),
            Destination::Stdout(_) => None,
        }
    }

    pub fn write(&self, text: &str) -> Result<(), CliError> {
        match self {
            Destination::Stdout(_) => {
                let mut out = std::io::stdout().lock();
                out.write_all(text.as_bytes())?;
                if !text.ends_with('\n') {
                    out.write_all(b"\n")?;
                }
                Ok(())
            }
            Destination::File(p, _) => write_file(p, text),
        }
    }
}

pub fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    let mut body = text.to_owned();
    if !body.ends_with('\n') {
        body.push('\n');
    }
    fs::write(path, body)?;
    Ok(())
}
