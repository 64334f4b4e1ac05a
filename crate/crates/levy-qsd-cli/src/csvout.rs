//! Byte-deterministic CSV emission: fixed header row, fixed row order, and
//! floats always rendered as scientific notation with 17 significant digits
//! (round-trip exact for f64).

use std::fs;
use std::io::Write;
use std::path::PathBuf;

/// `f64` formatter used for every numeric cell.
pub fn fmt_f(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{v:.16e}")
    }
}

pub struct CsvFile {
    path: PathBuf,
    buf: String,
}

impl CsvFile {
    pub fn new(prefix: &str, name: &str, header: &str) -> CsvFile {
        let mut buf = String::new();
        buf.push_str(header);
        buf.push('\n');
        CsvFile { path: PathBuf::from(format!("{prefix}-{name}.csv")), buf }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.buf.push_str(&cells.join(","));
        self.buf.push('\n');
    }

    pub fn write(self) -> std::io::Result<PathBuf> {
        if let Some(parent) = self.path.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent)?;
            }
        }
        let mut f = fs::File::create(&self.path)?;
        f.write_all(self.buf.as_bytes())?;
        Ok(self.path)
    }
}

/// Key/value summary table shared by all tasks.
pub struct Summary {
    file: CsvFile,
}

impl Summary {
    pub fn new(prefix: &str) -> Summary {
        Summary { file: CsvFile::new(prefix, "summary", "key,value") }
    }

    pub fn text(&mut self, key: &str, value: &str) {
        self.file.row(&[key.to_string(), value.to_string()]);
    }

    pub fn float(&mut self, key: &str, value: f64) {
        self.file.row(&[key.to_string(), fmt_f(value)]);
    }

    pub fn int(&mut self, key: &str, value: u64) {
        self.file.row(&[key.to_string(), value.to_string()]);
    }

    pub fn bool(&mut self, key: &str, value: bool) {
        self.file.row(&[key.to_string(), value.to_string()]);
    }

    pub fn write(self) -> std::io::Result<PathBuf> {
        self.file.write()
    }
}
