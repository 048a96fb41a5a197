//! CSV tables and run manifests.
//!
//! Numbers are written with 17 significant digits and LF line endings so that
//! identical runs give byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Format a number with 17 significant digits.
pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

/// A CSV table: header plus rows of mixed numeric and text cells.
#[derive(Debug, Clone, PartialEq, Default)]
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

    pub fn push_numbers(&mut self, row: &[f64]) {
        self.rows.push(row.iter().map(|&x| format_number(x)).collect());
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.render()).map_err(|e| Error::io(path, e))
    }

    /// Parse a table written by [`render`](Self::render).
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidArgument("empty CSV".into()))?
            .split(',')
            .map(str::to_string)
            .collect::<Vec<_>>();
        let rows = lines
            .map(|l| l.split(',').map(str::to_string).collect::<Vec<_>>())
            .collect::<Vec<_>>();
        if let Some(bad) = rows.iter().position(|r| r.len() != header.len()) {
            return Err(Error::InvalidArgument(format!("CSV row {} has wrong width", bad + 1)));
        }
        Ok(Table { header, rows })
    }

    /// Numeric column by header name.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.header.iter().position(|h| h == name)?;
        self.rows.iter().map(|r| r[idx].parse().ok()).collect()
    }
}

/// Flat `key = value` record of one command invocation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunManifest {
    pub scenario: String,
    pub version: String,
    pub config: Vec<(String, String)>,
    pub outputs: Vec<PathBuf>,
    pub tolerances: Vec<(String, f64)>,
    pub extra: Vec<(String, String)>,
    pub wall_clock_s: f64,
}

impl RunManifest {
    pub fn new(scenario: &str) -> Self {
        RunManifest {
            scenario: scenario.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            ..Default::default()
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scenario = {}", self.scenario);
        let _ = writeln!(out, "version = {}", self.version);
        for (k, v) in &self.config {
            let _ = writeln!(out, "config.{k} = {v}");
        }
        for (k, v) in &self.tolerances {
            let _ = writeln!(out, "tolerance.{k} = {v:e}");
        }
        for (k, v) in &self.extra {
            let _ = writeln!(out, "{k} = {v}");
        }
        let names: Vec<String> = self
            .outputs
            .iter()
            .map(|p| p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned()))
            .collect();
        let _ = writeln!(out, "outputs = {}", names.join(","));
        let _ = writeln!(out, "wall_clock_s = {:.3}", self.wall_clock_s);
        out
    }

    /// Write `dir/<scenario>_manifest.txt` through a temporary file and a
    /// rename. Fails if a listed output does not exist.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        for p in &self.outputs {
            if !p.exists() {
                return Err(Error::io(
                    p,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "listed output is missing"),
                ));
            }
        }
        let path = dir.join(format!("{}_manifest.txt", self.scenario));
        let tmp = dir.join(format!(".{}_manifest.txt.tmp", self.scenario));
        fs::write(&tmp, self.render()).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip_exactly() {
        for &x in &[0.0, 1.0, -2.5e-300, 3.494028940438989, std::f64::consts::PI * 1e17] {
            let s = format_number(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(format_number(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn table_render_and_parse() {
        let mut t = Table::new(["a", "b"]);
        t.push_numbers(&[1.0, 2.0]);
        t.push(vec!["3".into(), "x".into()]);
        let text = t.render();
        assert!(text.ends_with('\n') && !text.contains('\r'));
        let back = Table::parse(&text).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.column("a"), Some(vec![1.0, 3.0]));
        assert_eq!(back.column("b"), None);
        assert!(Table::parse("a,b\n1\n").is_err());
    }

    #[test]
    fn manifest_is_written_atomically() {
        let dir = std::env::temp_dir().join(format!("cr-manifest-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let out = dir.join("x.csv");
        fs::write(&out, "a\n").unwrap();
        let mut m = RunManifest::new("demo");
        m.outputs.push(out);
        m.config.push(("w0".into(), "0.99".into()));
        let path = m.write(&dir).unwrap();
        let text = fs::read_to_string(path).unwrap();
        assert!(text.contains("config.w0 = 0.99\n"));
        assert!(text.contains("outputs = x.csv\n"));
        assert!(!dir.join(".demo_manifest.txt.tmp").exists());
        m.outputs.push(dir.join("missing.csv"));
        assert!(m.write(&dir).is_err());
        fs::remove_dir_all(dir).unwrap();
    }
}
