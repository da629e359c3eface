use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{ensure, Context};
use triadic_core::PathRecord;

/// Buffered CSV writer with a fixed header. Floats use Rust's shortest
/// round-trip formatting.
pub struct Csv {
    path: PathBuf,
    out: BufWriter<File>,
    columns: usize,
}

impl Csv {
    pub fn create(path: &Path, header: &[&str]) -> anyhow::Result<Self> {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "{}", header.join(","))?;
        Ok(Self {
            path: path.to_path_buf(),
            out,
            columns: header.len(),
        })
    }

    pub fn row(&mut self, fields: &[&dyn std::fmt::Display]) -> anyhow::Result<()> {
        ensure!(
            fields.len() == self.columns,
            "{}: row has {} fields, header has {}",
            self.path.display(),
            fields.len(),
            self.columns
        );
        let mut first = true;
        for f in fields {
            if !first {
                self.out.write_all(b",")?;
            }
            write!(self.out, "{f}")?;
            first = false;
        }
        self.out.write_all(b"\n")?;
        Ok(())
    }

    pub fn finish(mut self) -> anyhow::Result<()> {
        self.out
            .flush()
            .with_context(|| format!("writing {}", self.path.display()))
    }
}

/// `t,value` rows of a recorded path.
pub fn write_path(path: &Path, record: &PathRecord) -> anyhow::Result<()> {
    let mut csv = Csv::create(path, &["t", "value"])?;
    for (t, v) in record.iter() {
        csv.row(&[&t, &v])?;
    }
    csv.finish()
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_round_trip_floats() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        let mut csv = Csv::create(&p, &["a", "b"]).unwrap();
        csv.row(&[&1usize, &0.1f64]).unwrap();
        csv.row(&[&2usize, &(1.0f64 / 3.0)]).unwrap();
        assert!(csv.row(&[&1usize]).is_err());
        csv.finish().unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "a,b");
        assert_eq!(lines[1], "1,0.1");
        let back: f64 = lines[2].split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(back, 1.0 / 3.0);
    }
}
