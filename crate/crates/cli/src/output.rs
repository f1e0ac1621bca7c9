use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::args::Format;

/// Scientific notation with 17 significant digits.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.16e}")
    }
}

pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

pub struct Emit<'a> {
    pub dir: &'a Path,
    pub format: Format,
    pub command: &'static str,
    pub config: Value,
    pub summary: Value,
    pub runtime: Option<f64>,
}

impl Emit<'_> {
    /// Writes `<command>.csv` plus a `<command>.json` summary, or a single
    /// `<command>.json` holding the rows as well.
    pub fn write<R: Serialize>(self, table: &Table, rows: &[R]) -> std::io::Result<Vec<PathBuf>> {
        fs::create_dir_all(self.dir)?;
        let mut doc = json!({
            "command": self.command,
            "config": self.config,
            "summary": self.summary,
        });
        if let Some(t) = self.runtime {
            doc["runtime_seconds"] = json!(t);
        }
        let json_path = self.dir.join(format!("{}.json", self.command));
        let mut written = Vec::new();
        match self.format {
            Format::Csv => {
                let csv_path = self.dir.join(format!("{}.csv", self.command));
                let mut file = BufWriter::new(File::create(&csv_path)?);
                writeln!(file, "# {} config={}", self.command, serde_json::to_string(&doc["config"])?)?;
                let mut w = csv::Writer::from_writer(file);
                w.write_record(&table.header)?;
                for r in &table.rows {
                    w.write_record(r)?;
                }
                w.flush()?;
                written.push(csv_path);
            }
            Format::Json => {
                doc["rows"] = serde_json::to_value(rows)?;
            }
        }
        let mut f = BufWriter::new(File::create(&json_path)?);
        serde_json::to_writer_pretty(&mut f, &doc)?;
        writeln!(f)?;
        f.flush()?;
        written.push(json_path);
        Ok(written)
    }
}
