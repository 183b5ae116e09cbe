//! Numeric CSV tables and JSON helpers shared by the exporters.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// Formats with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt17(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    format!("{v:.16e}")
}

/// A header plus rows of floats.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        CsvTable { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| fmt17(*v))).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read<R: Read>(input: R) -> Result<CsvTable> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(csv_err)?;
            let row = rec
                .iter()
                .map(|s| s.parse::<f64>().map_err(|e| Error::Csv(format!("{s:?}: {e}"))))
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        Ok(CsvTable { header, rows })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write(fs::File::create(path)?)
    }

    pub fn load(path: &Path) -> Result<CsvTable> {
        Self::read(fs::File::open(path)?)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Csv(e.to_string())
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_json(value)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut t = CsvTable::new(&["x", "f"]);
        for i in 0..100 {
            let x = (i as f64 * 0.731).sin() * 10f64.powi(i % 40 - 20);
            t.push(vec![x, 1.0 / (1.0 + x)]);
        }
        let mut buf = Vec::new();
        t.write(&mut buf).unwrap();
        let back = CsvTable::read(buf.as_slice()).unwrap();
        assert_eq!(back, t);
        for (a, b) in back.rows.iter().zip(&t.rows) {
            for (x, y) in a.iter().zip(b) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }
}
