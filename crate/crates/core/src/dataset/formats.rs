//! CSV and JSON formats.
//!
//! * reduced spectra: `bin,freq,value[,std]`, `freq = r/R` with 6 decimals
//! * feature rows: `id,label,f0,f1,...`, label `real` or `fake`
//! * reports, models and manifests: JSON via serde
//!
//! Floats are written in shortest round-trip form, so reading a file back
//! reproduces the written values bit for bit.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::write_atomic;
use crate::detect::FeatureRow;
use crate::spectrum::{ReducedSpectrum, SpectrumStats};
use crate::{Error, Result};

fn schema(path: &Path, reason: impl Into<String>) -> Error {
    Error::Schema {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn freq_label(r: usize, max: usize) -> String {
    let f = if max == 0 { 0.0 } else { r as f64 / max as f64 };
    format!("{f:.6}")
}

pub fn spectrum_csv(rs: &ReducedSpectrum) -> String {
    let max = rs.max_bin();
    let mut out = String::from("bin,freq,value\n");
    for (r, v) in rs.values().iter().enumerate() {
        out.push_str(&format!("{r},{},{v}\n", freq_label(r, max)));
    }
    out
}

pub fn stats_csv(stats: &SpectrumStats) -> String {
    let max = stats.max_bin();
    let mut out = String::from("bin,freq,value,std\n");
    for (r, (m, s)) in stats.mean.iter().zip(&stats.std).enumerate() {
        out.push_str(&format!("{r},{},{m},{s}\n", freq_label(r, max)));
    }
    out
}

pub fn write_spectrum_csv(path: impl AsRef<Path>, rs: &ReducedSpectrum) -> Result<()> {
    write_atomic(path, spectrum_csv(rs).as_bytes())
}

pub fn write_stats_csv(path: impl AsRef<Path>, stats: &SpectrumStats) -> Result<()> {
    write_atomic(path, stats_csv(stats).as_bytes())
}

/// A spectrum CSV read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTable {
    pub freqs: Vec<f64>,
    pub values: Vec<f64>,
    pub std: Option<Vec<f64>>,
}

impl SpectrumTable {
    pub fn to_spectrum(&self, normalized: bool) -> Result<ReducedSpectrum> {
        ReducedSpectrum::new(self.values.clone(), normalized)
    }
}

fn parse_f64(path: &Path, line: usize, field: &str) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| schema(path, format!("line {line}: {field:?} is not a number")))
}

pub fn read_spectrum_csv(path: impl AsRef<Path>) -> Result<SpectrumTable> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let with_std = match header.as_slice() {
        [b, f, v] if b == "bin" && f == "freq" && v == "value" => false,
        [b, f, v, s] if b == "bin" && f == "freq" && v == "value" && s == "std" => true,
        _ => return Err(schema(path, format!("unexpected header {header:?}"))),
    };
    let mut table = SpectrumTable {
        freqs: Vec::new(),
        values: Vec::new(),
        std: with_std.then(Vec::new),
    };
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = i + 2;
        let bin: usize = record[0]
            .trim()
            .parse()
            .map_err(|_| schema(path, format!("line {line}: bad bin {:?}", &record[0])))?;
        if bin != i {
            return Err(schema(
                path,
                format!("line {line}: expected bin {i}, got {bin}"),
            ));
        }
        table.freqs.push(parse_f64(path, line, &record[1])?);
        table.values.push(parse_f64(path, line, &record[2])?);
        if let Some(std) = table.std.as_mut() {
            std.push(parse_f64(path, line, &record[3])?);
        }
    }
    Ok(table)
}

fn csv_error(path: &Path, err: csv::Error) -> Error {
    let msg = err.to_string();
    match err.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        _ => schema(path, msg),
    }
}

pub fn features_csv(rows: &[FeatureRow]) -> Result<String> {
    let dim = rows.first().map_or(0, |r| r.features.len());
    let mut out = String::from("id,label");
    for i in 0..dim {
        out.push_str(&format!(",f{i}"));
    }
    out.push('\n');
    for row in rows {
        if row.features.len() != dim {
            return Err(Error::Validation(format!(
                "row {:?} has {} features, expected {dim}",
                row.id,
                row.features.len()
            )));
        }
        if row.id.contains([',', '"', '\n', '\r']) {
            return Err(Error::Validation(format!(
                "id {:?} cannot be written to CSV",
                row.id
            )));
        }
        out.push_str(&row.id);
        out.push(',');
        out.push_str(row.label.as_str());
        for v in &row.features {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn write_features_csv(path: impl AsRef<Path>, rows: &[FeatureRow]) -> Result<()> {
    write_atomic(path, features_csv(rows)?.as_bytes())
}

pub fn read_features_csv(path: impl AsRef<Path>) -> Result<Vec<FeatureRow>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.len() < 3 || &header[0] != "id" || &header[1] != "label" {
        return Err(schema(
            path,
            "header must start with id,label and list features f0..fN",
        ));
    }
    for (i, name) in header.iter().skip(2).enumerate() {
        if name != format!("f{i}") {
            return Err(schema(
                path,
                format!("column {} should be f{i}, got {name:?}", i + 2),
            ));
        }
    }
    let dim = header.len() - 2;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = i + 2;
        let label = record[1]
            .parse()
            .map_err(|_| schema(path, format!("line {line}: bad label {:?}", &record[1])))?;
        let features = (0..dim)
            .map(|j| parse_f64(path, line, &record[j + 2]))
            .collect::<Result<Vec<_>>>()?;
        if features.iter().any(|v| !v.is_finite()) {
            return Err(schema(path, format!("line {line}: non-finite feature")));
        }
        rows.push(FeatureRow {
            id: record[0].to_string(),
            label,
            features,
        });
    }
    Ok(rows)
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    write_atomic(path, to_json(value)?.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| schema(path, e.to_string()))
}
