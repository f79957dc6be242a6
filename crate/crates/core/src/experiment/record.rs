use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::Kind;
use crate::error::{Error, Result};
use crate::path::format_f64;

/// One cell of an experiment: a seed, a grid level and a probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub seed: u64,
    pub level: usize,
    pub probe: String,
    pub values: Vec<f64>,
    /// Set when the cell failed; the values are then NaN.
    pub error: Option<String>,
}

impl Record {
    pub fn ok(seed: u64, level: usize, probe: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            seed,
            level,
            probe: probe.into(),
            values,
            error: None,
        }
    }

    pub fn failed(seed: u64, level: usize, probe: impl Into<String>, width: usize, err: &Error) -> Self {
        Self {
            seed,
            level,
            probe: probe.into(),
            values: vec![f64::NAN; width],
            error: Some(err.to_string()),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }

    pub fn value(&self, kind: Kind, column: &str) -> f64 {
        let idx = value_columns(kind)
            .iter()
            .position(|c| *c == column)
            .unwrap_or_else(|| panic!("no column {column} for {}", kind.as_str()));
        self.values[idx]
    }
}

/// Names of the value columns recorded by each experiment kind.
pub fn value_columns(kind: Kind) -> &'static [&'static str] {
    match kind {
        Kind::Flow => &["forward", "backward", "forward_grid_defect", "backward_grid_defect"],
        Kind::Inverse => &["x_after_y", "y_after_x", "inversions_forward", "inversions_backward"],
        Kind::Rate => &["holder_error", "scaled_error", "lambda_gap", "lambda_approx"],
        Kind::InitContinuity => &["distance", "norm", "ratio", "lambda_weight"],
        Kind::DriverContinuity => &["norm", "lambda_gap", "ratio", "lambda_weight"],
        Kind::Moments => &["sup"],
    }
}

pub fn write_records<W: Write>(kind: Kind, records: &[Record], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["seed", "level", "probe"];
    header.extend_from_slice(value_columns(kind));
    header.push("error");
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![r.seed.to_string(), r.level.to_string(), r.probe.clone()];
        row.extend(r.values.iter().map(|&v| format_f64(v)));
        row.push(r.error.clone().unwrap_or_default());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: Read>(kind: Kind, reader: R) -> Result<Vec<Record>> {
    let mut rd = csv::Reader::from_reader(reader);
    let width = value_columns(kind).len();
    let header = rd.headers()?.clone();
    if header.len() != width + 4 {
        return Err(Error::Parse(format!(
            "record file has {} columns, expected {} for a {} experiment",
            header.len(),
            width + 4,
            kind.as_str()
        )));
    }
    let parse_f = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| Error::Parse(format!("bad number '{s}' in record file")))
    };
    let mut out = Vec::new();
    for row in rd.records() {
        let row = row?;
        let seed = row[0].parse().map_err(|_| Error::Parse(format!("bad seed '{}'", &row[0])))?;
        let level = row[1].parse().map_err(|_| Error::Parse(format!("bad level '{}'", &row[1])))?;
        let values = (0..width).map(|i| parse_f(&row[3 + i])).collect::<Result<Vec<_>>>()?;
        let error = Some(row[3 + width].to_string()).filter(|e| !e.is_empty());
        out.push(Record {
            seed,
            level,
            probe: row[2].to_string(),
            values,
            error,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let records = vec![
            Record::ok(3, 256, "0/0.5/1 x=1", vec![0.1, 1.0 / 3.0, 0.0, 1e-300]),
            Record::failed(4, 512, "p", 4, &Error::InvalidInput("boom, with comma".into())),
        ];
        let mut buf = Vec::new();
        write_records(Kind::Flow, &records, &mut buf).unwrap();
        let back = read_records(Kind::Flow, buf.as_slice()).unwrap();
        assert_eq!(back[0], records[0]);
        assert!(back[1].values.iter().all(|v| v.is_nan()));
        assert_eq!(back[1].error, records[1].error);
        assert!(read_records(Kind::Moments, buf.as_slice()).is_err());
    }
}
