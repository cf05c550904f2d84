//! CSV ingestion and export of raw per-row traces.
//!
//! Layout: header `subject_id,timestamp,target,<feature...>`, one row per
//! timestep, rows grouped by subject in chronological order.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::dataset::SubjectNormStats;
use crate::error::{Error, Result};
use crate::tensor::Matrix;

/// One subject's raw rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectTrace {
    pub subject_id: String,
    pub timestamps: Vec<f64>,
    pub targets: Vec<f64>,
    /// `rows × F`.
    pub features: Matrix,
}

impl SubjectTrace {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRecords {
    pub feature_names: Vec<String>,
    pub subjects: Vec<SubjectTrace>,
    #[serde(default)]
    pub norm_stats: Vec<SubjectNormStats>,
}

impl RawRecords {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_rows(&self) -> usize {
        self.subjects.iter().map(SubjectTrace::len).sum()
    }
}

/// Column names for the id, timestamp and target fields.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub subject_column: String,
    /// Optional; row order is used when absent.
    pub timestamp_column: Option<String>,
    pub target_column: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            subject_column: "subject_id".into(),
            timestamp_column: Some("timestamp".into()),
            target_column: "target".into(),
        }
    }
}

fn parse_cell(raw: &str, row: u64, column: &str) -> Result<f64> {
    let v: f64 = raw.trim().parse().map_err(|_| Error::Parse {
        row,
        message: format!("column `{column}`: `{raw}` is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            row,
            message: format!("column `{column}`: non-finite value `{raw}`"),
        });
    }
    Ok(v)
}

pub fn load_csv(path: &Path, schema: &CsvSchema) -> Result<RawRecords> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema)
}

pub fn read_csv<R: Read>(reader: R, schema: &CsvSchema) -> Result<RawRecords> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h.trim() == name);
    let subject_col = find(&schema.subject_column).ok_or_else(|| Error::Schema {
        column: schema.subject_column.clone(),
    })?;
    let target_col = find(&schema.target_column).ok_or_else(|| Error::Schema {
        column: schema.target_column.clone(),
    })?;
    let timestamp_col = match &schema.timestamp_column {
        Some(name) => find(name),
        None => None,
    };
    let feature_cols: Vec<usize> = (0..headers.len())
        .filter(|&c| c != subject_col && c != target_col && Some(c) != timestamp_col)
        .collect();
    if feature_cols.is_empty() {
        return Err(Error::Schema {
            column: "<feature>".into(),
        });
    }
    let feature_names: Vec<String> = feature_cols.iter().map(|&c| headers[c].trim().to_string()).collect();
    let f = feature_names.len();

    struct Building {
        id: String,
        ts: Vec<f64>,
        ys: Vec<f64>,
        xs: Vec<f64>,
    }
    let mut subjects: Vec<Building> = Vec::new();
    let mut index = std::collections::HashMap::<String, usize>::new();

    for record in rdr.records() {
        let record = record?;
        let row = record.position().map_or(0, |p| p.line());
        if record.len() != headers.len() {
            return Err(Error::Parse {
                row,
                message: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        let id = record[subject_col].trim().to_string();
        let y = parse_cell(&record[target_col], row, &schema.target_column)?;
        let slot = *index.entry(id.clone()).or_insert_with(|| {
            subjects.push(Building {
                id: id.clone(),
                ts: Vec::new(),
                ys: Vec::new(),
                xs: Vec::new(),
            });
            subjects.len() - 1
        });
        let b = &mut subjects[slot];
        let ts = match timestamp_col {
            Some(c) => parse_cell(&record[c], row, &headers[c])?,
            None => b.ts.len() as f64,
        };
        b.ts.push(ts);
        b.ys.push(y);
        for (&c, name) in feature_cols.iter().zip(&feature_names) {
            b.xs.push(parse_cell(&record[c], row, name)?);
        }
    }

    let subjects = subjects
        .into_iter()
        .map(|b| SubjectTrace {
            subject_id: b.id,
            features: Matrix::from_vec(b.ys.len(), f, b.xs),
            timestamps: b.ts,
            targets: b.ys,
        })
        .collect();
    Ok(RawRecords {
        feature_names,
        subjects,
        norm_stats: Vec::new(),
    })
}

/// Writes records in the ingestion layout. Floats use shortest round-trip
/// formatting, so a reload reproduces every value bit for bit.
pub fn write_csv<W: Write>(records: &RawRecords, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["subject_id".to_string(), "timestamp".into(), "target".into()];
    header.extend(records.feature_names.iter().cloned());
    wtr.write_record(&header)?;
    let mut fields: Vec<String> = Vec::with_capacity(header.len());
    for s in &records.subjects {
        for r in 0..s.len() {
            fields.clear();
            fields.push(s.subject_id.clone());
            fields.push(format!("{}", s.timestamps[r]));
            fields.push(format!("{}", s.targets[r]));
            fields.extend(s.features.row(r).iter().map(|v| format!("{v}")));
            wtr.write_record(&fields)?;
        }
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn save_csv(records: &RawRecords, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(records, std::io::BufWriter::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RawRecords> {
        read_csv(text.as_bytes(), &CsvSchema::default())
    }

    #[test]
    fn three_rows_two_features() {
        let r = parse("subject_id,timestamp,target,a,b\ns1,0,1.0,0.5,2\ns1,1,2.0,0.1,3\ns2,0,3.0,1,1\n").unwrap();
        assert_eq!(r.n_features(), 2);
        assert_eq!(r.n_rows(), 3);
        assert_eq!(r.feature_names, vec!["a", "b"]);
        assert_eq!(r.subjects[0].features.row(1), &[0.1, 3.0]);
        assert_eq!(r.subjects[1].subject_id, "s2");
    }

    #[test]
    fn missing_target_column_is_a_schema_error() {
        let err = parse("subject_id,timestamp,a\ns1,0,1\n").unwrap_err();
        assert!(matches!(err, Error::Schema { ref column } if column == "target"), "{err}");
    }

    #[test]
    fn nan_cell_is_a_parse_error_with_row() {
        let err = parse("subject_id,timestamp,target,a\ns1,0,1,2\ns1,1,1,NaN\n").unwrap_err();
        match err {
            Error::Parse { row, .. } => assert_eq!(row, 3),
            other => panic!("unexpected {other}"),
        }
        assert!(matches!(parse("subject_id,timestamp,target,a\ns1,0,x,2\n"), Err(Error::Parse { row: 2, .. })));
    }

    #[test]
    fn no_feature_columns_is_rejected() {
        assert!(matches!(parse("subject_id,timestamp,target\ns1,0,1\n"), Err(Error::Schema { .. })));
    }

    #[test]
    fn round_trip_preserves_values() {
        let r = parse("subject_id,timestamp,target,a\ns1,0,0.1,0.30000000000000004\ns1,1,-2.5e-7,1e300\n").unwrap();
        let mut buf = Vec::new();
        write_csv(&r, &mut buf).unwrap();
        assert_eq!(parse(std::str::from_utf8(&buf).unwrap()).unwrap(), r);
    }
}
