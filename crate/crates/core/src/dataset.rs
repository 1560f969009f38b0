//! Flow dataset and packet trace loading.
//!
//! Flow datasets are CICFlowMeter-style CSVs. A [`CsvSchema`] maps the
//! columns of interest onto named features (with optional unit scaling), so
//! third-party exports load unmodified; missing or non-finite numeric cells
//! are imputed with the column mean of the parseable cells.

use crate::flow::{PacketRecord, Protocol, FEATURE_NAMES};
use crate::label::ClassLabel;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::net::Ipv4Addr;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("MissingColumn: {0:?} not found in CSV header")]
    MissingColumn(String),
    #[error("UnparsableCell: row {row}, column {column:?}: {value:?}")]
    UnparsableCell {
        row: usize,
        column: String,
        value: String,
    },
    #[error("UnknownLabel: row {row}: {value:?}")]
    UnknownLabel { row: usize, value: String },
    #[error("EmptyDataset: {0}")]
    EmptyDataset(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// One feature-column binding: CSV column `column` feeds feature `feature`,
/// multiplied by `scale` (e.g. 1e-6 to convert microseconds to seconds).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub feature: String,
    pub column: String,
    #[serde(default = "default_scale")]
    pub scale: f64,
}

fn default_scale() -> f64 {
    1.0
}

/// Column-name mapping for a flow dataset CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CsvSchema {
    pub columns: Vec<ColumnSpec>,
    pub label_column: String,
}

impl CsvSchema {
    /// Schema for CSVs written by this crate: feature names are the column
    /// names, plus a `label` column.
    pub fn native() -> CsvSchema {
        CsvSchema {
            columns: FEATURE_NAMES
                .iter()
                .map(|n| ColumnSpec {
                    feature: n.to_string(),
                    column: n.to_string(),
                    scale: 1.0,
                })
                .collect(),
            label_column: "label".to_string(),
        }
    }

    pub fn from_file(path: &Path) -> Result<CsvSchema, DatasetError> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| DatasetError::UnparsableCell {
            row: 0,
            column: path.display().to_string(),
            value: e.to_string(),
        })
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.feature.clone()).collect()
    }
}

/// A labeled feature matrix with its schema and class set.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub schema: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<ClassLabel>,
    /// Distinct labels present, in [`ClassLabel::ALL`] order.
    pub classes: Vec<ClassLabel>,
}

impl LabeledDataset {
    pub fn new(
        schema: Vec<String>,
        rows: Vec<Vec<f64>>,
        labels: Vec<ClassLabel>,
    ) -> LabeledDataset {
        assert_eq!(rows.len(), labels.len(), "row count must equal label count");
        let classes = distinct_classes(&labels);
        LabeledDataset {
            schema,
            rows,
            labels,
            classes,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Collapse all attack labels into one binary problem: Normal vs DDoS
    /// (the representative attack class).
    pub fn to_binary(&self) -> LabeledDataset {
        let labels: Vec<ClassLabel> = self
            .labels
            .iter()
            .map(|l| {
                if l.is_attack() {
                    ClassLabel::DDoS
                } else {
                    ClassLabel::Normal
                }
            })
            .collect();
        LabeledDataset::new(self.schema.clone(), self.rows.clone(), labels)
    }

    /// Subset by row indices, preserving order.
    pub fn select(&self, indices: &[usize]) -> LabeledDataset {
        let rows = indices.iter().map(|&i| self.rows[i].clone()).collect();
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        LabeledDataset::new(self.schema.clone(), rows, labels)
    }
}

pub fn distinct_classes(labels: &[ClassLabel]) -> Vec<ClassLabel> {
    ClassLabel::ALL
        .iter()
        .copied()
        .filter(|c| labels.contains(c))
        .collect()
}

/// Load a flow dataset CSV under a column mapping.
///
/// Numeric cells that are empty or fail to parse as finite numbers are
/// imputed with the column mean of the remaining cells; rows whose label
/// cell is unknown produce an error naming the row.
pub fn load_flow_csv(path: &Path, schema: &CsvSchema) -> Result<LabeledDataset, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(false)
        .from_path(path)?;

    let headers = reader.headers()?.clone();
    let find = |name: &str| -> Option<usize> { headers.iter().position(|h| h.trim() == name) };

    let mut col_idx = Vec::with_capacity(schema.columns.len());
    for spec in &schema.columns {
        let idx =
            find(&spec.column).ok_or_else(|| DatasetError::MissingColumn(spec.column.clone()))?;
        col_idx.push(idx);
    }
    let label_idx = find(&schema.label_column)
        .ok_or_else(|| DatasetError::MissingColumn(schema.label_column.clone()))?;

    let mut rows: Vec<Vec<Option<f64>>> = Vec::new();
    let mut labels = Vec::new();
    for (row_no, record) in reader.records().enumerate() {
        let record = record?;
        let mut row = Vec::with_capacity(schema.columns.len());
        for (spec, &idx) in schema.columns.iter().zip(&col_idx) {
            let raw = record.get(idx).unwrap_or("");
            row.push(parse_cell(raw, spec.scale).map_err(|value| {
                DatasetError::UnparsableCell {
                    row: row_no,
                    column: spec.column.clone(),
                    value,
                }
            })?);
        }
        let raw_label = record.get(label_idx).unwrap_or("");
        let label = ClassLabel::parse(raw_label).ok_or_else(|| DatasetError::UnknownLabel {
            row: row_no,
            value: raw_label.into(),
        })?;
        rows.push(row);
        labels.push(label);
    }
    if rows.is_empty() {
        return Err(DatasetError::EmptyDataset(path.display().to_string()));
    }

    // Mean imputation per column over the cells that did parse.
    let d = schema.columns.len();
    let mut col_mean = vec![0.0f64; d];
    for j in 0..d {
        let mut sum = 0.0;
        let mut n = 0u64;
        for row in &rows {
            if let Some(v) = row[j] {
                sum += v;
                n += 1;
            }
        }
        col_mean[j] = if n > 0 { sum / n as f64 } else { 0.0 };
    }
    let rows: Vec<Vec<f64>> = rows
        .into_iter()
        .map(|row| {
            row.into_iter()
                .enumerate()
                .map(|(j, v)| v.unwrap_or(col_mean[j]))
                .collect()
        })
        .collect();

    Ok(LabeledDataset::new(schema.feature_names(), rows, labels))
}

/// Empty cell or non-finite marker => Ok(None) (imputed later). Garbage that
/// is neither numeric nor a known missing marker => Err(raw value).
fn parse_cell(raw: &str, scale: f64) -> Result<Option<f64>, String> {
    let t = raw.trim();
    if t.is_empty() || t.eq_ignore_ascii_case("nan") || t.eq_ignore_ascii_case("na") {
        return Ok(None);
    }
    if t.eq_ignore_ascii_case("infinity") || t.eq_ignore_ascii_case("inf") {
        return Ok(None);
    }
    match t.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v * scale)),
        Ok(_) => Ok(None),
        Err(_) => Err(raw.to_string()),
    }
}

/// Write a flow dataset as a native-schema CSV (features + label column).
pub fn write_flow_csv(path: &Path, ds: &LabeledDataset) -> Result<(), DatasetError> {
    let mut out = String::new();
    out.push_str(&ds.schema.join(","));
    out.push_str(",label\n");
    for (row, label) in ds.rows.iter().zip(&ds.labels) {
        for v in row {
            out.push_str(&format!("{v}"));
            out.push(',');
        }
        out.push_str(label.name());
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub const TRACE_HEADER: &str = "ts,src_ip,dst_ip,src_port,dst_port,proto,len,flags";

/// Read a packet trace CSV (`ts,src_ip,dst_ip,src_port,dst_port,proto,len,flags`).
pub fn load_trace_csv(path: &Path) -> Result<Vec<PacketRecord>, DatasetError> {
    let file = File::open(path)?;
    let mut packets = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if i == 0 {
            let header: String = line
                .split(',')
                .map(|s| s.trim())
                .collect::<Vec<_>>()
                .join(",");
            if header != TRACE_HEADER {
                return Err(DatasetError::MissingColumn(format!(
                    "trace header must be {TRACE_HEADER:?}, got {line:?}"
                )));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(|s| s.trim()).collect();
        if fields.len() != 8 {
            return Err(DatasetError::UnparsableCell {
                row: i - 1,
                column: "trace".into(),
                value: line.clone(),
            });
        }
        let bad = |col: &str, val: &str| DatasetError::UnparsableCell {
            row: i - 1,
            column: col.to_string(),
            value: val.to_string(),
        };
        let ts: f64 = fields[0].parse().map_err(|_| bad("ts", fields[0]))?;
        let src_ip: Ipv4Addr = fields[1].parse().map_err(|_| bad("src_ip", fields[1]))?;
        let dst_ip: Ipv4Addr = fields[2].parse().map_err(|_| bad("dst_ip", fields[2]))?;
        let src_port: u16 = fields[3].parse().map_err(|_| bad("src_port", fields[3]))?;
        let dst_port: u16 = fields[4].parse().map_err(|_| bad("dst_port", fields[4]))?;
        let protocol = Protocol::parse(fields[5]);
        let length: u64 = fields[6].parse().map_err(|_| bad("len", fields[6]))?;
        let tcp_flags = if fields[7].is_empty() {
            None
        } else {
            Some(
                fields[7]
                    .parse::<u8>()
                    .map_err(|_| bad("flags", fields[7]))?,
            )
        };
        packets.push(PacketRecord {
            ts,
            src_ip,
            dst_ip,
            src_port,
            dst_port,
            protocol,
            length,
            tcp_flags,
        });
    }
    Ok(packets)
}

/// Write a packet trace CSV with microsecond timestamp precision.
pub fn write_trace_csv(path: &Path, packets: &[PacketRecord]) -> Result<(), DatasetError> {
    let mut f = std::io::BufWriter::new(File::create(path)?);
    writeln!(f, "{TRACE_HEADER}")?;
    for p in packets {
        writeln!(
            f,
            "{:.6},{},{},{},{},{},{},{}",
            p.ts,
            p.src_ip,
            p.dst_ip,
            p.src_port,
            p.dst_port,
            p.protocol.name(),
            p.length,
            p.tcp_flags.map(|x| x.to_string()).unwrap_or_default()
        )?;
    }
    f.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    fn small_schema() -> CsvSchema {
        CsvSchema {
            columns: vec![
                ColumnSpec {
                    feature: "a".into(),
                    column: "Col A".into(),
                    scale: 1.0,
                },
                ColumnSpec {
                    feature: "b".into(),
                    column: "Col B".into(),
                    scale: 1.0,
                },
            ],
            label_column: "Label".into(),
        }
    }

    #[test]
    fn loads_complete_rows_verbatim() {
        let f = write_tmp("Col A,Col B,Label\n1,10,Normal\n2,20,DoS\n3,30,Probe\n");
        let ds = load_flow_csv(f.path(), &small_schema()).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.rows[0], vec![1.0, 10.0]);
        assert_eq!(ds.rows[2], vec![3.0, 30.0]);
        assert_eq!(
            ds.labels,
            vec![ClassLabel::Normal, ClassLabel::DoS, ClassLabel::Probe]
        );
    }

    #[test]
    fn imputes_missing_cell_with_column_mean() {
        let f = write_tmp("Col A,Col B,Label\n2,1,Normal\n,1,Normal\n4,1,Normal\n");
        let ds = load_flow_csv(f.path(), &small_schema()).unwrap();
        assert_eq!(ds.rows[1][0], 3.0, "mean of 2 and 4");
    }

    #[test]
    fn non_finite_cells_are_treated_as_missing() {
        let f = write_tmp("Col A,Col B,Label\nInfinity,5,Normal\n8,5,Normal\n");
        let ds = load_flow_csv(f.path(), &small_schema()).unwrap();
        assert_eq!(ds.rows[0][0], 8.0);
    }

    #[test]
    fn eight_way_label_enum_parses() {
        let f = write_tmp(
            "Col A,Col B,Label\n1,1,DoS\n1,1,DDoS\n1,1,Brute Force\n1,1,Web Attacks\n1,1,Exploits\n1,1,Probe\n1,1,Botnet\n1,1,Normal\n",
        );
        let ds = load_flow_csv(f.path(), &small_schema()).unwrap();
        assert_eq!(ds.classes.len(), 8);
    }

    #[test]
    fn missing_column_and_bad_cell_report_position() {
        let f = write_tmp("Col A,Label\n1,Normal\n");
        assert!(matches!(
            load_flow_csv(f.path(), &small_schema()),
            Err(DatasetError::MissingColumn(c)) if c == "Col B"
        ));
        let f = write_tmp("Col A,Col B,Label\n1,1,Normal\nx,1,Normal\n");
        match load_flow_csv(f.path(), &small_schema()) {
            Err(DatasetError::UnparsableCell { row, .. }) => assert_eq!(row, 1),
            other => panic!("expected UnparsableCell, got {other:?}"),
        }
    }

    #[test]
    fn native_flow_csv_round_trip() {
        let ds = LabeledDataset::new(
            CsvSchema::native().feature_names(),
            vec![vec![
                1.5, 3.0, 200.0, 4000.0, 0.02, 1.0, 60.0, 1400.0, 0.5, 1.0, 1.0, 0.0,
            ]],
            vec![ClassLabel::Probe],
        );
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("flows.csv");
        write_flow_csv(&path, &ds).unwrap();
        let back = load_flow_csv(&path, &CsvSchema::native()).unwrap();
        assert_eq!(back.rows, ds.rows);
        assert_eq!(back.labels, ds.labels);
    }

    #[test]
    fn trace_round_trip() {
        let packets = vec![PacketRecord {
            ts: 1.25,
            src_ip: "10.0.0.1".parse().unwrap(),
            dst_ip: "10.0.0.2".parse().unwrap(),
            src_port: 1234,
            dst_port: 80,
            protocol: Protocol::Tcp,
            length: 100,
            tcp_flags: Some(0x12),
        }];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_trace_csv(&path, &packets).unwrap();
        let back = load_trace_csv(&path).unwrap();
        assert_eq!(back, packets);
    }
}
