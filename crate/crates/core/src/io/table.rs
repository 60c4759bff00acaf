use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::scan::record::{ModePoint, ScanAxis, ScanRecord};

/// Header of a mode-point file.
pub const MODE_POINT_COLUMNS: [&str; 2] = ["length_offset_m", "frequency_hz"];
const SCAN_COLUMNS: [&str; 2] = ["axis_value", "signal_v"];
const SYNC_COLUMN: &str = "sync_offset_s";
const AXIS_KEY: &str = "axis";
const SIDEBAND_KEY: &str = "sideband_offset_hz";

/// A numeric CSV table preceded by `#key=value` metadata lines.
///
/// Numbers are written in Rust's shortest round-trip form (`{:?}`), so reading
/// a written table and writing it again reproduces the bytes exactly.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlotTable {
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl PlotTable {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            metadata: Vec::new(),
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    /// Appends (or replaces) a metadata entry.
    pub fn set_meta(&mut self, key: impl Into<String>, value: impl ToString) {
        let key = key.into();
        let value = value.to_string();
        match self.metadata.iter_mut().find(|(k, _)| *k == key) {
            Some(entry) => entry.1 = value,
            None => self.metadata.push((key, value)),
        }
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn push_row(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::Format(format!(
                "row has {} values but the table has {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        for (k, v) in &self.metadata {
            if k.contains(['=', '\n', '\r']) || v.contains(['\n', '\r']) {
                return Err(Error::Format(format!("metadata entry `{k}` cannot be written on one line")));
            }
            writeln!(out, "#{k}={v}")?;
        }
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(&self.columns).map_err(csv_error)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format!("{v:?}"))).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        Ok(String::from_utf8(buf).expect("written as UTF-8"))
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_csv_string()?)?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut input: R) -> Result<Self> {
        let mut text = String::new();
        input
            .read_to_string(&mut text)
            .map_err(|e| Error::Format(format!("not UTF-8 text: {e}")))?;
        Self::parse(&text)
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut metadata = Vec::new();
        let mut body_start = 0;
        for line in text.split_inclusive('\n') {
            let Some(entry) = line.strip_prefix('#') else { break };
            let entry = entry.trim_end_matches(['\n', '\r']);
            let (k, v) = entry
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("metadata line `#{entry}` lacks `=`")))?;
            metadata.push((k.to_string(), v.to_string()));
            body_start += line.len();
        }
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(&text.as_bytes()[body_start..]);
        let columns: Vec<String> = reader.headers().map_err(csv_error)?.iter().map(str::to_string).collect();
        if columns.is_empty() || columns.iter().all(String::is_empty) {
            return Err(Error::Format("missing header line".into()));
        }
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record.map_err(csv_error)?;
            let row = record
                .iter()
                .map(|f| {
                    f.trim().parse::<f64>().map_err(|_| {
                        Error::Format(format!("data row {}: `{f}` is not a number", i + 1))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            if row.len() != columns.len() {
                return Err(Error::Format(format!("data row {} has {} fields, expected {}", i + 1, row.len(), columns.len())));
            }
            rows.push(row);
        }
        Ok(Self { metadata, columns, rows })
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

fn expect_columns(table: &PlotTable, expected: &[&str]) -> Result<()> {
    if table.columns.len() < expected.len() || table.columns[..expected.len()] != *expected {
        return Err(Error::Format(format!(
            "expected header `{}`, found `{}`",
            expected.join(","),
            table.columns.join(",")
        )));
    }
    Ok(())
}

pub fn read_mode_points(path: impl AsRef<Path>) -> Result<(Vec<ModePoint>, PlotTable)> {
    let table = PlotTable::read_file(path)?;
    expect_columns(&table, &MODE_POINT_COLUMNS)?;
    if table.columns.len() != 2 {
        return Err(Error::Format("mode-point files have exactly two columns".into()));
    }
    let points = table
        .rows
        .iter()
        .map(|r| ModePoint::new(r[0], r[1]))
        .collect::<Result<Vec<_>>>()?;
    Ok((points, table))
}

pub fn write_mode_points(points: &[ModePoint], metadata: &[(String, String)], path: impl AsRef<Path>) -> Result<()> {
    let mut table = PlotTable::new(MODE_POINT_COLUMNS);
    table.metadata = metadata.to_vec();
    for p in points {
        table.push_row(vec![p.length_offset, p.frequency])?;
    }
    table.write_file(path)
}

/// Table form of a scan: axis and sideband metadata first, then the record's
/// own metadata in key order.
pub fn scan_to_table(scan: &ScanRecord) -> PlotTable {
    let mut cols = SCAN_COLUMNS.to_vec();
    if scan.sync_offset.is_some() {
        cols.push(SYNC_COLUMN);
    }
    let mut table = PlotTable::new(cols);
    table.set_meta(AXIS_KEY, scan.axis);
    if let Some(df) = scan.sideband_offset {
        table.set_meta(SIDEBAND_KEY, df);
    }
    for (k, v) in &scan.metadata {
        table.set_meta(k.clone(), v);
    }
    for (&x, &y) in scan.axis_values().iter().zip(scan.signal()) {
        let mut row = vec![x, y];
        if let Some(t) = scan.sync_offset {
            row.push(t);
        }
        table.rows.push(row);
    }
    table
}

pub fn table_to_scan(table: &PlotTable) -> Result<ScanRecord> {
    expect_columns(table, &SCAN_COLUMNS)?;
    let has_sync = match &table.columns[2..] {
        [] => false,
        [c] if c == SYNC_COLUMN => true,
        _ => {
            return Err(Error::Format(format!(
                "expected header `axis_value,signal_v[,{SYNC_COLUMN}]`, found `{}`",
                table.columns.join(",")
            )))
        }
    };
    let axis: ScanAxis = table
        .meta(AXIS_KEY)
        .ok_or_else(|| Error::Format("missing `#axis=` metadata line".into()))?
        .parse()?;
    let x = table.rows.iter().map(|r| r[0]).collect();
    let y = table.rows.iter().map(|r| r[1]).collect();
    let mut scan = ScanRecord::new(axis, x, y)?;
    if let Some(v) = table.meta(SIDEBAND_KEY) {
        let df: f64 = v
            .parse()
            .map_err(|_| Error::Format(format!("sideband_offset_hz `{v}` is not a number")))?;
        scan = scan.with_sideband_offset(df)?;
    }
    if has_sync {
        let t0 = table.rows[0][2];
        if table.rows.iter().any(|r| r[2] != t0) {
            return Err(Error::Format("sync_offset_s must be constant within a sweep file".into()));
        }
        scan = scan.with_sync_offset(t0)?;
    }
    for (k, v) in &table.metadata {
        if k != AXIS_KEY && k != SIDEBAND_KEY {
            scan.metadata.insert(k.clone(), v.clone());
        }
    }
    Ok(scan)
}

pub fn read_scan(path: impl AsRef<Path>) -> Result<ScanRecord> {
    let path = path.as_ref();
    table_to_scan(&PlotTable::read_file(path)?).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn write_scan(scan: &ScanRecord, path: impl AsRef<Path>) -> Result<()> {
    scan_to_table(scan).write_file(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tables_round_trip_byte_for_byte() {
        let mut t = PlotTable::new(["a", "b"]);
        t.set_meta("seed", 42);
        t.set_meta("note", "x=y");
        t.push_row(vec![0.1, 1e-300]).unwrap();
        t.push_row(vec![471.3e12, -2.5]).unwrap();
        t.push_row(vec![f64::NAN, f64::INFINITY]).unwrap();
        let text = t.to_csv_string().unwrap();
        assert_eq!(text, "#seed=42\n#note=x=y\na,b\n0.1,1e-300\n471300000000000.0,-2.5\nNaN,inf\n");
        let back = PlotTable::parse(&text).unwrap();
        assert_eq!(back.to_csv_string().unwrap(), text);
        assert!(t.push_row(vec![1.0]).is_err());
    }

    #[test]
    fn malformed_tables() {
        assert!(PlotTable::parse("#novalue\na\n1\n").is_err());
        assert!(PlotTable::parse("a,b\n1,x\n").is_err());
        assert!(PlotTable::parse("a,b\n1\n").is_err());
    }

    #[test]
    fn scan_round_trip_keeps_sync_and_sidebands() {
        let scan = ScanRecord::new(ScanAxis::CavityLength, vec![0.0, 0.5, 1.0], vec![0.1, 2.0, 0.1])
            .unwrap()
            .with_sideband_offset(6e9)
            .unwrap()
            .with_sync_offset(0.275)
            .unwrap()
            .with_metadata("seed", 9);
        let table = scan_to_table(&scan);
        assert_eq!(table.columns, ["axis_value", "signal_v", "sync_offset_s"]);
        let text = table.to_csv_string().unwrap();
        assert!(text.starts_with("#axis=cavity_length\n#sideband_offset_hz=6000000000\n#seed=9\n"));
        let back = table_to_scan(&PlotTable::parse(&text).unwrap()).unwrap();
        assert_eq!(back, scan);
    }

    #[test]
    fn varying_sync_column_is_rejected() {
        let text = "#axis=laser_frequency\naxis_value,signal_v,sync_offset_s\n1,0,0.1\n2,1,0.2\n";
        assert!(table_to_scan(&PlotTable::parse(text).unwrap()).is_err());
        let missing_axis = "axis_value,signal_v\n1,0\n2,1\n";
        assert!(table_to_scan(&PlotTable::parse(missing_axis).unwrap()).is_err());
    }
}
