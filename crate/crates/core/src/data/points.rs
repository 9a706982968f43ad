//! Point sets as CSV (one point per row, optional non-numeric header line)
//! and the JSON provenance sidecar written next to them.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DataError, Dataset};
use crate::numkit::Matrix;

pub fn read_points_csv(path: &Path) -> Result<Matrix, DataError> {
    let display = path.display().to_string();
    let err = |line: usize, reason: String| DataError::Csv {
        path: display.clone(),
        line,
        reason,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => DataError::io(path, io),
            other => err(0, format!("{other:?}")),
        })?;
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (i, record) in reader.records().enumerate() {
        let line = i + 1;
        let record = record.map_err(|e| err(line, e.to_string()))?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        let row = match parsed {
            Ok(row) => row,
            // a non-numeric first line is a header
            Err(_) if rows == 0 && cols.is_none() => continue,
            Err(e) => return Err(err(line, format!("not a number: {e}"))),
        };
        if row.iter().any(|v| !v.is_finite()) {
            return Err(err(line, "non-finite value".into()));
        }
        match cols {
            None => cols = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(err(line, format!("{} fields, expected {c}", row.len())))
            }
            _ => {}
        }
        values.extend(row);
        rows += 1;
    }
    let cols = cols.ok_or_else(|| err(0, "no data rows".into()))?;
    Ok(Matrix::from_vec(rows, cols, values)?)
}

/// Writes rows with shortest round-trip floats; `header` may be empty.
pub fn write_points_csv(path: &Path, points: &Matrix, header: &[&str]) -> Result<(), DataError> {
    let mut out = Vec::new();
    if !header.is_empty() {
        writeln!(out, "{}", header.join(",")).expect("vec write");
    }
    for row in points.iter_rows() {
        let line: Vec<String> = row.iter().map(f64::to_string).collect();
        writeln!(out, "{}", line.join(",")).expect("vec write");
    }
    fs::write(path, out).map_err(|e| DataError::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    pub rows: usize,
    pub cols: usize,
    pub has_labels: bool,
}

/// Writes `<points path>.json` describing the dataset.
pub fn write_provenance(points_path: &Path, dataset: &Dataset) -> Result<(), DataError> {
    let record = Provenance {
        source: dataset.provenance.clone(),
        rows: dataset.len(),
        cols: dataset.dim(),
        has_labels: dataset.labels.is_some(),
    };
    let path = sidecar(points_path);
    let text = serde_json::to_string_pretty(&record).expect("plain struct");
    fs::write(&path, text).map_err(|e| DataError::io(&path, e))
}

pub fn read_provenance(points_path: &Path) -> Result<Provenance, DataError> {
    let path = sidecar(points_path);
    let text = fs::read_to_string(&path).map_err(|e| DataError::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| DataError::Csv {
        path: path.display().to_string(),
        line: e.line(),
        reason: e.to_string(),
    })
}

fn sidecar(points_path: &Path) -> std::path::PathBuf {
    let mut name = points_path.as_os_str().to_owned();
    name.push(".json");
    name.into()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::RngState;

    #[test]
    fn round_trip_with_and_without_header() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = RngState::new(2);
        let m = Matrix::from_vec(7, 3, rng.gaussian_vec(0.0, 10.0, 21).unwrap()).unwrap();
        for header in [&["a", "b", "c"][..], &[]] {
            let p = dir.path().join("pts.csv");
            write_points_csv(&p, &m, header).unwrap();
            assert_eq!(read_points_csv(&p).unwrap(), m);
        }
    }

    #[test]
    fn ragged_rows_and_garbage_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        fs::write(&p, "x,y\n1,2\n3\n").unwrap();
        assert!(matches!(read_points_csv(&p), Err(DataError::Csv { line: 3, .. })));
        fs::write(&p, "1,2\nfoo,3\n").unwrap();
        assert!(matches!(read_points_csv(&p), Err(DataError::Csv { line: 2, .. })));
        fs::write(&p, "x\n").unwrap();
        assert!(read_points_csv(&p).is_err());
    }

    #[test]
    fn provenance_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("pts.csv");
        let ds = Dataset::new(Matrix::zeros(4, 2), "gaussian(0,1) seed 3");
        write_provenance(&p, &ds).unwrap();
        let back = read_provenance(&p).unwrap();
        assert_eq!(back.rows, 4);
        assert_eq!(back.source, "gaussian(0,1) seed 3");
        assert!(dir.path().join("pts.csv.json").exists());
    }
}
