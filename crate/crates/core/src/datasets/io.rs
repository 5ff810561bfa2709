use std::path::{Path, PathBuf};

use super::{Dataset, DatasetMeta, Record};
use crate::{Error, Result};

pub const HEADER: [&str; 5] = ["theta1", "theta2", "lambda", "target", "group_id"];

/// Sidecar metadata path: `<path>.meta.json`.
pub fn meta_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse {
            line,
            message: format!("{other:?}"),
        },
    }
}

/// CSV rows plus the metadata sidecar (when present). Reals use the shortest
/// decimal that reads back to the same bits.
pub fn write_dataset(path: &Path, data: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(HEADER).map_err(csv_error)?;
    for r in &data.records {
        w.write_record([
            r.theta1.to_string(),
            r.theta2.to_string(),
            r.lambda.to_string(),
            r.target.to_string(),
            r.group_id.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    if let Some(meta) = &data.meta {
        std::fs::write(meta_path(path), serde_json::to_string_pretty(meta)?)?;
    }
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(csv_error)?;
    let header = reader.headers().map_err(csv_error)?.clone();
    if header.iter().map(str::trim).ne(HEADER) {
        return Err(Error::Schema(format!(
            "expected header `{}`, found `{}`",
            HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(csv_error)?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let real = |k: usize| -> Result<f64> {
            let field = row[k].trim();
            field.parse::<f64>().map_err(|_| Error::Parse {
                line,
                message: format!("column `{}`: invalid number `{field}`", HEADER[k]),
            })
        };
        let group_field = row[4].trim();
        records.push(Record {
            theta1: real(0)?,
            theta2: real(1)?,
            lambda: real(2)?,
            target: real(3)?,
            group_id: group_field.parse().map_err(|_| Error::Parse {
                line,
                message: format!("column `group_id`: invalid integer `{group_field}`"),
            })?,
        });
    }
    let sidecar = meta_path(path);
    let meta = if sidecar.exists() {
        let text = std::fs::read_to_string(&sidecar)?;
        Some(serde_json::from_str::<DatasetMeta>(&text).map_err(|e| {
            Error::Schema(format!("{}: {e}", sidecar.display()))
        })?)
    } else {
        None
    };
    Ok(Dataset { records, meta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{gen_ecdf_onoff, PriorBox};

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let data = gen_ecdf_onoff(7, 12, PriorBox::ONOFF, 4).unwrap();
        write_dataset(&path, &data).unwrap();
        assert!(meta_path(&path).exists());
        assert_eq!(read_dataset(&path).unwrap(), data);
    }

    #[test]
    fn bad_number_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let mut text = String::from("theta1,theta2,lambda,target,group_id\n");
        for i in 0..8 {
            let lambda = if i == 5 { "oops".to_string() } else { format!("{i}.5") };
            text.push_str(&format!("1,2,{lambda},0.5,{i}\n"));
        }
        std::fs::write(&path, text).unwrap();
        match read_dataset(&path) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 7);
                assert!(message.contains("lambda"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn header_only_is_empty() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        std::fs::write(&path, "theta1,theta2,lambda,target,group_id\n").unwrap();
        let d = read_dataset(&path).unwrap();
        assert!(d.is_empty() && d.meta.is_none());
    }

    #[test]
    fn wrong_header_is_schema_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        std::fs::write(&path, "mu,nu,lambda,Z\n1,2,3,1\n").unwrap();
        assert!(matches!(read_dataset(&path), Err(Error::Schema(_))));
    }

    #[test]
    fn ragged_row_is_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        std::fs::write(&path, "theta1,theta2,lambda,target,group_id\n1,2,3,0.5,0\n1,2\n").unwrap();
        assert!(matches!(read_dataset(&path), Err(Error::Parse { line: 3, .. })));
    }
}
