//! Tabular data as CSV: RFC-4180 quoting, UTF-8, first row is the
//! header, empty cell ⇔ null. The table id is the file stem.

use crate::error::Error;
use crate::silo::{ColumnValues, TableData};
use crate::Result;
use std::path::Path;

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Csv {
        path: path.display().to_string(),
        source: e,
    }
}

pub fn table_id_of(path: &Path) -> Result<String> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .map(str::to_string)
        .ok_or_else(|| Error::Other(format!("{} has no usable file stem", path.display())))
}

pub fn read_table(path: &Path) -> Result<TableData> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let headers = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    let mut columns: Vec<(String, Vec<Option<String>>)> = Vec::with_capacity(headers.len());
    for h in headers.iter() {
        if h.is_empty() {
            return Err(Error::Other(format!(
                "{}: empty column name in header",
                path.display()
            )));
        }
        if columns.iter().any(|(name, _)| name == h) {
            return Err(Error::Other(format!(
                "{}: duplicate column name {h:?}",
                path.display()
            )));
        }
        columns.push((h.to_string(), Vec::new()));
    }
    for record in rdr.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        for (i, field) in record.iter().enumerate() {
            columns[i].1.push(if field.is_empty() {
                None
            } else {
                Some(field.to_string())
            });
        }
    }
    Ok(TableData {
        table_id: table_id_of(path)?,
        columns: columns
            .into_iter()
            .map(|(name, values)| (name, ColumnValues::new(values)))
            .collect(),
    })
}

pub fn write_table(path: &Path, table: &TableData) -> Result<()> {
    if table.columns.is_empty() {
        return Err(Error::Other(format!(
            "table {} has no columns",
            table.table_id
        )));
    }
    let n_rows = table.columns[0].1.len();
    if table.columns.iter().any(|(_, c)| c.len() != n_rows) {
        return Err(Error::Other(format!(
            "table {} is ragged",
            table.table_id
        )));
    }
    let mut wtr = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    wtr.write_record(table.columns.iter().map(|(name, _)| name.as_str()))
        .map_err(|e| csv_err(path, e))?;
    for row in 0..n_rows {
        wtr.write_record(
            table
                .columns
                .iter()
                .map(|(_, c)| c.values[row].as_deref().unwrap_or("")),
        )
        .map_err(|e| csv_err(path, e))?;
    }
    wtr.flush()
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip(table: &TableData) -> TableData {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(format!("{}.csv", table.table_id));
        write_table(&path, table).unwrap();
        read_table(&path).unwrap()
    }

    #[test]
    fn roundtrip_preserves_values_and_nulls() {
        let mut t = TableData::new("t0");
        t.columns.push((
            "plain".into(),
            ColumnValues::new(vec![Some("a".into()), None, Some("c".into())]),
        ));
        t.columns.push((
            "tricky".into(),
            ColumnValues::new(vec![
                Some("has,comma".into()),
                Some("has \"quote\"".into()),
                Some("has\nnewline".into()),
            ]),
        ));
        assert_eq!(roundtrip(&t), t);
    }

    #[test]
    fn unicode_and_whitespace_round_trip() {
        let mut t = TableData::new("u");
        t.columns.push((
            "col".into(),
            ColumnValues::new(vec![
                Some("naïve café".into()),
                Some("  padded  ".into()),
                None,
            ]),
        ));
        assert_eq!(roundtrip(&t), t);
    }

    #[test]
    fn rejects_duplicate_headers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        std::fs::write(&path, "a,a\n1,2\n").unwrap();
        assert!(read_table(&path).is_err());
    }

    #[test]
    fn rejects_ragged_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        std::fs::write(&path, "a,b\n1\n").unwrap();
        assert!(read_table(&path).is_err());
    }

    #[test]
    fn table_id_is_file_stem() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("orders.csv");
        std::fs::write(&path, "a\n1\n").unwrap();
        assert_eq!(read_table(&path).unwrap().table_id, "orders");
    }
}
