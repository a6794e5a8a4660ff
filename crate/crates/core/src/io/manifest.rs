//! Silo manifests: one structured text file per silo naming its id, its
//! table CSVs, and its known intra-silo matches.
//!
//! ```text
//! silo silo0
//! table t0.csv
//! table t1.csv
//! match t0.code0 <-> t1.code0
//! ```
//!
//! Table paths are relative to the manifest's directory. Matches use
//! `table.column` with the first dot as the separator, so table ids must
//! not contain dots. Render ∘ parse is the identity on canonical files.

use crate::error::Error;
use crate::io::tables;
use crate::silo::{ColumnRef, Silo};
use crate::Result;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestSpec {
    pub silo_id: String,
    pub table_paths: Vec<String>,
    /// ((table, column), (table, column)) pairs, in file order.
    pub matches: Vec<((String, String), (String, String))>,
}

fn manifest_err(path: &str, line: usize, msg: impl Into<String>) -> Error {
    Error::Manifest {
        path: path.to_string(),
        line,
        msg: msg.into(),
    }
}

fn parse_endpoint(s: &str, path: &str, line: usize) -> Result<(String, String)> {
    match s.split_once('.') {
        Some((table, column)) if !table.is_empty() && !column.is_empty() => {
            Ok((table.to_string(), column.to_string()))
        }
        _ => Err(manifest_err(
            path,
            line,
            format!("expected table.column, got {s:?}"),
        )),
    }
}

pub fn parse_manifest(text: &str, path_label: &str) -> Result<ManifestSpec> {
    let mut silo_id: Option<String> = None;
    let mut table_paths = Vec::new();
    let mut matches = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (keyword, rest) = line.split_once(' ').unwrap_or((line, ""));
        let rest = rest.trim();
        match keyword {
            "silo" => {
                if silo_id.is_some() {
                    return Err(manifest_err(path_label, line_no, "duplicate silo line"));
                }
                if rest.is_empty() {
                    return Err(manifest_err(path_label, line_no, "empty silo id"));
                }
                silo_id = Some(rest.to_string());
            }
            "table" => {
                if silo_id.is_none() {
                    return Err(manifest_err(
                        path_label,
                        line_no,
                        "table line before silo line",
                    ));
                }
                if rest.is_empty() {
                    return Err(manifest_err(path_label, line_no, "empty table path"));
                }
                table_paths.push(rest.to_string());
            }
            "match" => {
                if silo_id.is_none() {
                    return Err(manifest_err(
                        path_label,
                        line_no,
                        "match line before silo line",
                    ));
                }
                let (left, right) = rest.split_once(" <-> ").ok_or_else(|| {
                    manifest_err(path_label, line_no, "expected `a.x <-> b.y`")
                })?;
                matches.push((
                    parse_endpoint(left.trim(), path_label, line_no)?,
                    parse_endpoint(right.trim(), path_label, line_no)?,
                ));
            }
            other => {
                return Err(manifest_err(
                    path_label,
                    line_no,
                    format!("unknown keyword {other:?}"),
                ));
            }
        }
    }
    let silo_id =
        silo_id.ok_or_else(|| manifest_err(path_label, 1, "missing silo line"))?;
    if table_paths.is_empty() {
        return Err(manifest_err(path_label, 1, "manifest lists no tables"));
    }
    Ok(ManifestSpec {
        silo_id,
        table_paths,
        matches,
    })
}

pub fn render_manifest(spec: &ManifestSpec) -> String {
    let mut out = String::new();
    out.push_str(&format!("silo {}\n", spec.silo_id));
    for p in &spec.table_paths {
        out.push_str(&format!("table {p}\n"));
    }
    for ((ta, ca), (tb, cb)) in &spec.matches {
        out.push_str(&format!("match {ta}.{ca} <-> {tb}.{cb}\n"));
    }
    out
}

/// Reads a manifest and every table it names, validating that all match
/// endpoints resolve and no match pairs a column with itself.
pub fn load_silo(manifest_path: &Path) -> Result<Silo> {
    let label = manifest_path.display().to_string();
    let text = std::fs::read_to_string(manifest_path)
        .map_err(|e| Error::io(label.clone(), e))?;
    let spec = parse_manifest(&text, &label)?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));

    let mut silo = Silo::new(&spec.silo_id);
    for rel in &spec.table_paths {
        let table = tables::read_table(&base.join(rel))?;
        if silo.tables.iter().any(|t| t.table_id == table.table_id) {
            return Err(manifest_err(
                &label,
                1,
                format!("duplicate table id {:?}", table.table_id),
            ));
        }
        silo.tables.push(table);
    }
    for ((ta, ca), (tb, cb)) in &spec.matches {
        let left = ColumnRef::new(&spec.silo_id, ta, ca);
        let right = ColumnRef::new(&spec.silo_id, tb, cb);
        if silo.column(&left).is_none() || silo.column(&right).is_none() {
            return Err(Error::MissingMatchColumn { left, right });
        }
        if left == right {
            return Err(Error::SelfMatch { col: left });
        }
        silo.intra_matches.push((left, right));
    }
    Ok(silo)
}

fn check_name(kind: &str, name: &str, no_dots: bool) -> Result<()> {
    if name.is_empty()
        || name.contains('\n')
        || name.contains('\r')
        || name.contains(" <-> ")
        || (no_dots && name.contains('.'))
    {
        return Err(Error::InvalidConfig(format!(
            "{kind} {name:?} cannot be written to a manifest"
        )));
    }
    Ok(())
}

/// Writes `<table_id>.csv` per table plus `manifest.txt` into `dir`
/// (created if missing); returns the manifest path.
pub fn write_silo(dir: &Path, silo: &Silo) -> Result<PathBuf> {
    check_name("silo id", &silo.silo_id, false)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let mut spec = ManifestSpec {
        silo_id: silo.silo_id.clone(),
        table_paths: Vec::new(),
        matches: Vec::new(),
    };
    for table in &silo.tables {
        check_name("table id", &table.table_id, true)?;
        for (name, _) in &table.columns {
            check_name("column name", name, false)?;
        }
        let file = format!("{}.csv", table.table_id);
        tables::write_table(&dir.join(&file), table)?;
        spec.table_paths.push(file);
    }
    for (a, b) in &silo.intra_matches {
        spec.matches.push((
            (a.table_id.clone(), a.column_name.clone()),
            (b.table_id.clone(), b.column_name.clone()),
        ));
    }
    let manifest_path = dir.join("manifest.txt");
    std::fs::write(&manifest_path, render_manifest(&spec))
        .map_err(|e| Error::io(manifest_path.display().to_string(), e))?;
    Ok(manifest_path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fabrication;
    use crate::silo::{ColumnValues, TableData};

    const CANONICAL: &str = "silo s1\ntable t0.csv\ntable t1.csv\nmatch t0.a <-> t1.b\n";

    #[test]
    fn parse_render_is_identity_on_canonical_text() {
        let spec = parse_manifest(CANONICAL, "mem").unwrap();
        assert_eq!(render_manifest(&spec), CANONICAL);
        assert_eq!(parse_manifest(&render_manifest(&spec), "mem").unwrap(), spec);
    }

    #[test]
    fn parse_tolerates_comments_and_blanks() {
        let text = "# generated\n\nsilo s1\ntable t0.csv\n\n# matches\nmatch t0.a <-> t0.b\n";
        let spec = parse_manifest(text, "mem").unwrap();
        assert_eq!(spec.silo_id, "s1");
        assert_eq!(spec.table_paths, vec!["t0.csv"]);
        assert_eq!(spec.matches.len(), 1);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_manifest("silo s\ntable t.csv\nmatch nonsense\n", "m").unwrap_err();
        match err {
            Error::Manifest { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error {other}"),
        }
        assert!(parse_manifest("table t.csv\n", "m").is_err()); // before silo
        assert!(parse_manifest("silo s\n", "m").is_err()); // no tables
        assert!(parse_manifest("silo s\nfrobnicate x\n", "m").is_err());
    }

    fn sample_silo() -> Silo {
        let mut t0 = TableData::new("t0");
        t0.columns
            .push(("a".into(), ColumnValues::from_strs(&["1", "2"])));
        t0.columns
            .push(("b".into(), ColumnValues::new(vec![None, Some("x".into())])));
        let mut t1 = TableData::new("t1");
        t1.columns
            .push(("a".into(), ColumnValues::from_strs(&["9", "8"])));
        let mut s = Silo::new("s1");
        s.tables = vec![t0, t1];
        s.intra_matches = vec![(
            ColumnRef::new("s1", "t0", "a"),
            ColumnRef::new("s1", "t1", "a"),
        )];
        s
    }

    #[test]
    fn silo_round_trips_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let silo = sample_silo();
        let manifest = write_silo(&dir.path().join("s1"), &silo).unwrap();
        let loaded = load_silo(&manifest).unwrap();
        assert_eq!(loaded, silo);
    }

    #[test]
    fn fabricated_scenario_round_trips_byte_exactly() {
        let (silos, _) = fabrication::fabricate_scenario(&{
            let mut c = fabrication::default_scenario(3);
            c.rows_per_table = 25;
            c
        })
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let m1 = write_silo(&dir.path().join("one"), &silos[0]).unwrap();
        let loaded = load_silo(&m1).unwrap();
        assert_eq!(loaded, silos[0]);
        // writing the loaded silo again reproduces identical bytes
        let m2 = write_silo(&dir.path().join("two"), &loaded).unwrap();
        assert_eq!(
            std::fs::read(&m1).unwrap(),
            std::fs::read(&m2).unwrap()
        );
        for t in &silos[0].tables {
            let f = format!("{}.csv", t.table_id);
            assert_eq!(
                std::fs::read(dir.path().join("one").join(&f)).unwrap(),
                std::fs::read(dir.path().join("two").join(&f)).unwrap()
            );
        }
    }

    #[test]
    fn load_rejects_dangling_and_self_matches() {
        let dir = tempfile::tempdir().unwrap();
        let mut silo = sample_silo();
        silo.intra_matches.push((
            ColumnRef::new("s1", "t9", "zzz"),
            ColumnRef::new("s1", "t0", "a"),
        ));
        let manifest = write_silo(&dir.path().join("bad"), &silo).unwrap();
        assert!(matches!(
            load_silo(&manifest),
            Err(Error::MissingMatchColumn { .. })
        ));

        let mut silo = sample_silo();
        silo.intra_matches = vec![(
            ColumnRef::new("s1", "t0", "a"),
            ColumnRef::new("s1", "t0", "a"),
        )];
        let manifest = write_silo(&dir.path().join("selfm"), &silo).unwrap();
        assert!(matches!(load_silo(&manifest), Err(Error::SelfMatch { .. })));
    }

    #[test]
    fn write_rejects_unrepresentable_names() {
        let dir = tempfile::tempdir().unwrap();
        let mut silo = sample_silo();
        silo.tables[0].table_id = "has.dot".into();
        assert!(write_silo(&dir.path().join("x"), &silo).is_err());
        let mut silo = sample_silo();
        silo.tables[0].columns[0].0 = "a <-> b".into();
        assert!(write_silo(&dir.path().join("y"), &silo).is_err());
    }
}
