//! Report artifacts: profile matrices, negative-edge audits, prediction
//! and evaluation reports, ground truth, loss logs, and run manifests.
//!
//! Floats in text reports use the shortest round-trip form except
//! prediction scores, which are fixed at 9 decimal digits.

use crate::error::Error;
use crate::federation::{EvalReport, MatchPrediction};
use crate::profiling::SiloProfiles;
use crate::sampling::Strategy;
use crate::silo::ColumnRef;
use crate::Result;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Csv {
        path: path.display().to_string(),
        source: e,
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::io(path.display().to_string(), e)
}

fn bad_line(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Manifest {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

/// One row per column: the `silo:table:column` identifier followed by
/// all 987 features in shortest round-trip form.
pub fn write_profile_matrix(path: &Path, silos: &[SiloProfiles]) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for sp in silos {
        for (r, fv) in &sp.profiles {
            let mut record = Vec::with_capacity(1 + fv.len());
            record.push(r.to_string());
            record.extend(fv.as_slice().iter().map(|v| v.to_string()));
            wtr.write_record(&record).map_err(|e| csv_err(path, e))?;
        }
    }
    wtr.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NegativeAuditRow {
    pub receiver: ColumnRef,
    pub source: ColumnRef,
    pub strategy: Strategy,
    pub seed: u64,
}

/// One negative edge per line: receiver, source, strategy, seed.
pub fn write_negative_audit(path: &Path, rows: &[NegativeAuditRow]) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for row in rows {
        wtr.write_record([
            row.receiver.to_string(),
            row.source.to_string(),
            row.strategy.to_string(),
            row.seed.to_string(),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    wtr.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

const PREDICTION_HEADER: [&str; 8] = [
    "silo_a", "table_a", "column_a", "silo_b", "table_b", "column_b", "score", "predicted",
];

pub fn write_predictions(path: &Path, preds: &[MatchPrediction]) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    wtr.write_record(PREDICTION_HEADER)
        .map_err(|e| csv_err(path, e))?;
    for p in preds {
        wtr.write_record([
            p.left.silo_id.as_str(),
            p.left.table_id.as_str(),
            p.left.column_name.as_str(),
            p.right.silo_id.as_str(),
            p.right.table_id.as_str(),
            p.right.column_name.as_str(),
            &format!("{:.9}", p.score),
            if p.predicted { "true" } else { "false" },
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    wtr.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

/// Reads a prediction report back. Scores round-trip at the report's
/// 9-digit precision; the predicted flag is exact.
pub fn read_predictions(path: &Path) -> Result<Vec<MatchPrediction>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let mut out = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2; // header is line 1
        let record = record.map_err(|e| csv_err(path, e))?;
        if record.len() != PREDICTION_HEADER.len() {
            return Err(bad_line(
                path,
                line,
                format!("expected {} fields, got {}", PREDICTION_HEADER.len(), record.len()),
            ));
        }
        let score: f64 = record[6]
            .parse()
            .map_err(|_| bad_line(path, line, format!("bad score {:?}", &record[6])))?;
        let predicted = match &record[7] {
            "true" => true,
            "false" => false,
            other => return Err(bad_line(path, line, format!("bad predicted flag {other:?}"))),
        };
        out.push(MatchPrediction {
            left: ColumnRef::new(&record[0], &record[1], &record[2]),
            right: ColumnRef::new(&record[3], &record[4], &record[5]),
            score,
            predicted,
        });
    }
    Ok(out)
}

/// One cross-silo pair per line, six fields, headerless, sorted.
pub fn write_ground_truth(
    path: &Path,
    pairs: &BTreeSet<(ColumnRef, ColumnRef)>,
) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for (a, b) in pairs {
        wtr.write_record([
            a.silo_id.as_str(),
            a.table_id.as_str(),
            a.column_name.as_str(),
            b.silo_id.as_str(),
            b.table_id.as_str(),
            b.column_name.as_str(),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    wtr.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

pub fn read_ground_truth(path: &Path) -> Result<BTreeSet<(ColumnRef, ColumnRef)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let mut out = BTreeSet::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| csv_err(path, e))?;
        if record.len() != 6 {
            return Err(bad_line(
                path,
                i + 1,
                format!("expected 6 fields, got {}", record.len()),
            ));
        }
        let a = ColumnRef::new(&record[0], &record[1], &record[2]);
        let b = ColumnRef::new(&record[3], &record[4], &record[5]);
        if a == b {
            return Err(bad_line(path, i + 1, "pair of a column with itself"));
        }
        out.insert(if a < b { (a, b) } else { (b, a) });
    }
    Ok(out)
}

/// Informational map column → domain id, sorted, headerless.
pub fn write_domains(path: &Path, domain_of: &BTreeMap<ColumnRef, usize>) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for (r, d) in domain_of {
        wtr.write_record([
            r.silo_id.as_str(),
            r.table_id.as_str(),
            r.column_name.as_str(),
            &d.to_string(),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    wtr.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

pub fn write_eval_report(path: &Path, report: &EvalReport) -> Result<()> {
    let json = serde_json::to_string_pretty(report)
        .map_err(|e| Error::Other(format!("eval report serialization: {e}")))?;
    std::fs::write(path, json + "\n").map_err(|e| io_err(path, e))
}

/// Per-epoch loss, 1-based epochs.
pub fn write_loss_csv(path: &Path, losses: &[f64]) -> Result<()> {
    let mut out = String::from("epoch,loss\n");
    for (i, l) in losses.iter().enumerate() {
        out.push_str(&format!("{},{}\n", i + 1, l));
    }
    std::fs::write(path, out).map_err(|e| io_err(path, e))
}

#[derive(Debug, Clone, Serialize)]
pub struct InputHash {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to reproduce a run: the exact config (seeds
/// included), hashes of the inputs, and the artifacts written.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub inputs: Vec<InputHash>,
    pub outputs: Vec<String>,
}

pub fn input_hashes(paths: &[std::path::PathBuf]) -> Result<Vec<InputHash>> {
    paths
        .iter()
        .map(|p| {
            Ok(InputHash {
                path: p.display().to_string(),
                sha256: super::sha256_file(p)?,
            })
        })
        .collect()
}

pub fn write_run_manifest(path: &Path, manifest: &RunManifest) -> Result<()> {
    let json = serde_json::to_string_pretty(manifest)
        .map_err(|e| Error::Other(format!("run manifest serialization: {e}")))?;
    std::fs::write(path, json + "\n").map_err(|e| io_err(path, e))
}
