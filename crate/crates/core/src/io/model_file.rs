//! Binary model container.
//!
//! Little-endian layout: 8-byte magic, u32 version, dims (3×u64), the
//! standardizer (u64 width + means + stds), the seven named tensors
//! (u64 count, then per tensor: length-prefixed name, u64 rows, u64
//! cols, row-major f64 data), the per-epoch loss log, and the
//! provenance record as length-prefixed JSON. Loads reject version
//! mismatches explicitly and report the byte offset of any corruption.
//! Saves go through a sibling temp file and rename, so a crashed run
//! never leaves a partial model at the target path.

use crate::error::Error;
use crate::neural::{Dims, ModelParams, TENSOR_NAMES};
use crate::profiling::Standardizer;
use crate::tensor::Matrix;
use crate::training::{Provenance, TrainedModel};
use crate::Result;
use std::path::Path;

const MAGIC: &[u8; 8] = b"SILOMTCH";
const VERSION: u32 = 1;

fn put_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(buf: &mut Vec<u8>, v: u64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_f64s(buf: &mut Vec<u8>, vs: &[f64]) {
    for v in vs {
        buf.extend_from_slice(&v.to_le_bytes());
    }
}

fn put_bytes(buf: &mut Vec<u8>, bytes: &[u8]) {
    put_u64(buf, bytes.len() as u64);
    buf.extend_from_slice(bytes);
}

/// (rows, cols) of tensor `k` for the given dims.
fn tensor_shape(dims: Dims, k: usize) -> (usize, usize) {
    match k {
        0 => (dims.d_in, dims.d_in),
        1 => (1, dims.d_in),
        2 => (dims.d_emb, 2 * dims.d_in),
        3 => (dims.d_hid, 2 * dims.d_emb),
        4 => (1, dims.d_hid),
        5 => (1, dims.d_hid),
        6 => (1, 1),
        _ => unreachable!("tensor index"),
    }
}

fn encode(model: &TrainedModel) -> Result<Vec<u8>> {
    let provenance = serde_json::to_vec(&model.provenance)
        .map_err(|e| Error::Other(format!("provenance serialization: {e}")))?;
    let p = &model.params;
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    put_u32(&mut buf, VERSION);
    put_u64(&mut buf, p.dims.d_in as u64);
    put_u64(&mut buf, p.dims.d_emb as u64);
    put_u64(&mut buf, p.dims.d_hid as u64);
    put_u64(&mut buf, p.standardizer.dim() as u64);
    put_f64s(&mut buf, p.standardizer.means());
    put_f64s(&mut buf, p.standardizer.stds());
    put_u64(&mut buf, TENSOR_NAMES.len() as u64);
    for (k, name) in TENSOR_NAMES.iter().enumerate() {
        let (rows, cols) = tensor_shape(p.dims, k);
        let data = p.view(k);
        debug_assert_eq!(rows * cols, data.len());
        put_bytes(&mut buf, name.as_bytes());
        put_u64(&mut buf, rows as u64);
        put_u64(&mut buf, cols as u64);
        put_f64s(&mut buf, data);
    }
    put_u64(&mut buf, model.training_log.len() as u64);
    put_f64s(&mut buf, &model.training_log);
    put_bytes(&mut buf, &provenance);
    Ok(buf)
}

/// Write-then-rename: the target path either keeps its old content or
/// receives the complete new file.
pub fn save_model(model: &TrainedModel, path: &Path) -> Result<()> {
    let bytes = encode(model)?;
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, &bytes).map_err(|e| Error::io(tmp.display().to_string(), e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
    path: &'a str,
}

impl<'a> Cursor<'a> {
    fn fail(&self, msg: impl Into<String>) -> Error {
        Error::ModelFormat {
            path: self.path.to_string(),
            offset: self.pos as u64,
            msg: msg.into(),
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.data.len() - self.pos < n {
            return Err(self.fail(format!(
                "needs {n} more bytes, {} left",
                self.data.len() - self.pos
            )));
        }
        let out = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn length(&mut self, what: &str) -> Result<usize> {
        let v = self.u64()?;
        // no field can be longer than the file that holds it
        if v > self.data.len() as u64 {
            return Err(self.fail(format!("{what} length {v} exceeds file size")));
        }
        Ok(v as usize)
    }

    fn f64s(&mut self, n: usize, what: &str) -> Result<Vec<f64>> {
        let bytes = n
            .checked_mul(8)
            .ok_or_else(|| self.fail(format!("{what} length overflows")))?;
        let raw = self.take(bytes)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn str(&mut self, what: &str) -> Result<String> {
        let n = self.length(what)?;
        let raw = self.take(n)?;
        String::from_utf8(raw.to_vec()).map_err(|_| self.fail(format!("{what} is not UTF-8")))
    }
}

pub fn load_model(path: &Path) -> Result<TrainedModel> {
    let label = path.display().to_string();
    let data = std::fs::read(path).map_err(|e| Error::io(label.clone(), e))?;
    let mut c = Cursor {
        data: &data,
        pos: 0,
        path: &label,
    };

    if c.take(8)? != MAGIC {
        c.pos = 0;
        return Err(c.fail("bad magic"));
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(Error::ModelVersion {
            path: label,
            found: version,
            expected: VERSION,
        });
    }
    let d_in = c.length("d_in")?;
    let d_emb = c.length("d_emb")?;
    let d_hid = c.length("d_hid")?;
    if d_in == 0 || d_emb == 0 || d_hid == 0 {
        return Err(c.fail("zero model dimension"));
    }
    let dims = Dims::new(d_in, d_emb, d_hid);

    let std_dim = c.length("standardizer width")?;
    if std_dim != d_in {
        return Err(c.fail(format!("standardizer width {std_dim} != d_in {d_in}")));
    }
    let means = c.f64s(std_dim, "standardizer means")?;
    let stds = c.f64s(std_dim, "standardizer stds")?;
    let standardizer = Standardizer::from_parts(means, stds)
        .map_err(|e| c.fail(format!("standardizer: {e}")))?;

    let n_tensors = c.length("tensor count")?;
    if n_tensors != TENSOR_NAMES.len() {
        return Err(c.fail(format!(
            "expected {} tensors, found {n_tensors}",
            TENSOR_NAMES.len()
        )));
    }
    let mut tensors: Vec<Vec<f64>> = Vec::with_capacity(TENSOR_NAMES.len());
    for (k, expected_name) in TENSOR_NAMES.iter().enumerate() {
        let name = c.str("tensor name")?;
        if name != *expected_name {
            return Err(c.fail(format!(
                "tensor {k} is named {name:?}, expected {expected_name:?}"
            )));
        }
        let rows = c.length("tensor rows")?;
        let cols = c.length("tensor cols")?;
        let (er, ec) = tensor_shape(dims, k);
        if (rows, cols) != (er, ec) {
            return Err(c.fail(format!(
                "tensor {name} has shape {rows}x{cols}, expected {er}x{ec}"
            )));
        }
        tensors.push(c.f64s(rows * cols, "tensor data")?);
    }
    let mut it = tensors.into_iter();
    let params = ModelParams {
        dims,
        pool_weight: Matrix::from_vec(d_in, d_in, it.next().unwrap()),
        pool_bias: it.next().unwrap(),
        layer_weight: Matrix::from_vec(d_emb, 2 * d_in, it.next().unwrap()),
        mlp_hidden_weight: Matrix::from_vec(d_hid, 2 * d_emb, it.next().unwrap()),
        mlp_hidden_bias: it.next().unwrap(),
        mlp_out_weight: it.next().unwrap(),
        mlp_out_bias: it.next().unwrap()[0],
        standardizer,
    };

    let log_len = c.length("loss log")?;
    let training_log = c.f64s(log_len, "loss log")?;
    let prov_raw = c.str("provenance")?;
    let provenance: Provenance = serde_json::from_str(&prov_raw)
        .map_err(|e| c.fail(format!("provenance JSON: {e}")))?;

    if c.pos != data.len() {
        return Err(c.fail(format!("{} trailing bytes", data.len() - c.pos)));
    }
    Ok(TrainedModel {
        params,
        training_log,
        provenance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::init_params;
    use crate::sampling::{SamplerConfig, Strategy};
    use crate::training::TrainConfig;

    fn toy_model(seed: u64) -> TrainedModel {
        let dims = Dims::new(6, 4, 3);
        TrainedModel {
            params: init_params(dims, seed).unwrap(),
            training_log: vec![1.5, 0.75, 0.5],
            provenance: Provenance {
                config: TrainConfig {
                    epochs: 3,
                    lr: 0.01,
                    sampling: SamplerConfig::new(Strategy::Ns2, seed),
                    incremental: false,
                    seed,
                    dims,
                },
                silo_ids: vec!["a".into(), "b".into()],
                manifest_paths: vec!["a/manifest.txt".into()],
            },
        }
    }

    #[test]
    fn round_trip_is_byte_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("m1.bin");
        let p2 = dir.path().join("m2.bin");
        let model = toy_model(7);
        save_model(&model, &p1).unwrap();
        let loaded = load_model(&p1).unwrap();
        assert_eq!(loaded.params, model.params);
        assert_eq!(loaded.training_log, model.training_log);
        assert_eq!(loaded.provenance, model.provenance);
        save_model(&loaded, &p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
        // no temp file left behind
        assert!(!dir.path().join("m1.bin.tmp").exists());
    }

    #[test]
    fn truncation_reports_offset() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.bin");
        save_model(&toy_model(1), &p).unwrap();
        let full = std::fs::read(&p).unwrap();
        for cut in [0, 7, 11, 40, full.len() - 1] {
            std::fs::write(&p, &full[..cut]).unwrap();
            match load_model(&p) {
                Err(Error::ModelFormat { offset, .. }) => {
                    assert!(offset <= cut as u64, "offset {offset} beyond cut {cut}")
                }
                other => panic!("cut at {cut}: expected format error, got {other:?}"),
            }
        }
    }

    #[test]
    fn version_mismatch_is_explicit() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.bin");
        save_model(&toy_model(1), &p).unwrap();
        let mut bytes = std::fs::read(&p).unwrap();
        bytes[8] = 9; // version u32 LE low byte
        std::fs::write(&p, &bytes).unwrap();
        assert!(matches!(
            load_model(&p),
            Err(Error::ModelVersion {
                found: 9,
                expected: VERSION,
                ..
            })
        ));
    }

    #[test]
    fn bad_magic_and_trailing_bytes_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.bin");
        save_model(&toy_model(1), &p).unwrap();
        let good = std::fs::read(&p).unwrap();

        let mut corrupt = good.clone();
        corrupt[0] = b'X';
        std::fs::write(&p, &corrupt).unwrap();
        assert!(matches!(load_model(&p), Err(Error::ModelFormat { .. })));

        let mut extended = good;
        extended.push(0);
        std::fs::write(&p, &extended).unwrap();
        assert!(matches!(load_model(&p), Err(Error::ModelFormat { .. })));
    }

    #[test]
    fn renamed_tensor_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.bin");
        save_model(&toy_model(1), &p).unwrap();
        let mut bytes = std::fs::read(&p).unwrap();
        let needle = b"pool_weight";
        let at = bytes
            .windows(needle.len())
            .position(|w| w == needle)
            .unwrap();
        bytes[at] = b'q';
        std::fs::write(&p, &bytes).unwrap();
        assert!(matches!(load_model(&p), Err(Error::ModelFormat { .. })));
    }

    #[test]
    fn save_is_atomic_against_existing_file() {
        // a failed save must not clobber the existing good model
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.bin");
        save_model(&toy_model(1), &p).unwrap();
        let before = std::fs::read(&p).unwrap();
        // saving into a directory that vanished fails cleanly
        let gone = dir.path().join("nope").join("m.bin");
        assert!(save_model(&toy_model(2), &gone).is_err());
        assert_eq!(std::fs::read(&p).unwrap(), before);
    }
}
