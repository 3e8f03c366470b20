//! `<name>.emb` payloads (row-major little-endian f32) with a JSON sidecar
//! at `<name>.emb.json`.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoder {
    Inception,
    Dino,
}

impl Encoder {
    pub const ALL: [Encoder; 2] = [Encoder::Inception, Encoder::Dino];

    pub fn tag(self) -> &'static str {
        match self {
            Encoder::Inception => "inception",
            Encoder::Dino => "dino",
        }
    }
}

impl fmt::Display for Encoder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Encoder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inception" => Ok(Encoder::Inception),
            "dino" => Ok(Encoder::Dino),
            other => Err(Error::UnknownEncoder(other.to_string())),
        }
    }
}

/// An N×D feature matrix for one image set under one encoder.
///
/// Values are held as `f64` but the on-disk payload is `f32`; anything loaded
/// from disk or produced by the fixtures is exactly representable in `f32`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    set_id: String,
    encoder: Encoder,
    rows: usize,
    dims: usize,
    data: Vec<f64>,
}

impl EmbeddingSet {
    pub fn new(set_id: impl Into<String>, encoder: Encoder, rows: usize, dims: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || dims == 0 {
            return Err(Error::invalid(format!(
                "embedding set must have at least one row and one dimension, got {rows}x{dims}"
            )));
        }
        if rows * dims != data.len() {
            return Err(Error::ShapeMismatch {
                rows,
                dims,
                expected: rows * dims,
                actual: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / dims,
                col: pos % dims,
            });
        }
        Ok(EmbeddingSet {
            set_id: set_id.into(),
            encoder,
            rows,
            dims,
            data,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(set_id: impl Into<String>, encoder: Encoder, rows: &[R]) -> Result<Self> {
        let dims = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * dims);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != dims {
                return Err(Error::invalid(format!(
                    "row {i} has {} values, expected {dims}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::new(set_id, encoder, rows.len(), dims, data)
    }

    pub fn set_id(&self) -> &str {
        &self.set_id
    }

    pub fn encoder(&self) -> Encoder {
        self.encoder
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dims..(i + 1) * self.dims]
    }

    pub fn iter_rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dims)
    }

    /// New set made of the given rows, in the given order (repeats allowed).
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(indices.len() * self.dims);
        for &i in indices {
            if i >= self.rows {
                return Err(Error::invalid(format!(
                    "row index {i} out of range for {} ({} rows)",
                    self.set_id, self.rows
                )));
            }
            data.extend_from_slice(self.row(i));
        }
        Self::new(self.set_id.clone(), self.encoder, indices.len(), self.dims, data)
    }

    /// Copy of the first `n` rows.
    pub fn prefix(&self, n: usize) -> Result<Self> {
        let idx: Vec<usize> = (0..n).collect();
        self.select(&idx)
    }

    pub fn with_set_id(mut self, set_id: impl Into<String>) -> Self {
        self.set_id = set_id.into();
        self
    }

    pub fn with_encoder(mut self, encoder: Encoder) -> Self {
        self.encoder = encoder;
        self
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sidecar {
    pub rows: usize,
    pub dims: usize,
    pub dtype: String,
    pub encoder: String,
    pub set_id: String,
}

pub const DTYPE_F32LE: &str = "f32le";

pub fn sidecar_path(payload: &Path) -> PathBuf {
    let mut s = payload.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingSet> {
    let path = path.as_ref();
    let side_path = sidecar_path(path);
    if !side_path.exists() {
        return Err(Error::MissingSidecar(side_path));
    }
    let side_text = fs::read_to_string(&side_path).map_err(|e| Error::io(&side_path, e))?;
    let side: Sidecar = serde_json::from_str(&side_text).map_err(|e| Error::Json {
        path: side_path.clone(),
        source: e,
    })?;
    if side.dtype != DTYPE_F32LE {
        return Err(Error::invalid(format!(
            "unsupported dtype {:?} in {}",
            side.dtype,
            side_path.display()
        )));
    }
    let encoder: Encoder = side.encoder.parse()?;
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let expected = side.rows * side.dims;
    if bytes.len() % 4 != 0 || bytes.len() / 4 != expected {
        return Err(Error::ShapeMismatch {
            rows: side.rows,
            dims: side.dims,
            expected,
            actual: bytes.len() / 4,
        });
    }
    let data: Vec<f64> = bytes
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
        .collect();
    EmbeddingSet::new(side.set_id, encoder, side.rows, side.dims, data)
}

/// Writes payload and sidecar. Values are narrowed to `f32`.
pub fn write_embeddings(path: impl AsRef<Path>, set: &EmbeddingSet) -> Result<()> {
    let path = path.as_ref();
    let mut bytes = Vec::with_capacity(set.data.len() * 4);
    for &v in &set.data {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    let side = Sidecar {
        rows: set.rows,
        dims: set.dims,
        dtype: DTYPE_F32LE.to_string(),
        encoder: set.encoder.tag().to_string(),
        set_id: set.set_id.clone(),
    };
    let side_path = sidecar_path(path);
    let text = serde_json::to_string_pretty(&side).map_err(|e| Error::Json {
        path: side_path.clone(),
        source: e,
    })?;
    fs::write(&side_path, text + "\n").map_err(|e| Error::io(&side_path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_by_three_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("toy.emb");
        let set = EmbeddingSet::new("toy", Encoder::Dino, 2, 3, vec![1., 2., 3., 4., 5., 6.]).unwrap();
        write_embeddings(&p, &set).unwrap();
        let back = load_embeddings(&p).unwrap();
        assert_eq!(back.row(0), &[1., 2., 3.]);
        assert_eq!(back.row(1), &[4., 5., 6.]);
        assert_eq!(back.encoder(), Encoder::Dino);
        assert_eq!(back, set);
    }

    #[test]
    fn nan_payload_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.emb");
        let mut bytes = Vec::new();
        for v in [1.0f32, f32::NAN, 3.0, 4.0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        fs::write(&p, bytes).unwrap();
        fs::write(
            sidecar_path(&p),
            r#"{"rows":2,"dims":2,"dtype":"f32le","encoder":"inception","set_id":"bad"}"#,
        )
        .unwrap();
        let err = load_embeddings(&p).unwrap_err();
        assert!(matches!(err, Error::NonFinite { row: 0, col: 1 }));
        assert!(err.to_string().contains("non-finite feature"));
    }

    #[test]
    fn missing_sidecar_and_bad_shape() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.emb");
        fs::write(&p, [0u8; 12]).unwrap();
        assert!(matches!(load_embeddings(&p), Err(Error::MissingSidecar(_))));
        fs::write(
            sidecar_path(&p),
            r#"{"rows":2,"dims":2,"dtype":"f32le","encoder":"dino","set_id":"x"}"#,
        )
        .unwrap();
        assert!(matches!(
            load_embeddings(&p),
            Err(Error::ShapeMismatch {
                expected: 4,
                actual: 3,
                ..
            })
        ));
        fs::write(
            sidecar_path(&p),
            r#"{"rows":1,"dims":3,"dtype":"f32le","encoder":"clip","set_id":"x"}"#,
        )
        .unwrap();
        assert!(matches!(load_embeddings(&p), Err(Error::UnknownEncoder(_))));
    }

    #[test]
    fn traffic_signs_reference_shape() {
        // matched-size real reference for Traffic Signs has 179 rows
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ts_real.emb");
        let (real, _) = crate::fixtures::make_fixture(3, 179, 2, 2048, 0.0).unwrap();
        write_embeddings(&p, &real).unwrap();
        let back = load_embeddings(&p).unwrap();
        assert_eq!(back.rows(), 179);
        assert_eq!(back.dims(), 2048);
    }

    #[test]
    fn select_checks_range() {
        let set = EmbeddingSet::new("s", Encoder::Inception, 2, 1, vec![1.0, 2.0]).unwrap();
        assert_eq!(set.select(&[1, 1, 0]).unwrap().data(), &[2.0, 2.0, 1.0]);
        assert!(set.select(&[2]).is_err());
    }

    proptest! {
        #[test]
        fn write_load_round_trip(rows in 1usize..6, dims in 1usize..5, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let data: Vec<f64> = (0..rows * dims)
                .map(|_| f64::from(rng.random::<f32>() * 200.0 - 100.0))
                .collect();
            let set = EmbeddingSet::new("p", Encoder::Inception, rows, dims, data).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("p.emb");
            write_embeddings(&p, &set).unwrap();
            let back = load_embeddings(&p).unwrap();
            prop_assert_eq!(back.data(), set.data());
        }
    }
}
