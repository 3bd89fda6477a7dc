//! Visual feature files.
//!
//! Binary layout: magic `MMTF`, one format-version byte (1), `n` and `d` as
//! little-endian u32, then n·d little-endian IEEE-754 f32 values, row-major.
//! Values are min-max rescaled into [0, 1] per store on load.

use std::fs;
use std::path::Path;

use crate::autodiff::Tensor;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"MMTF";
pub const VERSION: u8 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureStore {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl FeatureStore {
    /// Wrap raw rows and normalize them into [0, 1].
    pub fn from_rows(n: usize, d: usize, data: Vec<f64>) -> Result<FeatureStore> {
        if n == 0 {
            return Err(Error::Data("feature store must not be empty".into()));
        }
        if data.len() != n * d {
            return Err(Error::Data(format!(
                "feature store wants {n}×{d} = {} values, got {}",
                n * d,
                data.len()
            )));
        }
        let mut store = FeatureStore { n, d, data };
        store.minmax_normalize();
        Ok(store)
    }

    pub fn load(path: &Path) -> Result<FeatureStore> {
        let bytes = fs::read(path)?;
        let fail = |offset: usize, msg: String| Error::Format {
            msg,
            offset: Some(offset as u64),
        };
        if bytes.len() < 4 || &bytes[..4] != MAGIC {
            return Err(fail(0, "bad magic, expected MMTF".into()));
        }
        if bytes.len() < 5 {
            return Err(fail(4, "missing version byte".into()));
        }
        if bytes[4] != VERSION {
            return Err(fail(4, format!("unsupported version {}", bytes[4])));
        }
        if bytes.len() < 13 {
            return Err(fail(bytes.len(), "truncated header".into()));
        }
        let n = u32::from_le_bytes(bytes[5..9].try_into().unwrap()) as usize;
        let d = u32::from_le_bytes(bytes[9..13].try_into().unwrap()) as usize;
        if n == 0 {
            return Err(fail(5, "empty feature store (n = 0)".into()));
        }
        if d == 0 {
            return Err(fail(9, "zero feature dimension".into()));
        }
        let want = 13 + n * d * 4;
        if bytes.len() != want {
            return Err(fail(
                bytes.len().min(want),
                format!("payload is {} bytes, expected {}", bytes.len(), want),
            ));
        }
        let mut data = Vec::with_capacity(n * d);
        for i in 0..n * d {
            let off = 13 + i * 4;
            let v = f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
            if !v.is_finite() {
                return Err(fail(off, format!("non-finite feature value {v}")));
            }
            data.push(v as f64);
        }
        FeatureStore::from_rows(n, d, data)
    }

    /// Write raw (unnormalized) feature rows in the store format.
    pub fn save_raw(path: &Path, n: usize, d: usize, data: &[f32]) -> Result<()> {
        if data.len() != n * d {
            return Err(Error::Data(format!(
                "save_raw wants {n}×{d} values, got {}",
                data.len()
            )));
        }
        let mut bytes = Vec::with_capacity(13 + data.len() * 4);
        bytes.extend_from_slice(MAGIC);
        bytes.push(VERSION);
        bytes.extend_from_slice(&(n as u32).to_le_bytes());
        bytes.extend_from_slice(&(d as u32).to_le_bytes());
        for v in data {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        fs::write(path, bytes)?;
        Ok(())
    }

    /// Rescale all values into [0, 1]: x ↦ (x − min)/(max − min) over the
    /// whole store. Idempotent; a constant store maps to zeros.
    pub fn minmax_normalize(&mut self) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.data {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if hi <= lo {
            self.data.iter_mut().for_each(|v| *v = 0.0);
            return;
        }
        let scale = 1.0 / (hi - lo);
        for v in &mut self.data {
            *v = (*v - lo) * scale;
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    /// Assemble selected rows into a B×d tensor.
    pub fn gather(&self, indices: &[usize]) -> Result<Tensor> {
        let mut out = Vec::with_capacity(indices.len() * self.d);
        for &i in indices {
            if i >= self.n {
                return Err(Error::Data(format!(
                    "feature row {i} out of range (store has {})",
                    self.n
                )));
            }
            out.extend_from_slice(self.row(i));
        }
        Tensor::from_vec(vec![indices.len(), self.d], out)
    }
}
