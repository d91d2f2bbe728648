//! Versioned binary dataset container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic        8 bytes  "CCPINNDS"
//! version      u32
//! header_len   u64
//! header       header_len bytes of UTF-8 JSON (DatasetHeader)
//! blobs        for each frequency: E_meas then E_inc_rx, each P*Q complex
//!              values stored row-major as (re: f64, im: f64)
//! ```
//!
//! The file length must match the header exactly; anything shorter or longer
//! is an integrity error.

use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::physics::{ArrayLayout, CMatrix};
use crate::scene::Phantom;
use crate::{Error, Result};

pub const DATASET_MAGIC: &[u8; 8] = b"CCPINNDS";
pub const DATASET_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    Synthetic,
    Measured,
}

/// How a synthetic dataset was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationInfo {
    /// Cells per side of the forward-solve grid.
    pub grid_n: usize,
    /// Per-axis subsamples used for area-weighted rasterization.
    pub subsamples: usize,
    pub seed: u64,
    /// `None` for noiseless data.
    pub snr_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub schema_version: u32,
    pub kind: DatasetKind,
    pub description: String,
    /// Ascending, in Hz.
    pub frequencies: Vec<f64>,
    pub layout: ArrayLayout,
    /// Half-width of the region the data is meant to be inverted on.
    pub roi_half_width: f64,
    pub generation: Option<GenerationInfo>,
    /// Ground truth used for PSNR.
    pub reference: Option<Phantom>,
}

/// Scattered data per frequency plus the incident field at the receivers.
///
/// Both matrices are `P × Q`; inactive receivers hold zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub header: DatasetHeader,
    pub e_meas: Vec<CMatrix>,
    pub e_inc_rx: Vec<CMatrix>,
}

impl Dataset {
    pub fn validate(&self) -> Result<()> {
        let h = &self.header;
        if h.schema_version != DATASET_SCHEMA {
            return Err(Error::Schema {
                expected: DATASET_SCHEMA,
                found: h.schema_version,
            });
        }
        h.layout.validate().map_err(|e| Error::InvalidDataset(e.to_string()))?;
        if h.frequencies.is_empty() || h.frequencies.iter().any(|f| !(*f > 0.0)) {
            return Err(Error::InvalidDataset("frequencies must be positive and non-empty".into()));
        }
        if h.frequencies.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidDataset("frequencies must be strictly ascending".into()));
        }
        if !(h.roi_half_width > 0.0) {
            return Err(Error::InvalidDataset("ROI half-width must be positive".into()));
        }
        let shape = (h.layout.n_tx(), h.layout.n_rx());
        if self.e_meas.len() != h.frequencies.len() || self.e_inc_rx.len() != h.frequencies.len() {
            return Err(Error::InvalidDataset("one data matrix per frequency is required".into()));
        }
        for m in self.e_meas.iter().chain(&self.e_inc_rx) {
            if m.dim() != shape {
                return Err(Error::InvalidDataset(format!(
                    "data matrix shape {:?} does not match layout {shape:?}",
                    m.dim()
                )));
            }
        }
        if let Some(r) = &h.reference {
            r.validate().map_err(|e| Error::InvalidDataset(e.to_string()))?;
        }
        Ok(())
    }

    /// Index of a frequency (Hz, relative tolerance 1e-9).
    pub fn frequency_index(&self, freq: f64) -> Option<usize> {
        self.header
            .frequencies
            .iter()
            .position(|f| (f - freq).abs() <= 1e-9 * freq.abs())
    }

    /// Sub-dataset with the given frequencies, in ascending order.
    pub fn select(&self, freqs: &[f64]) -> Result<Dataset> {
        let mut idx = freqs
            .iter()
            .map(|&f| {
                self.frequency_index(f)
                    .ok_or_else(|| Error::InvalidDataset(format!("frequency {f} Hz is not in the dataset")))
            })
            .collect::<Result<Vec<_>>>()?;
        idx.sort_unstable();
        idx.dedup();
        let mut header = self.header.clone();
        header.frequencies = idx.iter().map(|&i| self.header.frequencies[i]).collect();
        Ok(Dataset {
            header,
            e_meas: idx.iter().map(|&i| self.e_meas[i].clone()).collect(),
            e_inc_rx: idx.iter().map(|&i| self.e_inc_rx[i].clone()).collect(),
        })
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.validate()?;
        let header = serde_json::to_vec(&self.header)?;
        let n_values: usize = self.e_meas.iter().chain(&self.e_inc_rx).map(|m| m.len()).sum();
        let mut out = Vec::with_capacity(20 + header.len() + 16 * n_values);
        out.extend_from_slice(DATASET_MAGIC);
        out.extend_from_slice(&DATASET_SCHEMA.to_le_bytes());
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        for (meas, inc) in self.e_meas.iter().zip(&self.e_inc_rx) {
            for m in [meas, inc] {
                for c in m.iter() {
                    out.extend_from_slice(&c.re.to_le_bytes());
                    out.extend_from_slice(&c.im.to_le_bytes());
                }
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Dataset> {
        let mut cur = Cursor { bytes, pos: 0 };
        if cur.take(8)? != DATASET_MAGIC {
            return Err(Error::Integrity("not a dataset file (bad magic)".into()));
        }
        let version = u32::from_le_bytes(cur.take(4)?.try_into().expect("4 bytes"));
        if version != DATASET_SCHEMA {
            return Err(Error::Schema {
                expected: DATASET_SCHEMA,
                found: version,
            });
        }
        let header_len = u64::from_le_bytes(cur.take(8)?.try_into().expect("8 bytes")) as usize;
        let header: DatasetHeader = serde_json::from_slice(cur.take(header_len)?)
            .map_err(|e| Error::Integrity(format!("header is not valid JSON: {e}")))?;
        if header.schema_version != version {
            return Err(Error::Schema {
                expected: version,
                found: header.schema_version,
            });
        }
        let shape = (header.layout.n_tx(), header.layout.n_rx());
        let mut e_meas = Vec::with_capacity(header.frequencies.len());
        let mut e_inc_rx = Vec::with_capacity(header.frequencies.len());
        for _ in &header.frequencies {
            e_meas.push(cur.matrix(shape)?);
            e_inc_rx.push(cur.matrix(shape)?);
        }
        if cur.pos != bytes.len() {
            return Err(Error::Integrity(format!(
                "{} trailing bytes after the last data block",
                bytes.len() - cur.pos
            )));
        }
        let ds = Dataset {
            header,
            e_meas,
            e_inc_rx,
        };
        ds.validate()?;
        Ok(ds)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::Integrity(format!(
                "file truncated: needed {n} bytes at offset {}, {} available",
                self.pos,
                self.bytes.len() - self.pos
            ))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn matrix(&mut self, shape: (usize, usize)) -> Result<CMatrix> {
        let mut m = Array2::zeros(shape);
        for v in m.iter_mut() {
            let re = self.f64()?;
            let im = self.f64()?;
            *v = Complex64::new(re, im);
        }
        Ok(m)
    }
}

pub fn save_dataset(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, ds.to_bytes()?).map_err(|e| Error::io(path, e))
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Dataset::from_bytes(&bytes)
}
