//! Binary container for the seven category networks.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! "BDCI"                      4-byte magic
//! u32 version                 currently 1
//! u32 metadata_len, bytes     UTF-8 JSON metadata
//! u32 model_count
//! per model:
//!   u8  category index (0..7)
//!   u32 layer count L (including input), u32 × L layer sizes
//!   per layer: f64 weights (out × in, row-major), f64 bias (out)
//! [u8; 32]                    SHA-256 of every preceding byte
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bdci::SegmentCategory;
use crate::error::{Error, Result};
use crate::nn::mlp::{category_dims, LogSigmaClamp, Mlp};
use crate::nn::train::{TrainConfig, TrainReport};

pub const MAGIC: &[u8; 4] = b"BDCI";
pub const FORMAT_VERSION: u32 = 1;
const CHECKSUM_LEN: usize = 32;

/// Training summary stored per category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategorySummary {
    pub category: SegmentCategory,
    pub samples: usize,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_val_nll: f64,
    pub final_train_nll: f64,
}

impl CategorySummary {
    pub fn new(category: SegmentCategory, report: &TrainReport) -> Self {
        Self {
            category,
            samples: report.samples,
            epochs_run: report.epochs_run,
            best_epoch: report.best_epoch,
            best_val_nll: report.best_val_nll,
            final_train_nll: report.final_train_nll,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleMetadata {
    pub tool_version: String,
    pub activation: String,
    pub taxonomy: String,
    pub normalization: String,
    pub seed: u64,
    pub corpus_hash: String,
    pub config: TrainConfig,
    pub categories: Vec<CategorySummary>,
}

impl BundleMetadata {
    pub fn new(seed: u64, corpus_hash: impl Into<String>, config: TrainConfig) -> Self {
        Self {
            tool_version: crate::VERSION.to_string(),
            activation: "relu".to_string(),
            taxonomy: "positional-7".to_string(),
            normalization: "whole-series-minmax".to_string(),
            seed,
            corpus_hash: corpus_hash.into(),
            config,
            categories: Vec::new(),
        }
    }

    pub fn log_sigma_clamp(&self) -> LogSigmaClamp {
        self.config.log_sigma_clamp
    }
}

/// Seven trained networks, one per [`SegmentCategory`], plus metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    models: Vec<Mlp>,
    metadata: BundleMetadata,
}

impl ModelBundle {
    /// Builds a bundle; every category must be present with the right shape.
    pub fn new(models: BTreeMap<SegmentCategory, Mlp>, metadata: BundleMetadata) -> Result<Self> {
        let mut ordered = Vec::with_capacity(7);
        for c in SegmentCategory::ALL {
            let m = models.get(&c).ok_or_else(|| Error::MissingCategory(c.to_string()))?;
            if m.dims() != category_dims(c.input_dim()).as_slice() {
                return Err(Error::MalformedBundle(format!("{c}: unexpected layer sizes {:?}", m.dims())));
            }
            if m.params().iter().any(|p| !p.is_finite()) {
                return Err(Error::MalformedBundle(format!("{c}: non-finite weight")));
            }
            ordered.push(m.clone());
        }
        Ok(Self { models: ordered, metadata })
    }

    pub fn model(&self, category: SegmentCategory) -> &Mlp {
        &self.models[category.index()]
    }

    pub fn metadata(&self) -> &BundleMetadata {
        &self.metadata
    }

    pub fn log_sigma_clamp(&self) -> LogSigmaClamp {
        self.metadata.log_sigma_clamp()
    }

    pub fn head(&self) -> crate::bdci::SegmentHead {
        self.metadata.config.head
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let map: BTreeMap<_, _> = SegmentCategory::ALL.into_iter().zip(self.models.iter().cloned()).collect();
        encode_models(&map, &self.metadata)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (models, metadata) = decode_models(bytes)?;
        Self::new(models, metadata)
    }

    /// Hex SHA-256 of the serialized bundle.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_bytes()))
    }
}

/// Serializes any subset of category models.
pub fn encode_models(models: &BTreeMap<SegmentCategory, Mlp>, metadata: &BundleMetadata) -> Vec<u8> {
    let meta = serde_json::to_vec(metadata).expect("metadata serializes");
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
    out.extend_from_slice(&meta);
    out.extend_from_slice(&(models.len() as u32).to_le_bytes());
    for (cat, m) in models {
        out.push(cat.index() as u8);
        out.extend_from_slice(&(m.dims().len() as u32).to_le_bytes());
        for &d in m.dims() {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for p in m.params() {
            out.extend_from_slice(&p.to_le_bytes());
        }
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::MalformedBundle("unexpected end of data".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

/// Parses a bundle without requiring all seven categories.
pub fn decode_models(bytes: &[u8]) -> Result<(BTreeMap<SegmentCategory, Mlp>, BundleMetadata)> {
    if bytes.len() < MAGIC.len() || &bytes[..4] != MAGIC {
        return Err(Error::BadMagic);
    }
    if bytes.len() < MAGIC.len() + 4 + CHECKSUM_LEN {
        return Err(Error::ChecksumMismatch);
    }
    let (body, stored) = bytes.split_at(bytes.len() - CHECKSUM_LEN);
    if Sha256::digest(body).as_slice() != stored {
        return Err(Error::ChecksumMismatch);
    }
    let mut r = Reader { buf: body, pos: 4 };
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::VersionUnsupported(version));
    }
    let meta_len = r.u32()? as usize;
    let metadata: BundleMetadata = serde_json::from_slice(r.take(meta_len)?)
        .map_err(|e| Error::MalformedBundle(format!("metadata: {e}")))?;
    let count = r.u32()? as usize;
    let mut models = BTreeMap::new();
    for _ in 0..count {
        let idx = r.take(1)?[0] as usize;
        let cat = SegmentCategory::from_index(idx)
            .ok_or_else(|| Error::MalformedBundle(format!("unknown category index {idx}")))?;
        let layers = r.u32()? as usize;
        if !(2..=64).contains(&layers) {
            return Err(Error::MalformedBundle(format!("implausible layer count {layers}")));
        }
        let dims = (0..layers).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        if dims.iter().any(|&d| d == 0 || d > 1 << 16) || dims[layers - 1] != 2 {
            return Err(Error::MalformedBundle(format!("bad layer sizes {dims:?}")));
        }
        let n: usize = dims.windows(2).map(|w| w[1] * w[0] + w[1]).sum();
        let params = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        if models.insert(cat, Mlp::from_params(&dims, params)?).is_some() {
            return Err(Error::MalformedBundle(format!("duplicate category {cat}")));
        }
    }
    if r.pos != body.len() {
        return Err(Error::MalformedBundle("trailing bytes".into()));
    }
    Ok((models, metadata))
}

/// Hex SHA-256 of arbitrary bytes.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
