//! Versioned binary model files.
//!
//! Layout: magic + version, config fields, feature mask byte, n_max, then
//! each layer as row-major 64-bit little-endian floats, and finally a
//! SHA-256 digest of everything before it. The mask and n_max travel with
//! the weights so inference rebuilds the exact training-time features;
//! digits and the log are stored raw (unnormalized) by definition of the
//! format version.

use super::mlp::{Layer, Mlp};
use super::MlpConfig;
use crate::error::{Error, Result};
use crate::features::{make_features, FeatureMask};
use crate::neuralnet::Activation;
use ndarray::{Array1, Array2};
use sha2::{Digest, Sha256};
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 8] = b"GBNET\0v1";

/// A trained model plus the metadata needed to reproduce its inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub mlp: Mlp,
    pub mask: FeatureMask,
    pub n_max: u64,
}

impl ModelBundle {
    pub fn new(mlp: Mlp, mask: FeatureMask, n_max: u64) -> Result<Self> {
        mask.validate()?;
        if mlp.config().input_width != mask.width() {
            return Err(Error::IncompatibleModel(format!(
                "model takes {} inputs but mask `{}` produces {}",
                mlp.config().input_width,
                mask.name(),
                mask.width()
            )));
        }
        Ok(ModelBundle { mlp, mask, n_max })
    }

    pub fn config(&self) -> &MlpConfig {
        self.mlp.config()
    }

    /// Predict the partition count of one even number.
    pub fn predict(&self, n: u64) -> Result<f64> {
        let features = self.mask.apply(&make_features(n, self.n_max)?)?;
        self.mlp.forward(&features)
    }

    /// Batched prediction; rows follow the order of `ns`.
    pub fn predict_batch(&self, ns: &[u64]) -> Result<Vec<f64>> {
        let width = self.mask.width();
        let mut x = Array2::zeros((ns.len(), width));
        for (row, &n) in ns.iter().enumerate() {
            let features = self.mask.apply(&make_features(n, self.n_max)?)?;
            x.row_mut(row).assign(&Array1::from(features));
        }
        Ok(self.mlp.forward_batch(x.view())?.to_vec())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut payload = Vec::new();
        payload.extend_from_slice(MAGIC);
        let config = self.mlp.config();
        payload.extend_from_slice(&(config.input_width as u32).to_le_bytes());
        payload.extend_from_slice(&(config.hidden_layers as u32).to_le_bytes());
        payload.extend_from_slice(&(config.hidden_width as u32).to_le_bytes());
        payload.push(config.activation.tag());
        payload.extend_from_slice(&config.init_seed.to_le_bytes());
        payload.push(self.mask.to_byte());
        payload.extend_from_slice(&self.n_max.to_le_bytes());
        payload.extend_from_slice(&(self.mlp.layers().len() as u32).to_le_bytes());
        for layer in self.mlp.layers() {
            let (rows, cols) = layer.weights.dim();
            payload.extend_from_slice(&(rows as u32).to_le_bytes());
            payload.extend_from_slice(&(cols as u32).to_le_bytes());
            for &w in layer.weights.iter() {
                payload.extend_from_slice(&w.to_le_bytes());
            }
            for &b in layer.bias.iter() {
                payload.extend_from_slice(&b.to_le_bytes());
            }
        }
        let digest = Sha256::digest(&payload);
        let mut f = std::fs::File::create(path)?;
        f.write_all(&payload)?;
        f.write_all(&digest)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        if bytes.len() < MAGIC.len() + 32 {
            return Err(Error::ModelLoad("file too short".into()));
        }
        let (payload, digest) = bytes.split_at(bytes.len() - 32);
        if Sha256::digest(payload).as_slice() != digest {
            return Err(Error::ModelLoad("checksum mismatch".into()));
        }
        let mut cursor = Cursor { bytes: payload, pos: 0 };
        if cursor.take(MAGIC.len())? != MAGIC {
            return Err(Error::ModelLoad("bad magic or unsupported version".into()));
        }
        let input_width = cursor.u32()? as usize;
        let hidden_layers = cursor.u32()? as usize;
        let hidden_width = cursor.u32()? as usize;
        let activation = Activation::from_tag(cursor.u8()?)?;
        let init_seed = cursor.u64()?;
        let mask = FeatureMask::from_byte(cursor.u8()?)?;
        let n_max = cursor.u64()?;
        let n_layers = cursor.u32()? as usize;
        if n_layers != hidden_layers + 1 {
            return Err(Error::ModelLoad(format!(
                "{n_layers} layers stored, config implies {}",
                hidden_layers + 1
            )));
        }
        let mut layers = Vec::with_capacity(n_layers);
        for _ in 0..n_layers {
            let rows = cursor.u32()? as usize;
            let cols = cursor.u32()? as usize;
            let mut weights = Vec::with_capacity(rows * cols);
            for _ in 0..rows * cols {
                weights.push(cursor.f64()?);
            }
            let mut bias = Vec::with_capacity(rows);
            for _ in 0..rows {
                bias.push(cursor.f64()?);
            }
            layers.push(Layer {
                weights: Array2::from_shape_vec((rows, cols), weights)
                    .map_err(|e| Error::ModelLoad(e.to_string()))?,
                bias: Array1::from(bias),
            });
        }
        if cursor.pos != payload.len() {
            return Err(Error::ModelLoad("trailing bytes after layer data".into()));
        }
        let config = MlpConfig {
            input_width,
            hidden_layers,
            hidden_width,
            activation,
            init_seed,
        };
        let mlp = Mlp::from_parts(config, layers)?;
        if mask.width() != input_width {
            return Err(Error::ModelLoad(format!(
                "mask `{}` produces {} features but model takes {input_width}",
                mask.name(),
                mask.width()
            )));
        }
        Ok(ModelBundle { mlp, mask, n_max })
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        if self.pos + len > self.bytes.len() {
            return Err(Error::ModelLoad("unexpected end of file".into()));
        }
        let out = &self.bytes[self.pos..self.pos + len];
        self.pos += len;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
