//! Binary checkpoint archive.
//!
//! ```text
//! "MMCK"            4 bytes
//! version           u32 LE
//! manifest_len      u32 LE
//! manifest          JSON, manifest_len bytes
//! manifest_sha256   32 bytes
//! tensor_count      u32 LE
//! tensor_count × {
//!     name_len u16 LE, name (UTF-8)
//!     ndim u8, dims u32 LE × ndim
//!     data f32 LE × prod(dims)
//!     crc32 u32 LE of the data bytes
//! }
//! ```

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::{Dense, Discriminator, Layers, PolicyArch, PolicyNet};
use crate::engine::GameConfig;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"MMCK";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub policy: PolicyArch,
    /// Reward signal behind each value head, in head order.
    pub value_signals: Vec<String>,
    pub disc_hidden: Option<usize>,
    pub training_config: serde_json::Value,
    pub game_config_hash: String,
    pub demo_hash: Option<String>,
    pub step: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub manifest: Manifest,
    pub policy: PolicyNet<f32>,
    pub disc: Option<Discriminator<f32>>,
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0} (expected {CHECKPOINT_VERSION})")]
    Version(u32),
    #[error("manifest hash mismatch")]
    ManifestHash,
    #[error("manifest is not valid: {0}")]
    Manifest(String),
    #[error("tensor `{name}`: {reason}")]
    Tensor { name: String, reason: String },
    #[error("tensor `{0}` missing from checkpoint")]
    Missing(String),
}

impl Checkpoint {
    /// Differences between the rules this model was trained under and `config`.
    pub fn config_warnings(&self, config: &GameConfig) -> Vec<String> {
        let h = config.hash();
        if self.manifest.game_config_hash == h {
            Vec::new()
        } else {
            vec![format!("checkpoint trained under config {} but runtime config is {h}", self.manifest.game_config_hash)]
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        let manifest = serde_json::to_vec(&self.manifest).expect("manifest serializes");
        out.extend_from_slice(&(manifest.len() as u32).to_le_bytes());
        out.extend_from_slice(&manifest);
        out.extend_from_slice(&Sha256::digest(&manifest));
        let mut tensors: Vec<(String, Vec<usize>, Vec<f32>)> = Vec::new();
        let mut push_layers = |layers: Vec<(&'static str, &Dense<f32>)>| {
            for (name, l) in layers {
                tensors.push((format!("{name}.w"), l.w.shape().to_vec(), l.w.iter().copied().collect()));
                tensors.push((format!("{name}.b"), l.b.shape().to_vec(), l.b.to_vec()));
            }
        };
        push_layers(self.policy.layers());
        if let Some(d) = &self.disc {
            push_layers(d.layers());
        }
        out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
        for (name, dims, data) in tensors {
            out.extend_from_slice(&(name.len() as u16).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.push(dims.len() as u8);
            for d in dims {
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
            let bytes: Vec<u8> = data.iter().flat_map(|v| v.to_le_bytes()).collect();
            out.extend_from_slice(&bytes);
            out.extend_from_slice(&crc32fast::hash(&bytes).to_le_bytes());
        }
        out
    }

    pub fn from_bytes(mut r: &[u8]) -> Result<Checkpoint, CheckpointError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let version = read_u32(&mut r)?;
        if version != CHECKPOINT_VERSION {
            return Err(CheckpointError::Version(version));
        }
        let mlen = read_u32(&mut r)? as usize;
        let manifest_bytes = take(&mut r, mlen)?;
        let mut digest = [0u8; 32];
        r.read_exact(&mut digest)?;
        if Sha256::digest(manifest_bytes).as_slice() != digest {
            return Err(CheckpointError::ManifestHash);
        }
        let manifest: Manifest =
            serde_json::from_slice(manifest_bytes).map_err(|e| CheckpointError::Manifest(e.to_string()))?;
        let count = read_u32(&mut r)?;
        let mut tensors: BTreeMap<String, (Vec<usize>, Vec<f32>)> = BTreeMap::new();
        for _ in 0..count {
            let nlen = read_u16(&mut r)? as usize;
            let name = String::from_utf8(take(&mut r, nlen)?.to_vec())
                .map_err(|_| CheckpointError::Manifest("tensor name is not UTF-8".into()))?;
            let terr = |reason: String| CheckpointError::Tensor { name: name.clone(), reason };
            let ndim = take(&mut r, 1).map_err(|e| terr(e.to_string()))?[0] as usize;
            let mut dims = Vec::with_capacity(ndim);
            for _ in 0..ndim {
                dims.push(read_u32(&mut r).map_err(|e| terr(e.to_string()))? as usize);
            }
            let n: usize = dims.iter().product();
            let bytes = take(&mut r, n * 4).map_err(|_| terr("truncated data".into()))?;
            let crc = read_u32(&mut r).map_err(|_| terr("truncated checksum".into()))?;
            if crc32fast::hash(bytes) != crc {
                return Err(terr("checksum mismatch".into()));
            }
            let data = bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
            tensors.insert(name, (dims, data));
        }

        let mut policy = PolicyNet::<f32>::new(manifest.policy.clone(), 0)
            .map_err(|e| CheckpointError::Manifest(e.to_string()))?;
        fill(&mut policy, &mut tensors)?;
        let disc = match manifest.disc_hidden {
            Some(h) => {
                let mut d = Discriminator::<f32>::new(super::DISC_INPUT_LEN, h, 0)
                    .map_err(|e| CheckpointError::Manifest(e.to_string()))?;
                fill(&mut d, &mut tensors)?;
                Some(d)
            }
            None => None,
        };
        if let Some(extra) = tensors.keys().next() {
            return Err(CheckpointError::Tensor { name: extra.clone(), reason: "not part of the architecture".into() });
        }
        Ok(Checkpoint { manifest, policy, disc })
    }
}

fn fill<N: Layers<f32>>(
    net: &mut N,
    tensors: &mut BTreeMap<String, (Vec<usize>, Vec<f32>)>,
) -> Result<(), CheckpointError> {
    for (name, layer) in net.layers_mut() {
        let wname = format!("{name}.w");
        let (dims, data) = tensors.remove(&wname).ok_or_else(|| CheckpointError::Missing(wname.clone()))?;
        if dims != layer.w.shape() {
            return Err(CheckpointError::Tensor { name: wname, reason: format!("shape {dims:?}, expected {:?}", layer.w.shape()) });
        }
        layer.w = Array2::from_shape_vec((dims[0], dims[1]), data).expect("shape checked");
        let bname = format!("{name}.b");
        let (dims, data) = tensors.remove(&bname).ok_or_else(|| CheckpointError::Missing(bname.clone()))?;
        if dims != layer.b.shape() {
            return Err(CheckpointError::Tensor { name: bname, reason: format!("shape {dims:?}, expected {:?}", layer.b.shape()) });
        }
        layer.b = Array1::from(data);
    }
    Ok(())
}

fn take<'a>(r: &mut &'a [u8], n: usize) -> std::io::Result<&'a [u8]> {
    if r.len() < n {
        return Err(std::io::Error::new(std::io::ErrorKind::UnexpectedEof, "checkpoint truncated"));
    }
    let (head, tail) = r.split_at(n);
    *r = tail;
    Ok(head)
}

fn read_u32(r: &mut &[u8]) -> std::io::Result<u32> {
    let b = take(r, 4)?;
    Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
}

fn read_u16(r: &mut &[u8]) -> std::io::Result<u16> {
    let b = take(r, 2)?;
    Ok(u16::from_le_bytes([b[0], b[1]]))
}

pub fn save_checkpoint(ck: &Checkpoint, path: &Path) -> Result<(), CheckpointError> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&ck.to_bytes())?;
    f.sync_all()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, CheckpointError> {
    Checkpoint::from_bytes(&std::fs::read(path)?)
}
