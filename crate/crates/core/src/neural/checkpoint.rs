//! Binary parameter checkpoints.
//!
//! Layout: the magic bytes `HBNN`, a little-endian `u32` format version,
//! then for every layer its weights (row-major) followed by its bias, all
//! as little-endian `f64`. Architecture and seed live in a JSON sidecar
//! next to the binary (same path, `.json` extension).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::net::{DenseNet, Layer, LayerSpec};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"HBNN";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetManifest {
    pub format: String,
    pub version: u32,
    pub layers: Vec<LayerSpec>,
    pub seed: u64,
}

pub fn sidecar_path(bin: &Path) -> PathBuf {
    bin.with_extension("json")
}

pub fn encode(net: &DenseNet) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 8 * net.param_count());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for p in net.flat_params() {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8], specs: &[LayerSpec]) -> Result<DenseNet> {
    if bytes.len() < 8 || &bytes[..4] != MAGIC {
        return Err(Error::Checkpoint("missing HBNN magic".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let body = &bytes[8..];
    let expected: usize = specs.iter().map(|s| s.inputs * s.outputs + s.outputs).sum();
    if body.len() != expected * 8 {
        return Err(Error::Checkpoint(format!(
            "expected {expected} parameters, found {} bytes",
            body.len()
        )));
    }
    let mut values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let layers = specs
        .iter()
        .map(|&spec| Layer {
            spec,
            weights: values.by_ref().take(spec.inputs * spec.outputs).collect(),
            bias: values.by_ref().take(spec.outputs).collect(),
        })
        .collect();
    DenseNet::from_layers(layers)
}

pub fn save(net: &DenseNet, seed: u64, bin: &Path) -> Result<()> {
    crate::error::write(bin, encode(net))?;
    let manifest = NetManifest {
        format: "HBNN".into(),
        version: VERSION,
        layers: net.specs(),
        seed,
    };
    crate::error::write(&sidecar_path(bin), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(())
}

pub fn load(bin: &Path) -> Result<(DenseNet, NetManifest)> {
    let manifest: NetManifest = serde_json::from_str(&crate::error::read_to_string(&sidecar_path(bin))?)?;
    let net = decode(&crate::error::read(bin)?, &manifest.layers)?;
    Ok((net, manifest))
}
