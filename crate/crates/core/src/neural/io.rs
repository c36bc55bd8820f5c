//! Model files: `MADN`, u16 version, u32 manifest length, JSON manifest,
//! then every network's parameters as little-endian f64 in manifest order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::deeponet::{Arch, DeepOnet, DualDeepOnet, OperatorModel};
use super::mlp::{LayerSpec, Mlp};
use crate::error::{MadError, Result};

const MAGIC: &[u8; 4] = b"MADN";
const VERSION: u16 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelManifest {
    pub arch: Option<Arch>,
    pub dual: bool,
    pub nets: Vec<Vec<LayerSpec>>,
}

impl ModelManifest {
    pub fn of(model: &OperatorModel, arch: Option<Arch>) -> Self {
        ModelManifest {
            arch,
            dual: model.is_dual(),
            nets: model.nets().iter().map(|n| n.layers().to_vec()).collect(),
        }
    }
}

pub fn model_to_bytes(model: &OperatorModel, arch: Option<Arch>) -> Result<Vec<u8>> {
    let manifest = serde_json::to_vec(&ModelManifest::of(model, arch))?;
    let mut out = Vec::with_capacity(10 + manifest.len() + 8 * model.param_count());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(manifest.len() as u32).to_le_bytes());
    out.extend_from_slice(&manifest);
    for net in model.nets() {
        for p in &net.params {
            out.extend_from_slice(&p.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<(OperatorModel, ModelManifest)> {
    if bytes.len() < 10 || &bytes[..4] != MAGIC {
        return Err(MadError::Format("not a MADN model file".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(MadError::Version {
            found: version,
            expected: VERSION,
        });
    }
    let mlen = u32::from_le_bytes(bytes[6..10].try_into().expect("4 bytes")) as usize;
    let body = bytes
        .get(10..10 + mlen)
        .ok_or_else(|| MadError::Format("truncated model manifest".into()))?;
    let manifest: ModelManifest = serde_json::from_slice(body)?;
    let mut nets = manifest
        .nets
        .iter()
        .map(|l| Mlp::from_layers(l.clone()))
        .collect::<Result<Vec<_>>>()?;
    let total: usize = nets.iter().map(|n| n.param_count()).sum();
    let payload = &bytes[10 + mlen..];
    if payload.len() != 8 * total {
        return Err(MadError::Format(format!(
            "model payload is {} bytes, manifest declares {}",
            payload.len(),
            8 * total
        )));
    }
    let mut chunks = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
    for net in &mut nets {
        for p in net.params.iter_mut() {
            *p = chunks.next().expect("length checked");
        }
    }
    let expected = if manifest.dual { 4 } else { 2 };
    if nets.len() != expected {
        return Err(MadError::Format(format!("expected {expected} networks, found {}", nets.len())));
    }
    let mut it = nets.into_iter();
    let mut pair = || DeepOnet::from_parts(it.next().expect("counted"), it.next().expect("counted"));
    let model = if manifest.dual {
        OperatorModel::Dual(DualDeepOnet {
            net_g: pair()?,
            net_f: pair()?,
        })
    } else {
        OperatorModel::Single(pair()?)
    };
    Ok((model, manifest))
}

pub fn save_model(model: &OperatorModel, arch: Option<Arch>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, model_to_bytes(model, arch)?)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<(OperatorModel, ModelManifest)> {
    model_from_bytes(&fs::read(path)?)
}
