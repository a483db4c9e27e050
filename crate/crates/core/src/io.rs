//! JSON file formats. Complex numbers are `[re, im]` pairs and matrices are
//! row-major nested arrays.
//!
//! Loaders reject malformed input with the violated invariant and its magnitude.
//! Protocol files are checked for shape and local validity only; determinism is
//! reported separately so callers can tell it apart from a bad file.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::channels::KrausChannel;
use crate::error::{Error, Result};
use crate::optimize::{Measurement, OptimizationConfig, ProtocolParameterization};
use crate::protocol::{AncillaResource, ResourceProtocol, SenderBranch};
use crate::qmath::{CMatrix, DensityMatrix, C64};

pub type MatrixRecord = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_record(m: &CMatrix) -> MatrixRecord {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
        .collect()
}

/// Parses a `rows × cols` matrix; `what` names it in errors.
pub fn matrix_from_record(rec: &MatrixRecord, rows: usize, cols: usize, what: &str) -> Result<CMatrix> {
    if rec.len() != rows {
        return Err(Error::Parse(format!("{what}: expected {rows} rows, found {}", rec.len())));
    }
    if let Some((r, row)) = rec.iter().enumerate().find(|(_, row)| row.len() != cols) {
        return Err(Error::Parse(format!("{what}: row {r} has {} entries, expected {cols}", row.len())));
    }
    if rec.iter().flatten().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Parse(format!("{what}: entries must be finite")));
    }
    Ok(CMatrix::from_fn(rows, cols, |r, c| C64::new(rec[r][c][0], rec[r][c][1])))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelFile {
    pub dim: usize,
    pub kraus: Vec<MatrixRecord>,
}

impl ChannelFile {
    pub fn from_channel(ch: &KrausChannel) -> Self {
        ChannelFile {
            dim: ch.dim(),
            kraus: ch.kraus().iter().map(matrix_to_record).collect(),
        }
    }

    pub fn to_channel(&self) -> Result<KrausChannel> {
        if self.dim == 0 {
            return Err(Error::Parse("channel dim must be positive".into()));
        }
        let kraus = self
            .kraus
            .iter()
            .enumerate()
            .map(|(k, m)| matrix_from_record(m, self.dim, self.dim, &format!("kraus[{k}]")))
            .collect::<Result<Vec<_>>>()?;
        KrausChannel::new(kraus)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    pub dim: usize,
    pub rho: MatrixRecord,
}

impl StateFile {
    pub fn from_state(rho: &DensityMatrix) -> Self {
        StateFile {
            dim: rho.dim(),
            rho: matrix_to_record(rho.matrix()),
        }
    }

    pub fn to_state(&self) -> Result<DensityMatrix> {
        DensityMatrix::new(matrix_from_record(&self.rho, self.dim, self.dim, "rho")?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchRecord {
    pub projector: MatrixRecord,
    pub unitary: MatrixRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolFile {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "P")]
    pub p: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub mu: Vec<f64>,
    pub sender: Vec<BranchRecord>,
    pub receiver: Vec<MatrixRecord>,
}

impl ProtocolFile {
    pub fn from_protocol(p: &ResourceProtocol) -> Self {
        ProtocolFile {
            n: p.dim(),
            p: p.local_dim(),
            m: p.messages(),
            mu: p.resource().mu().to_vec(),
            sender: p
                .sender()
                .iter()
                .map(|s| BranchRecord {
                    projector: matrix_to_record(s.projector()),
                    unitary: matrix_to_record(s.unitary()),
                })
                .collect(),
            receiver: p.receiver().iter().map(matrix_to_record).collect(),
        }
    }

    /// Builds the protocol without checking determinism.
    pub fn to_protocol(&self) -> Result<ResourceProtocol> {
        if self.n == 0 || self.p == 0 {
            return Err(Error::Parse("N and P must be positive".into()));
        }
        if self.mu.len() != self.p {
            return Err(Error::Parse(format!("mu has {} entries, expected P = {}", self.mu.len(), self.p)));
        }
        if self.sender.len() != self.m || self.receiver.len() != self.m {
            return Err(Error::Parse(format!(
                "M = {} but found {} sender and {} receiver entries",
                self.m,
                self.sender.len(),
                self.receiver.len()
            )));
        }
        let d = self.n * self.p;
        let resource = AncillaResource::new(self.mu.clone())?;
        let sender = self
            .sender
            .iter()
            .enumerate()
            .map(|(k, b)| {
                SenderBranch::new(
                    matrix_from_record(&b.projector, d, d, &format!("sender[{k}].projector"))?,
                    matrix_from_record(&b.unitary, d, d, &format!("sender[{k}].unitary"))?,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let receiver = self
            .receiver
            .iter()
            .enumerate()
            .map(|(k, r)| matrix_from_record(r, d, d, &format!("receiver[{k}]")))
            .collect::<Result<Vec<_>>>()?;
        ResourceProtocol::assemble(self.n, resource, sender, receiver)
    }
}

/// Serde adapter storing a [`ResourceProtocol`] in the protocol file format.
pub mod protocol_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(p: &ResourceProtocol, s: S) -> std::result::Result<S::Ok, S::Error> {
        ProtocolFile::from_protocol(p).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<ResourceProtocol, D::Error> {
        ProtocolFile::deserialize(d)?
            .to_protocol()
            .map_err(serde::de::Error::custom)
    }
}

/// Optimizer settings plus the protocol family to search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExperimentConfig {
    #[serde(rename = "N", default = "two")]
    pub n: usize,
    #[serde(rename = "P", default = "two")]
    pub p: usize,
    pub measurement: Measurement,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_fixed: Option<Vec<f64>>,
    /// Channel file, relative to the configuration file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<String>,
    #[serde(flatten)]
    pub optimization: OptimizationConfig,
}

fn two() -> usize {
    2
}

impl ExperimentConfig {
    /// Teleportation parameters when `warmStart` is set and the shape allows
    /// (`P = N`, full measurement); zero generators otherwise.
    pub fn base(&self) -> Result<ProtocolParameterization> {
        let qt_shape = self.p == self.n && self.measurement == Measurement::Full;
        let base = if self.optimization.warm_start && qt_shape {
            ProtocolParameterization::teleportation(self.n)?
        } else {
            ProtocolParameterization::zeros(self.n, self.p, self.measurement)?
        };
        base.with_mu_fixed(self.mu_fixed.clone())
    }
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn load_channel(path: impl AsRef<Path>) -> Result<KrausChannel> {
    read_json::<ChannelFile>(path)?.to_channel()
}

pub fn load_state(path: impl AsRef<Path>) -> Result<DensityMatrix> {
    read_json::<StateFile>(path)?.to_state()
}

pub fn load_protocol(path: impl AsRef<Path>) -> Result<ResourceProtocol> {
    read_json::<ProtocolFile>(path)?.to_protocol()
}
