use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use crate::error::{Error, Result};
use crate::tensor::{Matrix, ParameterStore};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedArray {
    pub name: String,
    pub shape: [usize; 2],
    pub data: Vec<f64>,
}

/// Model config plus named, shape-tagged parameter arrays.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    /// Hash of the run configuration that produced the parameters.
    pub config_hash: Option<String>,
    pub epoch: usize,
    pub model: ModelConfig,
    pub params: Vec<NamedArray>,
}

impl Checkpoint {
    pub fn new(model: &ModelConfig, params: &ParameterStore, epoch: usize, config_hash: Option<String>) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            config_hash,
            epoch,
            model: model.clone(),
            params: params
                .iter()
                .map(|(name, m)| NamedArray {
                    name: name.to_string(),
                    shape: [m.rows(), m.cols()],
                    data: m.data().to_vec(),
                })
                .collect(),
        }
    }

    pub fn parameters(&self) -> Result<ParameterStore> {
        let mut store = ParameterStore::new();
        for a in &self.params {
            store.insert(a.name.clone(), Matrix::from_vec(a.shape[0], a.shape[1], a.data.clone())?)?;
        }
        store.ensure_finite("checkpoint parameters")?;
        Ok(store)
    }

    pub fn write_to<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer(writer, self)?;
        Ok(())
    }

    pub fn read_from<R: Read>(reader: R) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_reader(reader)?;
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::Config(format!(
                "unsupported checkpoint version {} (expected {CHECKPOINT_VERSION})",
                ck.version
            )));
        }
        Ok(ck)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}
