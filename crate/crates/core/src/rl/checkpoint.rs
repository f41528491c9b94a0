use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dqn::DqnHyper;
use super::env::TrainingScenario;
use super::mlp::MlpParams;
use crate::error::{Error, Result};
use crate::io::{read_json, write_json};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub seed: u64,
    pub episodes: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<TrainingScenario>,
}

/// Serialized Q-network plus the settings that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    #[serde(flatten)]
    pub params: MlpParams,
    pub hyper: DqnHyper,
    pub training_meta: TrainingMeta,
}

pub fn save_checkpoint(path: &Path, ck: &Checkpoint) -> Result<()> {
    write_json(path, ck)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let ck: Checkpoint = read_json(path)?;
    ck.params
        .validate()
        .map_err(|e| Error::InvalidState(format!("checkpoint {}: {e}", path.display())))?;
    if !ck.params.is_finite() {
        return Err(Error::InvalidState(format!(
            "checkpoint {} has non-finite weights",
            path.display()
        )));
    }
    Ok(ck)
}
